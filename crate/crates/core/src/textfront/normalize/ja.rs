use super::{date_re, number_re, parse_date, spell_digits, split_number};

const DIGITS: [&str; 10] = ["ぜろ", "いち", "に", "さん", "よん", "ご", "ろく", "なな", "はち", "きゅう"];

fn hundreds(d: u64) -> &'static str {
    match d {
        1 => "ひゃく",
        3 => "さんびゃく",
        6 => "ろっぴゃく",
        8 => "はっぴゃく",
        _ => "",
    }
}

fn thousands(d: u64) -> &'static str {
    match d {
        1 => "せん",
        3 => "さんぜん",
        8 => "はっせん",
        _ => "",
    }
}

fn below_10000(n: u64) -> String {
    let mut out = String::new();
    let th = (n / 1000) % 10;
    if th > 0 {
        match thousands(th) {
            "" => {
                out.push_str(DIGITS[th as usize]);
                out.push_str("せん");
            }
            s => out.push_str(s),
        }
    }
    let h = (n / 100) % 10;
    if h > 0 {
        match hundreds(h) {
            "" => {
                out.push_str(DIGITS[h as usize]);
                out.push_str("ひゃく");
            }
            s => out.push_str(s),
        }
    }
    let t = (n / 10) % 10;
    if t > 0 {
        if t > 1 {
            out.push_str(DIGITS[t as usize]);
        }
        out.push_str("じゅう");
    }
    let d = n % 10;
    if d > 0 {
        out.push_str(DIGITS[d as usize]);
    }
    out
}

pub fn cardinal(n: u64) -> String {
    if n == 0 {
        return DIGITS[0].to_string();
    }
    if n >= 10_000_000_000_000_000 {
        return spell_digits(&n.to_string(), |d| DIGITS[d as usize].to_string(), "");
    }
    let mut out = String::new();
    for (unit, name) in [(1_000_000_000_000u64, "ちょう"), (100_000_000, "おく"), (10_000, "まん")] {
        let chunk = (n / unit) % 10_000;
        if chunk > 0 {
            out.push_str(&below_10000(chunk));
            out.push_str(name);
        }
    }
    out.push_str(&below_10000(n % 10_000));
    out
}

fn hour(n: u64) -> String {
    match n {
        4 => "よじ".into(),
        7 => "しちじ".into(),
        9 => "くじ".into(),
        n => format!("{}じ", cardinal(n)),
    }
}

fn month(m: u64) -> String {
    match m {
        4 => "しがつ".into(),
        7 => "しちがつ".into(),
        9 => "くがつ".into(),
        m => format!("{}がつ", cardinal(m)),
    }
}

fn day(d: u64) -> String {
    const SPECIAL: [&str; 11] = [
        "", "ついたち", "ふつか", "みっか", "よっか", "いつか", "むいか", "なのか", "ようか", "ここのか", "とおか",
    ];
    match d {
        1..=10 => SPECIAL[d as usize].into(),
        14 => "じゅうよっか".into(),
        20 => "はつか".into(),
        24 => "にじゅうよっか".into(),
        d => format!("{}にち", cardinal(d)),
    }
}

fn number_words(s: &str) -> String {
    let (int, frac, raw_int) = split_number(s);
    let mut out = match int {
        Some(n) => cardinal(n),
        None => spell_digits(raw_int, |d| DIGITS[d as usize].to_string(), ""),
    };
    if let Some(f) = frac {
        out.push_str("てん");
        out.push_str(&spell_digits(f, |d| DIGITS[d as usize].to_string(), ""));
    }
    out
}

pub fn normalize(text: &str) -> String {
    let s = date_re().replace_all(text, |c: &regex::Captures| match parse_date(c) {
        Some((y, m, d)) => format!("{}ねん{}{}", cardinal(y), month(m), day(d)),
        None => c[0].to_string(),
    });
    let mut out = String::with_capacity(s.len());
    let mut last = 0;
    for m in number_re().find_iter(&s) {
        out.push_str(&s[last..m.start()]);
        let after = &s[m.end()..];
        let plain = !m.as_str().contains(['.', ',']);
        let value: Option<u64> = if plain { m.as_str().parse().ok() } else { None };
        match value {
            Some(n) if after.starts_with('時') => {
                out.push_str(&hour(n));
                last = m.end() + '時'.len_utf8();
                continue;
            }
            _ => out.push_str(&number_words(m.as_str())),
        }
        last = m.end();
    }
    out.push_str(&s[last..]);
    out
}
