use super::{date_re, number_re, parse_date, spell_digits, split_number};

const DIGITS: [char; 10] = ['零', '一', '二', '三', '四', '五', '六', '七', '八', '九'];

fn below_10000(n: u64, leading: bool) -> String {
    let mut out = String::new();
    let mut zero_pending = false;
    let mut started = false;
    for (unit, name) in [(1000, Some('千')), (100, Some('百')), (10, Some('十')), (1, None)] {
        let d = (n / unit) % 10;
        if d == 0 {
            zero_pending = started;
            continue;
        }
        if zero_pending {
            out.push('零');
            zero_pending = false;
        }
        let is_first = !started && leading;
        match (d, name) {
            // 十二 rather than 一十二 at the start of a number
            (1, Some('十')) if is_first => {}
            (2, Some('千')) if is_first => out.push('两'),
            _ => out.push(DIGITS[d as usize]),
        }
        if let Some(c) = name {
            out.push(c);
        }
        started = true;
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
    let mut started = false;
    for (unit, name) in [(1_000_000_000_000u64, "万亿"), (100_000_000, "亿"), (10_000, "万")] {
        let chunk = (n / unit) % 10_000;
        if chunk > 0 {
            if started && chunk < 1000 {
                out.push('零');
            }
            out.push_str(&below_10000(chunk, !started));
            out.push_str(name);
            started = true;
        }
    }
    let rest = n % 10_000;
    if rest > 0 {
        if started && rest < 1000 {
            out.push('零');
        }
        out.push_str(&below_10000(rest, !started));
    }
    out
}

fn number_words(s: &str) -> String {
    let (int, frac, raw_int) = split_number(s);
    let mut out = match int {
        Some(n) => cardinal(n),
        None => spell_digits(raw_int, |d| DIGITS[d as usize].to_string(), ""),
    };
    if let Some(f) = frac {
        out.push('点');
        out.push_str(&spell_digits(f, |d| DIGITS[d as usize].to_string(), ""));
    }
    out
}

pub fn normalize(text: &str) -> String {
    let s = date_re().replace_all(text, |c: &regex::Captures| match parse_date(c) {
        Some((y, m, d)) => format!(
            "{}年{}月{}日",
            spell_digits(&y.to_string(), |d| DIGITS[d as usize].to_string(), ""),
            cardinal(m),
            cardinal(d)
        ),
        None => c[0].to_string(),
    });
    let mut out = String::with_capacity(s.len());
    let mut last = 0;
    for m in number_re().find_iter(&s) {
        out.push_str(&s[last..m.start()]);
        if m.as_str() == "2" && s[m.end()..].starts_with('个') {
            out.push('两');
        } else {
            out.push_str(&number_words(m.as_str()));
        }
        last = m.end();
    }
    out.push_str(&s[last..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinals() {
        assert_eq!(cardinal(10), "十");
        assert_eq!(cardinal(12), "十二");
        assert_eq!(cardinal(105), "一百零五");
        assert_eq!(cardinal(2000), "两千");
        assert_eq!(cardinal(2023), "两千零二十三");
        assert_eq!(cardinal(10_010), "一万零一十");
        assert_eq!(cardinal(1_200_000), "一百二十万");
    }

    #[test]
    fn dates_and_measure_words() {
        assert_eq!(normalize("2023-10-18"), "二零二三年十月十八日");
        assert_eq!(normalize("2个人"), "两个人");
        assert_eq!(normalize("3.14"), "三点一四");
    }
}
