use super::{date_re, number_re, parse_date, spell_digits, split_number};

const SINO_DIGITS: [&str; 10] = ["영", "일", "이", "삼", "사", "오", "육", "칠", "팔", "구"];
const NATIVE_ONES: [&str; 10] = ["", "한", "두", "세", "네", "다섯", "여섯", "일곱", "여덟", "아홉"];
const NATIVE_TENS: [&str; 10] = ["", "열", "스물", "서른", "마흔", "쉰", "예순", "일흔", "여든", "아흔"];

/// Counters read with native numerals (hours, items, people, age, ...).
const NATIVE_COUNTERS: [&str; 12] = ["시간", "시", "개", "명", "살", "마리", "번", "권", "잔", "대", "장", "병"];

fn sino_below_10000(n: u64) -> String {
    let mut out = String::new();
    for (unit, name) in [(1000, "천"), (100, "백"), (10, "십")] {
        let d = (n / unit) % 10;
        if d > 0 {
            if d > 1 {
                out.push_str(SINO_DIGITS[d as usize]);
            }
            out.push_str(name);
        }
    }
    let d = n % 10;
    if d > 0 {
        out.push_str(SINO_DIGITS[d as usize]);
    }
    out
}

pub fn sino(n: u64) -> String {
    if n == 0 {
        return SINO_DIGITS[0].to_string();
    }
    if n >= 10_000_000_000_000_000 {
        return spell_digits(&n.to_string(), |d| SINO_DIGITS[d as usize].to_string(), "");
    }
    let mut out = String::new();
    for (unit, name) in [(1_000_000_000_000u64, "조"), (100_000_000, "억"), (10_000, "만")] {
        let chunk = (n / unit) % 10_000;
        if chunk > 0 {
            if !(chunk == 1 && name == "만") {
                out.push_str(&sino_below_10000(chunk));
            }
            out.push_str(name);
        }
    }
    out.push_str(&sino_below_10000(n % 10_000));
    out
}

/// Native numeral in attributive form (before a counter); `None` above 99.
pub fn native(n: u64) -> Option<String> {
    match n {
        1..=99 => {
            if n == 20 {
                return Some("스무".into());
            }
            Some(format!("{}{}", NATIVE_TENS[(n / 10) as usize], NATIVE_ONES[(n % 10) as usize]))
        }
        _ => None,
    }
}

fn month(m: u64) -> String {
    match m {
        6 => "유월".into(),
        10 => "시월".into(),
        m => format!("{}월", sino(m)),
    }
}

fn number_words(s: &str) -> String {
    let (int, frac, raw_int) = split_number(s);
    let mut out = match int {
        Some(n) => sino(n),
        None => spell_digits(raw_int, |d| SINO_DIGITS[d as usize].to_string(), ""),
    };
    if let Some(f) = frac {
        out.push('점');
        out.push_str(&spell_digits(f, |d| SINO_DIGITS[d as usize].to_string(), ""));
    }
    out
}

pub fn normalize(text: &str) -> String {
    let s = date_re().replace_all(text, |c: &regex::Captures| match parse_date(c) {
        Some((y, m, d)) => format!("{}년 {} {}일", sino(y), month(m), sino(d)),
        None => c[0].to_string(),
    });
    let mut out = String::with_capacity(s.len());
    let mut last = 0;
    for m in number_re().find_iter(&s) {
        out.push_str(&s[last..m.start()]);
        let after = &s[m.end()..];
        let counter_follows = NATIVE_COUNTERS.iter().any(|c| after.starts_with(c));
        let native_form = if counter_follows && !m.as_str().contains(['.', ',']) {
            m.as_str().parse().ok().and_then(native)
        } else {
            None
        };
        out.push_str(&native_form.unwrap_or_else(|| number_words(m.as_str())));
        last = m.end();
    }
    out.push_str(&s[last..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sino_korean() {
        assert_eq!(sino(10), "십");
        assert_eq!(sino(15), "십오");
        assert_eq!(sino(2023), "이천이십삼");
        assert_eq!(sino(10_000), "만");
        assert_eq!(sino(35_000), "삼만오천");
    }

    #[test]
    fn native_counters() {
        assert_eq!(normalize("12시"), "열두시");
        assert_eq!(normalize("20살"), "스무살");
        assert_eq!(normalize("3개"), "세개");
        assert_eq!(normalize("12시 30분"), "열두시 삼십분");
        assert_eq!(normalize("150명"), "백오십명");
    }

    #[test]
    fn dates() {
        assert_eq!(normalize("2023-10-18"), "이천이십삼년 시월 십팔일");
    }
}
