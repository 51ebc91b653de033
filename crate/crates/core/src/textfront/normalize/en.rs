use std::sync::OnceLock;

use regex::Regex;

use super::{date_re, number_re, parse_date, spell_digits, split_number};

const ONES: [&str; 20] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
    "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen",
];
const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];
const SCALES: [(u64, &str); 3] = [(1_000_000_000, "billion"), (1_000_000, "million"), (1_000, "thousand")];
const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september", "october", "november",
    "december",
];

/// Bundled abbreviation table (matched case-insensitively, period included).
pub const ABBREVIATIONS: [(&str, &str); 11] = [
    ("dr.", "doctor"),
    ("mr.", "mister"),
    ("mrs.", "missus"),
    ("ms.", "miss"),
    ("st.", "saint"),
    ("jr.", "junior"),
    ("sr.", "senior"),
    ("prof.", "professor"),
    ("mt.", "mount"),
    ("vs.", "versus"),
    ("etc.", "et cetera"),
];

fn below_thousand(n: u64) -> String {
    let mut parts = Vec::new();
    let (h, rest) = (n / 100, n % 100);
    if h > 0 {
        parts.push(format!("{} hundred", ONES[h as usize]));
    }
    if rest > 0 || n == 0 {
        if rest < 20 {
            parts.push(ONES[rest as usize].to_string());
        } else if rest % 10 == 0 {
            parts.push(TENS[(rest / 10) as usize].to_string());
        } else {
            parts.push(format!("{} {}", TENS[(rest / 10) as usize], ONES[(rest % 10) as usize]));
        }
    }
    parts.join(" ")
}

pub fn cardinal(n: u64) -> String {
    if n >= 1_000_000_000_000 {
        return spell_digits(&n.to_string(), |d| ONES[d as usize].to_string(), " ");
    }
    let mut rest = n;
    let mut parts = Vec::new();
    for (scale, name) in SCALES {
        if rest >= scale {
            parts.push(format!("{} {name}", below_thousand(rest / scale)));
            rest %= scale;
        }
    }
    if rest > 0 || parts.is_empty() {
        parts.push(below_thousand(rest));
    }
    parts.join(" ")
}

pub fn ordinal(n: u64) -> String {
    let words = cardinal(n);
    let (head, last) = match words.rsplit_once(' ') {
        Some((h, l)) => (format!("{h} "), l.to_string()),
        None => (String::new(), words.clone()),
    };
    let last = match last.as_str() {
        "one" => "first".to_string(),
        "two" => "second".to_string(),
        "three" => "third".to_string(),
        "five" => "fifth".to_string(),
        "eight" => "eighth".to_string(),
        "nine" => "ninth".to_string(),
        "twelve" => "twelfth".to_string(),
        w if w.ends_with('y') => format!("{}ieth", &w[..w.len() - 1]),
        w => format!("{w}th"),
    };
    format!("{head}{last}")
}

fn ordinal_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(\d+)(st|nd|rd|th)\b").unwrap())
}

fn number_words(s: &str) -> String {
    let (int, frac, raw_int) = split_number(s);
    let mut out = match int {
        Some(n) => cardinal(n),
        None => spell_digits(raw_int, |d| ONES[d as usize].to_string(), " "),
    };
    if let Some(f) = frac {
        out.push_str(" point ");
        out.push_str(&spell_digits(f, |d| ONES[d as usize].to_string(), " "));
    }
    out
}

pub fn normalize(text: &str) -> String {
    let lowered = text.to_ascii_lowercase();
    let expanded: Vec<String> = lowered
        .split(' ')
        .map(|tok| {
            ABBREVIATIONS
                .iter()
                .find(|(k, _)| *k == tok)
                .map(|(_, v)| v.to_string())
                .unwrap_or_else(|| tok.to_string())
        })
        .collect();
    let s = expanded.join(" ");
    let s = date_re().replace_all(&s, |c: &regex::Captures| match parse_date(c) {
        Some((y, m, d)) => format!("{} {} {}", MONTHS[m as usize - 1], ordinal(d), cardinal(y)),
        None => c[0].to_string(),
    });
    let s = ordinal_re().replace_all(&s, |c: &regex::Captures| match c[1].parse::<u64>() {
        Ok(n) if n < 1_000_000_000_000 => ordinal(n),
        _ => number_words(&c[1]),
    });
    number_re().replace_all(&s, |c: &regex::Captures| number_words(&c[0])).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinals() {
        assert_eq!(cardinal(0), "zero");
        assert_eq!(cardinal(21), "twenty one");
        assert_eq!(cardinal(105), "one hundred five");
        assert_eq!(cardinal(2023), "two thousand twenty three");
        assert_eq!(cardinal(1_000_000), "one million");
    }

    #[test]
    fn ordinals() {
        assert_eq!(ordinal(1), "first");
        assert_eq!(ordinal(22), "twenty second");
        assert_eq!(ordinal(40), "fortieth");
        assert_eq!(ordinal(100), "one hundredth");
        assert_eq!(normalize("the 3rd day"), "the third day");
    }

    #[test]
    fn dates_decimals_and_separators() {
        assert_eq!(normalize("2023-10-18"), "october eighteenth two thousand twenty three");
        assert_eq!(normalize("3.5 kg"), "three point five kg");
        assert_eq!(normalize("1,000 people"), "one thousand people");
    }

    #[test]
    fn abbreviations_need_the_period() {
        assert_eq!(normalize("Mr. Dr"), "mister dr");
    }
}
