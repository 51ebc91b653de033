//! Arithmetic decomposition of precomposed Hangul syllables into jamo.

const SYLLABLE_BASE: u32 = 0xAC00;
const SYLLABLE_COUNT: u32 = 11_172;
const VOWEL_COUNT: u32 = 21;
const TAIL_COUNT: u32 = 28;

/// Leading consonants in Unicode order, as compatibility jamo.
pub const LEADS: [char; 19] = [
    'ㄱ', 'ㄲ', 'ㄴ', 'ㄷ', 'ㄸ', 'ㄹ', 'ㅁ', 'ㅂ', 'ㅃ', 'ㅅ', 'ㅆ', 'ㅇ', 'ㅈ', 'ㅉ', 'ㅊ', 'ㅋ', 'ㅌ', 'ㅍ', 'ㅎ',
];

pub const VOWELS: [char; 21] = [
    'ㅏ', 'ㅐ', 'ㅑ', 'ㅒ', 'ㅓ', 'ㅔ', 'ㅕ', 'ㅖ', 'ㅗ', 'ㅘ', 'ㅙ', 'ㅚ', 'ㅛ', 'ㅜ', 'ㅝ', 'ㅞ', 'ㅟ', 'ㅠ', 'ㅡ', 'ㅢ', 'ㅣ',
];

/// Trailing consonants; index 0 means "no tail".
pub const TAILS: [Option<char>; 28] = [
    None,
    Some('ㄱ'),
    Some('ㄲ'),
    Some('ㄳ'),
    Some('ㄴ'),
    Some('ㄵ'),
    Some('ㄶ'),
    Some('ㄷ'),
    Some('ㄹ'),
    Some('ㄺ'),
    Some('ㄻ'),
    Some('ㄼ'),
    Some('ㄽ'),
    Some('ㄾ'),
    Some('ㄿ'),
    Some('ㅀ'),
    Some('ㅁ'),
    Some('ㅂ'),
    Some('ㅄ'),
    Some('ㅅ'),
    Some('ㅆ'),
    Some('ㅇ'),
    Some('ㅈ'),
    Some('ㅊ'),
    Some('ㅋ'),
    Some('ㅌ'),
    Some('ㅍ'),
    Some('ㅎ'),
];

/// Splits a precomposed syllable into (lead, vowel, optional tail).
pub fn decompose(c: char) -> Option<(char, char, Option<char>)> {
    let index = (c as u32).checked_sub(SYLLABLE_BASE)?;
    if index >= SYLLABLE_COUNT {
        return None;
    }
    let lead = index / (VOWEL_COUNT * TAIL_COUNT);
    let vowel = (index % (VOWEL_COUNT * TAIL_COUNT)) / TAIL_COUNT;
    let tail = index % TAIL_COUNT;
    Some((LEADS[lead as usize], VOWELS[vowel as usize], TAILS[tail as usize]))
}

/// Inverse of [`decompose`].
pub fn compose(lead: char, vowel: char, tail: Option<char>) -> Option<char> {
    let l = LEADS.iter().position(|&x| x == lead)? as u32;
    let v = VOWELS.iter().position(|&x| x == vowel)? as u32;
    let t = TAILS.iter().position(|&x| x == tail)? as u32;
    char::from_u32(SYLLABLE_BASE + (l * VOWEL_COUNT + v) * TAIL_COUNT + t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn han() {
        assert_eq!(decompose('한'), Some(('ㅎ', 'ㅏ', Some('ㄴ'))));
        assert_eq!(decompose('가'), Some(('ㄱ', 'ㅏ', None)));
        assert_eq!(decompose('힣'), Some(('ㅎ', 'ㅣ', Some('ㅎ'))));
        assert_eq!(decompose('a'), None);
    }

    #[test]
    fn compose_inverts_decompose() {
        for code in SYLLABLE_BASE..SYLLABLE_BASE + SYLLABLE_COUNT {
            let c = char::from_u32(code).unwrap();
            let (l, v, t) = decompose(c).unwrap();
            assert_eq!(compose(l, v, t), Some(c));
        }
    }
}
