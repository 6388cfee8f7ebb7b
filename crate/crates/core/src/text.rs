//! The single tokenizer and number format shared by every text operation.
//!
//! Tokenization: Unicode-lowercase, split on whitespace, and emit every
//! punctuation or symbol character as its own token. Numbers stay whole:
//! a `.` or `,` between two digits does not split, and a `-` that starts a
//! word and is followed by a digit is a sign. Joining tokens with single
//! spaces and re-tokenizing gives the same tokens back.

/// Canonical decimal rendering of a finite number: the shortest digits that
/// parse back to the same `f64`, without exponent or thousands separators.
pub fn format_number(value: f64) -> String {
    if value == 0.0 {
        // drop the sign of negative zero
        return "0".to_string();
    }
    format!("{value}")
}

/// True when `text` is a plain decimal: optional `-`, digits, optional
/// fractional part.
pub fn is_decimal(text: &str) -> bool {
    let body = text.strip_prefix('-').unwrap_or(text);
    let mut parts = body.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    match frac {
        None => digits(int),
        Some(f) => digits(int) && digits(f),
    }
}

/// Parse a decimal, accepting thousands separators of the form `12,345`.
pub fn parse_number(text: &str) -> Option<f64> {
    if is_decimal(text) {
        return text.parse().ok();
    }
    if !text.contains(',') {
        return None;
    }
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", text),
    };
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let groups: Vec<&str> = int.split(',').collect();
    let first_ok = !groups[0].is_empty() && groups[0].len() <= 3;
    let rest_ok = groups[1..].iter().all(|g| g.len() == 3);
    if !first_ok || !rest_ok {
        return None;
    }
    let mut joined = format!("{sign}{}", groups.concat());
    if let Some(f) = frac {
        joined.push('.');
        joined.push_str(f);
    }
    if is_decimal(&joined) {
        joined.parse().ok()
    } else {
        None
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let chars: Vec<char> = lowered.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let flush = |current: &mut String, tokens: &mut Vec<String>| {
        if !current.is_empty() {
            tokens.push(std::mem::take(current));
        }
    };
    for (i, &c) in chars.iter().enumerate() {
        let prev = if i > 0 { Some(chars[i - 1]) } else { None };
        let next = chars.get(i + 1).copied();
        let digit = |c: Option<char>| c.is_some_and(|c| c.is_ascii_digit());
        let extends_number = |c: char| {
            (c == '.' || c == ',')
                && digit(next)
                && current.chars().last().is_some_and(|l| l.is_ascii_digit())
                && is_number_word(&current)
        };
        let starts_negative =
            |c: char| c == '-' && current.is_empty() && digit(next) && prev.is_none_or(char::is_whitespace);
        if c.is_whitespace() {
            flush(&mut current, &mut tokens);
        } else if c.is_alphanumeric() || extends_number(c) || starts_negative(c) {
            current.push(c);
        } else {
            flush(&mut current, &mut tokens);
            tokens.push(c.to_string());
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

// A word that is still a number so far, so separators may extend it.
fn is_number_word(word: &str) -> bool {
    let body = word.strip_prefix('-').unwrap_or(word);
    !body.is_empty() && body.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',')
}

/// Whether `needle` occurs as a contiguous run inside `haystack`.
pub fn contains_subsequence(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Split prose into trimmed sentences. A sentence ends at `.`, `!` or `?`
/// followed by whitespace or end of text.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
            let s = current.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            current.clear();
        }
    }
    let s = current.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn sentence_with_period() {
        assert_eq!(toks("Summarize the chart."), ["summarize", "the", "chart", "."]);
    }

    #[test]
    fn whitespace_collapses() {
        assert_eq!(toks("A  B"), ["a", "b"]);
        assert!(toks("   ").is_empty());
    }

    #[test]
    fn numbers_stay_whole() {
        assert_eq!(
            toks("rose to 24.1% in 2018."),
            ["rose", "to", "24.1", "%", "in", "2018", "."]
        );
        assert_eq!(toks("59,801 students"), ["59,801", "students"]);
        assert_eq!(toks("1995, 2000"), ["1995", ",", "2000"]);
        assert_eq!(toks("from -3.5 to x-3"), ["from", "-3.5", "to", "x", "-", "3"]);
        assert_eq!(toks("x-axis"), ["x", "-", "axis"]);
    }

    #[test]
    fn unicode_lowercase_and_symbols() {
        assert_eq!(toks("14.5 °C Ärger"), ["14.5", "°", "c", "ärger"]);
    }

    #[test]
    fn canonical_numbers() {
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(2.5), "2.5");
        assert_eq!(format_number(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(1e21), "1000000000000000000000");
        assert_eq!(format_number(-12.75), "-12.75");
    }

    #[test]
    fn decimal_recognition() {
        for ok in ["0", "12", "-3", "2.07", "-0.5"] {
            assert!(is_decimal(ok), "{ok}");
        }
        for bad in ["", "-", "1.", ".5", "1e5", "abc", "1,000", "--1"] {
            assert!(!is_decimal(bad), "{bad}");
        }
        assert_eq!(parse_number("59,801"), Some(59801.0));
        assert_eq!(parse_number("1,234.5"), Some(1234.5));
        assert_eq!(parse_number("12,34"), None);
    }

    #[test]
    fn sentences() {
        assert_eq!(
            split_sentences("This is a bar chart. It rose to 2.5 in 2020.  Done"),
            ["This is a bar chart.", "It rose to 2.5 in 2020.", "Done"]
        );
    }

    proptest! {
        #[test]
        fn format_round_trips(v in proptest::num::f64::NORMAL | proptest::num::f64::ZERO) {
            let s = format_number(v);
            prop_assert!(is_decimal(&s));
            prop_assert_eq!(s.parse::<f64>().unwrap(), if v == 0.0 { 0.0 } else { v });
        }

        #[test]
        fn retokenizing_joined_tokens_is_stable(s in "[a-zA-Z0-9 .,%'-]{0,40}") {
            let once = tokenize(&s);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }
    }
}
