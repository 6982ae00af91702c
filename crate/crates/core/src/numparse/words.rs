//! English number words.
//!
//! The parser is a small state machine over word tokens that accepts forms
//! like "twenty-four", "three hundred and thirty thousand",
//! "thirteen thousand, two hundred", "half a million", "a quarter-billion"
//! and "two point five". It is shared by [`words_to_number`] and by the
//! mention detector, which needs to know how many tokens a phrase spans.

use rust_decimal::Decimal;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordsError {
    #[error("empty number phrase")]
    Empty,
    #[error("unrecognized token {token:?} at word {index}")]
    Unrecognized { token: String, index: usize },
    #[error("incomplete number phrase, ends after {last:?}")]
    Incomplete { last: String },
    #[error("{0} is outside the spellable range (|value| < 10^15, at most 3 fractional digits)")]
    OutOfRange(Decimal),
}

const ONES: [&str; 20] = [
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
];

const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

const SCALES: [(&str, u64); 4] = [
    ("trillion", 1_000_000_000_000),
    ("billion", 1_000_000_000),
    ("million", 1_000_000),
    ("thousand", 1_000),
];

/// A token as seen by the word-number parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum WordTok<'a> {
    /// Lowercased word.
    Word(&'a str),
    Hyphen,
    Comma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lex {
    Zero,
    Unit(u32),
    Teen(u32),
    Tens(u32),
    Hundred,
    Scale(u64),
    Fraction(Decimal),
    A,
    And,
    Point,
    Minus,
}

fn lex(word: &str) -> Option<Lex> {
    if word == "zero" {
        return Some(Lex::Zero);
    }
    if let Some(i) = ONES.iter().position(|w| *w == word) {
        let i = i as u32;
        return Some(if i < 10 { Lex::Unit(i) } else { Lex::Teen(i) });
    }
    if let Some(i) = TENS.iter().position(|w| !w.is_empty() && *w == word) {
        return Some(Lex::Tens(i as u32 * 10));
    }
    if let Some((_, f)) = SCALES.iter().find(|(w, _)| *w == word) {
        return Some(Lex::Scale(*f));
    }
    Some(match word {
        "hundred" => Lex::Hundred,
        "half" => Lex::Fraction(Decimal::new(5, 1)),
        "quarter" => Lex::Fraction(Decimal::new(25, 2)),
        "a" | "an" => Lex::A,
        "and" => Lex::And,
        "point" => Lex::Point,
        "minus" | "negative" => Lex::Minus,
        _ => return None,
    })
}

/// True for words that may take part in a spelled-out number.
pub(crate) fn is_number_word(word: &str) -> bool {
    lex(word).is_some()
}

/// Scale factor for a standalone scale word ("million" -> 10^6).
pub fn scale_factor(word: &str) -> Option<Decimal> {
    SCALES
        .iter()
        .find(|(w, _)| *w == word)
        .map(|(_, f)| Decimal::from(*f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Last {
    Start,
    Minus,
    A,
    Zero,
    Unit,
    Teen,
    Tens,
    TensHyphen,
    Hundred,
    Scale,
    And,
    Comma,
    Fraction,
    FractionA,
    FractionHyphen,
    Point,
    FracDigit,
}

impl Last {
    fn complete(self) -> bool {
        matches!(
            self,
            Last::Zero
                | Last::Unit
                | Last::Teen
                | Last::Tens
                | Last::Hundred
                | Last::Scale
                | Last::FracDigit
        )
    }
}

struct State {
    negative: bool,
    total: Decimal,
    group: u32,
    group_has_hundred: bool,
    group_has_ones: bool,
    last_scale: Option<u64>,
    fraction: Option<Decimal>,
    decimals: String,
    last: Last,
}

impl State {
    fn value(&self) -> Decimal {
        let mut v = self.total + Decimal::from(self.group);
        if !self.decimals.is_empty() {
            let digits: i64 = self.decimals.parse().expect("decimal digits");
            v += Decimal::new(digits, self.decimals.len() as u32);
        }
        if self.negative {
            -v
        } else {
            v
        }
    }

    fn start_group_ok(&self) -> bool {
        matches!(
            self.last,
            Last::Start | Last::Minus | Last::Hundred | Last::And | Last::Scale | Last::Comma
        )
    }

    /// Advance by one token; `next` is the following token, if any, used for
    /// the lookahead that "and", "," and "-" need.
    fn step(&mut self, tok: WordTok<'_>, next: Option<WordTok<'_>>) -> bool {
        let next_lex = match next {
            Some(WordTok::Word(w)) => lex(w),
            _ => None,
        };
        match tok {
            WordTok::Hyphen => match self.last {
                Last::Tens if matches!(next_lex, Some(Lex::Unit(u)) if u > 0) => {
                    self.last = Last::TensHyphen;
                    true
                }
                Last::Fraction if matches!(next_lex, Some(Lex::Scale(_))) => {
                    self.last = Last::FractionHyphen;
                    true
                }
                _ => false,
            },
            WordTok::Comma => {
                if self.last == Last::Scale
                    && matches!(
                        next_lex,
                        Some(Lex::Unit(1..)) | Some(Lex::Teen(_)) | Some(Lex::Tens(_))
                    )
                {
                    self.last = Last::Comma;
                    true
                } else {
                    false
                }
            }
            WordTok::Word(w) => {
                let Some(l) = lex(w) else { return false };
                self.step_lex(l, next_lex)
            }
        }
    }

    fn step_lex(&mut self, l: Lex, next: Option<Lex>) -> bool {
        if matches!(self.last, Last::Point | Last::FracDigit) {
            return match l {
                Lex::Zero => {
                    self.decimals.push('0');
                    self.last = Last::FracDigit;
                    true
                }
                Lex::Unit(u) => {
                    self.decimals.push(char::from_digit(u, 10).expect("digit"));
                    self.last = Last::FracDigit;
                    true
                }
                _ => false,
            };
        }
        match l {
            Lex::Minus => {
                if self.last == Last::Start {
                    self.negative = true;
                    self.last = Last::Minus;
                    true
                } else {
                    false
                }
            }
            Lex::A => match self.last {
                Last::Start
                    if matches!(
                        next,
                        Some(Lex::Hundred) | Some(Lex::Scale(_)) | Some(Lex::Fraction(_))
                    ) =>
                {
                    self.last = Last::A;
                    true
                }
                Last::Fraction if matches!(next, Some(Lex::Scale(_))) => {
                    self.last = Last::FractionA;
                    true
                }
                _ => false,
            },
            Lex::Fraction(f) => {
                if matches!(self.last, Last::Start | Last::A) && self.total.is_zero() {
                    self.fraction = Some(f);
                    self.last = Last::Fraction;
                    true
                } else {
                    false
                }
            }
            Lex::Zero => {
                if matches!(self.last, Last::Start | Last::Minus) {
                    self.last = Last::Zero;
                    true
                } else {
                    false
                }
            }
            Lex::Unit(u) => {
                let ok = match self.last {
                    Last::Tens | Last::TensHyphen => !self.group_has_ones && u > 0,
                    _ => self.start_group_ok() && !self.group_has_ones,
                };
                if !ok {
                    return false;
                }
                self.group += u;
                self.group_has_ones = true;
                self.last = Last::Unit;
                true
            }
            Lex::Teen(t) => {
                if !self.start_group_ok() || self.group % 100 != 0 {
                    return false;
                }
                self.group += t;
                self.group_has_ones = true;
                self.last = Last::Teen;
                true
            }
            Lex::Tens(t) => {
                if !self.start_group_ok() || self.group % 100 != 0 {
                    return false;
                }
                self.group += t;
                self.last = Last::Tens;
                true
            }
            Lex::Hundred => {
                let ok = match self.last {
                    Last::A => {
                        self.group = 1;
                        true
                    }
                    Last::Unit | Last::Teen => !self.group_has_hundred && self.group < 100,
                    _ => false,
                };
                if !ok {
                    return false;
                }
                self.group *= 100;
                self.group_has_hundred = true;
                self.group_has_ones = false;
                self.last = Last::Hundred;
                true
            }
            Lex::Scale(s) => {
                if self.last_scale.is_some_and(|prev| s >= prev) {
                    return false;
                }
                let mult = match self.last {
                    Last::A => Decimal::ONE,
                    Last::Fraction | Last::FractionA | Last::FractionHyphen => {
                        self.fraction.take().expect("fraction set")
                    }
                    Last::Unit | Last::Teen | Last::Tens | Last::Hundred if self.group > 0 => {
                        Decimal::from(self.group)
                    }
                    _ => return false,
                };
                self.total += mult * Decimal::from(s);
                self.group = 0;
                self.group_has_hundred = false;
                self.group_has_ones = false;
                self.last_scale = Some(s);
                self.last = Last::Scale;
                true
            }
            Lex::And => {
                let follows = matches!(
                    next,
                    Some(Lex::Unit(1..)) | Some(Lex::Teen(_)) | Some(Lex::Tens(_))
                );
                if matches!(self.last, Last::Hundred | Last::Scale) && follows {
                    self.last = Last::And;
                    true
                } else {
                    false
                }
            }
            Lex::Point => {
                if self.last.complete() && self.last != Last::FracDigit {
                    self.last = Last::Point;
                    true
                } else {
                    false
                }
            }
        }
    }
}

/// Longest prefix of `toks` that forms a complete number.
/// Returns the value and the number of tokens consumed.
pub(crate) fn parse_prefix(toks: &[WordTok<'_>]) -> Option<(Decimal, usize)> {
    let mut st = State {
        negative: false,
        total: Decimal::ZERO,
        group: 0,
        group_has_hundred: false,
        group_has_ones: false,
        last_scale: None,
        fraction: None,
        decimals: String::new(),
        last: Last::Start,
    };
    let mut best = None;
    for (i, tok) in toks.iter().enumerate() {
        if !st.step(*tok, toks.get(i + 1).copied()) {
            break;
        }
        if st.last.complete() {
            best = Some((st.value(), i + 1));
        }
    }
    best
}

fn tokenize_phrase(phrase: &str) -> Vec<(String, bool)> {
    // (token, is_punct)
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in phrase.chars() {
        if ch.is_alphabetic() {
            cur.extend(ch.to_lowercase());
            continue;
        }
        if !cur.is_empty() {
            out.push((std::mem::take(&mut cur), false));
        }
        if !ch.is_whitespace() {
            out.push((ch.to_string(), true));
        }
    }
    if !cur.is_empty() {
        out.push((cur, false));
    }
    out
}

/// Parse a complete word-number phrase such as "fifty million".
pub fn words_to_number(phrase: &str) -> Result<Decimal, WordsError> {
    let raw = tokenize_phrase(phrase);
    if raw.is_empty() {
        return Err(WordsError::Empty);
    }
    let toks: Vec<WordTok<'_>> = raw
        .iter()
        .map(|(t, punct)| match (t.as_str(), punct) {
            ("-", true) => WordTok::Hyphen,
            (",", true) => WordTok::Comma,
            (w, _) => WordTok::Word(w),
        })
        .collect();
    match parse_prefix(&toks) {
        Some((v, n)) if n == toks.len() => Ok(v),
        Some((_, n)) => Err(WordsError::Unrecognized {
            token: raw[n].0.clone(),
            index: n,
        }),
        None => {
            // find how far the machine got to name the offending token
            let first_bad = first_rejected(&toks);
            match first_bad {
                Some(i) => Err(WordsError::Unrecognized {
                    token: raw[i].0.clone(),
                    index: i,
                }),
                None => Err(WordsError::Incomplete {
                    last: raw.last().map(|t| t.0.clone()).unwrap_or_default(),
                }),
            }
        }
    }
}

fn first_rejected(toks: &[WordTok<'_>]) -> Option<usize> {
    let mut st = State {
        negative: false,
        total: Decimal::ZERO,
        group: 0,
        group_has_hundred: false,
        group_has_ones: false,
        last_scale: None,
        fraction: None,
        decimals: String::new(),
        last: Last::Start,
    };
    for (i, tok) in toks.iter().enumerate() {
        if !st.step(*tok, toks.get(i + 1).copied()) {
            return Some(i);
        }
    }
    None
}

fn below_thousand(n: u64, out: &mut Vec<String>) {
    debug_assert!(n < 1000);
    let hundreds = n / 100;
    let rest = n % 100;
    if hundreds > 0 {
        out.push(ONES[hundreds as usize].to_string());
        out.push("hundred".to_string());
    }
    if rest == 0 {
        return;
    }
    if rest < 20 {
        out.push(ONES[rest as usize].to_string());
    } else if rest % 10 == 0 {
        out.push(TENS[(rest / 10) as usize].to_string());
    } else {
        out.push(format!(
            "{}-{}",
            TENS[(rest / 10) as usize],
            ONES[(rest % 10) as usize]
        ));
    }
}

/// Spell a value in words: 110000 -> "one hundred ten thousand".
pub fn number_to_words(value: Decimal) -> Result<String, WordsError> {
    let limit = Decimal::from(1_000_000_000_000_000u64);
    let v = value.normalize();
    if v.abs() >= limit || v.scale() > 3 {
        return Err(WordsError::OutOfRange(value));
    }
    let mut words = Vec::new();
    if v.is_sign_negative() && !v.is_zero() {
        words.push("minus".to_string());
    }
    let abs = v.abs();
    let int = abs.trunc();
    let mut n: u64 = int.try_into().map_err(|_| WordsError::OutOfRange(value))?;
    if n == 0 {
        words.push("zero".to_string());
    } else {
        let mut parts = Vec::new();
        for (name, f) in SCALES {
            let q = n / f;
            if q > 0 {
                below_thousand(q, &mut parts);
                parts.push(name.to_string());
                n %= f;
            }
        }
        below_thousand(n, &mut parts);
        words.extend(parts);
    }
    let frac = abs - int;
    if !frac.is_zero() {
        words.push("point".to_string());
        let s = frac.normalize().to_string();
        for d in s.trim_start_matches("0.").chars() {
            words.push(ONES[d.to_digit(10).expect("digit") as usize].to_string());
        }
    }
    Ok(words.join(" "))
}

fn ordinal_of_word(word: &str) -> String {
    match word {
        "one" => "first".into(),
        "two" => "second".into(),
        "three" => "third".into(),
        "five" => "fifth".into(),
        "eight" => "eighth".into(),
        "nine" => "ninth".into(),
        "twelve" => "twelfth".into(),
        w if w.ends_with('y') => format!("{}ieth", &w[..w.len() - 1]),
        w => format!("{w}th"),
    }
}

/// Cardinal word for an ordinal word ("twenty-first" handled by the caller
/// splitting on the hyphen).
pub(crate) fn cardinal_of_ordinal(word: &str) -> Option<&'static str> {
    const IRREGULAR: [(&str, &str); 7] = [
        ("first", "one"),
        ("second", "two"),
        ("third", "three"),
        ("fifth", "five"),
        ("eighth", "eight"),
        ("ninth", "nine"),
        ("twelfth", "twelve"),
    ];
    if let Some((_, c)) = IRREGULAR.iter().find(|(o, _)| *o == word) {
        return Some(c);
    }
    let all = ONES
        .iter()
        .chain(TENS.iter().filter(|t| !t.is_empty()))
        .chain(["hundred"].iter())
        .chain(SCALES.iter().map(|(w, _)| w));
    all.copied().find(|c| ordinal_of_word(c) == word)
}

/// "twenty-one" -> "twenty-first".
pub fn ordinal_words(n: u64) -> Result<String, WordsError> {
    let cardinal = number_to_words(Decimal::from(n))?;
    let (head, last) = match cardinal.rfind([' ', '-']) {
        Some(i) => (&cardinal[..=i], &cardinal[i + 1..]),
        None => ("", cardinal.as_str()),
    };
    Ok(format!("{head}{}", ordinal_of_word(last)))
}

/// "3" -> "3rd".
pub fn ordinal_suffix(n: u64) -> &'static str {
    match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn known_phrases() {
        assert_eq!(words_to_number("fifty million").unwrap(), d("50000000"));
        assert_eq!(words_to_number("zero").unwrap(), d("0"));
        assert_eq!(
            words_to_number("three hundred and thirty thousand").unwrap(),
            d("330000")
        );
        assert_eq!(words_to_number("twenty-four").unwrap(), d("24"));
        assert_eq!(words_to_number("twenty four").unwrap(), d("24"));
        assert_eq!(words_to_number("three hundred and five").unwrap(), d("305"));
        assert_eq!(
            words_to_number("three hundred and fifty-one").unwrap(),
            d("351")
        );
        assert_eq!(
            words_to_number("thirteen thousand, two hundred").unwrap(),
            d("13200")
        );
        assert_eq!(words_to_number("half a million").unwrap(), d("500000"));
        assert_eq!(words_to_number("a quarter-billion").unwrap(), d("250000000"));
        assert_eq!(words_to_number("a hundred").unwrap(), d("100"));
        assert_eq!(words_to_number("fifteen hundred").unwrap(), d("1500"));
        assert_eq!(words_to_number("two point five").unwrap(), d("2.5"));
        assert_eq!(words_to_number("minus four").unwrap(), d("-4"));
        assert_eq!(words_to_number("Twelve").unwrap(), d("12"));
        assert_eq!(
            words_to_number("one hundred ten thousand").unwrap(),
            d("110000")
        );
    }

    #[test]
    fn rejects_name_first_unconsumed_token() {
        match words_to_number("fifty banana") {
            Err(WordsError::Unrecognized { token, index }) => {
                assert_eq!(token, "banana");
                assert_eq!(index, 1);
            }
            other => panic!("{other:?}"),
        }
        match words_to_number("five six") {
            Err(WordsError::Unrecognized { token, .. }) => assert_eq!(token, "six"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            words_to_number("thousand million"),
            Err(WordsError::Unrecognized { .. })
        ));
        assert_eq!(words_to_number("  "), Err(WordsError::Empty));
        assert!(words_to_number("half").is_err());
        assert!(words_to_number("million thousand").is_err());
    }

    #[test]
    fn spelling() {
        assert_eq!(number_to_words(d("12")).unwrap(), "twelve");
        assert_eq!(number_to_words(d("0")).unwrap(), "zero");
        assert_eq!(
            number_to_words(d("110000")).unwrap(),
            "one hundred ten thousand"
        );
        assert_eq!(number_to_words(d("5000000")).unwrap(), "five million");
        assert_eq!(number_to_words(d("2.9")).unwrap(), "two point nine");
        assert_eq!(number_to_words(d("-4")).unwrap(), "minus four");
        assert_eq!(number_to_words(d("0.05")).unwrap(), "zero point zero five");
        assert!(number_to_words(d("1000000000000000")).is_err());
        assert!(number_to_words(d("1.2345")).is_err());
    }

    #[test]
    fn spelled_values_parse_back() {
        for s in ["110000", "0.05", "2.9", "-4", "999999999999999", "1000001", "3.125"] {
            let v = d(s);
            assert_eq!(words_to_number(&number_to_words(v).unwrap()).unwrap(), v);
        }
    }

    #[test]
    fn exhaustive_round_trip_to_ten_thousand() {
        for n in 0..=10_000u64 {
            let w = number_to_words(Decimal::from(n)).unwrap();
            assert_eq!(words_to_number(&w).unwrap(), Decimal::from(n), "{w}");
        }
    }

    #[test]
    fn ordinals() {
        assert_eq!(ordinal_words(1).unwrap(), "first");
        assert_eq!(ordinal_words(21).unwrap(), "twenty-first");
        assert_eq!(ordinal_words(40).unwrap(), "fortieth");
        assert_eq!(ordinal_words(100).unwrap(), "one hundredth");
        assert_eq!(ordinal_words(12).unwrap(), "twelfth");
        assert_eq!(ordinal_suffix(3), "rd");
        assert_eq!(ordinal_suffix(11), "th");
        assert_eq!(ordinal_suffix(22), "nd");
        assert_eq!(cardinal_of_ordinal("twentieth"), Some("twenty"));
        assert_eq!(cardinal_of_ordinal("fourth"), Some("four"));
        assert_eq!(cardinal_of_ordinal("hundredth"), Some("hundred"));
        assert_eq!(cardinal_of_ordinal("mouth"), None);
    }
}
