//! Rule-based recognition of numeric expressions in claim text.
//!
//! [`detect_mentions`] finds digit forms ("5,000,000", "$1.2 billion",
//! "-2.9%", "3rd", "Jan. 12, 2017") and spelled-out forms ("fifty million",
//! "half a million", "twenty-first"), classifies each into one of six
//! [`EntityCategory`] values, and records exact character spans so that
//! operators can rewrite a mention in place.
//!
//! Category precedence when several cues apply: Percent > Money > Date >
//! Time > Ordinal > Cardinal.

pub mod format;
pub mod words;

use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

pub use format::{conversational_digits, default_digits, format_number, render_digits, DigitStyle};
pub use words::{
    number_to_words, ordinal_suffix, ordinal_words, scale_factor, words_to_number, WordsError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityCategory {
    Cardinal,
    Money,
    Percent,
    Time,
    Date,
    Ordinal,
}

impl EntityCategory {
    pub const ALL: [EntityCategory; 6] = [
        EntityCategory::Cardinal,
        EntityCategory::Money,
        EntityCategory::Percent,
        EntityCategory::Time,
        EntityCategory::Date,
        EntityCategory::Ordinal,
    ];
}

impl fmt::Display for EntityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// What kind of numeral a mention is, beyond its category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NumeralKind {
    /// A quantity, optionally with a unit.
    Quantity,
    /// Bare four-digit year.
    Year,
    /// "1990s".
    Decade,
    /// Clock time ("10:30", "7 p.m.").
    Clock,
    /// Month with day and/or year.
    CalendarDate,
    /// "3rd", "twenty-first".
    Ordinal,
}

/// A scale word following digits, as in "1.2 billion".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleWord {
    /// Separator plus word, e.g. " billion".
    pub text: String,
    pub factor: Decimal,
}

/// Layout of a mention surface: `lead + body + scale.text + tail`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionShape {
    /// Sign and currency symbol, or month words for calendar dates.
    pub lead: String,
    /// Digits or the spelled-out phrase.
    pub body: String,
    pub scale: Option<ScaleWord>,
    /// Unit text with its separator (" dollars", "%", "-percent", "rd").
    pub tail: String,
    pub kind: NumeralKind,
}

impl MentionShape {
    pub fn is_negative(&self) -> bool {
        self.lead.starts_with(['-', '\u{2212}'])
    }

    pub fn currency_symbol(&self) -> Option<char> {
        self.lead.chars().find(|c| CURRENCY_SYMBOLS.contains(c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumericMention {
    pub category: EntityCategory,
    /// Character offsets, half-open.
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub value: Decimal,
    pub unit: Option<String>,
    pub is_word_form: bool,
    pub shape: MentionShape,
}

impl NumericMention {
    /// Magnitude of the body alone (before any scale word and sign).
    pub fn body_value(&self) -> Decimal {
        match &self.shape.scale {
            Some(s) => (self.value / s.factor).abs(),
            None => self.value.abs(),
        }
    }
}

/// One line of the mention dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionRecord {
    pub id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub category: EntityCategory,
    pub value: Decimal,
    pub unit: Option<String>,
    pub is_word_form: bool,
}

impl MentionRecord {
    pub fn new(id: &str, m: &NumericMention) -> Self {
        Self {
            id: id.to_string(),
            start: m.start,
            end: m.end,
            surface: m.surface.clone(),
            category: m.category,
            value: m.value,
            unit: m.unit.clone(),
            is_word_form: m.is_word_form,
        }
    }
}

const CURRENCY_SYMBOLS: [char; 5] = ['$', '€', '£', '¥', '₹'];

const CURRENCY_WORDS: [&str; 14] = [
    "dollars", "dollar", "euros", "euro", "pounds", "cents", "cent", "yen", "rupees", "rupee",
    "yuan", "pesos", "peso", "francs",
];
const TIME_WORDS: [&str; 10] = [
    "hours", "hour", "hrs", "hr", "minutes", "minute", "mins", "min", "seconds", "second",
];
const DATE_WORDS: [&str; 10] = [
    "days", "day", "weeks", "week", "months", "month", "years", "year", "decades", "decade",
];
const MONTHS: [(&str, bool); 21] = [
    ("january", false),
    ("february", false),
    ("march", false),
    ("april", false),
    ("may", false),
    ("june", false),
    ("july", false),
    ("august", false),
    ("september", false),
    ("october", false),
    ("november", false),
    ("december", false),
    ("jan", true),
    ("feb", true),
    ("mar", true),
    ("apr", true),
    ("jun", true),
    ("jul", true),
    ("aug", true),
    ("sept", true),
    ("sep", true),
];
const MONTHS_TAIL: [&str; 3] = ["oct", "nov", "dec"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Digits,
    Word,
    Punct,
}

#[derive(Debug, Clone, Copy)]
struct Tok {
    kind: Kind,
    start: usize,
    end: usize,
}

fn tokenize(chars: &[char]) -> Vec<Tok> {
    let mut toks = Vec::new();
    let n = chars.len();
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < n && chars[i].is_ascii_digit() {
                i += 1;
            }
            let first_run = i - start;
            if first_run <= 3 {
                while i + 3 < n
                    && chars[i] == ','
                    && chars[i + 1..i + 4].iter().all(|c| c.is_ascii_digit())
                    && !chars.get(i + 4).is_some_and(|c| c.is_ascii_digit())
                {
                    i += 4;
                }
            }
            if i + 1 < n && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < n && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            toks.push(Tok {
                kind: Kind::Digits,
                start,
                end: i,
            });
        } else if c.is_alphabetic() {
            while i < n
                && (chars[i].is_alphabetic()
                    || (matches!(chars[i], '\'' | '\u{2019}')
                        && chars.get(i + 1).is_some_and(|c| c.is_alphabetic())))
            {
                i += 1;
            }
            toks.push(Tok {
                kind: Kind::Word,
                start,
                end: i,
            });
        } else {
            toks.push(Tok {
                kind: Kind::Punct,
                start,
                end: i + 1,
            });
            i += 1;
        }
    }
    toks
}

struct Scanner<'a> {
    chars: &'a [char],
    toks: Vec<Tok>,
}

/// Boundaries of a recognized mention before it becomes a [`NumericMention`].
struct Found {
    start: usize,
    body_start: usize,
    body_end: usize,
    scale_end: usize,
    end: usize,
    scale: Option<Decimal>,
    value: Decimal,
    category: EntityCategory,
    unit: Option<String>,
    word_form: bool,
    kind: NumeralKind,
    /// Index of the first token after the mention.
    next: usize,
}

struct UnitMatch {
    category: EntityCategory,
    unit: String,
    end: usize,
    next: usize,
}

impl<'a> Scanner<'a> {
    fn text(&self, start: usize, end: usize) -> String {
        self.chars[start..end].iter().collect()
    }

    fn tok_text(&self, i: usize) -> String {
        let t = self.toks[i];
        self.text(t.start, t.end)
    }

    fn lower(&self, i: usize) -> String {
        self.tok_text(i).to_lowercase()
    }

    fn is_punct(&self, i: usize, set: &[char]) -> bool {
        self.toks
            .get(i)
            .is_some_and(|t| t.kind == Kind::Punct && set.contains(&self.chars[t.start]))
    }

    fn is_word(&self, i: usize) -> bool {
        self.toks.get(i).is_some_and(|t| t.kind == Kind::Word)
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        match (self.toks.get(a), self.toks.get(b)) {
            (Some(x), Some(y)) => x.end == y.start,
            _ => false,
        }
    }

    /// Tokens separated by exactly one space (or touching).
    fn near(&self, a: usize, b: usize) -> bool {
        match (self.toks.get(a), self.toks.get(b)) {
            (Some(x), Some(y)) => {
                y.start == x.end || (y.start == x.end + 1 && self.chars[x.end].is_whitespace())
            }
            _ => false,
        }
    }

    fn month_at(&self, i: usize) -> Option<bool> {
        if !self.is_word(i) {
            return None;
        }
        let w = self.lower(i);
        MONTHS
            .iter()
            .find(|(m, _)| *m == w)
            .map(|(_, abbr)| *abbr)
            .or_else(|| MONTHS_TAIL.contains(&w.as_str()).then_some(true))
    }

    fn int_value(&self, i: usize) -> Option<u64> {
        let t = self.toks.get(i)?;
        if t.kind != Kind::Digits {
            return None;
        }
        self.text(t.start, t.end).parse().ok()
    }

    fn digits_len(&self, i: usize) -> usize {
        let t = self.toks[i];
        t.end - t.start
    }

    fn match_calendar(&self, i: usize) -> Option<Found> {
        let abbr = self.month_at(i)?;
        let mut k = i + 1;
        if abbr && self.is_punct(k, &['.']) && self.adjacent(i, k) {
            k += 1;
        }
        let first = self.int_value(k)?;
        let (mut day, mut year) = (None, None);
        let mut body = k;
        if self.digits_len(k) <= 2 && (1..=31).contains(&first) {
            day = Some(first);
            k += 1;
            if self.is_word(k)
                && self.adjacent(k - 1, k)
                && ["st", "nd", "rd", "th"].contains(&self.lower(k).as_str())
            {
                k += 1;
            }
            let mut j = k;
            if self.is_punct(j, &[',']) {
                j += 1;
            }
            if let Some(y) = self.int_value(j) {
                if self.digits_len(j) == 4 && (1000..=2999).contains(&y) {
                    year = Some(y);
                    body = j;
                    k = j + 1;
                }
            }
        } else if self.digits_len(k) == 4 && (1000..=2999).contains(&first) {
            year = Some(first);
            k += 1;
        } else {
            return None;
        }
        let value = Decimal::from(year.or(day).expect("day or year"));
        let bt = self.toks[body];
        let end = self.toks[k - 1].end;
        Some(Found {
            start: self.toks[i].start,
            body_start: bt.start,
            body_end: bt.end,
            scale_end: bt.end,
            end,
            scale: None,
            value,
            category: EntityCategory::Date,
            unit: None,
            word_form: false,
            kind: NumeralKind::CalendarDate,
            next: k,
        })
    }

    /// A unit directly after token `prev` (adjacent, one space, or joined by
    /// a hyphen as in "31.4-percent").
    fn match_unit(&self, prev: usize) -> Option<UnitMatch> {
        let mut q = prev + 1;
        let joined = self.is_punct(q, &['-'])
            && self.adjacent(prev, q)
            && self.adjacent(q, q + 1)
            && self.is_word(q + 1);
        if joined {
            q += 1;
        } else if !self.near(prev, q) {
            return None;
        }
        let t = *self.toks.get(q)?;
        if !joined && self.is_punct(q, &['%']) {
            return Some(UnitMatch {
                category: EntityCategory::Percent,
                unit: "%".into(),
                end: t.end,
                next: q + 1,
            });
        }
        if t.kind != Kind::Word {
            return None;
        }
        let w = self.lower(q);
        let single = |category| {
            Some(UnitMatch {
                category,
                unit: self.tok_text(q),
                end: t.end,
                next: q + 1,
            })
        };
        let pair = |second: &[&str]| {
            if self.is_word(q + 1) && self.near(q, q + 1) && second.contains(&self.lower(q + 1).as_str())
            {
                let end = self.toks[q + 1].end;
                Some(UnitMatch {
                    category: EntityCategory::Percent,
                    unit: self.text(t.start, end),
                    end,
                    next: q + 2,
                })
            } else {
                None
            }
        };
        match w.as_str() {
            "percent" | "pct" => single(EntityCategory::Percent),
            "per" => pair(&["cent"]),
            "percentage" => pair(&["points", "point"]),
            w if CURRENCY_WORDS.contains(&w) => single(EntityCategory::Money),
            w if TIME_WORDS.contains(&w) => single(EntityCategory::Time),
            w if DATE_WORDS.contains(&w) => single(EntityCategory::Date),
            _ => None,
        }
    }

    /// "a.m." / "pm" following token `prev`.
    fn match_meridiem(&self, prev: usize) -> Option<(usize, usize)> {
        let q = prev + 1;
        if !self.near(prev, q) || !self.is_word(q) {
            return None;
        }
        match self.lower(q).as_str() {
            "am" | "pm" => {
                let mut k = q + 1;
                if self.is_punct(k, &['.']) && self.adjacent(q, k) {
                    k += 1;
                }
                Some((self.toks[k - 1].end, k))
            }
            "a" | "p"
                if self.is_punct(q + 1, &['.'])
                    && self.adjacent(q, q + 1)
                    && self.is_word(q + 2)
                    && self.lower(q + 2) == "m"
                    && self.adjacent(q + 1, q + 2) =>
            {
                let mut k = q + 3;
                if self.is_punct(k, &['.']) && self.adjacent(q + 2, k) {
                    k += 1;
                }
                Some((self.toks[k - 1].end, k))
            }
            _ => None,
        }
    }

    fn match_digits(&self, i: usize) -> Option<Found> {
        let mut p = i;
        let start = self.toks[i].start;
        let mut negative = false;
        let mut currency = false;
        if self.is_punct(p, &['-', '\u{2212}'])
            && self.adjacent(p, p + 1)
            && (p == 0
                || !self.adjacent(p - 1, p)
                || self.is_punct(p - 1, &['(', '"', '\u{201c}']))
        {
            negative = true;
            p += 1;
        }
        if self.is_punct(p, &CURRENCY_SYMBOLS) && self.adjacent(p, p + 1) {
            currency = true;
            p += 1;
        }
        let body = *self.toks.get(p)?;
        if body.kind != Kind::Digits {
            return None;
        }
        if p == i && p > 0 && self.adjacent(p - 1, p) {
            // glued to a word ("H1", "COVID-19") or part of a fraction/date ("1/2")
            if self.is_word(p - 1) || self.is_punct(p - 1, &['/', '.']) {
                return None;
            }
            if self.is_punct(p - 1, &['-']) && p >= 2 && self.adjacent(p - 2, p - 1) && self.is_word(p - 2) {
                return None;
            }
        }
        if self.is_punct(p + 1, &['/']) && self.adjacent(p, p + 1) {
            return None;
        }

        let body_text = self.text(body.start, body.end);
        let mantissa = Decimal::from_str(&body_text.replace(',', "")).ok()?;
        let is_int = !body_text.contains('.');
        let signed = |v: Decimal| if negative { -v } else { v };
        let plain = |next: usize, end: usize, category, kind, unit: Option<String>| Found {
            start,
            body_start: body.start,
            body_end: body.end,
            scale_end: body.end,
            end,
            scale: None,
            value: signed(mantissa),
            category,
            unit,
            word_form: false,
            kind,
            next,
        };

        let q = p + 1;
        if self.is_word(q) && self.adjacent(p, q) {
            let w = self.lower(q);
            return match w.as_str() {
                "st" | "nd" | "rd" | "th" if is_int && !negative && !currency => Some(plain(
                    q + 1,
                    self.toks[q].end,
                    EntityCategory::Ordinal,
                    NumeralKind::Ordinal,
                    None,
                )),
                "s" if is_int && body_text.len() == 4 && body_text.ends_with('0') && !currency => {
                    Some(plain(
                        q + 1,
                        self.toks[q].end,
                        EntityCategory::Date,
                        NumeralKind::Decade,
                        None,
                    ))
                }
                "am" | "pm" => {
                    let (end, next) = self.match_meridiem(p)?;
                    Some(plain(next, end, EntityCategory::Time, NumeralKind::Clock, None))
                }
                _ => None,
            };
        }
        if self.is_punct(q, &[':'])
            && self.adjacent(p, q)
            && self.adjacent(q, q + 1)
            && self.int_value(q + 1).is_some()
            && self.digits_len(q + 1) == 2
        {
            let (end, next) = self
                .match_meridiem(q + 1)
                .unwrap_or((self.toks[q + 1].end, q + 2));
            return Some(plain(next, end, EntityCategory::Time, NumeralKind::Clock, None));
        }
        if let Some((end, next)) = self.match_meridiem(p) {
            return Some(plain(next, end, EntityCategory::Time, NumeralKind::Clock, None));
        }

        // optional scale word: "1.2 billion", "5-million"
        let mut last = p;
        let mut scale = None;
        let mut s = p + 1;
        let hyphen = self.is_punct(s, &['-']) && self.adjacent(p, s) && self.adjacent(s, s + 1);
        if hyphen {
            s += 1;
        }
        if self.is_word(s) && (hyphen || self.near(p, s)) {
            if let Some(f) = scale_factor(&self.lower(s)) {
                scale = Some(f);
                last = s;
            }
        }
        let scale_end = self.toks[last].end;
        let unit = self.match_unit(last);

        let (category, kind) = match &unit {
            Some(u) if u.category == EntityCategory::Percent => (EntityCategory::Percent, NumeralKind::Quantity),
            _ if currency => (EntityCategory::Money, NumeralKind::Quantity),
            Some(u) => (u.category, NumeralKind::Quantity),
            None if scale.is_none()
                && is_int
                && !negative
                && body_text.len() == 4
                && (1500..=2100).contains(&body_text.parse::<u32>().unwrap_or(0)) =>
            {
                (EntityCategory::Date, NumeralKind::Year)
            }
            None => (EntityCategory::Cardinal, NumeralKind::Quantity),
        };
        let unit_text = match &unit {
            Some(u) => Some(u.unit.clone()),
            None if currency => Some(self.tok_text(p - 1)),
            None => None,
        };
        let (end, next) = match &unit {
            Some(u) => (u.end, u.next),
            None => (scale_end, last + 1),
        };
        let value = signed(mantissa * scale.unwrap_or(Decimal::ONE));
        Some(Found {
            start,
            body_start: body.start,
            body_end: body.end,
            scale_end,
            end,
            scale,
            value,
            category,
            unit: unit_text,
            word_form: false,
            kind,
            next,
        })
    }

    fn match_words(&self, i: usize) -> Option<Found> {
        let mut words: Vec<String> = Vec::new();
        let mut tok_idx: Vec<usize> = Vec::new();
        let mut ordinal_at = None;
        let mut j = i;
        while let Some(t) = self.toks.get(j) {
            match t.kind {
                Kind::Word => {
                    let w = self.lower(j);
                    if words::is_number_word(&w) {
                        words.push(w);
                    } else if let Some(c) = words::cardinal_of_ordinal(&w) {
                        words.push(c.to_string());
                        tok_idx.push(j);
                        ordinal_at = Some(words.len() - 1);
                        break;
                    } else {
                        break;
                    }
                }
                Kind::Punct if self.is_punct(j, &['-']) && j > i && self.adjacent(j - 1, j) && self.adjacent(j, j + 1) => {
                    words.push("-".into());
                }
                Kind::Punct if self.is_punct(j, &[',']) && j > i && self.adjacent(j - 1, j) => {
                    words.push(",".into());
                }
                _ => break,
            }
            tok_idx.push(j);
            j += 1;
        }
        if words.is_empty() {
            return None;
        }
        let wt: Vec<words::WordTok<'_>> = words
            .iter()
            .map(|w| match w.as_str() {
                "-" => words::WordTok::Hyphen,
                "," => words::WordTok::Comma,
                w => words::WordTok::Word(w),
            })
            .collect();
        let (mut value, mut n) = words::parse_prefix(&wt)?;
        if i > 0 && self.lower(i - 1) == "between" {
            if let Some((v, k)) = self.split_range_and(&wt, n) {
                value = v;
                n = k;
            }
        }
        let last_tok = tok_idx[n - 1];
        let is_ordinal = ordinal_at == Some(n - 1);
        let body_start = self.toks[i].start;
        let body_end = self.toks[last_tok].end;
        let unit = if is_ordinal { None } else { self.match_unit(last_tok) };
        if n == 1 && words[0] == "one" && unit.is_none() && !is_ordinal {
            // pronoun use: "no one", "one of them"
            return None;
        }
        let category = match &unit {
            _ if is_ordinal => EntityCategory::Ordinal,
            Some(u) => u.category,
            None => EntityCategory::Cardinal,
        };
        let (end, next) = match &unit {
            Some(u) => (u.end, u.next),
            None => (body_end, last_tok + 1),
        };
        Some(Found {
            start: body_start,
            body_start,
            body_end,
            scale_end: body_end,
            end,
            scale: None,
            value,
            category,
            unit: unit.map(|u| u.unit),
            word_form: true,
            kind: if is_ordinal {
                NumeralKind::Ordinal
            } else {
                NumeralKind::Quantity
            },
            next,
        })
    }

    /// "between one thousand and one thousand two hundred": cut at the
    /// "and" when both sides are numbers and they ascend.
    fn split_range_and(&self, wt: &[words::WordTok<'_>], n: usize) -> Option<(Decimal, usize)> {
        let k = wt[..n].iter().position(|t| matches!(t, words::WordTok::Word("and")))?;
        let (lo, used) = words::parse_prefix(&wt[..k])?;
        let (hi, _) = words::parse_prefix(&wt[k + 1..])?;
        (used == k && lo < hi).then_some((lo, k))
    }

    fn build(&self, f: Found) -> NumericMention {
        let scale = f.scale.map(|factor| ScaleWord {
            text: self.text(f.body_end, f.scale_end),
            factor,
        });
        NumericMention {
            category: f.category,
            start: f.start,
            end: f.end,
            surface: self.text(f.start, f.end),
            value: f.value.normalize(),
            unit: f.unit,
            is_word_form: f.word_form,
            shape: MentionShape {
                lead: self.text(f.start, f.body_start),
                body: self.text(f.body_start, f.body_end),
                scale,
                tail: self.text(f.scale_end, f.end),
                kind: f.kind,
            },
        }
    }
}

/// Find every numeric expression in `text`, ordered by start offset.
pub fn detect_mentions(text: &str) -> Vec<NumericMention> {
    let chars: Vec<char> = text.chars().collect();
    let sc = Scanner {
        toks: tokenize(&chars),
        chars: &chars,
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < sc.toks.len() {
        let found = match sc.toks[i].kind {
            Kind::Word => sc.match_calendar(i).or_else(|| sc.match_words(i)),
            Kind::Digits | Kind::Punct => sc.match_digits(i),
        };
        match found {
            Some(f) => {
                i = f.next;
                out.push(sc.build(f));
            }
            None => i += 1,
        }
    }
    out
}

/// Convert character offsets to a byte range of `text`.
pub fn byte_range(text: &str, start: usize, end: usize) -> std::ops::Range<usize> {
    let mut it = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let b_start = it.by_ref().nth(start).unwrap_or(text.len());
    let b_end = if end == start {
        b_start
    } else {
        it.nth(end - start - 1).unwrap_or(text.len())
    };
    b_start..b_end
}

/// Replace character spans `[start, end)` with new text. Spans must not overlap.
pub fn rewrite_spans(text: &str, edits: &[(usize, usize, String)]) -> String {
    let mut edits: Vec<&(usize, usize, String)> = edits.iter().collect();
    edits.sort_by_key(|e| e.0);
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for (s, e, rep) in edits {
        debug_assert!(*s >= pos, "overlapping edits");
        out.extend(&chars[pos..*s]);
        out.push_str(rep);
        pos = *e;
    }
    out.extend(&chars[pos..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    fn one(text: &str) -> NumericMention {
        let m = detect_mentions(text);
        assert_eq!(m.len(), 1, "{text}: {m:#?}");
        m.into_iter().next().unwrap()
    }

    #[test]
    fn money_with_word_unit() {
        let m = one("revenue was 5,000,000 dollars");
        assert_eq!(m.category, EntityCategory::Money);
        assert_eq!(m.value, d("5000000"));
        assert_eq!(m.unit.as_deref(), Some("dollars"));
        assert_eq!(m.surface, "5,000,000 dollars");
        assert!(!m.is_word_form);
    }

    #[test]
    fn no_numbers() {
        assert!(detect_mentions("no numbers here").is_empty());
        assert!(detect_mentions("No one knows; someone said so.").is_empty());
        assert!(detect_mentions("").is_empty());
    }

    #[test]
    fn word_and_digit_mentions_in_one_claim() {
        let ms = detect_mentions(
            "costing half a million people health insurance, including about 34,000 veterans",
        );
        let vals: Vec<_> = ms.iter().map(|m| m.value).collect();
        assert_eq!(vals, vec![d("500000"), d("34000")]);
        assert!(ms[0].is_word_form);
        assert_eq!(ms[0].surface, "half a million");
    }

    #[test]
    fn categories() {
        assert_eq!(one("it rose 4%").category, EntityCategory::Percent);
        assert_eq!(one("it rose 25 percent").category, EntityCategory::Percent);
        assert_eq!(one("it rose 3 per cent").unit.as_deref(), Some("per cent"));
        assert_eq!(one("only 31.4-percent funded").category, EntityCategory::Percent);
        assert_eq!(one("cost $1.2 billion").category, EntityCategory::Money);
        assert_eq!(one("cost $1.2 billion").value, d("1200000000"));
        assert_eq!(one("cost $13,200 per case").value, d("13200"));
        assert_eq!(one("took 24 hours").category, EntityCategory::Time);
        assert_eq!(one("at 10:30 a.m. sharp").category, EntityCategory::Time);
        assert_eq!(one("at 10:30 a.m. sharp").shape.kind, NumeralKind::Clock);
        assert_eq!(one("at 7 pm").shape.kind, NumeralKind::Clock);
        assert_eq!(one("In 2020, revenue fell").category, EntityCategory::Date);
        assert_eq!(one("In 2020, revenue fell").shape.kind, NumeralKind::Year);
        assert_eq!(one("a 10-year plan").category, EntityCategory::Date);
        assert_eq!(one("in the 1990s").shape.kind, NumeralKind::Decade);
        assert_eq!(one("finished 3rd").category, EntityCategory::Ordinal);
        assert_eq!(one("the twenty-first century").category, EntityCategory::Ordinal);
        assert_eq!(one("the twenty-first century").value, d("21"));
        assert_eq!(one("the second time").category, EntityCategory::Ordinal);
        assert_eq!(one("Saturn has 789 moons").category, EntityCategory::Cardinal);
        assert_eq!(one("twelve states").category, EntityCategory::Cardinal);
        assert_eq!(one("twelve states").value, d("12"));
    }

    #[test]
    fn calendar_dates() {
        let m = one("in a tweet, Jan. 12, 2017.");
        assert_eq!(m.category, EntityCategory::Date);
        assert_eq!(m.surface, "Jan. 12, 2017");
        assert_eq!(m.value, d("2017"));
        let m = one("by October 2023");
        assert_eq!(m.surface, "October 2023");
        // "may" without digits is not a date
        assert!(detect_mentions("it may rain").is_empty());
    }

    #[test]
    fn negative_and_glued() {
        let m = one("was -2.9% last year");
        assert_eq!(m.value, d("-2.9"));
        assert_eq!(m.surface, "-2.9%");
        assert!(m.shape.is_negative());
        assert!(detect_mentions("COVID-19 cases").is_empty());
        assert!(detect_mentions("a 5G network").is_empty());
        assert!(detect_mentions("open 24/7").is_empty());
    }

    #[test]
    fn ranges_detected_as_endpoints() {
        let ms = detect_mentions("between 2 to 2.5.");
        let vals: Vec<_> = ms.iter().map(|m| m.value).collect();
        assert_eq!(vals, vec![d("2"), d("2.5")]);
        let ms = detect_mentions("between 20 and 30 percent");
        assert_eq!(ms.len(), 2);
        assert_eq!(ms[1].category, EntityCategory::Percent);
    }

    #[test]
    fn word_ranges_split_at_and() {
        let vals = |t: &str| detect_mentions(t).iter().map(|m| m.value).collect::<Vec<_>>();
        assert_eq!(vals("between one thousand and one thousand two hundred"), [d("1000"), d("1200")]);
        assert_eq!(vals("between nine hundred and one thousand eight hundred"), [d("900"), d("1800")]);
        assert_eq!(vals("between three hundred and fifty and four hundred"), [d("350"), d("400")]);
    }

    #[test]
    fn word_phrases_with_units() {
        let m = one("more than three hundred and thirty thousand dollars in aid");
        assert_eq!(m.value, d("330000"));
        assert_eq!(m.category, EntityCategory::Money);
        let m = one("only about thirteen thousand, two hundred dollars per case");
        assert_eq!(m.value, d("13200"));
        let m = one("We see a quarter-billion dollars in a fund");
        assert_eq!(m.value, d("250000000"));
        assert_eq!(m.surface, "a quarter-billion dollars");
        let m = one("The tower is three hundred and fifty-one meters tall.");
        assert_eq!(m.value, d("351"));
        // trailing "and" that does not continue the number stays outside
        let m = one("five hundred and counting");
        assert_eq!(m.surface, "five hundred");
    }

    #[test]
    fn shape_reassembles_surface() {
        for text in [
            "$1.2 billion",
            "-2.9%",
            "31.4-percent",
            "5,000,000 dollars",
            "Jan. 12, 2017",
            "3rd",
            "fifty million",
        ] {
            let m = one(text);
            let s = &m.shape;
            let scale = s.scale.as_ref().map(|x| x.text.as_str()).unwrap_or("");
            assert_eq!(format!("{}{}{}{}", s.lead, s.body, scale, s.tail), m.surface);
        }
    }

    #[test]
    fn spans_index_characters_not_bytes() {
        let text = "Le coût était de €1,500 · voilà 25 percent";
        let ms = detect_mentions(text);
        let chars: Vec<char> = text.chars().collect();
        for m in &ms {
            let s: String = chars[m.start..m.end].iter().collect();
            assert_eq!(s, m.surface);
            assert_eq!(&text[byte_range(text, m.start, m.end)], m.surface);
        }
        assert_eq!(ms[0].category, EntityCategory::Money);
    }

    #[test]
    fn rewrite_helper() {
        let t = "a 12 b 4% c";
        let ms = detect_mentions(t);
        let edits: Vec<_> = ms
            .iter()
            .map(|m| (m.start, m.end, m.surface.clone()))
            .collect();
        assert_eq!(rewrite_spans(t, &edits), t);
        let edits = vec![(2, 4, "twelve".to_string())];
        assert_eq!(rewrite_spans(t, &edits), "a twelve b 4% c");
    }
}
