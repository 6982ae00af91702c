//! The six numeric perturbation operators and the label-transition rule.
//!
//! Every operator is a pure function of `(claim, mentions, mode, rng)`. The
//! rng for one probe is ChaCha8 seeded from [`probe_seed`], so any probe can
//! be replayed from its stored seed.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{ClaimEvidencePair, Corpus, VeracityLabel};
use crate::numparse::{
    conversational_digits, default_digits, detect_mentions, format_number, number_to_words,
    ordinal_suffix, ordinal_words, rewrite_spans, EntityCategory, NumeralKind, NumericMention,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PerturbationType {
    Num,
    Approx,
    Range,
    Mask,
    RandRepl,
    NegNum,
}

impl PerturbationType {
    pub const ALL: [PerturbationType; 6] = [
        PerturbationType::Num,
        PerturbationType::Approx,
        PerturbationType::Range,
        PerturbationType::Mask,
        PerturbationType::RandRepl,
        PerturbationType::NegNum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PerturbationType::Num => "Num",
            PerturbationType::Approx => "Approx",
            PerturbationType::Range => "Range",
            PerturbationType::Mask => "Mask",
            PerturbationType::RandRepl => "RandRepl",
            PerturbationType::NegNum => "NegNum",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            PerturbationType::RandRepl => "Rand-Repl",
            PerturbationType::NegNum => "Neg-Num",
            other => other.as_str(),
        }
    }

    /// Long name used in token-length tables.
    pub fn long_name(self) -> &'static str {
        match self {
            PerturbationType::Num => "Numeration",
            PerturbationType::Approx => "Approximation",
            PerturbationType::Range => "Range",
            PerturbationType::Mask => "Masking",
            PerturbationType::RandRepl => "Random Replacement",
            PerturbationType::NegNum => "Negative Number",
        }
    }

    /// Whether a True claim can keep its label under this operator.
    pub fn admits_preserve_on_true(self) -> bool {
        matches!(
            self,
            PerturbationType::Num | PerturbationType::Approx | PerturbationType::Range
        )
    }

    /// Modes generated for every pair. False pairs stay False in both.
    pub fn modes(self) -> &'static [PerturbMode] {
        if self.admits_preserve_on_true() {
            &[PerturbMode::Preserve, PerturbMode::Flip]
        } else {
            &[PerturbMode::Flip]
        }
    }
}

impl fmt::Display for PerturbationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
#[error("unknown perturbation type {0:?} (expected num, approx, range, mask, randrepl, negnum)")]
pub struct UnknownPerturbationType(pub String);

impl FromStr for PerturbationType {
    type Err = UnknownPerturbationType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        Ok(match key.as_str() {
            "num" | "numeration" => PerturbationType::Num,
            "approx" | "approximation" => PerturbationType::Approx,
            "range" => PerturbationType::Range,
            "mask" | "masking" => PerturbationType::Mask,
            "randrepl" | "randomreplacement" => PerturbationType::RandRepl,
            "negnum" | "negativenumber" => PerturbationType::NegNum,
            _ => return Err(UnknownPerturbationType(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PerturbMode {
    Preserve,
    Flip,
}

impl PerturbMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PerturbMode::Preserve => "Preserve",
            PerturbMode::Flip => "Flip",
        }
    }
}

impl fmt::Display for PerturbMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PerturbMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "preserve" => Ok(PerturbMode::Preserve),
            "flip" => Ok(PerturbMode::Flip),
            _ => Err(format!("unknown mode {s:?} (expected preserve or flip)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReviewStatus {
    #[default]
    Pending,
    Accepted,
    Rejected,
}

/// One rewritten mention. Offsets refer to the original claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TouchedSpan {
    pub start: usize,
    pub end: usize,
    pub original: String,
    pub replacement: String,
    /// Realized Approx-Flip factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<Decimal>,
    /// Range-Flip direction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<RangeDirection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeDirection {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbedClaim {
    pub origin_id: String,
    pub ptype: PerturbationType,
    pub mode: PerturbMode,
    pub text: String,
    pub expected_label: VeracityLabel,
    pub seed: u64,
    pub touched: Vec<TouchedSpan>,
    #[serde(default)]
    pub review_status: ReviewStatus,
}

impl PerturbedClaim {
    /// Stable reference used by the review service and run ledger.
    pub fn probe_ref(&self) -> String {
        probe_ref(&self.origin_id, self.ptype, self.mode)
    }
}

pub fn probe_ref(origin_id: &str, ptype: PerturbationType, mode: PerturbMode) -> String {
    format!("{origin_id}:{ptype}:{mode}")
}

/// Result of an operator before it is attached to a pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewrite {
    pub text: String,
    pub touched: Vec<TouchedSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkipReason {
    #[error("no eligible mention")]
    NoEligibleMention,
    #[error("no flip factor moves the rounded value")]
    FactorsExhausted,
    #[error("no mention could be rewritten")]
    NothingRewritten,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerturbError {
    #[error("{ptype}/{mode} is not admissible for a {label} claim")]
    Inadmissible {
        label: VeracityLabel,
        ptype: PerturbationType,
        mode: PerturbMode,
    },
    #[error("skipped: {0}")]
    Skip(#[from] SkipReason),
}

/// Expected label after perturbing a claim with `original` label.
pub fn transition_label(
    original: VeracityLabel,
    ptype: PerturbationType,
    mode: PerturbMode,
) -> Result<VeracityLabel, PerturbError> {
    match (original, mode) {
        (VeracityLabel::True, PerturbMode::Preserve) if !ptype.admits_preserve_on_true() => {
            Err(PerturbError::Inadmissible {
                label: original,
                ptype,
                mode,
            })
        }
        (VeracityLabel::True, PerturbMode::Preserve) => Ok(VeracityLabel::True),
        (VeracityLabel::True, PerturbMode::Flip) => Ok(VeracityLabel::False),
        (VeracityLabel::False, _) => Ok(VeracityLabel::False),
    }
}

pub fn is_eligible(m: &NumericMention, ptype: PerturbationType) -> bool {
    let quantity = match m.category {
        EntityCategory::Cardinal | EntityCategory::Percent | EntityCategory::Money => true,
        EntityCategory::Time => m.shape.kind == NumeralKind::Quantity,
        _ => false,
    };
    match ptype {
        PerturbationType::Num | PerturbationType::Mask | PerturbationType::RandRepl => quantity,
        PerturbationType::Approx => {
            quantity
                || (m.category == EntityCategory::Date && m.shape.kind == NumeralKind::Year)
        }
        PerturbationType::Range => quantity || m.category == EntityCategory::Ordinal,
        PerturbationType::NegNum => m.category == EntityCategory::Percent,
    }
}

pub fn eligible_mentions(mentions: &[NumericMention], ptype: PerturbationType) -> Vec<&NumericMention> {
    mentions.iter().filter(|m| is_eligible(m, ptype)).collect()
}

/// Per-probe seed derived from the run seed, pair id and operator.
pub fn probe_seed(global_seed: u64, origin_id: &str, ptype: PerturbationType) -> u64 {
    let mut h = Sha256::new();
    h.update(global_seed.to_le_bytes());
    h.update([0x1f]);
    h.update(origin_id.as_bytes());
    h.update([0x1f]);
    h.update(ptype.as_str().as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

// ---------------------------------------------------------------------------
// rounding

fn round_to(v: Decimal, step: Decimal) -> Decimal {
    (v / step).round_dp_with_strategy(0, RoundingStrategy::MidpointAwayFromZero) * step
}

fn round_int(v: Decimal) -> Decimal {
    v.round_dp_with_strategy(0, RoundingStrategy::MidpointAwayFromZero)
}

fn is_integral(v: Decimal) -> bool {
    v.fract().is_zero()
}

/// Rounding step for a magnitude, or `None` when the value stays exact.
fn band_step(a: Decimal, category: EntityCategory) -> Option<Decimal> {
    let ten = Decimal::TEN;
    match category {
        EntityCategory::Date => Some(ten),
        EntityCategory::Percent | EntityCategory::Time => {
            if a < ten {
                None
            } else if a < Decimal::from(1000) {
                Some(ten)
            } else {
                Some(Decimal::ONE_HUNDRED)
            }
        }
        _ => {
            if a < ten {
                None
            } else if a < Decimal::from(1000) {
                Some(ten)
            } else if a < Decimal::from(100_000) {
                Some(Decimal::ONE_HUNDRED)
            } else if a < Decimal::from(1_000_000) {
                Some(Decimal::ONE_THOUSAND)
            } else {
                Some(Decimal::from(100_000))
            }
        }
    }
}

/// Conversational rounding: small fractional values to the nearest 0.5,
/// otherwise to a magnitude band of the category. Ties go away from zero.
pub fn conversational_round(value: Decimal, category: EntityCategory) -> Decimal {
    let a = value.abs();
    let r = if a < Decimal::TEN && !is_integral(a) {
        round_to(a, Decimal::new(5, 1))
    } else {
        match band_step(a, category) {
            Some(step) => round_to(a, step),
            None => a,
        }
    };
    let r = r.normalize();
    if value.is_sign_negative() {
        -r
    } else {
        r
    }
}

/// Step used to widen a range that rounding pushed off its value.
fn widen_step(a: Decimal, category: EntityCategory) -> Decimal {
    if a < Decimal::TEN && !is_integral(a) {
        Decimal::new(5, 1)
    } else {
        band_step(a, category).unwrap_or(Decimal::ONE)
    }
}

// ---------------------------------------------------------------------------
// rendering

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Form {
    /// Digits styled like the original body.
    Digits,
    /// Digits for "about X" / "between X and Y".
    Conversational,
    Words,
}

fn symbol_word(c: char) -> &'static str {
    match c {
        '€' => "euros",
        '£' => "pounds",
        '¥' => "yen",
        '₹' => "rupees",
        _ => "dollars",
    }
}

fn has_word_unit(tail: &str) -> bool {
    tail.chars().any(char::is_alphabetic)
}

fn strip_sign(lead: &str) -> &str {
    lead.trim_start_matches(['-', '\u{2212}'])
}

/// The value of a mention in the space where rounding and range arithmetic
/// happen: the mantissa when a scale word is present, else the value.
fn working_value(m: &NumericMention) -> Decimal {
    match &m.shape.scale {
        Some(s) => m.value / s.factor,
        None => m.value,
    }
}

fn full_value(m: &NumericMention, w: Decimal) -> Decimal {
    match &m.shape.scale {
        Some(s) => w * s.factor,
        None => w,
    }
}

/// Render `w` (in working space) in the shape of mention `m`.
///
/// With `with_word_unit == false` a word unit is left off, so it can be
/// stated once after a range; currency symbols, "%" and scale words stay.
fn render(m: &NumericMention, w: Decimal, form: Form, with_word_unit: bool) -> Option<String> {
    let neg = w.is_sign_negative() && !w.is_zero();
    let a = w.abs().normalize();
    let shape = &m.shape;
    let ordinal = shape.kind == NumeralKind::Ordinal;
    let tail = shape.tail.as_str();
    let mut out = String::new();

    if form == Form::Words {
        let full = full_value(m, a).normalize();
        if neg {
            out.push_str("minus ");
        }
        if ordinal {
            let n: u64 = full.try_into().ok()?;
            out.push_str(&ordinal_words(n).ok()?);
            return Some(out);
        }
        out.push_str(&number_to_words(full).ok()?);
        if !with_word_unit {
            return Some(out);
        }
        let pct = tail.trim_start() == "%" || tail.starts_with('%');
        if pct {
            out.push_str(" percent");
        } else if let Some(c) = shape.currency_symbol() {
            if has_word_unit(tail) {
                out.push_str(tail);
            } else {
                out.push(' ');
                out.push_str(symbol_word(c));
            }
        } else {
            out.push_str(tail);
        }
        return Some(out);
    }

    if ordinal {
        let n: u64 = a.try_into().ok()?;
        if neg {
            return None;
        }
        return Some(format!("{n}{}", ordinal_suffix(n)));
    }
    let digits = match (form, m.is_word_form) {
        (Form::Conversational, false) => conversational_digits(a, &shape.body),
        (Form::Conversational, true) => conversational_digits(a, "10,000"),
        (_, false) => format_number(a, &shape.body),
        (_, true) => default_digits(a),
    };
    if neg {
        out.push('-');
    }
    if !m.is_word_form {
        out.push_str(strip_sign(&shape.lead));
    }
    out.push_str(&digits);
    if let Some(s) = &shape.scale {
        out.push_str(&s.text);
    }
    if with_word_unit || !has_word_unit(tail) {
        out.push_str(tail);
    }
    Some(out)
}

fn preceding_word(chars: &[char], start: usize) -> String {
    let mut i = start;
    while i > 0 && chars[i - 1].is_whitespace() {
        i -= 1;
    }
    let end = i;
    while i > 0 && (chars[i - 1].is_alphabetic() || chars[i - 1] == '~') {
        i -= 1;
    }
    chars[i..end].iter().collect::<String>().to_lowercase()
}

const APPROXIMATORS: [&str; 12] = [
    "about",
    "around",
    "approximately",
    "roughly",
    "nearly",
    "almost",
    "circa",
    "some",
    "estimated",
    "approx",
    "~",
    "ca",
];

/// Start of a hedge word ("about", "nearly") right before `start`.
fn hedge_start(chars: &[char], start: usize) -> Option<usize> {
    let mut i = start;
    while i > 0 && chars[i - 1].is_whitespace() {
        i -= 1;
    }
    let end = i;
    while i > 0 && (chars[i - 1].is_alphabetic() || chars[i - 1] == '~') {
        i -= 1;
    }
    let word: String = chars[i..end].iter().collect::<String>().to_lowercase();
    (i < end && APPROXIMATORS.contains(&word.as_str())).then_some(i)
}

/// Widen a span over a preceding hedge word, which a range replaces.
fn absorb_hedge(chars: &[char], t: &mut TouchedSpan) {
    let Some(i) = hedge_start(chars, t.start) else { return };
    if chars[i].is_uppercase() {
        let mut cs = t.replacement.chars();
        if let Some(first) = cs.next() {
            t.replacement = first.to_uppercase().chain(cs).collect();
        }
    }
    t.start = i;
    t.original = chars[i..t.end].iter().collect();
}

fn touched(m: &NumericMention, replacement: String) -> TouchedSpan {
    TouchedSpan {
        start: m.start,
        end: m.end,
        original: m.surface.clone(),
        replacement,
        factor: None,
        direction: None,
    }
}

fn finish(claim: &str, spans: Vec<TouchedSpan>) -> Result<Rewrite, SkipReason> {
    let spans: Vec<TouchedSpan> = spans
        .into_iter()
        .filter(|s| s.replacement != s.original)
        .collect();
    if spans.is_empty() {
        return Err(SkipReason::NothingRewritten);
    }
    let edits: Vec<(usize, usize, String)> = spans
        .iter()
        .map(|s| (s.start, s.end, s.replacement.clone()))
        .collect();
    let text = rewrite_spans(claim, &edits);
    if text == claim {
        return Err(SkipReason::NothingRewritten);
    }
    Ok(Rewrite {
        text,
        touched: spans,
    })
}

fn targets(mentions: &[NumericMention], ptype: PerturbationType) -> Result<Vec<&NumericMention>, SkipReason> {
    let e = eligible_mentions(mentions, ptype);
    if e.is_empty() {
        Err(SkipReason::NoEligibleMention)
    } else {
        Ok(e)
    }
}

// ---------------------------------------------------------------------------
// operators

/// Digits and words swap form. Flip scales the value by 1.1 and spells it.
pub fn numeration(
    claim: &str,
    mentions: &[NumericMention],
    mode: PerturbMode,
) -> Result<Rewrite, SkipReason> {
    let ms = targets(mentions, PerturbationType::Num)?;
    let mut spans = Vec::new();
    for m in ms {
        let w = working_value(m);
        let rep = match mode {
            PerturbMode::Preserve => {
                let form = if m.is_word_form { Form::Digits } else { Form::Words };
                render(m, w, form, true)
            }
            PerturbMode::Flip => {
                let mut v = m.value * Decimal::new(11, 1);
                if is_integral(m.value) {
                    v = round_int(v);
                    if v == m.value {
                        v += if m.value.is_sign_negative() {
                            -Decimal::ONE
                        } else {
                            Decimal::ONE
                        };
                    }
                } else {
                    v = v.round_dp_with_strategy(3, RoundingStrategy::MidpointAwayFromZero);
                }
                let nw = match &m.shape.scale {
                    Some(s) => v / s.factor,
                    None => v,
                };
                render(m, nw, Form::Words, true)
            }
        };
        if let Some(r) = rep {
            spans.push(touched(m, r));
        }
    }
    finish(claim, spans)
}

pub const FLIP_FACTORS: [Decimal; 4] = [
    Decimal::from_parts(5, 0, 0, false, 1),
    Decimal::from_parts(6, 0, 0, false, 1),
    Decimal::from_parts(14, 0, 0, false, 1),
    Decimal::from_parts(15, 0, 0, false, 1),
];

/// Round and prefix "about". Flip first scales by a random factor from
/// [`FLIP_FACTORS`], retrying factors whose result rounds to the same value.
pub fn approximate<R: Rng + ?Sized>(
    claim: &str,
    mentions: &[NumericMention],
    mode: PerturbMode,
    rng: &mut R,
) -> Result<Rewrite, SkipReason> {
    let ms = targets(mentions, PerturbationType::Approx)?;
    let chars: Vec<char> = claim.chars().collect();
    let mut spans = Vec::new();
    let mut exhausted = false;
    for m in ms {
        let w = working_value(m);
        let cat = m.category;
        let base = conversational_round(w, cat);
        let year = cat == EntityCategory::Date;
        let (target, factor) = match mode {
            PerturbMode::Preserve => (base, None),
            PerturbMode::Flip if year => (base, None),
            PerturbMode::Flip => {
                let mut fs = FLIP_FACTORS;
                fs.shuffle(rng);
                match fs
                    .iter()
                    .map(|f| (conversational_round(w * f, cat), *f))
                    .find(|(r, _)| *r != base)
                {
                    Some((r, f)) => (r, Some(f)),
                    None => {
                        exhausted = true;
                        continue;
                    }
                }
            }
        };
        let form = if m.is_word_form {
            Form::Words
        } else {
            Form::Conversational
        };
        let Some(body) = render(m, target, form, true) else {
            continue;
        };
        let prefixed = APPROXIMATORS.contains(&preceding_word(&chars, m.start).as_str());
        let rep = if prefixed { body } else { format!("about {body}") };
        let mut t = touched(m, rep);
        t.factor = factor;
        spans.push(t);
    }
    if mode == PerturbMode::Flip && !spans.iter().any(|t| t.factor.is_some()) {
        return Err(if exhausted {
            SkipReason::FactorsExhausted
        } else {
            SkipReason::NoEligibleMention
        });
    }
    match finish(claim, spans) {
        Err(SkipReason::NothingRewritten) if exhausted => Err(SkipReason::FactorsExhausted),
        r => r,
    }
}

/// Mentions that are already an endpoint of a stated range.
fn range_endpoints(claim: &str, mentions: &[NumericMention]) -> HashSet<usize> {
    let chars: Vec<char> = claim.chars().collect();
    let mut out = HashSet::new();
    for (i, m) in mentions.iter().enumerate() {
        let pw = preceding_word(&chars, m.start);
        if pw == "between" || pw == "from" {
            out.insert(i);
        }
        if let Some(next) = mentions.get(i + 1) {
            let gap: String = chars[m.end..next.start].iter().collect();
            let gap = gap.trim().to_lowercase();
            if gap == "to" || gap == "-" || gap == "\u{2013}" || (gap == "and" && out.contains(&i)) {
                out.insert(i);
                out.insert(i + 1);
            }
        }
    }
    out
}

fn range_text(m: &NumericMention, lo: Decimal, hi: Decimal) -> Option<String> {
    let form = if m.is_word_form {
        Form::Words
    } else {
        Form::Conversational
    };
    let a = render(m, lo, form, false)?;
    let mut b = render(m, hi, form, true)?;
    // "31.4-percent" reads "between 30 and 40 percent"
    let tail = &m.shape.tail;
    if tail.starts_with('-') && has_word_unit(tail) && b.ends_with(tail.as_str()) {
        b.truncate(b.len() - tail.len());
        b.push(' ');
        b.push_str(&tail[1..]);
    }
    Some(format!("between {a} and {b}"))
}

fn sorted(a: Decimal, b: Decimal) -> (Decimal, Decimal) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Replace each value with a span: around it (Preserve) or strictly
/// beside it (Flip, direction drawn from the rng).
pub fn rangeify<R: Rng + ?Sized>(
    claim: &str,
    mentions: &[NumericMention],
    mode: PerturbMode,
    rng: &mut R,
) -> Result<Rewrite, SkipReason> {
    targets(mentions, PerturbationType::Range)?;
    let inside_ranges = range_endpoints(claim, mentions);
    let ms: Vec<&NumericMention> = mentions
        .iter()
        .enumerate()
        .filter(|(i, m)| is_eligible(m, PerturbationType::Range) && !inside_ranges.contains(i))
        .map(|(_, m)| m)
        .collect();
    if ms.is_empty() {
        return Err(SkipReason::NoEligibleMention);
    }
    let chars: Vec<char> = claim.chars().collect();
    let mut spans = Vec::new();
    for m in ms {
        let v = working_value(m);
        let cat = m.category;
        let ordinal = m.shape.kind == NumeralKind::Ordinal;
        let cr = |x: Decimal| conversational_round(x, cat);
        let pct = |n: i64| Decimal::new(n, 1);
        let mut direction = None;
        let bounds = match (mode, ordinal) {
            (PerturbMode::Preserve, true) => {
                Some(((v - Decimal::ONE).max(Decimal::ONE), v + Decimal::ONE))
            }
            (PerturbMode::Flip, true) => {
                let up = rng.random_bool(0.5) || v - Decimal::from(4) < Decimal::ONE;
                direction = Some(if up { RangeDirection::Up } else { RangeDirection::Down });
                if up {
                    Some((v + Decimal::TWO, v + Decimal::from(4)))
                } else {
                    Some((v - Decimal::from(4), v - Decimal::TWO))
                }
            }
            (PerturbMode::Preserve, false) => {
                let (mut lo, mut hi) = sorted(cr(v * pct(9)), cr(v * pct(11)));
                let step = widen_step(v.abs(), cat);
                if v < lo {
                    lo -= step;
                }
                if v > hi {
                    hi += step;
                }
                let (l, h) = sorted(v * pct(9), v * pct(11));
                if is_integral(v) && !(is_integral(lo) && is_integral(hi)) && l.floor() < h.ceil() {
                    (lo, hi) = (l.floor(), h.ceil());
                }
                if lo >= hi {
                    lo = l.normalize();
                    hi = h.normalize();
                }
                (lo < hi && lo <= v && v <= hi).then_some((lo, hi))
            }
            (PerturbMode::Flip, false) => {
                let up = rng.random_bool(0.5);
                direction = Some(if up { RangeDirection::Up } else { RangeDirection::Down });
                let (fa, fb) = if up { (pct(12), pct(16)) } else { (pct(4), pct(8)) };
                let outside = |lo: Decimal, hi: Decimal| lo < hi && (v < lo || v > hi);
                let (lo, hi) = sorted(cr(v * fa), cr(v * fb));
                let (rlo, rhi) = sorted(v * fa, v * fb);
                let (ilo, ihi) = (rlo.ceil(), rhi.floor());
                let whole = is_integral(v);
                if outside(lo, hi) && (!whole || (is_integral(lo) && is_integral(hi))) {
                    Some((lo, hi))
                } else if whole && outside(ilo, ihi) {
                    Some((ilo, ihi))
                } else {
                    let dp = v.normalize().scale();
                    let (dlo, dhi) = (rlo.round_dp(dp), rhi.round_dp(dp));
                    if outside(dlo, dhi) {
                        Some((dlo.normalize(), dhi.normalize()))
                    } else {
                        outside(rlo, rhi).then(|| (rlo.normalize(), rhi.normalize()))
                    }
                }
            }
        };
        let Some((lo, hi)) = bounds else { continue };
        let Some(rep) = range_text(m, lo, hi) else {
            continue;
        };
        let mut t = touched(m, rep);
        t.direction = direction;
        absorb_hedge(&chars, &mut t);
        spans.push(t);
    }
    finish(claim, spans)
}

fn random_digits<R: Rng + ?Sized>(body: &str, rng: &mut R) -> String {
    let int_len = body.chars().take_while(|c| *c != '.').filter(char::is_ascii_digit).count();
    let zero_int = body.split('.').next() == Some("0");
    let mut seen_first = false;
    body.chars()
        .map(|c| {
            if !c.is_ascii_digit() {
                return c;
            }
            let first = !seen_first;
            seen_first = true;
            if first && int_len > 0 && !zero_int {
                char::from(b'0' + rng.random_range(1..=9u8))
            } else if first && zero_int {
                '0'
            } else {
                char::from(b'0' + rng.random_range(0..=9u8))
            }
        })
        .collect()
}

/// Replace each value with random digits of the same length, keeping
/// delimiters, currency symbols and units.
pub fn random_replace<R: Rng + ?Sized>(
    claim: &str,
    mentions: &[NumericMention],
    rng: &mut R,
) -> Result<Rewrite, SkipReason> {
    let ms = targets(mentions, PerturbationType::RandRepl)?;
    let mut spans = Vec::new();
    for m in ms {
        let shape = &m.shape;
        let rep = if m.is_word_form {
            let int = m.value.abs().trunc();
            let n_digits = int.to_string().trim_start_matches('-').len().max(1) as u32;
            let lo = if n_digits == 1 { 1 } else { 10u64.pow(n_digits - 1) };
            let hi = 10u64.pow(n_digits) - 1;
            let mut drawn;
            loop {
                drawn = rng.random_range(lo..=hi);
                if Decimal::from(drawn) != m.value.abs() {
                    break;
                }
            }
            render(m, Decimal::from(drawn), Form::Words, true)
        } else {
            let mut body;
            let mut tries = 0;
            loop {
                body = random_digits(&shape.body, rng);
                tries += 1;
                if body != shape.body || tries > 64 {
                    break;
                }
            }
            (body != shape.body).then(|| {
                let scale = shape.scale.as_ref().map(|s| s.text.as_str()).unwrap_or("");
                format!("{}{body}{scale}{}", shape.lead, shape.tail)
            })
        };
        if let Some(r) = rep {
            spans.push(touched(m, r));
        }
    }
    finish(claim, spans)
}

fn hash_out(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_digit() || c == ',' || c == '.' { '#' } else { c })
        .collect()
}

/// Replace every digit and delimiter of each value with '#'.
/// Spelled-out values are first written as grouped digits.
pub fn mask(claim: &str, mentions: &[NumericMention]) -> Result<Rewrite, SkipReason> {
    let ms = targets(mentions, PerturbationType::Mask)?;
    let mut spans = Vec::new();
    for m in ms {
        let shape = &m.shape;
        let rep = if m.is_word_form {
            let digits = default_digits(m.value.abs());
            let lead = if m.value.is_sign_negative() { "-" } else { "" };
            format!("{lead}{}{}", hash_out(&digits), shape.tail)
        } else {
            let scale = shape.scale.as_ref().map(|s| s.text.as_str()).unwrap_or("");
            format!("{}{}{scale}{}", shape.lead, hash_out(&shape.body), shape.tail)
        };
        spans.push(touched(m, rep));
    }
    finish(claim, spans)
}

/// Negate each percentage.
pub fn negate(claim: &str, mentions: &[NumericMention]) -> Result<Rewrite, SkipReason> {
    let ms = targets(mentions, PerturbationType::NegNum)?;
    let mut spans = Vec::new();
    for m in ms {
        let s = &m.surface;
        let rep = if m.is_word_form {
            let lower = s.to_lowercase();
            if let Some(rest) = ["minus ", "negative "]
                .iter()
                .find_map(|p| lower.starts_with(p).then(|| &s[p.len()..]))
            {
                rest.to_string()
            } else {
                format!("minus {s}")
            }
        } else if m.shape.is_negative() {
            s.trim_start_matches(['-', '\u{2212}']).to_string()
        } else {
            format!("-{s}")
        };
        spans.push(touched(m, rep));
    }
    finish(claim, spans)
}

/// Run one operator with the rng seeded from `seed`.
pub fn perturb(
    claim: &str,
    mentions: &[NumericMention],
    ptype: PerturbationType,
    mode: PerturbMode,
    seed: u64,
) -> Result<Rewrite, SkipReason> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match ptype {
        PerturbationType::Num => numeration(claim, mentions, mode),
        PerturbationType::Approx => approximate(claim, mentions, mode, &mut rng),
        PerturbationType::Range => rangeify(claim, mentions, mode, &mut rng),
        PerturbationType::Mask => mask(claim, mentions),
        PerturbationType::RandRepl => random_replace(claim, mentions, &mut rng),
        PerturbationType::NegNum => negate(claim, mentions),
    }
}

/// Perturb one pair into a probe.
pub fn apply(
    pair: &ClaimEvidencePair,
    mentions: &[NumericMention],
    ptype: PerturbationType,
    mode: PerturbMode,
    seed: u64,
) -> Result<PerturbedClaim, PerturbError> {
    let expected_label = transition_label(pair.label, ptype, mode)?;
    let rw = perturb(&pair.claim, mentions, ptype, mode, seed)?;
    Ok(PerturbedClaim {
        origin_id: pair.id.clone(),
        ptype,
        mode,
        text: rw.text,
        expected_label,
        seed,
        touched: rw.touched,
        review_status: ReviewStatus::Pending,
    })
}

/// Re-run the operator of `probe` against its original claim.
pub fn replay(original_claim: &str, probe: &PerturbedClaim) -> Result<String, SkipReason> {
    let mentions = detect_mentions(original_claim);
    perturb(original_claim, &mentions, probe.ptype, probe.mode, probe.seed).map(|r| r.text)
}

// ---------------------------------------------------------------------------
// suites

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub origin_id: String,
    pub ptype: PerturbationType,
    pub mode: PerturbMode,
    pub reason: String,
}

/// Per-operator probe counts in the transition-matrix layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub ptype: PerturbationType,
    /// `None` where a True claim cannot keep its label.
    pub t_to_t: Option<usize>,
    /// Distinct False claims with at least one probe.
    pub f_to_f: usize,
    pub t_to_f: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCounts {
    pub rows: Vec<TransitionRow>,
    pub baseline_true: usize,
    pub baseline_false: usize,
}

impl TransitionCounts {
    pub fn row(&self, ptype: PerturbationType) -> Option<&TransitionRow> {
        self.rows.iter().find(|r| r.ptype == ptype)
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<10} {:>6} {:>6} {:>6}\n",
            "Category", "T→T", "F→F", "T→F"
        );
        for r in &self.rows {
            let tt = r.t_to_t.map_or("✗".to_string(), |n| n.to_string());
            s.push_str(&format!(
                "{:<10} {:>6} {:>6} {:>6}\n",
                r.ptype.display_name(),
                tt,
                r.f_to_f,
                r.t_to_f
            ));
        }
        s.push_str(&format!(
            "Baseline: {} True, {} False\n",
            self.baseline_true, self.baseline_false
        ));
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suite {
    pub probes: Vec<PerturbedClaim>,
    pub counts: TransitionCounts,
    pub skipped: Vec<SkipRecord>,
}

pub fn transition_counts(
    corpus: &Corpus,
    ptypes: &[PerturbationType],
    probes: &[PerturbedClaim],
) -> TransitionCounts {
    let label_of = |id: &str| corpus.get(id).map(|p| p.label);
    let rows = ptypes
        .iter()
        .map(|&ptype| {
            let mut tt = 0;
            let mut tf = 0;
            let mut false_origins = HashSet::new();
            for p in probes.iter().filter(|p| p.ptype == ptype) {
                match (label_of(&p.origin_id), p.mode) {
                    (Some(VeracityLabel::True), PerturbMode::Preserve) => tt += 1,
                    (Some(VeracityLabel::True), PerturbMode::Flip) => tf += 1,
                    (Some(VeracityLabel::False), _) => {
                        false_origins.insert(p.origin_id.as_str());
                    }
                    (None, _) => {}
                }
            }
            TransitionRow {
                ptype,
                t_to_t: ptype.admits_preserve_on_true().then_some(tt),
                f_to_f: false_origins.len(),
                t_to_f: tf,
            }
        })
        .collect();
    let (t, f) = corpus.split_by_label();
    TransitionCounts {
        rows,
        baseline_true: t.len(),
        baseline_false: f.len(),
    }
}

/// Generate every admissible probe for every pair, ordered by
/// (origin id, operator, mode).
pub fn generate_suite(corpus: &Corpus, ptypes: &[PerturbationType], seed: u64) -> Suite {
    let per_pair: Vec<(Vec<PerturbedClaim>, Vec<SkipRecord>)> = corpus
        .pairs()
        .par_iter()
        .map(|pair| {
            let mentions = detect_mentions(&pair.claim);
            let mut probes = Vec::new();
            let mut skipped = Vec::new();
            for &ptype in ptypes {
                let s = probe_seed(seed, &pair.id, ptype);
                for &mode in ptype.modes() {
                    match apply(pair, &mentions, ptype, mode, s) {
                        Ok(p) => probes.push(p),
                        Err(e) => skipped.push(SkipRecord {
                            origin_id: pair.id.clone(),
                            ptype,
                            mode,
                            reason: e.to_string(),
                        }),
                    }
                }
            }
            (probes, skipped)
        })
        .collect();
    let mut probes = Vec::new();
    let mut skipped = Vec::new();
    for (p, s) in per_pair {
        probes.extend(p);
        skipped.extend(s);
    }
    probes.sort_by(|a, b| {
        (a.origin_id.as_str(), a.ptype, a.mode).cmp(&(b.origin_id.as_str(), b.ptype, b.mode))
    });
    skipped.sort_by(|a, b| {
        (a.origin_id.as_str(), a.ptype, a.mode).cmp(&(b.origin_id.as_str(), b.ptype, b.mode))
    });
    let counts = transition_counts(corpus, ptypes, &probes);
    Suite {
        probes,
        counts,
        skipped,
    }
}

pub fn write_probes<W: Write>(mut w: W, probes: &[PerturbedClaim]) -> std::io::Result<()> {
    for p in probes {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[derive(Debug, Error)]
pub enum ProbeReadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
}

pub fn read_probes<R: BufRead>(r: R) -> Result<Vec<PerturbedClaim>, ProbeReadError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| ProbeReadError::Parse {
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(out)
}
