//! A deterministic stand-in for a model: compares claim numbers with
//! evidence numbers.

use rust_decimal::Decimal;

use numprobe_core::corpus::VeracityLabel;
use numprobe_core::numparse::{detect_mentions, NumericMention};

/// Relative tolerance for a numeric match: 0.5%.
const TOLERANCE: Decimal = Decimal::from_parts(5, 0, 0, false, 3);

fn close(a: Decimal, b: Decimal) -> bool {
    if a == b {
        return true;
    }
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= scale * TOLERANCE
}

fn word_before(chars: &[char], start: usize) -> String {
    let mut i = start;
    while i > 0 && chars[i - 1].is_whitespace() {
        i -= 1;
    }
    let end = i;
    while i > 0 && chars[i - 1].is_alphabetic() {
        i -= 1;
    }
    chars[i..end].iter().collect::<String>().to_lowercase()
}

/// Claim mentions grouped into single values and "between X and Y" spans.
fn claim_terms(claim: &str, ms: &[NumericMention]) -> Vec<(Decimal, Decimal)> {
    let chars: Vec<char> = claim.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < ms.len() {
        let a = &ms[i];
        if let Some(b) = ms.get(i + 1) {
            let opener = matches!(word_before(&chars, a.start).as_str(), "between" | "from");
            let gap: String = chars[a.end..b.start].iter().collect();
            let joiner = matches!(gap.trim(), "and" | "to" | "-" | "\u{2013}");
            if opener && joiner {
                let (lo, hi) = if a.value <= b.value {
                    (a.value, b.value)
                } else {
                    (b.value, a.value)
                };
                out.push((lo, hi));
                i += 2;
                continue;
            }
        }
        out.push((a.value, a.value));
        i += 1;
    }
    out
}

/// True iff every number in the claim is backed by the evidence: a single
/// value within 0.5% of some evidence value, a span containing one. Masked
/// claims are False; claims without numbers are True.
pub fn mock_oracle(claim: &str, evidence: &[String]) -> VeracityLabel {
    if claim.contains('#') {
        return VeracityLabel::False;
    }
    let ms = detect_mentions(claim);
    let ev: Vec<Decimal> = evidence
        .iter()
        .flat_map(|e| detect_mentions(e))
        .map(|m| m.value)
        .collect();
    let ok = claim_terms(claim, &ms).into_iter().all(|(lo, hi)| {
        if lo == hi {
            ev.iter().any(|e| close(*e, lo))
        } else {
            ev.iter().any(|e| lo <= *e && *e <= hi)
        }
    });
    VeracityLabel::from_bool(ok)
}
