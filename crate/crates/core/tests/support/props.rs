//! Claim generators and operator invariants shared by the property tests
//! and the acceptance suite.

#![allow(dead_code)]

use proptest::prelude::*;
use rust_decimal::Decimal;

use numprobe_core::numparse::{default_digits, detect_mentions, number_to_words, words_to_number};
use numprobe_core::perturb::{perturb, PerturbMode, PerturbationType, SkipReason, FLIP_FACTORS};

/// A one-number claim and what the generator knows about that number.
#[derive(Debug, Clone)]
pub struct GenClaim {
    pub claim: String,
    pub value: Decimal,
    /// Digit string a mask must hide, delimiters included.
    pub digits: String,
    pub word_form: bool,
}

fn grouped(n: u64) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn cardinal() -> impl Strategy<Value = GenClaim> {
    (1u64..10_000_000, any::<bool>()).prop_map(|(n, group)| {
        let s = if group { grouped(n) } else { n.to_string() };
        GenClaim {
            claim: format!("The survey counted {s} households."),
            value: Decimal::from(n),
            digits: s,
            word_form: false,
        }
    })
}

fn percent() -> impl Strategy<Value = GenClaim> {
    (1u64..1000, any::<bool>(), any::<bool>()).prop_map(|(n, decimal, sign)| {
        let (s, value) = if decimal && n % 10 != 0 {
            (format!("{}.{}", n / 10, n % 10), Decimal::new(n as i64, 1))
        } else {
            let v = n % 100 + 1;
            (v.to_string(), Decimal::from(v))
        };
        let unit = if sign { "%" } else { " percent" };
        GenClaim {
            claim: format!("Prices rose {s}{unit} over the period."),
            value,
            digits: s,
            word_form: false,
        }
    })
}

fn money() -> impl Strategy<Value = GenClaim> {
    prop_oneof![
        (1u64..10_000_000).prop_map(|n| {
            let s = grouped(n);
            GenClaim {
                claim: format!("The project cost ${s} in total."),
                value: Decimal::from(n),
                digits: s,
                word_form: false,
            }
        }),
        (1u64..1000).prop_map(|n| GenClaim {
            claim: format!("The project cost ${n} million in total."),
            value: Decimal::from(n * 1_000_000),
            digits: n.to_string(),
            word_form: false,
        }),
    ]
}

fn words() -> impl Strategy<Value = GenClaim> {
    (1u64..100_000).prop_map(|n| {
        let value = Decimal::from(n);
        GenClaim {
            claim: format!("The firm hired {} workers.", number_to_words(value).unwrap()),
            value,
            digits: default_digits(value),
            word_form: true,
        }
    })
}

pub fn claim_strategy() -> impl Strategy<Value = GenClaim> {
    prop_oneof![cardinal(), percent(), money(), words()]
}

fn one_span(g: &GenClaim, ptype: PerturbationType, mode: PerturbMode, seed: u64) -> Result<Option<(String, String, numprobe_core::perturb::TouchedSpan)>, String> {
    let ms = detect_mentions(&g.claim);
    if ms.len() != 1 || ms[0].value != g.value {
        return Err(format!("detector disagrees with generator on {:?}: {ms:?}", g.claim));
    }
    match perturb(&g.claim, &ms, ptype, mode, seed) {
        Ok(rw) => {
            if rw.touched.len() != 1 {
                return Err(format!("expected one touched span for {:?}", g.claim));
            }
            let t = rw.touched[0].clone();
            Ok(Some((rw.text, t.replacement.clone(), t)))
        }
        Err(SkipReason::NothingRewritten) | Err(SkipReason::FactorsExhausted) => Ok(None),
        Err(e) => Err(format!("{ptype} {mode} on {:?}: {e}", g.claim)),
    }
}

fn hashes(s: &str) -> usize {
    s.chars().filter(|c| *c == '#').count()
}

fn digit_count(s: &str) -> usize {
    s.chars().filter(char::is_ascii_digit).count()
}

/// Every digit and delimiter becomes '#', nothing else does.
pub fn check_mask(g: &GenClaim) -> Result<(), String> {
    let Some((text, rep, _)) = one_span(g, PerturbationType::Mask, PerturbMode::Flip, 0)? else {
        return Err(format!("mask skipped {:?}", g.claim));
    };
    let want = g.digits.chars().filter(|c| c.is_ascii_digit() || *c == ',' || *c == '.').count();
    if hashes(&rep) != want || digit_count(&text) != 0 {
        return Err(format!("mask of {:?} gave {text:?}; want {want} '#'", g.claim));
    }
    Ok(())
}

/// Same digit count, different value.
pub fn check_rand_repl(g: &GenClaim, seed: u64) -> Result<(), String> {
    let Some((_, rep, t)) = one_span(g, PerturbationType::RandRepl, PerturbMode::Flip, seed)? else {
        return Err(format!("rand-repl skipped {:?}", g.claim));
    };
    let ms = detect_mentions(&rep);
    let Some(m) = ms.first() else {
        return Err(format!("no number in replacement {rep:?}"));
    };
    if m.value == g.value {
        return Err(format!("rand-repl kept the value of {:?}", g.claim));
    }
    let same_len = if g.word_form {
        m.value.trunc().to_string().len() == g.value.trunc().to_string().len()
    } else {
        digit_count(&rep) == digit_count(&t.original)
    };
    if !same_len {
        return Err(format!("rand-repl changed digit count: {:?} -> {rep:?}", t.original));
    }
    Ok(())
}

/// Preserve spans contain the value; Flip spans exclude it strictly.
pub fn check_range(g: &GenClaim, mode: PerturbMode, seed: u64) -> Result<(), String> {
    let Some((_, rep, _)) = one_span(g, PerturbationType::Range, mode, seed)? else {
        return Ok(());
    };
    let vs: Vec<Decimal> = detect_mentions(&rep).iter().map(|m| m.value).collect();
    let [lo, hi] = vs[..] else {
        return Err(format!("range {rep:?} does not have two endpoints"));
    };
    let v = g.value;
    let ok = lo < hi
        && match mode {
            PerturbMode::Preserve => lo <= v && v <= hi,
            PerturbMode::Flip => v < lo || v > hi,
        };
    if !ok {
        return Err(format!("{mode} range for {v}: {rep:?}"));
    }
    Ok(())
}

pub fn check_approx_factor(g: &GenClaim, seed: u64) -> Result<(), String> {
    let Some((_, rep, t)) = one_span(g, PerturbationType::Approx, PerturbMode::Flip, seed)? else {
        return Ok(());
    };
    match t.factor {
        Some(f) if FLIP_FACTORS.contains(&f) => Ok(()),
        other => Err(format!("approx flip {rep:?} has factor {other:?}")),
    }
}

pub fn check_words_round_trip(n: u64) -> Result<(), String> {
    let v = Decimal::from(n);
    let w = number_to_words(v).map_err(|e| e.to_string())?;
    match words_to_number(&w) {
        Ok(back) if back == v => Ok(()),
        other => Err(format!("{n} -> {w:?} -> {other:?}")),
    }
}
