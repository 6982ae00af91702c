//! Report arithmetic over run records: per-class accuracy, deltas against
//! the unperturbed baseline, invalid-output rates and token-length means.
//!
//! Percentages are computed exactly and rounded half away from zero to two
//! decimals only for presentation. Deltas are taken between the exact
//! accuracies, then rounded.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::Write;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};

use crate::corpus::VeracityLabel;
use crate::ledger::{Outcome, RunRecord};
use crate::perturb::{PerturbMode, PerturbationType};
use crate::prompts::PromptRegime;

pub fn round_dp(v: Decimal, dp: u32) -> Decimal {
    v.round_dp_with_strategy(dp, RoundingStrategy::MidpointAwayFromZero)
}

/// `100 * num / den`, unrounded. `None` when `den == 0`.
pub fn percentage(num: u64, den: u64) -> Option<Decimal> {
    (den > 0).then(|| Decimal::from(num) * Decimal::ONE_HUNDRED / Decimal::from(den))
}

/// Two-decimal rendering, "-" for undefined.
pub fn fmt_pct(v: Option<Decimal>) -> String {
    match v {
        Some(v) => format!("{:.2}", round_dp(v, 2)),
        None => "-".to_string(),
    }
}

pub fn fmt_delta(v: Option<Decimal>) -> String {
    match v {
        Some(v) => {
            let r = round_dp(v, 2);
            if r.is_sign_negative() && !r.is_zero() {
                format!("{r:.2}")
            } else {
                format!("+{:.2}", r.abs())
            }
        }
        None => "-".to_string(),
    }
}

/// Signed difference `perturbed − baseline`, rounded to two decimals.
pub fn delta_pct(perturbed: Decimal, baseline: Decimal) -> Decimal {
    round_dp(perturbed - baseline, 2)
}

/// Outcome counts for a set of records.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub total: u64,
    pub correct: u64,
    pub wrong: u64,
    pub invalid: u64,
    pub transport: u64,
    /// First responses that were invalid, before the re-ask.
    pub raw_invalid: u64,
}

impl Tally {
    pub fn add(&mut self, r: &RunRecord) {
        self.total += 1;
        match r.outcome() {
            Outcome::Correct => self.correct += 1,
            Outcome::Wrong => self.wrong += 1,
            Outcome::Invalid => self.invalid += 1,
            Outcome::TransportFailure => self.transport += 1,
        }
        if r.verdict.as_ref().is_some_and(|v| v.raw_invalid || v.invalid) {
            self.raw_invalid += 1;
        }
    }

    pub fn of<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> Self {
        let mut t = Tally::default();
        for r in records {
            t.add(r);
        }
        t
    }

    /// Records that reached the model and came back.
    pub fn answered(&self) -> u64 {
        self.total - self.transport
    }

    /// Exact accuracy over valid verdicts.
    pub fn accuracy(&self) -> Option<Decimal> {
        percentage(self.correct, self.correct + self.wrong)
    }

    /// Exact accuracy counting invalid verdicts as wrong.
    pub fn accuracy_with_invalid(&self) -> Option<Decimal> {
        percentage(self.correct, self.answered())
    }
}

/// Accuracy on records whose expected label is `class`, two decimals.
pub fn per_class_accuracy(records: &[RunRecord], class: VeracityLabel) -> Option<Decimal> {
    Tally::of(records.iter().filter(|r| r.expected == class))
        .accuracy()
        .map(|v| round_dp(v, 2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvalidRate {
    pub total_n: u64,
    pub invalid_n: u64,
    pub raw_invalid_n: u64,
    pub transport_n: u64,
    /// Post-retry rate, two decimals; 0 when `total_n == 0`.
    pub pct: Decimal,
    pub raw_pct: Decimal,
}

/// `100 × invalid / total`, two decimals, 0 for an empty set.
pub fn invalid_pct(invalid: u64, total: u64) -> Decimal {
    percentage(invalid, total).map_or(Decimal::ZERO, |v| round_dp(v, 2))
}

/// Transport failures are left out of both numerator and denominator.
pub fn invalid_rate(records: &[RunRecord]) -> InvalidRate {
    let t = Tally::of(records);
    InvalidRate {
        total_n: t.answered(),
        invalid_n: t.invalid,
        raw_invalid_n: t.raw_invalid,
        transport_n: t.transport,
        pct: invalid_pct(t.invalid, t.answered()),
        raw_pct: invalid_pct(t.raw_invalid, t.answered()),
    }
}

/// Report grouping: one cell per model, regime, original-claim class,
/// operator and mode. `ptype == None` is the unperturbed baseline.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub model: String,
    pub regime: PromptRegime,
    pub split: VeracityLabel,
    pub ptype: Option<PerturbationType>,
    pub mode: Option<PerturbMode>,
}

impl CellKey {
    fn of(r: &RunRecord) -> Self {
        Self {
            model: r.model.clone(),
            regime: r.regime,
            split: r.origin_label,
            ptype: r.probe_ref.ptype,
            mode: r.probe_ref.mode,
        }
    }

    fn baseline(&self) -> Self {
        Self {
            ptype: None,
            mode: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportCell {
    pub key: CellKey,
    pub tally: Tally,
    /// Exact values; round with [`round_dp`] for display.
    pub accuracy: Option<Decimal>,
    pub accuracy_with_invalid: Option<Decimal>,
    pub baseline: Option<Decimal>,
    pub delta: Option<Decimal>,
    /// No baseline cell exists for this model, regime and class.
    pub incomplete: bool,
}

impl ReportCell {
    pub fn accuracy_pct(&self) -> Option<Decimal> {
        self.accuracy.map(|v| round_dp(v, 2))
    }

    pub fn delta_pct(&self) -> Option<Decimal> {
        self.delta.map(|v| round_dp(v, 2))
    }
}

fn cells(records: &[RunRecord]) -> BTreeMap<CellKey, Tally> {
    let mut map: BTreeMap<CellKey, Tally> = BTreeMap::new();
    for r in records {
        map.entry(CellKey::of(r)).or_default().add(r);
    }
    map
}

/// Cells for `perturbed` with deltas against cells of `baseline`.
/// Baseline cells are included in the output with a zero delta.
pub fn delta_report(baseline: &[RunRecord], perturbed: &[RunRecord]) -> Vec<ReportCell> {
    let base = cells(baseline);
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (key, t) in base.iter().chain(cells(perturbed).iter()) {
        if !seen.insert(key.clone()) {
            continue;
        }
        let base_acc = base.get(&key.baseline()).and_then(Tally::accuracy);
        let acc = t.accuracy();
        let delta = match (acc, base_acc) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        };
        out.push(ReportCell {
            key: key.clone(),
            tally: *t,
            accuracy: acc,
            accuracy_with_invalid: t.accuracy_with_invalid(),
            baseline: base_acc,
            delta,
            incomplete: !base.contains_key(&key.baseline()),
        });
    }
    out.sort_by(|a, b| a.key.cmp(&b.key));
    out
}

/// Split a ledger into baseline and perturbed records and report on both.
pub fn report(records: &[RunRecord]) -> Vec<ReportCell> {
    let (base, pert): (Vec<RunRecord>, Vec<RunRecord>) = records
        .iter()
        .cloned()
        .partition(|r| r.probe_ref.is_original());
    delta_report(&base, &pert)
}

pub const CSV_HEADER: [&str; 11] = [
    "model",
    "regime",
    "ptype",
    "mode",
    "n",
    "invalid_n",
    "accuracy_pct",
    "baseline_pct",
    "delta_pct",
    "split",
    "accuracy_with_invalid_pct",
];

fn opt_num(v: Option<Decimal>) -> String {
    v.map(|v| format!("{:.2}", round_dp(v, 2))).unwrap_or_default()
}

/// CSV with one row per cell. `n` counts answered records (transport
/// failures excluded); `invalid_n` is the post-retry invalid count.
pub fn write_report_csv<W: Write>(w: W, cells: &[ReportCell]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for c in cells {
        let k = &c.key;
        wr.write_record([
            k.model.clone(),
            k.regime.as_str().to_string(),
            k.ptype.map_or("original".into(), |p| p.as_str().to_string()),
            k.mode.map_or(String::new(), |m| m.as_str().to_string()),
            c.tally.answered().to_string(),
            c.tally.invalid.to_string(),
            opt_num(c.accuracy),
            opt_num(c.baseline),
            opt_num(c.delta),
            c.key.split.as_str().to_string(),
            opt_num(c.accuracy_with_invalid),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

fn transition_title(split: VeracityLabel, mode: PerturbMode) -> String {
    let to = match (split, mode) {
        (VeracityLabel::True, PerturbMode::Preserve) => "True",
        _ => "False",
    };
    format!("{} → {to} ({mode})", if split.as_bool() { "True" } else { "False" })
}

/// Aligned text tables: one block per transition, sections per regime,
/// rows per model (grouped by `groups`, default one group), columns
/// Original followed by each operator. Cells read `accuracy (delta)`.
pub fn render_report_text(cells: &[ReportCell], groups: &HashMap<String, String>) -> String {
    let by_key: HashMap<&CellKey, &ReportCell> = cells.iter().map(|c| (&c.key, c)).collect();
    let mut blocks: BTreeMap<(VeracityLabel, PerturbMode), Vec<PerturbationType>> = BTreeMap::new();
    for c in cells {
        if let (Some(p), Some(m)) = (c.key.ptype, c.key.mode) {
            let cols = blocks.entry((c.key.split, m)).or_default();
            if !cols.contains(&p) {
                cols.push(p);
            }
        }
    }
    let group_of = |m: &str| groups.get(m).cloned().unwrap_or_default();
    let mut out = String::new();
    for ((split, mode), mut cols) in blocks {
        cols.sort();
        let _ = writeln!(out, "== {} ==", transition_title(split, mode));
        let mut header = format!("{:<28} {:>16}", "Model", "Original");
        for p in &cols {
            let _ = write!(header, " {:>16}", p.display_name());
        }
        let mut rows: BTreeMap<PromptRegime, Vec<(String, String)>> = BTreeMap::new();
        for c in cells.iter().filter(|c| c.key.split == split && c.key.ptype.is_none()) {
            rows.entry(c.key.regime)
                .or_default()
                .push((group_of(&c.key.model), c.key.model.clone()));
        }
        for c in cells
            .iter()
            .filter(|c| c.key.split == split && c.key.mode == Some(mode))
        {
            let v = rows.entry(c.key.regime).or_default();
            let e = (group_of(&c.key.model), c.key.model.clone());
            if !v.contains(&e) {
                v.push(e);
            }
        }
        for (regime, mut models) in rows {
            models.sort();
            models.dedup();
            let _ = writeln!(out, "-- {} --", regime.display_name());
            let _ = writeln!(out, "{header}");
            let mut last_group = None;
            for (group, model) in models {
                if !group.is_empty() && last_group.as_ref() != Some(&group) {
                    let _ = writeln!(out, "[{group}]");
                }
                last_group = Some(group);
                let key = CellKey {
                    model: model.clone(),
                    regime,
                    split,
                    ptype: None,
                    mode: None,
                };
                let base = by_key.get(&key).map_or("-".to_string(), |c| fmt_pct(c.accuracy));
                let mut line = format!("{model:<28} {base:>16}");
                for p in &cols {
                    let k = CellKey {
                        ptype: Some(*p),
                        mode: Some(mode),
                        ..key.clone()
                    };
                    let cell = match by_key.get(&k) {
                        Some(c) if c.incomplete => format!("{} (no base)", fmt_pct(c.accuracy)),
                        Some(c) => format!("{} ({})", fmt_pct(c.accuracy), fmt_delta(c.delta)),
                        None => "-".to_string(),
                    };
                    let _ = write!(line, " {cell:>16}");
                }
                let _ = writeln!(out, "{line}");
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvalidRow {
    pub regime: PromptRegime,
    pub model: String,
    pub rate: InvalidRate,
}

pub fn invalid_table(records: &[RunRecord]) -> Vec<InvalidRow> {
    let mut groups: BTreeMap<(PromptRegime, String), Vec<RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.regime, r.model.clone()))
            .or_default()
            .push(r.clone());
    }
    groups
        .into_iter()
        .map(|((regime, model), rs)| InvalidRow {
            regime,
            model,
            rate: invalid_rate(&rs),
        })
        .collect()
}

pub fn render_invalid_text(rows: &[InvalidRow]) -> String {
    let mut out = String::new();
    let mut regime = None;
    for r in rows {
        if regime != Some(r.regime) {
            regime = Some(r.regime);
            let _ = writeln!(out, "-- {} --", r.regime.display_name());
            let _ = writeln!(
                out,
                "{:<28} {:>9} {:>8} {:>9} {:>13} {:>10}",
                "Model", "Total", "Invalid", "% Invalid", "% Raw invalid", "Transport"
            );
        }
        let t = &r.rate;
        let _ = writeln!(
            out,
            "{:<28} {:>9} {:>8} {:>9.2} {:>13.2} {:>10}",
            r.model, t.total_n, t.invalid_n, t.pct, t.raw_pct, t.transport_n
        );
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenMeans {
    pub n: u64,
    /// One decimal.
    pub prompt_mean: Option<Decimal>,
    pub reasoning_mean: Option<Decimal>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRow {
    pub ptype: PerturbationType,
    pub misclassified: TokenMeans,
    pub correct: TokenMeans,
}

fn means(rs: &[&RunRecord]) -> TokenMeans {
    let n = rs.len() as u64;
    let sum = |f: fn(&RunRecord) -> u64| -> Option<Decimal> {
        (n > 0).then(|| {
            round_dp(
                Decimal::from(rs.iter().map(|r| f(r)).sum::<u64>()) / Decimal::from(n),
                1,
            )
        })
    };
    TokenMeans {
        n,
        prompt_mean: sum(|r| r.verdict.as_ref().map_or(0, |v| v.prompt_tokens)),
        reasoning_mean: sum(|r| r.verdict.as_ref().map_or(0, |v| v.reasoning_tokens)),
    }
}

/// Mean prompt and reasoning tokens per operator, split by correctness.
/// Invalid verdicts, transport failures and unperturbed claims are left out.
pub fn token_length_summary(records: &[RunRecord]) -> Vec<TokenRow> {
    PerturbationType::ALL
        .iter()
        .filter_map(|&p| {
            let rs: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.probe_ref.ptype == Some(p))
                .collect();
            if rs.is_empty() {
                return None;
            }
            let pick = |o: Outcome| -> Vec<&RunRecord> {
                rs.iter().copied().filter(|r| r.outcome() == o).collect()
            };
            Some(TokenRow {
                ptype: p,
                misclassified: means(&pick(Outcome::Wrong)),
                correct: means(&pick(Outcome::Correct)),
            })
        })
        .collect()
}

pub fn render_token_text(rows: &[TokenRow]) -> String {
    let f = |v: Option<Decimal>| v.map_or("-".to_string(), |v| format!("{v:.1}"));
    let mut out = format!(
        "{:<20} {:>14} {:>10} {:>14} {:>10}\n{:<20} {:>14} {:>10} {:>14} {:>10}\n",
        "Perturbation", "Prompt", "", "Reasoning", "", "", "Misclassified", "Correct", "Misclassified", "Correct"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<20} {:>14} {:>10} {:>14} {:>10}",
            r.ptype.long_name(),
            f(r.misclassified.prompt_mean),
            f(r.correct.prompt_mean),
            f(r.misclassified.reasoning_mean),
            f(r.correct.reasoning_mean)
        );
    }
    out
}
