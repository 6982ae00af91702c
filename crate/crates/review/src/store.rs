use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use numprobe_core::corpus::{Corpus, VeracityLabel};
use numprobe_core::perturb::{PerturbMode, PerturbationType, PerturbedClaim, ReviewStatus, TouchedSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn status(self) -> ReviewStatus {
        match self {
            Decision::Accept => ReviewStatus::Accepted,
            Decision::Reject => ReviewStatus::Rejected,
        }
    }
}

/// One line of the decision log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub probe_ref: String,
    pub decision: Decision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub reviewer: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportMode {
    /// Accepted probes only.
    #[default]
    Strict,
    /// Everything not rejected; warns when pending probes are included.
    Lenient,
}

impl FromStr for ExportMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(ExportMode::Strict),
            "lenient" => Ok(ExportMode::Lenient),
            _ => Err(format!("unknown review mode {s:?} (expected strict or lenient)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("unknown probe {0}")]
    NotFound(String),
    #[error("duplicate probe {0} in perturbation set")]
    Duplicate(String),
    #[error("decision log {path}, line {line}: {reason}")]
    Log {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Decision history and the effective decision per probe.
#[derive(Debug, Clone, Default)]
struct Ledger {
    history: HashMap<String, Vec<ReviewDecision>>,
    effective: HashMap<String, usize>,
    len: usize,
}

impl Ledger {
    /// Later timestamps supersede; equal timestamps resolve by log order.
    fn apply(&mut self, d: ReviewDecision) {
        let hist = self.history.entry(d.probe_ref.clone()).or_default();
        let supersedes = self
            .effective
            .get(&d.probe_ref)
            .is_none_or(|&i| d.timestamp >= hist[i].timestamp);
        hist.push(d);
        if supersedes {
            let key = hist.last().unwrap().probe_ref.clone();
            self.effective.insert(key, hist.len() - 1);
        }
        self.len += 1;
    }

    fn status(&self, probe_ref: &str) -> ReviewStatus {
        match self.effective.get(probe_ref) {
            Some(&i) => self.history[probe_ref][i].decision.status(),
            None => ReviewStatus::Pending,
        }
    }
}

/// Final status of every probe after applying `log` from empty.
pub fn replay<'a>(
    probe_refs: impl IntoIterator<Item = &'a str>,
    log: &[ReviewDecision],
) -> BTreeMap<String, ReviewStatus> {
    let mut ledger = Ledger::default();
    for d in log {
        ledger.apply(d.clone());
    }
    probe_refs
        .into_iter()
        .map(|r| (r.to_string(), ledger.status(r)))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueueFilter {
    pub ptype: Option<PerturbationType>,
    pub mode: Option<PerturbMode>,
    /// Skip probes ordered at or before this reference.
    pub after: Option<String>,
}

impl QueueFilter {
    fn matches(&self, p: &PerturbedClaim) -> bool {
        self.ptype.is_none_or(|t| t == p.ptype) && self.mode.is_none_or(|m| m == p.mode)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueItem {
    pub probe_ref: String,
    pub origin_id: String,
    pub ptype: PerturbationType,
    pub mode: PerturbMode,
    pub original_claim: Option<String>,
    pub perturbed_claim: String,
    pub touched: Vec<TouchedSpan>,
    pub evidence: Vec<String>,
    pub origin_label: Option<VeracityLabel>,
    pub expected_label: VeracityLabel,
    /// 1-based position among probes matching the filter.
    pub position: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueResponse {
    pub item: Option<QueueItem>,
    pub remaining: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub pending: usize,
    pub accepted: usize,
    pub rejected: usize,
}

impl StatusCounts {
    fn add(&mut self, s: ReviewStatus) {
        match s {
            ReviewStatus::Pending => self.pending += 1,
            ReviewStatus::Accepted => self.accepted += 1,
            ReviewStatus::Rejected => self.rejected += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub total: usize,
    #[serde(flatten)]
    pub counts: StatusCounts,
    pub decisions: usize,
    pub by_ptype: BTreeMap<String, StatusCounts>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub probe_ref: String,
    pub status: ReviewStatus,
    pub history: Vec<ReviewDecision>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Export {
    pub probes: Vec<PerturbedClaim>,
    pub warning: Option<String>,
}

/// Probe set plus decision log. Decisions go through one writer; readers
/// take a snapshot of the ledger and never block on the log file.
#[derive(Debug)]
pub struct ReviewStore {
    probes: Vec<PerturbedClaim>,
    index: HashMap<String, usize>,
    corpus: Option<Corpus>,
    ledger: RwLock<Arc<Ledger>>,
    writer: Mutex<Option<File>>,
}

impl ReviewStore {
    /// Load `probes`, replaying `log` if it exists. New decisions are
    /// appended to `log`; with `None` they live in memory only.
    pub fn open(
        mut probes: Vec<PerturbedClaim>,
        corpus: Option<Corpus>,
        log: Option<&Path>,
    ) -> Result<Self, ReviewError> {
        probes.sort_by(|a, b| (&a.origin_id, a.ptype, a.mode).cmp(&(&b.origin_id, b.ptype, b.mode)));
        let mut index = HashMap::with_capacity(probes.len());
        for (i, p) in probes.iter().enumerate() {
            if index.insert(p.probe_ref(), i).is_some() {
                return Err(ReviewError::Duplicate(p.probe_ref()));
            }
        }
        let mut ledger = Ledger::default();
        let mut writer = None;
        if let Some(path) = log {
            if path.exists() {
                let f = BufReader::new(File::open(path)?);
                for (i, line) in f.lines().enumerate() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let err = |reason: String| ReviewError::Log {
                        path: path.to_path_buf(),
                        line: i + 1,
                        reason,
                    };
                    let d: ReviewDecision = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
                    if !index.contains_key(&d.probe_ref) {
                        return Err(err(format!("unknown probe {}", d.probe_ref)));
                    }
                    ledger.apply(d);
                }
            }
            writer = Some(OpenOptions::new().create(true).append(true).open(path)?);
        }
        Ok(Self {
            probes,
            index,
            corpus,
            ledger: RwLock::new(Arc::new(ledger)),
            writer: Mutex::new(writer),
        })
    }

    fn snapshot(&self) -> Arc<Ledger> {
        self.ledger.read().expect("ledger lock").clone()
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    pub fn status(&self, probe_ref: &str) -> Option<ReviewStatus> {
        self.index.contains_key(probe_ref).then(|| self.snapshot().status(probe_ref))
    }

    pub fn history(&self, probe_ref: &str) -> Vec<ReviewDecision> {
        self.snapshot().history.get(probe_ref).cloned().unwrap_or_default()
    }

    /// Lowest-ordered pending probe matching `filter`.
    pub fn next_pending(&self, filter: &QueueFilter) -> QueueResponse {
        let ledger = self.snapshot();
        let after = filter.after.as_ref().and_then(|r| self.index.get(r)).copied();
        let matching: Vec<(usize, &PerturbedClaim)> =
            self.probes.iter().enumerate().filter(|(_, p)| filter.matches(p)).collect();
        let pending: Vec<(usize, usize)> = matching
            .iter()
            .enumerate()
            .filter(|(_, (_, p))| ledger.status(&p.probe_ref()) == ReviewStatus::Pending)
            .map(|(pos, (i, _))| (pos, *i))
            .collect();
        let pick = pending.iter().find(|(_, i)| after.is_none_or(|a| *i > a));
        let item = pick.map(|&(pos, i)| self.item(i, pos + 1, matching.len()));
        QueueResponse {
            item,
            remaining: pending.len(),
        }
    }

    fn item(&self, i: usize, position: usize, total: usize) -> QueueItem {
        let p = &self.probes[i];
        let pair = self.corpus.as_ref().and_then(|c| c.get(&p.origin_id));
        QueueItem {
            probe_ref: p.probe_ref(),
            origin_id: p.origin_id.clone(),
            ptype: p.ptype,
            mode: p.mode,
            original_claim: pair.map(|c| c.claim.clone()),
            perturbed_claim: p.text.clone(),
            touched: p.touched.clone(),
            evidence: pair.map(|c| c.evidences.clone()).unwrap_or_default(),
            origin_label: pair.map(|c| c.label),
            expected_label: p.expected_label,
            position,
            total,
        }
    }

    /// Append a decision and update the probe's status.
    pub fn record(&self, d: ReviewDecision) -> Result<Ack, ReviewError> {
        if !self.index.contains_key(&d.probe_ref) {
            return Err(ReviewError::NotFound(d.probe_ref));
        }
        let mut writer = self.writer.lock().expect("writer lock");
        if let Some(f) = writer.as_mut() {
            let mut line = serde_json::to_string(&d).expect("decision serializes");
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        let probe_ref = d.probe_ref.clone();
        let mut guard = self.ledger.write().expect("ledger lock");
        let ledger = Arc::make_mut(&mut guard);
        ledger.apply(d);
        Ok(Ack {
            status: ledger.status(&probe_ref),
            history: ledger.history[&probe_ref].clone(),
            probe_ref,
        })
    }

    pub fn stats(&self) -> Stats {
        let ledger = self.snapshot();
        let mut s = Stats {
            total: self.probes.len(),
            decisions: ledger.len,
            ..Stats::default()
        };
        for p in &self.probes {
            let st = ledger.status(&p.probe_ref());
            s.counts.add(st);
            s.by_ptype.entry(p.ptype.to_string()).or_default().add(st);
        }
        s
    }

    /// Every probe with its current review status.
    pub fn probes(&self) -> Vec<PerturbedClaim> {
        let ledger = self.snapshot();
        self.probes
            .iter()
            .map(|p| PerturbedClaim {
                review_status: ledger.status(&p.probe_ref()),
                ..p.clone()
            })
            .collect()
    }

    pub fn export(&self, mode: ExportMode) -> Export {
        let all = self.probes();
        let pending = all.iter().filter(|p| p.review_status == ReviewStatus::Pending).count();
        let probes: Vec<PerturbedClaim> = all
            .into_iter()
            .filter(|p| match mode {
                ExportMode::Strict => p.review_status == ReviewStatus::Accepted,
                ExportMode::Lenient => p.review_status != ReviewStatus::Rejected,
            })
            .collect();
        let warning = (mode == ExportMode::Lenient && pending > 0)
            .then(|| format!("{pending} unreviewed probes included"));
        Export { probes, warning }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    pub(crate) fn probe(id: &str, ptype: PerturbationType) -> PerturbedClaim {
        PerturbedClaim {
            origin_id: id.into(),
            ptype,
            mode: PerturbMode::Flip,
            text: format!("claim {id}"),
            expected_label: VeracityLabel::False,
            seed: 7,
            touched: vec![],
            review_status: ReviewStatus::Pending,
        }
    }

    fn at(secs: i64, r: &str, d: Decision) -> ReviewDecision {
        ReviewDecision {
            probe_ref: r.into(),
            decision: d,
            note: None,
            reviewer: "r".into(),
            timestamp: Utc.timestamp_opt(1_700_000_000 + secs, 0).unwrap(),
        }
    }

    fn three() -> ReviewStore {
        let probes = vec![
            probe("c", PerturbationType::Num),
            probe("a", PerturbationType::Mask),
            probe("a", PerturbationType::Num),
        ];
        ReviewStore::open(probes, None, None).unwrap()
    }

    #[test]
    fn queue_order_and_advance() {
        let s = three();
        let first = s.next_pending(&QueueFilter::default()).item.unwrap();
        assert_eq!(first.probe_ref, "a:Num:Flip");
        assert_eq!(s.next_pending(&QueueFilter::default()).item.unwrap(), first);
        s.record(at(0, "a:Num:Flip", Decision::Accept)).unwrap();
        let second = s.next_pending(&QueueFilter::default());
        assert_eq!(second.item.unwrap().probe_ref, "a:Mask:Flip");
        assert_eq!(second.remaining, 2);
    }

    #[test]
    fn filter_without_matches_is_empty() {
        let s = three();
        let f = QueueFilter {
            ptype: Some(PerturbationType::Range),
            ..QueueFilter::default()
        };
        assert_eq!(
            s.next_pending(&f),
            QueueResponse {
                item: None,
                remaining: 0
            }
        );
    }

    #[test]
    fn reject_then_accept() {
        let s = three();
        s.record(at(0, "c:Num:Flip", Decision::Reject)).unwrap();
        let ack = s.record(at(5, "c:Num:Flip", Decision::Accept)).unwrap();
        assert_eq!(ack.status, ReviewStatus::Accepted);
        assert_eq!(ack.history.len(), 2);
    }

    #[test]
    fn earlier_timestamp_does_not_supersede() {
        let s = three();
        s.record(at(10, "c:Num:Flip", Decision::Accept)).unwrap();
        let ack = s.record(at(3, "c:Num:Flip", Decision::Reject)).unwrap();
        assert_eq!(ack.status, ReviewStatus::Accepted);
        assert_eq!(ack.history.len(), 2);
    }

    #[test]
    fn unknown_probe_leaves_log_unchanged() {
        let s = three();
        assert!(matches!(
            s.record(at(0, "zzz:Num:Flip", Decision::Accept)),
            Err(ReviewError::NotFound(_))
        ));
        assert_eq!(s.stats().decisions, 0);
    }

    #[test]
    fn export_modes() {
        let s = three();
        let lenient = s.export(ExportMode::Lenient);
        assert_eq!(lenient.probes.len(), 3);
        assert!(lenient.warning.is_some());
        assert!(s.export(ExportMode::Strict).probes.is_empty());
        s.record(at(0, "a:Num:Flip", Decision::Accept)).unwrap();
        s.record(at(0, "c:Num:Flip", Decision::Reject)).unwrap();
        let strict = s.export(ExportMode::Strict);
        assert_eq!(strict.probes.len(), 1);
        assert_eq!(strict.probes[0].review_status, ReviewStatus::Accepted);
        assert_eq!(s.export(ExportMode::Lenient).probes.len(), 2);
    }

    #[test]
    fn stats_by_ptype() {
        let s = three();
        s.record(at(0, "a:Mask:Flip", Decision::Reject)).unwrap();
        let st = s.stats();
        assert_eq!(st.total, 3);
        assert_eq!(st.counts.rejected, 1);
        assert_eq!(st.by_ptype["Num"].pending, 2);
        assert_eq!(st.by_ptype["Mask"].rejected, 1);
    }
}
