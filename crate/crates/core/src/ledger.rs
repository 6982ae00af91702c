//! Run records: one model verdict joined with the probe it answered.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::corpus::VeracityLabel;
use crate::perturb::{PerturbMode, PerturbationType};
use crate::prompts::PromptRegime;

/// Which claim a record answered: an original claim or one probe.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProbeRef {
    pub origin_id: String,
    /// `None` for the unperturbed claim, serialized as "original".
    #[serde(with = "ptype_or_original")]
    pub ptype: Option<PerturbationType>,
    #[serde(default)]
    pub mode: Option<PerturbMode>,
}

impl ProbeRef {
    pub fn original(origin_id: &str) -> Self {
        Self {
            origin_id: origin_id.to_string(),
            ptype: None,
            mode: None,
        }
    }

    pub fn probe(origin_id: &str, ptype: PerturbationType, mode: PerturbMode) -> Self {
        Self {
            origin_id: origin_id.to_string(),
            ptype: Some(ptype),
            mode: Some(mode),
        }
    }

    pub fn is_original(&self) -> bool {
        self.ptype.is_none()
    }
}

impl fmt::Display for ProbeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.ptype, self.mode) {
            (Some(p), Some(m)) => write!(f, "{}:{p}:{m}", self.origin_id),
            _ => write!(f, "{}:original", self.origin_id),
        }
    }
}

mod ptype_or_original {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<PerturbationType>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(p) => s.serialize_str(p.as_str()),
            None => s.serialize_str("original"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<PerturbationType>, D::Error> {
        let s = String::deserialize(d)?;
        if s == "original" {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(serde::de::Error::custom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ModelVerdict {
    /// Final response text.
    pub raw: String,
    pub label: Option<VeracityLabel>,
    pub invalid: bool,
    /// The first response was invalid (before the single re-ask).
    #[serde(default)]
    pub raw_invalid: bool,
    pub prompt_tokens: u64,
    pub reasoning_tokens: u64,
    pub completion_tokens: u64,
    /// Token counts came from the whitespace fallback, not the provider.
    #[serde(default)]
    pub tokens_estimated: bool,
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning_text: Option<String>,
    /// HTTP attempts across transport retries and the re-ask.
    #[serde(default)]
    pub attempts: u32,
}

/// Provenance embedded in every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct RunMeta {
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub probe_ref: ProbeRef,
    pub regime: PromptRegime,
    pub model: String,
    /// Label of the unperturbed claim; selects the baseline.
    pub origin_label: VeracityLabel,
    pub expected: VeracityLabel,
    /// Absent when the request failed in transport.
    pub verdict: Option<ModelVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport_error: Option<String>,
    /// Defined only for valid verdicts.
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<RunMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Correct,
    Wrong,
    Invalid,
    TransportFailure,
}

impl RunRecord {
    pub fn new(
        probe_ref: ProbeRef,
        regime: PromptRegime,
        model: &str,
        origin_label: VeracityLabel,
        expected: VeracityLabel,
        verdict: Result<ModelVerdict, String>,
    ) -> Self {
        let (verdict, transport_error) = match verdict {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e)),
        };
        let correct = verdict
            .as_ref()
            .and_then(|v| v.label)
            .map(|l| l == expected);
        Self {
            probe_ref,
            regime,
            model: model.to_string(),
            origin_label,
            expected,
            verdict,
            transport_error,
            correct,
            meta: None,
        }
    }

    pub fn outcome(&self) -> Outcome {
        match (&self.verdict, self.correct) {
            (None, _) => Outcome::TransportFailure,
            (Some(v), _) if v.invalid => Outcome::Invalid,
            (Some(_), Some(true)) => Outcome::Correct,
            (Some(_), _) => Outcome::Wrong,
        }
    }

    /// Stable order key for the single-writer merge.
    pub fn sort_key(&self) -> (String, PromptRegime, String) {
        (self.model.clone(), self.regime, self.probe_ref.to_string())
    }
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("ledger line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
}

pub fn write_records<W: Write>(mut w: W, records: &[RunRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<RunRecord>, LedgerError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| LedgerError::Parse {
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(out)
}
