//! Claim–evidence corpus ingest and canonical storage.
//!
//! Input dumps are line-delimited JSON whose field names vary between
//! fact-checking collections, so ingest is driven by a [`SchemaMap`].
//! Rows labelled `conflicting` are dropped and counted, summary fields are
//! never carried over, and anything else that does not fit the pair shape is
//! counted as malformed. The canonical output is one JSON object per line:
//!
//! ```text
//! {"id": str, "claim": str, "evidences": [str], "label": "true"|"false", "source": str?}
//! ```

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write corpus file {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate pair id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("line {line}: {message}")]
    Canonical { line: usize, message: String },
}

/// Binary veracity label. A third value never makes it into a stored corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VeracityLabel {
    True,
    False,
}

impl VeracityLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            VeracityLabel::True => "true",
            VeracityLabel::False => "false",
        }
    }

    pub fn as_bool(self) -> bool {
        matches!(self, VeracityLabel::True)
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            VeracityLabel::True
        } else {
            VeracityLabel::False
        }
    }
}

impl fmt::Display for VeracityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimEvidencePair {
    pub id: String,
    pub claim: String,
    pub evidences: Vec<String>,
    pub label: VeracityLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_read: usize,
    pub kept: usize,
    pub dropped_conflicting: usize,
    pub dropped_malformed: usize,
    pub true_count: usize,
    pub false_count: usize,
    /// First few malformed rows as "line N: reason".
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub malformed_samples: Vec<String>,
}

impl CorpusStats {
    pub fn is_consistent(&self) -> bool {
        self.kept == self.true_count + self.false_count
            && self.total_read == self.kept + self.dropped_conflicting + self.dropped_malformed
    }
}

/// Field names of an input dump.
///
/// `id` is optional: rows without one get `row-<line>` (1-based line number).
/// `evidence` may hold a string or an array of strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemaMap {
    pub id: Option<String>,
    pub claim: String,
    pub evidence: String,
    pub label: String,
    pub summary: Option<String>,
    pub source: Option<String>,
}

impl Default for SchemaMap {
    /// The canonical schema, so canonical output re-ingests unchanged.
    fn default() -> Self {
        Self {
            id: Some("id".into()),
            claim: "claim".into(),
            evidence: "evidences".into(),
            label: "label".into(),
            summary: Some("summary".into()),
            source: Some("source".into()),
        }
    }
}

/// An ingested corpus. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pairs: Vec<ClaimEvidencePair>,
}

enum RowOutcome {
    Keep(ClaimEvidencePair),
    Conflicting,
    Malformed(String),
}

impl Corpus {
    /// Build from already-validated pairs. Fails on a duplicate id.
    pub fn from_pairs(pairs: Vec<ClaimEvidencePair>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for (i, p) in pairs.iter().enumerate() {
            if !seen.insert(p.id.clone()) {
                return Err(CorpusError::DuplicateId {
                    id: p.id.clone(),
                    line: i + 1,
                });
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[ClaimEvidencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ClaimEvidencePair> {
        self.pairs.iter().find(|p| p.id == id)
    }

    /// Partition by label, preserving corpus order within each side.
    pub fn split_by_label(&self) -> (Vec<&ClaimEvidencePair>, Vec<&ClaimEvidencePair>) {
        self.pairs.iter().partition(|p| p.label == VeracityLabel::True)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.pairs {
            out.push_str(&serde_json::to_string(p).expect("pair serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), CorpusError> {
        let wrap = |source| CorpusError::Write {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
        w.write_all(self.to_jsonl().as_bytes()).map_err(wrap)?;
        w.flush().map_err(wrap)
    }

    /// Load a canonical corpus file. Unlike [`ingest`], every line must be a
    /// valid canonical pair.
    pub fn read_jsonl(path: &Path) -> Result<Self, CorpusError> {
        let f = File::open(path).map_err(|source| CorpusError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut pairs = Vec::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|source| CorpusError::Read {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let pair: ClaimEvidencePair =
                serde_json::from_str(&line).map_err(|e| CorpusError::Canonical {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            pairs.push(pair);
        }
        Self::from_pairs(pairs)
    }
}

/// Stream a dump through the preprocessing filters.
pub fn ingest(path: &Path, schema: &SchemaMap) -> Result<(Corpus, CorpusStats), CorpusError> {
    let f = File::open(path).map_err(|source| CorpusError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_reader(BufReader::new(f), schema).map_err(|e| match e {
        CorpusError::Read { source, .. } => CorpusError::Read {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

const MALFORMED_SAMPLES: usize = 20;

pub fn ingest_reader<R: BufRead>(
    reader: R,
    schema: &SchemaMap,
) -> Result<(Corpus, CorpusStats), CorpusError> {
    let mut stats = CorpusStats::default();
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Read {
            path: PathBuf::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        stats.total_read += 1;
        match parse_row(&line, i + 1, schema) {
            RowOutcome::Keep(pair) => {
                if !seen.insert(pair.id.clone()) {
                    return Err(CorpusError::DuplicateId {
                        id: pair.id,
                        line: i + 1,
                    });
                }
                match pair.label {
                    VeracityLabel::True => stats.true_count += 1,
                    VeracityLabel::False => stats.false_count += 1,
                }
                stats.kept += 1;
                pairs.push(pair);
            }
            RowOutcome::Conflicting => stats.dropped_conflicting += 1,
            RowOutcome::Malformed(reason) => {
                stats.dropped_malformed += 1;
                if stats.malformed_samples.len() < MALFORMED_SAMPLES {
                    stats.malformed_samples.push(format!("line {}: {reason}", i + 1));
                }
            }
        }
    }
    debug_assert!(stats.is_consistent());
    Ok((Corpus { pairs }, stats))
}

fn parse_row(line: &str, line_no: usize, schema: &SchemaMap) -> RowOutcome {
    let mut obj = match serde_json::from_str::<Value>(line) {
        Ok(Value::Object(m)) => m,
        Ok(_) => return RowOutcome::Malformed("not a JSON object".into()),
        Err(e) => return RowOutcome::Malformed(e.to_string()),
    };
    if let Some(summary) = &schema.summary {
        obj.remove(summary);
    }

    let label = match obj.get(&schema.label) {
        Some(Value::String(s)) => s.trim().to_ascii_lowercase(),
        Some(Value::Bool(b)) => b.to_string(),
        _ => return RowOutcome::Malformed("missing label".into()),
    };
    let label = match label.as_str() {
        "true" => VeracityLabel::True,
        "false" => VeracityLabel::False,
        "conflicting" => return RowOutcome::Conflicting,
        other => return RowOutcome::Malformed(format!("unknown label {other:?}")),
    };

    let claim = match obj.get(&schema.claim) {
        Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
        _ => return RowOutcome::Malformed("missing or empty claim".into()),
    };

    let evidences: Vec<String> = match obj.get(&schema.evidence) {
        Some(Value::String(s)) => vec![s.clone()],
        Some(Value::Array(items)) => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                match item {
                    Value::String(s) => out.push(s.clone()),
                    _ => return RowOutcome::Malformed("non-string evidence".into()),
                }
            }
            out
        }
        _ => return RowOutcome::Malformed("missing evidence".into()),
    };
    // blank snippets carry nothing to judge against
    let evidences: Vec<String> = evidences
        .into_iter()
        .filter(|e| !e.trim().is_empty())
        .collect();
    if evidences.is_empty() {
        return RowOutcome::Malformed("no non-empty evidence".into());
    }

    let id = match schema.id.as_ref().and_then(|f| obj.get(f)) {
        Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(Value::Null) | None => format!("row-{line_no}"),
        Some(_) => return RowOutcome::Malformed("unusable id".into()),
    };

    let source = match schema.source.as_ref().and_then(|f| obj.get(f)) {
        Some(Value::String(s)) => Some(s.clone()),
        _ => None,
    };

    RowOutcome::Keep(ClaimEvidencePair {
        id,
        claim,
        evidences,
        label,
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn run(input: &str) -> Result<(Corpus, CorpusStats), CorpusError> {
        ingest_reader(Cursor::new(input), &SchemaMap::default())
    }

    const FIVE_ROWS: &str = r#"{"id":"a","claim":"Revenue was 5,000,000 dollars.","evidences":["Revenue reached 5,000,000 dollars."],"label":"True"}
{"id":"b","claim":"Inflation hit 4% in 2023.","evidences":["Inflation was 3.1% in 2023."],"label":"False","summary":"The rate was 3.1%."}
{"id":"c","claim":"About 36,000 people will die.","evidences":"Estimates range widely.","label":"Conflicting"}
{"id":"d","claim":"Twelve states passed the bill.","evidences":["12 states passed it."],"label":"TRUE"}
{"id":"e","claim":"Saturn has 146 moons.","evidences":["Saturn has 146 moons."],"label":"true"}
"#;

    #[test]
    fn five_row_fixture_drops_the_conflicting_row() {
        let (corpus, stats) = run(FIVE_ROWS).unwrap();
        assert_eq!(stats.kept, 4);
        assert_eq!(stats.dropped_conflicting, 1);
        assert_eq!(stats.dropped_malformed, 0);
        assert_eq!(stats.total_read, 5);
        assert!(stats.is_consistent());
        assert!(corpus.get("c").is_none());
        // summary never survives
        assert!(!corpus.to_jsonl().contains("summary"));
    }

    #[test]
    fn empty_input_gives_zero_counters() {
        let (corpus, stats) = run("").unwrap();
        assert!(corpus.is_empty());
        assert_eq!(stats, CorpusStats::default());
    }

    #[test]
    fn unknown_label_is_malformed() {
        let row = r#"{"id":"x","claim":"It rose 5%.","evidences":["It rose 5%."],"label":"half-true"}"#;
        let (corpus, stats) = run(row).unwrap();
        assert_eq!(stats.dropped_malformed, 1);
        assert_eq!(stats.kept, 0);
        assert!(corpus.is_empty());
    }

    #[test]
    fn malformed_lines_are_skipped_not_fatal() {
        let input = "not json\n[1,2]\n{\"id\":\"q\",\"claim\":\"  \",\"evidences\":[\"x\"],\"label\":\"true\"}\n{\"id\":\"r\",\"claim\":\"ok\",\"evidences\":[\"\",\" \"],\"label\":\"true\"}\n";
        let (_, stats) = run(input).unwrap();
        assert_eq!(stats.dropped_malformed, 4);
        assert_eq!(stats.total_read, 4);
    }

    #[test]
    fn duplicate_id_is_fatal() {
        let input = r#"{"id":"a","claim":"c","evidences":["e"],"label":"true"}
{"id":"a","claim":"d","evidences":["f"],"label":"false"}"#;
        match run(input) {
            Err(CorpusError::DuplicateId { id, line }) => {
                assert_eq!(id, "a");
                assert_eq!(line, 2);
            }
            other => panic!("expected duplicate id error, got {other:?}"),
        }
    }

    #[test]
    fn evidence_string_is_normalized_to_list() {
        let input = r#"{"id":"a","claim":"c","evidences":"single","label":"false"}"#;
        let (corpus, _) = run(input).unwrap();
        assert_eq!(corpus.pairs()[0].evidences, vec!["single".to_string()]);
    }

    #[test]
    fn custom_schema_and_generated_ids() {
        let schema = SchemaMap {
            id: None,
            claim: "text".into(),
            evidence: "doc".into(),
            label: "verdict".into(),
            summary: Some("justification".into()),
            source: None,
        };
        let input = r#"{"text":"A claim","doc":["ev"],"verdict":"False","justification":"because"}"#;
        let (corpus, stats) = ingest_reader(Cursor::new(input), &schema).unwrap();
        assert_eq!(stats.kept, 1);
        assert_eq!(corpus.pairs()[0].id, "row-1");
    }

    #[test]
    fn split_preserves_order() {
        let (corpus, _) = run(FIVE_ROWS).unwrap();
        let (t, f) = corpus.split_by_label();
        let t: Vec<_> = t.iter().map(|p| p.id.as_str()).collect();
        let f: Vec<_> = f.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(t, ["a", "d", "e"]);
        assert_eq!(f, ["b"]);
    }

    #[test]
    fn split_of_four_pair_fixture() {
        let input = r#"{"id":"1","claim":"c","evidences":["e"],"label":"true"}
{"id":"2","claim":"c","evidences":["e"],"label":"false"}
{"id":"3","claim":"c","evidences":["e"],"label":"true"}
{"id":"4","claim":"c","evidences":["e"],"label":"true"}"#;
        let (corpus, _) = run(input).unwrap();
        let (t, f) = corpus.split_by_label();
        assert_eq!((t.len(), f.len()), (3, 1));
        let empty = Corpus::default();
        let (t, f) = empty.split_by_label();
        assert!(t.is_empty() && f.is_empty());
    }

    #[test]
    fn reingest_of_canonical_output_is_byte_identical() {
        let (corpus, _) = run(FIVE_ROWS).unwrap();
        let first = corpus.to_jsonl();
        let (again, stats) = run(&first).unwrap();
        assert_eq!(again.to_jsonl(), first);
        assert_eq!(stats.kept, 4);
    }
}
