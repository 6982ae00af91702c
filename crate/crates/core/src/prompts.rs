//! Prompt regimes: zero-shot, two-shot and the perturbation-aware prompt.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::VeracityLabel;
use crate::perturb::PerturbationType;

const DEFAULT_BANK: &str = include_str!("../assets/demo_bank.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptRegime {
    ZeroShot,
    TwoShot,
    #[serde(rename = "PAP")]
    Pap,
}

impl PromptRegime {
    pub const ALL: [PromptRegime; 3] = [PromptRegime::ZeroShot, PromptRegime::TwoShot, PromptRegime::Pap];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptRegime::ZeroShot => "ZeroShot",
            PromptRegime::TwoShot => "TwoShot",
            PromptRegime::Pap => "PAP",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            PromptRegime::ZeroShot => "Zero-shot",
            PromptRegime::TwoShot => "Two-shot",
            PromptRegime::Pap => "PAP",
        }
    }
}

impl fmt::Display for PromptRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptRegime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        match key.as_str() {
            "zeroshot" | "zero" => Ok(PromptRegime::ZeroShot),
            "twoshot" | "two" => Ok(PromptRegime::TwoShot),
            "pap" => Ok(PromptRegime::Pap),
            _ => Err(format!("unknown regime {s:?} (expected zero-shot, two-shot or pap)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ptype: Option<PerturbationType>,
    pub claim: String,
    pub evidence: Vec<String>,
    pub label: VeracityLabel,
}

impl Demonstration {
    pub fn render(&self) -> String {
        format!(
            "{}\n{}",
            query_text(&self.claim, &self.evidence),
            verdict_json(self.label)
        )
    }
}

/// Texts and demonstrations for all regimes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoBank {
    pub version: String,
    pub system: String,
    pub instruction: String,
    pub pap_preamble: String,
    pub two_shot: Vec<Demonstration>,
    pub pap: Vec<Demonstration>,
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("cannot read demo bank {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid demo bank: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("demo bank cannot serve {regime}: {reason}")]
    MissingDemos { regime: PromptRegime, reason: String },
}

impl Default for DemoBank {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_BANK).expect("bundled demo bank parses")
    }
}

impl DemoBank {
    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path).map_err(|source| PromptError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Check that the bank has what `regime` needs.
    pub fn check(&self, regime: PromptRegime) -> Result<(), PromptError> {
        let fail = |reason: String| Err(PromptError::MissingDemos { regime, reason });
        match regime {
            PromptRegime::ZeroShot => Ok(()),
            PromptRegime::TwoShot => {
                let labels: Vec<_> = self.two_shot.iter().map(|d| d.label).collect();
                if labels.len() != 2 || labels[0] == labels[1] {
                    return fail(format!(
                        "need one True and one False demonstration, found {labels:?}"
                    ));
                }
                Ok(())
            }
            PromptRegime::Pap => {
                if self.pap.len() != PerturbationType::ALL.len() {
                    return fail(format!("need 6 demonstrations, found {}", self.pap.len()));
                }
                for t in PerturbationType::ALL {
                    if !self.pap.iter().any(|d| d.ptype == Some(t)) {
                        return fail(format!("no demonstration for {t}"));
                    }
                }
                if self.pap.iter().any(|d| d.label != VeracityLabel::False) {
                    return fail("every demonstration must be labelled false".into());
                }
                Ok(())
            }
        }
    }
}

/// Where demonstrations go in the chat transcript.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemoLayout {
    /// Inside the single user message, after the instruction.
    #[default]
    Inline,
    /// As alternating user/assistant turns before the query.
    Turns,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    fn new(role: &str, content: String) -> Self {
        Self {
            role: role.to_string(),
            content,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub regime: PromptRegime,
    pub system: String,
    pub instruction: String,
    /// Text placed between the instruction and the demonstrations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preamble: Option<String>,
    pub demonstrations: Vec<Demonstration>,
    pub query_claim: String,
    pub query_evidence: Vec<String>,
}

pub fn verdict_json(label: VeracityLabel) -> String {
    format!("{{\"label\": {}}}", label.as_bool())
}

pub fn query_text(claim: &str, evidence: &[String]) -> String {
    format!("Claim: {claim}\nEvidence: {}", evidence.join("\n\n"))
}

pub fn build_prompt(
    claim: &str,
    evidence: &[String],
    regime: PromptRegime,
    bank: &DemoBank,
) -> Result<PromptBundle, PromptError> {
    bank.check(regime)?;
    let (preamble, demonstrations) = match regime {
        PromptRegime::ZeroShot => (None, Vec::new()),
        PromptRegime::TwoShot => (None, bank.two_shot.clone()),
        PromptRegime::Pap => (Some(bank.pap_preamble.clone()), bank.pap.clone()),
    };
    Ok(PromptBundle {
        regime,
        system: bank.system.clone(),
        instruction: bank.instruction.clone(),
        preamble,
        demonstrations,
        query_claim: claim.to_string(),
        query_evidence: evidence.to_vec(),
    })
}

impl PromptBundle {
    fn head(&self) -> String {
        let mut s = self.instruction.clone();
        if let Some(p) = &self.preamble {
            s.push_str("\n\n");
            s.push_str(p);
        }
        s
    }

    pub fn query(&self) -> String {
        query_text(&self.query_claim, &self.query_evidence)
    }

    /// The user message in inline layout.
    pub fn user_text(&self) -> String {
        let mut parts = vec![self.head()];
        parts.extend(self.demonstrations.iter().map(Demonstration::render));
        parts.push(self.query());
        parts.join("\n\n")
    }

    pub fn to_messages(&self, layout: DemoLayout) -> Vec<ChatMessage> {
        let mut out = vec![ChatMessage::new("system", self.system.clone())];
        match layout {
            DemoLayout::Inline => out.push(ChatMessage::new("user", self.user_text())),
            DemoLayout::Turns => {
                out.push(ChatMessage::new("user", self.head()));
                for d in &self.demonstrations {
                    out.push(ChatMessage::new("user", query_text(&d.claim, &d.evidence)));
                    out.push(ChatMessage::new("assistant", verdict_json(d.label)));
                }
                out.push(ChatMessage::new("user", self.query()));
            }
        }
        out
    }
}
