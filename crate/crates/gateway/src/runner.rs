use futures::stream::{self, StreamExt};

use numprobe_core::corpus::{ClaimEvidencePair, Corpus, VeracityLabel};
use numprobe_core::ledger::{ProbeRef, RunRecord};
use numprobe_core::perturb::PerturbedClaim;
use numprobe_core::prompts::{build_prompt, DemoBank, PromptError, PromptRegime};

use crate::client::Gateway;

/// One claim to classify.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub probe_ref: ProbeRef,
    pub claim: String,
    pub evidence: Vec<String>,
    pub origin_label: VeracityLabel,
    pub expected: VeracityLabel,
}

impl Job {
    pub fn original(pair: &ClaimEvidencePair) -> Self {
        Self {
            probe_ref: ProbeRef::original(&pair.id),
            claim: pair.claim.clone(),
            evidence: pair.evidences.clone(),
            origin_label: pair.label,
            expected: pair.label,
        }
    }

    /// `None` when the probe's origin is not in the corpus.
    pub fn probe(corpus: &Corpus, p: &PerturbedClaim) -> Option<Self> {
        let pair = corpus.get(&p.origin_id)?;
        Some(Self {
            probe_ref: ProbeRef::probe(&p.origin_id, p.ptype, p.mode),
            claim: p.text.clone(),
            evidence: pair.evidences.clone(),
            origin_label: pair.label,
            expected: p.expected_label,
        })
    }
}

/// Classify every job under every regime. Requests run concurrently up to
/// the model's `max_in_flight`; records come back in (regime, probe) order.
/// Transport failures become records with `transport_error` set.
pub async fn run_jobs(
    gw: &Gateway,
    jobs: &[Job],
    regimes: &[PromptRegime],
    bank: &DemoBank,
) -> Result<Vec<RunRecord>, PromptError> {
    let mut work = Vec::with_capacity(jobs.len() * regimes.len());
    for &regime in regimes {
        for job in jobs {
            work.push((job, build_prompt(&job.claim, &job.evidence, regime, bank)?));
        }
    }
    let model = gw.config().label().to_string();
    let mut records: Vec<RunRecord> = stream::iter(work)
        .map(|(job, bundle)| {
            let model = model.clone();
            async move {
                let verdict = gw.query(&bundle).await.map_err(|e| e.to_string());
                RunRecord::new(
                    job.probe_ref.clone(),
                    bundle.regime,
                    &model,
                    job.origin_label,
                    job.expected,
                    verdict,
                )
            }
        })
        .buffer_unordered(gw.config().max_in_flight)
        .collect()
        .await;
    records.sort_by_key(RunRecord::sort_key);
    Ok(records)
}
