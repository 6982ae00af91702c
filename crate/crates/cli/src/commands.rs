use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use numprobe_core::corpus::{self, Corpus};
use numprobe_core::eval;
use numprobe_core::ledger::{read_records, write_records, RunRecord};
use numprobe_core::perturb::{
    generate_suite, read_probes, transition_counts, write_probes, PerturbedClaim, ReviewStatus,
};
use numprobe_core::prompts::{DemoBank, PromptRegime};
use numprobe_gateway::{run_jobs, Gateway, Job, ModelConfig};
use numprobe_review::{ExportMode, ReviewStore, ServiceConfig};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::meta::{run_meta, write_sidecar};

pub const CORPUS: &str = "corpus.jsonl";
pub const CORPUS_STATS: &str = "corpus.stats.json";
pub const PROBES: &str = "probes.jsonl";
pub const SKIPPED: &str = "probes.skipped.jsonl";
pub const TRANSITIONS_TXT: &str = "transitions.txt";
pub const TRANSITIONS_JSON: &str = "transitions.json";
pub const DECISIONS: &str = "decisions.jsonl";
pub const VERIFIED: &str = "verified.jsonl";
pub const LEDGER: &str = "ledger.jsonl";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";

fn ensure_dir(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(CliError::io(format!("creating {}", cfg.output_dir.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(CliError::io(format!("writing {}", path.display())))
}

fn write_jsonl_probes(path: &Path, probes: &[PerturbedClaim]) -> Result<(), CliError> {
    let ctx = || format!("writing {}", path.display());
    let mut w = BufWriter::new(File::create(path).map_err(CliError::io(ctx()))?);
    write_probes(&mut w, probes).map_err(CliError::io(ctx()))?;
    w.flush().map_err(CliError::io(ctx()))
}

fn require(path: &Path, what: &'static str, producer: &'static str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingArtifact {
            what,
            path: path.to_path_buf(),
            producer,
        })
    }
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CliError> {
    require(path, "corpus", "ingest")?;
    Corpus::read_jsonl(path).map_err(|e| CliError::Data(e.to_string()))
}

pub fn load_probes(path: &Path, what: &'static str, producer: &'static str) -> Result<Vec<PerturbedClaim>, CliError> {
    require(path, what, producer)?;
    let f = File::open(path).map_err(CliError::io(format!("reading {}", path.display())))?;
    read_probes(BufReader::new(f)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn ingest(cfg: &RunConfig, input: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let input = input
        .or(cfg.corpus.path.as_deref())
        .ok_or_else(|| CliError::Usage("no dataset given; pass --input or set corpus.path".into()))?;
    if !input.exists() {
        return Err(CliError::Data(format!("dataset dump {} not found", input.display())));
    }
    let (corpus, stats) = corpus::ingest(input, &cfg.corpus.schema).map_err(|e| CliError::Data(e.to_string()))?;
    ensure_dir(cfg)?;
    let path = cfg.path(CORPUS);
    corpus.write_jsonl(&path).map_err(|e| CliError::Data(e.to_string()))?;
    write_sidecar(&path, &run_meta(cfg))?;
    write_json(&cfg.path(CORPUS_STATS), &stats)?;
    let _ = writeln!(
        out,
        "read {} rows: kept {} ({} True, {} False), dropped {} Conflicting, {} malformed",
        stats.total_read, stats.kept, stats.true_count, stats.false_count, stats.dropped_conflicting, stats.dropped_malformed
    );
    for s in &stats.malformed_samples {
        let _ = writeln!(out, "  malformed {s}");
    }
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(())
}

pub fn perturb(cfg: &RunConfig, corpus_path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let cpath = corpus_path.map(Path::to_path_buf).unwrap_or_else(|| cfg.path(CORPUS));
    let corpus = load_corpus(&cpath)?;
    let suite = generate_suite(&corpus, &cfg.ptypes, cfg.seed);
    let probes: Vec<PerturbedClaim> = suite.probes.into_iter().filter(|p| cfg.modes.contains(&p.mode)).collect();
    let skipped: Vec<_> = suite.skipped.into_iter().filter(|s| cfg.modes.contains(&s.mode)).collect();
    let counts = transition_counts(&corpus, &cfg.ptypes, &probes);

    ensure_dir(cfg)?;
    let meta = run_meta(cfg);
    let path = cfg.path(PROBES);
    write_jsonl_probes(&path, &probes)?;
    write_sidecar(&path, &meta)?;
    let mut skipped_text = String::new();
    for s in &skipped {
        skipped_text.push_str(&serde_json::to_string(s).expect("serializes"));
        skipped_text.push('\n');
    }
    let spath = cfg.path(SKIPPED);
    std::fs::write(&spath, skipped_text).map_err(CliError::io(format!("writing {}", spath.display())))?;
    let table = counts.to_table();
    let tpath = cfg.path(TRANSITIONS_TXT);
    std::fs::write(&tpath, &table).map_err(CliError::io(format!("writing {}", tpath.display())))?;
    write_json(&cfg.path(TRANSITIONS_JSON), &counts)?;

    let _ = write!(out, "{table}");
    let _ = writeln!(
        out,
        "wrote {} probes to {} ({} skipped, seed {})",
        probes.len(),
        path.display(),
        skipped.len(),
        cfg.seed
    );
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct ReviewArgs {
    pub probes: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub addr: Option<String>,
    pub ui_dir: Option<PathBuf>,
    /// Write the export here and exit instead of serving.
    pub export: Option<PathBuf>,
}

pub fn open_store(cfg: &RunConfig, args: &ReviewArgs) -> Result<ReviewStore, CliError> {
    let ppath = args.probes.clone().unwrap_or_else(|| cfg.path(PROBES));
    let probes = load_probes(&ppath, "perturbation set", "perturb")?;
    let cpath = cfg.path(CORPUS);
    let corpus = if cpath.exists() { Some(load_corpus(&cpath)?) } else { None };
    let log = args.log.clone().unwrap_or_else(|| cfg.path(DECISIONS));
    if let Some(dir) = log.parent() {
        std::fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    }
    ReviewStore::open(probes, corpus, Some(&log)).map_err(|e| CliError::Data(e.to_string()))
}

pub fn review_serve(cfg: &RunConfig, args: &ReviewArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let store = open_store(cfg, args)?;
    if let Some(path) = &args.export {
        let ex = store.export(cfg.review.mode);
        write_jsonl_probes(path, &ex.probes)?;
        write_sidecar(path, &run_meta(cfg))?;
        if let Some(w) = &ex.warning {
            tracing::warn!("{w}");
        }
        let mode = match cfg.review.mode {
            ExportMode::Strict => "strict",
            ExportMode::Lenient => "lenient",
        };
        let _ = writeln!(out, "exported {} probes ({mode}) to {}", ex.probes.len(), path.display());
        return Ok(());
    }
    let addr: SocketAddr = args
        .addr
        .as_deref()
        .unwrap_or(&cfg.review.addr)
        .parse()
        .map_err(|e| CliError::Config(format!("bad review address: {e}")))?;
    let service = ServiceConfig {
        token: cfg.review.token.clone(),
        ui_dir: args.ui_dir.clone().or_else(|| cfg.review.ui_dir.clone()),
    };
    let stats = store.stats();
    let _ = writeln!(
        out,
        "serving {} probes ({} pending) on http://{addr}",
        stats.total, stats.counts.pending
    );
    let rt = tokio::runtime::Runtime::new().map_err(CliError::io("starting runtime"))?;
    rt.block_on(numprobe_review::serve(addr, Arc::new(store), service))
        .map_err(CliError::io(format!("serving on {addr}")))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Originals {
    #[default]
    Include,
    Only,
    Skip,
}

#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub models: Vec<String>,
    pub probes: Option<PathBuf>,
    pub ledger: Option<PathBuf>,
    pub originals: Originals,
}

fn resolve_models(cfg: &RunConfig, names: &[String]) -> Result<Vec<ModelConfig>, CliError> {
    let mut models = if names.is_empty() {
        cfg.models.clone()
    } else {
        names
            .iter()
            .map(|n| {
                cfg.models
                    .iter()
                    .find(|m| m.label() == n)
                    .cloned()
                    .or_else(|| {
                        (n == "mock-oracle").then(|| ModelConfig {
                            label: Some(n.clone()),
                            ..ModelConfig::mock()
                        })
                    })
                    .ok_or_else(|| {
                        let known: Vec<&str> = cfg.models.iter().map(|m| m.label()).collect();
                        CliError::Usage(format!("unknown model {n}; configured: {known:?} (or mock-oracle)"))
                    })
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    if models.is_empty() {
        return Err(CliError::Usage(
            "no models configured; add [[models]] to the config or pass --model mock-oracle".into(),
        ));
    }
    if let Some(n) = cfg.max_in_flight {
        for m in &mut models {
            m.max_in_flight = n;
        }
    }
    Ok(models)
}

/// Probes the runner may use under the configured review mode.
pub fn select_probes(cfg: &RunConfig, path: Option<&Path>) -> Result<Vec<PerturbedClaim>, CliError> {
    let probes = match cfg.review.mode {
        ExportMode::Strict => {
            let path = path.map(Path::to_path_buf).unwrap_or_else(|| cfg.path(VERIFIED));
            let probes = load_probes(&path, "verified probe export", "review-serve --export")?;
            let unaccepted = probes.iter().filter(|p| p.review_status != ReviewStatus::Accepted).count();
            if unaccepted > 0 {
                return Err(CliError::Data(format!(
                    "strict review mode: {unaccepted} probes in {} are not accepted; use the strict export from `numprobe review-serve --export`",
                    path.display()
                )));
            }
            if probes.is_empty() {
                return Err(CliError::Data(format!(
                    "strict review mode: {} holds no accepted probes",
                    path.display()
                )));
            }
            probes
        }
        ExportMode::Lenient => {
            let path = path.map(Path::to_path_buf).unwrap_or_else(|| cfg.path(PROBES));
            let mut probes = load_probes(&path, "perturbation set", "perturb")?;
            let log = cfg.path(DECISIONS);
            if log.exists() {
                let store = ReviewStore::open(probes, None, Some(&log))
                    .map_err(|e| CliError::Data(format!("{}: {e}", log.display())))?;
                probes = store.probes();
            }
            let pending = probes.iter().filter(|p| p.review_status == ReviewStatus::Pending).count();
            if pending > 0 {
                tracing::warn!("lenient review mode: {pending} unreviewed probes included");
            }
            probes.into_iter().filter(|p| p.review_status != ReviewStatus::Rejected).collect()
        }
    };
    Ok(probes
        .into_iter()
        .filter(|p| cfg.ptypes.contains(&p.ptype) && cfg.modes.contains(&p.mode))
        .collect())
}

pub fn run(cfg: &RunConfig, args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let models = resolve_models(cfg, &args.models)?;
    let bank = match &cfg.demo_bank {
        Some(p) => DemoBank::load(p).map_err(|e| CliError::Config(e.to_string()))?,
        None => DemoBank::default(),
    };
    for &r in &cfg.regimes {
        bank.check(r).map_err(|e| CliError::Config(e.to_string()))?;
    }
    let corpus = load_corpus(&cfg.path(CORPUS))?;

    let mut jobs = Vec::new();
    if args.originals != Originals::Skip {
        jobs.extend(corpus.pairs().iter().map(Job::original));
    }
    if args.originals != Originals::Only {
        for p in select_probes(cfg, args.probes.as_deref())? {
            let job = Job::probe(&corpus, &p)
                .ok_or_else(|| CliError::Data(format!("probe {} has no origin in the corpus", p.probe_ref())))?;
            jobs.push(job);
        }
    }

    let gateways = models
        .into_iter()
        .map(|m| Gateway::new(m).map_err(|e| CliError::Config(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let rt = tokio::runtime::Runtime::new().map_err(CliError::io("starting runtime"))?;
    let meta = run_meta(cfg);
    let mut records: Vec<RunRecord> = Vec::new();
    for gw in &gateways {
        tracing::info!(model = gw.config().label(), jobs = jobs.len(), "running");
        let recs = rt
            .block_on(run_jobs(gw, &jobs, &cfg.regimes, &bank))
            .map_err(|e| CliError::Config(e.to_string()))?;
        records.extend(recs);
    }
    for r in &mut records {
        r.meta = Some(meta.clone());
    }

    ensure_dir(cfg)?;
    let path = args.ledger.clone().unwrap_or_else(|| cfg.path(LEDGER));
    let ctx = || format!("writing {}", path.display());
    let mut w = BufWriter::new(File::create(&path).map_err(CliError::io(ctx()))?);
    write_records(&mut w, &records).map_err(CliError::io(ctx()))?;
    w.flush().map_err(CliError::io(ctx()))?;
    write_sidecar(&path, &meta)?;

    let mut failures = 0;
    for gw in &gateways {
        let label = gw.config().label();
        let mine: Vec<&RunRecord> = records.iter().filter(|r| r.model == label).collect();
        let invalid = mine.iter().filter(|r| r.verdict.as_ref().is_some_and(|v| v.invalid)).count();
        let transport = mine.iter().filter(|r| r.transport_error.is_some()).count();
        failures += transport;
        let _ = writeln!(
            out,
            "{label}: {} records, {invalid} invalid, {transport} transport failures",
            mine.len()
        );
    }
    let _ = writeln!(out, "wrote {}", path.display());
    if failures > 0 {
        return Err(CliError::Transport(format!(
            "{failures} requests failed after all retries; see transport_error in {}",
            path.display()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct ReportArgs {
    pub ledgers: Vec<PathBuf>,
    pub force: bool,
}

pub fn load_ledgers(cfg: &RunConfig, paths: &[PathBuf]) -> Result<Vec<RunRecord>, CliError> {
    let defaults = [cfg.path(LEDGER)];
    let paths = if paths.is_empty() { &defaults[..] } else { paths };
    let mut records = Vec::new();
    for path in paths {
        require(path, "run ledger", "run")?;
        let f = File::open(path).map_err(CliError::io(format!("reading {}", path.display())))?;
        let recs = read_records(BufReader::new(f)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        records.extend(recs);
    }
    Ok(records)
}

pub fn render_full_report(records: &[RunRecord]) -> String {
    let cells = eval::report(records);
    let mut s = String::from("Per-class accuracy, % (delta vs original)\n\n");
    s.push_str(&eval::render_report_text(&cells, &HashMap::new()));
    s.push_str("\nInvalid outputs\n\n");
    s.push_str(&eval::render_invalid_text(&eval::invalid_table(records)));
    s.push_str("\nMean token lengths\n");
    let groups: BTreeSet<(&str, PromptRegime)> = records.iter().map(|r| (r.model.as_str(), r.regime)).collect();
    for (model, regime) in groups {
        let mine: Vec<RunRecord> = records
            .iter()
            .filter(|r| r.model == model && r.regime == regime)
            .cloned()
            .collect();
        let rows = eval::token_length_summary(&mine);
        if rows.is_empty() {
            continue;
        }
        s.push_str(&format!("\n-- {model}, {regime} --\n"));
        s.push_str(&eval::render_token_text(&rows));
    }
    s
}

pub fn report(cfg: &RunConfig, args: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let records = load_ledgers(cfg, &args.ledgers)?;
    let hashes: BTreeSet<Option<&str>> = records
        .iter()
        .map(|r| r.meta.as_ref().map(|m| m.config_hash.as_str()))
        .collect();
    if hashes.len() > 1 {
        let list: Vec<&str> = hashes.iter().map(|h| h.unwrap_or("none")).collect();
        if !args.force {
            return Err(CliError::Data(format!(
                "ledgers mix configurations ({}); pass --force to report on them together",
                list.join(", ")
            )));
        }
        tracing::warn!("reporting across configurations {}", list.join(", "));
    }
    let meta = match (hashes.len(), records.first().and_then(|r| r.meta.clone())) {
        (1, Some(m)) => m,
        _ => run_meta(cfg),
    };

    ensure_dir(cfg)?;
    let cells = eval::report(&records);
    let cpath = cfg.path(REPORT_CSV);
    let f = File::create(&cpath).map_err(CliError::io(format!("writing {}", cpath.display())))?;
    eval::write_report_csv(BufWriter::new(f), &cells).map_err(|e| CliError::Data(e.to_string()))?;
    write_sidecar(&cpath, &meta)?;
    let text = render_full_report(&records);
    let tpath = cfg.path(REPORT_TXT);
    std::fs::write(&tpath, &text).map_err(CliError::io(format!("writing {}", tpath.display())))?;
    write_sidecar(&tpath, &meta)?;
    let _ = write!(out, "{text}");
    let _ = writeln!(out, "\nwrote {} and {}", cpath.display(), tpath.display());
    Ok(())
}
