//! Acceptance suite. One PASS/FAIL line per criterion; exits non-zero if
//! any criterion fails.

#[path = "../../core/tests/support/props.rs"]
mod props;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestError, TestRng, TestRunner};
use rust_decimal::Decimal;

use numprobe_core::corpus::{self, ClaimEvidencePair, Corpus, SchemaMap, VeracityLabel};
use numprobe_core::eval::{delta_pct, fmt_delta, invalid_rate};
use numprobe_core::ledger::{ModelVerdict, ProbeRef, RunRecord};
use numprobe_core::numparse::{detect_mentions, words_to_number, EntityCategory};
use numprobe_core::perturb::{
    generate_suite, perturb, transition_label, write_probes, PerturbMode, PerturbationType, RangeDirection,
};
use numprobe_core::prompts::{build_prompt, DemoBank, PromptRegime};
use numprobe_cli::config::RunConfig;

type Outcome = Result<String, String>;

const CASES: u32 = 1000;
const RNG_SEED: [u8; 32] = *b"numprobe-acceptance-fixed-seed!!";

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- golden

fn golden() -> Outcome {
    use PerturbMode::*;
    use PerturbationType::*;
    let cases: [(&str, PerturbationType, PerturbMode, u64, &str); 7] = [
        ("The city hired 12 new teachers.", Num, Preserve, 0, "The city hired twelve new teachers."),
        ("The charity raised 1,025 dollars.", Approx, Preserve, 0, "The charity raised about 1000 dollars."),
        ("Unemployment rose 25 percent.", Range, Preserve, 0, "Unemployment rose between 20 and 30 percent."),
        ("Unemployment rose 25 percent.", Range, Flip, 1, "Unemployment rose between 30 and 40 percent."),
        ("The city has 100,000 residents.", Mask, Flip, 0, "The city has ####### residents."),
        ("Crime fell 4% statewide.", NegNum, Flip, 0, "Crime fell -4% statewide."),
        ("The fund held 5,000,000 dollars.", Num, Preserve, 0, "The fund held five million dollars."),
    ];
    for (claim, ptype, mode, seed, want) in cases {
        let rw = perturb(claim, &detect_mentions(claim), ptype, mode, seed)
            .map_err(|e| format!("{ptype} {mode} on {claim:?}: {e}"))?;
        ensure(rw.text == want, || format!("{ptype} {mode}: got {:?}, want {want:?}", rw.text))?;
        if ptype == Range && mode == Flip {
            ensure(rw.touched[0].direction == Some(RangeDirection::Up), || "range flip seed 1 is not upward".into())?;
        }
    }
    let back = words_to_number("five million").map_err(|e| e.to_string())?;
    ensure(back == Decimal::from(5_000_000), || format!("five million -> {back}"))?;
    Ok(format!("{} worked examples byte-exact", cases.len()))
}

// ---------------------------------------------------------------- transitions

fn load_dump(name: &str) -> Result<Corpus, String> {
    corpus::ingest(&fixture(name), &SchemaMap::default())
        .map(|(c, _)| c)
        .map_err(|e| e.to_string())
}

fn transition_semantics() -> Outcome {
    let corpus = load_dump("pairs50.jsonl")?;
    ensure(corpus.len() == 50, || format!("fixture holds {} pairs", corpus.len()))?;
    let suite = generate_suite(&corpus, &PerturbationType::ALL, 42);
    for p in &suite.probes {
        let origin = corpus.get(&p.origin_id).ok_or("probe without origin")?;
        let no_keep = matches!(p.ptype, PerturbationType::Mask | PerturbationType::RandRepl | PerturbationType::NegNum);
        ensure(!(no_keep && origin.label == VeracityLabel::True && p.expected_label == VeracityLabel::True), || {
            format!("{} is a True->True probe", p.probe_ref())
        })?;
        let want = transition_label(origin.label, p.ptype, p.mode).map_err(|e| e.to_string())?;
        ensure(p.expected_label == want, || format!("{} expected label mismatch", p.probe_ref()))?;
        if p.ptype == PerturbationType::NegNum {
            let ms = detect_mentions(&origin.claim);
            for t in &p.touched {
                let m = ms.iter().find(|m| m.start == t.start).ok_or("touched span is not a mention")?;
                ensure(m.category == EntityCategory::Percent, || format!("{} negates a {:?}", p.probe_ref(), m.category))?;
            }
        }
    }
    for ptype in PerturbationType::ALL {
        ensure(suite.probes.iter().any(|p| p.ptype == ptype), || format!("no {ptype} probes"))?;
        let row = suite.counts.row(ptype).ok_or("missing row")?;
        ensure(row.t_to_t.is_some() == ptype.modes().contains(&PerturbMode::Preserve), || format!("{ptype} T->T cell"))?;
    }
    Ok(format!("{} probes, {} skips checked", suite.probes.len(), suite.skipped.len()))
}

// ---------------------------------------------------------------- properties

fn runner() -> TestRunner {
    let cfg = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(cfg, TestRng::from_seed(RngAlgorithm::ChaCha, &RNG_SEED))
}

fn run_prop<S: Strategy>(name: &str, s: S, check: impl Fn(S::Value) -> Result<(), String>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner()
        .run(&s, |v| check(v).map_err(TestCaseError::fail))
        .map_err(|e| match e {
            TestError::Fail(why, v) => format!("{name}: {why} (input {v:?})"),
            TestError::Abort(why) => format!("{name}: aborted: {why}"),
        })
}

fn suite_bytes(corpus: &Corpus, threads: usize) -> Result<Vec<u8>, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    let suite = pool.install(|| generate_suite(corpus, &PerturbationType::ALL, 42));
    let mut buf = Vec::new();
    write_probes(&mut buf, &suite.probes).map_err(|e| e.to_string())?;
    for s in &suite.skipped {
        buf.extend(format!("{} {} {} {}\n", s.origin_id, s.ptype, s.mode, s.reason).bytes());
    }
    Ok(buf)
}

fn properties() -> Outcome {
    use proptest::prelude::*;
    for n in 0..=10_000u64 {
        props::check_words_round_trip(n)?;
    }
    run_prop("words round trip", 0u64..=1_000_000, props::check_words_round_trip)?;
    run_prop("mask length", props::claim_strategy(), |g| props::check_mask(&g))?;
    run_prop("rand-repl", (props::claim_strategy(), any::<u64>()), |(g, s)| props::check_rand_repl(&g, s))?;
    run_prop("range preserve", (props::claim_strategy(), any::<u64>()), |(g, s)| {
        props::check_range(&g, PerturbMode::Preserve, s)
    })?;
    run_prop("range flip", (props::claim_strategy(), any::<u64>()), |(g, s)| {
        props::check_range(&g, PerturbMode::Flip, s)
    })?;
    run_prop("approx flip factor", (props::claim_strategy(), any::<u64>()), |(g, s)| {
        props::check_approx_factor(&g, s)
    })?;
    run_prop("operator determinism", (props::claim_strategy(), any::<u64>()), |(g, s)| {
        let ms = detect_mentions(&g.claim);
        for ptype in PerturbationType::ALL {
            for &mode in ptype.modes() {
                let a = perturb(&g.claim, &ms, ptype, mode, s);
                let b = perturb(&g.claim, &ms, ptype, mode, s);
                ensure(a == b, || format!("{ptype} {mode} differs between runs"))?;
            }
        }
        Ok(())
    })?;

    let corpus = load_dump("pairs50.jsonl")?;
    let one = suite_bytes(&corpus, 1)?;
    ensure(one == suite_bytes(&corpus, 1)?, || "suite differs between two runs".into())?;
    ensure(one == suite_bytes(&corpus, 4)?, || "suite differs between 1 and 4 workers".into())?;
    Ok(format!("7 properties x {CASES} cases, words exhaustive to 10^4, suite identical on 1 and 4 workers"))
}

// ---------------------------------------------------------------- arithmetic

fn records_with_invalid(total: usize, invalid: usize) -> Vec<RunRecord> {
    (0..total)
        .map(|i| {
            let bad = i < invalid;
            let v = ModelVerdict {
                raw: if bad { "unsure".into() } else { "{\"label\": true}".into() },
                label: (!bad).then_some(VeracityLabel::True),
                invalid: bad,
                ..ModelVerdict::default()
            };
            RunRecord::new(
                ProbeRef::original(&format!("c{i}")),
                PromptRegime::ZeroShot,
                "m",
                VeracityLabel::True,
                VeracityLabel::True,
                Ok(v),
            )
        })
        .collect()
}

fn arithmetic() -> Outcome {
    for (total, invalid, want) in [(6837, 477, "6.98"), (6553, 165, "2.52")] {
        let r = invalid_rate(&records_with_invalid(total, invalid));
        ensure(r.total_n == total as u64 && r.invalid_n == invalid as u64, || "invalid counts".into())?;
        ensure(r.pct.to_string() == want, || format!("{invalid}/{total} -> {}, want {want}", r.pct))?;
    }
    let d = |s: &str| s.parse::<Decimal>().unwrap();
    let tol = d("0.01");
    for (baseline, perturbed, want) in [("87.32", "10.80", "-76.53"), ("76.15", "93.53", "17.38")] {
        let got = delta_pct(d(perturbed), d(baseline));
        ensure((got - d(want)).abs() <= tol, || format!("delta {baseline} -> {perturbed} = {got}, want {want}"))?;
    }
    ensure(fmt_delta(Some(d("17.38"))) == "+17.38", || "positive deltas carry a sign".into())?;
    Ok("invalid 6.98% and 2.52%; deltas -76.53 and +17.38 within 0.01".into())
}

// ---------------------------------------------------------------- end to end

fn cli(dir: &Path, args: &[&str]) -> Result<String, String> {
    let mut argv = vec!["numprobe".to_string(), "--output-dir".into(), dir.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let mut out = Vec::new();
    let code = numprobe_cli::main_with_args(argv, &mut out);
    let text = String::from_utf8_lossy(&out).into_owned();
    ensure(code == 0, || format!("{args:?} exited {code}: {text}"))?;
    Ok(text)
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    let input = fixture("pairs20.jsonl");
    cli(d, &["ingest", "--input", input.to_str().unwrap()])?;
    cli(d, &["--types", "mask", "perturb"])?;
    cli(d, &["--types", "mask", "run", "--model", "mock-oracle", "--regimes", "zero-shot"])?;
    cli(d, &["report"])?;

    let ledger = std::fs::read_to_string(d.join("ledger.jsonl")).map_err(|e| e.to_string())?;
    ensure(ledger.lines().count() == 40, || "ledger should hold 20 originals and 20 probes".into())?;
    let csv = std::fs::read_to_string(d.join("report.csv")).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    // split, ptype, n, invalid_n, accuracy, delta
    let expected = [
        ("true", "original", "12", "0", "83.33", "0.00"),
        ("true", "Mask", "12", "0", "100.00", "16.67"),
        ("false", "original", "8", "0", "75.00", "0.00"),
        ("false", "Mask", "8", "0", "100.00", "25.00"),
    ];
    ensure(rows.len() == expected.len(), || format!("report has {} rows:\n{csv}", rows.len()))?;
    for (split, ptype, n, inv, acc, delta) in expected {
        let row = rows
            .iter()
            .find(|r| r[9] == split && r[2] == ptype)
            .ok_or_else(|| format!("no {split}/{ptype} row"))?;
        let got = (row[4], row[5], row[6], row[8]);
        ensure(got == (n, inv, acc, delta), || format!("{split}/{ptype}: got {got:?}"))?;
    }
    Ok("20 pairs, zero-shot: 83.33/75.00 originals, Mask 100.00 on both classes".into())
}

// ---------------------------------------------------------------- prompts

const SYSTEM: &str = "You are a professional fact checker, your task is to classify whether the given claim is true or false based on the evidence text provided.";
const INSTRUCTION: &str = "Given the claim and evidence provided, classify the claim as {\"label\": true} if it is true, and {\"label\": false} if it is false.";

fn prompts() -> Outcome {
    let raw: serde_json::Value =
        serde_json::from_str(include_str!("../../core/assets/demo_bank.json")).map_err(|e| e.to_string())?;
    let bank = DemoBank::default();
    for regime in PromptRegime::ALL {
        let b = build_prompt("c", &["e".to_string()], regime, &bank).map_err(|e| e.to_string())?;
        ensure(b.system == SYSTEM && b.system == raw["system"], || format!("{regime}: system prompt differs"))?;
        ensure(b.instruction == INSTRUCTION && b.instruction == raw["instruction"], || {
            format!("{regime}: instruction differs")
        })?;
        let demos = serde_json::to_value(&b.demonstrations).map_err(|e| e.to_string())?;
        match regime {
            PromptRegime::ZeroShot => ensure(b.demonstrations.is_empty(), || "zero-shot has demonstrations".into())?,
            PromptRegime::TwoShot => {
                ensure(demos == raw["two_shot"], || "two-shot demos differ from the bank".into())?;
                let t = b.demonstrations.iter().filter(|d| d.label == VeracityLabel::True).count();
                let f = b.demonstrations.iter().filter(|d| d.label == VeracityLabel::False).count();
                ensure((t, f) == (1, 1), || format!("two-shot has {t} True and {f} False"))?;
            }
            PromptRegime::Pap => {
                ensure(demos == raw["pap"], || "PAP demos differ from the bank".into())?;
                ensure(b.preamble.as_deref() == raw["pap_preamble"].as_str(), || "PAP preamble differs".into())?;
                let mut kinds: Vec<_> = b.demonstrations.iter().filter_map(|d| d.ptype).collect();
                kinds.sort();
                kinds.dedup();
                ensure(b.demonstrations.len() == 6 && kinds.len() == 6, || "PAP needs one demo per operator".into())?;
            }
        }
    }
    Ok("system, instruction, two-shot and six PAP demos match".into())
}

// ---------------------------------------------------------------- dataset

const DATASET_ENV: &str = "NUMPROBE_QUANTEMP_CONFIG";

/// Rows compared on the full dataset: T->T, F->F, T->F.
const FULL_ROWS: [(PerturbationType, Option<usize>, usize, usize); 4] = [
    (PerturbationType::Num, Some(213), 490, 213),
    (PerturbationType::Approx, Some(170), 404, 170),
    (PerturbationType::Range, Some(188), 411, 188),
    (PerturbationType::NegNum, None, 89, 51),
];

fn dataset() -> Option<Outcome> {
    let cfg_path = std::env::var_os(DATASET_ENV)?;
    Some((|| {
        let cfg = RunConfig::load(Path::new(&cfg_path)).map_err(|e| e.to_string())?;
        let dump = cfg.corpus.path.clone().ok_or("config has no corpus.path")?;
        let (corpus, _) = corpus::ingest(&dump, &cfg.corpus.schema).map_err(|e| e.to_string())?;
        let (t, f) = corpus.split_by_label();
        ensure((t.len(), f.len()) == (260, 604), || format!("split is {}/{}, want 260/604", t.len(), f.len()))?;
        let suite = generate_suite(&corpus, &PerturbationType::ALL, cfg.seed);
        let mut bad = Vec::new();
        for (ptype, tt, ff, tf) in FULL_ROWS {
            let row = suite.counts.row(ptype).ok_or("missing row")?;
            let off = |a: usize, b: usize| a.abs_diff(b) > 2;
            let tt_off = match (row.t_to_t, tt) {
                (Some(a), Some(b)) => off(a, b),
                (a, b) => a.is_some() != b.is_some(),
            };
            if tt_off || off(row.f_to_f, ff) || off(row.t_to_f, tf) {
                bad.push(ptype);
            }
        }
        if bad.is_empty() {
            return Ok("260/604 split; Num, Approx, Range, NegNum rows within 2".into());
        }
        let report = std::env::temp_dir().join("numprobe-dataset-divergence.txt");
        let mut text = suite.counts.to_table();
        for ptype in &bad {
            text.push_str(&format!("\n{ptype} claims with probes:\n"));
            for p in suite.probes.iter().filter(|p| p.ptype == *ptype) {
                let claim = corpus.get(&p.origin_id).map_or("", |c: &ClaimEvidencePair| c.claim.as_str());
                text.push_str(&format!("{}\t{claim}\t{}\n", p.probe_ref(), p.text));
            }
        }
        let _ = std::fs::write(&report, text);
        Err(format!("rows {bad:?} diverge by more than 2; per-claim listing in {}", report.display()))
    })())
}

// ---------------------------------------------------------------- main

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 6] = [
        ("golden perturbations", Duration::from_secs(1), golden),
        ("label-transition semantics", Duration::from_secs(5), transition_semantics),
        ("property suite", Duration::from_secs(60), properties),
        ("evaluation arithmetic", Duration::from_secs(1), arithmetic),
        ("mock-oracle end to end", Duration::from_secs(10), end_to_end),
        ("prompt fidelity", Duration::from_secs(1), prompts),
    ];
    let mut failed = 0;
    for (name, budget, f) in criteria {
        let t = Instant::now();
        let res = f();
        let took = t.elapsed();
        let res = res.and_then(|d| {
            ensure(took <= budget, || format!("took {took:.2?}, over the {budget:?} budget")).map(|_| d)
        });
        match res {
            Ok(detail) => println!("PASS  {name}: {detail} [{:.2?}, budget {budget:?}]", took),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{:.2?}]", took);
            }
        }
    }
    match dataset() {
        None => println!("SKIPPED  full-dataset transition counts: set {DATASET_ENV} to a config with corpus.path"),
        Some(Ok(detail)) => println!("PASS  full-dataset transition counts: {detail}"),
        Some(Err(why)) => {
            failed += 1;
            println!("FAIL  full-dataset transition counts: {why}");
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
