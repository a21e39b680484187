//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

mod common;

use std::time::{Duration, Instant};

use common::{fixture, myopic, num};
use myopic_core::formulas::{
    myopic_pair_reward, ClosedFormInput, FormulaVariant, COUNTEREXAMPLE_1,
};
use myopic_core::search::{sample_instance, IntRange, PConstraint, SweepSpec};
use myopic_core::{
    build_remark_policy, evaluate_policy, myopic_gap, optimal_value, BeliefVector, ChannelModel,
    ExperimentConfig, PolicySpec, PolicyTree, SensingAction, UtilityKind, DEFAULT_NODE_BUDGET,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Prints the verdict line (shown for failures, or always with `--nocapture`).
fn verdict(id: u32, name: &str, ok: bool, detail: String) {
    println!(
        "criterion {id:>2} [{}] {name}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn reproduce(id: &str) -> (serde_json::Value, i32, Duration) {
    let run = myopic(&["reproduce", id]);
    (run.json(), run.code, run.elapsed)
}

#[test]
fn criterion_01_counterexample_one() {
    let (r, code, elapsed) = reproduce("1");
    let res = &r["result"];
    let gap = num(&res["evaluator"]["gap"]);
    let closed = num(&res["closed_form"]["corrected"]["gap"]);
    let printed = 0.000_056_25;
    let ok = (gap - printed).abs() <= 1e-9
        && (closed - gap).abs() <= 1e-12
        && elapsed < Duration::from_secs(1)
        && code == 0;
    verdict(
        1,
        "counterexample 1 gap 0.00005625 within 1e-9",
        ok,
        format!(
            "evaluator gap {gap:e}, closed-form gap {closed:e}, printed {printed:e}, exit {code}, {elapsed:?}"
        ),
    );
}

#[test]
fn criterion_02_counterexample_two() {
    let (r, code, elapsed) = reproduce("2");
    let res = &r["result"];
    let gap = num(&res["evaluator"]["gap"]);
    let matching: Vec<&str> = res["matching_variants"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let ok = (gap - 0.000_02).abs() <= 5e-6
        && gap > 0.0
        && !matching.is_empty()
        && elapsed < Duration::from_secs(1)
        && code == 0;
    verdict(
        2,
        "counterexample 2 gap 0.00002 within 5e-6",
        ok,
        format!("evaluator gap {gap:e}, matching variants {matching:?}, exit {code}, {elapsed:?}"),
    );
}

fn sweep(id: u32, claim: &str, limit: Duration) {
    let run = myopic(&["verify", claim]);
    let r = run.json();
    let findings = r["result"]["findings_total"].as_u64().unwrap();
    let checked = r["result"]["instances_checked"].as_u64().unwrap();
    let ok = run.code == 0 && findings == 0 && run.elapsed < limit;
    verdict(
        id,
        &format!("{claim} sweep has no findings"),
        ok,
        format!(
            "{checked} instances, {findings} findings, exit {}, {:?}",
            run.code, run.elapsed
        ),
    );
}

#[test]
fn criterion_03_positive_correlation_sweep() {
    sweep(3, "thm1", Duration::from_secs(300));
}

#[test]
fn criterion_04_negative_correlation_sweep() {
    sweep(4, "thm2", Duration::from_secs(60));
}

#[test]
fn criterion_05_single_channel_sweep() {
    sweep(5, "k1-cited", Duration::from_secs(300));
}

#[test]
fn criterion_06_closed_form_matches_evaluator() {
    let mut worst: f64 = 0.0;
    for n in 3..=6 {
        let mut spec = SweepSpec::grid(
            IntRange::single(n),
            IntRange::single(2),
            IntRange::single(2),
            0.1,
            PConstraint::P11GeP01,
        );
        spec.budget = DEFAULT_NODE_BUDGET;
        for trial in 0..1000 {
            let cfg = sample_instance(&spec, 6, trial).unwrap();
            let input = ClosedFormInput::from_unsorted(cfg.initial_belief(), *cfg.model()).unwrap();
            let closed = myopic_pair_reward(&input, FormulaVariant::Corrected);
            let exact = evaluate_policy(&cfg, &PolicySpec::Myopic)
                .unwrap()
                .total_expected_reward;
            worst = worst.max((closed - exact).abs());
        }
    }
    verdict(
        6,
        "closed-form myopic reward equals evaluator",
        worst <= 1e-12,
        format!("4000 instances, max |difference| {worst:e}"),
    );
}

#[test]
fn criterion_07_remark_extension() {
    let cfg = COUNTEREXAMPLE_1.config().with_horizon(3).unwrap();
    let remark = build_remark_policy(&cfg, &COUNTEREXAMPLE_1.alternative_action()).unwrap();
    let r = evaluate_policy(&cfg, &remark)
        .unwrap()
        .total_expected_reward;
    let m = evaluate_policy(&cfg, &PolicySpec::Myopic)
        .unwrap()
        .total_expected_reward;
    verdict(
        7,
        "three-slot extension beats myopic",
        r - m > 1e-9,
        format!("extension {r}, myopic {m}, margin {:e}", r - m),
    );
}

fn random_action(rng: &mut ChaCha8Rng, n: usize, k: usize) -> SensingAction {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(k);
    SensingAction::new(all, n).unwrap()
}

fn random_tree(rng: &mut ChaCha8Rng, n: usize, k: usize, depth: usize) -> PolicyTree {
    let action = random_action(rng, n, k);
    if depth == 1 {
        return PolicyTree::leaf(action);
    }
    let children = (0..1usize << k)
        .map(|_| Some(random_tree(rng, n, k, depth - 1)))
        .collect();
    PolicyTree::node(action, children).unwrap()
}

#[test]
fn criterion_08_optimal_dominates() {
    let mut spec = SweepSpec::grid(
        IntRange::new(3, 5),
        IntRange::new(1, 3),
        IntRange::new(1, 3),
        0.1,
        PConstraint::Any,
    );
    spec.budget = DEFAULT_NODE_BUDGET;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for trial in 0..200 {
        let cfg = sample_instance(&spec, 8, trial).unwrap();
        let best = optimal_value(&cfg).unwrap().total_expected_reward;
        let mut policies = vec![PolicySpec::Myopic];
        for _ in 0..5 {
            policies.push(PolicySpec::ExplicitTree(random_tree(
                &mut rng,
                cfg.channels(),
                cfg.sense_k(),
                cfg.horizon(),
            )));
        }
        for p in &policies {
            let v = evaluate_policy(&cfg, p).unwrap().total_expected_reward;
            worst = worst.min(best - v);
            checked += 1;
        }
    }
    verdict(
        8,
        "optimal value dominates every policy",
        worst >= -1e-12,
        format!("{checked} evaluations, min(optimal - policy) {worst:e}"),
    );
}

#[test]
fn criterion_09_monte_carlo_consistency() {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["counterexample1.toml", "counterexample2.toml"] {
        let cfg = fixture(name);
        let run = myopic(&[
            "simulate",
            "--config",
            &cfg,
            "--episodes",
            "100000",
            "--seed",
            "42",
        ]);
        let r = run.json();
        let res = &r["result"];
        let dev = num(&res["deviation"]).abs();
        let se = num(&res["estimate"]["std_error"]);
        let this = run.code == 0 && dev <= 4.0 * se && run.elapsed < Duration::from_secs(30);
        ok &= this;
        details.push(format!(
            "{name}: |mean - exact| {dev:.3e} vs 4 se {:.3e}, {:?}",
            4.0 * se,
            run.elapsed
        ));
    }
    verdict(
        9,
        "simulation within 4 standard errors",
        ok,
        details.join("; "),
    );
}

#[test]
fn criterion_10_memoryless_chain_has_no_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let start = Instant::now();
    for step in 0..=10 {
        let p = step as f64 / 10.0;
        let model = ChannelModel::new(p, p).unwrap();
        for n in 1..=5 {
            for k in 1..=n {
                for t in 1..=3 {
                    for _ in 0..2 {
                        let belief: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                        let cfg = ExperimentConfig::new(
                            k,
                            t,
                            UtilityKind::AtLeastOne,
                            model,
                            BeliefVector::new(belief).unwrap(),
                        )
                        .unwrap();
                        worst = worst.max(myopic_gap(&cfg).unwrap().abs());
                        count += 1;
                    }
                }
            }
        }
    }
    verdict(
        10,
        "p01 = p11 gives zero gap",
        worst <= 1e-12,
        format!(
            "{count} instances, max |gap| {worst:e}, {:?}",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_11_seeded_commands_are_deterministic() {
    let ce1 = fixture("counterexample1.toml");
    let commands: Vec<Vec<&str>> = vec![
        vec!["reproduce", "1"],
        vec!["reproduce", "2", "--variant", "as-printed"],
        vec!["eval", "--config", &ce1, "--policy", "optimal"],
        vec!["search", "--seed", "5", "--trials", "3000"],
        vec![
            "search", "--seed", "5", "--trials", "3000", "--output", "csv",
        ],
        vec![
            "simulate",
            "--config",
            &ce1,
            "--episodes",
            "20000",
            "--seed",
            "9",
        ],
        vec!["errata", "--instances", "2000", "--seed", "3"],
        vec!["verify", "k1-cited"],
    ];
    let mut mismatches = Vec::new();
    for args in &commands {
        let a = myopic(args);
        let b = myopic(args);
        let mut single = args.clone();
        single.extend(["--jobs", "1"]);
        let c = myopic(&single);
        if a.stdout != b.stdout || a.stdout != c.stdout || a.stdout.is_empty() {
            mismatches.push(args.join(" "));
        }
    }
    verdict(
        11,
        "repeated seeded commands give identical reports",
        mismatches.is_empty(),
        format!(
            "{} commands run 3 times each (one single-threaded); differing: {mismatches:?}",
            commands.len()
        ),
    );
}
