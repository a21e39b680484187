//! Parameter sweeps and random search for instances where myopic sensing
//! is not optimal.
//!
//! Channels are i.i.d., so permuting the belief vector changes nothing;
//! grids therefore enumerate only non-increasing belief tuples. Each grid
//! point is an independent work item. The `*_batched` entry points hand
//! batches to a caller-supplied runner (which may evaluate in parallel) and
//! keep results in enumeration order.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, for_each_non_increasing};
use crate::error::{Error, Result};
use crate::formulas::{
    gap_identities, myopic_pair_reward, outer_pair_bound, top_far_bound, top_third_bound,
    ClosedFormInput, FormulaVariant,
};
use crate::model::{BeliefVector, ChannelModel, UtilityKind};
use crate::policy::{ExperimentConfig, OptimalSolver, PolicySpec};

/// Default threshold separating a real gap from rounding noise.
pub const DEFAULT_GAP_THRESHOLD: f64 = 1e-9;

/// Default node budget for a whole sweep.
pub const DEFAULT_SWEEP_BUDGET: u64 = 10_000_000_000;

/// Work items handed to a batch runner at a time.
pub const DEFAULT_BATCH: usize = 4096;

/// Which `(p01, p11)` pairs a sweep admits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PConstraint {
    /// Positively correlated channels.
    P11GeP01,
    /// Negatively correlated channels.
    P11LtP01,
    /// No restriction.
    Any,
    /// `p11 = p01`: the state carries no memory.
    Equal,
}

impl PConstraint {
    /// Whether the pair is admitted.
    pub fn admits(self, p01: f64, p11: f64) -> bool {
        match self {
            PConstraint::P11GeP01 => p11 >= p01,
            PConstraint::P11LtP01 => p11 < p01,
            PConstraint::Any => true,
            PConstraint::Equal => p11 == p01,
        }
    }
}

/// Points on `[0, 1]`: a uniform step or an explicit list.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Grid {
    /// `{0, s, 2s, …, 1}`; `1/s` must be an integer.
    Step(f64),
    /// Explicit values in `[0, 1]`.
    Values(Vec<f64>),
}

impl Grid {
    /// Grid points in ascending order without duplicates.
    pub fn points(&self) -> Result<Vec<f64>> {
        match self {
            Grid::Step(step) => {
                if !(*step > 0.0 && *step <= 1.0) {
                    return Err(Error::contract(format!("grid step {step} not in (0, 1]")));
                }
                let divisions = libm::round(1.0 / step);
                if libm::fabs(divisions * step - 1.0) > 1e-9 {
                    return Err(Error::contract(format!(
                        "grid step {step} does not divide [0, 1] evenly"
                    )));
                }
                let m = divisions as usize;
                Ok((0..=m).map(|i| i as f64 / divisions).collect())
            }
            Grid::Values(values) => {
                if values.is_empty() {
                    return Err(Error::contract("explicit grid is empty"));
                }
                let mut v = BeliefVector::new(values.clone())?.into_vec();
                v.sort_by(f64::total_cmp);
                v.dedup();
                Ok(v)
            }
        }
    }
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct IntRange {
    /// Smallest value.
    pub lo: usize,
    /// Largest value.
    pub hi: usize,
}

impl IntRange {
    /// `lo..=hi`.
    pub const fn new(lo: usize, hi: usize) -> Self {
        Self { lo, hi }
    }

    /// The single value `v`.
    pub const fn single(v: usize) -> Self {
        Self { lo: v, hi: v }
    }

    fn iter(self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }

    fn sample(self, rng: &mut ChaCha8Rng) -> usize {
        rng.random_range(self.lo..=self.hi)
    }
}

/// What to sweep and how to judge it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SweepSpec {
    /// Channel counts `N`.
    pub channels: IntRange,
    /// Sensing widths `k`.
    pub sense_k: IntRange,
    /// Horizons `T`.
    pub horizon: IntRange,
    /// Values each belief entry takes.
    pub belief_grid: Grid,
    /// Values `p01` and `p11` take.
    pub p_grid: Grid,
    /// Admissible `(p01, p11)` pairs.
    pub p_constraint: PConstraint,
    /// Reward rule.
    pub utility: UtilityKind,
    /// Gaps above this are findings.
    pub gap_threshold: f64,
    /// Node budget: total for a sweep, per instance for random search.
    pub budget: u64,
}

impl SweepSpec {
    /// A sweep over uniform belief and probability grids with default threshold and budget.
    pub fn grid(
        channels: IntRange,
        sense_k: IntRange,
        horizon: IntRange,
        step: f64,
        p_constraint: PConstraint,
    ) -> Self {
        Self {
            channels,
            sense_k,
            horizon,
            belief_grid: Grid::Step(step),
            p_grid: Grid::Step(step),
            p_constraint,
            utility: UtilityKind::AtLeastOne,
            gap_threshold: DEFAULT_GAP_THRESHOLD,
            budget: DEFAULT_SWEEP_BUDGET,
        }
    }

    /// `k = 2, T = 2, N = 3..=6, p11 >= p01`: the positively correlated two-slot claim.
    pub fn positive_two_slot(step: f64) -> Self {
        Self::grid(
            IntRange::new(3, 6),
            IntRange::single(2),
            IntRange::single(2),
            step,
            PConstraint::P11GeP01,
        )
    }

    /// `k = 2, T = 2, N = 3..=4, p11 < p01`: the negatively correlated two-slot claim.
    pub fn negative_two_slot(step: f64) -> Self {
        Self::grid(
            IntRange::new(3, 4),
            IntRange::single(2),
            IntRange::single(2),
            step,
            PConstraint::P11LtP01,
        )
    }

    /// `N = 5` with `p11 < p01`, where no claim is made. Exploratory only.
    pub fn negative_two_slot_n5(step: f64) -> Self {
        Self::grid(
            IntRange::single(5),
            IntRange::single(2),
            IntRange::single(2),
            step,
            PConstraint::P11LtP01,
        )
    }

    /// Single-channel sensing (`k = 1`), `T = 2..=4`, `N = 2..=4`, `p11 >= p01`.
    pub fn single_channel(step: f64) -> Self {
        Self::grid(
            IntRange::new(2, 4),
            IntRange::single(1),
            IntRange::new(2, 4),
            step,
            PConstraint::P11GeP01,
        )
    }

    /// Checks ranges, grids, threshold and `k <= N` for every combination.
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("channels", self.channels),
            ("sense_k", self.sense_k),
            ("horizon", self.horizon),
        ] {
            if r.lo == 0 || r.lo > r.hi {
                return Err(Error::contract(format!(
                    "{name} range {}..={} must be non-empty and start at 1 or more",
                    r.lo, r.hi
                )));
            }
        }
        if self.sense_k.hi > self.channels.lo {
            return Err(Error::contract(format!(
                "k up to {} exceeds the smallest N = {}",
                self.sense_k.hi, self.channels.lo
            )));
        }
        if self.gap_threshold.is_nan() || self.gap_threshold < 0.0 {
            return Err(Error::contract("gap threshold must be non-negative"));
        }
        self.belief_grid.points()?;
        self.p_grid.points()?;
        Ok(())
    }

    /// Admissible `(p01, p11)` pairs, `p01` outer, both ascending.
    pub fn p_pairs(&self) -> Result<Vec<(f64, f64)>> {
        let pts = self.p_grid.points()?;
        let mut out = Vec::new();
        for &p01 in &pts {
            for &p11 in &pts {
                if self.p_constraint.admits(p01, p11) {
                    out.push((p01, p11));
                }
            }
        }
        Ok(out)
    }

    fn combos(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.channels.iter().flat_map(move |n| {
            self.sense_k
                .iter()
                .flat_map(move |k| self.horizon.iter().map(move |t| (n, k, t)))
        })
    }

    /// Number of grid instances: sorted belief tuples × admissible pairs, per `(N, k, T)`.
    pub fn instance_count(&self) -> Result<u64> {
        let m = self.belief_grid.points()?.len() as u64;
        let pairs = self.p_pairs()?.len() as u64;
        Ok(self
            .combos()
            .map(|(n, _, _)| binomial(m + n as u64 - 1, n as u64).saturating_mul(pairs))
            .fold(0u64, u64::saturating_add))
    }

    /// Nodes needed to sweep the whole grid.
    pub fn required_nodes(&self) -> Result<u64> {
        let m = self.belief_grid.points()?.len() as u64;
        let pairs = self.p_pairs()?.len() as u64;
        Ok(self
            .combos()
            .map(|(n, k, t)| {
                binomial(m + n as u64 - 1, n as u64)
                    .saturating_mul(pairs)
                    .saturating_mul(instance_cost(n, k, t))
            })
            .fold(0u64, u64::saturating_add))
    }
}

fn instance_cost(n: usize, k: usize, t: usize) -> u64 {
    crate::combinatorics::saturating_pow(
        binomial(n as u64, k as u64).saturating_mul(1 << k),
        t as u32,
    )
}

/// An instance where the myopic rule loses.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct Finding {
    /// The instance.
    pub cfg: ExperimentConfig,
    /// `optimal − myopic` expected total reward.
    pub gap: f64,
    /// Optimal tree realizing the gap.
    pub witness_policy: PolicySpec,
}

fn cmp_findings(a: &Finding, b: &Finding) -> Ordering {
    let key = |f: &Finding| (f.cfg.channels(), f.cfg.sense_k(), f.cfg.horizon());
    key(a)
        .cmp(&key(b))
        .then_with(|| a.cfg.model().p01().total_cmp(&b.cfg.model().p01()))
        .then_with(|| a.cfg.model().p11().total_cmp(&b.cfg.model().p11()))
        .then_with(|| {
            let (x, y) = (
                a.cfg.initial_belief().as_slice(),
                b.cfg.initial_belief().as_slice(),
            );
            x.iter()
                .zip(y)
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| a.gap.total_cmp(&b.gap))
}

/// Checks one instance. Returns a finding when the gap exceeds `threshold`.
pub fn check_instance(
    cfg: &ExperimentConfig,
    threshold: f64,
    solver: OptimalSolver,
) -> Result<Option<Finding>> {
    let gap = solver.myopic_gap(cfg)?;
    if gap <= threshold {
        return Ok(None);
    }
    let tree = solver
        .solve(cfg)?
        .action_tree
        .expect("solve always returns a tree");
    Ok(Some(Finding {
        cfg: cfg.clone(),
        gap,
        witness_policy: PolicySpec::ExplicitTree(tree),
    }))
}

/// Result of a grid sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct SweepOutcome {
    /// Instances where the gap exceeds the threshold, sorted.
    pub findings: Vec<Finding>,
    /// Instances actually evaluated.
    pub instances_checked: u64,
    /// Instances in the full grid.
    pub instances_total: u64,
    /// Nodes the full grid needs.
    pub nodes_required: u64,
    /// `false` when the budget stopped the sweep early.
    pub complete: bool,
}

/// Sequential grid sweep.
pub fn sweep_verify(spec: &SweepSpec) -> Result<SweepOutcome> {
    sweep_verify_batched(spec, DEFAULT_BATCH, |batch, solver, threshold| {
        batch
            .iter()
            .map(|cfg| check_instance(cfg, threshold, solver))
            .collect()
    })
}

/// Grid sweep with a caller-supplied batch runner.
///
/// The runner must return one result per input, in input order.
pub fn sweep_verify_batched<F>(spec: &SweepSpec, batch: usize, mut run: F) -> Result<SweepOutcome>
where
    F: FnMut(&[ExperimentConfig], OptimalSolver, f64) -> Vec<Result<Option<Finding>>>,
{
    spec.validate()?;
    let points = spec.belief_grid.points()?;
    let pairs = spec.p_pairs()?;
    let instances_total = spec.instance_count()?;
    let nodes_required = spec.required_nodes()?;
    let solver = OptimalSolver::new().with_budget(spec.budget);
    let batch = batch.max(1);

    let mut findings = Vec::new();
    let mut checked = 0u64;
    let mut spent = 0u64;
    let mut complete = true;
    let mut pending: Vec<ExperimentConfig> = Vec::with_capacity(batch);
    let mut failure: Option<Error> = None;

    let mut flush = |pending: &mut Vec<ExperimentConfig>,
                     findings: &mut Vec<Finding>,
                     failure: &mut Option<Error>| {
        if pending.is_empty() || failure.is_some() {
            pending.clear();
            return;
        }
        let results = run(pending, solver, spec.gap_threshold);
        debug_assert_eq!(results.len(), pending.len());
        for r in results {
            match r {
                Ok(Some(f)) => findings.push(f),
                Ok(None) => {}
                Err(e) => {
                    *failure = Some(e);
                    break;
                }
            }
        }
        pending.clear();
    };

    'outer: for (n, k, t) in spec.combos() {
        let cost = instance_cost(n, k, t);
        let mut tuples: Vec<Vec<f64>> = Vec::new();
        for_each_non_increasing(points.len(), n, |idx| {
            tuples.push(idx.iter().map(|&i| points[i]).collect());
        });
        for belief in &tuples {
            for &(p01, p11) in &pairs {
                if spent.saturating_add(cost) > spec.budget {
                    complete = false;
                    break 'outer;
                }
                spent += cost;
                let cfg = ExperimentConfig::new(
                    k,
                    t,
                    spec.utility,
                    ChannelModel::new(p01, p11)?,
                    BeliefVector::new(belief.clone())?,
                )?;
                pending.push(cfg);
                checked += 1;
                if pending.len() == batch {
                    flush(&mut pending, &mut findings, &mut failure);
                    if failure.is_some() {
                        break 'outer;
                    }
                }
            }
        }
    }
    flush(&mut pending, &mut findings, &mut failure);
    if let Some(e) = failure {
        return Err(e);
    }
    findings.sort_by(cmp_findings);
    Ok(SweepOutcome {
        findings,
        instances_checked: checked,
        instances_total,
        nodes_required,
        complete,
    })
}

/// Seeded generator for one trial: `(seed, trial)` picks an independent stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws the instance for `trial` under the spec's ranges and constraint.
/// Beliefs are uniform on `[0, 1)` and returned sorted descending.
pub fn sample_instance(spec: &SweepSpec, seed: u64, trial: u64) -> Result<ExperimentConfig> {
    let mut rng = trial_rng(seed, trial);
    let n = spec.channels.sample(&mut rng);
    let k = spec.sense_k.sample(&mut rng);
    let t = spec.horizon.sample(&mut rng);
    let mut belief: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    belief.sort_by(|a, b| b.total_cmp(a));
    let (p01, p11) = loop {
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        let pair = match spec.p_constraint {
            PConstraint::P11GeP01 => (a.min(b), a.max(b)),
            PConstraint::P11LtP01 => (a.max(b), a.min(b)),
            PConstraint::Any => (a, b),
            PConstraint::Equal => (a, a),
        };
        if spec.p_constraint.admits(pair.0, pair.1) {
            break pair;
        }
    };
    ExperimentConfig::new(
        k,
        t,
        spec.utility,
        ChannelModel::new(p01, p11)?,
        BeliefVector::new(belief)?,
    )
}

/// Largest-gap finding over `trials` seeded samples, or `None`.
pub fn random_search(spec: &SweepSpec, seed: u64, trials: u64) -> Result<Option<Finding>> {
    random_search_batched(
        spec,
        seed,
        trials,
        DEFAULT_BATCH,
        |batch, solver, threshold| {
            batch
                .iter()
                .map(|cfg| check_instance(cfg, threshold, solver))
                .collect()
        },
    )
}

/// Random search with a caller-supplied batch runner; ties go to the earliest trial.
pub fn random_search_batched<F>(
    spec: &SweepSpec,
    seed: u64,
    trials: u64,
    batch: usize,
    mut run: F,
) -> Result<Option<Finding>>
where
    F: FnMut(&[ExperimentConfig], OptimalSolver, f64) -> Vec<Result<Option<Finding>>>,
{
    spec.validate()?;
    if trials == 0 {
        return Err(Error::contract("random search needs at least one trial"));
    }
    let worst = instance_cost(spec.channels.hi, spec.sense_k.hi, spec.horizon.hi);
    if worst > spec.budget {
        return Err(Error::Budget {
            required: worst,
            budget: spec.budget,
        });
    }
    let solver = OptimalSolver::new().with_budget(spec.budget);
    let batch = batch.max(1) as u64;
    let mut best: Option<Finding> = None;
    let mut start = 0;
    while start < trials {
        let end = (start + batch).min(trials);
        let cfgs = (start..end)
            .map(|trial| sample_instance(spec, seed, trial))
            .collect::<Result<Vec<_>>>()?;
        for r in run(&cfgs, solver, spec.gap_threshold) {
            if let Some(f) = r? {
                if best.as_ref().map_or(true, |b| f.gap > b.gap) {
                    best = Some(f);
                }
            }
        }
        start = end;
    }
    Ok(best)
}

/// One sign condition across an instance set.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct SignSummary {
    /// Smallest difference seen.
    pub min: f64,
    /// Instances where the difference fell below `-1e-12`.
    pub violations: u64,
}

impl SignSummary {
    fn new() -> Self {
        Self {
            min: f64::INFINITY,
            violations: 0,
        }
    }

    fn record(&mut self, d: f64) {
        if d < self.min {
            self.min = d;
        }
        if d < -1e-12 {
            self.violations += 1;
        }
    }
}

/// Worst disagreement between a printed identity and the direct difference.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct DiscrepancySummary {
    /// Largest `|printed − direct|`.
    pub max_discrepancy: f64,
    /// Instances with a discrepancy above `1e-12`.
    pub mismatches: u64,
    /// Sorted beliefs of the worst instance.
    pub worst_beliefs: Vec<f64>,
    /// `(p01, p11)` of the worst instance.
    pub worst_p: (f64, f64),
}

impl DiscrepancySummary {
    fn new() -> Self {
        Self {
            max_discrepancy: 0.0,
            mismatches: 0,
            worst_beliefs: Vec::new(),
            worst_p: (0.0, 0.0),
        }
    }

    fn record(&mut self, d: f64, input: &ClosedFormInput) {
        if d > 1e-12 {
            self.mismatches += 1;
        }
        if d > self.max_discrepancy || self.worst_beliefs.is_empty() {
            self.max_discrepancy = self.max_discrepancy.max(d);
            self.worst_beliefs = input.beliefs().to_vec();
            self.worst_p = (input.model().p01(), input.model().p11());
        }
    }
}

/// Sign checks and identity discrepancies over random positively correlated instances.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ErrataSummary {
    /// Instances drawn.
    pub instances: u64,
    /// Generator seed.
    pub seed: u64,
    /// `myopic_pair_reward − top_third_bound`, corrected.
    pub myopic_minus_top_third: SignSummary,
    /// `myopic_pair_reward − top_far_bound(j)` over all `j >= 3`, corrected.
    pub myopic_minus_top_far: SignSummary,
    /// `myopic_pair_reward − outer_pair_bound(i, j)` over all `2 <= i < j`, corrected.
    pub myopic_minus_outer_pair: SignSummary,
    /// `myopic_pair_reward − outer_pair_bound(i, j)` with the as-printed weight.
    pub myopic_minus_outer_pair_as_printed: SignSummary,
    /// The `j = 3` identity.
    pub identity_j3: DiscrepancySummary,
    /// The `j >= 4` identity, over every `j`.
    pub identity_j_ge4: DiscrepancySummary,
}

/// Draws sorted instances with `N` in `4..=6` and `p11 >= p01` and checks
/// every bound and identity on each.
pub fn verify_identity_region(instances: u64, seed: u64) -> Result<ErrataSummary> {
    let mut summary = ErrataSummary {
        instances,
        seed,
        myopic_minus_top_third: SignSummary::new(),
        myopic_minus_top_far: SignSummary::new(),
        myopic_minus_outer_pair: SignSummary::new(),
        myopic_minus_outer_pair_as_printed: SignSummary::new(),
        identity_j3: DiscrepancySummary::new(),
        identity_j_ge4: DiscrepancySummary::new(),
    };
    let corrected = FormulaVariant::Corrected;
    for trial in 0..instances {
        let mut rng = trial_rng(seed, trial);
        let n = rng.random_range(4..=6usize);
        let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        w.sort_by(|a, b| b.total_cmp(a));
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let input = ClosedFormInput::new(w, ChannelModel::new(a.min(b), a.max(b))?)?;
        record_instance(&mut summary, &input, corrected)?;
    }
    Ok(summary)
}

fn record_instance(
    summary: &mut ErrataSummary,
    input: &ClosedFormInput,
    corrected: FormulaVariant,
) -> Result<()> {
    let n = input.channels();
    let r = myopic_pair_reward(input, corrected);
    summary
        .myopic_minus_top_third
        .record(r - top_third_bound(input, corrected));
    for j in 3..n {
        summary
            .myopic_minus_top_far
            .record(r - top_far_bound(input, j, corrected)?);
    }
    for i in 2..n {
        for j in i + 1..n {
            summary
                .myopic_minus_outer_pair
                .record(r - outer_pair_bound(input, i, j, corrected)?);
            summary
                .myopic_minus_outer_pair_as_printed
                .record(r - outer_pair_bound(input, i, j, FormulaVariant::AsPrinted)?);
        }
    }
    let ids = gap_identities(input);
    summary.identity_j3.record(ids.j3.discrepancy, input);
    for c in &ids.j_ge4 {
        summary.identity_j_ge4.record(c.check.discrepancy, input);
    }
    Ok(())
}
