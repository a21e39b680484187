//! Policies and exact expected-reward evaluation.
//!
//! Evaluation is a full expectation over sensing outcomes: at every slot the
//! policy picks an action, the immediate reward is accrued, and the recursion
//! branches over all `2^k` outcomes of the sensed channels, weighted by the
//! product of `ω` / `1 − ω`. Outcome masks are visited in increasing order
//! and zero-probability branches are skipped, so results are deterministic
//! for a fixed input.
//!
//! The optimal value is a brute-force maximum over all `C(N, k)` actions at
//! every reachable belief node. Ties go to the lexicographically smallest
//! action.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::Serialize;

use crate::combinatorics::{binomial, combinations, saturating_pow};
use crate::error::{Error, Result};
use crate::model::{slot_reward, BeliefVector, ChannelModel, SensingAction, UtilityKind};

/// Default ceiling on `(C(N, k) · 2^k)^T` for the brute-force optimum.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

/// Gaps within this distance of zero are reported as exactly zero.
pub const GAP_TOLERANCE: f64 = 1e-12;

/// One problem instance: channels, sensing width, horizon, utility, dynamics and start belief.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ExperimentConfig {
    channels: usize,
    sense_k: usize,
    horizon: usize,
    utility: UtilityKind,
    model: ChannelModel,
    initial_belief: BeliefVector,
}

impl ExperimentConfig {
    /// Validates `1 <= k <= N` and `T >= 1`; `N` is the belief length.
    pub fn new(
        sense_k: usize,
        horizon: usize,
        utility: UtilityKind,
        model: ChannelModel,
        initial_belief: BeliefVector,
    ) -> Result<Self> {
        let channels = initial_belief.len();
        if sense_k == 0 || sense_k > channels {
            return Err(Error::contract(format!(
                "k = {sense_k} must lie in 1..={channels}"
            )));
        }
        if horizon == 0 {
            return Err(Error::contract("horizon must be at least one slot"));
        }
        Ok(Self {
            channels,
            sense_k,
            horizon,
            utility,
            model,
            initial_belief,
        })
    }

    /// Number of channels `N`.
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Channels sensed per slot `k`.
    pub fn sense_k(&self) -> usize {
        self.sense_k
    }

    /// Horizon `T` in slots.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Reward rule.
    pub fn utility(&self) -> UtilityKind {
        self.utility
    }

    /// Channel dynamics.
    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    /// Belief at slot 0.
    pub fn initial_belief(&self) -> &BeliefVector {
        &self.initial_belief
    }

    /// Same instance with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::new(
            self.sense_k,
            horizon,
            self.utility,
            self.model,
            self.initial_belief.clone(),
        )
    }

    /// Same instance with a different start belief (length may change).
    pub fn with_belief(&self, belief: BeliefVector) -> Result<Self> {
        Self::new(self.sense_k, self.horizon, self.utility, self.model, belief)
    }

    fn outcome_count(&self) -> usize {
        1 << self.sense_k
    }
}

/// An explicit policy: one action per observation-history node.
///
/// `children[mask]` is the subtree followed after outcome `mask`, where bit
/// `m` of `mask` is set when `action.channels()[m]` was seen idle. A node at
/// the last slot has no children; any other node has exactly `2^k` slots,
/// and `None` marks an outcome of probability zero.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct PolicyTree {
    action: SensingAction,
    children: Vec<Option<PolicyTree>>,
}

impl PolicyTree {
    /// Last-slot node.
    pub fn leaf(action: SensingAction) -> Self {
        Self {
            action,
            children: Vec::new(),
        }
    }

    /// Interior node; `children.len()` must be `2^k`.
    pub fn node(action: SensingAction, children: Vec<Option<PolicyTree>>) -> Result<Self> {
        if children.len() != 1 << action.len() {
            return Err(Error::contract(format!(
                "node sensing {} channels needs {} children, got {}",
                action.len(),
                1usize << action.len(),
                children.len()
            )));
        }
        Ok(Self { action, children })
    }

    /// Action at this node.
    pub fn action(&self) -> &SensingAction {
        &self.action
    }

    /// Subtree after outcome `mask`, if present.
    pub fn child(&self, mask: usize) -> Option<&PolicyTree> {
        self.children.get(mask).and_then(Option::as_ref)
    }

    /// All child slots in mask order.
    pub fn children(&self) -> &[Option<PolicyTree>] {
        &self.children
    }

    /// Longest root-to-leaf path, counted in slots.
    pub fn depth(&self) -> usize {
        1 + self
            .children
            .iter()
            .flatten()
            .map(PolicyTree::depth)
            .max()
            .unwrap_or(0)
    }

    /// Number of nodes present.
    pub fn node_count(&self) -> usize {
        1 + self
            .children
            .iter()
            .flatten()
            .map(PolicyTree::node_count)
            .sum::<usize>()
    }

    fn check(&self, remaining: usize, n: usize, k: usize) -> Result<()> {
        if self.action.len() != k {
            return Err(Error::contract(format!(
                "tree action {:?} senses {} channels, expected {k}",
                self.action.channels(),
                self.action.len()
            )));
        }
        self.action.check_fits(n)?;
        if remaining == 1 {
            if !self.children.is_empty() {
                return Err(Error::contract("explicit tree is deeper than the horizon"));
            }
            return Ok(());
        }
        if self.children.len() != 1 << k {
            return Err(Error::contract(
                "explicit tree is shallower than the remaining horizon",
            ));
        }
        for child in self.children.iter().flatten() {
            child.check(remaining - 1, n, k)?;
        }
        Ok(())
    }
}

/// A decision rule from (belief, remaining horizon) to an action.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PolicySpec {
    /// Sense the `k` channels with the largest beliefs.
    Myopic,
    /// Brute-force optimal continuation.
    Optimal,
    /// Play `action` in the current slot, then follow `then`.
    FixedFirst {
        /// Action for the current slot.
        action: SensingAction,
        /// Policy for the remaining slots.
        then: Box<PolicySpec>,
    },
    /// Fully explicit action tree.
    ExplicitTree(PolicyTree),
}

impl PolicySpec {
    /// `action` now, then `then`.
    pub fn fixed_first(action: SensingAction, then: PolicySpec) -> Self {
        PolicySpec::FixedFirst {
            action,
            then: Box::new(then),
        }
    }

    /// Plays `actions` open-loop in order, then switches to `tail`.
    pub fn open_loop(actions: Vec<SensingAction>, tail: PolicySpec) -> Self {
        actions
            .into_iter()
            .rev()
            .fold(tail, |then, action| PolicySpec::fixed_first(action, then))
    }

    /// Whether evaluating this policy calls the brute-force solver.
    pub fn uses_optimal(&self) -> bool {
        match self {
            PolicySpec::Optimal => true,
            PolicySpec::FixedFirst { then, .. } => then.uses_optimal(),
            PolicySpec::Myopic | PolicySpec::ExplicitTree(_) => false,
        }
    }

    pub(crate) fn check(&self, remaining: usize, n: usize, k: usize) -> Result<()> {
        match self {
            PolicySpec::Myopic | PolicySpec::Optimal => Ok(()),
            PolicySpec::FixedFirst { action, then } => {
                if action.len() != k {
                    return Err(Error::contract(format!(
                        "fixed action {:?} senses {} channels, expected {k}",
                        action.channels(),
                        action.len()
                    )));
                }
                action.check_fits(n)?;
                if remaining > 1 {
                    then.check(remaining - 1, n, k)
                } else {
                    Ok(())
                }
            }
            PolicySpec::ExplicitTree(tree) => tree.check(remaining, n, k),
        }
    }
}

/// Exact value of a policy on an instance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct EvaluationReport {
    /// Expected reward summed over all slots.
    pub total_expected_reward: f64,
    /// `total_expected_reward / T`.
    pub average_reward: f64,
    /// Expected reward of each slot.
    pub per_slot: Vec<f64>,
    /// The policy as an explicit tree, when one was produced.
    pub action_tree: Option<PolicyTree>,
}

impl EvaluationReport {
    fn new(total: f64, per_slot: Vec<f64>, action_tree: Option<PolicyTree>) -> Self {
        Self {
            total_expected_reward: total,
            average_reward: total / per_slot.len() as f64,
            per_slot,
            action_tree,
        }
    }
}

/// The `k` channels with the largest beliefs; ties go to the lower index.
pub fn myopic_action(belief: &BeliefVector, k: usize) -> Result<SensingAction> {
    if k == 0 || k > belief.len() {
        return Err(Error::contract(format!(
            "cannot sense {k} of {} channels",
            belief.len()
        )));
    }
    Ok(SensingAction::from_sorted_unchecked(myopic_channels(
        belief.as_slice(),
        k,
    )))
}

pub(crate) fn myopic_channels(belief: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..belief.len()).collect();
    order.sort_by(|&a, &b| belief[b].total_cmp(&belief[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Probability of outcome `mask` for the sensed `channels`.
#[inline]
pub(crate) fn outcome_probability(belief: &[f64], channels: &[usize], mask: usize) -> f64 {
    let mut prob = 1.0;
    for (m, &c) in channels.iter().enumerate() {
        prob *= if mask >> m & 1 == 1 {
            belief[c]
        } else {
            1.0 - belief[c]
        };
    }
    prob
}

/// Writes the post-observation belief into `out`, given `tau(belief)` in `propagated`.
#[inline]
fn posterior_into(
    out: &mut [f64],
    propagated: &[f64],
    channels: &[usize],
    mask: usize,
    model: &ChannelModel,
) {
    out.copy_from_slice(propagated);
    for (m, &c) in channels.iter().enumerate() {
        out[c] = if mask >> m & 1 == 1 {
            model.p11()
        } else {
            model.p01()
        };
    }
}

fn propagate_into(out: &mut [f64], belief: &[f64], model: &ChannelModel) {
    for (o, &w) in out.iter_mut().zip(belief) {
        *o = model.propagate(w);
    }
}

#[derive(Clone, Copy)]
enum PolicyRef<'a> {
    Spec(&'a PolicySpec),
    Node(&'a PolicyTree),
}

struct Evaluator<'a> {
    cfg: &'a ExperimentConfig,
    solver: OptimalSolver,
    per_slot: Vec<f64>,
}

impl Evaluator<'_> {
    fn eval(
        &mut self,
        belief: &[f64],
        slot: usize,
        weight: f64,
        policy: PolicyRef<'_>,
    ) -> Result<f64> {
        let remaining = self.cfg.horizon - slot;
        let (channels, children): (Vec<usize>, Option<&[Option<PolicyTree>]>) = match policy {
            PolicyRef::Spec(PolicySpec::Myopic) => {
                (myopic_channels(belief, self.cfg.sense_k), None)
            }
            PolicyRef::Spec(PolicySpec::Optimal) => {
                let (_, tree) = self.solver.solve_from(self.cfg, belief, remaining)?;
                return self.eval(belief, slot, weight, PolicyRef::Node(&tree));
            }
            PolicyRef::Spec(PolicySpec::FixedFirst { action, .. }) => {
                (action.channels().to_vec(), None)
            }
            PolicyRef::Spec(PolicySpec::ExplicitTree(tree)) | PolicyRef::Node(tree) => {
                (tree.action.channels().to_vec(), Some(&tree.children))
            }
        };
        let reward = slot_reward(belief, &channels, self.cfg.utility);
        self.per_slot[slot] += weight * reward;
        if remaining == 1 {
            return Ok(reward);
        }

        let n = belief.len();
        let mut propagated = vec![0.0; n];
        propagate_into(&mut propagated, belief, &self.cfg.model);
        let mut child = vec![0.0; n];
        let mut acc = 0.0;
        for mask in 0..self.cfg.outcome_count() {
            let prob = outcome_probability(belief, &channels, mask);
            if prob == 0.0 {
                continue;
            }
            posterior_into(&mut child, &propagated, &channels, mask, &self.cfg.model);
            let next = match (policy, children) {
                (_, Some(kids)) => match kids.get(mask) {
                    Some(Some(t)) => PolicyRef::Node(t),
                    _ => {
                        return Err(Error::contract(format!(
                            "explicit tree has no branch for reachable outcome {mask:#b}"
                        )))
                    }
                },
                (PolicyRef::Spec(PolicySpec::FixedFirst { then, .. }), None) => {
                    PolicyRef::Spec(then)
                }
                (p, None) => p,
            };
            acc += prob * self.eval(&child, slot + 1, weight * prob, next)?;
        }
        Ok(reward + acc)
    }
}

/// Exact expected reward of `policy` on `cfg`.
///
/// Any `Optimal` component is solved with [`DEFAULT_NODE_BUDGET`].
pub fn evaluate_policy(cfg: &ExperimentConfig, policy: &PolicySpec) -> Result<EvaluationReport> {
    evaluate_with_solver(cfg, policy, OptimalSolver::default())
}

fn evaluate_with_solver(
    cfg: &ExperimentConfig,
    policy: &PolicySpec,
    solver: OptimalSolver,
) -> Result<EvaluationReport> {
    policy.check(cfg.horizon, cfg.channels, cfg.sense_k)?;
    if policy.uses_optimal() {
        solver.check_budget(cfg, cfg.horizon)?;
    }
    let mut ev = Evaluator {
        cfg,
        solver,
        per_slot: vec![0.0; cfg.horizon],
    };
    let total = ev.eval(
        cfg.initial_belief.as_slice(),
        0,
        1.0,
        PolicyRef::Spec(policy),
    )?;
    Ok(EvaluationReport::new(total, ev.per_slot, None))
}

/// Brute-force maximizer over all sensing trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimalSolver {
    budget: u64,
    memoize: bool,
}

impl Default for OptimalSolver {
    fn default() -> Self {
        Self {
            budget: DEFAULT_NODE_BUDGET,
            memoize: false,
        }
    }
}

struct NodeScratch {
    propagated: Vec<f64>,
    child: Vec<f64>,
}

struct Search<'a> {
    cfg: &'a ExperimentConfig,
    actions: Vec<Vec<usize>>,
    memo: Option<BTreeMap<(usize, Vec<u64>), f64>>,
}

impl Search<'_> {
    fn best_value(&mut self, belief: &[f64], remaining: usize, scratch: &mut [NodeScratch]) -> f64 {
        let key = self.memo.as_ref().map(|_| {
            let mut bits: Vec<u64> = belief.iter().map(|w| w.to_bits()).collect();
            // Beliefs are non-negative, so bit patterns order like the values.
            bits.sort_unstable();
            (remaining, bits)
        });
        if let (Some(memo), Some(key)) = (&self.memo, &key) {
            if let Some(&v) = memo.get(key) {
                return v;
            }
        }

        let mut best = f64::NEG_INFINITY;
        if remaining == 1 {
            for a in &self.actions {
                let v = slot_reward(belief, a, self.cfg.utility);
                if v > best {
                    best = v;
                }
            }
        } else {
            let (node, rest) = scratch
                .split_first_mut()
                .expect("scratch depth covers the horizon");
            propagate_into(&mut node.propagated, belief, &self.cfg.model);
            for ai in 0..self.actions.len() {
                let reward = slot_reward(belief, &self.actions[ai], self.cfg.utility);
                let mut acc = 0.0;
                for mask in 0..self.cfg.outcome_count() {
                    let prob = outcome_probability(belief, &self.actions[ai], mask);
                    if prob == 0.0 {
                        continue;
                    }
                    posterior_into(
                        &mut node.child,
                        &node.propagated,
                        &self.actions[ai],
                        mask,
                        &self.cfg.model,
                    );
                    let child = core::mem::take(&mut node.child);
                    acc += prob * self.best_value(&child, remaining - 1, rest);
                    node.child = child;
                }
                let v = reward + acc;
                if v > best {
                    best = v;
                }
            }
        }

        if let (Some(memo), Some(key)) = (&mut self.memo, key) {
            memo.insert(key, best);
        }
        best
    }

    fn best_tree(&self, belief: &[f64], remaining: usize) -> (f64, PolicyTree) {
        let k = self.cfg.sense_k;
        let mut best: Option<(f64, PolicyTree)> = None;
        if remaining == 1 {
            for a in &self.actions {
                let v = slot_reward(belief, a, self.cfg.utility);
                if best.as_ref().map_or(true, |(b, _)| v > *b) {
                    best = Some((
                        v,
                        PolicyTree::leaf(SensingAction::from_sorted_unchecked(a.clone())),
                    ));
                }
            }
        } else {
            let n = belief.len();
            let mut propagated = vec![0.0; n];
            propagate_into(&mut propagated, belief, &self.cfg.model);
            let mut child = vec![0.0; n];
            for a in &self.actions {
                let reward = slot_reward(belief, a, self.cfg.utility);
                let mut acc = 0.0;
                let mut kids: Vec<Option<PolicyTree>> = Vec::with_capacity(1 << k);
                for mask in 0..1usize << k {
                    let prob = outcome_probability(belief, a, mask);
                    if prob == 0.0 {
                        kids.push(None);
                        continue;
                    }
                    posterior_into(&mut child, &propagated, a, mask, &self.cfg.model);
                    let (v, t) = self.best_tree(&child, remaining - 1);
                    acc += prob * v;
                    kids.push(Some(t));
                }
                let v = reward + acc;
                if best.as_ref().map_or(true, |(b, _)| v > *b) {
                    best = Some((
                        v,
                        PolicyTree {
                            action: SensingAction::from_sorted_unchecked(a.clone()),
                            children: kids,
                        },
                    ));
                }
            }
        }
        best.expect("at least one action exists")
    }
}

impl OptimalSolver {
    /// Solver with the default budget and no memoization.
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces the node budget.
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Caches node values by the sorted belief vector. Channels are i.i.d.,
    /// so a permuted belief has the same optimal value. Only affects
    /// [`OptimalSolver::value`].
    pub fn with_memoization(mut self, on: bool) -> Self {
        self.memoize = on;
        self
    }

    /// Configured node budget.
    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// `(C(N, k) · 2^k)^T`, saturating.
    pub fn required_nodes(cfg: &ExperimentConfig) -> u64 {
        Self::required_for(cfg, cfg.horizon)
    }

    fn required_for(cfg: &ExperimentConfig, horizon: usize) -> u64 {
        let per_level =
            binomial(cfg.channels as u64, cfg.sense_k as u64).saturating_mul(1 << cfg.sense_k);
        saturating_pow(per_level, horizon.min(u32::MAX as usize) as u32)
    }

    fn check_budget(&self, cfg: &ExperimentConfig, horizon: usize) -> Result<()> {
        let required = Self::required_for(cfg, horizon);
        if required > self.budget {
            Err(Error::Budget {
                required,
                budget: self.budget,
            })
        } else {
            Ok(())
        }
    }

    fn search<'a>(&self, cfg: &'a ExperimentConfig) -> Search<'a> {
        Search {
            cfg,
            actions: combinations(cfg.channels, cfg.sense_k),
            memo: self.memoize.then(BTreeMap::new),
        }
    }

    /// Optimal expected total reward.
    pub fn value(&self, cfg: &ExperimentConfig) -> Result<f64> {
        self.check_budget(cfg, cfg.horizon)?;
        let mut search = self.search(cfg);
        let mut scratch: Vec<NodeScratch> = (1..cfg.horizon)
            .map(|_| NodeScratch {
                propagated: vec![0.0; cfg.channels],
                child: vec![0.0; cfg.channels],
            })
            .collect();
        Ok(search.best_value(cfg.initial_belief.as_slice(), cfg.horizon, &mut scratch))
    }

    /// Optimal value with the argmax tree and per-slot breakdown.
    pub fn solve(&self, cfg: &ExperimentConfig) -> Result<EvaluationReport> {
        let (total, tree) = self.solve_from(cfg, cfg.initial_belief.as_slice(), cfg.horizon)?;
        let policy = PolicySpec::ExplicitTree(tree);
        let replay = evaluate_with_solver(cfg, &policy, *self)?;
        let PolicySpec::ExplicitTree(tree) = policy else {
            unreachable!()
        };
        Ok(EvaluationReport::new(total, replay.per_slot, Some(tree)))
    }

    /// Exact value of `policy`, solving any `Optimal` part under this solver's budget.
    pub fn evaluate(
        &self,
        cfg: &ExperimentConfig,
        policy: &PolicySpec,
    ) -> Result<EvaluationReport> {
        evaluate_with_solver(cfg, policy, *self)
    }

    /// Optimal value and tree from an arbitrary belief with `remaining` slots left.
    pub(crate) fn solve_from(
        &self,
        cfg: &ExperimentConfig,
        belief: &[f64],
        remaining: usize,
    ) -> Result<(f64, PolicyTree)> {
        self.check_budget(cfg, remaining)?;
        Ok(self.search(cfg).best_tree(belief, remaining))
    }

    /// `optimal − myopic`, with values inside [`GAP_TOLERANCE`] of zero clamped to zero.
    pub fn myopic_gap(&self, cfg: &ExperimentConfig) -> Result<f64> {
        let best = self.value(cfg)?;
        let myopic = evaluate_policy(cfg, &PolicySpec::Myopic)?.total_expected_reward;
        let gap = best - myopic;
        Ok(if gap.abs() <= GAP_TOLERANCE { 0.0 } else { gap })
    }
}

/// Optimal value and argmax tree under [`DEFAULT_NODE_BUDGET`].
pub fn optimal_value(cfg: &ExperimentConfig) -> Result<EvaluationReport> {
    OptimalSolver::default().solve(cfg)
}

/// Optimal value minus myopic value under [`DEFAULT_NODE_BUDGET`].
pub fn myopic_gap(cfg: &ExperimentConfig) -> Result<f64> {
    OptimalSolver::default().myopic_gap(cfg)
}

/// Plays `first_action`, then the myopic action, then the optimal continuation.
///
/// This extends a two-slot improvement over the myopic rule to longer
/// horizons: if the first two slots already beat myopic, an optimal tail
/// keeps the advantage.
pub fn build_remark_policy(
    cfg: &ExperimentConfig,
    first_action: &SensingAction,
) -> Result<PolicySpec> {
    if cfg.horizon < 3 {
        return Err(Error::contract(format!(
            "a fixed-then-myopic-then-optimal policy needs T >= 3, got {}",
            cfg.horizon
        )));
    }
    if first_action.len() != cfg.sense_k {
        return Err(Error::contract("first action must sense k channels"));
    }
    first_action.check_fits(cfg.channels)?;
    let solver = OptimalSolver::default();
    let root_children = branch_children(
        cfg,
        cfg.initial_belief.as_slice(),
        first_action.channels(),
        &mut |b1| {
            let second = myopic_channels(b1, cfg.sense_k);
            let kids = branch_children(cfg, b1, &second, &mut |b2| {
                solver
                    .solve_from(cfg, b2, cfg.horizon - 2)
                    .map(|(_, tree)| tree)
            })?;
            PolicyTree::node(SensingAction::from_sorted_unchecked(second), kids)
        },
    )?;
    Ok(PolicySpec::ExplicitTree(PolicyTree::node(
        first_action.clone(),
        root_children,
    )?))
}

fn branch_children(
    cfg: &ExperimentConfig,
    from: &[f64],
    channels: &[usize],
    grow: &mut dyn FnMut(&[f64]) -> Result<PolicyTree>,
) -> Result<Vec<Option<PolicyTree>>> {
    let mut propagated = vec![0.0; from.len()];
    propagate_into(&mut propagated, from, &cfg.model);
    let mut child = vec![0.0; from.len()];
    (0..cfg.outcome_count())
        .map(|mask| {
            if outcome_probability(from, channels, mask) == 0.0 {
                return Ok(None);
            }
            posterior_into(&mut child, &propagated, channels, mask, &cfg.model);
            grow(&child).map(Some)
        })
        .collect()
}

/// Expands `policy` into an explicit tree covering every reachable outcome.
pub fn materialize(
    cfg: &ExperimentConfig,
    policy: &PolicySpec,
    solver: OptimalSolver,
) -> Result<PolicyTree> {
    policy.check(cfg.horizon, cfg.channels, cfg.sense_k)?;
    let size = saturating_pow(1 << cfg.sense_k, cfg.horizon as u32);
    if size > solver.budget {
        return Err(Error::Budget {
            required: size,
            budget: solver.budget,
        });
    }
    grow_tree(
        cfg,
        &solver,
        cfg.initial_belief.as_slice(),
        0,
        PolicyRef::Spec(policy),
    )
}

fn grow_tree(
    cfg: &ExperimentConfig,
    solver: &OptimalSolver,
    belief: &[f64],
    slot: usize,
    policy: PolicyRef<'_>,
) -> Result<PolicyTree> {
    let remaining = cfg.horizon - slot;
    let (action, next): (SensingAction, Option<PolicyRef<'_>>) = match policy {
        PolicyRef::Spec(PolicySpec::Myopic) => (
            SensingAction::from_sorted_unchecked(myopic_channels(belief, cfg.sense_k)),
            Some(policy),
        ),
        PolicyRef::Spec(PolicySpec::Optimal) => {
            return solver.solve_from(cfg, belief, remaining).map(|(_, t)| t)
        }
        PolicyRef::Spec(PolicySpec::FixedFirst { action, then }) => {
            (action.clone(), Some(PolicyRef::Spec(then)))
        }
        PolicyRef::Spec(PolicySpec::ExplicitTree(tree)) | PolicyRef::Node(tree) => {
            return Ok(tree.clone())
        }
    };
    if remaining == 1 {
        return Ok(PolicyTree::leaf(action));
    }
    let next = next.expect("non-tree policies carry a continuation");
    let mut propagated = vec![0.0; belief.len()];
    propagate_into(&mut propagated, belief, &cfg.model);
    let mut child = vec![0.0; belief.len()];
    let mut kids = Vec::with_capacity(cfg.outcome_count());
    for mask in 0..cfg.outcome_count() {
        if outcome_probability(belief, action.channels(), mask) == 0.0 {
            kids.push(None);
            continue;
        }
        posterior_into(&mut child, &propagated, action.channels(), mask, &cfg.model);
        kids.push(Some(grow_tree(cfg, solver, &child, slot + 1, next)?));
    }
    PolicyTree::node(action, kids)
}
