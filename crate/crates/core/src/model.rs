//! Channel model, belief state and the one-slot reward.
//!
//! Each channel is a two-state Markov chain with `P(idle → idle) = p11` and
//! `P(busy → idle) = p01`; `p00` and `p10` are implied. The belief `ω_i` is
//! the probability that channel `i` is idle given everything observed so far.
//! After a slot, a sensed channel's belief collapses to `p11` (seen idle) or
//! `p01` (seen busy) and an unsensed one propagates through
//! `τ(ω) = ω·p11 + (1 − ω)·p01`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::Domain(p))
    }
}

/// Transition probabilities shared by all channels.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ChannelModel {
    p01: f64,
    p11: f64,
}

impl ChannelModel {
    /// Builds a model from `p01` (busy → idle) and `p11` (idle → idle).
    pub fn new(p01: f64, p11: f64) -> Result<Self> {
        Ok(Self {
            p01: check_probability(p01)?,
            p11: check_probability(p11)?,
        })
    }

    /// Probability that a busy channel is idle in the next slot.
    pub fn p01(&self) -> f64 {
        self.p01
    }

    /// Probability that an idle channel stays idle.
    pub fn p11(&self) -> f64 {
        self.p11
    }

    /// `true` when `p11 >= p01`.
    pub fn positively_correlated(&self) -> bool {
        self.p11 >= self.p01
    }

    /// One-step propagation without the domain check.
    #[inline]
    pub(crate) fn propagate(&self, omega: f64) -> f64 {
        omega * self.p11 + (1.0 - omega) * self.p01
    }
}

/// Busy/idle state of a channel in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ChannelState {
    /// Occupied by a primary user.
    Busy = 0,
    /// Free for the secondary user.
    Idle = 1,
}

impl ChannelState {
    /// `true` for [`ChannelState::Idle`].
    pub fn is_idle(self) -> bool {
        matches!(self, ChannelState::Idle)
    }

    pub(crate) fn from_bit(bit: bool) -> Self {
        if bit {
            ChannelState::Idle
        } else {
            ChannelState::Busy
        }
    }
}

/// Per-channel conditional idle probabilities.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct BeliefVector(Vec<f64>);

impl BeliefVector {
    /// Validates that the vector is non-empty and every entry lies in `[0, 1]`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::contract(
                "belief vector must cover at least one channel",
            ));
        }
        for &v in &values {
            check_probability(v)?;
        }
        Ok(Self(values))
    }

    /// `n` copies of the same belief.
    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(alloc::vec![value; n])
    }

    /// Number of channels.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always `false`; a belief vector covers at least one channel.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entries in channel order.
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Consumes the vector.
    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Entries sorted in non-increasing order.
    pub fn sorted_descending(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

impl core::ops::Index<usize> for BeliefVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The set of channels sensed in one slot, stored in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct SensingAction(Vec<usize>);

impl SensingAction {
    /// Validates `1 <= k <= n`, distinct indices and `index < n`.
    pub fn new(mut channels: Vec<usize>, n: usize) -> Result<Self> {
        if channels.is_empty() || channels.len() > n {
            return Err(Error::contract(format!(
                "action must sense between 1 and {n} channels, got {}",
                channels.len()
            )));
        }
        channels.sort_unstable();
        if channels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::contract("action lists a channel twice"));
        }
        if let Some(&last) = channels.last() {
            if last >= n {
                return Err(Error::contract(format!(
                    "channel {last} out of range for {n} channels"
                )));
            }
        }
        Ok(Self(channels))
    }

    /// Builds from indices already known to be sorted, distinct and in range.
    pub(crate) fn from_sorted_unchecked(channels: Vec<usize>) -> Self {
        Self(channels)
    }

    /// Sensed channels in ascending order.
    pub fn channels(&self) -> &[usize] {
        &self.0
    }

    /// Number of sensed channels (`k`).
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always `false` for a valid action.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether `channel` is sensed.
    pub fn contains(&self, channel: usize) -> bool {
        self.0.binary_search(&channel).is_ok()
    }

    pub(crate) fn check_fits(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last < n => Ok(()),
            _ => Err(Error::contract(format!(
                "action {:?} does not fit {n} channels",
                self.0
            ))),
        }
    }
}

/// Sensing outcomes keyed by channel index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Observation(BTreeMap<usize, ChannelState>);

impl Observation {
    /// Collects `(channel, state)` pairs; a later duplicate overwrites an earlier one.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, ChannelState)>) -> Self {
        Self(pairs.into_iter().collect())
    }

    /// Decodes an outcome bitmask: bit `m` is the state of `action.channels()[m]`.
    pub fn from_mask(action: &SensingAction, mask: usize) -> Self {
        Self(
            action
                .channels()
                .iter()
                .enumerate()
                .map(|(m, &c)| (c, ChannelState::from_bit(mask >> m & 1 == 1)))
                .collect(),
        )
    }

    /// Encodes back to the bitmask used by [`Observation::from_mask`].
    pub fn to_mask(&self, action: &SensingAction) -> Result<usize> {
        self.check_matches(action)?;
        Ok(action
            .channels()
            .iter()
            .enumerate()
            .filter(|(_, c)| self.0[c].is_idle())
            .fold(0, |acc, (m, _)| acc | 1 << m))
    }

    /// State observed on `channel`, if it was sensed.
    pub fn get(&self, channel: usize) -> Option<ChannelState> {
        self.0.get(&channel).copied()
    }

    /// Iterates `(channel, state)` in channel order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, ChannelState)> + '_ {
        self.0.iter().map(|(&c, &s)| (c, s))
    }

    fn check_matches(&self, action: &SensingAction) -> Result<()> {
        if self.0.len() == action.len() && action.channels().iter().all(|c| self.0.contains_key(c))
        {
            Ok(())
        } else {
            Err(Error::contract(format!(
                "observation channels {:?} do not match action {:?}",
                self.0.keys().collect::<Vec<_>>(),
                action.channels()
            )))
        }
    }
}

/// How a slot's sensing result is turned into reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum UtilityKind {
    /// One unit if any sensed channel is idle.
    #[default]
    AtLeastOne,
    /// One unit per idle sensed channel.
    CountIdle,
}

/// `τ(ω) = ω·p11 + (1 − ω)·p01`.
pub fn tau(omega: f64, model: &ChannelModel) -> Result<f64> {
    check_probability(omega)?;
    Ok(model.propagate(omega))
}

/// Fixed point of `τ`: `p01 / (p01 + 1 − p11)`.
pub fn stationary_belief(model: &ChannelModel) -> Result<f64> {
    let denom = model.p01 + (1.0 - model.p11);
    if denom == 0.0 {
        return Err(Error::SingularChain);
    }
    Ok(model.p01 / denom)
}

/// The alternative uninformed belief `p01 / (p01 + p11)`. It is not a fixed
/// point of `τ` in general; kept so the two readings can be compared.
pub fn printed_uninformed_belief(model: &ChannelModel) -> Result<f64> {
    let denom = model.p01 + model.p11;
    if denom == 0.0 {
        return Err(Error::contract(
            "p01 + p11 = 0 leaves the belief p01 / (p01 + p11) undefined",
        ));
    }
    Ok(model.p01 / denom)
}

/// Bayes update of every channel's belief after sensing `action` and seeing `obs`.
pub fn update_belief(
    belief: &BeliefVector,
    action: &SensingAction,
    obs: &Observation,
    model: &ChannelModel,
) -> Result<BeliefVector> {
    action.check_fits(belief.len())?;
    obs.check_matches(action)?;
    let mut next: Vec<f64> = belief.0.iter().map(|&w| model.propagate(w)).collect();
    for (c, s) in obs.iter() {
        next[c] = if s.is_idle() { model.p11 } else { model.p01 };
    }
    Ok(BeliefVector(next))
}

/// Expected reward of sensing `action` in the current slot.
pub fn immediate_reward(
    belief: &BeliefVector,
    action: &SensingAction,
    utility: UtilityKind,
) -> Result<f64> {
    action.check_fits(belief.len())?;
    Ok(slot_reward(&belief.0, action.channels(), utility))
}

/// Slot reward with a fixed ascending-index evaluation order.
#[inline]
pub(crate) fn slot_reward(belief: &[f64], channels: &[usize], utility: UtilityKind) -> f64 {
    match utility {
        UtilityKind::AtLeastOne => {
            let mut miss = 1.0;
            for &c in channels {
                miss *= 1.0 - belief[c];
            }
            1.0 - miss
        }
        UtilityKind::CountIdle => {
            let mut sum = 0.0;
            for &c in channels {
                sum += belief[c];
            }
            sum
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn m(p01: f64, p11: f64) -> ChannelModel {
        ChannelModel::new(p01, p11).unwrap()
    }

    fn act(c: &[usize], n: usize) -> SensingAction {
        SensingAction::new(c.to_vec(), n).unwrap()
    }

    #[test]
    fn tau_examples() {
        let model = m(0.3, 0.5);
        assert_eq!(tau(1.0, &model).unwrap(), 0.5);
        assert_eq!(tau(0.0, &model).unwrap(), 0.3);
        assert_abs_diff_eq!(tau(0.5, &model).unwrap(), 0.40, epsilon = 1e-15);
    }

    #[test]
    fn tau_rejects_out_of_range() {
        let model = m(0.3, 0.5);
        assert_eq!(tau(1.5, &model), Err(Error::Domain(1.5)));
        assert!(matches!(tau(f64::NAN, &model), Err(Error::Domain(_))));
        assert_eq!(tau(-0.1, &model), Err(Error::Domain(-0.1)));
    }

    #[test]
    fn model_rejects_bad_probabilities() {
        assert!(ChannelModel::new(1.1, 0.5).is_err());
        assert!(ChannelModel::new(0.5, -0.2).is_err());
        assert!(m(0.3, 0.5).positively_correlated());
        assert!(!m(0.5, 0.3).positively_correlated());
        assert!(m(0.4, 0.4).positively_correlated());
    }

    #[test]
    fn stationary_examples() {
        assert_abs_diff_eq!(
            stationary_belief(&m(0.2, 0.8)).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            stationary_belief(&m(0.3, 0.5)).unwrap(),
            0.375,
            epsilon = 1e-15
        );
        assert_eq!(stationary_belief(&m(0.0, 1.0)), Err(Error::SingularChain));
    }

    #[test]
    fn printed_uninformed_belief_differs_from_fixed_point() {
        let model = m(0.3, 0.5);
        let printed = printed_uninformed_belief(&model).unwrap();
        assert_abs_diff_eq!(printed, 0.375, epsilon = 1e-15);
        // Equal here by coincidence (p11 = 1 - p11); a generic model separates them.
        let model = m(0.2, 0.6);
        let printed = printed_uninformed_belief(&model).unwrap();
        let fixed = stationary_belief(&model).unwrap();
        assert_abs_diff_eq!(printed, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(fixed, 1.0 / 3.0, epsilon = 1e-15);
        assert!((tau(printed, &model).unwrap() - printed).abs() > 1e-3);
        assert!(printed_uninformed_belief(&m(0.0, 0.0)).is_err());
    }

    #[test]
    fn update_examples() {
        let model = m(0.3, 0.5);
        let b = BeliefVector::new(vec![0.9, 0.5, 0.1]).unwrap();
        let a = act(&[0, 1], 3);
        let obs = Observation::from_pairs([(0, ChannelState::Idle), (1, ChannelState::Busy)]);
        let next = update_belief(&b, &a, &obs, &model).unwrap();
        assert_eq!(next.as_slice()[0], 0.5);
        assert_eq!(next.as_slice()[1], 0.3);
        assert_abs_diff_eq!(next.as_slice()[2], 0.32, epsilon = 1e-15);

        let b = BeliefVector::new(vec![1.0, 1.0]).unwrap();
        let obs = Observation::from_pairs([(0, ChannelState::Idle), (1, ChannelState::Idle)]);
        let next = update_belief(&b, &act(&[0, 1], 2), &obs, &model).unwrap();
        assert_eq!(next.as_slice(), &[0.5, 0.5]);

        let other = m(0.17, 0.9);
        let b = BeliefVector::new(vec![0.7]).unwrap();
        let obs = Observation::from_pairs([(0, ChannelState::Busy)]);
        let next = update_belief(&b, &act(&[0], 1), &obs, &other).unwrap();
        assert_eq!(next.as_slice(), &[0.17]);
    }

    #[test]
    fn update_rejects_key_mismatch() {
        let model = m(0.3, 0.5);
        let b = BeliefVector::new(vec![0.9, 0.5, 0.1]).unwrap();
        let a = act(&[0, 1], 3);
        let obs = Observation::from_pairs([(0, ChannelState::Idle), (2, ChannelState::Busy)]);
        assert!(matches!(
            update_belief(&b, &a, &obs, &model),
            Err(Error::Contract(_))
        ));
        let short = Observation::from_pairs([(0, ChannelState::Idle)]);
        assert!(update_belief(&b, &a, &short, &model).is_err());
    }

    #[test]
    fn action_validation() {
        assert_eq!(act(&[3, 1], 4).channels(), &[1, 3]);
        assert!(SensingAction::new(vec![], 3).is_err());
        assert!(SensingAction::new(vec![0, 0], 3).is_err());
        assert!(SensingAction::new(vec![0, 3], 3).is_err());
        assert!(SensingAction::new(vec![0, 1, 2, 3], 3).is_err());
        let b = BeliefVector::new(vec![0.5, 0.5]).unwrap();
        assert!(immediate_reward(&b, &act(&[0, 2], 3), UtilityKind::AtLeastOne).is_err());
    }

    #[test]
    fn belief_validation() {
        assert!(BeliefVector::new(vec![]).is_err());
        assert!(BeliefVector::new(vec![0.2, 1.2]).is_err());
        assert!(BeliefVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn reward_examples() {
        let b = BeliefVector::new(vec![0.99, 0.5, 0.3, 0.1]).unwrap();
        let r = immediate_reward(&b, &act(&[0, 1], 4), UtilityKind::AtLeastOne).unwrap();
        assert_abs_diff_eq!(r, 0.995, epsilon = 1e-15);
        let b = BeliefVector::new(vec![0.2, 1.0, 0.1]).unwrap();
        let r = immediate_reward(&b, &act(&[1, 2], 3), UtilityKind::AtLeastOne).unwrap();
        assert_eq!(r, 1.0);
        let b = BeliefVector::new(vec![0.99, 0.5]).unwrap();
        let r = immediate_reward(&b, &act(&[0, 1], 2), UtilityKind::CountIdle).unwrap();
        assert_abs_diff_eq!(r, 1.49, epsilon = 1e-15);
    }

    #[test]
    fn mask_round_trip() {
        let a = act(&[1, 4, 5], 6);
        for mask in 0..8 {
            let obs = Observation::from_mask(&a, mask);
            assert_eq!(obs.to_mask(&a).unwrap(), mask);
        }
        let obs = Observation::from_mask(&a, 0b101);
        assert_eq!(obs.get(1), Some(ChannelState::Idle));
        assert_eq!(obs.get(4), Some(ChannelState::Busy));
        assert_eq!(obs.get(5), Some(ChannelState::Idle));
        assert_eq!(obs.get(0), None);
    }

    fn prob() -> impl Strategy<Value = f64> {
        0.0f64..=1.0
    }

    proptest! {
        #[test]
        fn tau_is_monotone_in_the_direction_of_correlation(
            p01 in prob(), p11 in prob(), a in prob(), b in prob()
        ) {
            let model = m(p01, p11);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (tl, th) = (tau(lo, &model).unwrap(), tau(hi, &model).unwrap());
            if p11 >= p01 {
                prop_assert!(tl <= th + 1e-15);
            } else {
                prop_assert!(tl >= th - 1e-15);
            }
        }

        #[test]
        fn tau_stays_between_transition_probabilities(p01 in prob(), p11 in prob(), w in prob()) {
            let model = m(p01, p11);
            let t = tau(w, &model).unwrap();
            prop_assert!(t >= p01.min(p11) - 1e-15);
            prop_assert!(t <= p01.max(p11) + 1e-15);
        }

        #[test]
        fn stationary_is_a_fixed_point(p01 in prob(), p11 in prob()) {
            let model = m(p01, p11);
            prop_assume!(!(p01 == 0.0 && p11 == 1.0));
            let pi = stationary_belief(&model).unwrap();
            prop_assert!((0.0..=1.0).contains(&pi));
            prop_assert!((tau(pi, &model).unwrap() - pi).abs() <= 1e-15);
        }

        #[test]
        fn update_keeps_entries_in_range_and_propagates_unsensed(
            p01 in prob(), p11 in prob(),
            values in proptest::collection::vec(prob(), 1..7),
            mask in 0usize..64,
            pick in 0usize..64,
        ) {
            let n = values.len();
            let chosen: Vec<usize> = (0..n).filter(|i| pick >> i & 1 == 1).collect();
            prop_assume!(!chosen.is_empty());
            let model = m(p01, p11);
            let a = SensingAction::new(chosen, n).unwrap();
            let obs = Observation::from_mask(&a, mask & ((1 << a.len()) - 1));
            let b = BeliefVector::new(values.clone()).unwrap();
            let next = update_belief(&b, &a, &obs, &model).unwrap();
            prop_assert_eq!(next.len(), n);
            for i in 0..n {
                let v = next[i];
                prop_assert!((0.0..=1.0).contains(&v));
                if !a.contains(i) {
                    prop_assert_eq!(v, tau(values[i], &model).unwrap());
                }
            }
        }

        #[test]
        fn at_least_one_reward_is_monotone_and_symmetric(
            values in proptest::collection::vec(prob(), 3..7),
            bump in prob(),
            which in 0usize..3,
        ) {
            let n = values.len();
            let a = act(&[0, 1, 2], n);
            let b = BeliefVector::new(values.clone()).unwrap();
            let base = immediate_reward(&b, &a, UtilityKind::AtLeastOne).unwrap();
            prop_assert!((0.0..=1.0).contains(&base));

            let mut raised = values.clone();
            raised[which] = raised[which].max(bump);
            let rb = BeliefVector::new(raised).unwrap();
            prop_assert!(immediate_reward(&rb, &a, UtilityKind::AtLeastOne).unwrap() >= base - 1e-15);

            let mut perm = values.clone();
            perm.swap(0, 2);
            perm.swap(1, 2);
            let pb = BeliefVector::new(perm).unwrap();
            let pr = immediate_reward(&pb, &a, UtilityKind::AtLeastOne).unwrap();
            prop_assert!((pr - base).abs() <= 1e-15);
        }
    }
}
