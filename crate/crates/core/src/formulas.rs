//! Closed-form two-slot rewards and the two `k = 3` counterexamples.
//!
//! These expressions are independent of the generic evaluator in
//! [`crate::policy`] and serve as cross-checks against it. Several of them
//! contain typographical slips as printed, so each formula is
//! available in two readings:
//!
//! * [`FormulaVariant::AsPrinted`] evaluates the text literally. An
//!   unbalanced `1-(1-x(1-y))` is read with the missing parenthesis closed at
//!   the end, i.e. `x·(1 − y)`.
//! * [`FormulaVariant::Corrected`] applies only these fixes:
//!   - the busy-busy term of every two-slot form reads `1 − (1 − x)(1 − y)`;
//!   - the three-slot busy term of counterexample 1 reads
//!     `1 − (1 − x)(1 − y)(1 − z)`;
//!   - the upper bound for two channels outside the top pair uses
//!     `(1 − ω_i)·ω_j` in its fourth term instead of `(1 − ω_j)·ω_j`;
//!   - the alternative reward of counterexample 2 weights its last term by
//!     `(1 − ω_4)` instead of `(1 − ω_3)`.
//!
//! Everything else is the same arithmetic in both variants.
//!
//! Belief indices here are 0-based positions in the descending-sorted vector,
//! so the largest belief is `w[0]`.

use alloc::format;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BeliefVector, ChannelModel, SensingAction, UtilityKind};
use crate::policy::ExperimentConfig;

/// Which reading of a reference formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum FormulaVariant {
    /// Literal transcription.
    AsPrinted,
    /// With the documented fixes applied.
    #[default]
    Corrected,
}

impl FormulaVariant {
    /// Both variants, printed first.
    pub const ALL: [FormulaVariant; 2] = [FormulaVariant::AsPrinted, FormulaVariant::Corrected];

    /// Kebab-case name.
    pub fn name(self) -> &'static str {
        match self {
            FormulaVariant::AsPrinted => "as-printed",
            FormulaVariant::Corrected => "corrected",
        }
    }
}

/// A belief vector sorted in non-increasing order plus the channel model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ClosedFormInput {
    sorted_beliefs: Vec<f64>,
    model: ChannelModel,
}

impl ClosedFormInput {
    /// Requires at least three entries, each in `[0, 1]`, in non-increasing order.
    pub fn new(sorted_beliefs: Vec<f64>, model: ChannelModel) -> Result<Self> {
        let sorted_beliefs = BeliefVector::new(sorted_beliefs)?.into_vec();
        if sorted_beliefs.len() < 3 {
            return Err(Error::contract(format!(
                "closed forms need N >= 3, got {}",
                sorted_beliefs.len()
            )));
        }
        if sorted_beliefs.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::contract(
                "beliefs must be sorted in non-increasing order",
            ));
        }
        Ok(Self {
            sorted_beliefs,
            model,
        })
    }

    /// Sorts an arbitrary belief vector first.
    pub fn from_unsorted(belief: &BeliefVector, model: ChannelModel) -> Result<Self> {
        Self::new(belief.sorted_descending(), model)
    }

    /// The sorted beliefs.
    pub fn beliefs(&self) -> &[f64] {
        &self.sorted_beliefs
    }

    /// Channel model.
    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    /// Number of channels.
    pub fn channels(&self) -> usize {
        self.sorted_beliefs.len()
    }

    fn tau(&self, i: usize) -> f64 {
        self.model.propagate(self.sorted_beliefs[i])
    }

    /// The busy-busy fallback `F`: `p01` when `N = 3`, else `τ(w[3])`.
    pub fn fallback(&self) -> f64 {
        if self.channels() == 3 {
            self.model.p01()
        } else {
            self.tau(3)
        }
    }

    fn need(&self, n: usize, what: &str) -> Result<()> {
        if self.channels() < n {
            Err(Error::contract(format!(
                "{what} needs N >= {n}, got {}",
                self.channels()
            )))
        } else {
            Ok(())
        }
    }
}

/// `1 − (1 − x)(1 − y)`, or the literal `1 − (1 − x(1 − y))`.
fn busy_pair_term(x: f64, y: f64, variant: FormulaVariant) -> f64 {
    match variant {
        FormulaVariant::Corrected => 1.0 - (1.0 - x) * (1.0 - y),
        FormulaVariant::AsPrinted => 1.0 - (1.0 - x * (1.0 - y)),
    }
}

/// Shared shape of every two-slot `k = 2` expression: sense `{wi, wj}` now,
/// then the best pair given the outcome.
///
/// `second_weight` multiplies the "only `j` idle" term; `single` is the best
/// unsensed belief after one idle observation; `(x, y)` are the two best
/// after both are seen busy.
#[allow(clippy::too_many_arguments)]
fn two_slot(
    wi: f64,
    wj: f64,
    second_weight: f64,
    single: f64,
    x: f64,
    y: f64,
    p11: f64,
    variant: FormulaVariant,
) -> f64 {
    let a = 1.0 - (1.0 - wi) * (1.0 - wj);
    let b = wi * wj * (1.0 - (1.0 - p11) * (1.0 - p11));
    let c = wi * (1.0 - wj) * (1.0 - (1.0 - p11) * (1.0 - single));
    let d = second_weight * (1.0 - (1.0 - p11) * (1.0 - single));
    let e = (1.0 - wi) * (1.0 - wj) * busy_pair_term(x, y, variant);
    a + b + c + d + e
}

/// Two-slot reward of the myopic pair `{w[0], w[1]}`.
pub fn myopic_pair_reward(input: &ClosedFormInput, variant: FormulaVariant) -> f64 {
    let w = input.beliefs();
    let p11 = input.model.p11();
    let t2 = input.tau(2);
    two_slot(
        w[0],
        w[1],
        (1.0 - w[0]) * w[1],
        t2,
        t2,
        input.fallback(),
        p11,
        variant,
    )
}

/// Bound for sensing `{w[0], w[2]}`, with `p01` as the busy-busy fallback.
pub fn top_third_bound(input: &ClosedFormInput, variant: FormulaVariant) -> f64 {
    let w = input.beliefs();
    let p11 = input.model.p11();
    let t1 = input.tau(1);
    two_slot(
        w[0],
        w[2],
        (1.0 - w[0]) * w[2],
        t1,
        t1,
        input.model.p01(),
        p11,
        variant,
    )
}

/// Bound for sensing `{w[0], w[j]}` with `j >= 3`.
pub fn top_far_bound(input: &ClosedFormInput, j: usize, variant: FormulaVariant) -> Result<f64> {
    input.need(4, "the j >= 3 bound")?;
    if j < 3 || j >= input.channels() {
        return Err(Error::contract(format!(
            "j must lie in 3..{}, got {j}",
            input.channels()
        )));
    }
    let w = input.beliefs();
    let p11 = input.model.p11();
    let t1 = input.tau(1);
    Ok(two_slot(
        w[0],
        w[j],
        (1.0 - w[0]) * w[j],
        t1,
        t1,
        input.tau(2),
        p11,
        variant,
    ))
}

/// Bound for sensing `{w[i], w[j]}` with `2 <= i < j`.
pub fn outer_pair_bound(
    input: &ClosedFormInput,
    i: usize,
    j: usize,
    variant: FormulaVariant,
) -> Result<f64> {
    input.need(4, "the disjoint-pair bound")?;
    if !(2 <= i && i < j && j < input.channels()) {
        return Err(Error::contract(format!(
            "need 2 <= i < j < {}, got i = {i}, j = {j}",
            input.channels()
        )));
    }
    let w = input.beliefs();
    let p11 = input.model.p11();
    let t0 = input.tau(0);
    let second_weight = match variant {
        FormulaVariant::Corrected => (1.0 - w[i]) * w[j],
        FormulaVariant::AsPrinted => (1.0 - w[j]) * w[j],
    };
    Ok(two_slot(
        w[i],
        w[j],
        second_weight,
        t0,
        t0,
        input.tau(1),
        p11,
        variant,
    ))
}

/// Printed right-hand side next to the directly computed difference.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct IdentityCheck {
    /// The closed-form right-hand side as printed.
    pub printed_rhs: f64,
    /// Difference of the two corrected rewards.
    pub direct_difference: f64,
    /// `|printed_rhs − direct_difference|`.
    pub discrepancy: f64,
}

impl IdentityCheck {
    fn new(printed_rhs: f64, direct_difference: f64) -> Self {
        Self {
            printed_rhs,
            direct_difference,
            discrepancy: (printed_rhs - direct_difference).abs(),
        }
    }
}

/// The `j >= 3` identity at one index.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct IndexedIdentityCheck {
    /// Position of the partner channel in the sorted vector.
    pub j: usize,
    /// Values at that index.
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub check: IdentityCheck,
}

/// Errata detector for the two gap identities. Nothing is asserted; the
/// discrepancies are data.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct IdentityReport {
    /// `myopic_pair_reward − top_third_bound` against `(1 − w0)(w1 − w2)(1 − (1 − p11)(F − p01))`.
    pub j3: IdentityCheck,
    /// `myopic_pair_reward − top_far_bound(j)` for every `j` in `3..N`; empty when `N = 3`.
    pub j_ge4: Vec<IndexedIdentityCheck>,
}

/// Evaluates both gap identities on `input`.
pub fn gap_identities(input: &ClosedFormInput) -> IdentityReport {
    let w = input.beliefs();
    let (p01, p11) = (input.model.p01(), input.model.p11());
    let corrected = FormulaVariant::Corrected;
    let r_star = myopic_pair_reward(input, corrected);

    let printed_rhs = (1.0 - w[0]) * (w[1] - w[2]) * (1.0 - (1.0 - p11) * (input.fallback() - p01));
    let j3 = IdentityCheck::new(printed_rhs, r_star - top_third_bound(input, corrected));

    let j_ge4 = (3..input.channels())
        .map(|j| {
            let (t1, t2, tj) = (input.tau(1), input.tau(2), input.tau(j));
            let rhs7 = w[0] * (1.0 - w[1]) * (w[2] - w[j]) * (p11 - p01)
                + (1.0 - w[0]) * (t1 - tj) * (w[1] * (1.0 - p11) + (1.0 - t2) * (1.0 - w[1]))
                + (1.0 - w[0]) * (t1 - tj) * (1.0 - (1.0 - p11) * (t2 - p01));
            let direct = r_star - top_far_bound(input, j, corrected).expect("j checked");
            IndexedIdentityCheck {
                j,
                check: IdentityCheck::new(rhs7, direct),
            }
        })
        .collect();
    IdentityReport { j3, j_ge4 }
}

/// Belief vector shared by both counterexamples, already sorted.
pub const COUNTEREXAMPLE_BELIEFS: [f64; 6] = [0.99, 0.5, 0.4, 0.39, 0.25, 0.25];

/// Fixed parameters of one reference counterexample.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct Counterexample {
    /// 1 or 2.
    pub id: u8,
    /// Busy → idle probability.
    pub p01: f64,
    /// Idle → idle probability.
    pub p11: f64,
    /// Gap between the alternative and the myopic reward as printed.
    pub printed_gap: f64,
    /// Acceptance tolerance around `printed_gap`; the second one is rounded in print.
    pub tolerance: f64,
}

/// `k = 3, T = 2, N = 6, p11 = 0.5, p01 = 0.3`.
pub const COUNTEREXAMPLE_1: Counterexample = Counterexample {
    id: 1,
    p01: 0.3,
    p11: 0.5,
    printed_gap: 0.000_056_25,
    tolerance: 1e-9,
};

/// `k = 3, T = 2, N = 6, p11 = 0.3, p01 = 0.5`.
pub const COUNTEREXAMPLE_2: Counterexample = Counterexample {
    id: 2,
    p01: 0.5,
    p11: 0.3,
    printed_gap: 0.000_02,
    tolerance: 5e-6,
};

impl Counterexample {
    /// Looks up a counterexample by number.
    pub fn by_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(COUNTEREXAMPLE_1),
            2 => Some(COUNTEREXAMPLE_2),
            _ => None,
        }
    }

    /// Channels sensed per slot.
    pub const SENSE_K: usize = 3;
    /// Horizon.
    pub const HORIZON: usize = 2;

    /// Channel model.
    pub fn model(&self) -> ChannelModel {
        ChannelModel::new(self.p01, self.p11).expect("constants are probabilities")
    }

    /// The instance under the at-least-one utility.
    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig::new(
            Self::SENSE_K,
            Self::HORIZON,
            UtilityKind::AtLeastOne,
            self.model(),
            BeliefVector::new(COUNTEREXAMPLE_BELIEFS.to_vec()).expect("constants are valid"),
        )
        .expect("constants are valid")
    }

    /// First-slot action of the competing policy: the two best channels and the fourth.
    pub fn alternative_action(&self) -> SensingAction {
        SensingAction::new(alloc::vec![0, 1, 3], COUNTEREXAMPLE_BELIEFS.len())
            .expect("constant action is valid")
    }

    /// `(myopic reward, alternative reward)` from the closed forms.
    pub fn closed_form(&self, variant: FormulaVariant) -> (f64, f64) {
        match self.id {
            1 => ce1_values(variant),
            _ => ce2_values(variant),
        }
    }
}

fn idle_counts(a: f64, b: f64, c: f64) -> (f64, f64) {
    let two = a * b * (1.0 - c) + a * (1.0 - b) * c + (1.0 - a) * b * c;
    let one = a * (1.0 - b) * (1.0 - c) + (1.0 - a) * b * (1.0 - c) + (1.0 - a) * (1.0 - b) * c;
    (two, one)
}

/// Sense `(a, b, c)` now, then the best three, for `p11 >= p01`. `(x, y, z)`
/// are the propagated unsensed beliefs, best first.
#[allow(clippy::too_many_arguments)]
fn ce1_form(
    a: f64,
    b: f64,
    c: f64,
    x: f64,
    y: f64,
    z: f64,
    p11: f64,
    variant: FormulaVariant,
) -> f64 {
    let q = 1.0 - p11;
    let (two, one) = idle_counts(a, b, c);
    let busy = match variant {
        FormulaVariant::Corrected => 1.0 - (1.0 - x) * (1.0 - y) * (1.0 - z),
        FormulaVariant::AsPrinted => 1.0 - (1.0 - x * (1.0 - y) * (1.0 - z)),
    };
    1.0 - (1.0 - a) * (1.0 - b) * (1.0 - c)
        + a * b * c * (1.0 - q * q * q)
        + two * (1.0 - q * q * (1.0 - x))
        + one * (1.0 - q * (1.0 - x) * (1.0 - y))
        + (1.0 - a) * (1.0 - b) * (1.0 - c) * busy
}

/// Sense `(a, b, c)` now, then the best three, for `p11 < p01`. `(x, y, z)`
/// are the three propagated unsensed beliefs in the printed order and
/// `last_weight` is the probability factor of the all-busy term.
#[allow(clippy::too_many_arguments)]
fn ce2_form(a: f64, b: f64, c: f64, x: f64, y: f64, z: f64, p01: f64, last_weight: f64) -> f64 {
    let q = 1.0 - p01;
    let (two, one) = idle_counts(a, b, c);
    1.0 - (1.0 - a) * (1.0 - b) * (1.0 - c)
        + a * b * c * (1.0 - (1.0 - x) * (1.0 - y) * (1.0 - z))
        + two * (1.0 - q * (1.0 - x) * (1.0 - y))
        + one * (1.0 - q * q * (1.0 - x))
        + last_weight * (1.0 - q * q * q)
}

/// Counterexample 1 closed forms: `(myopic, alternative)` for the myopic set `{0, 1, 2}`
/// and the alternative `{0, 1, 3}`.
pub fn ce1_values(variant: FormulaVariant) -> (f64, f64) {
    let w = COUNTEREXAMPLE_BELIEFS;
    let m = COUNTEREXAMPLE_1.model();
    let t = |i: usize| m.propagate(w[i]);
    let p11 = m.p11();
    let r_star = ce1_form(w[0], w[1], w[2], t(3), t(4), t(5), p11, variant);
    let r_alt = ce1_form(w[0], w[1], w[3], t(2), t(4), t(5), p11, variant);
    (r_star, r_alt)
}

/// Counterexample 2 closed forms: `(myopic, alternative)` for `{0, 1, 2}` and `{0, 1, 3}`.
pub fn ce2_values(variant: FormulaVariant) -> (f64, f64) {
    let w = COUNTEREXAMPLE_BELIEFS;
    let m = COUNTEREXAMPLE_2.model();
    let t = |i: usize| m.propagate(w[i]);
    let p01 = m.p01();
    let r_star = ce2_form(
        w[0],
        w[1],
        w[2],
        t(5),
        t(4),
        t(3),
        p01,
        (1.0 - w[0]) * (1.0 - w[1]) * (1.0 - w[2]),
    );
    let last = match variant {
        FormulaVariant::Corrected => w[3],
        FormulaVariant::AsPrinted => w[2],
    };
    let r_alt = ce2_form(
        w[0],
        w[1],
        w[3],
        t(5),
        t(4),
        t(2),
        p01,
        (1.0 - w[0]) * (1.0 - w[1]) * (1.0 - last),
    );
    (r_star, r_alt)
}
