//! Problem representation, belief dynamics and payoff evaluation.
//!
//! A paper is high quality (H) or low quality (L). Journal `j` accepts an H
//! paper with probability `a`, never accepts an L paper, and on rejection an
//! L paper turns into an H paper with probability `q` (feedback). After a
//! rejection the belief `μ = P(H)` moves to
//!
//! ```text
//! f(μ) = ((1 − a − q)·μ + q) / (1 − a·μ)
//! ```
//!
//! Strategies reduce to submission orders: beliefs along the path are pinned
//! down by the prior and the order, so [`SearchOrder`] is the only strategy
//! object. Periods are 1-based in the docs and 0-based in the vectors:
//! `beliefs[t]` is the belief entering period `t + 1` and `reach[t]` the
//! probability of getting there. The last entries describe the state after
//! every journal rejected.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{format_exact, is_unit_interval, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("belief {0} is outside [0, 1]")]
    BeliefOutOfRange(String),
    #[error("journal `{name}`: {reason}")]
    InvalidJournal { name: String, reason: String },
    #[error("an instance needs at least one journal")]
    NoJournals,
    #[error("invalid order: {0}")]
    InvalidOrder(String),
}

// ---------------------------------------------------------------------------
// Belief
// ---------------------------------------------------------------------------

/// Probability that the paper is high quality.
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct Belief<S> {
    mu_h: S,
}

impl<S: Scalar> Belief<S> {
    pub fn new(mu_h: S) -> Result<Self, ModelError> {
        if mu_h < S::zero() || mu_h > S::one() {
            return Err(ModelError::BeliefOutOfRange(mu_h.to_string()));
        }
        Ok(Self { mu_h })
    }

    pub fn certain_high() -> Self {
        Self { mu_h: S::one() }
    }

    pub fn h(&self) -> &S {
        &self.mu_h
    }

    pub fn l(&self) -> S {
        S::one() - self.mu_h.clone()
    }

    pub fn into_inner(self) -> S {
        self.mu_h
    }
}

impl<S: fmt::Display> fmt::Display for Belief<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "μ(H)={}", self.mu_h)
    }
}

// ---------------------------------------------------------------------------
// Journals and instances
// ---------------------------------------------------------------------------

/// One search box, held exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Journal {
    pub name: String,
    /// Payoff on acceptance.
    pub u: BigRational,
    /// Acceptance probability for a high-quality paper.
    pub a: BigRational,
    /// Probability that a rejected low-quality paper becomes high quality.
    pub q: BigRational,
    /// Cost paid on submission.
    pub c: BigRational,
}

impl Journal {
    /// Validates `a ∈ (0,1]`, `q ∈ [0,1)`, `u ≥ 0`, `c ≥ 0`.
    pub fn new(
        name: impl Into<String>,
        u: BigRational,
        a: BigRational,
        q: BigRational,
        c: BigRational,
    ) -> Result<Self, ModelError> {
        let journal = Self {
            name: name.into(),
            u,
            a,
            q,
            c,
        };
        journal.validate()?;
        Ok(journal)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let fail = |reason: String| ModelError::InvalidJournal {
            name: self.name.clone(),
            reason,
        };
        if !self.a.is_positive() || self.a > BigRational::one() {
            return Err(fail(format!(
                "acceptance rate a={} must lie in (0,1]",
                format_exact(&self.a)
            )));
        }
        if self.q.is_negative() || self.q >= BigRational::one() {
            return Err(fail(format!(
                "feedback rate q={} must lie in [0,1)",
                format_exact(&self.q)
            )));
        }
        if self.u.is_negative() {
            return Err(fail(format!("payoff u={} must be non-negative", format_exact(&self.u))));
        }
        if self.c.is_negative() {
            return Err(fail(format!("cost c={} must be non-negative", format_exact(&self.c))));
        }
        Ok(())
    }

    /// Modified acceptance payoff `u − c/a`, the no-feedback index.
    pub fn modified_payoff(&self) -> BigRational {
        &self.u - &self.c / &self.a
    }

    pub fn params<S: Scalar>(&self) -> JournalParams<S> {
        JournalParams {
            u: S::from_rational(&self.u),
            a: S::from_rational(&self.a),
            q: S::from_rational(&self.q),
            c: S::from_rational(&self.c),
        }
    }
}

/// Journal parameters in a numeric mode. Unvalidated: used for hot loops and
/// for probing belief dynamics outside the journal invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct JournalParams<S> {
    pub u: S,
    pub a: S,
    pub q: S,
    pub c: S,
}

/// The full search problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    journals: Vec<Journal>,
    input_index: Vec<usize>,
    prior: BigRational,
    outside_option: BigRational,
    distinct_u: bool,
}

impl Instance {
    /// Sorts journals by decreasing `u` (stable) and records whether payoffs
    /// are pairwise distinct.
    pub fn new(journals: Vec<Journal>, prior: BigRational, outside_option: BigRational) -> Result<Self, ModelError> {
        if journals.is_empty() {
            return Err(ModelError::NoJournals);
        }
        if !is_unit_interval(&prior) {
            return Err(ModelError::BeliefOutOfRange(format_exact(&prior)));
        }
        for j in &journals {
            j.validate()?;
        }
        Ok(Self::from_parts_unchecked(journals, None, prior, outside_option))
    }

    fn from_parts_unchecked(
        journals: Vec<Journal>,
        input_index: Option<Vec<usize>>,
        prior: BigRational,
        outside_option: BigRational,
    ) -> Self {
        let input_index = input_index.unwrap_or_else(|| (0..journals.len()).collect());
        let mut tagged: Vec<(Journal, usize)> = journals.into_iter().zip(input_index).collect();
        tagged.sort_by(|x, y| y.0.u.cmp(&x.0.u));
        let distinct_u = tagged.windows(2).all(|w| w[0].0.u != w[1].0.u);
        let (journals, input_index) = tagged.into_iter().unzip();
        Self {
            journals,
            input_index,
            prior,
            outside_option,
            distinct_u,
        }
    }

    /// Journals sorted by decreasing payoff.
    pub fn journals(&self) -> &[Journal] {
        &self.journals
    }

    pub fn len(&self) -> usize {
        self.journals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.journals.is_empty()
    }

    /// Position of each sorted journal in the original input.
    pub fn input_index(&self) -> &[usize] {
        &self.input_index
    }

    pub fn prior(&self) -> &BigRational {
        &self.prior
    }

    pub fn outside_option(&self) -> &BigRational {
        &self.outside_option
    }

    /// False when two journals share a payoff; ties are broken by input order.
    pub fn distinct_u(&self) -> bool {
        self.distinct_u
    }

    pub fn with_prior(&self, prior: BigRational) -> Result<Self, ModelError> {
        if !is_unit_interval(&prior) {
            return Err(ModelError::BeliefOutOfRange(format_exact(&prior)));
        }
        Ok(Self { prior, ..self.clone() })
    }

    /// Journals in their original input order.
    pub fn journals_in_input_order(&self) -> Vec<&Journal> {
        let mut out: Vec<(usize, &Journal)> = self.input_index.iter().copied().zip(self.journals.iter()).collect();
        out.sort_by_key(|(i, _)| *i);
        out.into_iter().map(|(_, j)| j).collect()
    }

    pub fn model<S: Scalar>(&self) -> Model<S> {
        Model {
            journals: self.journals.iter().map(Journal::params).collect(),
            prior: S::from_rational(&self.prior),
            outside: S::from_rational(&self.outside_option),
        }
    }

    pub fn order_names(&self, order: &SearchOrder) -> Vec<&str> {
        order
            .as_slice()
            .iter()
            .map(|&j| self.journals[j].name.as_str())
            .collect()
    }
}

/// Shifts every payoff and the outside option by `−k` (so a zero outside
/// option becomes `−k`).
///
/// Beliefs depend only on `(a, q)` and terminal probabilities sum to one, so
/// every order's value drops by exactly `k`. Payoffs may become negative
/// here; this is the one place where `u < 0` is produced.
pub fn normalize(inst: &Instance, k: &BigRational) -> Instance {
    let journals = inst
        .journals
        .iter()
        .map(|j| Journal {
            u: &j.u - k,
            ..j.clone()
        })
        .collect();
    Instance::from_parts_unchecked(
        journals,
        Some(inst.input_index.clone()),
        inst.prior.clone(),
        &inst.outside_option - k,
    )
}

// ---------------------------------------------------------------------------
// Orders
// ---------------------------------------------------------------------------

/// Submission order: `perm[t]` is the (sorted) journal submitted in period `t + 1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SearchOrder(Vec<usize>);

impl SearchOrder {
    pub fn new(perm: Vec<usize>, n: usize) -> Result<Self, ModelError> {
        if perm.len() != n {
            return Err(ModelError::InvalidOrder(format!(
                "expected {n} journals, got {}",
                perm.len()
            )));
        }
        let mut seen = vec![false; n];
        for &j in &perm {
            if j >= n || std::mem::replace(&mut seen[j], true) {
                return Err(ModelError::InvalidOrder(format!(
                    "{perm:?} is not a permutation of 0..{n}"
                )));
            }
        }
        Ok(Self(perm))
    }

    /// Builds an order from 1-based positions, as printed by [`fmt::Display`].
    pub fn from_one_based(perm: &[usize], n: usize) -> Result<Self, ModelError> {
        if perm.contains(&0) {
            return Err(ModelError::InvalidOrder("positions are 1-based".into()));
        }
        Self::new(perm.iter().map(|p| p - 1).collect(), n)
    }

    /// Wraps a permutation already known to be valid.
    pub(crate) fn from_trusted(perm: Vec<usize>) -> Self {
        Self(perm)
    }

    /// The monotone order: decreasing payoff.
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.0.iter().enumerate().all(|(t, &j)| t == j)
    }

    pub fn swapped(&self, t: usize) -> Self {
        let mut perm = self.0.clone();
        perm.swap(t, t + 1);
        Self(perm)
    }
}

impl fmt::Display for SearchOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.0.iter().map(|j| (j + 1).to_string()).collect();
        write!(f, "({})", body.join(","))
    }
}

// ---------------------------------------------------------------------------
// Belief dynamics
// ---------------------------------------------------------------------------

/// Posterior after rejection: `((1 − a − q)μ + q) / (1 − aμ)`.
///
/// Returns `None` when rejection has probability zero (`aμ = 1`).
pub fn posterior<S: Scalar>(a: &S, q: &S, mu: &S) -> Option<S> {
    let denom = S::one() - a.clone() * mu.clone();
    if denom.is_zero() {
        return None;
    }
    let numer = (S::one() - a.clone() - q.clone()) * mu.clone() + q.clone();
    Some(numer / denom)
}

/// Belief after rejection by `j`. A zero-probability rejection yields μ=1;
/// the continuation carries no weight, so the choice never affects payoffs.
pub fn update_belief<S: Scalar>(j: &JournalParams<S>, b: &Belief<S>) -> Belief<S> {
    match posterior(&j.a, &j.q, b.h()) {
        Some(mu) => Belief { mu_h: mu },
        None => Belief::certain_high(),
    }
}

pub fn rejection_probability<S: Scalar>(j: &JournalParams<S>, b: &Belief<S>) -> S {
    S::one() - j.a.clone() * b.h().clone()
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Everything `evaluate` computes along one order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationTrace<S> {
    pub order: SearchOrder,
    /// Belief entering each period; the last entry follows the final rejection.
    pub beliefs: Vec<S>,
    /// Probability of reaching each period; the last entry is the probability
    /// that every journal rejects.
    pub reach: Vec<S>,
    /// `r_t·(u·a·β_t − c)` per period.
    pub period_values: Vec<S>,
    /// `r_{I+1}·u_∞`.
    pub terminal_value: S,
    pub total: S,
    /// First period (0-based) that is reached with probability zero, if any.
    pub unreachable_from: Option<usize>,
}

impl<S: Scalar> EvaluationTrace<S> {
    /// `Σ r_t·a·β_t + r_{I+1}`; one for every order.
    pub fn exit_mass(&self, model: &Model<S>) -> S {
        let mut total = self.reach.last().cloned().unwrap_or_else(S::zero);
        for (t, &j) in self.order.as_slice().iter().enumerate() {
            total = total + self.reach[t].clone() * model.journals[j].a.clone() * self.beliefs[t].clone();
        }
        total
    }

    /// Unconditional probability of acceptance in each period.
    pub fn acceptance_mass(&self, model: &Model<S>) -> Vec<S> {
        self.order
            .as_slice()
            .iter()
            .enumerate()
            .map(|(t, &j)| self.reach[t].clone() * model.journals[j].a.clone() * self.beliefs[t].clone())
            .collect()
    }
}

/// An instance converted into a numeric mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<S> {
    pub journals: Vec<JournalParams<S>>,
    pub prior: S,
    pub outside: S,
}

impl<S: Scalar> Model<S> {
    pub fn len(&self) -> usize {
        self.journals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.journals.is_empty()
    }

    pub fn with_prior(&self, prior: S) -> Self {
        Self { prior, ..self.clone() }
    }

    pub fn check_order(&self, order: &SearchOrder) -> Result<(), ModelError> {
        SearchOrder::new(order.as_slice().to_vec(), self.len()).map(|_| ())
    }

    pub fn evaluate(&self, order: &SearchOrder) -> Result<EvaluationTrace<S>, ModelError> {
        self.check_order(order)?;
        let n = self.len();
        let mut beliefs = Vec::with_capacity(n + 1);
        let mut reach = Vec::with_capacity(n + 1);
        let mut period_values = Vec::with_capacity(n);
        let mut unreachable_from = None;
        let mut belief = self.prior.clone();
        let mut r = S::one();
        let mut total = S::zero();
        for (t, &j) in order.as_slice().iter().enumerate() {
            let p = &self.journals[j];
            if unreachable_from.is_none() && r.is_zero() {
                unreachable_from = Some(t);
            }
            let term = r.clone() * (p.u.clone() * p.a.clone() * belief.clone() - p.c.clone());
            total = total + term.clone();
            period_values.push(term);
            beliefs.push(belief.clone());
            reach.push(r.clone());
            r = r * (S::one() - p.a.clone() * belief.clone());
            belief = posterior(&p.a, &p.q, &belief).unwrap_or_else(S::one);
        }
        if unreachable_from.is_none() && r.is_zero() {
            unreachable_from = Some(n);
        }
        let terminal_value = r.clone() * self.outside.clone();
        total = total + terminal_value.clone();
        beliefs.push(belief);
        reach.push(r);
        Ok(EvaluationTrace {
            order: order.clone(),
            beliefs,
            reach,
            period_values,
            terminal_value,
            total,
            unreachable_from,
        })
    }

    /// Expected utility of `order` without building a trace. `order` must be valid.
    pub fn value(&self, order: &[usize]) -> S {
        let mut belief = self.prior.clone();
        let mut r = S::one();
        let mut total = S::zero();
        for &j in order {
            let p = &self.journals[j];
            total = total + r.clone() * (p.u.clone() * p.a.clone() * belief.clone() - p.c.clone());
            r = r * (S::one() - p.a.clone() * belief.clone());
            belief = posterior(&p.a, &p.q, &belief).unwrap_or_else(S::one);
        }
        total + r * self.outside.clone()
    }
}

pub fn evaluate<S: Scalar>(inst: &Instance, order: &SearchOrder) -> Result<EvaluationTrace<S>, ModelError> {
    inst.model::<S>().evaluate(order)
}

pub fn belief_path<S: Scalar>(inst: &Instance, order: &SearchOrder) -> Result<Vec<Belief<S>>, ModelError> {
    Ok(evaluate::<S>(inst, order)?
        .beliefs
        .into_iter()
        .map(|mu_h| Belief { mu_h })
        .collect())
}

pub fn survival_schedule<S: Scalar>(inst: &Instance, order: &SearchOrder) -> Result<Vec<S>, ModelError> {
    Ok(evaluate::<S>(inst, order)?.reach)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example1;
    use crate::numeric::{ratio, rational_from_int};
    use num_traits::Zero;

    type Q = BigRational;

    fn params(a: (i64, i64), q: (i64, i64)) -> JournalParams<Q> {
        JournalParams {
            u: Q::one(),
            a: ratio(a.0, a.1),
            q: ratio(q.0, q.1),
            c: Q::zero(),
        }
    }

    fn belief(n: i64, d: i64) -> Belief<Q> {
        Belief::new(ratio(n, d)).unwrap()
    }

    #[test]
    fn update_belief_examples() {
        assert_eq!(*update_belief(&params((1, 5), (1, 5)), &belief(1, 2)).h(), ratio(5, 9));
        assert_eq!(
            *update_belief(&params((3, 10), (2, 5)), &belief(1, 2)).h(),
            ratio(11, 17)
        );
        assert_eq!(*update_belief(&params((3, 10), (2, 5)), &belief(1, 1)).h(), Q::one());
    }

    #[test]
    fn zero_probability_rejection_maps_to_certain_high() {
        let p = params((1, 1), (1, 2));
        let b = Belief::<Q>::certain_high();
        assert!(rejection_probability(&p, &b).is_zero());
        assert_eq!(*update_belief(&p, &b).h(), Q::one());
    }

    #[test]
    fn rejection_probability_examples() {
        assert_eq!(
            rejection_probability(&params((1, 5), (0, 1)), &belief(1, 2)),
            ratio(9, 10)
        );
        assert_eq!(
            rejection_probability(&params((3, 10), (0, 1)), &belief(17, 29)),
            ratio(239, 290)
        );
    }

    #[test]
    fn uninformative_journal_keeps_belief() {
        let p = JournalParams {
            u: Q::one(),
            a: Q::zero(),
            q: Q::zero(),
            c: Q::zero(),
        };
        assert_eq!(*update_belief(&p, &belief(3, 7)).h(), ratio(3, 7));
    }

    #[test]
    fn belief_bounds_are_enforced() {
        assert!(Belief::new(ratio(3, 2)).is_err());
        assert!(Belief::new(ratio(-1, 2)).is_err());
    }

    #[test]
    fn example1_values() {
        let inst = example1(ratio(1, 2));
        let t = evaluate::<Q>(&inst, &SearchOrder::identity(2)).unwrap();
        assert_eq!(t.total, ratio(13, 20));
        assert_eq!(
            t.reach,
            vec![
                Q::one(),
                ratio(9, 10),
                ratio(9, 10) * (Q::one() - ratio(3, 10) * ratio(5, 9))
            ]
        );
        let swapped = evaluate::<Q>(&inst, &SearchOrder::new(vec![1, 0], 2).unwrap()).unwrap();
        assert_eq!(swapped.beliefs[1], ratio(11, 17));
        assert!(swapped.beliefs[1] > ratio(1, 2));
    }

    #[test]
    fn example1_indifference_at_threshold() {
        let inst = example1(ratio(17, 29));
        let m = inst.model::<Q>();
        assert_eq!(m.value(&[0, 1]), m.value(&[1, 0]));
    }

    #[test]
    fn single_journal_value() {
        let j = Journal::new("J", rational_from_int(5), ratio(1, 5), Q::zero(), Q::zero()).unwrap();
        let inst = Instance::new(vec![j], ratio(1, 2), Q::zero()).unwrap();
        let t = evaluate::<Q>(&inst, &SearchOrder::identity(1)).unwrap();
        assert_eq!(t.total, ratio(1, 2));
    }

    #[test]
    fn invalid_orders_are_rejected() {
        let inst = example1(ratio(1, 2));
        let bad = SearchOrder(vec![0, 0]);
        assert!(matches!(evaluate::<Q>(&inst, &bad), Err(ModelError::InvalidOrder(_))));
        assert!(SearchOrder::new(vec![0], 2).is_err());
        assert!(SearchOrder::from_one_based(&[0, 1], 2).is_err());
    }

    #[test]
    fn no_feedback_path_drifts_down() {
        let j = |u| Journal::new(format!("J{u}"), rational_from_int(u), ratio(2, 5), Q::zero(), Q::zero()).unwrap();
        let inst = Instance::new(vec![j(3), j(2), j(1)], ratio(4, 5), Q::zero()).unwrap();
        let path = belief_path::<Q>(&inst, &SearchOrder::identity(3)).unwrap();
        assert!(path.windows(2).all(|w| w[1].h() <= w[0].h()));
    }

    #[test]
    fn sorting_is_stable_and_flags_ties() {
        let mk = |name: &str, u| Journal::new(name, rational_from_int(u), ratio(1, 2), Q::zero(), Q::zero()).unwrap();
        let inst = Instance::new(vec![mk("low", 1), mk("tieA", 3), mk("tieB", 3)], ratio(1, 2), Q::zero()).unwrap();
        let names: Vec<&str> = inst.journals().iter().map(|j| j.name.as_str()).collect();
        assert_eq!(names, ["tieA", "tieB", "low"]);
        assert_eq!(inst.input_index(), &[1, 2, 0]);
        assert!(!inst.distinct_u());
        assert_eq!(inst.journals_in_input_order()[0].name, "low");
    }

    #[test]
    fn journal_invariants() {
        let z = Q::zero;
        assert!(Journal::new("x", Q::one(), z(), z(), z()).is_err());
        assert!(Journal::new("x", Q::one(), Q::one(), Q::one(), z()).is_err());
        assert!(Journal::new("x", -Q::one(), Q::one(), z(), z()).is_err());
        assert!(Journal::new("x", Q::one(), Q::one(), z(), -Q::one()).is_err());
        assert!(Journal::new("x", z(), Q::one(), z(), z()).is_ok());
    }

    #[test]
    fn normalize_shifts_every_order() {
        for (k, prior) in [(1i64, ratio(7, 10)), (-2, ratio(7, 10)), (0, ratio(1, 3))] {
            let inst = example1(prior);
            let shifted = normalize(&inst, &rational_from_int(k));
            for perm in [vec![0, 1], vec![1, 0]] {
                let before = inst.model::<Q>().value(&perm);
                let after = shifted.model::<Q>().value(&perm);
                assert_eq!(after, before - rational_from_int(k));
            }
        }
        let inst = example1(ratio(7, 10));
        assert_eq!(normalize(&inst, &Q::zero()), inst);
    }
}
