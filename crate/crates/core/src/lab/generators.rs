//! Random instances targeting each hypothesis class.
//!
//! Parameters are drawn uniformly from fine rational grids so that every
//! instance is exact: `a` and `q` in steps of 1/100, payoffs in steps of
//! 1/10, priors in steps of 1/1000. Each generator validates its output with
//! the condition checkers before returning it.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::conditions::{
    check_globally_bounded_weak_feedback, check_order_independence, check_regularity, ThresholdPolicy,
};
use crate::model::{Instance, Journal};
use crate::numeric::{ratio, rational_from_int};

const MAX_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("family {family} produced no valid instance with {journals} journals after {attempts} attempts")]
    Infeasible {
        family: Family,
        journals: usize,
        attempts: usize,
    },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `q ≡ 0`, random costs.
    NoFeedback,
    /// `q_i = κ a_i` for a shared κ, with costs small enough that payoff
    /// order and `u − c/a` order agree. Half the draws use only two distinct
    /// `(a, q)` tuples.
    OrderIndependent,
    /// Two strictly regular journals, no costs, prior at least `q_2/(q_2+a_2)`.
    Regular2Box,
    /// Regular journals of any size, no costs, any prior.
    Regular,
    /// Exponentially regular journals, no costs, prior drawn uniformly from
    /// the set satisfying globally bounded weak feedback (max policy).
    ExpRegularGbwf,
    /// Any valid journals, costs and outside option.
    Unconstrained,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::NoFeedback,
        Family::OrderIndependent,
        Family::Regular2Box,
        Family::Regular,
        Family::ExpRegularGbwf,
        Family::Unconstrained,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::NoFeedback => "no_feedback",
            Family::OrderIndependent => "order_independent",
            Family::Regular2Box => "regular_2box",
            Family::Regular => "regular",
            Family::ExpRegularGbwf => "exp_regular_gbwf",
            Family::Unconstrained => "unconstrained",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| GenError::InvalidSpec(format!("unknown family `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub min_journals: usize,
    pub max_journals: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(family: Family, min_journals: usize, max_journals: usize, seed: u64) -> Self {
        Self {
            family,
            min_journals,
            max_journals,
            seed,
        }
    }
}

fn grid(rng: &mut ChaCha8Rng, lo: i64, hi: i64, den: i64) -> BigRational {
    ratio(rng.random_range(lo..=hi), den)
}

/// `n` distinct payoffs in steps of 1/10, sorted decreasing.
fn distinct_payoffs(rng: &mut ChaCha8Rng, n: usize) -> Vec<BigRational> {
    let mut pool: Vec<i64> = (1..=100).collect();
    pool.shuffle(rng);
    let mut picked: Vec<i64> = pool[..n].to_vec();
    picked.sort_unstable_by(|x, y| y.cmp(x));
    picked.into_iter().map(|k| ratio(k, 10)).collect()
}

fn journals(u: Vec<BigRational>, a: Vec<BigRational>, q: Vec<BigRational>, c: Vec<BigRational>) -> Vec<Journal> {
    u.into_iter()
        .zip(a)
        .zip(q)
        .zip(c)
        .enumerate()
        .map(|(i, (((u, a), q), c))| {
            Journal::new(format!("J{}", i + 1), u, a, q, c).expect("generator draws valid journals")
        })
        .collect()
}

/// Draws one instance of the requested family.
pub fn gen_random_instance(spec: &GeneratorSpec) -> Result<Instance, GenError> {
    if spec.min_journals == 0 || spec.min_journals > spec.max_journals {
        return Err(GenError::InvalidSpec(format!(
            "journal range {}..={}",
            spec.min_journals, spec.max_journals
        )));
    }
    if spec.family == Family::Regular2Box && (spec.min_journals > 2 || spec.max_journals < 2) {
        return Err(GenError::InvalidSpec("regular_2box has exactly two journals".into()));
    }
    if spec.max_journals > 100 {
        return Err(GenError::InvalidSpec("at most 100 journals".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = match spec.family {
        Family::Regular2Box => 2,
        _ => rng.random_range(spec.min_journals..=spec.max_journals),
    };
    for _ in 0..MAX_ATTEMPTS {
        let candidate = match spec.family {
            Family::NoFeedback => no_feedback(&mut rng, n),
            Family::OrderIndependent => order_independent(&mut rng, n),
            Family::Regular2Box => regular_2box(&mut rng),
            Family::Regular => regular(&mut rng, n, false),
            Family::ExpRegularGbwf => exp_regular_gbwf(&mut rng, n),
            Family::Unconstrained => unconstrained(&mut rng, n),
        };
        if let Some(inst) = candidate.filter(|i| satisfies(spec.family, i)) {
            return Ok(inst);
        }
    }
    Err(GenError::Infeasible {
        family: spec.family,
        journals: n,
        attempts: MAX_ATTEMPTS,
    })
}

/// Whether `inst` meets the constraints of `family`, decided by the condition checkers.
pub fn satisfies(family: Family, inst: &Instance) -> bool {
    let js = inst.journals();
    let no_costs = js.iter().all(|j| j.c.is_zero()) && inst.outside_option().is_zero();
    match family {
        Family::NoFeedback => js.iter().all(|j| j.q.is_zero()),
        Family::OrderIndependent => {
            let r = check_order_independence(inst);
            r.pass && r.flag("small_costs") == Some(true) && inst.distinct_u()
        }
        Family::Regular2Box => {
            let r = check_regularity(inst);
            let bound = &js[1].q / (&js[1].q + &js[1].a);
            inst.len() == 2 && r.flag("strict") == Some(true) && no_costs && *inst.prior() >= bound
        }
        Family::Regular => check_regularity(inst).pass && no_costs,
        Family::ExpRegularGbwf => {
            check_regularity(inst).flag("exponential") == Some(true)
                && no_costs
                && check_globally_bounded_weak_feedback(inst, ThresholdPolicy::MaxOverJournals, usize::MAX)
                    .map(|r| r.pass)
                    .unwrap_or(false)
        }
        Family::Unconstrained => true,
    }
}

fn no_feedback(rng: &mut ChaCha8Rng, n: usize) -> Option<Instance> {
    let u = (0..n).map(|_| grid(rng, 1, 100, 10)).collect();
    let a = (0..n).map(|_| grid(rng, 1, 100, 100)).collect();
    let with_costs = rng.random_bool(0.75);
    let c = (0..n)
        .map(|_| {
            if with_costs {
                grid(rng, 0, 50, 100)
            } else {
                BigRational::zero()
            }
        })
        .collect();
    let prior = grid(rng, 1, 1000, 1000);
    Instance::new(
        journals(u, a, vec![BigRational::zero(); n], c),
        prior,
        BigRational::zero(),
    )
    .ok()
}

fn order_independent(rng: &mut ChaCha8Rng, n: usize) -> Option<Instance> {
    let u = distinct_payoffs(rng, n);
    let kappa = grid(rng, 0, 99, 100);
    let a: Vec<BigRational> = if rng.random_bool(0.5) {
        let tuples = [grid(rng, 1, 100, 100), grid(rng, 1, 100, 100)];
        (0..n).map(|_| tuples[rng.random_range(0..2)].clone()).collect()
    } else {
        (0..n).map(|_| grid(rng, 1, 100, 100)).collect()
    };
    let q = a.iter().map(|a| a * &kappa).collect();
    // c_i/a_i stays below half the smallest payoff gap, so u − c/a keeps the payoff order.
    let gap = u
        .windows(2)
        .map(|w| &w[0] - &w[1])
        .min()
        .unwrap_or_else(|| rational_from_int(1));
    let with_costs = rng.random_bool(0.75);
    let c = a
        .iter()
        .map(|a| {
            if with_costs {
                a * &gap * grid(rng, 0, 49, 100)
            } else {
                BigRational::zero()
            }
        })
        .collect();
    let prior = grid(rng, 0, 1000, 1000);
    Instance::new(journals(u, a, q, c), prior, BigRational::zero()).ok()
}

fn regular_2box(rng: &mut ChaCha8Rng) -> Option<Instance> {
    let u = distinct_payoffs(rng, 2);
    let (a1, a2) = strictly_increasing_pair(rng, 1, 99);
    let (q2, q1) = strictly_increasing_pair(rng, 0, 99);
    let (a, q) = (
        vec![ratio(a1, 100), ratio(a2, 100)],
        vec![ratio(q1, 100), ratio(q2, 100)],
    );
    let bound = &q[1] / (&q[1] + &a[1]);
    let prior = &bound + (BigRational::one() - &bound) * grid(rng, 0, 1000, 1000);
    Instance::new(
        journals(u, a, q, vec![BigRational::zero(); 2]),
        prior,
        BigRational::zero(),
    )
    .ok()
}

fn strictly_increasing_pair(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> (i64, i64) {
    let x = rng.random_range(lo..hi);
    (x, rng.random_range(x + 1..=hi))
}

/// Regular rates: `a` sorted up, `q` sorted down. With `exponential`, each
/// payoff is at least twice the next.
fn regular_rates(rng: &mut ChaCha8Rng, n: usize) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut a: Vec<i64> = (0..n).map(|_| rng.random_range(1..=99)).collect();
    let mut q: Vec<i64> = (0..n).map(|_| rng.random_range(0..=99)).collect();
    a.sort_unstable();
    q.sort_unstable_by(|x, y| y.cmp(x));
    (
        a.into_iter().map(|k| ratio(k, 100)).collect(),
        q.into_iter().map(|k| ratio(k, 100)).collect(),
    )
}

fn regular(rng: &mut ChaCha8Rng, n: usize, exponential: bool) -> Option<Instance> {
    let u = if exponential {
        let mut u = vec![grid(rng, 1, 20, 10)];
        for _ in 1..n {
            let growth = rational_from_int(2) + grid(rng, 0, 20, 10);
            let next = u.last().expect("nonempty") * growth;
            u.push(next);
        }
        u.reverse();
        u
    } else {
        let mut u: Vec<BigRational> = (0..n).map(|_| grid(rng, 1, 100, 10)).collect();
        u.sort_by(|x, y| y.cmp(x));
        u
    };
    let (a, q) = regular_rates(rng, n);
    let prior = grid(rng, 1, 999, 1000);
    Instance::new(
        journals(u, a, q, vec![BigRational::zero(); n]),
        prior,
        BigRational::zero(),
    )
    .ok()
}

fn exp_regular_gbwf(rng: &mut ChaCha8Rng, n: usize) -> Option<Instance> {
    let base = regular(rng, n, true)?;
    let lo = gbwf_lower_bound(&base);
    // Beliefs along every path rise with the prior, so the feasible priors
    // form an interval [lo, 1]; the f64 bound is confirmed exactly by `satisfies`.
    let lo_k = ((lo * 1000.0).floor() as i64).clamp(0, 1000);
    for _ in 0..50 {
        let prior = grid(rng, lo_k, 1000, 1000);
        let inst = base.with_prior(prior).ok()?;
        if satisfies(Family::ExpRegularGbwf, &inst) {
            return Some(inst);
        }
    }
    None
}

/// Smallest prior meeting globally bounded weak feedback (max policy), by
/// bisection on the floating minimum slack.
pub fn gbwf_lower_bound(inst: &Instance) -> f64 {
    let rates: Vec<(f64, f64)> = inst
        .journals()
        .iter()
        .map(|j| (j.a.to_f64().unwrap_or(f64::NAN), j.q.to_f64().unwrap_or(f64::NAN)))
        .collect();
    let threshold = rates.iter().map(|(a, q)| q / (a + q)).fold(0.0, f64::max);
    let passes = |mu: f64| min_path_belief_f64(&rates, mu) >= threshold;
    if passes(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn min_path_belief_f64(rates: &[(f64, f64)], prior: f64) -> f64 {
    fn walk(rates: &[(f64, f64)], depth: usize, used: u64, mu: f64, best: &mut f64) {
        *best = best.min(mu);
        if depth + 1 == rates.len() {
            return;
        }
        for (j, &(a, q)) in rates.iter().enumerate() {
            if used & (1 << j) == 0 {
                let next = ((1.0 - a - q) * mu + q) / (1.0 - a * mu);
                walk(rates, depth + 1, used | (1 << j), next, best);
            }
        }
    }
    let mut best = f64::INFINITY;
    walk(rates, 0, 0, prior, &mut best);
    best
}

fn unconstrained(rng: &mut ChaCha8Rng, n: usize) -> Option<Instance> {
    let u = (0..n).map(|_| grid(rng, 0, 100, 10)).collect();
    let a = (0..n).map(|_| grid(rng, 1, 100, 100)).collect();
    let q = (0..n).map(|_| grid(rng, 0, 99, 100)).collect();
    let c = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                grid(rng, 0, 30, 100)
            } else {
                BigRational::zero()
            }
        })
        .collect();
    let outside = if rng.random_bool(0.5) {
        grid(rng, 0, 20, 10)
    } else {
        BigRational::zero()
    };
    let prior = grid(rng, 0, 1000, 1000);
    Instance::new(journals(u, a, q, c), prior, outside).ok()
}
