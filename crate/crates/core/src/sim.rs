//! Monte Carlo simulation of the submission process.
//!
//! Quality is drawn from the prior; each journal accepts an H paper with
//! probability `a`; a rejected L paper becomes H with probability `q`.
//! Episode `i` draws from a ChaCha8 generator keyed by the seed on stream `i`,
//! so aggregates depend only on `(n, seed)` and not on the thread count.
//! Episodes are tallied by stopping period, which makes the sample mean and
//! variance exact functions of integer counts.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::{Instance, ModelError, SearchOrder};
use crate::numeric::rational_from_int;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quality {
    High,
    Low,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    /// 1-based period of acceptance.
    pub accepted_at: Option<usize>,
    /// Sorted index of the accepting journal.
    pub paying_journal: Option<usize>,
    /// Accepting payoff (or the outside option) minus every cost paid.
    pub realized_payoff: BigRational,
    /// Quality entering each period that was reached.
    pub quality_path: Vec<Quality>,
}

#[derive(Debug, Clone, Copy)]
struct Rates {
    a: f64,
    q: f64,
}

fn rates(inst: &Instance, order: &SearchOrder) -> Vec<Rates> {
    order
        .as_slice()
        .iter()
        .map(|&j| {
            let jr = &inst.journals()[j];
            Rates {
                a: jr.a.to_f64().unwrap_or(f64::NAN),
                q: jr.q.to_f64().unwrap_or(f64::NAN),
            }
        })
        .collect()
}

/// Stopping period (0-based) or `None` when every journal rejects.
fn run<R: Rng + ?Sized>(
    prior: f64,
    rates: &[Rates],
    rng: &mut R,
    mut path: Option<&mut Vec<Quality>>,
) -> Option<usize> {
    let mut high = rng.random::<f64>() < prior;
    for (t, r) in rates.iter().enumerate() {
        if let Some(p) = path.as_deref_mut() {
            p.push(if high { Quality::High } else { Quality::Low });
        }
        if high {
            if rng.random::<f64>() < r.a {
                return Some(t);
            }
        } else if rng.random::<f64>() < r.q {
            high = true;
        }
    }
    None
}

/// Payoff of stopping in each period (0-based), then of exhausting the list.
fn outcome_payoffs(inst: &Instance, order: &SearchOrder) -> Vec<BigRational> {
    let mut paid = BigRational::zero();
    let mut out = Vec::with_capacity(order.len() + 1);
    for &j in order.as_slice() {
        let jr = &inst.journals()[j];
        paid += &jr.c;
        out.push(&jr.u - &paid);
    }
    out.push(inst.outside_option() - &paid);
    out
}

fn check(inst: &Instance, order: &SearchOrder) -> Result<(), ModelError> {
    SearchOrder::new(order.as_slice().to_vec(), inst.len()).map(|_| ())
}

pub fn simulate_episode<R: Rng + ?Sized>(
    inst: &Instance,
    order: &SearchOrder,
    rng: &mut R,
) -> Result<EpisodeOutcome, ModelError> {
    check(inst, order)?;
    let prior = inst.prior().to_f64().unwrap_or(f64::NAN);
    let mut quality_path = Vec::with_capacity(order.len());
    let stop = run(prior, &rates(inst, order), rng, Some(&mut quality_path));
    let payoffs = outcome_payoffs(inst, order);
    Ok(EpisodeOutcome {
        accepted_at: stop.map(|t| t + 1),
        paying_journal: stop.map(|t| order.as_slice()[t]),
        realized_payoff: payoffs[stop.unwrap_or(order.len())].clone(),
        quality_path,
    })
}

/// Episode counts by stopping period; the last entry counts episodes in
/// which every journal rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub stopped_at: Vec<u64>,
    pub episodes: u64,
}

impl OutcomeCounts {
    /// Fraction of episodes reaching each period `1..=I+1`.
    pub fn reach_frequencies(&self) -> Vec<f64> {
        let mut remaining = self.episodes;
        let mut out = Vec::with_capacity(self.stopped_at.len());
        for (t, &k) in self.stopped_at.iter().enumerate() {
            out.push(remaining as f64 / self.episodes as f64);
            if t + 1 < self.stopped_at.len() {
                remaining -= k;
            }
        }
        out
    }

    /// Acceptance frequency in each period among episodes reaching it.
    pub fn conditional_acceptance(&self) -> Vec<Option<(u64, u64)>> {
        let mut remaining = self.episodes;
        let periods = self.stopped_at.len() - 1;
        (0..periods)
            .map(|t| {
                let reached = remaining;
                remaining -= self.stopped_at[t];
                (reached > 0).then_some((self.stopped_at[t], reached))
            })
            .collect()
    }
}

/// Runs `n` episodes; episode `i` uses stream `i` of the seeded generator.
pub fn simulate_counts(inst: &Instance, order: &SearchOrder, n: u64, seed: u64) -> Result<OutcomeCounts, ModelError> {
    check(inst, order)?;
    let prior = inst.prior().to_f64().unwrap_or(f64::NAN);
    let rates = rates(inst, order);
    let base = ChaCha8Rng::seed_from_u64(seed);
    let slots = order.len() + 1;
    let chunks = n.div_ceil(CHUNK);
    let stopped_at = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; slots];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let mut rng = base.clone();
                rng.set_stream(i);
                let slot = run(prior, &rates, &mut rng, None).unwrap_or(slots - 1);
                counts[slot] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; slots],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            },
        );
    Ok(OutcomeCounts {
        stopped_at,
        episodes: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean; `None` for a single episode.
    pub stderr: Option<f64>,
    pub exact_mean: BigRational,
    pub counts: OutcomeCounts,
}

impl Estimate {
    /// Whether `value` lies within `k` standard errors of the mean. A zero
    /// standard error requires equality up to rounding.
    pub fn within(&self, value: f64, k: f64) -> bool {
        let se = self.stderr.unwrap_or(0.0);
        (self.mean - value).abs() <= k * se + 1e-12 * value.abs().max(1.0)
    }
}

/// Sample mean and standard error of the realized payoff.
pub fn estimate_value(inst: &Instance, order: &SearchOrder, n: u64, seed: u64) -> Result<Estimate, ModelError> {
    assert!(n >= 1, "at least one episode");
    let counts = simulate_counts(inst, order, n, seed)?;
    let payoffs = outcome_payoffs(inst, order);
    let total = rational_from_int(n as i64);
    let mut sum = BigRational::zero();
    let mut sum_sq = BigRational::zero();
    for (k, v) in counts.stopped_at.iter().zip(&payoffs) {
        let k = rational_from_int(*k as i64);
        sum += &k * v;
        sum_sq += &k * v * v;
    }
    let mean = &sum / &total;
    let stderr = (n > 1).then(|| {
        let var = (&sum_sq - &sum * &mean) / rational_from_int(n as i64 - 1);
        (var.to_f64().unwrap_or(f64::NAN).max(0.0) / n as f64).sqrt()
    });
    Ok(Estimate {
        mean: mean.to_f64().unwrap_or(f64::NAN),
        stderr,
        exact_mean: mean,
        counts,
    })
}

/// Fraction of `n` episodes reaching each period `1..=I+1`.
pub fn empirical_survival(inst: &Instance, order: &SearchOrder, n: u64, seed: u64) -> Result<Vec<f64>, ModelError> {
    Ok(simulate_counts(inst, order, n, seed)?.reach_frequencies())
}

/// Binomial check of frequency `freq` over `n` trials against probability `p`.
pub fn within_binomial(freq: f64, p: f64, n: u64, k: f64) -> bool {
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    (freq - p).abs() <= k * sd + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example1;
    use crate::model::{evaluate, Journal};
    use crate::numeric::{parse_exact, ratio};
    use crate::Scalar;
    use num_traits::One;

    fn single(a: &str, q: &str, c: &str, prior: BigRational) -> Instance {
        let p = |s| parse_exact(s).unwrap();
        let j = Journal::new("A", p("3"), p(a), p(q), p(c)).unwrap();
        Instance::new(vec![j], prior, p("0.5")).unwrap()
    }

    #[test]
    fn certain_acceptance() {
        let inst = single("1", "0", "0.25", BigRational::one());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let o = simulate_episode(&inst, &SearchOrder::identity(1), &mut rng).unwrap();
        assert_eq!(o.accepted_at, Some(1));
        assert_eq!(o.realized_payoff, ratio(11, 4));
        assert_eq!(
            empirical_survival(&inst, &SearchOrder::identity(1), 1000, 3).unwrap(),
            vec![1.0, 0.0]
        );
    }

    #[test]
    fn low_quality_never_accepted() {
        let inst = single("0.7", "0", "0.25", BigRational::zero());
        let e = estimate_value(&inst, &SearchOrder::identity(1), 5000, 9).unwrap();
        assert_eq!(e.exact_mean, ratio(1, 4));
        assert_eq!(e.stderr, Some(0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let o = simulate_episode(&inst, &SearchOrder::identity(1), &mut rng).unwrap();
        assert_eq!(o.quality_path, vec![Quality::Low]);
        assert_eq!(o.paying_journal, None);
    }

    #[test]
    fn single_episode_has_no_stderr() {
        let inst = example1(ratio(1, 2));
        let e = estimate_value(&inst, &SearchOrder::identity(2), 1, 5).unwrap();
        assert!(e.stderr.is_none());
        let payoffs = [5.0, 1.0, 0.0];
        assert!(payoffs.contains(&e.mean));
    }

    #[test]
    fn deterministic_for_seed() {
        let inst = example1(ratio(1, 2));
        let o = SearchOrder::identity(2);
        let x = simulate_counts(&inst, &o, 50_000, 7).unwrap();
        let y = simulate_counts(&inst, &o, 50_000, 7).unwrap();
        assert_eq!(x, y);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let z = pool.install(|| simulate_counts(&inst, &o, 50_000, 7).unwrap());
        assert_eq!(x, z);
        assert_ne!(x, simulate_counts(&inst, &o, 50_000, 8).unwrap());
    }

    #[test]
    fn prefix_of_a_run_is_a_run() {
        let inst = example1(ratio(1, 2));
        let o = SearchOrder::identity(2);
        let short = simulate_counts(&inst, &o, 20_000, 11).unwrap();
        let long = simulate_counts(&inst, &o, 20_001, 11).unwrap();
        let diff: u64 = long.stopped_at.iter().zip(&short.stopped_at).map(|(a, b)| a - b).sum();
        assert_eq!(diff, 1);
    }

    #[test]
    fn example1_matches_evaluation() {
        let inst = example1(ratio(1, 2));
        let o = SearchOrder::identity(2);
        let n = 200_000;
        let e = estimate_value(&inst, &o, n, 42).unwrap();
        assert!(e.within(0.65, 4.0), "mean {} stderr {:?}", e.mean, e.stderr);
        let trace = evaluate::<BigRational>(&inst, &o).unwrap();
        for (f, r) in e.counts.reach_frequencies().iter().zip(&trace.reach) {
            assert!(within_binomial(*f, Scalar::to_f64(r), n, 4.0));
        }
        let (acc, reached) = e.counts.conditional_acceptance()[1].unwrap();
        let expected = 0.3 * 5.0 / 9.0;
        assert!(within_binomial(acc as f64 / reached as f64, expected, reached, 4.0));
    }
}
