//! Named two-journal instances used as worked examples and counterexamples.

use num_rational::BigRational;
use num_traits::Zero;

use crate::model::{Instance, Journal};
use crate::numeric::parse_exact;

fn journal(name: &str, u: &str, a: &str, q: &str) -> Journal {
    let p = |s: &str| parse_exact(s).expect("fixture literal");
    Journal::new(name, p(u), p(a), p(q), BigRational::zero()).expect("fixture journal")
}

fn pair(first: Journal, second: Journal, prior: BigRational) -> Instance {
    Instance::new(vec![first, second], prior, BigRational::zero()).expect("fixture instance")
}

/// Strong-feedback example: (5, 0.2, 0.2) and (1, 0.3, 0.4), no costs.
/// The monotone order is optimal iff μ(H) ≥ 17/29.
pub fn example1(prior: BigRational) -> Instance {
    pair(
        journal("J1", "5", "0.2", "0.2"),
        journal("J2", "1", "0.3", "0.4"),
        prior,
    )
}

/// Regular in `u` and `q` but with `a` decreasing: (2, 0.8, 0.4), (1, 0.2, 0.15).
pub fn table_one(prior: BigRational) -> Instance {
    pair(
        journal("J1", "2", "0.8", "0.4"),
        journal("J2", "1", "0.2", "0.15"),
        prior,
    )
}

/// Journal 1 has zero payoff: (0, 0.2, 0.3), (1, 0.3, 0.2). After sorting the
/// payoff-1 journal comes first.
pub fn table_two(prior: BigRational) -> Instance {
    pair(
        journal("J1", "0", "0.2", "0.3"),
        journal("J2", "1", "0.3", "0.2"),
        prior,
    )
}

/// Exponentially regular: (2, 0.5, 0.3), (1, 0.6, 0.2).
pub fn table_three(prior: BigRational) -> Instance {
    pair(
        journal("J1", "2", "0.5", "0.3"),
        journal("J2", "1", "0.6", "0.2"),
        prior,
    )
}
