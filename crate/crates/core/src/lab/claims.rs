//! Seeded verification of the structural results against the brute-force oracle.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::generators::{gen_random_instance, Family, GeneratorSpec};
use super::{LabConfig, LabError, Outcome, ReportBuilder, TrialResult, VerificationReport};
use crate::conditions::{check_order_independence, check_regularity};
use crate::fixtures::{example1, table_three};
use crate::model::{normalize, posterior, Instance, Journal, SearchOrder};
use crate::numeric::{format_exact, parse_exact, ratio, rational_from_int, signum};
use crate::solver::{
    all_orders, brute_force_optimal, index_order_no_feedback, monotone_order, pairwise_swap_local_search,
    subset_dp_optimal, SolveOptions, SolveResult,
};

type Q = BigRational;

fn opts() -> SolveOptions {
    SolveOptions::default()
}

fn brute(inst: &Instance) -> SolveResult<Q> {
    brute_force_optimal::<Q>(inst, &opts()).expect("instance within the brute-force cap")
}

fn draw(family: Family, lo: usize, hi: usize, seed: u64) -> Result<Instance, LabError> {
    Ok(gen_random_instance(&GeneratorSpec::new(family, lo, hi, seed))?)
}

fn f(a: &Q, q: &Q, mu: &Q) -> Q {
    posterior(a, q, mu).unwrap_or_else(Q::one)
}

fn journal(name: &str, u: &str, a: &str, q: &str, c: &str) -> Journal {
    let p = |s| parse_exact(s).expect("literal");
    Journal::new(name, p(u), p(a), p(q), p(c)).expect("valid literal journal")
}

fn pair_instance(js: Vec<Journal>, prior: Q) -> Instance {
    Instance::new(js, prior, Q::zero()).expect("valid literal instance")
}

fn describe(result: &SolveResult<Q>) -> String {
    let set: Vec<String> = result.argmax_set.iter().map(ToString::to_string).collect();
    format!(
        "best {} = {}, argmax {{{}}}",
        result.best_order,
        format_exact(&result.best_value),
        set.join(" ")
    )
}

// ---------------------------------------------------------------------------
// No feedback: the u − c/a index
// ---------------------------------------------------------------------------

pub fn verify_theorem_no_feedback(config: &LabConfig) -> Result<VerificationReport, LabError> {
    let mut b = ReportBuilder::new(
        "no_feedback",
        "without feedback, decreasing u - c/a is optimal",
        Some(config.seed),
    );
    let max = config.journals_up_to(7);
    b.run_trials(config.trials_or(1000), config.seed, |_, seed| {
        let inst = draw(Family::NoFeedback, 1, max, seed)?;
        let best = brute(&inst);
        let index = index_order_no_feedback(&inst).expect("no feedback");
        let value = inst.model::<Q>().value(index.as_slice());
        let mut outcomes = vec![
            Outcome::new("index_value_equals_optimum", value == best.best_value, || {
                format!("index {} = {}, {}", index, format_exact(&value), describe(&best))
            }),
            Outcome::new("index_in_argmax", best.in_argmax(&index), || {
                format!("index {index}, {}", describe(&best))
            }),
        ];
        // Ties are forced once a rejection is impossible or reveals low quality.
        let every_period_informative = inst.prior().is_positive() && inst.journals().iter().all(|j| j.a < Q::one());
        if inst.journals().iter().all(|j| j.c.is_zero()) && inst.distinct_u() && every_period_informative {
            let unique = best.monotone_unique();
            outcomes.push(Outcome::new("no_costs_monotone_unique", unique, || describe(&best)));
        }
        Ok(TrialResult::new(outcomes, Some(inst)))
    })?;

    // Both indices equal 1.
    let tie = pair_instance(
        vec![
            journal("A", "2", "0.5", "0", "0.5"),
            journal("B", "1.5", "0.25", "0", "0.125"),
        ],
        ratio(3, 5),
    );
    let r = brute(&tie);
    b.named(
        "equal_index_both_orders_optimal",
        r.argmax_count == 2,
        || describe(&r),
        Some(&tie),
    );
    Ok(b.finish())
}

// ---------------------------------------------------------------------------
// Order independence
// ---------------------------------------------------------------------------

/// `(1 − a_i μ)(1 − a_j f_i(μ)) = (1 − a_j μ)(1 − a_i f_j(μ))`.
fn exit_identity_holds(x: &Journal, y: &Journal, mu: &Q) -> bool {
    let one = Q::one();
    let lhs = (&one - &x.a * mu) * (&one - &y.a * f(&x.a, &x.q, mu));
    let rhs = (&one - &y.a * mu) * (&one - &x.a * f(&y.a, &y.q, mu));
    lhs == rhs
}

pub fn verify_prop_order_independence(config: &LabConfig) -> Result<VerificationReport, LabError> {
    let mut b = ReportBuilder::new(
        "order_independence",
        "a_i q_j constant with small costs: monotone optimal, subset DP exact, exit identity",
        Some(config.seed),
    );
    let max = config.journals_up_to(6);
    let grid: Vec<Q> = (0..=10).map(|k| ratio(k, 10)).collect();
    b.run_trials(config.trials_or(500), config.seed, |_, seed| {
        let inst = draw(Family::OrderIndependent, 2.min(max), max, seed)?;
        let best = brute(&inst);
        let dp = subset_dp_optimal::<Q>(&inst, &opts()).expect("generator guarantees order independence");
        let js = inst.journals();
        let mut identity = true;
        for x in js {
            for y in js {
                identity &= grid
                    .iter()
                    .chain(std::iter::once(inst.prior()))
                    .all(|mu| exit_identity_holds(x, y, mu));
            }
        }
        let mono = best.monotone_in_argmax();
        let mut outcomes = vec![
            Outcome::new("monotone_in_argmax", mono, || describe(&best)),
            Outcome::new("dp_value_equals_brute_force", dp.best_value == best.best_value, || {
                format!("dp {} vs {}", format_exact(&dp.best_value), describe(&best))
            }),
            Outcome::new("dp_argmax_equals_brute_force", dp.argmax_set == best.argmax_set, || {
                format!("dp {} orders vs brute {}", dp.argmax_count, best.argmax_count)
            }),
            Outcome::new("exit_identity", identity, || {
                "exit probabilities differ between the two orders of a pair".into()
            }),
        ];
        if js.iter().all(|j| j.q.is_zero()) {
            let index = index_order_no_feedback(&inst).expect("no feedback");
            outcomes.push(Outcome::new(
                "no_feedback_subcase_index_optimal",
                best.in_argmax(&index),
                || describe(&best),
            ));
        }
        let mut result = TrialResult::new(outcomes, Some(inst.clone()));
        if !mono {
            let kappa = &js[0].q / &js[0].a;
            let bound = &kappa / (Q::one() + &kappa);
            let costly = js.iter().any(|j| !j.c.is_zero());
            result.tags.push(match (costly, *inst.prior() < bound) {
                (false, true) => "monotone not optimal, no costs, prior below kappa/(1+kappa)",
                (false, false) => "monotone not optimal, no costs, prior at or above kappa/(1+kappa)",
                (true, true) => "monotone not optimal, with costs, prior below kappa/(1+kappa)",
                (true, false) => "monotone not optimal, with costs, prior at or above kappa/(1+kappa)",
            });
        }
        Ok(result)
    })?;

    // Large cost on the high-payoff journal reverses the index order.
    let witness = pair_instance(
        vec![journal("A", "5", "0.2", "0", "0.9"), journal("B", "1", "0.5", "0", "0")],
        Q::one(),
    );
    let r = brute(&witness);
    let small = check_order_independence(&witness).flag("small_costs") == Some(false);
    b.named(
        "large_cost_witness_breaks_monotone",
        small && !r.monotone_in_argmax(),
        || describe(&r),
        Some(&witness),
    );

    b.note(
        "With q_i = k a_i and no costs, swapping adjacent journals i < j entered at belief m changes the value by \
         r a_i a_j (u_i - u_j)(m - k(1 - m)), where r is the reach probability; beliefs and reach after the pair \
         do not depend on the order. The monotone order is therefore beaten whenever a belief on its path lies \
         below k/(1+k); generated priors are uniform on [0, 1].",
    );
    Ok(b.finish())
}

// ---------------------------------------------------------------------------
// Two regular journals
// ---------------------------------------------------------------------------

pub fn verify_base_case(config: &LabConfig) -> Result<VerificationReport, LabError> {
    let mut b = ReportBuilder::new(
        "base_case",
        "two strictly regular journals with prior at least q_2/(q_2+a_2): monotone uniquely optimal",
        Some(config.seed),
    );
    b.run_trials(config.trials_or(1000), config.seed, |_, seed| {
        let inst = draw(Family::Regular2Box, 2, 2, seed)?;
        let best = brute(&inst);
        Ok(TrialResult::new(
            vec![Outcome::new("monotone_unique", best.monotone_unique(), || {
                describe(&best)
            })],
            Some(inst),
        ))
    })?;

    let twins = pair_instance(
        vec![
            journal("A", "1", "0.4", "0.1", "0"),
            journal("B", "1", "0.4", "0.1", "0"),
        ],
        ratio(1, 2),
    );
    let r = brute(&twins);
    b.named(
        "equal_journals_indifferent",
        r.argmax_count == 2,
        || describe(&r),
        Some(&twins),
    );

    let band = example1(ratio(29, 50));
    let r = brute(&band);
    let not_regular = !check_regularity(&band).pass;
    b.named(
        "irregular_band_nonmonotone",
        not_regular && r.best_order.as_slice() == [1, 0] && r.argmax_count == 1,
        || describe(&r),
        Some(&band),
    );
    b.note("irregular_band_nonmonotone: the strong-feedback pair at prior 29/50, inside (4/7, 17/29).");
    Ok(b.finish())
}

// ---------------------------------------------------------------------------
// Exponential regularity and globally bounded weak feedback
// ---------------------------------------------------------------------------

pub fn verify_theorem_weak_feedback(config: &LabConfig) -> Result<VerificationReport, LabError> {
    let mut b = ReportBuilder::new(
        "weak_feedback",
        "exponentially regular journals with globally bounded weak feedback: monotone optimal",
        Some(config.seed),
    );
    let max = config.journals_up_to(6);
    b.run_trials(config.trials_or(500), config.seed, |_, seed| {
        let inst = draw(Family::ExpRegularGbwf, 2.min(max), max, seed)?;
        let best = brute(&inst);
        let mut outcomes = vec![Outcome::new("monotone_in_argmax", best.monotone_in_argmax(), || {
            describe(&best)
        })];
        if check_regularity(&inst).flag("strict") == Some(true) {
            outcomes.push(Outcome::new("strict_monotone_unique", best.monotone_unique(), || {
                describe(&best)
            }));
        }
        let local = pairwise_swap_local_search::<Q>(&inst, &monotone_order(&inst), &opts()).expect("valid start");
        outcomes.push(Outcome::new(
            "no_improving_swap_from_monotone",
            local.improving_swaps == 0,
            || format!("local search moved to {}", local.best_order),
        ));
        Ok(TrialResult::new(outcomes, Some(inst)))
    })?;

    let high = table_three(parse_exact("0.9").expect("literal"));
    let r = brute(&high);
    b.named(
        "exp_regular_pair_high_prior_monotone",
        r.monotone_unique(),
        || describe(&r),
        Some(&high),
    );
    let low = table_three(ratio(1, 20));
    let r = brute(&low);
    b.named(
        "exp_regular_pair_low_prior_nonmonotone",
        !r.monotone_in_argmax(),
        || describe(&r),
        Some(&low),
    );
    b.note("Priors are uniform on the interval where every path belief is at least max_i q_i/(a_i+q_i).");
    Ok(b.finish())
}

// ---------------------------------------------------------------------------
// Commutation of belief maps
// ---------------------------------------------------------------------------

fn random_rates(rng: &mut ChaCha8Rng) -> (Q, Q) {
    (
        ratio(rng.random_range(1..=100), 100),
        ratio(rng.random_range(0..=99), 100),
    )
}

/// `f_1(f_2(μ)) − f_2(f_1(μ))`: rejection by journal 2 first, minus journal 1 first.
fn commutator(a1: &Q, q1: &Q, a2: &Q, q2: &Q, mu: &Q) -> Q {
    f(a1, q1, &f(a2, q2, mu)) - f(a2, q2, &f(a1, q1, mu))
}

pub fn verify_lemma_commutation(config: &LabConfig) -> Result<VerificationReport, LabError> {
    let mut b = ReportBuilder::new(
        "commutation",
        "sign(f_1(f_2(m)) - f_2(f_1(m))) = sign(a_1 q_2 - a_2 q_1) at interior beliefs",
        Some(config.seed),
    );
    let grid: Vec<Q> = (1..=21).map(|k| ratio(k, 22)).collect();
    b.run_trials(config.trials_or(10_000), config.seed, |_, seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a1, q1) = random_rates(&mut rng);
        let (a2, mut q2) = random_rates(&mut rng);
        if rng.random_bool(0.1) {
            // Force equal products when the matching q_2 is a valid rate.
            let matched = &a2 * &q1 / &a1;
            if matched < Q::one() {
                q2 = matched;
            }
        }
        let stated = signum(&(&a1 * &q2 - &a2 * &q1));
        let label = || {
            format!(
                "(a1,q1)=({},{}) (a2,q2)=({},{})",
                format_exact(&a1),
                format_exact(&q1),
                format_exact(&a2),
                format_exact(&q2)
            )
        };
        let mut outcomes = Vec::with_capacity(3 * grid.len() + 1);
        for mu in &grid {
            let d = commutator(&a1, &q1, &a2, &q2, mu);
            let s = signum(&d);
            outcomes.push(Outcome::new("sign_law_as_stated", s == stated, || {
                format!(
                    "{} m={}: difference {} has sign {s}, a1q2-a2q1 has sign {stated}",
                    label(),
                    format_exact(mu),
                    format_exact(&d)
                )
            }));
            outcomes.push(Outcome::new("sign_law_reversed", s == -stated, || {
                format!("{} m={}", label(), format_exact(mu))
            }));
            outcomes.push(Outcome::new(
                "zero_iff_equal_products",
                (s == 0) == (stated == 0),
                || format!("{} m={}", label(), format_exact(mu)),
            ));
        }
        let at_one = commutator(&a1, &q1, &a2, &q2, &Q::one());
        outcomes.push(Outcome::new("zero_at_certain_high", at_one.is_zero(), label));
        let mut result = TrialResult::new(outcomes, None);
        if stated != 0 && !commutator(&a1, &q1, &a2, &q2, &Q::zero()).is_zero() {
            result
                .tags
                .push("pairs with unequal products and a nonzero difference at m = 0");
        }
        Ok(result)
    })?;

    let ex = example1(ratio(1, 2));
    let (j1, j2) = (&ex.journals()[0], &ex.journals()[1]);
    let half = ratio(1, 2);
    let first = f(&j1.a, &j1.q, &f(&j2.a, &j2.q, &half));
    let second = f(&j2.a, &j2.q, &f(&j1.a, &j1.q, &half));
    b.named(
        "strong_feedback_pair_as_stated",
        first > second,
        || {
            format!(
                "f_1(f_2(1/2)) = {} < f_2(f_1(1/2)) = {} although a1q2 = 2/25 > a2q1 = 3/50",
                format_exact(&first),
                format_exact(&second)
            )
        },
        Some(&ex),
    );
    b.note(
        "f_1(f_2(m)) - f_2(f_1(m)) = (1 - m)^2 (1 - q_1)(1 - q_2)(a_2 q_1 - a_1 q_2) / D with D > 0, \
         so at every interior belief its sign is that of a_2 q_1 - a_1 q_2, opposite to the stated law. The check \
         sign_law_reversed tallies the corrected law.",
    );
    Ok(b.finish())
}

// ---------------------------------------------------------------------------
// Ratio inequality
// ---------------------------------------------------------------------------

/// `f_i(μ)/f_j(μ) ≥ (1 − a_j μ)/(1 − a_i μ)`.
fn ratio_holds(i: (&Q, &Q), j: (&Q, &Q), mu: &Q) -> bool {
    let one = Q::one();
    f(i.0, i.1, mu) / f(j.0, j.1, mu) >= (&one - j.0 * mu) / (&one - i.0 * mu)
}

pub fn verify_lemma_ratio(config: &LabConfig) -> Result<VerificationReport, LabError> {
    let mut b = ReportBuilder::new(
        "ratio",
        "regular pairs satisfy f_i/f_j >= (1 - a_j m)/(1 - a_i m); irregular pairs violate it somewhere",
        Some(config.seed),
    );
    let grid: Vec<Q> = (1..=19).map(|k| ratio(k, 20)).collect();
    let mut probe = grid.clone();
    probe.push(ratio(1, 1_000_000));
    probe.push(ratio(999_999, 1_000_000));
    b.run_trials(config.trials_or(1000), config.seed, |_, seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pick = |lo: i64, hi: i64| rng.random_range(lo..=hi);
        let (mut ai, mut aj) = (pick(1, 99), pick(1, 99));
        let (mut qi, mut qj) = (pick(0, 99), pick(0, 99));
        if ai > aj {
            std::mem::swap(&mut ai, &mut aj);
        }
        if qi < qj {
            std::mem::swap(&mut qi, &mut qj);
        }
        let r = |k: i64| ratio(k, 100);
        let regular = grid
            .iter()
            .all(|mu| ratio_holds((&r(ai), &r(qi)), (&r(aj), &r(qj)), mu));
        let mut outcomes = vec![Outcome::new("regular_pair_inequality", regular, || {
            format!("a=({ai},{aj})/100 q=({qi},{qj})/100")
        })];
        // Break exactly one ordering strictly and look for a violation.
        let flip_q = pick(0, 1) == 0;
        let (bi, bj, ci, cj) = if flip_q && qi > qj {
            (ai, aj, qj, qi)
        } else if !flip_q && ai < aj {
            (aj, ai, qi, qj)
        } else if qi > qj {
            (ai, aj, qj, qi)
        } else if ai < aj {
            (aj, ai, qi, qj)
        } else {
            return Ok(TrialResult::new(outcomes, None));
        };
        let found = probe
            .iter()
            .any(|mu| !ratio_holds((&r(bi), &r(ci)), (&r(bj), &r(cj)), mu));
        outcomes.push(Outcome::new("irregular_pair_violates", found, || {
            format!("a=({bi},{bj})/100 q=({ci},{cj})/100: no violation on the probe grid")
        }));
        Ok(TrialResult::new(outcomes, None))
    })?;

    let (a1, q1, a2, q2) = (ratio(3, 10), ratio(3, 10), ratio(1, 2), ratio(1, 10));
    b.named(
        "named_regular_pair",
        grid.iter().all(|mu| ratio_holds((&a1, &q1), (&a2, &q2), mu)),
        String::new,
        None,
    );
    // A journal against itself meets the inequality with equality.
    b.named(
        "same_journal_equality",
        grid.iter().all(|mu| ratio_holds((&a2, &q2), (&a2, &q2), mu)),
        String::new,
        None,
    );
    b.note("Cross-multiplied, the inequality reads (a_j - a_i) m + (q_i - q_j)(1 - m) >= 0, which is affine in m.");
    Ok(b.finish())
}

// ---------------------------------------------------------------------------
// Single crossing after a first-two-position swap
// ---------------------------------------------------------------------------

pub(crate) struct SwapSequences {
    /// `d_s` for periods `s = 3..=I+1`.
    pub d: Vec<Q>,
    pub reach_1: Vec<Q>,
    pub reach_2: Vec<Q>,
    pub beliefs_1: Vec<Q>,
    pub beliefs_2: Vec<Q>,
}

/// σ1 submits `k` then journal 1, σ2 journal 1 then `k`; both continue with
/// the remaining journals in increasing index.
pub(crate) fn swap_sequences(inst: &Instance, k: usize) -> SwapSequences {
    let n = inst.len();
    let rest: Vec<usize> = (1..n).filter(|&j| j != k).collect();
    let mut s1 = vec![k, 0];
    s1.extend(&rest);
    let mut s2 = vec![0, k];
    s2.extend(&rest);
    let model = inst.model::<Q>();
    let t1 = model
        .evaluate(&SearchOrder::new(s1, n).expect("permutation"))
        .expect("valid order");
    let t2 = model
        .evaluate(&SearchOrder::new(s2, n).expect("permutation"))
        .expect("valid order");
    let d = (2..=n)
        .map(|t| &t1.reach[t] * &t1.beliefs[t] - &t2.reach[t] * &t2.beliefs[t])
        .collect();
    SwapSequences {
        d,
        reach_1: t1.reach,
        reach_2: t2.reach,
        beliefs_1: t1.beliefs,
        beliefs_2: t2.beliefs,
    }
}

/// First period `s ≥ 3` with `d_s < 0`, capped at `I + 1`.
pub(crate) fn xi(seq: &SwapSequences) -> usize {
    let cap = seq.d.len() + 2;
    seq.d.iter().position(Signed::is_negative).map_or(cap, |i| i + 3)
}

fn crossing_outcomes(inst: &Instance, k: usize) -> Vec<Outcome> {
    let seq = swap_sequences(inst, k);
    let first_negative = seq.d.iter().position(Signed::is_negative);
    let single = first_negative.is_none_or(|i| seq.d[i..].iter().all(Signed::is_negative));
    let xi = xi(&seq);
    let gap_xi = (&seq.reach_1[xi - 1] - &seq.reach_2[xi - 1]).abs();
    let gap_3 = &seq.reach_2[2] - &seq.reach_1[2];
    let ordered = (2..seq.beliefs_1.len()).all(|t| seq.beliefs_1[t] >= seq.beliefs_2[t]);
    let render = |v: &[Q]| v.iter().map(format_exact).collect::<Vec<_>>().join(", ");
    vec![
        Outcome::new("single_crossing", single, || {
            format!("k={} d=[{}]", k + 1, render(&seq.d))
        }),
        Outcome::new("xi_probability_bound", gap_xi >= gap_3, || {
            format!(
                "k={} xi={xi} |r1-r2|={} < {}",
                k + 1,
                format_exact(&gap_xi),
                format_exact(&gap_3)
            )
        }),
        Outcome::new("third_period_reach_gap_nonnegative", !gap_3.is_positive(), || {
            format!("k={} r2(3)-r1(3)={}", k + 1, format_exact(&gap_3))
        }),
        Outcome::new("beliefs_ordered_after_swap", ordered, || format!("k={}", k + 1)),
    ]
}

pub fn verify_single_crossing(config: &LabConfig) -> Result<VerificationReport, LabError> {
    let mut b = ReportBuilder::new(
        "single_crossing",
        "after swapping the first two journals, r_s m_s differences cross zero at most once; reach bound at xi",
        Some(config.seed),
    );
    let max = config.journals_up_to(6).max(3);
    b.run_trials(config.trials_or(500), config.seed, |_, seed| {
        let inst = draw(Family::Regular, 3, max, seed)?;
        let outcomes = (1..inst.len()).flat_map(|k| crossing_outcomes(&inst, k)).collect();
        Ok(TrialResult::new(outcomes, Some(inst)))
    })?;

    let twins = Instance::new(
        vec![
            journal("A", "3", "0.3", "0.2", "0"),
            journal("B", "3", "0.3", "0.2", "0"),
            journal("C", "1", "0.5", "0.1", "0"),
        ],
        ratio(1, 2),
        Q::zero(),
    )
    .expect("valid");
    let seq = swap_sequences(&twins, 1);
    b.named(
        "identical_swap_is_flat",
        seq.d.iter().all(Zero::is_zero) && xi(&seq) == twins.len() + 1,
        || format!("xi={}", xi(&seq)),
        Some(&twins),
    );
    let flat = Instance::new(
        vec![
            journal("A", "3", "0.2", "0", "0"),
            journal("B", "2", "0.4", "0", "0"),
            journal("C", "1", "0.7", "0", "0"),
        ],
        ratio(3, 5),
        Q::zero(),
    )
    .expect("valid");
    let tails_equal = (1..flat.len()).all(|k| swap_sequences(&flat, k).d.iter().all(Zero::is_zero));
    b.named("no_feedback_tails_equal", tails_equal, String::new, Some(&flat));
    b.note(
        "Periods run over s = 3..I+1 for I journals, the last being the state after every rejection; \
         xi defaults to I+1 when no difference is negative.",
    );
    b.note(
        "r1(3) - r2(3) = (a_k q_1 - a_1 q_k)(1 - m) is nonnegative under regularity, so the reach bound at xi \
         has a nonpositive right-hand side.",
    );
    Ok(b.finish())
}

// ---------------------------------------------------------------------------
// Normalization of the outside option
// ---------------------------------------------------------------------------

pub fn verify_normalization(config: &LabConfig) -> Result<VerificationReport, LabError> {
    let mut b = ReportBuilder::new(
        "normalization",
        "shifting payoffs and the outside option by -K shifts every value by -K",
        Some(config.seed),
    );
    let max = config.journals_up_to(5);
    let shifts = [rational_from_int(-3), rational_from_int(1), rational_from_int(10)];
    b.run_trials(config.trials_or(200), config.seed, |_, seed| {
        let inst = draw(Family::Unconstrained, 1, max, seed)?;
        let orders = all_orders(inst.len());
        let base = inst.model::<Q>();
        let best = brute(&inst);
        let mut outcomes = Vec::new();
        for k in &shifts {
            let shifted = normalize(&inst, k);
            let model = shifted.model::<Q>();
            let exact = orders
                .iter()
                .all(|o| model.value(o.as_slice()) == base.value(o.as_slice()) - k);
            let moved = brute(&shifted);
            outcomes.push(Outcome::new("value_shift_exact", exact, || {
                format!("K={}", format_exact(k))
            }));
            outcomes.push(Outcome::new(
                "argmax_invariant",
                moved.argmax_set == best.argmax_set,
                || format!("K={}: {} vs {}", format_exact(k), describe(&moved), describe(&best)),
            ));
        }
        Ok(TrialResult::new(outcomes, Some(inst)))
    })?;

    let ex = example1(ratio(1, 2));
    b.named(
        "zero_shift_identity",
        normalize(&ex, &Q::zero()) == ex,
        String::new,
        Some(&ex),
    );
    let ex = example1(ratio(7, 10));
    let r = brute(&normalize(&ex, &Q::one()));
    b.named(
        "unit_shift_keeps_unique_monotone",
        r.monotone_unique(),
        || describe(&r),
        Some(&ex),
    );
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> LabConfig {
        LabConfig {
            trials: Some(trials),
            seed: 7,
            max_journals: Some(4),
        }
    }

    #[test]
    fn no_feedback_is_verified() {
        let r = verify_theorem_no_feedback(&small(40)).unwrap();
        assert_eq!(r.failure_count, 0, "{}", r.to_text());
        assert!(r.check_passed("equal_index_both_orders_optimal"));
    }

    #[test]
    fn order_independence_keeps_dp_and_identity() {
        let r = verify_prop_order_independence(&small(40)).unwrap();
        for check in [
            "dp_value_equals_brute_force",
            "dp_argmax_equals_brute_force",
            "exit_identity",
            "large_cost_witness_breaks_monotone",
        ] {
            assert!(r.check_passed(check), "{check}\n{}", r.to_text());
        }
    }

    #[test]
    fn base_case_and_weak_feedback_hold() {
        for r in [
            verify_base_case(&small(60)).unwrap(),
            verify_theorem_weak_feedback(&small(30)).unwrap(),
        ] {
            assert_eq!(r.failure_count, 0, "{}", r.to_text());
        }
    }

    #[test]
    fn commutation_follows_the_reversed_law() {
        let r = verify_lemma_commutation(&small(300)).unwrap();
        assert!(r.check_passed("sign_law_reversed"));
        assert!(r.check_passed("zero_iff_equal_products"));
        assert!(r.check_passed("zero_at_certain_high"));
        assert!(r.tally("sign_law_as_stated").unwrap().failed > 0);
        assert!(!r.check_passed("strong_feedback_pair_as_stated"));
    }

    #[test]
    fn commutator_closed_form() {
        // Independent oracle: the cleared-denominator closed form.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (a1, q1) = random_rates(&mut rng);
            let (a2, q2) = random_rates(&mut rng);
            let mu = ratio(rng.random_range(0..=20), 20);
            let one = Q::one();
            let den_21 = (&one - &a2 * &mu) * (&one - &a1 * f(&a2, &q2, &mu));
            let den_12 = (&one - &a1 * &mu) * (&one - &a2 * f(&a1, &q1, &mu));
            let expected =
                (&one - &mu) * (&one - &mu) * (&one - &q1) * (&one - &q2) * (&a2 * &q1 - &a1 * &q2) / (den_21 * den_12);
            assert_eq!(commutator(&a1, &q1, &a2, &q2, &mu), expected);
        }
    }

    #[test]
    fn ratio_and_crossing_and_normalization_hold() {
        for r in [
            verify_lemma_ratio(&small(200)).unwrap(),
            verify_single_crossing(&small(40)).unwrap(),
            verify_normalization(&small(20)).unwrap(),
        ] {
            assert_eq!(r.failure_count, 0, "{}", r.to_text());
        }
    }

    #[test]
    fn xi_caps_at_exit_period() {
        let inst = crate::fixtures::table_three(ratio(1, 2));
        let three = Instance::new(
            inst.journals()
                .iter()
                .cloned()
                .chain([journal("C", "0.5", "0.7", "0.1", "0")])
                .collect(),
            ratio(1, 2),
            Q::zero(),
        )
        .unwrap();
        let seq = swap_sequences(&three, 1);
        assert_eq!(seq.d.len(), 2);
        assert!((3..=4).contains(&xi(&seq)));
    }
}
