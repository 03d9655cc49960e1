//! Property tests for the model, solver, conditions and file format.

use jss_core::conditions::{check_globally_bounded_weak_feedback, check_order_independence, ThresholdPolicy};
use jss_core::format::{instance_to_json, parse_instance};
use jss_core::lab::generators::satisfies;
use jss_core::lab::{gen_random_instance, Family, GeneratorSpec};
use jss_core::model::{normalize, posterior, update_belief};
use jss_core::numeric::ratio;
use jss_core::solver::{
    all_orders, brute_force_optimal, index_order_no_feedback, monotone_order, pairwise_swap_local_search,
    subset_dp_optimal, SolveOptions,
};
use jss_core::{Belief, Instance, Journal, JournalParams, SearchOrder};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

type Q = BigRational;

fn rate(lo: i64, hi: i64) -> impl Strategy<Value = Q> {
    (lo..=hi).prop_map(|k| ratio(k, 100))
}

fn journal_strategy(with_feedback: bool, with_cost: bool) -> impl Strategy<Value = Journal> {
    let q_hi = if with_feedback { 95 } else { 0 };
    let c_hi: i64 = if with_cost { 20 } else { 0 };
    (0i64..=50, rate(1, 100), rate(0, q_hi), 0..=c_hi)
        .prop_map(|(u, a, q, c)| Journal::new("J", ratio(u, 5), a, q, ratio(c, 10)).expect("valid by construction"))
}

fn named(journals: Vec<Journal>) -> Vec<Journal> {
    journals
        .into_iter()
        .enumerate()
        .map(|(i, j)| Journal {
            name: format!("J{}", i + 1),
            ..j
        })
        .collect()
}

fn instance_strategy(max: usize, with_feedback: bool) -> impl Strategy<Value = Instance> {
    (
        prop::collection::vec(journal_strategy(with_feedback, true), 1..=max),
        0i64..=1000,
        -10i64..=10,
    )
        .prop_map(|(js, p, out)| Instance::new(named(js), ratio(p, 1000), ratio(out, 4)).expect("valid"))
}

fn values(inst: &Instance) -> Vec<Q> {
    let m = inst.model::<Q>();
    all_orders(inst.len()).iter().map(|o| m.value(o.as_slice())).collect()
}

fn inversions(order: &[usize], rank: &[usize]) -> usize {
    let mut n = 0;
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if rank[order[i]] > rank[order[j]] {
                n += 1;
            }
        }
    }
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn belief_update_stays_in_unit_interval_and_is_monotone(
        a in rate(1, 100), q in rate(0, 99), m1 in 0i64..=1000, m2 in 0i64..=1000,
    ) {
        let j = JournalParams { u: Q::one(), a, q, c: Q::zero() };
        let (lo, hi) = (m1.min(m2), m1.max(m2));
        let f_lo = update_belief(&j, &Belief::new(ratio(lo, 1000)).unwrap());
        let f_hi = update_belief(&j, &Belief::new(ratio(hi, 1000)).unwrap());
        prop_assert!(*f_lo.h() >= Q::zero() && *f_lo.h() <= Q::one());
        prop_assert!(*f_hi.h() >= Q::zero() && *f_hi.h() <= Q::one());
        prop_assert!(f_hi.h() >= f_lo.h());
        let fixed = update_belief(&j, &Belief::certain_high());
        prop_assert_eq!(fixed.h(), &Q::one());
    }

    #[test]
    fn exit_mass_is_one_exactly_and_in_floats(inst in instance_strategy(6, true), seed in any::<u64>()) {
        let orders = all_orders(inst.len());
        let order = &orders[(seed as usize) % orders.len()];
        let exact = inst.model::<Q>();
        prop_assert_eq!(exact.evaluate(order).unwrap().exit_mass(&exact), Q::one());
        let float = inst.model::<f64>();
        prop_assert!((float.evaluate(order).unwrap().exit_mass(&float) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluation_is_a_pure_function_of_the_order(inst in instance_strategy(5, true)) {
        let m = inst.model::<Q>();
        for o in all_orders(inst.len()) {
            let first = m.evaluate(&o).unwrap();
            let second = inst.model::<Q>().evaluate(&o).unwrap();
            prop_assert_eq!(&first.total, &m.value(o.as_slice()));
            prop_assert_eq!(first, second);
        }
    }

    #[test]
    fn normalization_shifts_every_order_by_k(inst in instance_strategy(5, true), k in -40i64..=40) {
        let k = ratio(k, 4);
        let shifted = normalize(&inst, &k);
        for (v, w) in values(&inst).into_iter().zip(values(&shifted)) {
            prop_assert_eq!(w, v - &k);
        }
        let opts = SolveOptions::default();
        let a = brute_force_optimal::<Q>(&inst, &opts).unwrap();
        let b = brute_force_optimal::<Q>(&shifted, &opts).unwrap();
        prop_assert_eq!(a.argmax_set, b.argmax_set);
    }

    #[test]
    fn scaling_payoffs_and_costs_scales_values(inst in instance_strategy(5, true), l in 1i64..=30) {
        let lambda = ratio(l, 7);
        let journals: Vec<Journal> = inst
            .journals_in_input_order()
            .into_iter()
            .map(|j| Journal::new(j.name.clone(), &j.u * &lambda, j.a.clone(), j.q.clone(), &j.c * &lambda).unwrap())
            .collect();
        let scaled = Instance::new(journals, inst.prior().clone(), inst.outside_option() * &lambda).unwrap();
        prop_assert_eq!(scaled.journals(), &inst.journals().iter().map(|j| Journal {
            u: &j.u * &lambda, c: &j.c * &lambda, ..j.clone()
        }).collect::<Vec<_>>()[..]);
        for (v, w) in values(&inst).into_iter().zip(values(&scaled)) {
            prop_assert_eq!(w, v * &lambda);
        }
        let opts = SolveOptions::default();
        prop_assert_eq!(
            brute_force_optimal::<Q>(&inst, &opts).unwrap().argmax_set,
            brute_force_optimal::<Q>(&scaled, &opts).unwrap().argmax_set
        );
    }

    #[test]
    fn json_round_trip_is_identical(inst in instance_strategy(6, true)) {
        let text = instance_to_json(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(instance_to_json(&back), text);
    }

    #[test]
    fn local_search_never_decreases_and_ends_at_a_local_optimum(inst in instance_strategy(6, true), seed in any::<u64>()) {
        let orders = all_orders(inst.len());
        let start = &orders[(seed as usize) % orders.len()];
        let m = inst.model::<Q>();
        let r = pairwise_swap_local_search::<Q>(&inst, start, &SolveOptions::default()).unwrap();
        prop_assert!(r.best_value >= m.value(start.as_slice()));
        for t in 0..inst.len().saturating_sub(1) {
            prop_assert!(m.value(r.best_order.swapped(t).as_slice()) <= r.best_value);
        }
    }

    #[test]
    fn local_search_without_feedback_swaps_at_most_the_inversions(inst in instance_strategy(6, false)) {
        let index = index_order_no_feedback(&inst).unwrap();
        let idx: Vec<Q> = inst.journals().iter().map(Journal::modified_payoff).collect();
        let distinct = (0..idx.len()).all(|i| (i + 1..idx.len()).all(|j| idx[i] != idx[j]));
        prop_assume!(distinct);
        let mut rank = vec![0; inst.len()];
        for (r, &j) in index.as_slice().iter().enumerate() {
            rank[j] = r;
        }
        let start = monotone_order(&inst);
        let r = pairwise_swap_local_search::<Q>(&inst, &start, &SolveOptions::default()).unwrap();
        prop_assert!(r.improving_swaps <= inversions(start.as_slice(), &rank));
    }

    #[test]
    fn index_order_matches_brute_force_without_feedback(inst in instance_strategy(6, false)) {
        let opts = SolveOptions::default();
        let index = index_order_no_feedback(&inst).unwrap();
        let best = brute_force_optimal::<Q>(&inst, &opts).unwrap();
        prop_assert_eq!(inst.model::<Q>().value(index.as_slice()), best.best_value);
    }
}

fn order_independent_strategy() -> impl Strategy<Value = Instance> {
    (
        prop::collection::vec((0i64..=50, rate(1, 100), 0..=20i64), 1..=6),
        0i64..=99,
        0i64..=1000,
    )
        .prop_map(|(js, kappa, p)| {
            let kappa = ratio(kappa, 100);
            let journals = js
                .into_iter()
                .map(|(u, a, c)| {
                    let q = &a * &kappa;
                    Journal::new("J", ratio(u, 5), a, q, ratio(c, 10)).unwrap()
                })
                .collect();
            Instance::new(named(journals), ratio(p, 1000), Q::zero()).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn order_independence_makes_beliefs_commute_and_dp_exact(inst in order_independent_strategy()) {
        let report = check_order_independence(&inst);
        prop_assert!(report.pass);
        let ps: Vec<JournalParams<Q>> = inst.journals().iter().map(|j| j.params()).collect();
        for k in 0..=20 {
            let mu = ratio(k, 20);
            for i in 0..ps.len() {
                for j in 0..ps.len() {
                    let ij = posterior(&ps[i].a, &ps[i].q, &posterior(&ps[j].a, &ps[j].q, &mu).unwrap_or_else(Q::one));
                    let ji = posterior(&ps[j].a, &ps[j].q, &posterior(&ps[i].a, &ps[i].q, &mu).unwrap_or_else(Q::one));
                    prop_assert_eq!(ij.unwrap_or_else(Q::one), ji.unwrap_or_else(Q::one));
                }
            }
        }
        let opts = SolveOptions::default();
        let dp = subset_dp_optimal::<Q>(&inst, &opts).unwrap();
        let brute = brute_force_optimal::<Q>(&inst, &opts).unwrap();
        prop_assert_eq!(dp.best_value, brute.best_value);
        prop_assert_eq!(dp.argmax_set, brute.argmax_set);
    }

    #[test]
    fn per_remaining_bound_holds_on_every_path(inst in instance_strategy(5, true)) {
        let report = check_globally_bounded_weak_feedback(&inst, ThresholdPolicy::PerRemaining, 8).unwrap();
        prop_assume!(report.pass);
        let ps: Vec<JournalParams<Q>> = inst.journals().iter().map(|j| j.params()).collect();
        let n = inst.len();
        // Every path prefix of length < n, with each remaining journal.
        for order in all_orders(n) {
            let mut mu = inst.prior().clone();
            for t in 0..n {
                for &j in &order.as_slice()[t..] {
                    let p = &ps[j];
                    let rejected_and_improved = (Q::one() - &p.a * &mu) * posterior(&p.a, &p.q, &mu).unwrap_or_else(Q::one);
                    prop_assert!(rejected_and_improved <= mu, "journal {} at belief {}", j + 1, mu);
                }
                let p = &ps[order.as_slice()[t]];
                mu = posterior(&p.a, &p.q, &mu).unwrap_or_else(Q::one);
            }
        }
    }
}

#[test]
fn generators_validate_their_own_family() {
    for family in Family::ALL {
        for seed in 0..40 {
            let spec = GeneratorSpec::new(family, 2, 5, seed);
            let inst = gen_random_instance(&spec).unwrap();
            assert!(satisfies(family, &inst), "{} seed {seed}", family.name());
            assert!((2..=5).contains(&inst.len()));
        }
    }
}

#[test]
fn search_order_rejects_non_permutations() {
    assert!(SearchOrder::new(vec![0, 0], 2).is_err());
    assert!(SearchOrder::new(vec![0, 2], 2).is_err());
    assert!(SearchOrder::new(vec![1, 0], 2).is_ok());
}
