//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the summary is always printed.

use std::process::Command;
use std::time::{Duration, Instant};

use jss_core::fixtures::{example1, table_one, table_three, table_two};
use jss_core::format::instance_to_json;
use jss_core::lab::{
    gen_random_instance, reproduce_counterexamples, verify_base_case, verify_lemma_commutation, verify_normalization,
    verify_prop_order_independence, verify_single_crossing, verify_theorem_no_feedback, verify_theorem_weak_feedback,
    Family, GeneratorSpec, LabConfig, Status, VerificationReport,
};
use jss_core::numeric::{format_exact, ratio, Scalar};
use jss_core::sim::{estimate_value, within_binomial, Estimate};
use jss_core::solver::{brute_force_optimal, SolveOptions};
use jss_core::{Instance, SearchOrder};
use num_rational::BigRational;

type Q = BigRational;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Verdict,
}

fn checks_passed(r: &VerificationReport, checks: &[&str]) -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for c in checks {
        let (p, f) = r.tally(c).map_or((0, 0), |t| (t.passed, t.failed));
        pass &= r.check_passed(c);
        parts.push(format!("{c} {p}/{}", p + f));
    }
    let first = r
        .failures
        .first()
        .map(|f| format!("; first failure [{}]: {}", f.check, f.detail))
        .unwrap_or_default();
    Verdict::new(pass, format!("{} trials, {}{first}", r.trials, parts.join(", ")))
}

fn whole_report(r: &VerificationReport, checks: &[&str]) -> Verdict {
    let v = checks_passed(r, checks);
    Verdict::new(
        v.pass && r.status == Status::Verified,
        format!("{} ({} failures)", v.detail, r.failure_count),
    )
}

fn defaults() -> LabConfig {
    LabConfig::default()
}

// 1 -------------------------------------------------------------------------

fn example_one_threshold() -> Verdict {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("example1.json");
    std::fs::write(&path, instance_to_json(&example1(ratio(1, 2)))).expect("write instance");
    let out = Command::new(env!("CARGO_BIN_EXE_jss"))
        .args(["threshold", "--instance"])
        .arg(&path)
        .output()
        .expect("run jss");
    let printed = String::from_utf8_lossy(&out.stdout)
        .lines()
        .next()
        .unwrap_or_default()
        .to_string();
    let star = ratio(17, 29);
    let eps = ratio(1, 1_000_000);
    let opts = SolveOptions::default();
    let at = |mu: Q| brute_force_optimal::<Q>(&example1(mu), &opts).expect("two journals");
    let (below, exact, above) = (at(&star - &eps), at(star.clone()), at(&star + &eps));
    let flips = !below.best_order.is_monotone()
        && below.argmax_count == 1
        && exact.argmax_count == 2
        && above.monotone_unique();
    Verdict::new(
        out.status.success() && printed == "17/29" && flips,
        format!(
            "cli printed `{printed}`; optimum below {}, tie of {} at 17/29, optimum above {}",
            below.best_order, exact.argmax_count, above.best_order
        ),
    )
}

// 2-9 -----------------------------------------------------------------------

fn no_feedback() -> Verdict {
    let r = verify_theorem_no_feedback(&defaults()).expect("suite runs");
    whole_report(&r, &["index_value_equals_optimum", "index_in_argmax"])
}

fn order_independence() -> Verdict {
    let r = verify_prop_order_independence(&defaults()).expect("suite runs");
    checks_passed(
        &r,
        &["monotone_in_argmax", "dp_value_equals_brute_force", "exit_identity"],
    )
}

fn base_case() -> Verdict {
    let r = verify_base_case(&defaults()).expect("suite runs");
    whole_report(&r, &["monotone_unique"])
}

fn weak_feedback() -> Verdict {
    let r = verify_theorem_weak_feedback(&defaults()).expect("suite runs");
    whole_report(&r, &["monotone_in_argmax", "strict_monotone_unique"])
}

fn commutation() -> Verdict {
    let r = verify_lemma_commutation(&defaults()).expect("suite runs");
    checks_passed(&r, &["sign_law_as_stated", "zero_iff_equal_products"])
}

fn single_crossing() -> Verdict {
    let r = verify_single_crossing(&defaults()).expect("suite runs");
    whole_report(&r, &["single_crossing", "xi_probability_bound"])
}

fn counterexamples() -> Verdict {
    let r = reproduce_counterexamples();
    let v = whole_report(
        &r,
        &[
            "table_three_low_prior_nonmonotone",
            "table_three_high_prior_monotone",
            "table_one_boundary",
            "table_one_region_below_boundary",
            "table_two_boundary",
            "table_two_region_below_boundary",
        ],
    );
    let notes = r.notes.join("\n");
    let reported = notes.contains("discrepancy, decreasing-a pair at prior 9/10")
        && notes.contains("discrepancy, zero-payoff pair at prior 7/10");
    Verdict::new(
        v.pass && reported,
        format!("{}; discrepancies at 9/10 and 7/10 reported: {reported}", v.detail),
    )
}

fn normalization() -> Verdict {
    let r = verify_normalization(&defaults()).expect("suite runs");
    whole_report(&r, &["value_shift_exact", "argmax_invariant"])
}

// 10 ------------------------------------------------------------------------

const EPISODES: u64 = 1_000_000;
const RETRY_SEED_OFFSET: u64 = 1_000_003;

fn order(perm: &[usize], n: usize) -> SearchOrder {
    SearchOrder::new(perm.to_vec(), n).expect("permutation")
}

fn monte_carlo_pairs() -> Vec<(String, Instance, SearchOrder)> {
    let mut pairs = Vec::new();
    let both = [[0, 1], [1, 0]];
    for mu in [ratio(1, 2), ratio(17, 29), ratio(7, 10)] {
        for p in both {
            pairs.push((
                format!("strong-feedback pair at {}", format_exact(&mu)),
                example1(mu.clone()),
                order(&p, 2),
            ));
        }
    }
    for (label, inst) in [
        ("decreasing-a pair", table_one(ratio(9, 10))),
        ("zero-payoff pair", table_two(ratio(7, 10))),
        ("exp-regular pair", table_three(ratio(1, 20))),
    ] {
        for p in both {
            pairs.push((label.to_string(), inst.clone(), order(&p, 2)));
        }
    }
    let families = [
        Family::Unconstrained,
        Family::Regular,
        Family::OrderIndependent,
        Family::ExpRegularGbwf,
    ];
    for (k, family) in families.into_iter().enumerate() {
        for s in 0..2u64 {
            let seed = 9000 + 10 * k as u64 + s;
            let inst = gen_random_instance(&GeneratorSpec::new(family, 3, 5, seed)).expect("generator");
            let n = inst.len();
            let perm: Vec<usize> = if s == 0 {
                (0..n).rev().collect()
            } else {
                (0..n).map(|i| (i + 1) % n).collect()
            };
            pairs.push((format!("{} seed {seed}", family.name()), inst, order(&perm, n)));
        }
    }
    pairs
}

/// Mean within 3 standard errors, reach and conditional acceptance within
/// 3 binomial standard deviations in every period.
fn consistent(inst: &Instance, ord: &SearchOrder, est: &Estimate) -> Result<(), String> {
    let model = inst.model::<Q>();
    let trace = model.evaluate(ord).expect("valid order");
    let exact = trace.total.to_f64();
    if !est.within(exact, 3.0) {
        return Err(format!(
            "mean {:.6} vs exact {exact:.6} (se {:?})",
            est.mean, est.stderr
        ));
    }
    for (t, (f, r)) in est.counts.reach_frequencies().iter().zip(&trace.reach).enumerate() {
        if !within_binomial(*f, r.to_f64(), est.counts.episodes, 3.0) {
            return Err(format!(
                "reach frequency {f:.6} vs {:.6} in period {}",
                r.to_f64(),
                t + 1
            ));
        }
    }
    for (t, acc) in est.counts.conditional_acceptance().iter().enumerate() {
        let Some((accepted, reached)) = acc else { continue };
        let j = ord.as_slice()[t];
        let p = (model.journals[j].a.clone() * trace.beliefs[t].clone()).to_f64();
        let f = *accepted as f64 / *reached as f64;
        if !within_binomial(f, p, *reached, 3.0) {
            return Err(format!("conditional acceptance {f:.6} vs {p:.6} in period {}", t + 1));
        }
    }
    Ok(())
}

fn monte_carlo() -> Verdict {
    let pairs = monte_carlo_pairs();
    let mut failures = Vec::new();
    let mut retried = 0;
    for (i, (label, inst, ord)) in pairs.iter().enumerate() {
        let seed = 7 + i as u64;
        let first = estimate_value(inst, ord, EPISODES, seed).expect("valid order");
        if consistent(inst, ord, &first).is_ok() {
            continue;
        }
        retried += 1;
        let second = estimate_value(inst, ord, EPISODES, seed + RETRY_SEED_OFFSET).expect("valid order");
        if let Err(e) = consistent(inst, ord, &second) {
            failures.push(format!("{label} order {ord}: {e}"));
        }
    }
    let star = example1(ratio(17, 29));
    let a = estimate_value(&star, &order(&[0, 1], 2), EPISODES, 101).expect("valid order");
    let b = estimate_value(&star, &order(&[1, 0], 2), EPISODES, 202).expect("valid order");
    let se = (a.stderr.unwrap_or(0.0).powi(2) + b.stderr.unwrap_or(0.0).powi(2)).sqrt();
    if (a.mean - b.mean).abs() > 3.0 * se {
        failures.push(format!("orders at 17/29 differ: {:.6} vs {:.6}", a.mean, b.mean));
    }
    Verdict::new(
        failures.is_empty(),
        format!(
            "{} pairs at n = {EPISODES}, {retried} retried; {}",
            pairs.len(),
            if failures.is_empty() {
                "all within 3 sd".into()
            } else {
                failures.join("; ")
            }
        ),
    )
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "strong-feedback pair threshold 17/29",
            limit: Some(Duration::from_secs(1)),
            run: example_one_threshold,
        },
        Criterion {
            id: 2,
            name: "no-feedback index optimal",
            limit: Some(Duration::from_secs(120)),
            run: no_feedback,
        },
        Criterion {
            id: 3,
            name: "order independence: monotone, DP, exit identity",
            limit: Some(Duration::from_secs(60)),
            run: order_independence,
        },
        Criterion {
            id: 4,
            name: "two regular journals: monotone unique",
            limit: Some(Duration::from_secs(30)),
            run: base_case,
        },
        Criterion {
            id: 5,
            name: "exp-regular with bounded weak feedback: monotone",
            limit: Some(Duration::from_secs(300)),
            run: weak_feedback,
        },
        Criterion {
            id: 6,
            name: "commutation sign law",
            limit: Some(Duration::from_secs(30)),
            run: commutation,
        },
        Criterion {
            id: 7,
            name: "single crossing and reach bound",
            limit: None,
            run: single_crossing,
        },
        Criterion {
            id: 8,
            name: "counterexample suite",
            limit: None,
            run: counterexamples,
        },
        Criterion {
            id: 9,
            name: "normalization shift",
            limit: None,
            run: normalization,
        },
        Criterion {
            id: 10,
            name: "Monte Carlo consistency",
            limit: Some(Duration::from_secs(120)),
            run: monte_carlo,
        },
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let v = (c.run)();
        let elapsed = start.elapsed();
        let in_time = c.limit.is_none_or(|l| elapsed <= l);
        let pass = v.pass && in_time;
        let limit = c
            .limit
            .map_or_else(|| "no limit".to_string(), |l| format!("limit {} s", l.as_secs()));
        println!(
            "criterion {:>2} {}: {} [{:.2} s, {limit}{}] {}",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over time" },
            v.detail
        );
        if !pass {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
