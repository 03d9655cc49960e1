//! Structural hypotheses on journals and priors, decided exactly with witnesses.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::{posterior, Instance, Journal};
use crate::numeric::format_exact;

pub const DEFAULT_GBWF_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditionError {
    #[error("{journals} journals exceed the path-enumeration cap of {cap}")]
    TooLarge { journals: usize, cap: usize },
}

/// A pair, path or journal with the values that decide a condition on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub subject: String,
    pub values: Vec<(String, BigRational)>,
    pub note: String,
}

impl Witness {
    fn new(subject: impl Into<String>, values: Vec<(&str, BigRational)>, note: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            values: values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            note: note.into(),
        }
    }

    pub fn to_json(&self) -> Value {
        let values: serde_json::Map<String, Value> = self
            .values
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(format_exact(v))))
            .collect();
        json!({ "subject": self.subject, "values": values, "note": self.note })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub name: String,
    pub pass: bool,
    /// The first violation when failing; otherwise the tightest case.
    pub witnesses: Vec<Witness>,
    /// Smallest slack; negative exactly when the condition fails.
    pub margin: Option<BigRational>,
    pub sub_flags: Vec<(String, bool)>,
}

impl ConditionReport {
    pub fn flag(&self, name: &str) -> Option<bool> {
        self.sub_flags.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn to_json(&self) -> Value {
        let flags: serde_json::Map<String, Value> = self
            .sub_flags
            .iter()
            .map(|(k, v)| (k.clone(), Value::Bool(*v)))
            .collect();
        json!({
            "name": self.name,
            "pass": self.pass,
            "margin": self.margin.as_ref().map(format_exact),
            "sub_flags": flags,
            "witnesses": self.witnesses.iter().map(Witness::to_json).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.name, if self.pass { "pass" } else { "FAIL" })?;
        if let Some(m) = &self.margin {
            write!(f, " (margin {})", format_exact(m))?;
        }
        for (name, v) in &self.sub_flags {
            write!(f, " {name}={}", if *v { "yes" } else { "no" })?;
        }
        for w in &self.witnesses {
            let vals: Vec<String> = w
                .values
                .iter()
                .map(|(k, v)| format!("{k}={}", format_exact(v)))
                .collect();
            write!(f, "\n  {}: {} [{}]", w.subject, w.note, vals.join(", "))?;
        }
        Ok(())
    }
}

fn pair_label(i: usize, j: usize) -> String {
    format!("pair ({},{})", i + 1, j + 1)
}

// ---------------------------------------------------------------------------
// Regularity
// ---------------------------------------------------------------------------

/// Regular: along the payoff-sorted list `u` and `q` are non-increasing and
/// `a` is non-decreasing. Strict: all three strictly. Exponential: regular and
/// `u_i ≥ 2u_j` for every `i < j`.
pub fn check_regularity(inst: &Instance) -> ConditionReport {
    let js = inst.journals();
    let two = BigRational::from_integer(2.into());
    let mut margin: Option<BigRational> = None;
    let mut first_violation: Option<Witness> = None;
    let mut exponential_violation: Option<Witness> = None;
    let mut tightest: Option<(BigRational, Witness)> = None;

    for i in 0..js.len() {
        for j in i + 1..js.len() {
            let (x, y) = (&js[i], &js[j]);
            let slacks = [("u", &x.u - &y.u), ("q", &x.q - &y.q), ("a", &y.a - &x.a)];
            for (param, slack) in slacks {
                let witness = || {
                    Witness::new(
                        pair_label(i, j),
                        vec![
                            (&format!("{param}_{}", i + 1)[..], param_of(x, param)),
                            (&format!("{param}_{}", j + 1)[..], param_of(y, param)),
                        ],
                        match param {
                            "a" => "a must be non-decreasing",
                            "u" => "u must be non-increasing",
                            _ => "q must be non-increasing",
                        },
                    )
                };
                if slack.is_negative() && first_violation.is_none() {
                    first_violation = Some(witness());
                }
                if tightest.as_ref().is_none_or(|(m, _)| slack < *m) {
                    tightest = Some((slack.clone(), witness()));
                }
                margin = Some(margin.map_or(slack.clone(), |m| m.min(slack)));
            }
            let gap = &x.u - &two * &y.u;
            if gap.is_negative() && exponential_violation.is_none() {
                exponential_violation = Some(Witness::new(
                    pair_label(i, j),
                    vec![("u_high", x.u.clone()), ("u_low", y.u.clone())],
                    "exponential regularity needs u_high >= 2 u_low",
                ));
            }
        }
    }

    let regular = margin.as_ref().is_none_or(|m| !m.is_negative());
    let strict = margin.as_ref().is_none_or(|m| m.is_positive());
    let exponential = regular && exponential_violation.is_none();
    let mut witnesses = Vec::new();
    if let Some(w) = first_violation {
        witnesses.push(w);
    } else if let Some((_, w)) = tightest {
        witnesses.push(w);
    }
    if regular {
        witnesses.extend(exponential_violation);
    }
    ConditionReport {
        name: "regularity".into(),
        pass: regular,
        witnesses,
        margin,
        sub_flags: vec![
            ("regular".into(), regular),
            ("strict".into(), strict),
            ("exponential".into(), exponential),
        ],
    }
}

fn param_of(j: &Journal, p: &str) -> BigRational {
    match p {
        "u" => j.u.clone(),
        "a" => j.a.clone(),
        _ => j.q.clone(),
    }
}

// ---------------------------------------------------------------------------
// Order independence
// ---------------------------------------------------------------------------

/// Antisymmetric matrix `a_i q_j − a_j q_i` over the sorted journals.
pub fn commutation_matrix(inst: &Instance) -> Vec<Vec<BigRational>> {
    let js = inst.journals();
    js.iter()
        .map(|x| js.iter().map(|y| &x.a * &y.q - &y.a * &x.q).collect())
        .collect()
}

/// Global pass iff `a_i q_j = a_j q_i` for every pair. The `small_costs`
/// sub-flag records whether payoff order and `u − c/a` order agree strictly
/// on every pair.
pub fn check_order_independence(inst: &Instance) -> ConditionReport {
    let js = inst.journals();
    let matrix = commutation_matrix(inst);
    let mut witnesses = Vec::new();
    let mut worst = BigRational::zero();
    for i in 0..js.len() {
        for j in i + 1..js.len() {
            let d = &matrix[i][j];
            if !d.is_zero() && witnesses.is_empty() {
                witnesses.push(Witness::new(
                    pair_label(i, j),
                    vec![
                        (&format!("a{}q{}", i + 1, j + 1)[..], &js[i].a * &js[j].q),
                        (&format!("a{}q{}", j + 1, i + 1)[..], &js[j].a * &js[i].q),
                    ],
                    "products differ",
                ));
            }
            worst = worst.max(d.abs());
        }
    }
    let small_costs = small_costs_hold(js);
    ConditionReport {
        name: "order_independence".into(),
        pass: worst.is_zero(),
        witnesses,
        margin: Some(-worst),
        sub_flags: vec![("small_costs".into(), small_costs)],
    }
}

fn small_costs_hold(js: &[Journal]) -> bool {
    let index: Vec<BigRational> = js.iter().map(Journal::modified_payoff).collect();
    (0..js.len()).all(|i| (0..js.len()).all(|j| (js[i].u > js[j].u) == (index[i] > index[j])))
}

// ---------------------------------------------------------------------------
// Globally bounded weak feedback
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdPolicy {
    /// `q_1/(q_1+a_1)` for the highest-payoff journal.
    Box1,
    /// `max_i q_i/(a_i+q_i)` over all journals.
    #[default]
    MaxOverJournals,
    /// At each prefix, the max over journals not yet submitted to.
    PerRemaining,
}

impl ThresholdPolicy {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdPolicy::Box1 => "box1",
            ThresholdPolicy::MaxOverJournals => "max_over_journals",
            ThresholdPolicy::PerRemaining => "per_remaining",
        }
    }
}

impl std::str::FromStr for ThresholdPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "box1" => Ok(Self::Box1),
            "max_over_journals" | "max" => Ok(Self::MaxOverJournals),
            "per_remaining" => Ok(Self::PerRemaining),
            other => Err(format!(
                "unknown threshold policy `{other}` (box1, max_over_journals, per_remaining)"
            )),
        }
    }
}

/// `q/(a+q)`: the belief at or above which rejection by this journal cannot
/// raise the chance of acceptance by another with the same rates.
pub fn weak_feedback_bound(j: &Journal) -> BigRational {
    let denom = &j.a + &j.q;
    &j.q / denom
}

struct PathMin {
    slack: BigRational,
    belief: BigRational,
    threshold: BigRational,
    path: Vec<usize>,
    violations: usize,
    first_violation: Option<(Vec<usize>, BigRational, BigRational)>,
    paths: usize,
}

impl PathMin {
    fn visit(&mut self, path: &[usize], belief: &BigRational, threshold: &BigRational) {
        self.paths += 1;
        let slack = belief - threshold;
        if slack.is_negative() {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some((path.to_vec(), belief.clone(), threshold.clone()));
            }
        }
        if slack < self.slack {
            self.slack = slack;
            self.belief = belief.clone();
            self.threshold = threshold.clone();
            self.path = path.to_vec();
        }
    }

    fn merge(mut self, other: PathMin) -> PathMin {
        self.paths += other.paths;
        self.violations += other.violations;
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation;
        }
        if other.slack < self.slack {
            self.slack = other.slack;
            self.belief = other.belief;
            self.threshold = other.threshold;
            self.path = other.path;
        }
        self
    }
}

/// Enumerates every ordered prefix of length `0..I−1` (the beliefs entering
/// periods `1..I` along every order) and requires each belief to be at least
/// the policy threshold.
pub fn check_globally_bounded_weak_feedback(
    inst: &Instance,
    policy: ThresholdPolicy,
    cap: usize,
) -> Result<ConditionReport, ConditionError> {
    let n = inst.len();
    if n > cap {
        return Err(ConditionError::TooLarge { journals: n, cap });
    }
    let js = inst.journals();
    let bounds: Vec<BigRational> = js.iter().map(weak_feedback_bound).collect();
    let global = match policy {
        ThresholdPolicy::Box1 => bounds[0].clone(),
        _ => bounds.iter().max().cloned().expect("nonempty instance"),
    };
    let threshold_for = |used: u64| -> BigRational {
        match policy {
            ThresholdPolicy::PerRemaining => (0..n)
                .filter(|j| used & (1 << j) == 0)
                .map(|j| bounds[j].clone())
                .max()
                .expect("prefix shorter than I"),
            _ => global.clone(),
        }
    };

    fn descend(
        js: &[Journal],
        threshold_for: &dyn Fn(u64) -> BigRational,
        path: &mut Vec<usize>,
        used: u64,
        belief: &BigRational,
        acc: &mut PathMin,
    ) {
        if path.len() + 1 == js.len() {
            return;
        }
        for j in 0..js.len() {
            if used & (1 << j) != 0 {
                continue;
            }
            let next = posterior(&js[j].a, &js[j].q, belief).unwrap_or_else(BigRational::one);
            path.push(j);
            let next_used = used | (1 << j);
            acc.visit(path, &next, &threshold_for(next_used));
            descend(js, threshold_for, path, next_used, &next, acc);
            path.pop();
        }
    }

    let prior = inst.prior().clone();
    let empty = || PathMin {
        slack: BigRational::from_integer(2.into()),
        belief: BigRational::zero(),
        threshold: BigRational::zero(),
        path: Vec::new(),
        violations: 0,
        first_violation: None,
        paths: 0,
    };
    let mut root = empty();
    root.visit(&[], &prior, &threshold_for(0));
    let branches: Vec<PathMin> = if n > 1 {
        (0..n)
            .into_par_iter()
            .map(|first| {
                let mut acc = empty();
                let mut path = vec![first];
                let next = posterior(&js[first].a, &js[first].q, &prior).unwrap_or_else(BigRational::one);
                acc.visit(&path, &next, &threshold_for(1 << first));
                descend(js, &threshold_for, &mut path, 1 << first, &next, &mut acc);
                acc
            })
            .collect()
    } else {
        Vec::new()
    };
    let all = branches.into_iter().fold(root, PathMin::merge);

    let pass = all.violations == 0;
    let path_label = |p: &[usize]| {
        let body: Vec<String> = p.iter().map(|j| (j + 1).to_string()).collect();
        format!("prefix ({})", body.join(","))
    };
    let mut witnesses = Vec::new();
    if let Some((path, belief, threshold)) = &all.first_violation {
        witnesses.push(Witness::new(
            path_label(path),
            vec![("belief", belief.clone()), ("threshold", threshold.clone())],
            "belief below threshold",
        ));
    }
    witnesses.push(Witness::new(
        path_label(&all.path),
        vec![("belief", all.belief.clone()), ("threshold", all.threshold.clone())],
        format!("minimum slack over {} prefixes", all.paths),
    ));
    Ok(ConditionReport {
        name: format!("globally_bounded_weak_feedback[{}]", policy.name()),
        pass,
        witnesses,
        margin: Some(all.slack),
        sub_flags: Vec::new(),
    })
}

/// Minimum belief over all enumerated prefixes, with the achieving prefix.
pub fn min_path_belief(inst: &Instance, cap: usize) -> Result<(BigRational, Vec<usize>), ConditionError> {
    let n = inst.len();
    if n > cap {
        return Err(ConditionError::TooLarge { journals: n, cap });
    }
    fn walk(
        js: &[Journal],
        path: &mut Vec<usize>,
        used: u64,
        belief: &BigRational,
        best: &mut (BigRational, Vec<usize>),
    ) {
        if *belief < best.0 {
            *best = (belief.clone(), path.clone());
        }
        if path.len() + 1 == js.len() {
            return;
        }
        for j in 0..js.len() {
            if used & (1 << j) == 0 {
                let next = posterior(&js[j].a, &js[j].q, belief).unwrap_or_else(BigRational::one);
                path.push(j);
                walk(js, path, used | (1 << j), &next, best);
                path.pop();
            }
        }
    }
    let mut best = (BigRational::from_integer(2.into()), Vec::new());
    walk(inst.journals(), &mut Vec::new(), 0, inst.prior(), &mut best);
    Ok(best)
}

// ---------------------------------------------------------------------------
// Strong feedback
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct StrongFeedback {
    /// `f_j(μ) ≥ μ`.
    pub strong: bool,
    /// Largest belief at which rejection does not lower it: `min(q/a, 1)`.
    pub boundary: BigRational,
    pub posterior: BigRational,
}

/// `f(μ) − μ = (aμ − q)(μ − 1)/(1 − aμ)`, so rejection weakly raises the
/// belief exactly when `μ ≤ q/a` or `μ = 1`.
pub fn check_strong_feedback_region(j: &Journal, mu: &BigRational) -> StrongFeedback {
    let post = posterior(&j.a, &j.q, mu).unwrap_or_else(BigRational::one);
    let boundary = (&j.q / &j.a).min(BigRational::one());
    StrongFeedback {
        strong: post >= *mu,
        boundary,
        posterior: post,
    }
}

/// Strong-feedback status of every journal at the instance prior.
pub fn strong_feedback_report(inst: &Instance) -> ConditionReport {
    let mu = inst.prior();
    let mut witnesses = Vec::new();
    let mut flags = Vec::new();
    let mut margin: Option<BigRational> = None;
    for (i, j) in inst.journals().iter().enumerate() {
        let s = check_strong_feedback_region(j, mu);
        let slack = mu - &s.boundary;
        margin = Some(margin.map_or(slack.clone(), |m| m.min(slack)));
        flags.push((j.name.clone(), s.strong));
        if s.strong {
            witnesses.push(Witness::new(
                format!("journal {}", i + 1),
                vec![
                    ("prior", mu.clone()),
                    ("posterior", s.posterior),
                    ("boundary", s.boundary),
                ],
                "rejection does not lower the belief",
            ));
        }
    }
    ConditionReport {
        name: "weak_feedback_at_prior".into(),
        pass: witnesses.is_empty(),
        witnesses,
        margin,
        sub_flags: flags,
    }
}
