//! Randomized and exhaustive verification of the structural results.
//!
//! Each claim runs a number of seeded trials (trial `t` uses seed
//! `seed + t`) plus a few named instances, and tallies every sub-check.
//! A claim is `falsified` as soon as one sub-check fails; failing instances
//! are kept in the instance JSON format for replay. A `verified` status only
//! describes the trials that were run.

mod claims;
mod counterexamples;
pub mod generators;

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::format::instance_to_value;
use crate::model::Instance;

pub use claims::{
    verify_base_case, verify_lemma_commutation, verify_lemma_ratio, verify_normalization,
    verify_prop_order_independence, verify_single_crossing, verify_theorem_no_feedback, verify_theorem_weak_feedback,
};
pub use counterexamples::reproduce_counterexamples;
pub use generators::{gen_random_instance, Family, GenError, GeneratorSpec};

/// Stored failures per report; the count covers all of them.
const MAX_STORED_FAILURES: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabError {
    #[error("unknown suite `{0}`; expected one of {names} or `all`", names = SUITES.join(", "))]
    UnknownSuite(String),
    #[error(transparent)]
    Generator(#[from] GenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Verified,
    Falsified,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Verified => "verified",
            Status::Falsified => "falsified",
            Status::Skipped => "skipped",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub check: String,
    pub trial: Option<usize>,
    pub seed: Option<u64>,
    pub detail: String,
    pub instance: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckTally {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub claim: String,
    pub title: String,
    pub seed: Option<u64>,
    pub trials: usize,
    pub status: Status,
    pub checks: Vec<CheckTally>,
    pub failure_count: usize,
    pub failures: Vec<Failure>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub elapsed_ms: u128,
}

impl VerificationReport {
    pub fn tally(&self, check: &str) -> Option<&CheckTally> {
        self.checks.iter().find(|c| c.name == check)
    }

    /// Whether the named sub-check ran at least once and never failed.
    pub fn check_passed(&self, check: &str) -> bool {
        self.tally(check).is_some_and(|t| t.failed == 0 && t.passed > 0)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "[{}] {}: {} ({} trials, {} failures, {} ms)\n",
            self.status, self.claim, self.title, self.trials, self.failure_count, self.elapsed_ms
        );
        for c in &self.checks {
            out.push_str(&format!(
                "  {:<40} pass {:>7}  fail {:>5}\n",
                c.name, c.passed, c.failed
            ));
        }
        for note in &self.notes {
            out.push_str(&format!("  note: {note}\n"));
        }
        for f in self.failures.iter().take(5) {
            let at = match (f.trial, f.seed) {
                (Some(t), Some(s)) => format!("trial {t}, seed {s}"),
                _ => "named case".into(),
            };
            out.push_str(&format!("  failure [{}] {at}: {}\n", f.check, f.detail));
        }
        out
    }
}

/// One sub-check outcome inside a trial.
pub(crate) struct Outcome {
    check: &'static str,
    failure: Option<String>,
}

impl Outcome {
    pub(crate) fn new(check: &'static str, ok: bool, detail: impl FnOnce() -> String) -> Self {
        Self {
            check,
            failure: (!ok).then(detail),
        }
    }
}

pub(crate) struct TrialResult {
    pub(crate) outcomes: Vec<Outcome>,
    pub(crate) instance: Option<Instance>,
    /// Labels counted into the report notes; never failures.
    pub(crate) tags: Vec<&'static str>,
}

impl TrialResult {
    pub(crate) fn new(outcomes: Vec<Outcome>, instance: Option<Instance>) -> Self {
        Self {
            outcomes,
            instance,
            tags: Vec::new(),
        }
    }
}

pub(crate) struct ReportBuilder {
    report: VerificationReport,
    started: Instant,
    tags: Vec<(&'static str, usize)>,
}

impl ReportBuilder {
    pub(crate) fn new(claim: &str, title: &str, seed: Option<u64>) -> Self {
        Self {
            report: VerificationReport {
                claim: claim.into(),
                title: title.into(),
                seed,
                trials: 0,
                status: Status::Verified,
                checks: Vec::new(),
                failure_count: 0,
                failures: Vec::new(),
                notes: Vec::new(),
                elapsed_ms: 0,
            },
            started: Instant::now(),
            tags: Vec::new(),
        }
    }

    pub(crate) fn record(
        &mut self,
        check: &str,
        ok: bool,
        trial: Option<usize>,
        seed: Option<u64>,
        detail: impl FnOnce() -> String,
        instance: Option<&Instance>,
    ) {
        let tally = match self.report.checks.iter_mut().position(|c| c.name == check) {
            Some(i) => &mut self.report.checks[i],
            None => {
                self.report.checks.push(CheckTally {
                    name: check.into(),
                    passed: 0,
                    failed: 0,
                });
                self.report.checks.last_mut().expect("just pushed")
            }
        };
        if ok {
            tally.passed += 1;
            return;
        }
        tally.failed += 1;
        self.report.failure_count += 1;
        if self.report.failures.len() < MAX_STORED_FAILURES {
            self.report.failures.push(Failure {
                check: check.into(),
                trial,
                seed,
                detail: detail(),
                instance: instance.map(instance_to_value),
            });
        }
    }

    /// A named (non-random) check.
    pub(crate) fn named(
        &mut self,
        check: &str,
        ok: bool,
        detail: impl FnOnce() -> String,
        instance: Option<&Instance>,
    ) {
        self.record(check, ok, None, None, detail, instance);
    }

    pub(crate) fn tag(&mut self, tag: &'static str) {
        match self.tags.iter_mut().find(|(t, _)| *t == tag) {
            Some((_, n)) => *n += 1,
            None => self.tags.push((tag, 1)),
        }
    }

    pub(crate) fn note(&mut self, note: impl Into<String>) {
        self.report.notes.push(note.into());
    }

    /// Runs `trials` seeded trials in parallel and tallies them in trial order.
    pub(crate) fn run_trials<F>(&mut self, trials: usize, seed: u64, trial: F) -> Result<(), LabError>
    where
        F: Fn(usize, u64) -> Result<TrialResult, LabError> + Sync,
    {
        let results: Vec<Result<TrialResult, LabError>> = (0..trials)
            .into_par_iter()
            .map(|t| trial(t, seed.wrapping_add(t as u64)))
            .collect();
        for (t, result) in results.into_iter().enumerate() {
            let result = result?;
            let s = seed.wrapping_add(t as u64);
            for tag in &result.tags {
                self.tag(tag);
            }
            for o in result.outcomes {
                let failure = o.failure;
                let ok = failure.is_none();
                self.record(
                    o.check,
                    ok,
                    Some(t),
                    Some(s),
                    || failure.unwrap_or_default(),
                    result.instance.as_ref(),
                );
            }
        }
        self.report.trials += trials;
        Ok(())
    }

    pub(crate) fn finish(mut self) -> VerificationReport {
        for (tag, n) in std::mem::take(&mut self.tags) {
            self.report.notes.push(format!("count {tag}: {n}"));
        }
        self.report.status = if self.report.failure_count > 0 {
            Status::Falsified
        } else {
            Status::Verified
        };
        self.report.elapsed_ms = self.started.elapsed().as_millis();
        self.report
    }
}

/// Trial count, seed and size cap shared by the suites. `trials = None`
/// uses each claim's default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabConfig {
    pub trials: Option<usize>,
    pub seed: u64,
    pub max_journals: Option<usize>,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            trials: None,
            seed: 42,
            max_journals: None,
        }
    }
}

impl LabConfig {
    pub(crate) fn trials_or(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }

    /// Largest instance size for a claim whose own cap is `cap`.
    pub(crate) fn journals_up_to(&self, cap: usize) -> usize {
        self.max_journals.map_or(cap, |m| m.min(cap))
    }
}

pub const SUITES: [&str; 9] = [
    "no_feedback",
    "order_independence",
    "base_case",
    "weak_feedback",
    "commutation",
    "ratio",
    "single_crossing",
    "normalization",
    "counterexamples",
];

/// Runs one suite by name, or every suite for `all`.
pub fn run_suite(name: &str, config: &LabConfig) -> Result<Vec<VerificationReport>, LabError> {
    if name == "all" {
        return SUITES.iter().map(|s| run_one(s, config)).collect();
    }
    Ok(vec![run_one(name, config)?])
}

fn run_one(name: &str, c: &LabConfig) -> Result<VerificationReport, LabError> {
    match name {
        "no_feedback" => verify_theorem_no_feedback(c),
        "order_independence" => verify_prop_order_independence(c),
        "base_case" => verify_base_case(c),
        "weak_feedback" => verify_theorem_weak_feedback(c),
        "commutation" => verify_lemma_commutation(c),
        "ratio" => verify_lemma_ratio(c),
        "single_crossing" => verify_single_crossing(c),
        "normalization" => verify_normalization(c),
        "counterexamples" => Ok(reproduce_counterexamples()),
        other => Err(LabError::UnknownSuite(other.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_tallies_and_status() {
        let mut b = ReportBuilder::new("x", "demo", Some(1));
        b.named("a", true, String::new, None);
        b.named("a", false, || "bad".into(), None);
        b.named("b", true, String::new, None);
        let r = b.finish();
        assert_eq!(r.status, Status::Falsified);
        assert_eq!(
            r.tally("a"),
            Some(&CheckTally {
                name: "a".into(),
                passed: 1,
                failed: 1
            })
        );
        assert!(r.check_passed("b"));
        assert!(!r.check_passed("a"));
        assert_eq!(r.failures[0].detail, "bad");
        assert!(r.to_text().contains("[falsified] x"));
        assert_eq!(r.to_json()["failure_count"], 1);
    }

    #[test]
    fn trials_are_tallied_in_order() {
        let mut b = ReportBuilder::new("y", "demo", Some(10));
        b.run_trials(6, 10, |t, s| {
            assert_eq!(s, 10 + t as u64);
            let mut r = TrialResult::new(vec![Outcome::new("even", t % 2 == 0, || format!("trial {t}"))], None);
            if t < 2 {
                r.tags.push("early");
            }
            Ok(r)
        })
        .unwrap();
        let r = b.finish();
        assert_eq!(r.trials, 6);
        assert_eq!(r.failure_count, 3);
        let trials: Vec<_> = r.failures.iter().map(|f| f.trial.unwrap()).collect();
        assert_eq!(trials, vec![1, 3, 5]);
        assert_eq!(r.failures[0].seed, Some(11));
        assert_eq!(r.notes, vec!["count early: 2".to_string()]);
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(matches!(
            run_suite("nope", &LabConfig::default()),
            Err(LabError::UnknownSuite(_))
        ));
    }
}
