//! Optimal submission orders.
//!
//! Brute force over all `I!` orders is the reference. The subset DP is exact
//! only when beliefs after a set of rejections do not depend on the order
//! (`a_i q_j = a_j q_i` for every pair). The no-feedback index sorts by
//! `u − c/a`. Adjacent-swap local search is a heuristic for large `I`.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::conditions::check_order_independence;
use crate::model::{posterior, Instance, Model, ModelError, SearchOrder};
use crate::numeric::{format_exact, ratio, Scalar};

pub const DEFAULT_BRUTE_FORCE_CAP: usize = 10;
pub const DEFAULT_DP_CAP: usize = 20;
/// Orders with more journals than this are summarized by their best value in sweeps.
pub const SWEEP_ALL_ORDERS_MAX: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("{journals} journals exceed the brute-force cap of {cap}; use the dp or local algorithm")]
    TooLarge { journals: usize, cap: usize },
    #[error("subset DP is invalid: beliefs depend on submission order ({0})")]
    NotOrderIndependent(String),
    #[error("the no-feedback index needs q = 0 for every journal; `{0}` has feedback")]
    FeedbackPresent(String),
    #[error("prior thresholds are solved for exactly two journals, got {0}")]
    NotTwoJournals(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Dp,
    Index,
    Local,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Brute => "brute",
            Method::Dp => "dp",
            Method::Index => "index",
            Method::Local => "local",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub brute_force_cap: usize,
    pub dp_cap: usize,
    /// Relative tie tolerance in floating mode; exact mode ignores it.
    pub tol: f64,
    /// Maximum number of tied orders stored in `argmax_set`.
    pub argmax_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            brute_force_cap: DEFAULT_BRUTE_FORCE_CAP,
            dp_cap: DEFAULT_DP_CAP,
            tol: 1e-9,
            argmax_limit: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<S> {
    /// Lexicographically smallest maximizer.
    pub best_order: SearchOrder,
    pub best_value: S,
    /// Maximizers in lexicographic order, truncated at `argmax_limit`.
    /// Only brute force and DP enumerate ties; index and local search report
    /// the single order they found.
    pub argmax_set: Vec<SearchOrder>,
    pub argmax_count: usize,
    pub method: Method,
    /// Improving adjacent swaps applied (local search only).
    pub improving_swaps: usize,
}

impl<S> SolveResult<S> {
    pub fn in_argmax(&self, order: &SearchOrder) -> bool {
        self.argmax_set.contains(order)
    }

    pub fn monotone_in_argmax(&self) -> bool {
        self.argmax_set.iter().any(SearchOrder::is_monotone)
    }

    pub fn monotone_unique(&self) -> bool {
        self.argmax_count == 1 && self.best_order.is_monotone()
    }

    pub fn argmax_truncated(&self) -> bool {
        self.argmax_count > self.argmax_set.len()
    }
}

// ---------------------------------------------------------------------------
// Argmax bookkeeping
// ---------------------------------------------------------------------------

struct Frontier<S> {
    best: Option<S>,
    stored: Vec<(S, Vec<usize>)>,
    count: usize,
    tol: f64,
    limit: usize,
}

impl<S: Scalar> Frontier<S> {
    fn new(tol: f64, limit: usize) -> Self {
        Self {
            best: None,
            stored: Vec::new(),
            count: 0,
            tol,
            limit: limit.max(1),
        }
    }

    fn offer(&mut self, value: S, order: &[usize]) {
        let keep = match &self.best {
            None => {
                self.best = Some(value.clone());
                true
            }
            Some(best) if value.ties(best, self.tol) => {
                if value > *best {
                    self.best = Some(value.clone());
                }
                true
            }
            Some(best) if value > *best => {
                self.best = Some(value.clone());
                self.stored.clear();
                self.count = 0;
                true
            }
            Some(_) => false,
        };
        if keep {
            self.count += 1;
            if self.stored.len() < self.limit {
                self.stored.push((value, order.to_vec()));
            }
        }
    }

    /// Merges branch frontiers enumerated in lexicographic branch order.
    fn merge(parts: Vec<Frontier<S>>, tol: f64, limit: usize) -> Self {
        let mut out = Frontier::new(tol, limit);
        let best = parts
            .iter()
            .filter_map(|p| p.best.clone())
            .fold(None::<S>, |acc, v| match acc {
                Some(a) if a >= v => Some(a),
                _ => Some(v),
            });
        let Some(best) = best else { return out };
        for part in parts {
            let Some(part_best) = &part.best else { continue };
            if !part_best.ties(&best, tol) {
                continue;
            }
            let stored_len = part.stored.len();
            let kept: Vec<_> = part.stored.into_iter().filter(|(v, _)| v.ties(&best, tol)).collect();
            out.count += part.count - (stored_len - kept.len());
            for entry in kept {
                if out.stored.len() < out.limit {
                    out.stored.push(entry);
                }
            }
        }
        out.best = Some(best);
        out
    }

    fn finish(mut self, method: Method) -> SolveResult<S> {
        let best = self.best.clone().expect("at least one order offered");
        let before = self.stored.len();
        self.stored.retain(|(v, _)| v.ties(&best, self.tol));
        let count = self.count - (before - self.stored.len());
        let argmax_set: Vec<SearchOrder> = self
            .stored
            .into_iter()
            .map(|(_, o)| SearchOrder::from_trusted(o))
            .collect();
        SolveResult {
            best_order: argmax_set[0].clone(),
            best_value: best,
            argmax_set,
            argmax_count: count,
            method,
            improving_swaps: 0,
        }
    }
}

// ---------------------------------------------------------------------------
// Brute force
// ---------------------------------------------------------------------------

struct Enumerator<'a, S> {
    model: &'a Model<S>,
    prefix: Vec<usize>,
    frontier: Frontier<S>,
}

impl<S: Scalar> Enumerator<'_, S> {
    fn descend(&mut self, used: u64, reach: S, belief: S, acc: S) {
        let n = self.model.len();
        if self.prefix.len() == n {
            let value = acc + reach * self.model.outside.clone();
            self.frontier.offer(value, &self.prefix);
            return;
        }
        for j in 0..n {
            if used & (1 << j) != 0 {
                continue;
            }
            let p = &self.model.journals[j];
            let accept = p.a.clone() * belief.clone();
            let term = reach.clone() * (p.u.clone() * accept.clone() - p.c.clone());
            let next_reach = reach.clone() * (S::one() - accept);
            let next_belief = posterior(&p.a, &p.q, &belief).unwrap_or_else(S::one);
            self.prefix.push(j);
            self.descend(used | (1 << j), next_reach, next_belief, acc.clone() + term);
            self.prefix.pop();
        }
    }
}

/// Exact argmax over all orders. Branches on the first journal in parallel;
/// the result does not depend on the thread count.
pub fn brute_force_optimal<S: Scalar>(inst: &Instance, opts: &SolveOptions) -> Result<SolveResult<S>, SolveError> {
    let n = inst.len();
    if n > opts.brute_force_cap {
        return Err(SolveError::TooLarge {
            journals: n,
            cap: opts.brute_force_cap,
        });
    }
    Ok(brute_force_model(&inst.model::<S>(), opts))
}

pub(crate) fn brute_force_model<S: Scalar>(model: &Model<S>, opts: &SolveOptions) -> SolveResult<S> {
    let n = model.len();
    let parts: Vec<Frontier<S>> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut e = Enumerator {
                model,
                prefix: Vec::with_capacity(n),
                frontier: Frontier::new(opts.tol, opts.argmax_limit),
            };
            let p = &model.journals[first];
            let belief = model.prior.clone();
            let accept = p.a.clone() * belief.clone();
            let term = p.u.clone() * accept.clone() - p.c.clone();
            let reach = S::one() - accept;
            let next_belief = posterior(&p.a, &p.q, &belief).unwrap_or_else(S::one);
            e.prefix.push(first);
            e.descend(1 << first, reach, next_belief, term);
            e.frontier
        })
        .collect();
    Frontier::merge(parts, opts.tol, opts.argmax_limit).finish(Method::Brute)
}

// ---------------------------------------------------------------------------
// Index rules
// ---------------------------------------------------------------------------

/// Sorts by decreasing `u − c/a` (stable). Valid only without feedback.
pub fn index_order_no_feedback(inst: &Instance) -> Result<SearchOrder, SolveError> {
    if let Some(j) = inst.journals().iter().find(|j| !j.q.is_zero()) {
        return Err(SolveError::FeedbackPresent(j.name.clone()));
    }
    let index: Vec<BigRational> = inst.journals().iter().map(|j| j.modified_payoff()).collect();
    let mut perm: Vec<usize> = (0..inst.len()).collect();
    perm.sort_by(|&x, &y| index[y].cmp(&index[x]));
    Ok(SearchOrder::from_trusted(perm))
}

/// Decreasing payoff; the identity on the sorted instance.
pub fn monotone_order(inst: &Instance) -> SearchOrder {
    SearchOrder::identity(inst.len())
}

// ---------------------------------------------------------------------------
// Subset DP
// ---------------------------------------------------------------------------

/// Value iteration over rejected subsets. Requires `a_i q_j = a_j q_i` for
/// all pairs, which makes beliefs and reach probabilities functions of the
/// rejected set alone.
pub fn subset_dp_optimal<S: Scalar>(inst: &Instance, opts: &SolveOptions) -> Result<SolveResult<S>, SolveError> {
    let report = check_order_independence(inst);
    if !report.pass {
        let witness = report.witnesses.first().map(|w| w.note.clone()).unwrap_or_default();
        return Err(SolveError::NotOrderIndependent(witness));
    }
    let n = inst.len();
    if n > opts.dp_cap {
        return Err(SolveError::TooLarge {
            journals: n,
            cap: opts.dp_cap,
        });
    }
    let model = inst.model::<S>();
    let full = (1usize << n) - 1;

    let mut belief: Vec<S> = Vec::with_capacity(full + 1);
    belief.push(model.prior.clone());
    for mask in 1..=full {
        let j = mask.trailing_zeros() as usize;
        let p = &model.journals[j];
        let prev = &belief[mask & (mask - 1)];
        belief.push(posterior(&p.a, &p.q, prev).unwrap_or_else(S::one));
    }

    let step = |mask: usize, j: usize, cont: &S| -> S {
        let p = &model.journals[j];
        let accept = p.a.clone() * belief[mask].clone();
        p.u.clone() * accept.clone() - p.c.clone() + (S::one() - accept) * cont.clone()
    };

    // value[mask]: expected utility conditional on reaching the state where `mask` was rejected.
    let mut value: Vec<S> = vec![S::zero(); full + 1];
    value[full] = model.outside.clone();
    for mask in (0..full).rev() {
        value[mask] = (0..n)
            .filter(|j| mask & (1 << j) == 0)
            .map(|j| step(mask, j, &value[mask | (1 << j)]))
            .reduce(|a, b| if b > a { b } else { a })
            .expect("nonempty complement");
    }

    let mut frontier = Frontier::new(opts.tol, opts.argmax_limit);
    let mut prefix = Vec::with_capacity(n);
    collect_dp_orders(n, 0, &value, &step, opts.tol, &mut prefix, &mut frontier, &value[0]);
    let mut result = frontier.finish(Method::Dp);
    result.best_value = value[0].clone();
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn collect_dp_orders<S: Scalar>(
    n: usize,
    mask: usize,
    value: &[S],
    step: &dyn Fn(usize, usize, &S) -> S,
    tol: f64,
    prefix: &mut Vec<usize>,
    frontier: &mut Frontier<S>,
    root: &S,
) {
    if prefix.len() == n {
        frontier.offer(root.clone(), prefix);
        return;
    }
    for j in 0..n {
        if mask & (1 << j) != 0 {
            continue;
        }
        let next = mask | (1 << j);
        if step(mask, j, &value[next]).ties(&value[mask], tol) {
            prefix.push(j);
            collect_dp_orders(n, next, value, step, tol, prefix, frontier, root);
            prefix.pop();
            if frontier.stored.len() >= frontier.limit && frontier.count > 1_000_000 {
                return;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Local search
// ---------------------------------------------------------------------------

/// Left-to-right sweeps of adjacent transpositions, applying each strictly
/// profitable swap, until a full sweep changes nothing.
pub fn pairwise_swap_local_search<S: Scalar>(
    inst: &Instance,
    start: &SearchOrder,
    opts: &SolveOptions,
) -> Result<SolveResult<S>, SolveError> {
    let model = inst.model::<S>();
    model.check_order(start)?;
    let mut current = start.clone();
    let mut current_value = model.value(current.as_slice());
    let mut swaps = 0;
    loop {
        let mut improved = false;
        for t in 0..current.len().saturating_sub(1) {
            let candidate = current.swapped(t);
            let v = model.value(candidate.as_slice());
            if v > current_value && !v.ties(&current_value, opts.tol) {
                current = candidate;
                current_value = v;
                swaps += 1;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(SolveResult {
        best_order: current.clone(),
        best_value: current_value,
        argmax_set: vec![current],
        argmax_count: 1,
        method: Method::Local,
        improving_swaps: swaps,
    })
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Brute force within the cap, then DP if valid, then local search.
    Auto,
    Brute,
    Dp,
    Index,
    Local,
}

pub fn solve<S: Scalar>(
    inst: &Instance,
    algorithm: Algorithm,
    opts: &SolveOptions,
) -> Result<SolveResult<S>, SolveError> {
    match algorithm {
        Algorithm::Brute => brute_force_optimal(inst, opts),
        Algorithm::Dp => subset_dp_optimal(inst, opts),
        Algorithm::Local => pairwise_swap_local_search(inst, &monotone_order(inst), opts),
        Algorithm::Index => {
            let order = index_order_no_feedback(inst)?;
            let best_value = inst.model::<S>().value(order.as_slice());
            Ok(SolveResult {
                best_order: order.clone(),
                best_value,
                argmax_set: vec![order],
                argmax_count: 1,
                method: Method::Index,
                improving_swaps: 0,
            })
        }
        Algorithm::Auto => {
            if inst.len() <= opts.brute_force_cap {
                brute_force_optimal(inst, opts)
            } else if check_order_independence(inst).pass && inst.len() <= opts.dp_cap {
                subset_dp_optimal(inst, opts)
            } else {
                pairwise_swap_local_search(inst, &monotone_order(inst), opts)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Two-journal prior thresholds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    AlwaysMonotone,
    NeverMonotone,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Above,
    Below,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    pub kind: ThresholdKind,
    pub mu_star: Option<BigRational>,
    /// Side of `mu_star` on which the monotone order is optimal.
    pub direction: Option<Side>,
    /// Both orders tie for every prior.
    pub indifferent_everywhere: bool,
    /// Monotone value minus swapped value at μ(H)=0 and μ(H)=1. The gap is
    /// affine in the prior.
    pub gap_at_zero: BigRational,
    pub gap_at_one: BigRational,
}

impl ThresholdResult {
    /// Exact gap `V(monotone) − V(swapped)` at prior `mu`.
    pub fn gap_at(&self, mu: &BigRational) -> BigRational {
        &self.gap_at_zero + (&self.gap_at_one - &self.gap_at_zero) * mu
    }

    pub fn monotone_weakly_optimal_at(&self, mu: &BigRational) -> bool {
        self.gap_at(mu) >= BigRational::zero()
    }
}

/// Exact prior at which the two orders of a two-journal instance tie.
///
/// `(1 − aμ)·f(μ) = (1 − a − q)μ + q` is affine, so both order values and
/// their gap are affine in μ, costs and outside option included. The gap is
/// read off at μ ∈ {0, 1} and checked at μ = 1/2.
pub fn prior_threshold_2box(inst: &Instance) -> Result<ThresholdResult, SolveError> {
    if inst.len() != 2 {
        return Err(SolveError::NotTwoJournals(inst.len()));
    }
    let model = inst.model::<BigRational>();
    let gap = |mu: BigRational| {
        let m = model.with_prior(mu);
        m.value(&[0, 1]) - m.value(&[1, 0])
    };
    let g0 = gap(BigRational::zero());
    let g1 = gap(BigRational::one());
    debug_assert_eq!(gap(ratio(1, 2)), (&g0 + &g1) / BigRational::from_integer(2.into()));

    let zero = BigRational::zero();
    let (kind, mu_star, direction) = if g0 >= zero && g1 >= zero {
        (ThresholdKind::AlwaysMonotone, None, None)
    } else if g0 <= zero && g1 <= zero {
        (ThresholdKind::NeverMonotone, None, None)
    } else {
        let mu = &g0 / (&g0 - &g1);
        let side = if g1 > zero { Side::Above } else { Side::Below };
        (ThresholdKind::Threshold, Some(mu), Some(side))
    };
    Ok(ThresholdResult {
        kind,
        mu_star,
        direction,
        indifferent_everywhere: g0.is_zero() && g1.is_zero(),
        gap_at_zero: g0,
        gap_at_one: g1,
    })
}

impl fmt::Display for ThresholdResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, &self.mu_star, self.direction) {
            (ThresholdKind::Threshold, Some(mu), Some(side)) => {
                let side = if side == Side::Above { "above" } else { "below" };
                write!(f, "threshold {} (monotone optimal {side})", format_exact(mu))
            }
            (ThresholdKind::AlwaysMonotone, ..) if self.indifferent_everywhere => {
                write!(f, "always_monotone (indifferent at every prior)")
            }
            (ThresholdKind::AlwaysMonotone, ..) => write!(f, "always_monotone"),
            _ => write!(f, "never_monotone"),
        }
    }
}

// ---------------------------------------------------------------------------
// Prior sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<S> {
    pub mu: BigRational,
    /// Values of `Sweep::orders`, in the same order; empty for large instances.
    pub values: Vec<S>,
    pub best_value: S,
    pub best_order: SearchOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep<S> {
    pub orders: Vec<SearchOrder>,
    pub rows: Vec<SweepRow<S>>,
}

impl<S: Scalar> Sweep<S> {
    /// Row indices whose best order differs from the previous row's.
    pub fn flips(&self) -> Vec<usize> {
        (1..self.rows.len())
            .filter(|&i| self.rows[i].best_order != self.rows[i - 1].best_order)
            .collect()
    }

    /// CSV with columns `mu,value_<order>...,best_order`, orders labelled by
    /// journal names joined with `>`.
    pub fn to_csv(&self, inst: &Instance) -> String {
        let label = |o: &SearchOrder| inst.order_names(o).join(">");
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["mu".to_string()];
        if self.orders.is_empty() {
            header.push("value_best".into());
        } else {
            header.extend(self.orders.iter().map(|o| format!("value_{}", label(o))));
        }
        header.push("best_order".into());
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut rec = vec![Scalar::to_f64(&row.mu).to_string()];
            if self.orders.is_empty() {
                rec.push(row.best_value.to_f64().to_string());
            } else {
                rec.extend(row.values.iter().map(|v| v.to_f64().to_string()));
            }
            rec.push(label(&row.best_order));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8 csv")
    }
}

/// Values and the best order at each grid prior. Every order is tabulated for
/// up to [`SWEEP_ALL_ORDERS_MAX`] journals; beyond that only the best.
pub fn payoff_sweep<S: Scalar>(
    inst: &Instance,
    grid: &[BigRational],
    opts: &SolveOptions,
) -> Result<Sweep<S>, SolveError> {
    let n = inst.len();
    let orders = if n <= SWEEP_ALL_ORDERS_MAX {
        all_orders(n)
    } else {
        Vec::new()
    };
    let mut rows = Vec::with_capacity(grid.len());
    for mu in grid {
        let at = inst.with_prior(mu.clone())?;
        let best = brute_force_optimal::<S>(&at, opts)?;
        let model = at.model::<S>();
        rows.push(SweepRow {
            mu: mu.clone(),
            values: orders.iter().map(|o| model.value(o.as_slice())).collect(),
            best_value: best.best_value,
            best_order: best.best_order,
        });
    }
    Ok(Sweep { orders, rows })
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_orders(n: usize) -> Vec<SearchOrder> {
    fn rec(n: usize, prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<SearchOrder>) {
        if prefix.len() == n {
            out.push(SearchOrder::from_trusted(prefix.clone()));
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                prefix.push(j);
                rec(n, prefix, used, out);
                prefix.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(n, &mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}
