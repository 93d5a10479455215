//! The relative log-concavity pre-order and the ultra-log-concavity
//! hierarchy, decided with explicit failure witnesses.
//!
//! `f ≤_lc g` holds when both supports are intervals, supp(f) ⊆ supp(g), and
//! the second differences of log(f_i/g_i) stay non-positive on the interior
//! of supp(f). Truncated supports are compared on their stored windows; the
//! comparison is exact only when both tail bounds are zero.

use serde::Serialize;

use crate::numeric::{ln_choose, ln_factorial};
use crate::pmf::{Pmf, ZERO_SUPPORT_TOL};

/// Default relative scale for second-difference tolerances.
pub const DEFAULT_LC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    None,
    FSupportNotInterval,
    GSupportNotInterval,
    SupportNotContained,
    ConcavityViolated,
}

/// Verdict of an order check with a machine-readable failure witness.
///
/// `margin` is the worst (largest) second difference observed; concavity
/// needs it ≤ 0 up to scaled tolerance. When no interior triple exists the
/// check is vacuous and the margin is 0.
#[derive(Debug, Clone, Serialize)]
pub struct LcReport {
    pub verdict: bool,
    pub failure_kind: FailureKind,
    pub witness_index: Option<usize>,
    pub margin: f64,
}

impl LcReport {
    fn pass(margin: f64) -> Self {
        LcReport {
            verdict: true,
            failure_kind: FailureKind::None,
            witness_index: None,
            margin,
        }
    }

    fn fail(kind: FailureKind, witness: usize, margin: f64) -> Self {
        LcReport {
            verdict: false,
            failure_kind: kind,
            witness_index: Some(witness),
            margin,
        }
    }
}

/// True iff no stored weight strictly inside the trimmed window is ≤ `zero_tol`.
pub fn is_interval_support(f: &Pmf, zero_tol: f64) -> bool {
    f.support_is_interval(zero_tol)
}

fn interior_hole(f: &Pmf) -> usize {
    f.interior_hole_index(ZERO_SUPPORT_TOL)
        .unwrap_or(f.first_index())
}

/// Concavity of a log-sequence by second differences with relative slack.
///
/// Returns (worst margin, first index whose second difference exceeds its
/// local tolerance). Index positions are absolute support indices of the
/// middle point.
fn second_difference_scan(
    log_vals: &[f64],
    first_index: usize,
    tol: f64,
) -> (f64, Option<usize>) {
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut worst_excess = 0.0f64;
    for i in 1..log_vals.len().saturating_sub(1) {
        let (a, b, c) = (log_vals[i - 1], log_vals[i], log_vals[i + 1]);
        let d = c - 2.0 * b + a;
        let local = tol * (1.0 + a.abs() + b.abs() + c.abs());
        if d > worst {
            worst = d;
        }
        if d > local && d - local > worst_excess {
            worst_excess = d - local;
            witness = Some(first_index + i);
        }
    }
    (worst, witness)
}

/// Decide `f ≤_lc g`.
///
/// The boundary points of supp(f) carry no constraint; concavity is only
/// required at interior triples.
pub fn lc_le(f: &Pmf, g: &Pmf, tol: f64) -> LcReport {
    if !f.support_is_interval(ZERO_SUPPORT_TOL) {
        return LcReport::fail(FailureKind::FSupportNotInterval, interior_hole(f), 0.0);
    }
    if !g.support_is_interval(ZERO_SUPPORT_TOL) {
        return LcReport::fail(FailureKind::GSupportNotInterval, interior_hole(g), 0.0);
    }
    if f.first_index() < g.first_index() {
        return LcReport::fail(FailureKind::SupportNotContained, f.first_index(), 0.0);
    }
    if f.last_index() > g.last_index() {
        return LcReport::fail(FailureKind::SupportNotContained, f.last_index(), 0.0);
    }
    let log_ratio: Vec<f64> = (f.first_index()..=f.last_index())
        .map(|i| f.weight_at(i).ln() - g.weight_at(i).ln())
        .collect();
    let (margin, witness) = second_difference_scan(&log_ratio, f.first_index(), tol);
    match witness {
        Some(w) => LcReport::fail(FailureKind::ConcavityViolated, w, margin),
        None => LcReport::pass(margin),
    }
}

/// Log-concavity of `f` itself: second differences of log f_i ≤ 0.
///
/// Equivalent to `f ≤_lc ge(p)` for every p, since the geometric log-weights
/// are linear in the index.
pub fn is_log_concave(f: &Pmf) -> LcReport {
    if !f.support_is_interval(ZERO_SUPPORT_TOL) {
        return LcReport::fail(FailureKind::FSupportNotInterval, interior_hole(f), 0.0);
    }
    let logs: Vec<f64> = f.weights().iter().map(|w| w.ln()).collect();
    let (margin, witness) = second_difference_scan(&logs, f.first_index(), DEFAULT_LC_TOL);
    match witness {
        Some(w) => LcReport::fail(FailureKind::ConcavityViolated, w, margin),
        None => LcReport::pass(margin),
    }
}

/// Ultra log-concavity of order `k`: log-concavity of f_i / C(k, i).
///
/// The binomial reference probability cancels out of second differences, so
/// no p parameter appears.
pub fn is_ulc_order_k(f: &Pmf, k: usize) -> LcReport {
    if k < f.last_index() {
        return LcReport::fail(FailureKind::SupportNotContained, f.last_index(), 0.0);
    }
    if !f.support_is_interval(ZERO_SUPPORT_TOL) {
        return LcReport::fail(FailureKind::FSupportNotInterval, interior_hole(f), 0.0);
    }
    let logs: Vec<f64> = (f.first_index()..=f.last_index())
        .map(|i| f.weight_at(i).ln() - ln_choose(k as f64, i as f64))
        .collect();
    let (margin, witness) = second_difference_scan(&logs, f.first_index(), DEFAULT_LC_TOL);
    match witness {
        Some(w) => LcReport::fail(FailureKind::ConcavityViolated, w, margin),
        None => LcReport::pass(margin),
    }
}

/// Ultra log-concavity (order ∞): log-concavity of i! · f_i.
///
/// Equivalent to `f ≤_lc po(λ)` for every λ.
pub fn is_ulc(f: &Pmf) -> LcReport {
    if !f.support_is_interval(ZERO_SUPPORT_TOL) {
        return LcReport::fail(FailureKind::FSupportNotInterval, interior_hole(f), 0.0);
    }
    let logs: Vec<f64> = (f.first_index()..=f.last_index())
        .map(|i| f.weight_at(i).ln() + ln_factorial(i))
        .collect();
    let (margin, witness) = second_difference_scan(&logs, f.first_index(), DEFAULT_LC_TOL);
    match witness {
        Some(w) => LcReport::fail(FailureKind::ConcavityViolated, w, margin),
        None => LcReport::pass(margin),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    #[serde(rename = "-")]
    Neg,
    #[serde(rename = "+")]
    Pos,
}

/// Run-compressed signs of a sequence after discarding near-zero entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignProfile {
    pub signs: Vec<Sign>,
    pub change_count: usize,
}

/// Compress the signs of `a`, discarding entries with |a_i| ≤ `zero_tol`.
pub fn sign_profile(a: &[f64], zero_tol: f64) -> SignProfile {
    let mut signs: Vec<Sign> = Vec::new();
    for &x in a {
        if x.abs() <= zero_tol {
            continue;
        }
        let s = if x > 0.0 { Sign::Pos } else { Sign::Neg };
        if signs.last() != Some(&s) {
            signs.push(s);
        }
    }
    let change_count = signs.len().saturating_sub(1);
    SignProfile {
        signs,
        change_count,
    }
}
