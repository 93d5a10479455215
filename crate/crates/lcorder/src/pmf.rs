//! Probability mass functions on the non-negative integers.
//!
//! A [`Pmf`] stores a trimmed window of weights together with a certified
//! upper bound on the mass truncated away. Standard families are materialized
//! through log-domain ratio recurrences, so parameters like `binomial(10_000, p)`
//! never touch a factorial. Infinite families are cut at the smallest index
//! whose remaining upper-tail mass is provably below the truncation budget,
//! and that bound travels with the value through every downstream operation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::{ln_choose, ln_factorial, NeumaierSum};
use crate::{Error, Result};

/// Default truncation budget for infinite-support families.
pub const DEFAULT_EPS_TRUNC: f64 = 1e-12;
/// Largest accepted truncation budget.
pub const MAX_EPS_TRUNC: f64 = 1e-6;
/// Slack allowed around exact normalization.
pub const NORMALIZATION_SLACK: f64 = 1e-12;
/// Guaranteed absolute accuracy of the mean after [`tilt_to_mean`].
pub const MEAN_MATCH_TOL: f64 = 1e-10;
/// Weights below this are treated as support holes.
pub const ZERO_SUPPORT_TOL: f64 = 1e-14;

/// The tilt solver aims an order of magnitude below the advertised tolerance.
const MEAN_SOLVE_TARGET: f64 = 1e-12;
/// Heuristic number of extra indices a truncated tail is assumed to span when
/// converting tail mass into moment error bounds.
pub(crate) const TAIL_LENGTH_HEURISTIC: f64 = 64.0;

const MAX_REALIZE_LEN: usize = 5_000_000;

/// Parametric description of a standard family instance.
///
/// `Negbinomial` accepts any real `n > 0`; it does not have to be an integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    Bernoulli { p: f64 },
    Binomial { n: u32, p: f64 },
    Poisson { lambda: f64 },
    Geometric { p: f64 },
    Negbinomial { n: f64, r: f64 },
}

impl std::fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FamilySpec::Bernoulli { p } => write!(f, "bernoulli(p={p})"),
            FamilySpec::Binomial { n, p } => write!(f, "binomial(n={n}, p={p})"),
            FamilySpec::Poisson { lambda } => write!(f, "poisson(lambda={lambda})"),
            FamilySpec::Geometric { p } => write!(f, "geometric(p={p})"),
            FamilySpec::Negbinomial { n, r } => write!(f, "negbinomial(n={n}, r={r})"),
        }
    }
}

fn check_open_unit(name: &str, p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must lie in (0, 1), got {p}"
        )));
    }
    Ok(())
}

impl FamilySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FamilySpec::Bernoulli { p } | FamilySpec::Geometric { p } => check_open_unit("p", p),
            FamilySpec::Binomial { n, p } => {
                if n == 0 {
                    return Err(Error::InvalidParameter("binomial n must be >= 1".into()));
                }
                check_open_unit("p", p)
            }
            FamilySpec::Poisson { lambda } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "poisson lambda must be positive and finite, got {lambda}"
                    )));
                }
                Ok(())
            }
            FamilySpec::Negbinomial { n, r } => {
                if !(n > 0.0 && n.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "negbinomial n must be positive and finite, got {n}"
                    )));
                }
                check_open_unit("r", r)
            }
        }
    }

    /// Closed-form mean.
    pub fn mean(&self) -> f64 {
        match *self {
            FamilySpec::Bernoulli { p } => p,
            FamilySpec::Binomial { n, p } => f64::from(n) * p,
            FamilySpec::Poisson { lambda } => lambda,
            FamilySpec::Geometric { p } => (1.0 - p) / p,
            FamilySpec::Negbinomial { n, r } => n * (1.0 - r) / r,
        }
    }

    /// Exact log-weight at index `i` (`-inf` outside the support).
    pub fn log_pmf(&self, i: usize) -> f64 {
        let x = i as f64;
        match *self {
            FamilySpec::Bernoulli { p } => match i {
                0 => (1.0 - p).ln(),
                1 => p.ln(),
                _ => f64::NEG_INFINITY,
            },
            FamilySpec::Binomial { n, p } => {
                if i > n as usize {
                    f64::NEG_INFINITY
                } else {
                    ln_choose(f64::from(n), x) + x * p.ln() + (f64::from(n) - x) * (1.0 - p).ln()
                }
            }
            FamilySpec::Poisson { lambda } => -lambda + x * lambda.ln() - ln_factorial(i),
            FamilySpec::Geometric { p } => p.ln() + x * (1.0 - p).ln(),
            FamilySpec::Negbinomial { n, r } => {
                ln_choose(n + x - 1.0, x) + n * r.ln() + x * (1.0 - r).ln()
            }
        }
    }

    /// ln(f_{i+1} / f_i) for the ratio recurrence.
    fn log_ratio(&self, i: usize) -> f64 {
        let x = i as f64;
        match *self {
            FamilySpec::Bernoulli { p } => {
                if i == 0 {
                    p.ln() - (1.0 - p).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            FamilySpec::Binomial { n, p } => {
                if i >= n as usize {
                    f64::NEG_INFINITY
                } else {
                    ((f64::from(n) - x) / (x + 1.0)).ln() + p.ln() - (1.0 - p).ln()
                }
            }
            FamilySpec::Poisson { lambda } => lambda.ln() - (x + 1.0).ln(),
            FamilySpec::Geometric { p } => (1.0 - p).ln(),
            FamilySpec::Negbinomial { n, r } => ((n + x) / (x + 1.0)).ln() + (1.0 - r).ln(),
        }
    }

    /// sup over j ≥ k of f_{j+1}/f_j, used for geometric tail domination.
    fn tail_ratio_sup(&self, k: usize) -> f64 {
        let x = k as f64;
        match *self {
            FamilySpec::Bernoulli { .. } | FamilySpec::Binomial { .. } => 0.0,
            FamilySpec::Poisson { lambda } => lambda / (x + 1.0),
            FamilySpec::Geometric { p } => 1.0 - p,
            FamilySpec::Negbinomial { n, r } => {
                // (n+j)/(j+1) is monotone in j toward 1, from above when n >= 1
                // and from below when n < 1.
                (((n + x) / (x + 1.0)) * (1.0 - r)).max(1.0 - r)
            }
        }
    }

    fn finite_support_end(&self) -> Option<usize> {
        match *self {
            FamilySpec::Bernoulli { .. } => Some(1),
            FamilySpec::Binomial { n, .. } => Some(n as usize),
            _ => None,
        }
    }

    /// Upper bound on the mass strictly beyond index `k`.
    ///
    /// Returns `None` while the geometric domination argument does not apply
    /// yet (ratio ≥ 1 at `k + 1`).
    pub fn upper_tail_bound(&self, k: usize) -> Option<f64> {
        if let Some(end) = self.finite_support_end() {
            return if k >= end { Some(0.0) } else { None };
        }
        let q = self.tail_ratio_sup(k + 1);
        if q < 1.0 {
            Some(self.log_pmf(k + 1).exp() / (1.0 - q))
        } else {
            None
        }
    }

    /// Materialize the family, truncating infinite supports at the smallest
    /// index whose certified upper-tail mass is ≤ `eps`.
    pub fn realize(&self, eps: f64) -> Result<Pmf> {
        self.realize_to(eps, 0)
    }

    /// Like [`FamilySpec::realize`] but keeps materializing at least through
    /// index `min_last`, so the stored window can be made to cover another
    /// distribution's support. The tail bound only shrinks by extending.
    pub fn realize_to(&self, eps: f64, min_last: usize) -> Result<Pmf> {
        self.validate()?;
        check_eps(eps)?;
        let label = Some(self.to_string());
        let exact_mean = Some(self.mean());

        if let Some(end) = self.finite_support_end() {
            let mut logw = Vec::with_capacity(end + 1);
            logw.push(self.log_pmf(0));
            for i in 0..end {
                let next = logw[i] + self.log_ratio(i);
                logw.push(next);
            }
            let mut weights: Vec<f64> = logw.iter().map(|lw| lw.exp()).collect();
            // Exact finite families are normalized to kill accumulated
            // recurrence rounding; the family sums to 1 by definition.
            let sum = crate::numeric::compensated_sum(weights.iter().copied());
            for w in &mut weights {
                *w /= sum;
            }
            return Pmf::from_parts(0, weights, 0.0, label, exact_mean);
        }

        let mut logw = vec![self.log_pmf(0)];
        let mut k = 0usize;
        let tail = loop {
            while logw.len() <= k + 1 {
                let i = logw.len() - 1;
                let next = logw[i] + self.log_ratio(i);
                logw.push(next);
            }
            if k >= min_last {
                if let Some(bound) = self.upper_tail_bound(k) {
                    if bound <= eps {
                        break bound;
                    }
                }
            }
            k += 1;
            if k > MAX_REALIZE_LEN {
                return Err(Error::InvalidParameter(format!(
                    "realizing {self} did not reach tail mass {eps} within {MAX_REALIZE_LEN} indices"
                )));
            }
        };
        let weights: Vec<f64> = logw[..=k].iter().map(|lw| lw.exp()).collect();
        Pmf::from_parts(0, weights, tail, label, exact_mean)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= MAX_EPS_TRUNC) {
        return Err(Error::InvalidParameter(format!(
            "truncation budget must lie in (0, {MAX_EPS_TRUNC}], got {eps}"
        )));
    }
    Ok(())
}

/// A finite-support (possibly truncated) pmf on the non-negative integers.
///
/// Invariants enforced at construction:
/// - all weights are non-negative, first and last strictly positive;
/// - stored mass lies in `[1 - tail_bound - 1e-12, 1 + 1e-12]`;
/// - interior zeros are kept as stored (they make the support non-interval,
///   which the order checks detect rather than repair).
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    offset: usize,
    weights: Vec<f64>,
    tail_bound: f64,
    label: Option<String>,
    exact_mean: Option<f64>,
}

impl Pmf {
    pub fn new(offset: usize, weights: Vec<f64>, tail_bound: f64) -> Result<Self> {
        Self::from_parts(offset, weights, tail_bound, None, None)
    }

    fn from_parts(
        offset: usize,
        mut weights: Vec<f64>,
        tail_bound: f64,
        label: Option<String>,
        exact_mean: Option<f64>,
    ) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidPmf(
                "weights must be finite and non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&tail_bound) {
            return Err(Error::InvalidPmf(format!(
                "tail bound must lie in [0, 1], got {tail_bound}"
            )));
        }
        // Trim to canonical representation: first and last weights positive.
        let lead = weights.iter().take_while(|w| **w == 0.0).count();
        if lead == weights.len() {
            return Err(Error::InvalidPmf("pmf has no positive weight".into()));
        }
        let trail = weights.iter().rev().take_while(|w| **w == 0.0).count();
        weights.drain(..lead);
        weights.truncate(weights.len() - trail);
        let offset = offset + lead;

        let sum = crate::numeric::compensated_sum(weights.iter().copied());
        if sum < 1.0 - tail_bound - NORMALIZATION_SLACK || sum > 1.0 + NORMALIZATION_SLACK {
            return Err(Error::InvalidPmf(format!(
                "stored mass {sum} inconsistent with tail bound {tail_bound}"
            )));
        }
        Ok(Pmf {
            offset,
            weights,
            tail_bound,
            label,
            exact_mean,
        })
    }

    /// Point mass at `index`.
    pub fn delta(index: usize) -> Self {
        Pmf {
            offset: index,
            weights: vec![1.0],
            tail_bound: 0.0,
            label: Some(format!("delta({index})")),
            exact_mean: Some(index as f64),
        }
    }

    /// Normalize raw non-negative weights into an exact pmf (tail bound 0).
    pub fn from_unnormalized(offset: usize, raw: Vec<f64>) -> Result<Self> {
        if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidPmf(
                "weights must be finite and non-negative".into(),
            ));
        }
        let sum = crate::numeric::compensated_sum(raw.iter().copied());
        if !(sum > 0.0) {
            return Err(Error::InvalidPmf("weights sum to zero".into()));
        }
        let weights = raw.into_iter().map(|w| w / sum).collect();
        Self::from_parts(offset, weights, 0.0, None, None)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub(crate) fn with_exact_mean(mut self, mean: f64) -> Self {
        self.exact_mean = Some(mean);
        self
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Closed-form mean when this pmf was realized from a family.
    pub fn exact_mean(&self) -> Option<f64> {
        self.exact_mean
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// First stored support index.
    pub fn first_index(&self) -> usize {
        self.offset
    }

    /// Last stored support index.
    pub fn last_index(&self) -> usize {
        self.offset + self.weights.len() - 1
    }

    /// Weight at an absolute index (0 outside the stored window).
    #[inline]
    pub fn weight_at(&self, index: usize) -> f64 {
        if index < self.offset {
            return 0.0;
        }
        self.weights.get(index - self.offset).copied().unwrap_or(0.0)
    }

    pub fn stored_sum(&self) -> f64 {
        crate::numeric::compensated_sum(self.weights.iter().copied())
    }

    /// First interior index whose weight is a support hole, if any.
    ///
    /// A hole is a weight at or below `zero_tol` relative to its smaller
    /// neighbor. Genuine tail weights decay smoothly and never trip this,
    /// however small they get in extended windows; explicit zeros and
    /// collapsed cells do.
    pub fn interior_hole_index(&self, zero_tol: f64) -> Option<usize> {
        for i in 1..self.weights.len().saturating_sub(1) {
            let neighbor = self.weights[i - 1].min(self.weights[i + 1]);
            if self.weights[i] <= zero_tol * neighbor {
                return Some(self.offset + i);
            }
        }
        None
    }

    /// True iff the trimmed window has no interior support hole.
    pub fn support_is_interval(&self, zero_tol: f64) -> bool {
        self.interior_hole_index(zero_tol).is_none()
    }

    /// Drop stored indices beyond `last_index`, folding the removed mass into
    /// the tail bound. Used to fit a truncated minorant inside a finite
    /// majorant's window.
    pub fn crop_to(&self, last_index: usize) -> Result<Self> {
        if last_index >= self.last_index() {
            return Ok(self.clone());
        }
        if last_index < self.offset {
            return Err(Error::InvalidPmf(
                "crop would remove the entire stored support".into(),
            ));
        }
        let keep = last_index - self.offset + 1;
        let removed =
            crate::numeric::compensated_sum(self.weights[keep..].iter().copied());
        let weights = self.weights[..keep].to_vec();
        Self::from_parts(
            self.offset,
            weights,
            (self.tail_bound + removed).min(1.0),
            self.label.clone(),
            self.exact_mean,
        )
    }

    /// Pointwise agreement within `tol` over the union of stored windows.
    pub fn approx_eq(&self, other: &Pmf, tol: f64) -> bool {
        let lo = self.first_index().min(other.first_index());
        let hi = self.last_index().max(other.last_index());
        (lo..=hi).all(|i| (self.weight_at(i) - other.weight_at(i)).abs() <= tol)
    }

    /// Canonical JSON form: an explicit spec with the tail bound included.
    pub fn to_spec(&self) -> DistSpec {
        DistSpec::Explicit {
            offset: self.offset,
            weights: self.weights.clone(),
            tail_bound: Some(self.tail_bound),
            label: self.label.clone(),
        }
    }
}

/// Mean of a stored pmf with a rigorous-under-heuristic error interval and
/// the exact family mean when one is attached.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanValue {
    pub value: f64,
    pub error_bound: f64,
    pub exact: Option<f64>,
}

/// Σ (offset + i) · w_i with an error interval of width
/// `tail_bound · (last_index + tail-length heuristic)`.
pub fn mean(f: &Pmf) -> MeanValue {
    let mut acc = NeumaierSum::new();
    for (i, w) in f.weights.iter().enumerate() {
        acc.add(((f.offset + i) as f64) * w);
    }
    let value = acc.total();
    let tail_term = f.tail_bound * (f.last_index() as f64 + TAIL_LENGTH_HEURISTIC);
    let error_bound = tail_term + crate::numeric::rounding_slack(f.len(), value);
    MeanValue {
        value,
        error_bound,
        exact: f.exact_mean,
    }
}

/// Exact discrete convolution of stored weights; offsets add and tail bounds
/// accumulate. Each output cell is a compensated sum.
pub fn convolve(f: &Pmf, g: &Pmf) -> Pmf {
    let n = f.len() + g.len() - 1;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let lo = (k + 1).saturating_sub(g.len());
        let hi = (k + 1).min(f.len());
        let mut acc = NeumaierSum::new();
        for i in lo..hi {
            acc.add(f.weights[i] * g.weights[k - i]);
        }
        out.push(acc.total().max(0.0));
    }
    let exact_mean = match (f.exact_mean, g.exact_mean) {
        (Some(a), Some(b)) => Some(a + b),
        _ => None,
    };
    Pmf::from_parts(
        f.offset + g.offset,
        out,
        (f.tail_bound + g.tail_bound).min(1.0),
        None,
        exact_mean,
    )
    .expect("convolution of valid pmfs is valid")
}

/// Pmf of a sum of independent, non-identical Bernoulli variables.
pub fn bernoulli_sum(ps: &[f64]) -> Result<Pmf> {
    if ps.is_empty() {
        return Err(Error::EmptyInput("bernoulli_sum needs at least one p"));
    }
    for &p in ps {
        check_open_unit("p", p)?;
    }
    let mut acc = FamilySpec::Bernoulli { p: ps[0] }.realize(DEFAULT_EPS_TRUNC)?;
    for &p in &ps[1..] {
        let b = FamilySpec::Bernoulli { p }.realize(DEFAULT_EPS_TRUNC)?;
        acc = convolve(&acc, &b);
    }
    let mean = crate::numeric::compensated_sum(ps.iter().copied());
    Ok(acc
        .with_exact_mean(mean)
        .with_label(format!("bernoulli_sum(n={})", ps.len())))
}

/// Pmf of a sum of independent geometric variables, each truncated at an
/// equal share of the budget so the total tail bound stays ≤ `eps`.
pub fn geometric_sum(rs: &[f64], eps: f64) -> Result<Pmf> {
    if rs.is_empty() {
        return Err(Error::EmptyInput("geometric_sum needs at least one r"));
    }
    check_eps(eps)?;
    let share = eps / rs.len() as f64;
    let mut acc = FamilySpec::Geometric { p: rs[0] }.realize(share)?;
    for &r in &rs[1..] {
        let g = FamilySpec::Geometric { p: r }.realize(share)?;
        acc = convolve(&acc, &g);
    }
    let mean = crate::numeric::compensated_sum(rs.iter().map(|r| (1.0 - r) / r));
    Ok(acc
        .with_exact_mean(mean)
        .with_label(format!("geometric_sum(n={})", rs.len())))
}

/// Outcome of a mean-matching tilt solve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TiltSolve {
    pub theta: f64,
    pub iterations: u32,
    pub residual: f64,
}

struct TiltStats {
    mean: f64,
    variance: f64,
    log_z: f64,
}

fn tilt_stats(xs: &[f64], logw: &[f64], theta: f64) -> TiltStats {
    let shift = xs
        .iter()
        .zip(logw)
        .map(|(x, lw)| lw + theta * x)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut z = NeumaierSum::new();
    let mut m1 = NeumaierSum::new();
    let mut m2 = NeumaierSum::new();
    for (x, lw) in xs.iter().zip(logw) {
        let e = (lw + theta * x - shift).exp();
        z.add(e);
        m1.add(x * e);
        m2.add(x * x * e);
    }
    let z = z.total();
    let mean = m1.total() / z;
    let variance = (m2.total() / z - mean * mean).max(0.0);
    TiltStats {
        mean,
        variance,
        log_z: shift + z.ln(),
    }
}

/// Reweight `f` by exp(θ·i) with θ chosen so the tilted mean equals `mu`.
///
/// The tilted mean is strictly increasing in θ, so a bracket always exists;
/// the solve is Newton (derivative = tilted variance) safeguarded by
/// bisection inside an expanding bracket.
///
/// The returned tail bound scales the input's by exp(θ·(K+1))/Z, which is the
/// exact worst case for θ ≤ 0 and models the truncated mass as sitting just
/// past the stored window for θ > 0.
pub fn tilt_to_mean(f: &Pmf, mu: f64) -> Result<(Pmf, TiltSolve)> {
    let xs: Vec<f64> = (0..f.len()).map(|i| (f.offset + i) as f64).collect();
    let logw: Vec<f64> = f.weights.iter().map(|w| w.ln()).collect();

    let base = tilt_stats(&xs, &logw, 0.0);
    if (base.mean - mu).abs() <= MEAN_SOLVE_TARGET {
        return Ok((
            f.clone(),
            TiltSolve {
                theta: 0.0,
                iterations: 0,
                residual: base.mean - mu,
            },
        ));
    }

    let lo = f.first_index() as f64;
    let hi = f.last_index() as f64;
    if !(mu > lo && mu < hi) {
        return Err(Error::MeanOutOfHull {
            target: mu,
            lo,
            hi,
        });
    }

    // Expand a bracket [t_lo, t_hi] with mean(t_lo) < mu < mean(t_hi).
    let mut t_lo = 0.0;
    let mut t_hi = 0.0;
    let mut step = 1.0 / (hi - lo);
    if base.mean < mu {
        t_hi = step;
        while tilt_stats(&xs, &logw, t_hi).mean < mu {
            t_lo = t_hi;
            step *= 2.0;
            t_hi += step;
            if !t_hi.is_finite() {
                return Err(Error::TiltDidNotConverge { residual: f64::NAN });
            }
        }
    } else {
        t_lo = -step;
        while tilt_stats(&xs, &logw, t_lo).mean > mu {
            t_hi = t_lo;
            step *= 2.0;
            t_lo -= step;
            if !t_lo.is_finite() {
                return Err(Error::TiltDidNotConverge { residual: f64::NAN });
            }
        }
    }

    let mut theta = 0.5 * (t_lo + t_hi);
    let mut stats = tilt_stats(&xs, &logw, theta);
    let mut iterations = 0u32;
    while (stats.mean - mu).abs() > MEAN_SOLVE_TARGET && iterations < 200 {
        if stats.mean < mu {
            t_lo = theta;
        } else {
            t_hi = theta;
        }
        let newton = if stats.variance > 0.0 {
            theta - (stats.mean - mu) / stats.variance
        } else {
            f64::NAN
        };
        theta = if newton.is_finite() && newton > t_lo && newton < t_hi {
            newton
        } else {
            0.5 * (t_lo + t_hi)
        };
        stats = tilt_stats(&xs, &logw, theta);
        iterations += 1;
    }
    let residual = stats.mean - mu;
    if residual.abs() > MEAN_MATCH_TOL {
        return Err(Error::TiltDidNotConverge { residual });
    }

    let weights: Vec<f64> = xs
        .iter()
        .zip(&logw)
        .map(|(x, lw)| (lw + theta * x - stats.log_z).exp())
        .collect();
    let tail = if f.tail_bound > 0.0 {
        (f.tail_bound.ln() + theta * (hi + 1.0) - stats.log_z).exp().min(1.0)
    } else {
        0.0
    };
    let tilted = Pmf::from_parts(f.offset, weights, tail, f.label.clone(), None)?;
    Ok((
        tilted,
        TiltSolve {
            theta,
            iterations,
            residual,
        },
    ))
}

/// Options for [`random_lc_minorant_opts`].
#[derive(Debug, Clone, Copy, Default)]
pub struct MinorantOptions {
    /// Keep the full support of `g` instead of drawing a random subinterval.
    /// Full-support draws make reverse-direction divergences finite.
    pub full_support: bool,
}

/// Draw a random pmf `f` with `f ≤_lc g` and `E(f) = E(g)`, deterministically
/// from `seed`.
///
/// Construction: a concave sequence over a random subinterval of the support
/// is added to log g, the result is normalized and then tilted back to the
/// mean of `g`. The added term stays concave after the linear tilt, so the
/// order relation holds by construction.
pub fn random_lc_minorant(g: &Pmf, seed: u64) -> Result<Pmf> {
    random_lc_minorant_opts(g, seed, MinorantOptions::default())
}

pub fn random_lc_minorant_opts(g: &Pmf, seed: u64, opts: MinorantOptions) -> Result<Pmf> {
    if g.len() < 2 {
        return Ok(g.clone());
    }
    if !g.support_is_interval(ZERO_SUPPORT_TOL) {
        return Err(Error::InvalidPmf(
            "minorant generation requires interval support".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if rng.gen_range(0..32) == 0 {
        // Occasional exact copy keeps the equality case exercised.
        return Ok(g.clone());
    }
    let m = mean(g).value;
    let first = g.first_index();
    let last = g.last_index();

    let (a, b) = if opts.full_support {
        (first, last)
    } else {
        // Strictly bracket the target mean so the tilt stays solvable.
        let below = if m.fract() == 0.0 { m as usize - 1 } else { m.floor() as usize };
        let above = if m.fract() == 0.0 { m as usize + 1 } else { m.ceil() as usize };
        let a = rng.gen_range(first..=below.max(first));
        let b = rng.gen_range(above.min(last)..=last);
        (a, b)
    };

    let span = b - a + 1;
    let s0: f64 = rng.gen_range(-0.6..0.6);
    let budget: f64 = rng.gen_range(0.0..1.5);
    let raw: Vec<f64> = (0..span.saturating_sub(1))
        .map(|_| rng.gen_range(0.0..1.0))
        .collect();
    let total: f64 = raw.iter().sum();

    let mut c = Vec::with_capacity(span);
    c.push(0.0);
    let mut cum = 0.0;
    for r in &raw {
        cum += r;
        let slope = if total > 0.0 {
            s0 - budget * cum / total
        } else {
            s0
        };
        let prev = *c.last().unwrap();
        c.push(prev + slope);
    }

    let raw_weights: Vec<f64> = (a..=b)
        .map(|i| {
            let lw = g.weight_at(i).ln() + c[i - a];
            lw.exp()
        })
        .collect();
    // Guard against exp underflow wiping out the window scale.
    let peak = raw_weights.iter().cloned().fold(0.0f64, f64::max);
    let scaled: Vec<f64> = raw_weights.iter().map(|w| w / peak).collect();
    let f0 = Pmf::from_unnormalized(a, scaled)?;
    let (f, _) = tilt_to_mean(&f0, m)?;
    Ok(f)
}

/// Draw a random pmf `f` with `base ≤_lc f`, deterministically from `seed`.
///
/// Only Poisson and negative binomial bases are supported. A convex sequence
/// `v` with slopes rising from -d to a capped final slope `u` is added to the
/// base's log-weights; beyond the base's truncation point `v` continues
/// linearly, so the tail of the perturbed object is exactly a tilted copy of
/// the base family and its mass (and hence the stored tail bound and the
/// normalizer) is computable in closed form.
pub fn convex_majorant(
    base: &FamilySpec,
    eps: f64,
    min_last: usize,
    seed: u64,
) -> Result<Pmf> {
    base.validate()?;
    check_eps(eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (slope_cap, tilted_of): (f64, Box<dyn Fn(f64) -> (FamilySpec, f64)>) = match *base {
        FamilySpec::Poisson { lambda } => (
            0.5,
            Box::new(move |u: f64| {
                let tilted = FamilySpec::Poisson {
                    lambda: lambda * u.exp(),
                };
                // sum_i po(lambda)_i e^{u i} = e^{lambda(e^u - 1)}
                (tilted, lambda * (u.exp() - 1.0))
            }),
        ),
        FamilySpec::Negbinomial { n, r } => {
            let cap = 0.6 * (-(1.0 - r).ln());
            (
                cap.min(0.6),
                Box::new(move |u: f64| {
                    let r_t = 1.0 - (1.0 - r) * u.exp();
                    let tilted = FamilySpec::Negbinomial { n, r: r_t };
                    // sum_i nb(n,r)_i e^{u i} = (r / r_t)^n
                    (tilted, n * (r.ln() - r_t.ln()))
                }),
            )
        }
        _ => {
            return Err(Error::InvalidParameter(
                "convex majorants are generated over poisson or negbinomial bases".into(),
            ))
        }
    };

    let j = base.realize(eps)?.last_index();
    let u: f64 = rng.gen_range(0.05 * slope_cap..slope_cap);
    let d: f64 = rng.gen_range(0.05..0.5);

    // Non-decreasing slopes from -d up to u over [0, j].
    let raw: Vec<f64> = (0..j).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let mut v = Vec::with_capacity(j + 1);
    v.push(0.0);
    let mut cum = 0.0;
    for r in &raw {
        cum += r;
        let slope = -d + (u + d) * cum / total;
        let prev = *v.last().unwrap();
        v.push(prev + slope);
    }

    let v_at = |i: usize| -> f64 {
        if i <= j {
            v[i]
        } else {
            v[j] + u * (i - j) as f64
        }
    };

    let (tilted, ln_tilt_norm) = tilted_of(u);
    // Mass of the unnormalized tail beyond k: e^{v_j - u j} * sum_{i>k} base_i e^{u i}.
    let ln_tail_scale = v[j] - u * j as f64 + ln_tilt_norm;
    let tail_w = |k: usize| -> Option<f64> {
        tilted
            .upper_tail_bound(k)
            .map(|t| (ln_tail_scale + t.ln()).exp())
    };

    let mut lnw = Vec::with_capacity(j.max(min_last) + 1);
    let mut k = 0usize;
    lnw.push(base.log_pmf(0) + v_at(0));
    let tail_raw = loop {
        while lnw.len() <= k + 1 {
            let i = lnw.len();
            lnw.push(base.log_pmf(i) + v_at(i));
        }
        if k >= min_last && k >= j {
            if let Some(t) = tail_w(k) {
                let shift = lnw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let partial: f64 = lnw[..=k].iter().map(|lw| (lw - shift).exp()).sum();
                if t <= eps * partial * shift.exp() {
                    break t;
                }
            }
        }
        k += 1;
        if k > MAX_REALIZE_LEN {
            return Err(Error::InvalidParameter(
                "convex majorant tail did not close".into(),
            ));
        }
    };

    let shift = lnw[..=k].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = NeumaierSum::new();
    for lw in &lnw[..=k] {
        z.add((lw - shift).exp());
    }
    let ln_z = shift + (z.total() + tail_raw * (-shift).exp()).ln();
    let weights: Vec<f64> = lnw[..=k].iter().map(|lw| (lw - ln_z).exp()).collect();
    let tail = (tail_raw.ln() - ln_z).exp();
    Pmf::from_parts(0, weights, tail, Some(format!("majorant({base})")), None)
}

/// JSON distribution spec accepted by the library surface and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    Bernoulli { p: f64 },
    Binomial { n: u32, p: f64 },
    Poisson { lambda: f64 },
    Geometric { p: f64 },
    Negbinomial { n: f64, r: f64 },
    BernoulliSum { ps: Vec<f64> },
    GeometricSum { rs: Vec<f64> },
    Explicit {
        #[serde(default)]
        offset: usize,
        weights: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_bound: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

impl DistSpec {
    /// Materialize the spec. Explicit weights are normalized unless a tail
    /// bound is supplied, in which case they are taken as stored.
    pub fn realize(&self, eps: f64) -> Result<Pmf> {
        match self {
            DistSpec::Bernoulli { p } => FamilySpec::Bernoulli { p: *p }.realize(eps),
            DistSpec::Binomial { n, p } => FamilySpec::Binomial { n: *n, p: *p }.realize(eps),
            DistSpec::Poisson { lambda } => {
                FamilySpec::Poisson { lambda: *lambda }.realize(eps)
            }
            DistSpec::Geometric { p } => FamilySpec::Geometric { p: *p }.realize(eps),
            DistSpec::Negbinomial { n, r } => {
                FamilySpec::Negbinomial { n: *n, r: *r }.realize(eps)
            }
            DistSpec::BernoulliSum { ps } => bernoulli_sum(ps),
            DistSpec::GeometricSum { rs } => geometric_sum(rs, eps),
            DistSpec::Explicit {
                offset,
                weights,
                tail_bound,
                label,
            } => {
                let pmf = match tail_bound {
                    Some(t) => Pmf::new(*offset, weights.clone(), *t)?,
                    None => Pmf::from_unnormalized(*offset, weights.clone())?,
                };
                Ok(match label {
                    Some(l) => pmf.with_label(l.clone()),
                    None => pmf,
                })
            }
        }
    }

    /// Family form when the spec is one of the five standard families.
    pub fn family(&self) -> Option<FamilySpec> {
        match *self {
            DistSpec::Bernoulli { p } => Some(FamilySpec::Bernoulli { p }),
            DistSpec::Binomial { n, p } => Some(FamilySpec::Binomial { n, p }),
            DistSpec::Poisson { lambda } => Some(FamilySpec::Poisson { lambda }),
            DistSpec::Geometric { p } => Some(FamilySpec::Geometric { p }),
            DistSpec::Negbinomial { n, r } => Some(FamilySpec::Negbinomial { n, r }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn poisson_series_oracle(lambda: f64, upto: usize) -> Vec<f64> {
        // Direct term-by-term series, independent of the ratio recurrence.
        let mut out = Vec::with_capacity(upto + 1);
        let mut term = (-lambda).exp();
        out.push(term);
        for i in 1..=upto {
            term *= lambda / i as f64;
            out.push(term);
        }
        out
    }

    #[test]
    fn realize_binomial_two_point() {
        let f = FamilySpec::Binomial { n: 1, p: 0.5 }.realize(1e-12).unwrap();
        assert_eq!(f.offset(), 0);
        assert_eq!(f.tail_bound(), 0.0);
        assert_abs_diff_eq!(f.weights()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.weights()[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn realize_binomial_squares() {
        let f = FamilySpec::Binomial { n: 2, p: 0.5 }.realize(1e-12).unwrap();
        let expect = [0.25, 0.5, 0.25];
        for (w, e) in f.weights().iter().zip(expect) {
            assert_abs_diff_eq!(*w, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn realize_poisson_matches_series_oracle() {
        let f = FamilySpec::Poisson { lambda: 1.0 }.realize(1e-12).unwrap();
        let oracle = poisson_series_oracle(1.0, 60);
        assert!(f.tail_bound() <= 1e-12);
        for (i, w) in f.weights().iter().enumerate() {
            assert_abs_diff_eq!(*w, oracle[i], epsilon = 1e-15);
        }
        // The cut is at the smallest index whose certified tail is <= eps:
        // one index earlier the bound must exceed the budget.
        let spec = FamilySpec::Poisson { lambda: 1.0 };
        let at_cut = spec.upper_tail_bound(f.last_index()).unwrap();
        let before_cut = spec.upper_tail_bound(f.last_index() - 1).unwrap();
        assert!(at_cut <= 1e-12 && before_cut > 1e-12);
    }

    #[test]
    fn realize_rejects_bad_parameters() {
        assert!(FamilySpec::Binomial { n: 0, p: 0.5 }.realize(1e-12).is_err());
        assert!(FamilySpec::Poisson { lambda: -1.0 }.realize(1e-12).is_err());
        assert!(FamilySpec::Geometric { p: 1.0 }.realize(1e-12).is_err());
        assert!(FamilySpec::Poisson { lambda: 1.0 }.realize(1e-3).is_err());
    }

    #[test]
    fn mean_of_binomial_is_np() {
        let f = FamilySpec::Binomial { n: 4, p: 0.25 }.realize(1e-12).unwrap();
        let m = mean(&f);
        assert_abs_diff_eq!(m.value, 1.0, epsilon = 1e-13);
        assert_eq!(m.exact, Some(1.0));
    }

    #[test]
    fn mean_of_point_mass() {
        let m = mean(&Pmf::delta(3));
        assert_eq!(m.value, 3.0);
        assert!(m.error_bound < 1e-12);
    }

    #[test]
    fn mean_of_truncated_poisson_within_interval() {
        let f = FamilySpec::Poisson { lambda: 2.5 }.realize(1e-12).unwrap();
        let m = mean(&f);
        assert!((m.value - 2.5).abs() <= m.error_bound + 1e-12);
    }

    #[test]
    fn convolve_with_delta_is_identity() {
        let f = FamilySpec::Binomial { n: 3, p: 0.3 }.realize(1e-12).unwrap();
        let c = convolve(&Pmf::delta(0), &f);
        assert!(c.approx_eq(&f, 1e-15));
    }

    #[test]
    fn convolving_bernoullis_gives_binomial() {
        let b = FamilySpec::Bernoulli { p: 0.5 }.realize(1e-12).unwrap();
        let c = convolve(&b, &b);
        let bi = FamilySpec::Binomial { n: 2, p: 0.5 }.realize(1e-12).unwrap();
        assert!(c.approx_eq(&bi, 1e-14));
    }

    #[test]
    fn negbinomial_convolution_matches_closed_form() {
        let eps = 1e-13;
        let a = FamilySpec::Negbinomial { n: 1.5, r: 0.4 }.realize(eps).unwrap();
        let b = FamilySpec::Negbinomial { n: 0.7, r: 0.4 }.realize(eps).unwrap();
        let c = convolve(&a, &b);
        // Oracle: direct log-gamma evaluation of the closed-form pmf.
        let spec = FamilySpec::Negbinomial { n: 2.2, r: 0.4 };
        for i in 0..=c.last_index().min(60) {
            let exact = spec.log_pmf(i).exp();
            assert!(
                (c.weight_at(i) - exact).abs() <= 1e-10 + c.tail_bound(),
                "index {i}: {} vs {exact}",
                c.weight_at(i)
            );
        }
    }

    #[test]
    fn bernoulli_sum_small_cases() {
        let f = bernoulli_sum(&[0.5, 0.5]).unwrap();
        let expect = [0.25, 0.5, 0.25];
        for (w, e) in f.weights().iter().zip(expect) {
            assert_abs_diff_eq!(*w, e, epsilon = 1e-14);
        }
        assert!(bernoulli_sum(&[]).is_err());
    }

    #[test]
    fn bernoulli_sum_equal_ps_is_binomial() {
        let ps = vec![0.3; 7];
        let f = bernoulli_sum(&ps).unwrap();
        let bi = FamilySpec::Binomial { n: 7, p: 0.3 }.realize(1e-12).unwrap();
        assert!(f.approx_eq(&bi, 1e-12));
    }

    /// Exhaustive 2^n outcome enumeration, the independent route for
    /// Bernoulli-sum weights.
    pub(crate) fn enumeration_oracle(ps: &[f64]) -> Vec<f64> {
        let n = ps.len();
        let mut out = vec![0.0; n + 1];
        for mask in 0u32..(1 << n) {
            let mut prob = 1.0;
            let mut ones = 0usize;
            for (i, p) in ps.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    prob *= p;
                    ones += 1;
                } else {
                    prob *= 1.0 - p;
                }
            }
            out[ones] += prob;
        }
        out
    }

    #[test]
    fn bernoulli_sum_matches_enumeration() {
        let ps = [0.1, 0.2, 0.3];
        let f = bernoulli_sum(&ps).unwrap();
        for (i, e) in enumeration_oracle(&ps).iter().enumerate() {
            assert_abs_diff_eq!(f.weight_at(i), *e, epsilon = 1e-14);
        }
    }

    #[test]
    fn geometric_sum_single_matches_family() {
        let f = geometric_sum(&[0.4], 1e-12).unwrap();
        let g = FamilySpec::Geometric { p: 0.4 }.realize(1e-12).unwrap();
        assert!(f.approx_eq(&g, 1e-14));
    }

    #[test]
    fn geometric_sum_pair_matches_negbinomial() {
        let f = geometric_sum(&[0.4, 0.4], 1e-12).unwrap();
        let nb = FamilySpec::Negbinomial { n: 2.0, r: 0.4 }.realize(1e-12).unwrap();
        assert!(f.approx_eq(&nb, 1e-10 + f.tail_bound() + nb.tail_bound()));
    }

    #[test]
    fn geometric_sum_distinct_rates_matches_partial_fractions() {
        let (r1, r2) = (0.3, 0.6);
        let f = geometric_sum(&[r1, r2], 1e-12).unwrap();
        let (q1, q2) = (1.0 - r1, 1.0 - r2);
        for i in 0..=40usize {
            let exact = r1 * r2 * (q1.powi(i as i32 + 1) - q2.powi(i as i32 + 1)) / (q1 - q2);
            assert!((f.weight_at(i) - exact).abs() < 1e-12, "index {i}");
        }
    }

    #[test]
    fn tilt_fixed_point() {
        let f = FamilySpec::Binomial { n: 5, p: 0.37 }.realize(1e-12).unwrap();
        let m = mean(&f).value;
        let (g, solve) = tilt_to_mean(&f, m).unwrap();
        assert_eq!(solve.theta, 0.0);
        assert!(g.approx_eq(&f, 0.0));
    }

    #[test]
    fn tilted_binomial_is_binomial() {
        let f = FamilySpec::Binomial { n: 2, p: 0.5 }.realize(1e-12).unwrap();
        let (g, _) = tilt_to_mean(&f, 1.2).unwrap();
        let expect = FamilySpec::Binomial { n: 2, p: 0.6 }.realize(1e-12).unwrap();
        assert!(g.approx_eq(&expect, 1e-11));
    }

    #[test]
    fn tilted_poisson_is_poisson() {
        let f = FamilySpec::Poisson { lambda: 1.0 }.realize(1e-12).unwrap();
        let (g, _) = tilt_to_mean(&f, 2.0).unwrap();
        let expect = FamilySpec::Poisson { lambda: 2.0 }
            .realize_to(1e-12, g.last_index())
            .unwrap();
        // Agreement is limited by the truncation of the base at lambda = 1:
        // the tilted normalizer misses the shifted family's tail mass.
        for i in 0..=g.last_index().min(12) {
            assert!((g.weight_at(i) - expect.weight_at(i)).abs() < 1e-7, "index {i}");
        }
        assert_abs_diff_eq!(mean(&g).value, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn tilt_rejects_mean_outside_hull() {
        let f = FamilySpec::Binomial { n: 2, p: 0.5 }.realize(1e-12).unwrap();
        assert!(matches!(
            tilt_to_mean(&f, 2.5),
            Err(Error::MeanOutOfHull { .. })
        ));
        assert!(tilt_to_mean(&f, 0.0).is_err());
    }

    #[test]
    fn minorant_matches_mean_and_is_deterministic() {
        let g = FamilySpec::Binomial { n: 8, p: 0.4 }.realize(1e-12).unwrap();
        let m = mean(&g).value;
        for seed in 0..40u64 {
            let f = random_lc_minorant(&g, seed).unwrap();
            assert!((mean(&f).value - m).abs() <= MEAN_MATCH_TOL);
            let f2 = random_lc_minorant(&g, seed).unwrap();
            assert_eq!(f.weights(), f2.weights());
        }
    }

    #[test]
    fn minorant_of_point_mass_is_identity() {
        let g = Pmf::delta(4);
        let f = random_lc_minorant(&g, 7).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn crop_accumulates_tail() {
        let g = FamilySpec::Poisson { lambda: 3.0 }.realize(1e-12).unwrap();
        let cropped = g.crop_to(10).unwrap();
        assert_eq!(cropped.last_index(), 10);
        assert!(cropped.tail_bound() > g.tail_bound());
        let removed: f64 = (11..=g.last_index()).map(|i| g.weight_at(i)).sum();
        assert!((cropped.tail_bound() - g.tail_bound() - removed).abs() < 1e-15);
    }

    #[test]
    fn trimming_is_canonical() {
        let f = Pmf::new(2, vec![0.0, 0.5, 0.5, 0.0], 0.0).unwrap();
        assert_eq!(f.offset(), 3);
        assert_eq!(f.len(), 2);
    }

    #[test]
    fn invalid_pmfs_are_rejected() {
        assert!(Pmf::new(0, vec![0.5, -0.1, 0.6], 0.0).is_err());
        assert!(Pmf::new(0, vec![0.4, 0.4], 0.0).is_err()); // mass deficit, no tail
        assert!(Pmf::new(0, vec![], 0.0).is_err());
    }

    #[test]
    fn dist_spec_round_trips_canonical_form() {
        let f = FamilySpec::Poisson { lambda: 2.0 }.realize(1e-12).unwrap();
        let json = serde_json::to_string(&f.to_spec()).unwrap();
        let back: DistSpec = serde_json::from_str(&json).unwrap();
        let g = back.realize(1e-12).unwrap();
        assert!(f.approx_eq(&g, 0.0));
        assert_eq!(f.tail_bound(), g.tail_bound());
    }
}
