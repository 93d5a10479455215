//! Grid-based densities on (0, ∞): gamma pdfs, weighted gamma sums via
//! numerical convolution, differential entropy, continuous relative entropy,
//! and the continuous version of the log-concavity order.
//!
//! Grids are log-spaced (densities here vary over many decades) with
//! composite Simpson quadrature applied in the log coordinate. Quadrature
//! error estimates come from the Simpson/trapezoid discrepancy; window
//! truncation is tracked exactly through the gamma cdf.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use statrs::distribution::ContinuousCDF;

use crate::divergence::DivergenceValue;
use crate::inequalities::{Tolerances, Verdict, VerdictStatus};
use crate::lc::{FailureKind, LcReport};
use crate::numeric::{ln_gamma, NeumaierSum};
use crate::{Error, Result};

/// Grid resolution and default window mass for continuous work.
#[derive(Debug, Clone, Copy)]
pub struct GridConfig {
    /// Mass allowed outside the window on each side.
    pub eps_tail: f64,
    /// Output nodes per grid (forced odd for Simpson).
    pub nodes: usize,
    /// Nodes per half of each convolution integral (forced odd).
    pub inner_nodes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            eps_tail: 1e-8,
            nodes: 4097,
            inner_nodes: 401,
        }
    }
}

fn force_odd(n: usize) -> usize {
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

/// Integration slack accepted when validating grid normalization.
const GRID_NORM_SLACK: f64 = 1e-5;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GammaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl GammaParams {
    fn log_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        -self.alpha * self.beta.ln() - ln_gamma(self.alpha) + (self.alpha - 1.0) * x.ln()
            - x / self.beta
    }

    fn dist(&self) -> statrs::distribution::Gamma {
        statrs::distribution::Gamma::new(self.alpha, 1.0 / self.beta)
            .expect("validated gamma parameters")
    }
}

/// A density tabulated on a log-spaced grid over a positive window, with
/// Simpson quadrature weights and the mass outside the window tracked as a
/// tail bound. Gamma pdfs keep their parameters attached so downstream
/// checks can evaluate them exactly off-grid.
#[derive(Debug, Clone)]
pub struct GridPdf {
    lo: f64,
    hi: f64,
    t0: f64,
    dt: f64,
    nodes: Vec<f64>,
    density: Vec<f64>,
    log_density: Vec<f64>,
    quad: Vec<f64>,
    tail_bound: f64,
    /// Largest abscissa below which stored values are free of
    /// window-truncation contamination. Directly constructed pdfs are clean
    /// over their whole window; convolution shrinks this to
    /// min(f.safe_hi + g.lo, g.safe_hi + f.lo), because cells beyond that
    /// point lose integrand paths to the factors' truncated upper tails.
    safe_hi: f64,
    analytic: Option<GammaParams>,
}

impl GridPdf {
    fn from_log_density(
        lo: f64,
        hi: f64,
        n_nodes: usize,
        tail_bound: f64,
        analytic: Option<GammaParams>,
        mut log_at: impl FnMut(f64) -> f64,
    ) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::InvalidGrid(format!(
                "window [{lo}, {hi}] must satisfy 0 < lo < hi"
            )));
        }
        let n = force_odd(n_nodes.max(5));
        let t0 = lo.ln();
        let dt = (hi.ln() - t0) / (n - 1) as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut density = Vec::with_capacity(n);
        let mut log_density = Vec::with_capacity(n);
        for j in 0..n {
            let x = (t0 + dt * j as f64).exp();
            let l = log_at(x);
            nodes.push(x);
            log_density.push(l);
            density.push(if l.is_finite() { l.exp() } else { 0.0 });
        }
        let quad: Vec<f64> = (0..n)
            .map(|j| simpson_coeff(j, n) * dt * nodes[j])
            .collect();
        let grid = GridPdf {
            lo,
            hi,
            t0,
            dt,
            nodes,
            density,
            log_density,
            quad,
            tail_bound,
            safe_hi: hi,
            analytic,
        };
        let mass = grid.integral();
        if mass < 1.0 - tail_bound - GRID_NORM_SLACK || mass > 1.0 + GRID_NORM_SLACK {
            return Err(Error::InvalidGrid(format!(
                "window mass {mass} inconsistent with tail bound {tail_bound}"
            )));
        }
        Ok(grid)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Upper end of the contamination-free region (see the field note).
    pub fn safe_hi(&self) -> f64 {
        self.safe_hi
    }

    pub fn quadrature_name(&self) -> &'static str {
        "simpson-log"
    }

    pub fn analytic_gamma(&self) -> Option<GammaParams> {
        self.analytic
    }

    /// Quadrature of the stored density over the window.
    pub fn integral(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for (w, d) in self.quad.iter().zip(&self.density) {
            acc.add(w * d);
        }
        acc.total()
    }

    /// Quadrature mean over the window.
    pub fn mean(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for ((w, d), x) in self.quad.iter().zip(&self.density).zip(&self.nodes) {
            acc.add(w * d * x);
        }
        acc.total()
    }

    /// Log density at an arbitrary point: exact for analytic members,
    /// log-linear interpolation in the log coordinate otherwise, -inf
    /// outside the window.
    pub fn log_at(&self, x: f64) -> f64 {
        if let Some(g) = self.analytic {
            return g.log_pdf(x);
        }
        if !(x >= self.lo && x <= self.hi) {
            return f64::NEG_INFINITY;
        }
        let t = (x.ln() - self.t0) / self.dt;
        let j = (t.floor() as usize).min(self.nodes.len() - 2);
        let frac = t - j as f64;
        let (a, b) = (self.log_density[j], self.log_density[j + 1]);
        if !a.is_finite() || !b.is_finite() {
            return f64::NEG_INFINITY;
        }
        a + frac * (b - a)
    }

    /// Quadrature of an integrand tabulated against this grid, returning the
    /// Simpson value and a remainder estimate from the Simpson/trapezoid
    /// discrepancy.
    fn integrate_with_estimate(&self, integrand: &[f64]) -> (f64, f64) {
        let n = integrand.len();
        let mut s = NeumaierSum::new();
        let mut t = NeumaierSum::new();
        for (j, v) in integrand.iter().enumerate() {
            let jac = self.dt * self.nodes[j];
            s.add(simpson_coeff(j, n) * jac * v);
            let trap = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            t.add(trap * jac * v);
        }
        let s = s.total();
        (s, (s - t.total()).abs() / 15.0 + 1e-13 * (1.0 + s.abs()))
    }

    /// JSON header describing the grid (the CSV body carries the nodes).
    pub fn header_json(&self) -> serde_json::Value {
        json!({
            "lo": self.lo,
            "hi": self.hi,
            "nodes": self.nodes.len(),
            "quadrature": self.quadrature_name(),
            "tail_bound": self.tail_bound,
        })
    }

    /// CSV of (node, density) rows preceded by the JSON header as a comment.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {}", self.header_json())?;
        writeln!(w, "node,density")?;
        for (x, d) in self.nodes.iter().zip(&self.density) {
            writeln!(w, "{x},{d}")?;
        }
        Ok(())
    }
}

fn simpson_coeff(j: usize, n: usize) -> f64 {
    debug_assert!(n % 2 == 1);
    if j == 0 || j == n - 1 {
        1.0 / 3.0
    } else if j % 2 == 1 {
        4.0 / 3.0
    } else {
        2.0 / 3.0
    }
}

fn check_gamma_params(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma parameters must be positive, got alpha {alpha}, beta {beta}"
        )));
    }
    Ok(())
}

/// Gamma(α, β) on its [ε, 1−ε] quantile window; the tail bound is 2ε exactly.
pub fn pdf_gamma(alpha: f64, beta: f64, cfg: &GridConfig) -> Result<GridPdf> {
    check_gamma_params(alpha, beta)?;
    let g = GammaParams { alpha, beta };
    let d = g.dist();
    let lo = d.inverse_cdf(cfg.eps_tail);
    let hi = d.inverse_cdf(1.0 - cfg.eps_tail);
    GridPdf::from_log_density(lo, hi, cfg.nodes, 2.0 * cfg.eps_tail, Some(g), |x| g.log_pdf(x))
}

/// Gamma pdf whose window is widened to cover `[lo, hi]`; the mass outside
/// the final window comes from the exact cdf.
pub fn pdf_gamma_covering(
    alpha: f64,
    beta: f64,
    lo: f64,
    hi: f64,
    cfg: &GridConfig,
) -> Result<GridPdf> {
    check_gamma_params(alpha, beta)?;
    let g = GammaParams { alpha, beta };
    let d = g.dist();
    let w_lo = d.inverse_cdf(cfg.eps_tail).min(lo);
    let w_hi = d.inverse_cdf(1.0 - cfg.eps_tail).max(hi);
    let tail = d.cdf(w_lo) + (1.0 - d.cdf(w_hi));
    GridPdf::from_log_density(w_lo, w_hi, cfg.nodes, tail, Some(g), |x| g.log_pdf(x))
}

/// Gamma pdf clipped to `[lo, hi] ∩ [q(clip_eps), q(1−clip_eps)]`, again with
/// an exact tail. Used to place an order minorant strictly inside another
/// window.
pub fn pdf_gamma_windowed(
    alpha: f64,
    beta: f64,
    lo: f64,
    hi: f64,
    clip_eps: f64,
    cfg: &GridConfig,
) -> Result<GridPdf> {
    check_gamma_params(alpha, beta)?;
    let g = GammaParams { alpha, beta };
    let d = g.dist();
    let w_lo = d.inverse_cdf(clip_eps).max(lo);
    let w_hi = d.inverse_cdf(1.0 - clip_eps).min(hi);
    if !(w_hi > w_lo) {
        return Err(Error::InvalidGrid(
            "clipped gamma window is empty".into(),
        ));
    }
    let tail = d.cdf(w_lo) + (1.0 - d.cdf(w_hi));
    GridPdf::from_log_density(w_lo, w_hi, cfg.nodes, tail, Some(g), |x| g.log_pdf(x))
}

/// Density of the sum of two independent positive variables by direct
/// quadrature of the convolution integral. Each output point splits the
/// integral at its midpoint and integrates both halves in log coordinates,
/// which tames the endpoint singularities of shape parameters below one.
pub fn convolve_grid(f: &GridPdf, g: &GridPdf, cfg: &GridConfig) -> Result<GridPdf> {
    let lo = f.lo + g.lo;
    let hi = f.hi + g.hi;
    let m = force_odd(cfg.inner_nodes.max(5));

    let half = |a: &GridPdf, b: &GridPdf, x: f64, ya: f64, yb: f64| -> f64 {
        // ∫_{ya}^{yb} a(y) b(x−y) dy in t = ln y
        if !(yb > ya) {
            return 0.0;
        }
        let ta = ya.ln();
        let tb = yb.ln();
        let h = (tb - ta) / (m - 1) as f64;
        let mut acc = NeumaierSum::new();
        for j in 0..m {
            let t = ta + h * j as f64;
            let y = t.exp();
            let l = a.log_at(y) + b.log_at(x - y);
            if l.is_finite() {
                acc.add(simpson_coeff(j, m) * h * y * l.exp());
            }
        }
        acc.total()
    };

    let tail = f.tail_bound + g.tail_bound;
    let mut out = GridPdf::from_log_density(lo, hi, cfg.nodes, tail, None, |x| {
        let ya = f.lo.max(x - g.hi);
        let yb = f.hi.min(x - g.lo);
        if !(yb > ya) {
            return f64::NEG_INFINITY;
        }
        let ym = 0.5 * (ya + yb);
        let v = half(f, g, x, ya, ym) + half(g, f, x, x - yb, x - ym);
        if v > 0.0 {
            v.ln()
        } else {
            f64::NEG_INFINITY
        }
    })?;
    out.safe_hi = (f.safe_hi + g.lo).min(g.safe_hi + f.lo);
    Ok(out)
}

/// Density of Σ β_i · X_i with X_i ~ Gamma(α_i, 1) independent, i.e. the
/// convolution of Gamma(α_i, β_i) pdfs.
pub fn weighted_gamma_sum(alphas: &[f64], betas: &[f64], cfg: &GridConfig) -> Result<GridPdf> {
    if alphas.is_empty() || alphas.len() != betas.len() {
        return Err(Error::InvalidParameter(
            "weighted gamma sum needs matching non-empty shape/scale lists".into(),
        ));
    }
    let mut acc = pdf_gamma(alphas[0], betas[0], cfg)?;
    for (a, b) in alphas.iter().zip(betas).skip(1) {
        let comp = pdf_gamma(*a, *b, cfg)?;
        acc = convolve_grid(&acc, &comp, cfg)?;
    }
    Ok(acc)
}

/// Differential entropy −∫ f log f with a quadrature-remainder plus
/// window-tail error bound.
pub fn differential_entropy(f: &GridPdf) -> DivergenceValue {
    let integrand: Vec<f64> = f
        .density
        .iter()
        .map(|d| if *d > 0.0 { -d * d.ln() } else { 0.0 })
        .collect();
    let (value, quad_err) = f.integrate_with_estimate(&integrand);
    let max_log = f
        .log_density
        .iter()
        .filter(|l| l.is_finite())
        .fold(0.0f64, |m, l| m.max(l.abs()));
    let tail = f.tail_bound;
    let tail_err = if tail > 0.0 {
        tail * (1.0 + (1.0 / tail).ln().max(0.0) + max_log)
    } else {
        0.0
    };
    DivergenceValue::finite(value, quad_err + tail_err)
}

/// Relative entropy ∫ f log(f/g) over f's window; a window escaping g's is a
/// support violation and yields the infinite branch.
pub fn kl_continuous(f: &GridPdf, g: &GridPdf) -> DivergenceValue {
    if f.lo < g.lo * (1.0 - 1e-9) || f.hi > g.hi * (1.0 + 1e-9) {
        return DivergenceValue::infinite();
    }
    let mut max_ratio = 0.0f64;
    let mut integrand = Vec::with_capacity(f.nodes.len());
    for (j, d) in f.density.iter().enumerate() {
        if *d <= 0.0 {
            integrand.push(0.0);
            continue;
        }
        let lg = g.log_at(f.nodes[j]);
        if !lg.is_finite() {
            return DivergenceValue::infinite();
        }
        let l = f.log_density[j] - lg;
        max_ratio = max_ratio.max(l.abs());
        integrand.push(d * l);
    }
    let (value, quad_err) = f.integrate_with_estimate(&integrand);
    let tail_err = |tail: f64| {
        if tail > 0.0 {
            tail * (1.0 + (1.0 / tail).ln().max(0.0) + max_ratio)
        } else {
            0.0
        }
    };
    // linear interpolation of log g contributes curvature-level error when g
    // has no closed form
    let interp_err = if g.analytic.is_none() {
        let mut max_dd = 0.0f64;
        for w in g.log_density.windows(3) {
            if w.iter().all(|l| l.is_finite()) {
                max_dd = max_dd.max((w[2] - 2.0 * w[1] + w[0]).abs());
            }
        }
        max_dd / 8.0
    } else {
        0.0
    };
    DivergenceValue::finite(
        value,
        quad_err + tail_err(f.tail_bound) + tail_err(g.tail_bound) + interp_err,
    )
}

/// Continuous order check on stored windows. See
/// [`lc_le_continuous_strided`]; this is the stride-1 form.
pub fn lc_le_continuous(f: &GridPdf, g: &GridPdf, tol: f64) -> LcReport {
    lc_le_continuous_strided(f, g, tol, 1)
}

/// Decide `f ≤_lc g` for grid pdfs: window containment plus concavity of
/// log(f/g) along the evaluation nodes.
///
/// Concavity is measured as the chord defect of consecutive node triples,
/// which keeps node-level log errors from being amplified by the grid
/// spacing; `stride` widens the triples, trading resolution for robustness
/// on quadrature-built densities.
pub fn lc_le_continuous_strided(f: &GridPdf, g: &GridPdf, tol: f64, stride: usize) -> LcReport {
    if f.lo < g.lo * (1.0 - 1e-9) || f.hi > g.hi * (1.0 + 1e-9) {
        return LcReport {
            verdict: false,
            failure_kind: FailureKind::SupportNotContained,
            witness_index: Some(0),
            margin: 0.0,
        };
    }
    // evaluate along the numeric side's own nodes to avoid interpolating it
    let xs: Vec<f64> = if f.analytic.is_none() {
        f.nodes.clone()
    } else if g.analytic.is_none() {
        g.nodes
            .iter()
            .copied()
            .filter(|x| *x >= f.lo && *x <= f.hi)
            .collect()
    } else {
        f.nodes.clone()
    };
    let stride = stride.max(1);
    let xs: Vec<f64> = xs.iter().copied().step_by(stride).collect();

    let mut logs: Vec<(f64, f64)> = Vec::with_capacity(xs.len());
    for &x in &xs {
        logs.push((x, f.log_at(x) - g.log_at(x)));
    }
    // edge cells of quadrature-built grids can round to zero density;
    // trim non-finite ratios at the ends, fail on interior ones
    let start = logs.iter().position(|(_, l)| l.is_finite());
    let end = logs.iter().rposition(|(_, l)| l.is_finite());
    let (start, end) = match (start, end) {
        (Some(s), Some(e)) if e > s => (s, e),
        _ => {
            return LcReport {
                verdict: false,
                failure_kind: FailureKind::FSupportNotInterval,
                witness_index: Some(0),
                margin: 0.0,
            }
        }
    };
    if logs[start..=end].iter().any(|(_, l)| !l.is_finite()) {
        return LcReport {
            verdict: false,
            failure_kind: FailureKind::FSupportNotInterval,
            witness_index: Some(start),
            margin: 0.0,
        };
    }

    let mut worst = 0.0f64;
    let mut witness = None;
    let mut worst_excess = 0.0f64;
    for k in start + 1..end {
        let (x0, l0) = logs[k - 1];
        let (x1, l1) = logs[k];
        let (x2, l2) = logs[k + 1];
        // chord defect: how far the middle point sits below the chord
        let chord = (l0 * (x2 - x1) + l2 * (x1 - x0)) / (x2 - x0);
        let d = chord - l1;
        let local = tol * (1.0 + l0.abs() + l1.abs() + l2.abs());
        if d > worst {
            worst = d;
        }
        if d > local && d - local > worst_excess {
            worst_excess = d - local;
            witness = Some(k);
        }
    }
    match witness {
        Some(w) => LcReport {
            verdict: false,
            failure_kind: FailureKind::ConcavityViolated,
            witness_index: Some(w),
            margin: worst,
        },
        None => LcReport {
            verdict: true,
            failure_kind: FailureKind::None,
            witness_index: None,
            margin: worst,
        },
    }
}

/// Entropy of Σ β_i X_i, X_i ~ Gamma(α_i, 1) with all α_i ≥ 1, is minimized
/// over mean-preserving scale vectors at the equal-scale configuration.
/// Random mean-matched perturbations must all carry at least the equal-scale
/// entropy.
pub fn check_gamma_minentropy(
    alphas: &[f64],
    betas: &[f64],
    n_perturbations: usize,
    seed: u64,
    cfg: &GridConfig,
    _tol: &Tolerances,
) -> Result<Verdict> {
    if alphas.is_empty() || alphas.len() != betas.len() {
        return Err(Error::InvalidParameter(
            "shape/scale lists must match and be non-empty".into(),
        ));
    }
    for (&a, &b) in alphas.iter().zip(betas) {
        check_gamma_params(a, b)?;
    }
    if alphas.iter().any(|&a| a < 1.0) {
        return Ok(Verdict::inconclusive(
            "requires every shape at least 1",
            json!({"alphas": alphas}),
        ));
    }
    let mu: f64 = alphas.iter().zip(betas).map(|(a, b)| a * b).sum();
    let a_plus: f64 = alphas.iter().sum();
    let b_bar = mu / a_plus;
    // the equal-scale configuration is exactly a gamma
    let h_eq = differential_entropy(&pdf_gamma(a_plus, b_bar, cfg)?);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = DivergenceValue::finite(f64::INFINITY, 0.0);
    let mut violations = 0usize;
    for k in 0..n_perturbations {
        let perturbed: Vec<f64> = if k == 0 {
            betas.to_vec()
        } else {
            let raw: Vec<f64> = betas
                .iter()
                .map(|b| b * rng.gen_range(-0.7f64..0.7).exp())
                .collect();
            let mass: f64 = alphas.iter().zip(&raw).map(|(a, b)| a * b).sum();
            raw.iter().map(|b| b * mu / mass).collect()
        };
        if alphas.len() == 1 {
            // a single summand is the equal-scale configuration already
            continue;
        }
        let h = differential_entropy(&weighted_gamma_sum(alphas, &perturbed, cfg)?);
        if h.value < h_eq.value - (h.error_bound + h_eq.error_bound) {
            violations += 1;
        }
        if h.value < worst.value {
            worst = h;
        }
    }
    let context = json!({
        "check": "gamma_min_entropy",
        "alphas": alphas,
        "perturbations": n_perturbations,
        "violations": violations,
    });
    if !worst.value.is_finite() {
        return Ok(Verdict::compare(
            DivergenceValue::finite(0.0, 0.0),
            DivergenceValue::finite(0.0, 0.0),
            context,
        ));
    }
    let mut v = Verdict::compare(worst, h_eq, context);
    if violations > 0 {
        v.status = VerdictStatus::Violated;
    }
    Ok(v)
}

/// The continuous approximation sweep: for a' ≥ a ≥ α₊ and any scale b,
/// D(f^S | gam(a', b)) ≥ D(f^S | g_a) + D(g_a | gam(a', b)) where g_a is the
/// mean-matched gamma of shape a, and D(f^S | g_a) is non-decreasing in a.
pub fn check_gamma_triangle(
    alphas: &[f64],
    betas: &[f64],
    a_grid: &[f64],
    b_grid: &[f64],
    cfg: &GridConfig,
) -> Result<Vec<Verdict>> {
    if alphas.is_empty() || alphas.len() != betas.len() {
        return Err(Error::InvalidParameter(
            "shape/scale lists must match and be non-empty".into(),
        ));
    }
    let a_plus: f64 = alphas.iter().sum();
    for &a in a_grid {
        if a < a_plus - 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "grid shape {a} below the total shape {a_plus}"
            )));
        }
    }
    let mu: f64 = alphas.iter().zip(betas).map(|(a, b)| a * b).sum();
    let f = weighted_gamma_sum(alphas, betas, cfg)?;

    let mut sorted = a_grid.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let g_of: Vec<GridPdf> = sorted
        .iter()
        .map(|&a| pdf_gamma_covering(a, mu / a, f.lo, f.hi, cfg))
        .collect::<Result<_>>()?;
    let d_of: Vec<DivergenceValue> = g_of.iter().map(|g| kl_continuous(&f, g)).collect();

    let mut verdicts = Vec::new();
    for i in 1..sorted.len() {
        verdicts.push(Verdict::compare(
            d_of[i],
            d_of[i - 1],
            json!({"check": "monotone_in_a", "a_lo": sorted[i-1], "a_hi": sorted[i]}),
        ));
    }
    for (i, &a) in sorted.iter().enumerate() {
        for (j, &a_prime) in sorted.iter().enumerate().skip(i) {
            for &b in b_grid {
                let cover_lo = f.lo.min(g_of[i].lo);
                let cover_hi = f.hi.max(g_of[i].hi);
                let target = pdf_gamma_covering(a_prime, b, cover_lo, cover_hi, cfg)?;
                let lhs = kl_continuous(&f, &target);
                let rhs = d_of[i].add(&kl_continuous(&g_of[i], &target));
                verdicts.push(Verdict::compare(
                    lhs,
                    rhs,
                    json!({"check": "three_term", "a": a, "a_prime": sorted[j], "b": b}),
                ));
            }
        }
    }
    Ok(verdicts)
}

/// Continuous distribution specs accepted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContinuousSpec {
    Gamma { alpha: f64, beta: f64 },
    GammaSum { alphas: Vec<f64>, betas: Vec<f64> },
}

impl ContinuousSpec {
    pub fn realize(&self, cfg: &GridConfig) -> Result<GridPdf> {
        match self {
            ContinuousSpec::Gamma { alpha, beta } => pdf_gamma(*alpha, *beta, cfg),
            ContinuousSpec::GammaSum { alphas, betas } => weighted_gamma_sum(alphas, betas, cfg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::digamma;
    use approx::assert_abs_diff_eq;

    fn cfg() -> GridConfig {
        GridConfig::default()
    }

    fn gamma_entropy_closed(alpha: f64, beta: f64) -> f64 {
        alpha + beta.ln() + ln_gamma(alpha) + (1.0 - alpha) * digamma(alpha)
    }

    fn gamma_kl_closed(a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
        (a1 - a2) * digamma(a1) - ln_gamma(a1) + ln_gamma(a2) + a2 * (b2.ln() - b1.ln())
            + a1 * (b1 - b2) / b2
    }

    #[test]
    fn gamma_one_is_exponential() {
        let f = pdf_gamma(1.0, 2.0, &cfg()).unwrap();
        for &x in f.nodes().iter().step_by(512) {
            let expect = (0.5f64).ln() - x / 2.0;
            assert_abs_diff_eq!(f.log_at(x), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn gamma_pdf_point_value() {
        // shape 2, scale 1 at x = 1: x e^{-x} = e^{-1}
        let f = pdf_gamma(2.0, 1.0, &cfg()).unwrap();
        assert_abs_diff_eq!(f.log_at(1.0), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn gamma_mean_via_quadrature() {
        for (a, b) in [(0.6, 1.0), (2.0, 1.5), (5.0, 0.4)] {
            let f = pdf_gamma(a, b, &cfg()).unwrap();
            let m = f.mean();
            assert!(
                (m - a * b).abs() / (a * b) < 1e-6,
                "mean {m} should be near {}",
                a * b
            );
        }
    }

    #[test]
    fn entropy_matches_closed_form() {
        for (a, b) in [(0.7, 1.3), (1.0, 1.0), (2.0, 1.0), (3.5, 0.8)] {
            let f = pdf_gamma(a, b, &cfg()).unwrap();
            let h = differential_entropy(&f);
            let closed = gamma_entropy_closed(a, b);
            assert!(
                (h.value - closed).abs() < 1e-4,
                "alpha {a} beta {b}: {} vs {closed}",
                h.value
            );
        }
    }

    #[test]
    fn entropy_scale_covariance() {
        let f = pdf_gamma(2.5, 1.0, &cfg()).unwrap();
        let g = pdf_gamma(2.5, 3.0, &cfg()).unwrap();
        let (hf, hg) = (differential_entropy(&f), differential_entropy(&g));
        assert!((hg.value - hf.value - 3.0f64.ln()).abs() < 1e-4);
    }

    #[test]
    fn kl_of_identical_grid_is_zero() {
        let f = pdf_gamma(2.0, 1.0, &cfg()).unwrap();
        let d = kl_continuous(&f, &f);
        assert!(d.finite);
        assert!(d.value.abs() < 1e-12);
    }

    #[test]
    fn kl_matches_closed_form() {
        let f = pdf_gamma(2.0, 1.0, &cfg()).unwrap();
        let g = pdf_gamma_covering(2.0, 2.0, f.lo(), f.hi(), &cfg()).unwrap();
        let d = kl_continuous(&f, &g);
        let closed = gamma_kl_closed(2.0, 1.0, 2.0, 2.0);
        assert!((d.value - closed).abs() < 1e-4, "{} vs {closed}", d.value);
        assert!(d.value >= -d.error_bound);
    }

    #[test]
    fn weighted_sum_single_is_gamma() {
        let f = weighted_gamma_sum(&[1.7], &[0.9], &cfg()).unwrap();
        let closed = gamma_entropy_closed(1.7, 0.9);
        assert!((differential_entropy(&f).value - closed).abs() < 1e-4);
    }

    #[test]
    fn equal_scale_sum_is_gamma() {
        let f = weighted_gamma_sum(&[1.0, 2.0], &[1.5, 1.5], &cfg()).unwrap();
        let g = pdf_gamma(3.0, 1.5, &cfg()).unwrap();
        // compare log densities across the overlap of the central mass
        for &x in g.nodes().iter().step_by(256) {
            if x > f.lo() * 1.5 && x < f.hi() * 0.7 {
                assert!(
                    (f.log_at(x) - g.log_at(x)).abs() < 1e-5,
                    "x = {x}: {} vs {}",
                    f.log_at(x),
                    g.log_at(x)
                );
            }
        }
    }

    #[test]
    fn hypoexponential_oracle() {
        // exponentials with scales 1 and 2: density (e^{-x/2} - e^{-x})
        let f = weighted_gamma_sum(&[1.0, 1.0], &[1.0, 2.0], &cfg()).unwrap();
        for x in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let closed = ((-x / 2.0f64).exp() - (-x as f64).exp()).ln();
            assert!(
                (f.log_at(x) - closed).abs() < 1e-5,
                "x = {x}: {} vs {closed}",
                f.log_at(x)
            );
        }
    }

    #[test]
    fn lc_le_grid_reflexive_and_shape_ordered() {
        let c = cfg();
        let f = pdf_gamma(2.0, 1.0, &c).unwrap();
        assert!(lc_le_continuous(&f, &f, 1e-9).verdict);

        // log ratio of shapes a1 vs a2 at equal scale is (a1 - a2) ln x:
        // concave iff a1 <= a2
        let g3 = pdf_gamma_covering(3.0, 1.0, f.lo(), f.hi(), &c).unwrap();
        assert!(lc_le_continuous(&f, &g3, 1e-9).verdict);
        let f_wide = pdf_gamma_covering(3.0, 1.0, 1e-9, 60.0, &c).unwrap();
        let g_narrow = pdf_gamma_windowed(2.0, 1.0, f_wide.lo(), f_wide.hi(), 1e-6, &c).unwrap();
        // the reverse needs the candidate minorant's window inside, and fails
        // on convexity
        let rev = lc_le_continuous(&g_narrow, &f_wide, 1e-9);
        assert!(!rev.verdict);
        assert_eq!(rev.failure_kind, FailureKind::ConcavityViolated);
    }

    #[test]
    fn gamma_sits_below_weighted_sum() {
        let c = cfg();
        for (alphas, betas) in [
            (vec![1.0, 1.0], vec![1.0, 2.0]),
            (vec![2.0, 1.5], vec![0.8, 1.6]),
        ] {
            let f = weighted_gamma_sum(&alphas, &betas, &c).unwrap();
            let a_plus: f64 = alphas.iter().sum();
            let mu: f64 = alphas.iter().zip(&betas).map(|(a, b)| a * b).sum();
            let minor = pdf_gamma_windowed(
                a_plus,
                mu / a_plus,
                f.lo(),
                f.hi().min(f.safe_hi()),
                1e-6,
                &c,
            )
            .unwrap();
            let report = lc_le_continuous_strided(&minor, &f, 1e-6, 8);
            assert!(report.verdict, "{report:?}");
        }
    }

    #[test]
    fn convolution_closure_over_perturbed_pairs() {
        // pairs with gam(a_i, 1) below each factor keep gam(a1+a2, 1) below
        // the convolution
        let c = GridConfig {
            nodes: 2049,
            inner_nodes: 241,
            ..GridConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..12 {
            let a1 = rng.gen_range(0.8..2.0);
            let a2 = rng.gen_range(0.8..2.0);
            let base1 = pdf_gamma(a1, 1.0, &c).unwrap();
            let base2 = pdf_gamma(a2, 1.0, &c).unwrap();
            // convex perturbation in x with capped slope keeps the base below
            let perturb = |base: &GridPdf, knee: f64, s: f64| -> GridPdf {
                let logs: Vec<f64> = base
                    .nodes()
                    .iter()
                    .zip(base.density())
                    .map(|(x, d)| {
                        let v = if *x > knee { s * (x - knee) } else { 0.0 };
                        if *d > 0.0 {
                            d.ln() + v
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect();
                let shift = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut mass = 0.0;
                for (j, l) in logs.iter().enumerate() {
                    if l.is_finite() {
                        mass += base.quad[j] * (l - shift).exp();
                    }
                }
                let ln_z = shift + mass.ln();
                GridPdf::from_log_density(
                    base.lo(),
                    base.hi(),
                    base.nodes().len(),
                    1e-4, // generous: the tilted tail mass is not tracked here
                    None,
                    |x| {
                        let t = (x.ln() - base.t0) / base.dt;
                        let j = (t.round() as usize).min(logs.len() - 1);
                        logs[j] - ln_z
                    },
                )
                .unwrap()
            };
            let f = perturb(&base1, a1, rng.gen_range(0.05..0.3));
            let g = perturb(&base2, a2, rng.gen_range(0.05..0.3));
            let conv = convolve_grid(&f, &g, &c).unwrap();
            let minor = pdf_gamma_windowed(
                a1 + a2,
                1.0,
                conv.lo(),
                conv.hi().min(conv.safe_hi()),
                1e-5,
                &c,
            )
            .unwrap();
            let report = lc_le_continuous_strided(&minor, &conv, 1e-5, 8);
            assert!(report.verdict, "trial {trial}: {report:?}");
        }
    }

    #[test]
    fn minentropy_perturbations_stay_above_equal_scale() {
        let c = GridConfig {
            nodes: 2049,
            inner_nodes: 201,
            ..GridConfig::default()
        };
        let tol = Tolerances::default();
        let v = check_gamma_minentropy(&[1.0, 1.0], &[0.5, 1.5], 20, 5, &c, &tol).unwrap();
        assert!(v.holds(), "{:?}", v.context);
        let v = check_gamma_minentropy(&[2.0, 3.0], &[1.0, 0.6], 20, 6, &c, &tol).unwrap();
        assert!(v.holds(), "{:?}", v.context);
        // a shape below one is outside the hypothesis
        let v = check_gamma_minentropy(&[0.5, 2.0], &[1.0, 1.0], 5, 7, &c, &tol).unwrap();
        assert_eq!(v.status, VerdictStatus::Inconclusive);
    }

    #[test]
    fn gamma_triangle_sweep_holds() {
        let c = GridConfig {
            nodes: 2049,
            inner_nodes: 241,
            ..GridConfig::default()
        };
        let alphas = [0.5, 1.5];
        let betas = [1.0, 2.0];
        let a_plus = 2.0;
        let verdicts =
            check_gamma_triangle(&alphas, &betas, &[a_plus, 3.0, 4.0], &[1.0, 1.75, 2.8], &c)
                .unwrap();
        for v in &verdicts {
            assert!(!v.violated(), "{v:?}");
        }
        // shapes below the total are a domain error
        assert!(check_gamma_triangle(&alphas, &betas, &[1.5], &[1.0], &c).is_err());
    }

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_halving_moves_less_than_error_bound() {
        let base = cfg();
        let fine = GridConfig {
            nodes: 2 * (base.nodes - 1) + 1,
            ..base
        };
        let f = pdf_gamma(2.0, 1.0, &base).unwrap();
        let f2 = pdf_gamma(2.0, 1.0, &fine).unwrap();
        let (h, h2) = (differential_entropy(&f), differential_entropy(&f2));
        assert!((h.value - h2.value).abs() <= h.error_bound.max(1e-12));
    }

    #[test]
    fn csv_serialization_has_header_and_rows() {
        let small = GridConfig {
            nodes: 65,
            ..cfg()
        };
        let f = pdf_gamma(2.0, 1.0, &small).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("# {"));
        assert!(header.contains("simpson-log"));
        assert_eq!(lines.next().unwrap(), "node,density");
        assert_eq!(lines.count(), 65);
    }
}
