//! Executable checks for the theorem-level inequalities: the two triangle
//! inequalities and their quadrangle generalization, concave-weight
//! dominance, the partial-sums lemma behind them, max/min entropy, best
//! binomial and negative-binomial approximation, monotone Poisson limits,
//! convolution closure, and an exploratory fuzzer for the open implication.
//!
//! Every check returns a three-state [`Verdict`]: an inequality is only
//! `Violated` when it fails beyond the accumulated truncation and rounding
//! error; hypothesis failures and non-finite comparisons are `Inconclusive`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::divergence::{entropy, kl, total_variation, DivergenceValue};
use crate::lc::{lc_le, sign_profile, LcReport, SignProfile, Sign};
use crate::numeric::NeumaierSum;
use crate::pmf::{
    bernoulli_sum, convex_majorant, convolve, geometric_sum, mean, random_lc_minorant,
    FamilySpec, Pmf,
};
use crate::{Error, Result};

/// Named tolerances shared by the checks and the suite runners.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Gate for "finite and equal means" hypotheses (absolute).
    pub equal_mean: f64,
    /// Relative scale for discrete second-difference concavity tests.
    pub lc: f64,
    /// Support membership threshold after normalization.
    pub zero: f64,
    /// Allowed residual in the three-sum margin identity.
    pub identity: f64,
    /// Gate for the zero-sum / zero-first-moment hypotheses of the
    /// partial-sums lemma, and for its double-partial-sum clause.
    pub karlin: f64,
    /// Entropy gap below which a max-entropy draw counts as an equality case.
    pub entropy_eq: f64,
    /// Total variation that an entropy equality case must stay within.
    pub tv_eq: f64,
    /// Relative scale for continuous concavity tests.
    pub lc_cont: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            equal_mean: 1e-10,
            lc: 1e-9,
            zero: 1e-14,
            identity: 1e-10,
            karlin: 1e-8,
            entropy_eq: 1e-9,
            tv_eq: 1e-6,
            lc_cont: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Holds,
    Violated,
    Inconclusive,
}

/// Three-state outcome of an inequality check (lhs ≥ rhs).
///
/// `holds` iff margin ≥ −(combined error); `violated` iff margin falls below
/// −(combined error); `inconclusive` covers hypothesis failures and
/// non-finite right-hand sides. Strict checks demand margin > +combined
/// error for `holds` and are `inconclusive` inside the error band.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub lhs: DivergenceValue,
    pub rhs: DivergenceValue,
    #[serde(with = "crate::divergence::extended_f64")]
    pub margin: f64,
    pub context: serde_json::Value,
}

impl Verdict {
    pub fn compare(lhs: DivergenceValue, rhs: DivergenceValue, context: serde_json::Value) -> Self {
        if !lhs.finite {
            return Verdict {
                status: VerdictStatus::Holds,
                lhs,
                rhs,
                margin: f64::INFINITY,
                context,
            };
        }
        if !rhs.finite {
            return Verdict {
                status: VerdictStatus::Inconclusive,
                lhs,
                rhs,
                margin: f64::NEG_INFINITY,
                context,
            };
        }
        let margin = lhs.value - rhs.value;
        let combined = lhs.error_bound + rhs.error_bound;
        let status = if margin >= -combined {
            VerdictStatus::Holds
        } else {
            VerdictStatus::Violated
        };
        Verdict {
            status,
            lhs,
            rhs,
            margin,
            context,
        }
    }

    /// Strict comparison: lhs > rhs certified beyond the combined error.
    pub fn compare_strict(
        lhs: DivergenceValue,
        rhs: DivergenceValue,
        context: serde_json::Value,
    ) -> Self {
        if !lhs.finite || !rhs.finite {
            let mut v = Verdict::compare(lhs, rhs, context);
            if v.status == VerdictStatus::Holds && !lhs.finite && rhs.finite {
                // infinite lhs certifies strictness too
                return v;
            }
            v.status = VerdictStatus::Inconclusive;
            return v;
        }
        let margin = lhs.value - rhs.value;
        let combined = lhs.error_bound + rhs.error_bound;
        let status = if margin > combined {
            VerdictStatus::Holds
        } else if margin < -combined {
            VerdictStatus::Violated
        } else {
            VerdictStatus::Inconclusive
        };
        Verdict {
            status,
            lhs,
            rhs,
            margin,
            context,
        }
    }

    pub fn inconclusive(reason: &str, mut context: serde_json::Value) -> Self {
        if let Some(map) = context.as_object_mut() {
            map.insert("reason".into(), json!(reason));
        }
        Verdict {
            status: VerdictStatus::Inconclusive,
            lhs: DivergenceValue::finite(0.0, 0.0),
            rhs: DivergenceValue::finite(0.0, 0.0),
            margin: f64::NAN,
            context,
        }
    }

    /// Wrap an order check: status comes from the report (its tolerance is
    /// already scale-aware), margin is the negated worst second difference.
    pub fn from_lc(report: &LcReport, mut context: serde_json::Value) -> Self {
        if let Some(map) = context.as_object_mut() {
            map.insert("failure_kind".into(), json!(report.failure_kind));
            map.insert("witness_index".into(), json!(report.witness_index));
        }
        Verdict {
            status: if report.verdict {
                VerdictStatus::Holds
            } else {
                VerdictStatus::Violated
            },
            lhs: DivergenceValue::finite(0.0, 0.0),
            rhs: DivergenceValue::finite(report.margin, 0.0),
            margin: -report.margin,
            context,
        }
    }

    pub fn holds(&self) -> bool {
        self.status == VerdictStatus::Holds
    }

    pub fn violated(&self) -> bool {
        self.status == VerdictStatus::Violated
    }
}

fn combine(parts: Vec<Verdict>) -> Verdict {
    debug_assert!(!parts.is_empty());
    let severity = |s: VerdictStatus| match s {
        VerdictStatus::Holds => 0,
        VerdictStatus::Inconclusive => 1,
        VerdictStatus::Violated => 2,
    };
    let mut best = 0usize;
    for (i, p) in parts.iter().enumerate() {
        let (sb, si) = (severity(parts[best].status), severity(p.status));
        if si > sb || (si == sb && p.margin < parts[best].margin) {
            best = i;
        }
    }
    let summary: Vec<serde_json::Value> = parts
        .iter()
        .map(|p| {
            json!({
                "status": p.status,
                "margin": if p.margin.is_finite() { json!(p.margin) } else { json!(null) },
                "context": p.context,
            })
        })
        .collect();
    let mut out = parts.into_iter().nth(best).unwrap();
    out.context = json!({ "binding": out.context, "checks": summary });
    out
}

/// Both reverse triangle inequalities along a verified chain f ≤_lc g ≤_lc h.
///
/// Which means coincide selects the direction: E(f)=E(g) checks
/// D(f|h) ≥ D(f|g)+D(g|h); E(g)=E(h) checks D(h|f) ≥ D(h|g)+D(g|f); when
/// both hold, both are checked and the binding one is reported.
pub fn check_triangle(f: &Pmf, g: &Pmf, h: &Pmf, tol: &Tolerances) -> Verdict {
    let lc_fg = lc_le(f, g, tol.lc);
    let lc_gh = lc_le(g, h, tol.lc);
    if !lc_fg.verdict || !lc_gh.verdict {
        return Verdict::inconclusive(
            "order hypothesis failed",
            json!({"lc_fg": lc_fg.verdict, "lc_gh": lc_gh.verdict}),
        );
    }
    let (mf, mg, mh) = (mean(f).value, mean(g).value, mean(h).value);
    let eq_fg = (mf - mg).abs() <= tol.equal_mean;
    let eq_gh = (mg - mh).abs() <= tol.equal_mean;
    if !eq_fg && !eq_gh {
        return Verdict::inconclusive(
            "no equal-mean pair",
            json!({"mean_f": mf, "mean_g": mg, "mean_h": mh}),
        );
    }
    let mut parts = Vec::new();
    if eq_fg {
        let lhs = kl(f, h);
        let rhs = kl(f, g).add(&kl(g, h));
        parts.push(Verdict::compare(lhs, rhs, json!({"direction": "forward"})));
    }
    if eq_gh {
        let lhs = kl(h, f);
        let rhs = kl(h, g).add(&kl(g, f));
        parts.push(Verdict::compare(lhs, rhs, json!({"direction": "reverse"})));
    }
    combine(parts)
}

/// Residual of the exact three-sum identity
/// D(f|h) − D(f|g) − D(g|h) = Σ (f_i − g_i) log(g_i/h_i).
///
/// All four sums are taken over stored windows; the identity holds to
/// rounding whenever the divergences are finite.
pub fn triangle_margin_identity(f: &Pmf, g: &Pmf, h: &Pmf) -> Option<f64> {
    let (dfh, dfg, dgh) = (kl(f, h), kl(f, g), kl(g, h));
    if !(dfh.finite && dfg.finite && dgh.finite) {
        return None;
    }
    let mut cross = NeumaierSum::new();
    for i in g.first_index()..=g.last_index() {
        let gi = g.weight_at(i);
        if gi <= 0.0 {
            continue;
        }
        let hi = h.weight_at(i);
        cross.add((f.weight_at(i) - gi) * (gi.ln() - hi.ln()));
    }
    Some(dfh.value - dfg.value - dgh.value - cross.total())
}

/// The quadrangle inequality along a verified chain f ≤_lc g ≤_lc g2 ≤_lc h.
///
/// E(f)=E(g) checks D(f|h)+D(g|g2) ≥ D(f|g2)+D(g|h); E(g2)=E(h) checks
/// D(h|f)+D(g2|g) ≥ D(g2|f)+D(h|g). With g = g2 both reduce to the triangle
/// case.
pub fn check_quadrangle(f: &Pmf, g: &Pmf, g2: &Pmf, h: &Pmf, tol: &Tolerances) -> Verdict {
    let chain = [lc_le(f, g, tol.lc), lc_le(g, g2, tol.lc), lc_le(g2, h, tol.lc)];
    if chain.iter().any(|r| !r.verdict) {
        let oks: Vec<bool> = chain.iter().map(|r| r.verdict).collect();
        return Verdict::inconclusive("order hypothesis failed", json!({"chain": oks}));
    }
    let (mf, mg, mg2, mh) = (
        mean(f).value,
        mean(g).value,
        mean(g2).value,
        mean(h).value,
    );
    let eq_fg = (mf - mg).abs() <= tol.equal_mean;
    let eq_g2h = (mg2 - mh).abs() <= tol.equal_mean;
    if !eq_fg && !eq_g2h {
        return Verdict::inconclusive(
            "no equal-mean pair",
            json!({"mean_f": mf, "mean_g": mg, "mean_g2": mg2, "mean_h": mh}),
        );
    }
    let mut parts = Vec::new();
    if eq_fg {
        let lhs = kl(f, h).add(&kl(g, g2));
        let rhs = kl(f, g2).add(&kl(g, h));
        parts.push(Verdict::compare(lhs, rhs, json!({"direction": "forward"})));
    }
    if eq_g2h {
        let lhs = kl(h, f).add(&kl(g2, g));
        let rhs = kl(g2, f).add(&kl(h, g));
        parts.push(Verdict::compare(lhs, rhs, json!({"direction": "reverse"})));
    }
    combine(parts)
}

/// Σ f_i w(i) ≥ Σ g_i w(i) for a tabulated concave weight sequence, given
/// f ≤_lc g with equal means.
///
/// The table must cover both stored supports and satisfy Δ²w ≤ 0; a
/// non-concave table is a domain error, not a verdict.
pub fn check_concave_dominance(f: &Pmf, g: &Pmf, w: &[f64], tol: &Tolerances) -> Result<Verdict> {
    let needed = f.last_index().max(g.last_index()) + 1;
    if w.len() < needed {
        return Err(Error::WeightTableTooShort {
            needed,
            got: w.len(),
        });
    }
    let scale = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 1..w.len() - 1 {
        let d = w[i + 1] - 2.0 * w[i] + w[i - 1];
        if d > 1e-12 * (1.0 + scale) {
            return Err(Error::NonConcaveWeights { index: i });
        }
    }
    let lc = lc_le(f, g, tol.lc);
    if !lc.verdict {
        return Ok(Verdict::inconclusive(
            "order hypothesis failed",
            json!({"failure_kind": lc.failure_kind}),
        ));
    }
    let (mf, mg) = (mean(f).value, mean(g).value);
    if (mf - mg).abs() > tol.equal_mean {
        return Ok(Verdict::inconclusive(
            "means not equal",
            json!({"mean_f": mf, "mean_g": mg}),
        ));
    }
    let weighted = |p: &Pmf| -> DivergenceValue {
        let mut acc = NeumaierSum::new();
        for i in p.first_index()..=p.last_index() {
            acc.add(p.weight_at(i) * w[i]);
        }
        let value = acc.total();
        // tail model: |w| continues from the table edge at its final slope
        let edge = w[needed - 1].abs();
        let slope = if needed >= 2 {
            (w[needed - 1] - w[needed - 2]).abs()
        } else {
            0.0
        };
        let err = p.tail_bound() * (edge + slope * crate::pmf::TAIL_LENGTH_HEURISTIC)
            + crate::numeric::rounding_slack(p.len(), value.abs().max(scale));
        DivergenceValue::finite(value, err)
    };
    Ok(Verdict::compare(
        weighted(f),
        weighted(g),
        json!({"check": "concave_dominance"}),
    ))
}

/// Report for the zero-sum, zero-first-moment partial-sums lemma.
#[derive(Debug, Clone, Serialize)]
pub struct KarlinReport {
    pub hypothesis_ok: bool,
    pub reason: Option<String>,
    pub sum: f64,
    pub first_moment: f64,
    pub diff_profile: SignProfile,
    pub partial_profile: SignProfile,
    pub max_double_partial: f64,
    pub diff_pattern_ok: bool,
    pub partial_pattern_ok: bool,
    pub double_partial_ok: bool,
    pub all_pass: bool,
}

/// Verify the three proof clauses for a sequence with Σa = 0, Σ i·a_i = 0 and
/// positive set an interval: sign pattern (−,+,−), partial sums with one sign
/// change (−,+), and all double partial sums ≤ 0.
pub fn karlin_partial_sums(a: &[f64], tol: f64) -> KarlinReport {
    let maxabs = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ztol = 1e-11 * maxabs;
    let sum = crate::numeric::compensated_sum(a.iter().copied());
    let first_moment =
        crate::numeric::compensated_sum(a.iter().enumerate().map(|(i, x)| i as f64 * x));

    let mut reason = None;
    if sum.abs() > tol {
        reason = Some(format!("sum {sum} not within {tol} of zero"));
    } else if first_moment.abs() > tol * (1.0 + a.len() as f64) {
        reason = Some(format!("first moment {first_moment} not near zero"));
    } else {
        let pos: Vec<usize> = a
            .iter()
            .enumerate()
            .filter(|(_, x)| **x > ztol)
            .map(|(i, _)| i)
            .collect();
        if let (Some(first), Some(last)) = (pos.first(), pos.last()) {
            if last - first + 1 != pos.len() {
                reason = Some("positive set is not an interval".into());
            }
        }
    }
    let hypothesis_ok = reason.is_none();

    let diff_profile = sign_profile(a, ztol);
    let mut partials = Vec::with_capacity(a.len());
    let mut running = NeumaierSum::new();
    for &x in a {
        running.add(x);
        partials.push(running.total());
    }
    let max_partial = partials.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let partial_profile = sign_profile(&partials, 1e-11 * max_partial);

    let mut double_running = NeumaierSum::new();
    let mut max_double = f64::NEG_INFINITY;
    for &p in &partials {
        double_running.add(p);
        max_double = max_double.max(double_running.total());
    }

    let diff_pattern_ok = diff_profile.signs.is_empty()
        || diff_profile.signs == vec![Sign::Neg, Sign::Pos, Sign::Neg];
    let partial_pattern_ok = matches!(
        partial_profile.signs.as_slice(),
        [] | [Sign::Neg] | [Sign::Neg, Sign::Pos]
    );
    let double_partial_ok = max_double <= tol * (1.0 + max_partial);

    KarlinReport {
        all_pass: hypothesis_ok && diff_pattern_ok && partial_pattern_ok && double_partial_ok,
        hypothesis_ok,
        reason,
        sum,
        first_moment,
        diff_profile,
        partial_profile,
        max_double_partial: max_double,
        diff_pattern_ok,
        partial_pattern_ok,
        double_partial_ok,
    }
}

/// The difference sequence f − g over the union of stored windows, indexed
/// from 0.
pub fn difference_sequence(f: &Pmf, g: &Pmf) -> Vec<f64> {
    let hi = f.last_index().max(g.last_index());
    (0..=hi).map(|i| f.weight_at(i) - g.weight_at(i)).collect()
}

/// A log-concave pmf maximizes entropy among its order minorants with the
/// same mean: draw `n_samples` minorants of `g` and demand H(f) ≤ H(g) up to
/// combined error, with near-equal entropies forcing near-zero total
/// variation (uniqueness).
pub fn check_maxent(g: &Pmf, n_samples: usize, seed: u64, tol: &Tolerances) -> Result<Verdict> {
    let lc = crate::lc::is_log_concave(g);
    if !lc.verdict {
        return Ok(Verdict::inconclusive(
            "reference pmf is not log-concave",
            json!({"failure_kind": lc.failure_kind}),
        ));
    }
    let hg = entropy(g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_margin = f64::INFINITY;
    let mut worst = hg;
    let mut violations = 0usize;
    let mut equality_cases = 0usize;
    let mut equality_tv_failures = 0usize;
    for _ in 0..n_samples {
        let f = random_lc_minorant(g, rng.gen())?;
        let hf = entropy(&f);
        let margin = hg.value - hf.value;
        if margin < -(hg.error_bound + hf.error_bound) {
            violations += 1;
        }
        if margin.abs() <= tol.entropy_eq {
            equality_cases += 1;
            let tv = total_variation(&f, g);
            if tv.value > tol.tv_eq {
                equality_tv_failures += 1;
            }
        }
        if margin < worst_margin {
            worst_margin = margin;
            worst = hf;
        }
    }
    let context = json!({
        "check": "maxent",
        "samples": n_samples,
        "violations": violations,
        "equality_cases": equality_cases,
        "equality_tv_failures": equality_tv_failures,
        "label": g.label(),
    });
    let mut verdict = Verdict::compare(hg, worst, context);
    if violations > 0 || equality_tv_failures > 0 {
        verdict.status = VerdictStatus::Violated;
    }
    Ok(verdict)
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxRow {
    pub m: f64,
    pub p: f64,
    pub kl: DivergenceValue,
}

/// Divergence sweep over an approximating family, with the mean-matched
/// member of minimal order expected at the argmin.
#[derive(Debug, Clone, Serialize)]
pub struct ApproximationTable {
    pub rows: Vec<ApproxRow>,
    pub argmin_row: usize,
    pub poisson_row: Option<ApproxRow>,
    pub side_checks: Vec<Verdict>,
}

impl ApproximationTable {
    fn argmin(rows: &[ApproxRow]) -> usize {
        let mut best = 0;
        for (i, r) in rows.iter().enumerate() {
            if r.kl.finite && (!rows[best].kl.finite || r.kl.value < rows[best].kl.value) {
                best = i;
            }
        }
        best
    }
}

/// Sweep D(f^S | bi(m, λ/m)) for m = n..m_max plus the Poisson comparison,
/// and spot-check the three-term inequality off the mean-matched line.
pub fn best_binomial(
    ps: &[f64],
    m_max: u32,
    p_grid: &[f64],
    eps: f64,
    _tol: &Tolerances,
) -> Result<ApproximationTable> {
    let n = ps.len() as u32;
    if m_max < n {
        return Err(Error::InvalidParameter(format!(
            "m_max {m_max} below the number of summands {n}"
        )));
    }
    let f = bernoulli_sum(ps)?;
    let lambda = crate::numeric::compensated_sum(ps.iter().copied());

    let mut rows = Vec::new();
    for m in n..=m_max {
        let p = lambda / f64::from(m);
        let b = FamilySpec::Binomial { n: m, p }.realize(eps)?;
        rows.push(ApproxRow {
            m: f64::from(m),
            p,
            kl: kl(&f, &b),
        });
    }
    let argmin_row = ApproximationTable::argmin(&rows);

    let po = FamilySpec::Poisson { lambda }.realize_to(eps, f.last_index())?;
    let poisson_row = Some(ApproxRow {
        m: f64::INFINITY,
        p: f64::NAN,
        kl: kl(&f, &po),
    });

    let mut side_checks = Vec::new();
    let mut m_primes = vec![n, (n + m_max) / 2, m_max];
    m_primes.dedup();
    for &mp in &m_primes {
        for &p_prime in p_grid {
            if !(p_prime > 0.0 && p_prime < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "grid p {p_prime} outside (0, 1)"
                )));
            }
            let target = FamilySpec::Binomial { n: mp, p: p_prime }.realize(eps)?;
            for m in [n, mp] {
                if m > mp {
                    continue;
                }
                let b_m = FamilySpec::Binomial {
                    n: m,
                    p: lambda / f64::from(m),
                }
                .realize(eps)?;
                let lhs = kl(&f, &target);
                let rhs = kl(&f, &b_m).add(&kl(&b_m, &target));
                side_checks.push(Verdict::compare(
                    lhs,
                    rhs,
                    json!({"check": "three_term", "m": m, "m_prime": mp, "p_prime": p_prime}),
                ));
            }
        }
    }
    // The Poisson target is worse than the mean-matched binomial by at least
    // the divergence between them.
    let b_n = FamilySpec::Binomial {
        n,
        p: lambda / f64::from(n),
    }
    .realize(eps)?;
    let po_cover = FamilySpec::Poisson { lambda }.realize_to(eps, b_n.last_index())?;
    side_checks.push(Verdict::compare(
        kl(&f, &po),
        kl(&f, &b_n).add(&kl(&b_n, &po_cover)),
        json!({"check": "poisson_gap"}),
    ));

    Ok(ApproximationTable {
        rows,
        argmin_row,
        poisson_row,
        side_checks,
    })
}

/// Sweep D(f^T | nb(m, m/(m+μ))) over a real-valued grid of orders, with the
/// minorant relation, the entropy floor, the Poisson gap, and monotonicity
/// attached as side checks.
pub fn best_negbinomial(
    rs: &[f64],
    m_max: f64,
    step: f64,
    eps: f64,
    tol: &Tolerances,
) -> Result<ApproximationTable> {
    let n = rs.len() as f64;
    if !(m_max >= n) {
        return Err(Error::InvalidParameter(format!(
            "m_max {m_max} below the number of summands {n}"
        )));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidParameter("grid step must be positive".into()));
    }
    let f = geometric_sum(rs, eps)?;
    let mu = crate::numeric::compensated_sum(rs.iter().map(|r| (1.0 - r) / r));

    let nb_at = |m: f64, min_last: usize| -> Result<Pmf> {
        FamilySpec::Negbinomial {
            n: m,
            r: m / (m + mu),
        }
        .realize_to(eps, min_last)
    };

    let mut ms = Vec::new();
    let mut m = n;
    while m <= m_max + 1e-9 {
        ms.push(m);
        m += step;
    }

    let mut rows = Vec::new();
    for &m in &ms {
        let b = nb_at(m, f.last_index())?;
        rows.push(ApproxRow {
            m,
            p: m / (m + mu),
            kl: kl(&f, &b),
        });
    }
    let argmin_row = ApproximationTable::argmin(&rows);

    let po = FamilySpec::Poisson { lambda: mu }.realize_to(eps, f.last_index())?;
    let poisson_row = Some(ApproxRow {
        m: f64::INFINITY,
        p: f64::NAN,
        kl: kl(&f, &po),
    });

    let mut side_checks = Vec::new();
    // the mean-matched negative binomial of true order sits below the sum
    let nb_n = nb_at(n, 0)?;
    let nb_n_inside = nb_n.crop_to(f.last_index())?;
    side_checks.push(Verdict::from_lc(
        &lc_le(&nb_n_inside, &f, tol.lc),
        json!({"check": "nb_minorant"}),
    ));
    // entropy of the sum is minimized at the equal-rate configuration
    side_checks.push(Verdict::compare(
        entropy(&f),
        entropy(&nb_n),
        json!({"check": "entropy_floor"}),
    ));
    // Poisson gap
    let po_cover = FamilySpec::Poisson { lambda: mu }.realize_to(eps, nb_n.last_index())?;
    side_checks.push(Verdict::compare(
        kl(&f, &po),
        kl(&f, &nb_n).add(&kl(&nb_n, &po_cover)),
        json!({"check": "poisson_gap"}),
    ));
    // monotone in m along the mean-matched line
    for pair in rows.windows(2) {
        side_checks.push(Verdict::compare(
            pair[1].kl,
            pair[0].kl,
            json!({"check": "monotone_in_m", "m_lo": pair[0].m, "m_hi": pair[1].m}),
        ));
    }
    // off the mean-matched line: full three-term inequality
    let m_prime = *ms.last().unwrap();
    for scale in [0.85, 1.15] {
        let r_prime = (m_prime / (m_prime + mu) * scale).clamp(1e-6, 1.0 - 1e-6);
        let target = FamilySpec::Negbinomial {
            n: m_prime,
            r: r_prime,
        }
        .realize_to(eps, f.last_index())?;
        for &m in &[n, m_prime] {
            let b_m = nb_at(m, 0)?;
            let target_cover = FamilySpec::Negbinomial {
                n: m_prime,
                r: r_prime,
            }
            .realize_to(eps, b_m.last_index())?;
            let lhs = kl(&f, &target);
            let rhs = kl(&f, &b_m).add(&kl(&b_m, &target_cover));
            side_checks.push(Verdict::compare(
                lhs,
                rhs,
                json!({"check": "three_term", "m": m, "m_prime": m_prime, "r_prime": r_prime}),
            ));
        }
    }

    Ok(ApproximationTable {
        rows,
        argmin_row,
        poisson_row,
        side_checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    Binomial,
    Negbinomial,
}

/// Monotonicity of the mean-matched family toward its Poisson limit:
/// D(member_m | po) strictly decreases in m, certified beyond error, plus the
/// three-term chain that implies it.
pub fn check_monotone_limit(
    kind: LimitKind,
    mean: f64,
    m_grid: &[f64],
    eps: f64,
) -> Result<Vec<Verdict>> {
    if m_grid.len() < 2 {
        return Err(Error::InvalidParameter("need at least two grid orders".into()));
    }
    if m_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("grid orders must increase".into()));
    }
    let members: Vec<Pmf> = match kind {
        LimitKind::Binomial => {
            let mut out = Vec::new();
            for &m in m_grid {
                if m.fract() != 0.0 || m <= mean {
                    return Err(Error::InvalidParameter(format!(
                        "binomial order {m} must be an integer above the mean {mean}"
                    )));
                }
                out.push(
                    FamilySpec::Binomial {
                        n: m as u32,
                        p: mean / m,
                    }
                    .realize(eps)?,
                );
            }
            out
        }
        LimitKind::Negbinomial => {
            let mut out = Vec::new();
            for &m in m_grid {
                if !(m > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "negbinomial order {m} must be positive"
                    )));
                }
                out.push(
                    FamilySpec::Negbinomial {
                        n: m,
                        r: m / (m + mean),
                    }
                    .realize(eps)?,
                );
            }
            out
        }
    };
    let cover = members.iter().map(|p| p.last_index()).max().unwrap();
    let po = FamilySpec::Poisson { lambda: mean }.realize_to(eps, cover)?;
    let divergences: Vec<DivergenceValue> = members.iter().map(|b| kl(b, &po)).collect();

    let mut verdicts = Vec::new();
    for i in 0..members.len() - 1 {
        let ctx = json!({"kind": kind, "m_lo": m_grid[i], "m_hi": m_grid[i + 1]});
        verdicts.push(Verdict::compare_strict(
            divergences[i],
            divergences[i + 1],
            json!({"check": "strict_decrease", "pair": ctx}),
        ));
        // chain: the step to the next member plus its distance to the limit
        let next_cover = match kind {
            LimitKind::Binomial => FamilySpec::Binomial {
                n: m_grid[i + 1] as u32,
                p: mean / m_grid[i + 1],
            }
            .realize(eps)?,
            LimitKind::Negbinomial => FamilySpec::Negbinomial {
                n: m_grid[i + 1],
                r: m_grid[i + 1] / (m_grid[i + 1] + mean),
            }
            .realize_to(eps, members[i].last_index())?,
        };
        let rhs = kl(&members[i], &next_cover).add(&divergences[i + 1]);
        verdicts.push(Verdict::compare(
            divergences[i],
            rhs,
            json!({"check": "three_term_chain", "pair": ctx}),
        ));
    }
    Ok(verdicts)
}

/// Closure of the order under convolution, one random instance per call.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ClosureKind {
    /// f ≤_lc bi(k,p), g ≤_lc bi(m,p) ⇒ f∗g ≤_lc bi(k+m,p).
    Liggett { k: u32, m: u32, p: f64 },
    /// nb(k,r) ≤_lc f, nb(m,r) ≤_lc g ⇒ nb(k+m,r) ≤_lc f∗g; k, m real.
    DavenportPolya { k: f64, m: f64, r: f64 },
    /// f ≤_lc po(λ), g ≤_lc po(μ) ⇒ f∗g ≤_lc po(λ+μ).
    PoissonLimitUlc { lambda: f64, mu: f64 },
    /// po(λ) ≤_lc f, po(μ) ≤_lc g ⇒ po(λ+μ) ≤_lc f∗g.
    PoissonLimitLcx { lambda: f64, mu: f64 },
}

pub fn check_convolution_closure(
    kind: ClosureKind,
    eps: f64,
    seed: u64,
    tol: &Tolerances,
) -> Result<Verdict> {
    let seed2 = seed ^ 0x9e37_79b9_7f4a_7c15;
    let ctx = json!({ "kind": kind, "seed": seed });
    match kind {
        ClosureKind::Liggett { k, m, p } => {
            let bk = FamilySpec::Binomial { n: k, p }.realize(eps)?;
            let bm = FamilySpec::Binomial { n: m, p }.realize(eps)?;
            let f = random_lc_minorant(&bk, seed)?;
            let g = random_lc_minorant(&bm, seed2)?;
            if !lc_le(&f, &bk, tol.lc).verdict || !lc_le(&g, &bm, tol.lc).verdict {
                return Ok(Verdict::inconclusive("instance generation failed", ctx));
            }
            let c = convolve(&f, &g);
            let bound = FamilySpec::Binomial { n: k + m, p }.realize(eps)?;
            Ok(Verdict::from_lc(&lc_le(&c, &bound, tol.lc), ctx))
        }
        ClosureKind::PoissonLimitUlc { lambda, mu } => {
            let pl = FamilySpec::Poisson { lambda }.realize(eps)?;
            let pm = FamilySpec::Poisson { lambda: mu }.realize(eps)?;
            let f = random_lc_minorant(&pl, seed)?;
            let g = random_lc_minorant(&pm, seed2)?;
            if !lc_le(&f, &pl, tol.lc).verdict || !lc_le(&g, &pm, tol.lc).verdict {
                return Ok(Verdict::inconclusive("instance generation failed", ctx));
            }
            let c = convolve(&f, &g);
            let bound =
                FamilySpec::Poisson { lambda: lambda + mu }.realize_to(eps, c.last_index())?;
            Ok(Verdict::from_lc(&lc_le(&c, &bound, tol.lc), ctx))
        }
        ClosureKind::DavenportPolya { k, m, r } => {
            let minor = FamilySpec::Negbinomial { n: k + m, r }.realize(eps)?;
            let f = convex_majorant(&FamilySpec::Negbinomial { n: k, r }, eps, minor.last_index(), seed)?;
            let g = convex_majorant(&FamilySpec::Negbinomial { n: m, r }, eps, minor.last_index(), seed2)?;
            let base_k = FamilySpec::Negbinomial { n: k, r }.realize_to(eps, f.last_index())?;
            let base_m = FamilySpec::Negbinomial { n: m, r }.realize_to(eps, g.last_index())?;
            if !lc_le(&base_k.crop_to(f.last_index())?, &f, tol.lc).verdict
                || !lc_le(&base_m.crop_to(g.last_index())?, &g, tol.lc).verdict
            {
                return Ok(Verdict::inconclusive("instance generation failed", ctx));
            }
            let c = convolve(&f, &g);
            let minor = minor.crop_to(c.last_index())?;
            Ok(Verdict::from_lc(&lc_le(&minor, &c, tol.lc), ctx))
        }
        ClosureKind::PoissonLimitLcx { lambda, mu } => {
            let minor = FamilySpec::Poisson { lambda: lambda + mu }.realize(eps)?;
            let f = convex_majorant(&FamilySpec::Poisson { lambda }, eps, minor.last_index(), seed)?;
            let g = convex_majorant(&FamilySpec::Poisson { lambda: mu }, eps, minor.last_index(), seed2)?;
            let base_l = FamilySpec::Poisson { lambda }.realize_to(eps, f.last_index())?;
            let base_m = FamilySpec::Poisson { lambda: mu }.realize_to(eps, g.last_index())?;
            if !lc_le(&base_l.crop_to(f.last_index())?, &f, tol.lc).verdict
                || !lc_le(&base_m.crop_to(g.last_index())?, &g, tol.lc).verdict
            {
                return Ok(Verdict::inconclusive("instance generation failed", ctx));
            }
            let c = convolve(&f, &g);
            let minor = minor.crop_to(c.last_index())?;
            Ok(Verdict::from_lc(&lc_le(&minor, &c, tol.lc), ctx))
        }
    }
}

/// Total-variation comparison of the mean-matched binomial approximations of
/// order m and m+1 against the Poisson limit, inside the stated parameter
/// region; outside it, only the computed quantities are reported.
#[derive(Debug, Clone, Serialize)]
pub struct ChoiXiaReport {
    pub lambda: f64,
    pub r: u64,
    pub delta: f64,
    pub condition_met: bool,
    pub m_threshold: Option<f64>,
    pub m: usize,
    pub d_m: Option<f64>,
    pub d_m_plus_1: Option<f64>,
    pub v_poisson: Option<f64>,
    pub verdicts: Vec<Verdict>,
}

pub fn check_choi_xia(ps: &[f64], m: usize, eps: f64) -> Result<ChoiXiaReport> {
    let n = ps.len();
    let f = bernoulli_sum(ps)?;
    let lambda = crate::numeric::compensated_sum(ps.iter().copied());
    let r = lambda.floor();
    let delta = lambda - r;
    let gap = r - 1.0 - (1.0 + delta) * (1.0 + delta);
    let m_threshold = if gap > 0.0 {
        Some((n as f64).max(lambda * lambda / gap))
    } else {
        None
    };
    let condition_met = m >= n && m_threshold.map_or(false, |t| m as f64 >= t);
    if !condition_met {
        return Ok(ChoiXiaReport {
            lambda,
            r: r as u64,
            delta,
            condition_met,
            m_threshold,
            m,
            d_m: None,
            d_m_plus_1: None,
            v_poisson: None,
            verdicts: Vec::new(),
        });
    }
    let d_at = |m: usize| -> Result<DivergenceValue> {
        let b = FamilySpec::Binomial {
            n: m as u32,
            p: lambda / m as f64,
        }
        .realize(eps)?;
        Ok(total_variation(&f, &b))
    };
    let d_m = d_at(m)?;
    let d_m1 = d_at(m + 1)?;
    let po = FamilySpec::Poisson { lambda }.realize_to(eps, f.last_index())?;
    let v = total_variation(&f, &po);
    let verdicts = vec![
        Verdict::compare_strict(d_m1, d_m, json!({"check": "d_m_below_d_m_plus_1", "m": m})),
        Verdict::compare_strict(v, d_m1, json!({"check": "d_m_plus_1_below_poisson", "m": m})),
    ];
    Ok(ChoiXiaReport {
        lambda,
        r: r as u64,
        delta,
        condition_met,
        m_threshold,
        m,
        d_m: Some(d_m.value),
        d_m_plus_1: Some(d_m1.value),
        v_poisson: Some(v.value),
        verdicts,
    })
}

/// The information projection property: over minorants f of g with the mean
/// of g, D(f|h) is minimized at f = g, and the excess is at least D(f|g).
pub fn check_iprojection(
    g: &Pmf,
    h: &Pmf,
    n_samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Verdict> {
    let lc = lc_le(g, h, tol.lc);
    if !lc.verdict {
        return Ok(Verdict::inconclusive(
            "order hypothesis failed",
            json!({"failure_kind": lc.failure_kind}),
        ));
    }
    let d_gh = kl(g, h);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = DivergenceValue::finite(f64::INFINITY, 0.0);
    let mut violations = 0usize;
    let mut excess_violations = 0usize;
    for _ in 0..n_samples {
        let f = random_lc_minorant(g, rng.gen())?;
        let d_fh = kl(&f, h);
        if !d_fh.finite {
            continue;
        }
        let comb = d_fh.error_bound + d_gh.error_bound;
        if d_fh.value < d_gh.value - comb {
            violations += 1;
        }
        let d_fg = kl(&f, g);
        if d_fh.value - d_gh.value < d_fg.value - comb - d_fg.error_bound {
            excess_violations += 1;
        }
        if d_fh.value < worst.value {
            worst = d_fh;
        }
    }
    let context = json!({
        "check": "iprojection",
        "samples": n_samples,
        "violations": violations,
        "excess_below_d_fg": excess_violations,
    });
    let mut verdict = Verdict::compare(worst, d_gh, context);
    if violations > 0 || excess_violations > 0 {
        verdict.status = VerdictStatus::Violated;
    }
    Ok(verdict)
}

/// Random family instance at desk scale, used by the suites and the fuzzer.
pub(crate) fn random_family(rng: &mut ChaCha8Rng) -> FamilySpec {
    match rng.gen_range(0..4) {
        0 => FamilySpec::Binomial {
            n: rng.gen_range(2..=12),
            p: rng.gen_range(0.15..0.85),
        },
        1 => FamilySpec::Poisson {
            lambda: rng.gen_range(0.4..6.0),
        },
        2 => FamilySpec::Geometric {
            p: rng.gen_range(0.3..0.8),
        },
        _ => FamilySpec::Negbinomial {
            n: rng.gen_range(0.6..4.0),
            r: rng.gen_range(0.3..0.7),
        },
    }
}

/// Search for counterexamples to the unconstrained convolution implication
/// f ≤_lc f', g ≤_lc g' ⇒ f∗g ≤_lc f'∗g'.
///
/// Exploratory by design: failures are recorded as replayable JSON
/// instances, never asserted.
pub fn fuzz_open_problem(budget: usize, seed: u64, eps: f64, tol: &Tolerances) -> Result<Vec<serde_json::Value>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found = Vec::new();
    for trial in 0..budget {
        let spec_f = random_family(&mut rng);
        let spec_g = random_family(&mut rng);
        let f_major = spec_f.realize(eps)?;
        let g_major = spec_g.realize(eps)?;
        let (s1, s2) = (rng.gen::<u64>(), rng.gen::<u64>());
        let f = random_lc_minorant(&f_major, s1)?;
        let g = random_lc_minorant(&g_major, s2)?;
        let minor = convolve(&f, &g);
        let major = convolve(&f_major, &g_major);
        let report = lc_le(&minor, &major, tol.lc);
        if !report.verdict {
            found.push(json!({
                "trial": trial,
                "f_major": spec_f,
                "g_major": spec_g,
                "minorant_seeds": [s1, s2],
                "f": f.to_spec(),
                "g": g.to_spec(),
                "report": report,
            }));
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lc::DEFAULT_LC_TOL;
    use crate::pmf::tilt_to_mean;

    const EPS: f64 = 1e-12;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn triangle_on_identical_chain_has_zero_margin() {
        let f = FamilySpec::Binomial { n: 4, p: 0.4 }.realize(EPS).unwrap();
        let v = check_triangle(&f, &f, &f, &tols());
        assert!(v.holds());
        assert_eq!(v.margin, 0.0);
    }

    #[test]
    fn triangle_concrete_chain_holds() {
        // direct-summation oracle for the three divergences
        let f = bernoulli_sum(&[0.2, 0.4]).unwrap();
        let g = FamilySpec::Binomial { n: 2, p: 0.3 }.realize(EPS).unwrap();
        let h = FamilySpec::Binomial { n: 3, p: 0.3 }.realize(EPS).unwrap();
        let v = check_triangle(&f, &g, &h, &tols());
        assert!(v.holds(), "{v:?}");
        let direct = |a: &Pmf, b: &Pmf| -> f64 {
            (a.first_index()..=a.last_index())
                .map(|i| {
                    let x = a.weight_at(i);
                    if x > 0.0 {
                        x * (x / b.weight_at(i)).ln()
                    } else {
                        0.0
                    }
                })
                .sum()
        };
        let expect = direct(&f, &h) - direct(&f, &g) - direct(&g, &h);
        assert!((v.margin - expect).abs() < 1e-12);
    }

    #[test]
    fn triangle_without_equal_means_is_inconclusive() {
        let f = FamilySpec::Binomial { n: 2, p: 0.3 }.realize(EPS).unwrap();
        let g = FamilySpec::Binomial { n: 2, p: 0.5 }.realize(EPS).unwrap();
        let h = FamilySpec::Binomial { n: 2, p: 0.7 }.realize(EPS).unwrap();
        let v = check_triangle(&f, &g, &h, &tols());
        assert_eq!(v.status, VerdictStatus::Inconclusive);
    }

    #[test]
    fn margin_identity_is_tiny_on_valid_chains() {
        let h = FamilySpec::Poisson { lambda: 2.0 }.realize(EPS).unwrap();
        let g = random_lc_minorant(&h, 1).unwrap();
        let f = random_lc_minorant(&g, 2).unwrap();
        let resid = triangle_margin_identity(&f, &g, &h).unwrap();
        assert!(resid.abs() < 1e-10, "residual {resid}");
    }

    #[test]
    fn quadrangle_reduces_to_triangle_when_middle_collapses() {
        let h = FamilySpec::Binomial { n: 8, p: 0.45 }.realize(EPS).unwrap();
        let g = random_lc_minorant(&h, 5).unwrap();
        let f = random_lc_minorant(&g, 6).unwrap();
        let quad = check_quadrangle(&f, &g, &g, &h, &tols());
        let tri = check_triangle(&f, &g, &h, &tols());
        assert!(quad.holds() && tri.holds());
        assert!((quad.margin - tri.margin).abs() <= 1e-12);
    }

    #[test]
    fn quadrangle_collapsed_chain_margin_zero() {
        let f = FamilySpec::Geometric { p: 0.5 }.realize(EPS).unwrap();
        let v = check_quadrangle(&f, &f, &f, &f, &tols());
        assert!(v.holds());
        assert_eq!(v.margin, 0.0);
    }

    #[test]
    fn concave_dominance_linear_weight_is_tight() {
        let g = FamilySpec::Binomial { n: 6, p: 0.5 }.realize(EPS).unwrap();
        let f = random_lc_minorant(&g, 9).unwrap();
        let w: Vec<f64> = (0..=6).map(|i| 0.3 + 0.7 * i as f64).collect();
        let v = check_concave_dominance(&f, &g, &w, &tols()).unwrap();
        assert!(v.holds());
        assert!(v.margin.abs() <= 1e-10, "linear margin {}", v.margin);
    }

    #[test]
    fn concave_dominance_variance_instance() {
        // w(i) = -(i - E)^2 turns dominance into a variance comparison:
        // the Bernoulli sum has no larger variance than the matched binomial.
        let ps = [0.2, 0.5, 0.8];
        let f = bernoulli_sum(&ps).unwrap();
        let p_bar = 0.5;
        let g = FamilySpec::Binomial { n: 3, p: p_bar }.realize(EPS).unwrap();
        let e = 1.5;
        let w: Vec<f64> = (0..=3).map(|i| -(i as f64 - e) * (i as f64 - e)).collect();
        let v = check_concave_dominance(&f, &g, &w, &tols()).unwrap();
        assert!(v.holds());
        // moment oracle: margin = var(bi) - var(S)
        let var_s: f64 = ps.iter().map(|p| p * (1.0 - p)).sum();
        let var_b = 3.0 * p_bar * (1.0 - p_bar);
        assert!((v.margin - (var_b - var_s)).abs() < 1e-12);
    }

    #[test]
    fn concave_dominance_rejects_convex_table() {
        let f = FamilySpec::Binomial { n: 3, p: 0.5 }.realize(EPS).unwrap();
        let w = vec![0.0, 1.0, 3.0, 6.0];
        assert!(matches!(
            check_concave_dominance(&f, &f, &w, &tols()),
            Err(Error::NonConcaveWeights { .. })
        ));
    }

    #[test]
    fn karlin_zero_sequence_passes() {
        let r = karlin_partial_sums(&[0.0; 6], 1e-8);
        assert!(r.all_pass);
    }

    #[test]
    fn karlin_on_binomial_vs_tilted_poisson() {
        let f = FamilySpec::Binomial { n: 2, p: 0.5 }.realize(EPS).unwrap();
        let g0 = FamilySpec::Poisson { lambda: 1.0 }.realize(EPS).unwrap();
        let (g, _) = tilt_to_mean(&g0, 1.0).unwrap();
        assert!(lc_le(&f, &g, DEFAULT_LC_TOL).verdict);
        let a = difference_sequence(&f, &g);
        let r = karlin_partial_sums(&a, 1e-8);
        assert!(r.all_pass, "{r:?}");
    }

    #[test]
    fn karlin_rejects_plus_minus_with_zero_moments() {
        // a (+,-) pattern with both moments zero is impossible; any sequence
        // with that sign pattern must trip a hypothesis gate.
        let a = [1.0, -0.5, -0.5];
        let r = karlin_partial_sums(&a, 1e-8);
        assert!(!r.hypothesis_ok || !r.diff_pattern_ok);
    }

    #[test]
    fn maxent_binomial_and_poisson_targets() {
        let tol = tols();
        let g = FamilySpec::Binomial { n: 8, p: 0.4 }.realize(EPS).unwrap();
        let v = check_maxent(&g, 200, 17, &tol).unwrap();
        assert!(v.holds(), "{:?}", v.context);

        let g = FamilySpec::Poisson { lambda: 3.0 }.realize(EPS).unwrap();
        let v = check_maxent(&g, 200, 18, &tol).unwrap();
        assert!(v.holds(), "{:?}", v.context);
    }

    #[test]
    fn maxent_rejects_non_log_concave_reference() {
        let g = Pmf::new(0, vec![0.45, 0.05, 0.5], 0.0).unwrap();
        let v = check_maxent(&g, 10, 3, &tols()).unwrap();
        assert_eq!(v.status, VerdictStatus::Inconclusive);
    }

    #[test]
    fn best_binomial_equal_ps_hits_exact_match() {
        let t = best_binomial(&[0.3; 4], 8, &[0.2, 0.6], EPS, &tols()).unwrap();
        assert_eq!(t.argmin_row, 0);
        assert!(t.rows[0].kl.value.abs() <= 1e-12);
        for v in &t.side_checks {
            assert!(!v.violated(), "{v:?}");
        }
    }

    #[test]
    fn best_binomial_monotone_and_poisson_worst() {
        let ps = [0.1, 0.2, 0.3];
        let t = best_binomial(&ps, 12, &[0.1, 0.35, 0.8], EPS, &tols()).unwrap();
        assert_eq!(t.argmin_row, 0);
        for pair in t.rows.windows(2) {
            assert!(pair[1].kl.value >= pair[0].kl.value - 1e-13);
        }
        let po = t.poisson_row.as_ref().unwrap();
        assert!(po.kl.value > t.rows.last().unwrap().kl.value);
        for v in &t.side_checks {
            assert!(!v.violated(), "{v:?}");
        }
    }

    #[test]
    fn best_negbinomial_sweep() {
        let rs = [0.3, 0.6];
        let t = best_negbinomial(&rs, 8.0, 0.5, EPS, &tols()).unwrap();
        assert_eq!(t.argmin_row, 0);
        for pair in t.rows.windows(2) {
            assert!(pair[1].kl.value >= pair[0].kl.value - 1e-12);
        }
        for v in &t.side_checks {
            assert!(!v.violated(), "{v:?}");
        }
    }

    #[test]
    fn monotone_limit_binomial() {
        let verdicts =
            check_monotone_limit(LimitKind::Binomial, 1.0, &[2.0, 3.0, 4.0, 8.0, 16.0], EPS)
                .unwrap();
        for v in &verdicts {
            assert!(v.holds(), "{v:?}");
        }
        // decade-scale decay toward the limit
        let first = kl(
            &FamilySpec::Binomial { n: 2, p: 0.5 }.realize(EPS).unwrap(),
            &FamilySpec::Poisson { lambda: 1.0 }.realize(EPS).unwrap(),
        );
        let last = kl(
            &FamilySpec::Binomial { n: 16, p: 1.0 / 16.0 }.realize(EPS).unwrap(),
            &FamilySpec::Poisson { lambda: 1.0 }.realize_to(EPS, 16).unwrap(),
        );
        assert!(first.value > 10.0 * last.value);
    }

    #[test]
    fn monotone_limit_negbinomial() {
        let verdicts =
            check_monotone_limit(LimitKind::Negbinomial, 1.0, &[0.5, 1.0, 2.0, 4.0], EPS).unwrap();
        for v in &verdicts {
            assert!(v.holds(), "{v:?}");
        }
    }

    #[test]
    fn monotone_limit_rejects_order_at_or_below_mean() {
        assert!(check_monotone_limit(LimitKind::Binomial, 3.0, &[3.0, 4.0], EPS).is_err());
        assert!(check_monotone_limit(LimitKind::Binomial, 3.0, &[2.0, 4.0], EPS).is_err());
    }

    #[test]
    fn closure_equality_case_binomials() {
        let b2 = FamilySpec::Binomial { n: 2, p: 0.4 }.realize(EPS).unwrap();
        let b3 = FamilySpec::Binomial { n: 3, p: 0.4 }.realize(EPS).unwrap();
        let c = convolve(&b2, &b3);
        let b5 = FamilySpec::Binomial { n: 5, p: 0.4 }.realize(EPS).unwrap();
        assert!(c.approx_eq(&b5, 1e-10));
        assert!(lc_le(&c, &b5, DEFAULT_LC_TOL).verdict);
    }

    #[test]
    fn closure_all_variants_hold_on_samples() {
        let tol = tols();
        for seed in 0..25u64 {
            let v = check_convolution_closure(
                ClosureKind::Liggett { k: 3, m: 4, p: 0.35 },
                EPS,
                seed,
                &tol,
            )
            .unwrap();
            assert!(v.holds(), "liggett seed {seed}: {v:?}");

            let v = check_convolution_closure(
                ClosureKind::DavenportPolya { k: 1.3, m: 0.9, r: 0.45 },
                EPS,
                seed,
                &tol,
            )
            .unwrap();
            assert!(v.holds(), "dp seed {seed}: {v:?}");

            let v = check_convolution_closure(
                ClosureKind::PoissonLimitUlc { lambda: 1.5, mu: 2.0 },
                EPS,
                seed,
                &tol,
            )
            .unwrap();
            assert!(v.holds(), "ulc seed {seed}: {v:?}");

            let v = check_convolution_closure(
                ClosureKind::PoissonLimitLcx { lambda: 1.5, mu: 2.0 },
                EPS,
                seed,
                &tol,
            )
            .unwrap();
            assert!(v.holds(), "lcx seed {seed}: {v:?}");
        }
    }

    #[test]
    fn choi_xia_condition_branches() {
        // small lambda: the parameter condition fails and nothing is asserted
        let r = check_choi_xia(&[0.3, 0.4], 4, EPS).unwrap();
        assert!(!r.condition_met);
        assert!(r.verdicts.is_empty());

        // twelve fair coins: lambda = 6, r = 6, delta = 0, threshold = 12
        let ps = vec![0.5; 12];
        let r = check_choi_xia(&ps, 12, EPS).unwrap();
        assert!(r.condition_met);
        assert_eq!(r.m_threshold, Some(12.0));
        for v in &r.verdicts {
            assert!(v.holds(), "{v:?}");
        }
        assert!(r.d_m.unwrap() < r.d_m_plus_1.unwrap());
        assert!(r.d_m_plus_1.unwrap() < r.v_poisson.unwrap());
    }

    #[test]
    fn choi_xia_tv_nondecreasing_in_m() {
        let ps = vec![0.5; 12];
        let f = bernoulli_sum(&ps).unwrap();
        let mut prev = -1.0;
        for m in 12..=16usize {
            let b = FamilySpec::Binomial {
                n: m as u32,
                p: 6.0 / m as f64,
            }
            .realize(EPS)
            .unwrap();
            let d = total_variation(&f, &b).value;
            assert!(d >= prev - 1e-12, "m={m}");
            prev = d;
        }
    }

    #[test]
    fn iprojection_examples() {
        let g = FamilySpec::Binomial { n: 4, p: 0.5 }.realize(EPS).unwrap();
        let h = FamilySpec::Poisson { lambda: 2.0 }.realize(EPS).unwrap();
        let v = check_iprojection(&g, &h, 200, 29, &tols()).unwrap();
        assert!(v.holds(), "{:?}", v.context);
    }

    #[test]
    fn fuzz_reflexive_pairs_produce_no_counterexamples() {
        // with f = f' and g = g' the implication is reflexivity
        let tol = tols();
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_family(&mut rng).realize(EPS).unwrap();
            let g = random_family(&mut rng).realize(EPS).unwrap();
            let report = lc_le(&convolve(&f, &g), &convolve(&f, &g), tol.lc);
            assert!(report.verdict);
        }
    }

    #[test]
    fn fuzz_liggett_instances_never_fail() {
        let tol = tols();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..30 {
            let (k, m) = (rng.gen_range(2..=6), rng.gen_range(2..=6));
            let p = rng.gen_range(0.2..0.8);
            let v = check_convolution_closure(
                ClosureKind::Liggett { k, m, p },
                EPS,
                rng.gen(),
                &tol,
            )
            .unwrap();
            assert!(!v.violated(), "{v:?}");
        }
    }
}
