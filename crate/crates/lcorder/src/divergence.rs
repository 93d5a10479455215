//! Entropy, relative entropy, total variation, and the Stein–Chen-style
//! binomial approximation bound, all carrying certified error intervals.
//!
//! Error bounds combine the truncated-tail contribution (tail mass spread
//! over a heuristic number of extra indices) with compensated-summation
//! rounding slack. They are deliberately loose but never understate.

use serde::{Deserialize, Serialize};

use crate::numeric::{rounding_slack, NeumaierSum};
use crate::pmf::{Pmf, TAIL_LENGTH_HEURISTIC};
use crate::{Error, Result};

/// A scalar divergence or entropy value with a rigorous truncation-plus-
/// rounding error bound. `finite = false` marks the off-support branch of
/// relative entropy; the stored value is then +∞ (serialized as null).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DivergenceValue {
    #[serde(with = "extended_f64")]
    pub value: f64,
    pub error_bound: f64,
    pub finite: bool,
}

impl DivergenceValue {
    pub fn finite(value: f64, error_bound: f64) -> Self {
        DivergenceValue {
            value,
            error_bound,
            finite: true,
        }
    }

    pub fn infinite() -> Self {
        DivergenceValue {
            value: f64::INFINITY,
            error_bound: 0.0,
            finite: false,
        }
    }

    /// Sum with error accumulation; infinite if either side is.
    pub fn add(&self, other: &DivergenceValue) -> DivergenceValue {
        if !self.finite || !other.finite {
            return DivergenceValue::infinite();
        }
        DivergenceValue::finite(self.value + other.value, self.error_bound + other.error_bound)
    }
}

/// JSON representation for possibly-infinite floats: ±∞ and NaN become null.
pub(crate) mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let opt = Option::<f64>::deserialize(d)?;
        Ok(opt.unwrap_or(f64::INFINITY))
    }
}

/// Entropy/divergence contribution that a truncated tail of mass `t` ending
/// near `last_index` can hide: each missing term is at most
/// t · (|log t| + log of the heuristic index horizon).
fn tail_term(tail: f64, last_index: usize) -> f64 {
    if tail <= 0.0 {
        return 0.0;
    }
    tail * (1.0 + (1.0 / tail).ln().max(0.0) + (last_index as f64 + TAIL_LENGTH_HEURISTIC).ln())
}

/// Shannon entropy −Σ f_i log f_i with 0·log 0 = 0.
pub fn entropy(f: &Pmf) -> DivergenceValue {
    let mut acc = NeumaierSum::new();
    for &w in f.weights() {
        if w > 0.0 {
            acc.add(-w * w.ln());
        }
    }
    let value = acc.total();
    let err = tail_term(f.tail_bound(), f.last_index()) + rounding_slack(f.len(), value);
    DivergenceValue::finite(value, err)
}

/// Relative entropy Σ f_i log(f_i/g_i), with 0·log(0/0) = 0 and the
/// off-support branch yielding +∞.
///
/// Support containment is judged on stored windows: a hole of `g` inside
/// supp(f) — including any index past g's stored window — takes the infinite
/// branch rather than a huge finite value.
pub fn kl(f: &Pmf, g: &Pmf) -> DivergenceValue {
    let mut acc = NeumaierSum::new();
    for i in f.first_index()..=f.last_index() {
        let fi = f.weight_at(i);
        if fi <= 0.0 {
            continue;
        }
        let gi = g.weight_at(i);
        if gi < f64::MIN_POSITIVE {
            return DivergenceValue::infinite();
        }
        acc.add(fi * (fi.ln() - gi.ln()));
    }
    let value = acc.total();
    let err = tail_term(f.tail_bound(), f.last_index())
        + tail_term(g.tail_bound(), g.last_index())
        + rounding_slack(f.len(), value);
    DivergenceValue::finite(value, err)
}

/// Total variation distance ½ Σ |f_i − g_i| over the union of stored windows.
pub fn total_variation(f: &Pmf, g: &Pmf) -> DivergenceValue {
    let lo = f.first_index().min(g.first_index());
    let hi = f.last_index().max(g.last_index());
    let mut acc = NeumaierSum::new();
    for i in lo..=hi {
        acc.add((f.weight_at(i) - g.weight_at(i)).abs());
    }
    let value = 0.5 * acc.total();
    let err = 0.5 * (f.tail_bound() + g.tail_bound()) + rounding_slack(hi - lo + 1, value);
    DivergenceValue::finite(value, err)
}

/// Closed-form total-variation bound for approximating a Bernoulli sum by
/// the mean-matched binomial:
/// (1 − p̄^{n+1} − q̄^{n+1}) · [(n+1) p̄ q̄]⁻¹ · Σ (p_i − p̄)².
pub fn ehm_bound(ps: &[f64]) -> Result<f64> {
    if ps.is_empty() {
        return Err(Error::EmptyInput("ehm_bound needs at least one p"));
    }
    for &p in ps {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p must lie in (0, 1), got {p}"
            )));
        }
    }
    let n = ps.len() as f64;
    let p_bar = crate::numeric::compensated_sum(ps.iter().copied()) / n;
    let q_bar = 1.0 - p_bar;
    let ssq = crate::numeric::compensated_sum(ps.iter().map(|p| (p - p_bar) * (p - p_bar)));
    let front = 1.0 - p_bar.powi(ps.len() as i32 + 1) - q_bar.powi(ps.len() as i32 + 1);
    Ok(front / ((n + 1.0) * p_bar * q_bar) * ssq)
}
