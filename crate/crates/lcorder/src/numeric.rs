//! Shared numeric plumbing: compensated summation and log-domain special
//! functions.

use statrs::function::gamma;

/// Kahan summation with Neumaier's correction.
///
/// Divergence margins near zero must survive cancellation between terms of
/// opposite sign, so every probability/divergence accumulation in this crate
/// goes through this accumulator rather than a bare `+=`.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    s: f64,
    c: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.s + self.c
    }
}

/// Compensated sum of an iterator of terms.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// ln Γ(x) for x > 0.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// Digamma ψ(x).
#[inline]
pub fn digamma(x: f64) -> f64 {
    gamma::digamma(x)
}

/// ln(i!) via ln Γ(i + 1).
#[inline]
pub fn ln_factorial(i: usize) -> f64 {
    gamma::ln_gamma(i as f64 + 1.0)
}

/// ln C(n, k) for real n ≥ k ≥ 0.
#[inline]
pub fn ln_choose(n: f64, k: f64) -> f64 {
    gamma::ln_gamma(n + 1.0) - gamma::ln_gamma(k + 1.0) - gamma::ln_gamma(n - k + 1.0)
}

/// Rounding slack for a compensated sum of `n` terms of magnitude ~`scale`.
#[inline]
pub fn rounding_slack(n: usize, scale: f64) -> f64 {
    f64::EPSILON * (n as f64 + 1.0) * (1.0 + scale.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let mut s = NeumaierSum::new();
        s.add(1e100);
        s.add(1.0);
        s.add(-1e100);
        assert_eq!(s.total(), 1.0);
    }

    #[test]
    fn ln_factorial_small_values() {
        assert!((ln_factorial(0)).abs() < 1e-14);
        assert!((ln_factorial(1)).abs() < 1e-14);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ln_choose_matches_pascal() {
        assert!((ln_choose(5.0, 2.0) - 10f64.ln()).abs() < 1e-12);
        assert!((ln_choose(10.0, 0.0)).abs() < 1e-12);
    }
}
