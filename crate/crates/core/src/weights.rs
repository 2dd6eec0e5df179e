//! Japanese brackets, weight exponents and moment integrals of V.

use crate::grid::gauss_legendre;
use crate::potential::Potential;
use serde::{Deserialize, Serialize};

/// ⟨x⟩^σ = (1 + x²)^{σ/2}.
pub fn bracket(x: f64, sigma: f64) -> f64 {
    (1.0 + x * x).powf(0.5 * sigma)
}

/// ⟨x⁻⟩^σ: ⟨x⟩^σ for x < 0, 1 for x ≥ 0.
pub fn bracket_minus(x: f64, sigma: f64) -> f64 {
    if x < 0.0 {
        bracket(x, sigma)
    } else {
        1.0
    }
}

/// ⟨x⁺⟩^σ: 1 for x ≤ 0, ⟨x⟩^σ for x > 0.
pub fn bracket_plus(x: f64, sigma: f64) -> f64 {
    if x > 0.0 {
        bracket(x, sigma)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub s: f64,
    pub s_prime: f64,
}

impl WeightSpec {
    pub fn new(s: f64, s_prime: f64) -> Self {
        Self { s, s_prime }
    }

    /// s, s′ > N − 3/2.
    pub fn admissible(&self, n: usize) -> bool {
        let t = n as f64 - 1.5;
        self.s > t && self.s_prime > t
    }
}

/// Where the exponential weight of the one-sided moments is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailWeight {
    /// e^{μ|x|} at the lower/upper limit x, as displayed in the definition of M±(x).
    Outer,
    /// e^{μ|y|} inside the integral, matching the total moment M.
    Inner,
}

fn integrate_abs(v: &Potential, a: f64, b: f64, n: usize, mu: f64, inner: bool) -> f64 {
    let (gx, gw) = gauss_legendre(12);
    let mut total = 0.0;
    for p in v.pieces() {
        let lo = p.a.max(a);
        let hi = p.b.min(b);
        if lo >= hi {
            continue;
        }
        let mut cuts = vec![lo, hi];
        if lo < 0.0 && hi > 0.0 {
            cuts.insert(1, 0.0);
        }
        for w in cuts.windows(2) {
            let sub = 16;
            let d = (w[1] - w[0]) / sub as f64;
            for k in 0..sub {
                let c0 = w[0] + k as f64 * d;
                for (t, wt) in gx.iter().zip(&gw) {
                    let y = c0 + d * (t + 1.0) / 2.0;
                    let e = if inner { (mu * y.abs()).exp() } else { 1.0 };
                    total += wt * d / 2.0 * bracket(y, (n - 1) as f64) * e * p.eval(y).norm();
                }
            }
        }
    }
    total
}

/// M = ∫⟨x⟩^{N−1} e^{μ|x|} |V(x)| dx.
pub fn moment_m(v: &Potential, n: usize, mu: f64) -> f64 {
    integrate_abs(v, f64::NEG_INFINITY, f64::INFINITY, n, mu, true)
}

/// M₊(x) = ∫_x^∞ (weight) ⟨y⟩^{N−1}|V(y)| dy.
pub fn moment_plus(v: &Potential, n: usize, mu: f64, x: f64, tw: TailWeight) -> f64 {
    match tw {
        TailWeight::Inner => integrate_abs(v, x, f64::INFINITY, n, mu, true),
        TailWeight::Outer => (mu * x.abs()).exp() * integrate_abs(v, x, f64::INFINITY, n, mu, false),
    }
}

/// M₋(x) = ∫_{−∞}^x (weight) ⟨y⟩^{N−1}|V(y)| dy.
pub fn moment_minus(v: &Potential, n: usize, mu: f64, x: f64, tw: TailWeight) -> f64 {
    match tw {
        TailWeight::Inner => integrate_abs(v, f64::NEG_INFINITY, x, n, mu, true),
        TailWeight::Outer => (mu * x.abs()).exp() * integrate_abs(v, f64::NEG_INFINITY, x, n, mu, false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn brackets() {
        assert_eq!(bracket(0.0, 5.0), 1.0);
        assert!((bracket(1.0, 2.0) - 2.0).abs() < 1e-15);
        assert_eq!(bracket_plus(-3.0, 1.0), 1.0);
        assert_eq!(bracket_minus(3.0, 1.0), 1.0);
        assert!((bracket_minus(-3.0, 1.0) - 10f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn admissibility() {
        assert!(WeightSpec::new(2.0, 2.0).admissible(3));
        assert!(!WeightSpec::new(1.5, 2.0).admissible(3));
        assert!(WeightSpec::new(0.6, 0.6).admissible(2));
    }

    #[test]
    fn moments_of_indicator() {
        let v = Potential::indicator(-1.0, 1.0, C64::new(1.0, 0.0), 1.0).unwrap();
        assert!((moment_m(&v, 3, 0.0) - 8.0 / 3.0).abs() < 1e-13);
        assert_eq!(moment_m(&Potential::zero(1.0), 3, 0.0), 0.0);
        assert_eq!(moment_plus(&v, 3, 0.0, 1.0, TailWeight::Outer), 0.0);
        assert!((moment_minus(&v, 3, 0.0, 0.0, TailWeight::Inner) - 4.0 / 3.0).abs() < 1e-13);
        // μ = 1: ∫_{-1}^{1} e^{|x|}(1+x²) = 2(2e − 3)
        let exact = 2.0 * (2.0 * std::f64::consts::E - 3.0);
        assert!((moment_m(&v, 3, 1.0) - exact).abs() < 1e-12);
    }
}
