//! Entire functions used by the exact kernels and propagators.

use crate::C64;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// eₙ(w) = Σ_{m≥0} wᵐ/(n+m)! = (eʷ − Σ_{m<n} wᵐ/m!)/wⁿ.
/// Series for |w| ≤ 1, closed form otherwise; e₀ = eʷ.
pub fn exp_remainder(n: usize, w: C64) -> C64 {
    if n == 0 {
        return w.exp();
    }
    if w.norm() <= 1.0 {
        let mut term = C64::new(1.0 / factorial(n), 0.0);
        let mut sum = term;
        for m in 1..60 {
            term *= w / (n + m) as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        let mut poly = C64::new(0.0, 0.0);
        let mut t = C64::new(1.0, 0.0);
        for m in 0..n {
            if m > 0 {
                t *= w / m as f64;
            }
            poly += t;
        }
        (w.exp() - poly) / w.powu(n as u32)
    }
}

/// Eᵣ(c, t) = Σ_q c^q t^{qN+r}/(qN+r)!, the coefficient of Cʳ in exp(tC) for a
/// companion matrix with Cᴺ = c·I.
pub fn companion_coeff(n: usize, r: usize, c: C64, t: f64) -> C64 {
    let lam_mod = c.norm().powf(1.0 / n as f64);
    let s = lam_mod * t.abs();
    if s < 2.0 {
        let u = c * t.powi(n as i32);
        let mut term = C64::new(t.powi(r as i32) / factorial(r), 0.0);
        let mut sum = term;
        let mut k = r;
        for _ in 1..80 {
            let mut d = 1.0;
            for j in 1..=n {
                d *= (k + j) as f64;
            }
            k += n;
            term = term * u / d;
            sum += term;
            if term.norm() <= 1e-18 * sum.norm().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        let base = c.arg() / n as f64;
        let mut sum = C64::new(0.0, 0.0);
        for j in 0..n {
            let lam = C64::from_polar(lam_mod, base + 2.0 * std::f64::consts::PI * j as f64 / n as f64);
            sum += (lam * t).exp() / lam.powu(r as u32);
        }
        sum / n as f64
    }
}
