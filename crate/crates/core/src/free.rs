//! Exact kernels of the free operator (−i∂ₓ)ᴺ.
//!
//! With ρⱼ = αʲζ, the fundamental solution is G₀(x) = θ(x)(i/N)Σⱼ e^{iρⱼx}/ρⱼ^{N−1},
//! and the resolvent keeps the decaying exponentials on each side of x = y.
//! Near ζ(x−y) = 0 everything is evaluated through eₙ(w) = Σ wᵐ/(n+m)!, which
//! has no cancellation as ζ → 0.

use crate::error::{Error, Result};
use crate::spectral::{alpha_pow, i_pow, SpectralParam};
use crate::special::exp_remainder;
use crate::C64;

const SPLIT_THRESHOLD: f64 = 1e-3;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// (1/N)Σⱼ α^{j(r+1−N)}: 0 for r ≤ N−2, 1 for r = N−1.
pub fn root_identity(n: usize, r: usize) -> C64 {
    let e = (r as i64 + 1 - n as i64).rem_euclid(n as i64) as usize;
    (0..n).map(|j| alpha_pow(n, j * e)).sum::<C64>() / n as f64
}

/// ∂ₓᵏ G₀(x, ζ) for 0 ≤ k ≤ N−1 (one-sided at x = 0+; zero for x ≤ 0).
pub fn free_green_deriv(x: f64, sp: &SpectralParam, k: usize) -> C64 {
    let n = sp.n();
    assert!(k < n);
    if x <= 0.0 {
        return C64::new(0.0, 0.0);
    }
    if sp.is_zero() {
        return i_pow(n as i64) * x.powi((n - 1 - k) as i32) / factorial(n - 1 - k);
    }
    if sp.zeta().norm() * x < SPLIT_THRESHOLD {
        let s: C64 = (0..n)
            .map(|j| exp_remainder(n - 1 - k, C64::i() * sp.root(j) * x))
            .sum();
        return C64::i() / n as f64 * i_pow(n as i64 - 1) * x.powi((n - 1 - k) as i32) * s;
    }
    let s: C64 = (0..n)
        .map(|j| {
            let r = sp.root(j);
            (C64::i() * r).powu(k as u32) * (C64::i() * r * x).exp() / r.powu((n - 1) as u32)
        })
        .sum();
    C64::i() / n as f64 * s
}

/// G₀(x, ζ); the ζ = 0 branch is iᴺx^{N−1}/(N−1)!.
pub fn free_green(x: f64, sp: &SpectralParam) -> C64 {
    free_green_deriv(x, sp, 0)
}

/// (−i∂ₓ)ᵏG₀ at x = 0+, from the explicit formula.
pub fn free_green_derivative_at_zero(sp: &SpectralParam, k: usize) -> C64 {
    let n = sp.n();
    assert!(k < n);
    if sp.is_zero() {
        return if k == n - 1 { C64::i() } else { C64::new(0.0, 0.0) };
    }
    // (−i)ᵏ(i/N)Σ (iρ)ᵏ/ρ^{N−1} = (i/N)Σ ρ^{k+1−N}
    let s: C64 = (0..n).map(|j| sp.root(j).powi(k as i32 + 1 - n as i32)).sum();
    C64::i() / n as f64 * s
}

/// Errors unless every retained exponential strictly decays.
pub fn check_open_sector(sp: &SpectralParam) -> Result<()> {
    if sp.is_zero() {
        return Err(Error::ZeroZeta);
    }
    let tol = 1e-12 * sp.zeta().norm();
    for j in sp.right_branches() {
        if sp.root(j).im <= tol {
            return Err(Error::MarginalRoot { root: j });
        }
    }
    for j in sp.left_branches() {
        if sp.root(j).im >= -tol {
            return Err(Error::MarginalRoot { root: j });
        }
    }
    Ok(())
}

/// Singular part P(t) = (i/N)Σ_{j<M}Σ_{ℓ≤N−2}(it)^ℓ/(ℓ!ρⱼ^{N−1−ℓ}) and remainder
/// R₁ = R − P of the free resolvent, M = [(N+1)/2].
#[derive(Debug, Clone)]
pub struct FreeKernelSplit {
    sp: SpectralParam,
    /// coefficients of P as a polynomial in t = x − y
    coeffs: Vec<C64>,
}

impl FreeKernelSplit {
    pub fn singular_coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn sp(&self) -> &SpectralParam {
        &self.sp
    }

    /// ∂ₓᵏ P(x − y).
    pub fn singular_deriv(&self, x: f64, y: f64, k: usize) -> C64 {
        let t = x - y;
        let mut s = C64::new(0.0, 0.0);
        for (l, c) in self.coeffs.iter().enumerate().skip(k) {
            let mut f = 1.0;
            for q in 0..k {
                f *= (l - q) as f64;
            }
            s += c * f * t.powi((l - k) as i32);
        }
        s
    }

    pub fn singular(&self, x: f64, y: f64) -> C64 {
        self.singular_deriv(x, y, 0)
    }

    /// ∂ₓᵏ R₁(x, y), 0 ≤ k ≤ N−1; one-sided (x → y+) at the diagonal.
    pub fn remainder_deriv(&self, x: f64, y: f64, k: usize) -> C64 {
        remainder_deriv(&self.sp, x - y, k)
    }

    pub fn remainder(&self, x: f64, y: f64) -> C64 {
        self.remainder_deriv(x, y, 0)
    }

    /// P + R₁.
    pub fn total(&self, x: f64, y: f64) -> C64 {
        self.singular(x, y) + self.remainder(x, y)
    }
}

/// Works on the closed sector including ζ = 0 (the limit kernel).
fn remainder_deriv(sp: &SpectralParam, t: f64, k: usize) -> C64 {
    let n = sp.n();
    assert!(k < n);
    let (branches, sign) = if t >= 0.0 {
        (sp.right_branches(), 1.0)
    } else {
        (sp.left_branches(), -1.0)
    };
    let s: C64 = branches
        .map(|j| exp_remainder(n - 1 - k, C64::i() * sp.root(j) * t))
        .sum();
    C64::i() * sign / n as f64 * i_pow(n as i64 - 1) * t.powi((n - 1 - k) as i32) * s
}

/// ∂ₓᵏ R₁(x, y; ζ) including the ζ → 0 limit.
pub fn free_remainder_deriv(x: f64, y: f64, sp: &SpectralParam, k: usize) -> C64 {
    remainder_deriv(sp, x - y, k)
}

pub fn taylor_split(sp: &SpectralParam) -> Result<FreeKernelSplit> {
    check_open_sector(sp)?;
    let n = sp.n();
    let coeffs = (0..n - 1)
        .map(|l| {
            let s: C64 = sp
                .right_branches()
                .map(|j| sp.root(j).powi(-((n - 1 - l) as i32)))
                .sum();
            C64::i() / n as f64 * i_pow(l as i64) / factorial(l) * s
        })
        .collect();
    Ok(FreeKernelSplit { sp: *sp, coeffs })
}

/// ∂ₓᵏ R(x, y; ζ), one-sided from x > y at the diagonal.
pub fn free_resolvent_deriv(x: f64, y: f64, sp: &SpectralParam, k: usize) -> Result<C64> {
    check_open_sector(sp)?;
    let n = sp.n();
    let t = x - y;
    if sp.zeta().norm() * t.abs() < SPLIT_THRESHOLD {
        let split = taylor_split(sp)?;
        return Ok(split.singular_deriv(x, y, k) + split.remainder_deriv(x, y, k));
    }
    let term = |j: usize| {
        let r = sp.root(j);
        (C64::i() * r).powu(k as u32) * (C64::i() * r * t).exp() / r.powu((n - 1) as u32)
    };
    let v = if t >= 0.0 {
        sp.right_branches().map(term).sum::<C64>()
    } else {
        -sp.left_branches().map(term).sum::<C64>()
    };
    Ok(C64::i() / n as f64 * v)
}

pub fn free_resolvent(x: f64, y: f64, sp: &SpectralParam) -> Result<C64> {
    free_resolvent_deriv(x, y, sp, 0)
}
