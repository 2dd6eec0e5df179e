//! Small potentials V_κ with an eigenvalue κ³ bifurcating from the threshold.
//!
//! Internally the equation is −u‴ + V_κu = κ³u. The eigenfunction is e^{−κx} for
//! x ≥ 1, Re e^{−ακx} for x ≤ −1 and 1 + Σ_{j≤7} aⱼxʲ on [−1, 1], with the aⱼ fixed
//! by continuity of u, u′, u″, u‴ at ±1; then V_κ = (u‴ + κ³u)/u on [−1, 1].
//!
//! In the (−i∂ₓ)³ convention, w(x) = u(−x) solves (−i∂ₓ)³w + Vw = ζ³w with
//! V(x) = iV_κ(−x) and ζ = κe^{iπ/6}; w = (θ₀ + θ₁)/2 at +∞ and w = γ₂ at −∞.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::{Piece, Potential};
use crate::resolvent::{delta, jost_family, DeltaReport};
use crate::spectral::{alpha_pow, SpectralParam};
use crate::C64;
use nalgebra::{SMatrix, SVector};
use std::f64::consts::PI;

/// Default upper end of the κ range; u_κ ≥ 1/2 on [−1, 1] below it.
pub const KAPPA0: f64 = 0.3;

fn falling(j: usize, k: usize) -> f64 {
    if k > j {
        0.0
    } else {
        ((j - k + 1)..=j).map(|v| v as f64).product()
    }
}

fn poly_deriv(p: &[f64], x: f64, k: usize) -> f64 {
    p.iter()
        .enumerate()
        .skip(k)
        .map(|(j, c)| c * falling(j, k) * x.powi((j - k) as i32))
        .sum()
}

#[derive(Debug, Clone)]
pub struct Bifurcation {
    pub kappa: f64,
    /// aⱼ, j = 0..7
    pub a: [f64; 8],
    /// coefficients of u on [−1, 1]: (1 + a₀, a₁, …, a₇)
    pub poly: Vec<f64>,
    /// V_κ for −u‴ + Vu = zu
    pub v_kappa: Potential,
    /// iV_κ(−x) for (−i∂ₓ)³ + V
    pub v: Potential,
}

fn left_tail(kappa: f64, x: f64, k: usize) -> f64 {
    let lam = -alpha_pow(3, 1) * kappa;
    (lam.powu(k as u32) * (lam * x).exp()).re
}

fn right_tail(kappa: f64, x: f64, k: usize) -> f64 {
    (-kappa).powi(k as i32) * (-kappa * x).exp()
}

pub fn build_bifurcation_potential(kappa: f64) -> Result<Bifurcation> {
    build_with_range(kappa, KAPPA0)
}

pub fn build_with_range(kappa: f64, kappa0: f64) -> Result<Bifurcation> {
    if !(0.0..kappa0).contains(&kappa) {
        return Err(Error::KappaRange { kappa, kappa0 });
    }
    let mut m = SMatrix::<f64, 8, 8>::zeros();
    let mut rhs = SVector::<f64, 8>::zeros();
    for (s, xs) in [1.0f64, -1.0].iter().enumerate() {
        for k in 0..4 {
            let row = 4 * s + k;
            for j in 0..8 {
                m[(row, j)] = if j >= k { falling(j, k) * xs.powi((j - k) as i32) } else { 0.0 };
            }
            let tail = if *xs > 0.0 { right_tail(kappa, *xs, k) } else { left_tail(kappa, *xs, k) };
            rhs[row] = tail - if k == 0 { 1.0 } else { 0.0 };
        }
    }
    let sol = m.lu().solve(&rhs).ok_or_else(|| Error::Singular("bifurcation matching system".into()))?;
    let a: [f64; 8] = std::array::from_fn(|j| sol[j]);
    let mut poly = a.to_vec();
    poly[0] += 1.0;
    // u‴ + κ³u as a polynomial
    let k3 = kappa.powi(3);
    let num: Vec<C64> = (0..8)
        .map(|j| {
            let d3 = if j + 3 < 8 { poly[j + 3] * falling(j + 3, 3) } else { 0.0 };
            C64::new(d3 + k3 * poly[j], 0.0)
        })
        .collect();
    let den: Vec<C64> = poly.iter().map(|&c| C64::new(c, 0.0)).collect();
    let v_kappa = if kappa == 0.0 {
        Potential::zero(1.0)
    } else {
        Potential::new(1.0, vec![Piece { a: -1.0, b: 1.0, num, den: Some(den) }], false)?
    };
    let v = v_kappa.mirrored(C64::i());
    Ok(Bifurcation { kappa, a, poly, v_kappa, v })
}

impl Bifurcation {
    /// u_κ^{(k)}(x), k ≤ 3.
    pub fn u(&self, x: f64, k: usize) -> f64 {
        if x > 1.0 {
            right_tail(self.kappa, x, k)
        } else if x < -1.0 {
            left_tail(self.kappa, x, k)
        } else {
            poly_deriv(&self.poly, x, k)
        }
    }

    /// ζ = κe^{iπ/6}, where z = ζ³ = iκ³ is the eigenvalue in the (−i∂ₓ)³ convention.
    pub fn zeta(&self) -> SpectralParam {
        SpectralParam::on_ray(3, self.kappa, PI / 6.0).expect("bisector of the sector")
    }

    pub fn min_on_support(&self, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| self.u(-1.0 + 2.0 * i as f64 / samples as f64, 0))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sup_potential(&self, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| self.v_kappa.eval(-1.0 + 2.0 * i as f64 / samples as f64).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_coefficient(&self) -> f64 {
        self.a.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct BifurcationCheck {
    /// max |−u‴ + V_κu − κ³u| on [−1.2, 1.2], one-sided at the joints
    pub residual: f64,
    /// max jump of u, u′, u″, u‴ at x = ±1
    pub joint_continuity: f64,
    /// |u| decreasing on x ≥ 1 and bounded on x ≤ −1
    pub tails_ok: bool,
    pub delta: DeltaReport,
}

pub fn verify_bifurcation_eigenvalue(b: &Bifurcation, grid: &Grid) -> Result<BifurcationCheck> {
    let k3 = b.kappa.powi(3);
    let mut residual: f64 = 0.0;
    let samples = 2400;
    for i in 0..=samples {
        let x = -1.2 + 2.4 * i as f64 / samples as f64;
        let v = b.v_kappa.eval(x).re;
        let r = -b.u(x, 3) + v * b.u(x, 0) - k3 * b.u(x, 0);
        residual = residual.max(r.abs());
    }
    for xs in [-1.0, 1.0] {
        let v = b.v_kappa.eval(xs).re;
        let inner = -poly_deriv(&b.poly, xs, 3) + (v - k3) * poly_deriv(&b.poly, xs, 0);
        residual = residual.max(inner.abs());
    }
    let mut joint_continuity: f64 = 0.0;
    for k in 0..4 {
        joint_continuity = joint_continuity.max((poly_deriv(&b.poly, 1.0, k) - right_tail(b.kappa, 1.0, k)).abs());
        joint_continuity = joint_continuity.max((poly_deriv(&b.poly, -1.0, k) - left_tail(b.kappa, -1.0, k)).abs());
    }
    let right: Vec<f64> = (0..50).map(|i| b.u(1.0 + i as f64, 0).abs()).collect();
    let tails_ok = right.windows(2).all(|w| w[1] <= w[0]) && (0..50).all(|i| b.u(-1.0 - i as f64, 0).abs() <= 1.0 + 1e-12);
    let sp = b.zeta();
    let fam = jost_family(&b.v, &sp, grid)?;
    let refs: Vec<_> = fam.iter().collect();
    let delta = delta(&refs, &[-1.0, 0.0, 1.0])?;
    Ok(BifurcationCheck { residual, joint_continuity, tails_ok, delta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_kappa_is_trivial() {
        let b = build_bifurcation_potential(0.0).unwrap();
        assert!(b.a.iter().all(|a| a.abs() < 1e-14));
        assert!(b.v_kappa.is_zero());
    }

    #[test]
    fn matching_and_residual() {
        let b = build_bifurcation_potential(0.05).unwrap();
        let v = Potential::zero(1.0);
        let grid = Grid::for_potential(&v, 4.0, 0.25, 10, &[]).unwrap();
        let c = verify_bifurcation_eigenvalue(&b, &grid).unwrap();
        assert!(c.residual < 1e-8, "{}", c.residual);
        assert!(c.joint_continuity < 1e-12, "{}", c.joint_continuity);
        assert!(c.tails_ok);
        assert!(c.delta.dependent, "{:?}", c.delta);
        assert!(b.min_on_support(200) >= 0.5);
    }

    #[test]
    fn out_of_range() {
        assert!(build_bifurcation_potential(0.5).is_err());
        assert!(build_bifurcation_potential(-0.1).is_err());
    }
}
