//! Closed-form propagators of the companion system over intervals of constant potential.
//!
//! With C the companion matrix whose last row is (c, 0, …, 0), Cᴺ = c·I, so
//! exp(tC) = Σ_{r<N} Eᵣ(c, t)Cʳ exactly. This covers the confluent case c = 0
//! (polynomial fundamental system) without special treatment.

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::special::companion_coeff;
use crate::spectral::{i_pow, SpectralParam};
use crate::C64;
use nalgebra::DMatrix;

/// Companion matrix of w′ = Cw for u^{(N)} = c·u.
pub fn companion_matrix(n: usize, c: C64) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n - 1 {
        m[(k, k + 1)] = C64::new(1.0, 0.0);
    }
    m[(n - 1, 0)] = c;
    m
}

/// exp(tC) for the companion matrix with Cᴺ = c·I.
pub fn companion_propagator(n: usize, c: C64, t: f64) -> DMatrix<C64> {
    let cm = companion_matrix(n, c);
    let mut power = DMatrix::identity(n, n);
    let mut out = DMatrix::zeros(n, n);
    for r in 0..n {
        out += &power * companion_coeff(n, r, c, t);
        power = &power * &cm;
    }
    out
}

/// Applies exp(tC) to a state vector without forming the matrix.
pub fn propagate_free(n: usize, c: C64, t: f64, w: &[C64]) -> Vec<C64> {
    let e: Vec<C64> = (0..n).map(|r| companion_coeff(n, r, c, t)).collect();
    // (Cʳw)ₖ = w_{k+r} for k + r < N, c·w_{k+r−N} otherwise
    (0..n)
        .map(|k| {
            (0..n)
                .map(|r| if k + r < n { e[r] * w[k + r] } else { e[r] * c * w[k + r - n] })
                .sum()
        })
        .collect()
}

/// Propagator of (u, u′, …, u^{(N−1)}) from x0 to x1.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub x0: f64,
    pub x1: f64,
    pub matrix: DMatrix<C64>,
}

impl TransferMatrix {
    pub fn det(&self) -> C64 {
        self.matrix.determinant()
    }

    pub fn apply(&self, w: &[C64]) -> Vec<C64> {
        let v = nalgebra::DVector::from_column_slice(w);
        (&self.matrix * v).iter().copied().collect()
    }

    /// `next` after `self`, i.e. the propagator from self.x0 to next.x1.
    pub fn then(&self, next: &TransferMatrix) -> TransferMatrix {
        TransferMatrix { x0: self.x0, x1: next.x1, matrix: &next.matrix * &self.matrix }
    }
}

/// Exact transfer matrix for a piecewise-constant V between x0 and x1 (either order).
pub fn transfer_matrix_oracle(v: &Potential, sp: &SpectralParam, x0: f64, x1: f64) -> Result<TransferMatrix> {
    let n = sp.n();
    let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
    let mut cuts: Vec<f64> = v.breakpoints().into_iter().filter(|&b| b > lo && b < hi).collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if x0 > x1 {
        cuts.reverse();
    }
    let mut m = DMatrix::identity(n, n);
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let v0 = match v.pieces().iter().find(|p| p.a <= mid && mid <= p.b) {
            Some(p) if !p.is_constant() => return Err(Error::NonConstantPiece { a: p.a, b: p.b }),
            Some(p) => p.constant_value(),
            None => C64::new(0.0, 0.0),
        };
        let c = i_pow(n as i64) * (sp.z() - v0);
        m = companion_propagator(n, c, w[1] - w[0]) * m;
    }
    Ok(TransferMatrix { x0, x1, matrix: m })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_propagator_acts_on_exponentials() {
        let sp = SpectralParam::on_ray(3, 0.7, 0.3).unwrap();
        let c = i_pow(3) * sp.z();
        let rho = sp.root(1);
        let lam = C64::i() * rho;
        let w0 = vec![C64::new(1.0, 0.0), lam, lam * lam];
        let t = -3.2;
        let w1 = propagate_free(3, c, t, &w0);
        let m = companion_propagator(3, c, t);
        let e = (lam * t).exp();
        for k in 0..3 {
            assert!((w1[k] - e * lam.powu(k as u32)).norm() < 1e-12 * e.norm());
            let mk: C64 = (0..3).map(|j| m[(k, j)] * w0[j]).sum();
            assert!((mk - w1[k]).norm() < 1e-12 * e.norm());
        }
    }

    #[test]
    fn confluent_case_is_polynomial() {
        // c = 0: exp(tC) is the Taylor shift
        let m = companion_propagator(3, C64::new(0.0, 0.0), 2.0);
        assert!((m[(0, 2)] - 2.0).norm() < 1e-15);
        assert!((m[(0, 1)] - 2.0).norm() < 1e-15);
        assert!((m[(1, 2)] - 2.0).norm() < 1e-15);
        assert!(m[(2, 0)].norm() == 0.0);
    }

    #[test]
    fn rejects_non_constant() {
        let v = Potential::new(
            1.0,
            vec![crate::Piece::polynomial(-1.0, 1.0, vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)])],
            false,
        )
        .unwrap();
        let sp = SpectralParam::on_ray(3, 0.2, 0.1).unwrap();
        assert!(matches!(transfer_matrix_oracle(&v, &sp, -2.0, 2.0), Err(Error::NonConstantPiece { .. })));
    }
}
