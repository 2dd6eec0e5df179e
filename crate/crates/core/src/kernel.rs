//! Separable two-point kernels G(x,y) = Σⱼ Aⱼ(x)aⱼ(y) for x ≥ y and Σⱼ Bⱼ(x)bⱼ(y)
//! for x < y, sampled on grid nodes, with the fast apply u = ∫G(·,y)f(y)dy.

use crate::error::{Error, Result};
use crate::free::check_open_sector;
use crate::grid::{CellField, Grid};
use crate::potential::Potential;
use crate::spectral::{i_pow, SpectralParam};
use crate::C64;
use std::io::Write;

/// One product term: `fun` holds (A, A′, …, A^{(N−1)}) node-major, `coef` holds a(y).
#[derive(Debug, Clone)]
pub struct Term {
    pub fun: Vec<C64>,
    pub coef: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct SeparableKernel {
    n: usize,
    nodes: Vec<f64>,
    upper: Vec<Term>,
    lower: Vec<Term>,
}

/// u and its derivatives u^{(k)}, k < N, at grid nodes.
#[derive(Debug, Clone)]
pub struct Applied {
    pub derivs: Vec<Vec<C64>>,
}

impl Applied {
    pub fn value(&self) -> &[C64] {
        &self.derivs[0]
    }
}

impl SeparableKernel {
    pub fn new(n: usize, nodes: Vec<f64>, upper: Vec<Term>, lower: Vec<Term>) -> Self {
        for t in upper.iter().chain(&lower) {
            assert_eq!(t.fun.len(), n * nodes.len());
            assert_eq!(t.coef.len(), nodes.len());
        }
        Self { n, nodes, upper, lower }
    }

    /// The free resolvent on the grid: Aⱼ = e^{iρⱼx}, aⱼ = (i/N)e^{−iρⱼy}/ρⱼ^{N−1}
    /// over the right branches, and the left branches with the opposite sign.
    pub fn free(sp: &SpectralParam, grid: &Grid) -> Result<Self> {
        check_open_sector(sp)?;
        let n = sp.n();
        let nodes = grid.nodes().to_vec();
        let term = |j: usize, sign: f64| {
            let rho = sp.root(j);
            let lam = C64::i() * rho;
            let pre = C64::i() / n as f64 / rho.powu((n - 1) as u32) * sign;
            let mut fun = Vec::with_capacity(n * nodes.len());
            for &x in &nodes {
                let e = (lam * x).exp();
                for k in 0..n {
                    fun.push(lam.powu(k as u32) * e);
                }
            }
            let coef = nodes.iter().map(|&y| pre * (-lam * y).exp()).collect();
            Term { fun, coef }
        };
        let upper = sp.right_branches().map(|j| term(j, 1.0)).collect();
        let lower = sp.left_branches().map(|j| term(j, -1.0)).collect();
        Ok(Self { n, nodes, upper, lower })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// ∂ₓᵏG(xᵢ, yⱼ); at i = j `upper` selects the limit x → y+.
    pub fn deriv_at(&self, i: usize, j: usize, k: usize, upper: bool) -> C64 {
        let terms = if upper { &self.upper } else { &self.lower };
        terms.iter().map(|t| t.fun[i * self.n + k] * t.coef[j]).sum()
    }

    /// G(xᵢ, yⱼ), using the x ≥ y branch on the diagonal.
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.deriv_at(i, j, 0, i >= j)
    }

    /// u^{(k)} = Σ Aⱼ^{(k)}(x)∫_{−X}^{x}aⱼf + Σ Bⱼ^{(k)}(x)∫_{x}^{X}bⱼf. For a kernel whose
    /// x-derivatives of order < N−1 are continuous at x = y, these are the true derivatives.
    pub fn apply(&self, grid: &Grid, f: &CellField) -> Applied {
        assert_eq!(grid.nodes(), self.nodes.as_slice());
        let len = self.nodes.len();
        let mut derivs = vec![vec![C64::new(0.0, 0.0); len]; self.n];
        let weighted = |t: &Term| {
            let c = grid.from_nodes(&t.coef);
            grid.cumulative(&c.zip(f, |a, b| a * b))
        };
        for t in &self.upper {
            let cum = weighted(t);
            for i in 0..len {
                for (k, d) in derivs.iter_mut().enumerate() {
                    d[i] += t.fun[i * self.n + k] * cum[i];
                }
            }
        }
        for t in &self.lower {
            let cum = weighted(t);
            let total = cum[len - 1];
            for i in 0..len {
                for (k, d) in derivs.iter_mut().enumerate() {
                    d[i] += t.fun[i * self.n + k] * (total - cum[i]);
                }
            }
        }
        Applied { derivs }
    }

    /// ‖((−i∂ₓ)ᴺ + V − z)u − f‖₂ / ‖f‖₂ with u^{(N)} from spectral differentiation of
    /// u^{(N−1)} on each cell.
    pub fn residual(&self, grid: &Grid, v: &Potential, z: C64, f: &CellField) -> f64 {
        let u = self.apply(grid, f);
        residual_of(grid, v, z, &u, f, self.n)
    }

    /// Writes `x, y, re, im, abs` for every `stride`-th node pair.
    pub fn write_csv<W: Write>(&self, mut w: W, stride: usize) -> std::io::Result<()> {
        writeln!(w, "x,y,re,im,abs")?;
        let s = stride.max(1);
        for i in (0..self.nodes.len()).step_by(s) {
            for j in (0..self.nodes.len()).step_by(s) {
                let g = self.at(i, j);
                writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", self.nodes[i], self.nodes[j], g.re, g.im, g.norm())?;
            }
        }
        Ok(())
    }
}

/// ((−i∂ₓ)ᴺ + V − z)u on every cell, u^{(N)} by spectral differentiation of u^{(N−1)}.
pub fn operator_image(grid: &Grid, v: &Potential, z: C64, u: &Applied, n: usize) -> CellField {
    let top = grid.differentiate(&grid.from_nodes(&u.derivs[n - 1]));
    let pre = i_pow(-(n as i64));
    let u0 = grid.from_nodes(&u.derivs[0]);
    let mut vals = Vec::with_capacity(top.values().len());
    for c in 0..grid.num_cells() {
        let mid = grid.cell_mid(c);
        for q in 0..=grid.order() {
            let x = grid.nodes()[grid.global(c, q)];
            vals.push(pre * top.at(c, q) + (v.eval_near(x, mid) - z) * u0.at(c, q));
        }
    }
    CellField::from_raw(top.stride(), vals)
}

/// Relative residual of (−i∂ₓ)ᴺu + (V − z)u = f given u, …, u^{(N−1)} at nodes.
pub fn residual_of(grid: &Grid, v: &Potential, z: C64, u: &Applied, f: &CellField, n: usize) -> f64 {
    let r = operator_image(grid, v, z, u, n).sub(f);
    grid.l2_norm(&r, 0.0) / grid.l2_norm(f, 0.0).max(1e-300)
}

/// Grid node index of every node of `other` must coincide.
pub(crate) fn same_nodes(a: &[f64], b: &[f64]) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Mismatch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_kernel_matches_closed_form_and_inverts() {
        let sp = SpectralParam::on_ray(3, 0.6, 0.3).unwrap();
        let grid = Grid::new(10.0, 0.25, 10, &[]).unwrap();
        let k = SeparableKernel::free(&sp, &grid).unwrap();
        for &(i, j) in &[(3usize, 100usize), (200, 17), (150, 150)] {
            let (x, y) = (grid.nodes()[i], grid.nodes()[j]);
            let r = crate::free::free_resolvent(x, y, &sp).unwrap();
            assert!((k.at(i, j) - r).norm() < 1e-12 * r.norm().max(1.0));
        }
        let f = grid.sample(|x, _| C64::new((-2.0 * x * x).exp(), 0.0));
        let res = k.residual(&grid, &Potential::zero(1.0), sp.z(), &f);
        assert!(res < 1e-8, "{res}");
    }

    #[test]
    fn schrodinger_free_kernel() {
        let sp = SpectralParam::new(2, C64::new(0.0, 1.0)).unwrap();
        let grid = Grid::new(3.0, 0.5, 6, &[]).unwrap();
        let k = SeparableKernel::free(&sp, &grid).unwrap();
        let (i, j) = (4, 20);
        let d = (grid.nodes()[i] - grid.nodes()[j]).abs();
        assert!((k.at(i, j) - (-d).exp() / 2.0).norm() < 1e-13);
    }
}
