//! Jost solutions θₘ (normalized at +∞) and γₘ (normalized at −∞).
//!
//! Construction: the exponential tail e^{iαᵐζx} gives the exact derivative vector at
//! the support edge on the prescribed side; the companion ODE is integrated through
//! supp V node by node, and the opposite free region is filled by the exact
//! companion propagator.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::ode::{integrate, OdeOptions};
use crate::potential::Potential;
use crate::spectral::{i_pow, SpectralParam};
use crate::transfer::propagate_free;
use crate::weights::{bracket, bracket_minus, bracket_plus, moment_minus, moment_plus, TailWeight};
use crate::C64;
use std::io::Write;

/// Growth of the state vector through the support beyond which results are flagged.
pub const AMPLIFICATION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// θₘ, prescribed at +∞
    Right,
    /// γₘ, prescribed at −∞
    Left,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Right => "right",
            Side::Left => "left",
        }
    }
}

#[derive(Debug, Clone)]
pub struct JostSolution {
    side: Side,
    m: usize,
    sp: SpectralParam,
    nodes: Vec<f64>,
    /// node-major (u, u′, …, u^{(N−1)})
    samples: Vec<C64>,
    amplification: f64,
}

impl JostSolution {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn branch(&self) -> usize {
        self.m
    }

    pub fn sp(&self) -> &SpectralParam {
        &self.sp
    }

    pub fn n(&self) -> usize {
        self.sp.n()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn state(&self, i: usize) -> &[C64] {
        let n = self.n();
        &self.samples[i * n..(i + 1) * n]
    }

    pub fn value(&self, i: usize) -> C64 {
        self.samples[i * self.n()]
    }

    pub fn deriv(&self, i: usize, k: usize) -> C64 {
        self.samples[i * self.n() + k]
    }

    /// Column of u^{(k)} over all nodes.
    pub fn derivative_column(&self, k: usize) -> Vec<C64> {
        (0..self.len()).map(|i| self.deriv(i, k)).collect()
    }

    /// max ‖w‖∞ over the integrated nodes relative to the exact starting vector.
    pub fn amplification(&self) -> f64 {
        self.amplification
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.amplification > AMPLIFICATION_LIMIT
    }

    /// ∂ₓᵏ e^{iαᵐζx}.
    pub fn tail(&self, x: f64, k: usize) -> C64 {
        let lam = C64::i() * self.sp.root(self.m);
        lam.powu(k as u32) * (lam * x).exp()
    }

    /// Writes `x, re u, im u, re u′, im u′, …`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.n();
        let mut head = String::from("x");
        for k in 0..n {
            head.push_str(&format!(",re_d{k},im_d{k}"));
        }
        writeln!(w, "{head}")?;
        for i in 0..self.len() {
            let mut line = format!("{:.17e}", self.nodes[i]);
            for k in 0..n {
                let v = self.deriv(i, k);
                line.push_str(&format!(",{:.17e},{:.17e}", v.re, v.im));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

fn exponential_state(n: usize, rho: C64, x: f64) -> Vec<C64> {
    let lam = C64::i() * rho;
    let e = (lam * x).exp();
    (0..n).map(|k| lam.powu(k as u32) * e).collect()
}

fn check_branch(sp: &SpectralParam, m: usize, side: Side) -> Result<()> {
    if m >= sp.n() {
        return Err(Error::BranchNotAdmissible { m, side: side.name() });
    }
    if !sp.in_sector() || sp.is_zero() {
        return Ok(());
    }
    let im = sp.root(m).im;
    let tol = 1e-12 * sp.zeta().norm();
    let ok = match side {
        Side::Right => im >= -tol,
        Side::Left => im <= tol,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::BranchNotAdmissible { m, side: side.name() })
    }
}

fn support_indices(v: &Potential, grid: &Grid) -> Result<Option<(usize, usize)>> {
    let Some((lo, hi)) = v.support() else {
        return Ok(None);
    };
    match (grid.node_index(lo), grid.node_index(hi)) {
        (Some(a), Some(b)) => Ok(Some((a, b))),
        _ => Err(Error::InvalidGrid(format!("support [{lo}, {hi}] is not resolved by grid nodes"))),
    }
}

fn norm_inf(w: &[C64]) -> f64 {
    w.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Coefficient q(x) = iᴺ(z − V(x)) of u^{(N)} = q·u on the cell referenced by `mid`.
fn coefficient<'a>(v: &'a Potential, sp: &'a SpectralParam, mid: f64) -> impl Fn(f64) -> C64 + 'a {
    let c = i_pow(sp.n() as i64);
    let z = sp.z();
    move |x| c * (z - v.eval_near(x, mid))
}

pub fn jost_right(v: &Potential, sp: &SpectralParam, m: usize, grid: &Grid) -> Result<JostSolution> {
    jost_solution(v, sp, Side::Right, m, grid, &OdeOptions::default())
}

pub fn jost_left(v: &Potential, sp: &SpectralParam, m: usize, grid: &Grid) -> Result<JostSolution> {
    jost_solution(v, sp, Side::Left, m, grid, &OdeOptions::default())
}

pub fn jost_solution(
    v: &Potential,
    sp: &SpectralParam,
    side: Side,
    m: usize,
    grid: &Grid,
    opts: &OdeOptions,
) -> Result<JostSolution> {
    check_branch(sp, m, side)?;
    let n = sp.n();
    let nodes = grid.nodes().to_vec();
    let len = nodes.len();
    let rho = sp.root(m);
    let mut samples = vec![C64::new(0.0, 0.0); len * n];
    let mut put = |i: usize, w: &[C64]| samples[i * n..(i + 1) * n].copy_from_slice(w);
    let free_c = i_pow(n as i64) * sp.z();
    let mut amplification = 1.0;

    match support_indices(v, grid)? {
        None => {
            for (i, &x) in nodes.iter().enumerate() {
                put(i, &exponential_state(n, rho, x));
            }
        }
        Some((ilo, ihi)) => {
            // exact side, integrated support, then free propagation on the far side
            let (start, end) = match side {
                Side::Right => (ihi, ilo),
                Side::Left => (ilo, ihi),
            };
            let exact: Vec<usize> = match side {
                Side::Right => (ihi..len).collect(),
                Side::Left => (0..=ilo).collect(),
            };
            for &i in &exact {
                put(i, &exponential_state(n, rho, nodes[i]));
            }
            let mut w = exponential_state(n, rho, nodes[start]);
            let w0 = norm_inf(&w).max(f64::MIN_POSITIVE);
            let step: isize = if end < start { -1 } else { 1 };
            let mut i = start;
            while i != end {
                let j = (i as isize + step) as usize;
                let mid = 0.5 * (nodes[i] + nodes[j]);
                integrate(&coefficient(v, sp, mid), &mut w, nodes[i], nodes[j], opts);
                put(j, &w);
                amplification = f64::max(amplification, norm_inf(&w) / w0);
                i = j;
            }
            let far: Vec<usize> = match side {
                Side::Right => (0..ilo).collect(),
                Side::Left => (ihi + 1..len).collect(),
            };
            let x_edge = nodes[end];
            for &i in &far {
                put(i, &propagate_free(n, free_c, nodes[i] - x_edge, &w));
            }
        }
    }
    Ok(JostSolution { side, m, sp: *sp, nodes, samples, amplification })
}

/// Propagates a state vector of the spectral equation from x0 to x1 through V.
pub fn propagate_state(v: &Potential, sp: &SpectralParam, w: &[C64], x0: f64, x1: f64, opts: &OdeOptions) -> Vec<C64> {
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
    let free_c = i_pow(n as i64) * sp.z();
    let mut w = w.to_vec();
    for seg in cuts.windows(2) {
        let mid = 0.5 * (seg[0] + seg[1]);
        let inside = v.pieces().iter().any(|p| p.a <= mid && mid <= p.b);
        if inside {
            integrate(&coefficient(v, sp, mid), &mut w, seg[0], seg[1], opts);
        } else {
            w = propagate_free(n, free_c, seg[1] - seg[0], &w);
        }
    }
    w
}

/// Pointwise residual of the companion system at each node, from spectral
/// differentiation of the stored samples on every cell.
pub fn companion_residual(sol: &JostSolution, v: &Potential, grid: &Grid) -> f64 {
    let n = sol.n();
    let c = i_pow(n as i64);
    let z = sol.sp.z();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let col = grid.from_nodes(&sol.derivative_column(k));
        let d = grid.differentiate(&col);
        for cell in 0..grid.num_cells() {
            let mid = grid.cell_mid(cell);
            for q in 0..=grid.order() {
                let i = grid.global(cell, q);
                let x = grid.nodes()[i];
                let target = if k + 1 < n { sol.deriv(i, k + 1) } else { c * (z - v.eval_near(x, mid)) * sol.value(i) };
                let scale = norm_inf(sol.state(i)).max(1e-300);
                worst = worst.max((d.at(cell, q) - target).norm() / scale);
            }
        }
    }
    worst
}

/// One estimate at one node: pass iff value ≤ bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSample {
    pub x: f64,
    pub value: f64,
    pub bound: f64,
}

impl BoundSample {
    pub fn margin(&self) -> f64 {
        self.bound - self.value
    }

    /// Allows rounding at the level of 10⁻¹² of the bound.
    pub fn holds(&self) -> bool {
        self.value <= self.bound * (1.0 + 1e-12) + 1e-300
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JostEstimate {
    /// |θₘ| ≤ ⟨x⁻⟩^{N−1} e^{3M₊/(2⟨ζ⟩^{N−1})} e^{|ζ||x|}
    Bound,
    /// |θₘ| ≤ e^{M₊/|ζ|^{N−1}} e^{|ζ||x|}, ζ ≠ 0
    BoundNonzero,
    /// |θₘ − e^{iαᵐζx}| ≤ (3⟨x⁻⟩^{N−1}/(2⟨ζ⟩^{N−1})) e^{3M₊/(2⟨ζ⟩^{N−1})} e^{|ζ||x|} M₊
    Deviation,
    /// the explicit integral bound on ∂ₓ^{N−1}θₘ − (iαᵐζ)^{N−1}e^{iαᵐζx}
    TopDerivative,
}

#[derive(Debug, Clone)]
pub struct JostAudit {
    pub estimates: Vec<(JostEstimate, Vec<BoundSample>)>,
}

impl JostAudit {
    pub fn passed(&self) -> bool {
        self.estimates.iter().all(|(_, s)| s.iter().all(BoundSample::holds))
    }

    /// Over samples with a positive bound; zero bounds (V = 0 beyond x) carry no scale.
    pub fn min_relative_margin(&self) -> f64 {
        self.estimates
            .iter()
            .flat_map(|(_, s)| s.iter())
            .filter(|b| b.bound > 0.0)
            .map(|b| b.margin() / b.bound.max(1e-300))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn get(&self, e: JostEstimate) -> Option<&[BoundSample]> {
        self.estimates.iter().find(|(k, _)| *k == e).map(|(_, s)| s.as_slice())
    }
}

/// Signed coordinate measured towards the prescribed side: x for θ, −x for γ.
fn oriented(side: Side, x: f64) -> f64 {
    match side {
        Side::Right => x,
        Side::Left => -x,
    }
}

fn tail_moment(v: &Potential, side: Side, n: usize, mu: f64, x: f64, tw: TailWeight) -> f64 {
    match side {
        Side::Right => moment_plus(v, n, mu, x, tw),
        Side::Left => moment_minus(v, n, mu, x, tw),
    }
}

fn far_bracket(side: Side, x: f64, sigma: f64) -> f64 {
    match side {
        Side::Right => bracket_minus(x, sigma),
        Side::Left => bracket_plus(x, sigma),
    }
}

/// Audits the explicit Jost estimates at every node of `sol`
/// (for γₘ the mirrored statements with M₋ and ⟨x⁺⟩).
pub fn audit_jost_estimates(sol: &JostSolution, v: &Potential, mu: f64, tw: TailWeight) -> JostAudit {
    let n = sol.n();
    let zeta = sol.sp.zeta();
    let az = zeta.norm();
    let kz = bracket(az, (n - 1) as f64);
    let side = sol.side;
    let nodes = &sol.nodes;
    let mp: Vec<f64> = nodes.iter().map(|&x| tail_moment(v, side, n, mu, x, tw)).collect();

    // I(x) = ∫ from x towards the prescribed side of ⟨y∓⟩^{N−1} M±(y) e^{|ζ||y|} dy
    let (gx, gw) = crate::grid::gauss_legendre(8);
    let mut integral = vec![0.0; nodes.len()];
    let order: Vec<usize> = match side {
        Side::Right => (0..nodes.len()).rev().collect(),
        Side::Left => (0..nodes.len()).collect(),
    };
    let mut acc = 0.0;
    for w in order.windows(2) {
        let (a, b) = (nodes[w[1]], nodes[w[0]]);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mut s = 0.0;
        if mp[w[0]] > 0.0 || mp[w[1]] > 0.0 {
            for (t, wt) in gx.iter().zip(&gw) {
                let y = lo + (hi - lo) * (t + 1.0) / 2.0;
                s += wt * (hi - lo) / 2.0
                    * far_bracket(side, y, (n - 1) as f64)
                    * tail_moment(v, side, n, mu, y, tw)
                    * (az * y.abs()).exp();
            }
        }
        acc += s;
        integral[w[1]] = acc;
    }

    let mut bound = Vec::new();
    let mut bound_nz = Vec::new();
    let mut dev = Vec::new();
    let mut top = Vec::new();
    for (i, &x) in nodes.iter().enumerate() {
        let u = sol.value(i).norm();
        let eg = (az * x.abs()).exp();
        let b = far_bracket(side, x, (n - 1) as f64);
        let ex = (1.5 * mp[i] / kz).exp();
        bound.push(BoundSample { x, value: u, bound: b * ex * eg });
        if az > 0.0 {
            bound_nz.push(BoundSample { x, value: u, bound: (mp[i] / az.powi(n as i32 - 1)).exp() * eg });
        }
        let d = (sol.value(i) - sol.tail(x, 0)).norm();
        dev.push(BoundSample { x, value: d, bound: 1.5 * b / kz * ex * eg * mp[i] });
        // the top derivative compares against (iαᵐζ)^{N−1}e^{iαᵐζx}; for γ the
        // derivative picks up the orientation sign, which is absorbed by |·|
        let dt = (sol.deriv(i, n - 1) - sol.tail(x, n - 1)).norm();
        top.push(BoundSample { x, value: dt, bound: ex * (mp[i] * eg + 1.5 * az * integral[i]) });
    }
    let mut estimates = vec![(JostEstimate::Bound, bound)];
    if az > 0.0 {
        estimates.push((JostEstimate::BoundNonzero, bound_nz));
    }
    estimates.push((JostEstimate::Deviation, dev));
    estimates.push((JostEstimate::TopDerivative, top));
    JostAudit { estimates }
}

/// Ratios |∂ₓ^{N−1−k}θₘ − (iαᵐζ)^{N−1−k}e^{iαᵐζx}| / shape(x) for the existential
/// bound with shape e^{−μ|x|}(1+|ζ|) on the prescribed side and
/// e^{|ζ||x|}(⟨x⟩ᵏ + |ζ|⟨x⟩^{N+k}) on the far side. The smallest admissible C is the max.
pub fn derivative_deviation_ratios(sol: &JostSolution, k: usize, mu: f64) -> Vec<(f64, f64)> {
    let n = sol.n();
    assert!(k + 1 < n);
    let d = n - 1 - k;
    let az = sol.sp.zeta().norm();
    sol.nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let dev = (sol.deriv(i, d) - sol.tail(x, d)).norm();
            let shape = if oriented(sol.side, x) >= 0.0 {
                (-mu * x.abs()).exp() * (1.0 + az)
            } else {
                (az * x.abs()).exp() * (bracket(x, k as f64) + az * bracket(x, (n + k) as f64))
            };
            (x, dev / shape)
        })
        .collect()
}

/// Central-difference ∂_ζθₘ(x, ζ) at every node, with increment h·dir (|dir| = 1).
pub fn zeta_derivative(
    v: &Potential,
    sp: &SpectralParam,
    side: Side,
    m: usize,
    grid: &Grid,
    h: f64,
    dir: C64,
) -> Result<Vec<C64>> {
    let n = sp.n();
    let step = dir * h;
    let plus = SpectralParam::unrestricted(n, sp.zeta() + step);
    let minus = SpectralParam::unrestricted(n, sp.zeta() - step);
    let opts = OdeOptions::default();
    let a = jost_solution(v, &plus, side, m, grid, &opts)?;
    let b = jost_solution(v, &minus, side, m, grid, &opts)?;
    Ok((0..a.len()).map(|i| (a.value(i) - b.value(i)) / (step * 2.0)).collect())
}

/// Relative Cauchy–Riemann defect: ∂_ζ along the real and the imaginary direction agree
/// for a function analytic in ζ.
pub fn cauchy_riemann_residual(v: &Potential, sp: &SpectralParam, side: Side, m: usize, grid: &Grid, h: f64) -> Result<f64> {
    let dr = zeta_derivative(v, sp, side, m, grid, h, C64::new(1.0, 0.0))?;
    let di = zeta_derivative(v, sp, side, m, grid, h, C64::i())?;
    let scale = dr.iter().map(|d| d.norm()).fold(0.0, f64::max).max(1e-300);
    Ok(dr.iter().zip(&di).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale)
}

/// Ratios |∂_ζθₘ| / (⟨x⟩·shape) with shape e^{−x Im(αᵐζ)} on the prescribed side and
/// e^{|ζ||x|}⟨x⟩^{N−1} on the far side.
pub fn zeta_derivative_ratios(sol: &JostSolution, dz: &[C64]) -> Vec<(f64, f64)> {
    let n = sol.n();
    let zeta = sol.sp.zeta();
    let im = sol.sp.root(sol.m).im;
    sol.nodes
        .iter()
        .zip(dz)
        .map(|(&x, d)| {
            let shape = if oriented(sol.side, x) >= 0.0 {
                (-x * im).exp()
            } else {
                (zeta.norm() * x.abs()).exp() * bracket(x, (n - 1) as f64)
            };
            (x, d.norm() / (bracket(x, 1.0) * shape))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::transfer_matrix_oracle;

    fn grid(v: &Potential) -> Grid {
        Grid::for_potential(v, 4.0, 0.25, 8, &[]).unwrap()
    }

    #[test]
    fn free_solutions_are_exponentials() {
        let v = Potential::zero(1.0);
        let g = grid(&v);
        let sp = SpectralParam::on_ray(3, 0.8, 0.4).unwrap();
        for m in 0..2 {
            let s = jost_right(&v, &sp, m, &g).unwrap();
            for (i, &x) in g.nodes().iter().enumerate() {
                assert!((s.value(i) - s.tail(x, 0)).norm() <= 1e-12 * s.tail(x, 0).norm());
            }
        }
        let s = jost_right(&v, &SpectralParam::new(3, C64::new(0.0, 0.0)).unwrap(), 0, &g).unwrap();
        assert!(s.derivative_column(0).iter().all(|u| *u == C64::new(1.0, 0.0)));
    }

    #[test]
    fn square_well_matches_oracle() {
        let v = Potential::indicator(-1.0, 1.0, C64::new(0.7, -0.2), 1.0).unwrap();
        let g = grid(&v);
        let sp = SpectralParam::on_ray(3, 0.2, std::f64::consts::PI / 6.0).unwrap();
        let s = jost_right(&v, &sp, 0, &g).unwrap();
        let start = exponential_state(3, sp.root(0), 1.0);
        let t = transfer_matrix_oracle(&v, &sp, 1.0, -4.0).unwrap();
        let w = t.apply(&start);
        let i = g.node_index(-4.0).unwrap();
        for k in 0..3 {
            assert!((s.deriv(i, k) - w[k]).norm() < 1e-10 * w[k].norm().max(1.0));
        }
        assert!(companion_residual(&s, &v, &g) < 1e-6);
    }

    #[test]
    fn wrong_branch_rejected() {
        let v = Potential::zero(1.0);
        let sp = SpectralParam::on_ray(3, 0.3, 0.5).unwrap();
        assert!(jost_left(&v, &sp, 0, &grid(&v)).is_err());
        assert!(jost_right(&v, &sp, 2, &grid(&v)).is_err());
    }
}
