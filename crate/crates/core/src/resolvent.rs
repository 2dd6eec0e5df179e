//! The perturbed resolvent kernel built from Jost solutions.
//!
//! With right solutions θⱼ (j < M = [(N+1)/2]) and left solutions γⱼ (j ≥ M),
//! G(x,y) = Σ cⱼ(y)θⱼ(x) for x ≥ y and Σ kⱼ(y)γⱼ(x) for x < y, where at every y
//! the coefficients make ∂ₓᵏG continuous for k ≤ N−2 and give ∂ₓ^{N−1}G the jump κ.
//! The determinant of that N×N system is Δ(ζ).

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::jost::{jost_left, jost_right, JostSolution, Side};
use crate::kernel::{same_nodes, SeparableKernel, Term};
use crate::potential::Potential;
use crate::spectral::{bisector, i_pow, SpectralParam};
use crate::weights::bracket as jb;
use crate::C64;
use nalgebra::{DMatrix, DVector};
use std::io::Write;

/// Relative size of |Δ| against the product of column norms below which the
/// solutions are reported as dependent.
pub const DEPENDENCE_RATIO: f64 = 1e-10;

fn compatible(f: &JostSolution, g: &JostSolution) -> Result<()> {
    same_nodes(f.nodes(), g.nodes())?;
    if f.sp().zeta() != g.sp().zeta() || f.n() != g.n() {
        return Err(Error::Mismatch);
    }
    Ok(())
}

/// {f, g} = fg′ − f′g and, for N = 3, its derivatives from the stored samples.
#[derive(Debug, Clone)]
pub struct Bracket {
    pub nodes: Vec<f64>,
    pub values: Vec<C64>,
    /// fg″ − f″g
    pub first: Vec<C64>,
    /// f′g″ − f″g′ (equals the second derivative when N = 3)
    pub second: Vec<C64>,
}

pub fn bracket(f: &JostSolution, g: &JostSolution) -> Result<Bracket> {
    compatible(f, g)?;
    let len = f.len();
    let mut values = Vec::with_capacity(len);
    let mut first = Vec::with_capacity(len);
    let mut second = Vec::with_capacity(len);
    let n = f.n();
    for i in 0..len {
        let (a, b) = (f.state(i), g.state(i));
        values.push(a[0] * b[1] - a[1] * b[0]);
        if n >= 3 {
            first.push(a[0] * b[2] - a[2] * b[0]);
            second.push(a[1] * b[2] - a[2] * b[1]);
        } else {
            first.push(C64::new(0.0, 0.0));
            second.push(C64::new(0.0, 0.0));
        }
    }
    Ok(Bracket { nodes: f.nodes().to_vec(), values, first, second })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport {
    /// mean of the determinant over the probes
    pub value: C64,
    /// max |Δ(xₚ) − mean| / |mean|
    pub spread: f64,
    /// |Δ| / ∏ column norms, averaged over the probes
    pub ratio: f64,
    pub dependent: bool,
    pub per_probe: Vec<(f64, C64)>,
}

impl DeltaReport {
    pub fn threshold(&self) -> f64 {
        DEPENDENCE_RATIO * self.value.norm() / self.ratio.max(1e-300)
    }
}

fn order_solutions<'a>(sols: &[&'a JostSolution]) -> Result<Vec<&'a JostSolution>> {
    let n = sols.first().ok_or(Error::Mismatch)?.n();
    if sols.len() != n {
        return Err(Error::Mismatch);
    }
    for s in sols {
        compatible(sols[0], s)?;
    }
    let m = sols[0].sp().right_count();
    for (j, s) in sols.iter().enumerate() {
        let want = if j < m { Side::Right } else { Side::Left };
        if s.side() != want {
            return Err(Error::Mismatch);
        }
    }
    Ok(sols.to_vec())
}

fn fundamental_matrix(sols: &[&JostSolution], i: usize) -> DMatrix<C64> {
    let n = sols.len();
    DMatrix::from_fn(n, n, |k, j| sols[j].deriv(i, k))
}

/// Δ = det[∂ₓᵏ sⱼ] with columns [θ_0, …, θ_{M−1}, γ_M, …, γ_{N−1}], evaluated at the
/// nodes nearest to the probes.
pub fn delta(sols: &[&JostSolution], probes: &[f64]) -> Result<DeltaReport> {
    let sols = order_solutions(sols)?;
    let nodes = sols[0].nodes();
    let mut per_probe = Vec::new();
    let mut ratio = 0.0;
    for &p in probes {
        let i = nodes.partition_point(|&x| x < p).min(nodes.len() - 1);
        let i = if i > 0 && (nodes[i] - p).abs() > (p - nodes[i - 1]).abs() { i - 1 } else { i };
        let m = fundamental_matrix(&sols, i);
        let d = m.determinant();
        let cols: f64 = (0..m.ncols()).map(|j| m.column(j).norm()).product();
        ratio += d.norm() / cols.max(1e-300);
        per_probe.push((nodes[i], d));
    }
    let count = per_probe.len().max(1) as f64;
    let value = per_probe.iter().map(|p| p.1).sum::<C64>() / count;
    let spread = per_probe.iter().map(|p| (p.1 - value).norm()).fold(0.0, f64::max) / value.norm().max(1e-300);
    ratio /= count;
    Ok(DeltaReport { value, spread, ratio, dependent: ratio < DEPENDENCE_RATIO, per_probe })
}

/// Jump of ∂ₓ^{N−1}G across x = y (right limit minus left limit). This is the value
/// selected by [`calibrate_jump_constant`]; with it the (−i∂ₓ)^{N−1} jump equals i.
pub fn jump_constant(n: usize) -> C64 {
    i_pow(n as i64)
}

#[derive(Debug, Clone)]
pub struct ResolventKernel {
    sp: SpectralParam,
    v: Potential,
    delta: DeltaReport,
    kappa: C64,
    kernel: SeparableKernel,
}

impl ResolventKernel {
    pub fn sp(&self) -> &SpectralParam {
        &self.sp
    }

    pub fn delta(&self) -> &DeltaReport {
        &self.delta
    }

    pub fn kappa(&self) -> C64 {
        self.kappa
    }

    pub fn potential(&self) -> &Potential {
        &self.v
    }

    pub fn separable(&self) -> &SeparableKernel {
        &self.kernel
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.kernel.at(i, j)
    }

    pub fn nodes(&self) -> &[f64] {
        self.kernel.nodes()
    }
}

/// Solves the coefficient system at every node.
pub fn assemble_kernel(v: &Potential, sols: &[&JostSolution]) -> Result<ResolventKernel> {
    let n = sols.first().ok_or(Error::Mismatch)?.n();
    assemble_kernel_with(v, sols, jump_constant(n))
}

pub fn assemble_kernel_with(v: &Potential, sols: &[&JostSolution], kappa: C64) -> Result<ResolventKernel> {
    assemble(v, sols, kappa, true)
}

fn assemble(v: &Potential, sols: &[&JostSolution], kappa: C64, check: bool) -> Result<ResolventKernel> {
    let sols = order_solutions(sols)?;
    let sp = *sols[0].sp();
    let n = sp.n();
    let m = sp.right_count();
    let nodes = sols[0].nodes().to_vec();
    let len = nodes.len();
    let lo = nodes[0];
    let hi = nodes[len - 1];
    let probes: Vec<f64> = (0..5).map(|k| lo + (hi - lo) * (0.1 + 0.2 * k as f64)).collect();
    let report = delta(&sols, &probes)?;
    if check && report.dependent {
        return Err(Error::Dependent { delta: report.value.norm(), threshold: report.threshold() });
    }
    let mut coef = vec![vec![C64::new(0.0, 0.0); len]; n];
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = kappa;
    for i in 0..len {
        let a = fundamental_matrix(&sols, i);
        let x = a.lu().solve(&rhs).ok_or_else(|| Error::Singular(format!("coefficient system at y = {}", nodes[i])))?;
        for j in 0..n {
            // unknowns are [c_0..c_{M-1}, -k_M..-k_{N-1}]
            coef[j][i] = if j < m { x[j] } else { -x[j] };
        }
    }
    let term = |j: usize, coef: Vec<C64>| {
        let s = sols[j];
        let fun = (0..len).flat_map(|i| s.state(i).to_vec()).collect();
        Term { fun, coef }
    };
    let mut coef_iter = coef.into_iter();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for j in 0..n {
        let c = coef_iter.next().expect("n coefficients");
        if j < m {
            upper.push(term(j, c));
        } else {
            lower.push(term(j, c));
        }
    }
    Ok(ResolventKernel { sp, v: v.clone(), delta: report, kappa, kernel: SeparableKernel::new(n, nodes, upper, lower) })
}

/// Builds all N Jost solutions and the kernel.
pub fn resolvent_kernel(v: &Potential, sp: &SpectralParam, grid: &Grid) -> Result<ResolventKernel> {
    let sols = jost_family(v, sp, grid)?;
    let refs: Vec<&JostSolution> = sols.iter().collect();
    assemble_kernel(v, &refs)
}

/// Same as [`resolvent_kernel`] without the dependence test, so the kernel can be
/// followed into a zero of Δ where it blows up like 1/Δ.
pub fn resolvent_kernel_unchecked(v: &Potential, sp: &SpectralParam, grid: &Grid) -> Result<ResolventKernel> {
    let sols = jost_family(v, sp, grid)?;
    let refs: Vec<&JostSolution> = sols.iter().collect();
    let n = sp.n();
    assemble(v, &refs, jump_constant(n), false)
}

/// [θ_0, …, θ_{M−1}, γ_M, …, γ_{N−1}].
pub fn jost_family(v: &Potential, sp: &SpectralParam, grid: &Grid) -> Result<Vec<JostSolution>> {
    let mut out = Vec::with_capacity(sp.n());
    for m in sp.right_branches() {
        out.push(jost_right(v, sp, m, grid)?);
    }
    for m in sp.left_branches() {
        out.push(jost_left(v, sp, m, grid)?);
    }
    Ok(out)
}

/// For N = 3: k₁ = κ{θ₂,θ₁}/Δ, c₁ = κ{θ₂,γ₁}/Δ, c₂ = κ{γ₁,θ₁}/Δ at every node.
pub fn adjugate_coefficients(sols: &[&JostSolution], kappa: C64, delta: C64) -> Result<[Vec<C64>; 3]> {
    let sols = order_solutions(sols)?;
    if sols[0].n() != 3 {
        return Err(Error::UnsupportedOrder(sols[0].n()));
    }
    let (t1, t2, g1) = (sols[0], sols[1], sols[2]);
    let s = kappa / delta;
    let c1 = bracket(t2, g1)?.values.iter().map(|b| b * s).collect();
    let c2 = bracket(g1, t1)?.values.iter().map(|b| b * s).collect();
    let k1 = bracket(t2, t1)?.values.iter().map(|b| b * s).collect();
    Ok([c1, c2, k1])
}

/// One-sided mismatch of ∂ₓᵏG at x = y.
#[derive(Debug, Clone)]
pub struct JumpAudit {
    /// max over y of |∂ₓᵏG(y+,y) − ∂ₓᵏG(y−,y)|, k ≤ N−2, scaled by max |G(y,y)|
    pub continuity: Vec<f64>,
    /// (−i)^{N−1}(∂ₓ^{N−1}G(y+,y) − ∂ₓ^{N−1}G(y−,y)) at every node
    pub jumps: Vec<C64>,
}

impl JumpAudit {
    pub fn max_jump_deviation(&self, expected: C64) -> f64 {
        self.jumps.iter().map(|j| (j - expected).norm()).fold(0.0, f64::max)
    }
}

pub fn jump_audit(k: &SeparableKernel) -> JumpAudit {
    let n = k.n();
    let len = k.nodes().len();
    let scale = (0..len).map(|i| k.at(i, i).norm()).fold(0.0, f64::max).max(1e-300);
    let continuity = (0..n - 1)
        .map(|d| {
            (0..len)
                .map(|i| (k.deriv_at(i, i, d, true) - k.deriv_at(i, i, d, false)).norm())
                .fold(0.0, f64::max)
                / scale
        })
        .collect();
    let pre = i_pow(-(n as i64 - 1));
    let jumps = (0..len).map(|i| pre * (k.deriv_at(i, i, n - 1, true) - k.deriv_at(i, i, n - 1, false))).collect();
    JumpAudit { continuity, jumps }
}

/// Relative residual of (A − z)(Gf) = f.
pub fn apply_operator_residual(k: &ResolventKernel, grid: &Grid, f: &crate::grid::CellField) -> f64 {
    k.kernel.residual(grid, &k.v, k.sp.z(), f)
}

#[derive(Debug, Clone)]
pub struct JumpCalibration {
    pub kappa: C64,
    pub residuals: Vec<(C64, f64)>,
}

/// Picks κ ∈ {1, −1, i, −i} minimizing the free-case residual of (A − z)(G_κ f) = f.
pub fn calibrate_jump_constant(n: usize) -> Result<JumpCalibration> {
    let v = Potential::zero(1.0);
    let grid = Grid::for_potential(&v, 8.0, 0.25, 10, &[])?;
    let sp = SpectralParam::on_ray(n, 0.5, bisector(n))?;
    let sols = jost_family(&v, &sp, &grid)?;
    let refs: Vec<&JostSolution> = sols.iter().collect();
    let f = grid.sample(|x, _| C64::new((-2.0 * x * x).exp(), 0.3 * x * (-x * x).exp()));
    let mut residuals = Vec::new();
    for kappa in [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::i(), -C64::i()] {
        let k = assemble_kernel_with(&v, &refs, kappa)?;
        residuals.push((kappa, apply_operator_residual(&k, &grid, &f)));
    }
    let best = residuals.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("four candidates").0;
    Ok(JumpCalibration { kappa: best, residuals })
}

/// Residuals of the bracket identity for N = 3: u = {θ₁,θ₂} solves (i∂ₓ)³u + (V − z)u = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateCheck {
    /// ‖−iu‴ + (V − z)u‖₂/‖u‖₂ with u‴ by spectral differentiation of u″
    pub equation: f64,
    /// max relative mismatch of u′, u″ against spectral derivatives of u, u′
    pub derivative_identities: f64,
}

pub fn bracket_conjugate_check(v: &Potential, grid: &Grid, t1: &JostSolution, t2: &JostSolution) -> Result<ConjugateCheck> {
    if t1.n() != 3 {
        return Err(Error::UnsupportedOrder(t1.n()));
    }
    same_nodes(grid.nodes(), t1.nodes())?;
    let b = bracket(t1, t2)?;
    let z = t1.sp().z();
    let u = grid.from_nodes(&b.values);
    let u1 = grid.from_nodes(&b.first);
    let u2 = grid.from_nodes(&b.second);
    let d3 = grid.differentiate(&u2);
    let mut vals = Vec::with_capacity(u.values().len());
    for c in 0..grid.num_cells() {
        let mid = grid.cell_mid(c);
        for q in 0..=grid.order() {
            let x = grid.nodes()[grid.global(c, q)];
            vals.push(-C64::i() * d3.at(c, q) + (v.eval_near(x, mid) - z) * u.at(c, q));
        }
    }
    let r = crate::grid::CellField::from_raw(u.stride(), vals);
    let equation = grid.l2_norm(&r, 0.0) / grid.l2_norm(&u, 0.0).max(1e-300);
    let e1 = grid.differentiate(&u).sub(&u1).max_abs() / u1.max_abs().max(1e-300);
    let e2 = grid.differentiate(&u1).sub(&u2).max_abs() / u2.max_abs().max(1e-300);
    Ok(ConjugateCheck { equation, derivative_identities: e1.max(e2) })
}

/// max over node pairs of |G(x,y)| / shape(x,y), shape = 1 when x, y have opposite
/// signs and e^{2|ζ|t}⟨t⟩^{3N−2} with t = min(|x|,|y|) otherwise.
pub fn non_optimal_ratio(k: &ResolventKernel, stride: usize) -> f64 {
    let n = k.sp.n();
    let az = k.sp.zeta().norm();
    let nodes = k.nodes();
    let s = stride.max(1);
    let mut worst: f64 = 0.0;
    for i in (0..nodes.len()).step_by(s) {
        for j in (0..nodes.len()).step_by(s) {
            let (x, y) = (nodes[i], nodes[j]);
            let shape = if x * y <= 0.0 {
                1.0
            } else {
                let t = x.abs().min(y.abs());
                (2.0 * az * t).exp() * jb(t, (3 * n - 2) as f64)
            };
            worst = worst.max(k.at(i, j).norm() / shape);
        }
    }
    worst
}

/// Writes `re ζ, im ζ, re Δ, im Δ, |Δ|`.
pub fn write_delta_sweep<W: Write>(mut w: W, rows: &[(C64, C64)]) -> std::io::Result<()> {
    writeln!(w, "re_zeta,im_zeta,re_delta,im_delta,abs_delta")?;
    for (z, d) in rows {
        writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", z.re, z.im, d.re, d.im, d.norm())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_delta_is_vandermonde() {
        let v = Potential::zero(1.0);
        let grid = Grid::for_potential(&v, 3.0, 0.5, 8, &[]).unwrap();
        let sp = SpectralParam::on_ray(3, 0.4, 0.2).unwrap();
        let sols = jost_family(&v, &sp, &grid).unwrap();
        let refs: Vec<&JostSolution> = sols.iter().collect();
        let d = delta(&refs, &[-2.0, 0.0, 1.3]).unwrap();
        let l: Vec<C64> = (0..3).map(|j| C64::i() * sp.root(j)).collect();
        let vdm = (l[1] - l[0]) * (l[2] - l[0]) * (l[2] - l[1]);
        assert!((d.value - vdm).norm() < 1e-12 * vdm.norm());
        assert!(d.spread < 1e-12);
    }

    #[test]
    fn free_kernel_from_jost_solutions() {
        let v = Potential::zero(1.0);
        let grid = Grid::for_potential(&v, 4.0, 0.5, 8, &[]).unwrap();
        for n in [2, 3] {
            let sp = SpectralParam::on_ray(n, 0.7, bisector(n)).unwrap();
            let k = resolvent_kernel(&v, &sp, &grid).unwrap();
            let free = SeparableKernel::free(&sp, &grid).unwrap();
            for &(i, j) in &[(0usize, 60usize), (60, 0), (33, 33), (40, 41)] {
                assert!((k.at(i, j) - free.at(i, j)).norm() < 1e-12, "N = {n}");
            }
        }
    }

    #[test]
    fn calibration_selects_i_to_the_n() {
        for n in [2, 3] {
            let c = calibrate_jump_constant(n).unwrap();
            assert_eq!(c.kappa, jump_constant(n));
        }
    }
}
