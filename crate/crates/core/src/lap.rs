//! Weighted L²_s → L²_{−s′} norms of discretized kernels, the projector onto the
//! moments 0..N−2, the rank-one regularized resolvent (A + B₀ − z)⁻¹ and the
//! probes that follow the resolvent to the threshold.

use crate::error::{Error, Result};
use crate::free::free_remainder_deriv;
use crate::grid::{gauss_legendre, CellField, Grid};
use crate::kernel::{operator_image, Applied, SeparableKernel};
use crate::potential::Potential;
use crate::resolvent::resolvent_kernel_unchecked;
use crate::spectral::{bisector, SpectralParam};
use crate::weights::{bracket, WeightSpec};
use crate::C64;
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Power iteration stops once successive σ estimates agree to this.
const POWER_TOL: f64 = 1e-9;
const POWER_MAX_ITER: usize = 20_000;
/// Full SVD is affordable up to this many nodes.
pub const SVD_LIMIT: usize = 2000;

/// K̃ᵢⱼ = ⟨xᵢ⟩^{−s′}e^{−ν|xᵢ|} K(xᵢ, xⱼ) ⟨xⱼ⟩^{−s}e^{−ν|xⱼ|} √(wᵢwⱼ).
#[derive(Debug, Clone)]
pub struct WeightedKernelOperator {
    w: WeightSpec,
    nu: f64,
    matrix: DMatrix<C64>,
}

impl WeightedKernelOperator {
    pub fn new<F>(kernel: F, grid: &Grid, w: WeightSpec) -> Self
    where
        F: Fn(usize, usize) -> C64 + Sync,
    {
        Self::with_exponential(kernel, grid, w, 0.0)
    }

    /// Adds the exponential weights of L²_ν → L²_{−ν} on top of the polynomial ones.
    pub fn with_exponential<F>(kernel: F, grid: &Grid, w: WeightSpec, nu: f64) -> Self
    where
        F: Fn(usize, usize) -> C64 + Sync,
    {
        let nodes = grid.nodes();
        let len = nodes.len();
        let sq: Vec<f64> = grid.weights().iter().map(|q| q.sqrt()).collect();
        let left: Vec<f64> = (0..len)
            .map(|i| bracket(nodes[i], -w.s_prime) * (-nu * nodes[i].abs()).exp() * sq[i])
            .collect();
        let right: Vec<f64> = (0..len)
            .map(|j| bracket(nodes[j], -w.s) * (-nu * nodes[j].abs()).exp() * sq[j])
            .collect();
        let rows: Vec<Vec<C64>> = (0..len)
            .into_par_iter()
            .map(|i| (0..len).map(|j| kernel(i, j) * (left[i] * right[j])).collect())
            .collect();
        let matrix = DMatrix::from_fn(len, len, |i, j| rows[i][j]);
        Self { w, nu, matrix }
    }

    pub fn weights(&self) -> WeightSpec {
        self.w
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Largest singular value by power iteration on K̃*K̃.
    pub fn norm(&self) -> f64 {
        power_norm(&self.matrix)
    }

    /// Largest singular value from a full SVD; `None` above [`SVD_LIMIT`] nodes.
    pub fn svd_norm(&self) -> Option<f64> {
        if self.matrix.nrows() > SVD_LIMIT {
            return None;
        }
        let sv = self.matrix.clone().singular_values();
        Some(sv.iter().cloned().fold(0.0, f64::max))
    }

    /// Operator norm of the difference with another materialization on the same nodes.
    pub fn distance(&self, other: &Self) -> f64 {
        power_norm(&(&self.matrix - &other.matrix))
    }
}

fn power_norm(m: &DMatrix<C64>) -> f64 {
    let n = m.ncols();
    if n == 0 || m.iter().all(|c| *c == C64::new(0.0, 0.0)) {
        return 0.0;
    }
    // a fixed, non-symmetric start vector avoids accidental orthogonality
    let mut v = DVector::from_fn(n, |j, _| C64::new(1.0 + 0.37 * (j as f64).sin(), 0.11 * (j as f64).cos()));
    v /= C64::new(v.norm(), 0.0);
    let adj = m.adjoint();
    let mut sigma = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let u = m * &v;
        let next = u.norm();
        let mut w = &adj * u;
        let wn = w.norm();
        if wn == 0.0 {
            return next;
        }
        w /= C64::new(wn, 0.0);
        v = w;
        if (next - sigma).abs() <= POWER_TOL * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

/// ‖K‖ as a map L²_s → L²_{−s′}, for a kernel given on grid index pairs.
pub fn weighted_norm<F>(kernel: F, grid: &Grid, w: WeightSpec) -> f64
where
    F: Fn(usize, usize) -> C64 + Sync,
{
    WeightedKernelOperator::new(kernel, grid, w).norm()
}

/// Norm on `grid` and on its refinement; the second entry of the pair is the
/// relative change.
pub fn refinement_agreement<F>(norm_on: F, grid: &Grid, breaks: &[f64]) -> Result<(f64, f64)>
where
    F: Fn(&Grid) -> Result<f64>,
{
    let coarse = norm_on(grid)?;
    let fine = norm_on(&grid.refined(breaks)?)?;
    Ok((fine, (fine - coarse).abs() / fine.abs().max(1e-300)))
}

fn chi_unit(x: f64, mid: f64) -> bool {
    x.abs() < 1.0 || (x.abs() == 1.0 && mid.abs() < 1.0)
}

fn unit_breaks(grid: &Grid) -> Result<()> {
    if grid.node_index(-1.0).is_none() || grid.node_index(1.0).is_none() {
        return Err(Error::InvalidGrid("x = ±1 must be grid nodes".into()));
    }
    Ok(())
}

/// Pf = Σⱼ φⱼ ∫xʲf over j = 0..N−2, with φⱼ polynomials on [−1, 1] such that
/// ⟨xʲ, φₖ⟩ = δⱼₖ. For N = 3 this is φ₀ = χ/2, φ₁ = (3/2)xχ.
#[derive(Debug, Clone)]
pub struct Projector {
    n: usize,
    /// φₖ = Σₗ coeffs[k][l] xˡ χ_{[−1,1]}
    coeffs: Vec<Vec<f64>>,
}

fn unit_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        2.0 / (k + 1) as f64
    }
}

impl Projector {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedOrder(n));
        }
        let d = n - 1;
        let hilbert = DMatrix::from_fn(d, d, |j, l| unit_moment(j + l));
        let inv = hilbert
            .try_inverse()
            .ok_or_else(|| Error::Singular("moment matrix on [-1, 1]".into()))?;
        let coeffs = (0..d).map(|k| (0..d).map(|l| inv[(k, l)]).collect()).collect();
        Ok(Self { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of functionals, N − 1.
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self, k: usize) -> &[f64] {
        &self.coeffs[k]
    }

    /// φₖ(x); `mid` decides the side at x = ±1.
    pub fn phi(&self, k: usize, x: f64, mid: f64) -> f64 {
        if !chi_unit(x, mid) {
            return 0.0;
        }
        self.coeffs[k].iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn phi_field(&self, grid: &Grid, k: usize) -> CellField {
        grid.sample(|x, mid| C64::new(self.phi(k, x, mid), 0.0))
    }

    /// ⟨xʲ, φₖ⟩ from the monomial integrals on [−1, 1].
    pub fn pairing(&self, j: usize, k: usize) -> f64 {
        self.coeffs[k].iter().enumerate().map(|(l, c)| c * unit_moment(j + l)).sum()
    }

    /// ∫xʲf.
    pub fn moment(&self, grid: &Grid, f: &CellField, j: usize) -> C64 {
        grid.integrate(&grid.sample(|x, _| C64::new(x.powi(j as i32), 0.0)).zip(f, |a, b| a * b))
    }

    pub fn project(&self, grid: &Grid, f: &CellField) -> CellField {
        let mut out = f.scale(C64::new(0.0, 0.0));
        for k in 0..self.dim() {
            let m = self.moment(grid, f, k);
            out = out.add(&self.phi_field(grid, k).scale(m));
        }
        out
    }

    /// (I − P)f.
    pub fn complement(&self, grid: &Grid, f: &CellField) -> CellField {
        f.sub(&self.project(grid, f))
    }
}

/// Bilinear pairing ⟨g, f⟩ = ∫gf.
pub fn pairing(grid: &Grid, g: &CellField, f: &CellField) -> C64 {
    grid.integrate(&g.zip(f, |a, b| a * b))
}

/// ∂ₓᵏ(R₁φ)(xᵢ), k < N, for φ = poly·χ_{[−1,1]}, by Gauss–Legendre quadrature split
/// at y = x where ∂ₓ^{N−1}R₁ jumps.
pub fn remainder_apply_unit(sp: &SpectralParam, grid: &Grid, poly: &[f64]) -> Applied {
    let n = sp.n();
    let (gx, gw) = gauss_legendre(16);
    let phi = |y: f64| poly.iter().rev().fold(0.0, |acc, c| acc * y + c);
    let derivs: Vec<Vec<C64>> = grid
        .nodes()
        .par_iter()
        .map(|&x| {
            let mut cuts: Vec<f64> = (0..=8).map(|k| -1.0 + 0.25 * k as f64).collect();
            if x > -1.0 && x < 1.0 && !cuts.contains(&x) {
                cuts.push(x);
                cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            }
            let mut acc = vec![C64::new(0.0, 0.0); n];
            for w in cuts.windows(2) {
                let half = 0.5 * (w[1] - w[0]);
                for (t, wt) in gx.iter().zip(&gw) {
                    let y = w[0] + half * (t + 1.0);
                    let f = phi(y) * wt * half;
                    for (k, a) in acc.iter_mut().enumerate() {
                        *a += free_remainder_deriv(x, y, sp, k) * f;
                    }
                }
            }
            acc
        })
        .collect();
    let len = grid.len();
    Applied { derivs: (0..n).map(|k| (0..len).map(|i| derivs[i][k]).collect()).collect() }
}

fn combine(terms: &[(C64, &Applied)], len: usize, n: usize) -> Applied {
    let mut derivs = vec![vec![C64::new(0.0, 0.0); len]; n];
    for (c, a) in terms {
        for (d, s) in derivs.iter_mut().zip(&a.derivs) {
            for (x, y) in d.iter_mut().zip(s) {
                *x += c * y;
            }
        }
    }
    Applied { derivs }
}

fn polynomial_applied(grid: &Grid, coeffs: &[C64], n: usize) -> Applied {
    let derivs = (0..n)
        .map(|k| {
            grid.nodes()
                .iter()
                .map(|&x| {
                    coeffs
                        .iter()
                        .enumerate()
                        .skip(k)
                        .map(|(j, c)| {
                            let f: f64 = ((j - k + 1)..=j).map(|v| v as f64).product();
                            c * f * x.powi((j - k) as i32)
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    Applied { derivs }
}

/// The rescaled pieces of the regularized free resolvent, N = 3:
/// Θⱼ = R₁φⱼ, ψ₁ = −α/3 + ζΘ₁, ψ₂ = αx/3 + ζΘ₀ − iαΘ₁.
#[derive(Debug, Clone)]
pub struct PsiBasis {
    sp: SpectralParam,
    projector: Projector,
    pub theta0: Applied,
    pub theta1: Applied,
    pub psi1: Applied,
    pub psi2: Applied,
}

pub fn psi_basis(sp: &SpectralParam, grid: &Grid) -> Result<PsiBasis> {
    crate::free::check_open_sector(sp)?;
    if sp.n() != 3 {
        return Err(Error::UnsupportedOrder(sp.n()));
    }
    unit_breaks(grid)?;
    let projector = Projector::new(3)?;
    let zeta = sp.zeta();
    let alpha = sp.alpha();
    let len = grid.len();
    let theta0 = remainder_apply_unit(sp, grid, projector.coeffs(0));
    let theta1 = remainder_apply_unit(sp, grid, projector.coeffs(1));
    let c1 = polynomial_applied(grid, &[-alpha / 3.0], 3);
    let c2 = polynomial_applied(grid, &[C64::new(0.0, 0.0), alpha / 3.0], 3);
    let one = C64::new(1.0, 0.0);
    let psi1 = combine(&[(one, &c1), (zeta, &theta1)], len, 3);
    let psi2 = combine(&[(one, &c2), (zeta, &theta0), (-C64::i() * alpha, &theta1)], len, 3);
    Ok(PsiBasis { sp: *sp, projector, theta0, theta1, psi1, psi2 })
}

/// Relative L² residuals of the identities satisfied by the ψ-basis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PsiAudit {
    /// (A − z)(−iα²/3 + αζx/3 + ζ²Θ₀) = ζ²φ₀
    pub e1_first: f64,
    /// (A − z)(−α/3 + ζΘ₁) = ζφ₁
    pub e1_second: f64,
    /// (A − z)(αx/3 + ζΘ₀ − iαΘ₁) = ζφ₀ − iαφ₁
    pub e2: f64,
    /// (A + B₀ − z)ψ₁ = ζφ₁ − (α/3)φ₀ + ζB₀Θ₁
    pub qn1: f64,
    /// (A + B₀ − z)ψ₂ = ζφ₀ − iαφ₁ + B₀(ζΘ₀ − iαΘ₁)
    pub qn2: f64,
}

impl PsiAudit {
    pub fn max(&self) -> f64 {
        [self.e1_first, self.e1_second, self.e2, self.qn1, self.qn2].into_iter().fold(0.0, f64::max)
    }
}

fn rel(grid: &Grid, lhs: &CellField, rhs: &CellField) -> f64 {
    grid.l2_norm(&lhs.sub(rhs), 0.0) / grid.l2_norm(rhs, 0.0).max(1e-300)
}

impl PsiBasis {
    pub fn sp(&self) -> &SpectralParam {
        &self.sp
    }

    pub fn audit(&self, grid: &Grid) -> PsiAudit {
        let zero = Potential::zero(1.0);
        let z = self.sp.z();
        let zeta = self.sp.zeta();
        let alpha = self.sp.alpha();
        let len = grid.len();
        let one = C64::new(1.0, 0.0);
        let phi0 = self.projector.phi_field(grid, 0);
        let phi1 = self.projector.phi_field(grid, 1);
        let image = |u: &Applied| operator_image(grid, &zero, z, u, 3);
        let b0 = |u: &CellField| phi0.scale(pairing(grid, &phi0, u));

        let lin0 = polynomial_applied(grid, &[-C64::i() * alpha * alpha / 3.0, alpha * zeta / 3.0], 3);
        let first = combine(&[(one, &lin0), (zeta * zeta, &self.theta0)], len, 3);
        let e1_first = rel(grid, &image(&first), &phi0.scale(zeta * zeta));
        let e1_second = rel(grid, &image(&self.psi1), &phi1.scale(zeta));
        let rhs2 = phi0.scale(zeta).sub(&phi1.scale(C64::i() * alpha));
        let e2 = rel(grid, &image(&self.psi2), &rhs2);

        let f = |a: &Applied| grid.from_nodes(a.value());
        let (p1, p2) = (f(&self.psi1), f(&self.psi2));
        let (t0, t1) = (f(&self.theta0), f(&self.theta1));
        let lhs1 = image(&self.psi1).add(&b0(&p1));
        let rhs1 = phi1.scale(zeta).sub(&phi0.scale(alpha / 3.0)).add(&b0(&t1.scale(zeta)));
        let qn1 = rel(grid, &lhs1, &rhs1);
        let lhs2 = image(&self.psi2).add(&b0(&p2));
        let rhs2q = rhs2.add(&b0(&t0.scale(zeta).sub(&t1.scale(C64::i() * alpha))));
        let qn2 = rel(grid, &lhs2, &rhs2q);
        PsiAudit { e1_first, e1_second, e2, qn1, qn2 }
    }

    /// u = c₁ψ₁ + c₂ψ₂ + v with v = R(I − P)f; the coefficients match the φ₁ and φ₀
    /// components of (A + B₀ − z)u = f.
    pub fn solve(&self, grid: &Grid, f: &CellField) -> Result<Applied> {
        let zeta = self.sp.zeta();
        let alpha = self.sp.alpha();
        let p = &self.projector;
        let f0 = p.moment(grid, f, 0);
        let f1 = p.moment(grid, f, 1);
        let g = p.complement(grid, f);
        let v = SeparableKernel::free(&self.sp, grid)?.apply(grid, &g);
        let phi0 = p.phi_field(grid, 0);
        let pair = |a: &Applied| pairing(grid, &phi0, &grid.from_nodes(a.value()));
        let m = Matrix2::new(zeta, -C64::i() * alpha, pair(&self.psi1), zeta + pair(&self.psi2));
        let rhs = Vector2::new(f1, f0 - pair(&v));
        let c = m.lu().solve(&rhs).ok_or_else(|| Error::Singular("psi-basis coefficients".into()))?;
        let one = C64::new(1.0, 0.0);
        Ok(combine(&[(c[0], &self.psi1), (c[1], &self.psi2), (one, &v)], grid.len(), 3))
    }
}

pub fn psi_basis_audit(sp: &SpectralParam, grid: &Grid) -> Result<PsiAudit> {
    Ok(psi_basis(sp, grid)?.audit(grid))
}

/// Below this |1 + ⟨φ₀, Rφ₀⟩| the rank-one update is refused.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// (A + B₀ − z)⁻¹ with B₀ = φ₀⊗φ₀, by the rank-one update of R(z):
/// u = Rf − Rφ₀·⟨φ₀, Rf⟩/(1 + ⟨φ₀, Rφ₀⟩).
#[derive(Debug, Clone)]
pub struct RegularizedResolvent {
    sp: SpectralParam,
    v: Potential,
    base: SeparableKernel,
    phi0: CellField,
    r_phi0: Applied,
    denom: C64,
}

/// Free base kernel for V = 0, the assembled resolvent kernel otherwise.
pub fn base_kernel(v: &Potential, sp: &SpectralParam, grid: &Grid) -> Result<SeparableKernel> {
    if v.is_zero() {
        SeparableKernel::free(sp, grid)
    } else {
        Ok(crate::resolvent::resolvent_kernel(v, sp, grid)?.separable().clone())
    }
}

pub fn regularized_resolvent(v: &Potential, sp: &SpectralParam, grid: &Grid) -> Result<RegularizedResolvent> {
    let base = base_kernel(v, sp, grid)?;
    RegularizedResolvent::from_base(v, sp, grid, base)
}

impl RegularizedResolvent {
    pub fn from_base(v: &Potential, sp: &SpectralParam, grid: &Grid, base: SeparableKernel) -> Result<Self> {
        unit_breaks(grid)?;
        let phi0 = Projector::new(sp.n())?.phi_field(grid, 0);
        let r_phi0 = base.apply(grid, &phi0);
        let denom = C64::new(1.0, 0.0) + pairing(grid, &phi0, &grid.from_nodes(r_phi0.value()));
        if denom.norm() < DENOMINATOR_FLOOR {
            return Err(Error::RankOneDenominator(denom.norm()));
        }
        Ok(Self { sp: *sp, v: v.clone(), base, phi0, r_phi0, denom })
    }

    pub fn sp(&self) -> &SpectralParam {
        &self.sp
    }

    pub fn base(&self) -> &SeparableKernel {
        &self.base
    }

    /// 1 + ⟨φ₀, Rφ₀⟩.
    pub fn denominator(&self) -> C64 {
        self.denom
    }

    pub fn apply(&self, grid: &Grid, f: &CellField) -> Applied {
        let rf = self.base.apply(grid, f);
        let t = pairing(grid, &self.phi0, &grid.from_nodes(rf.value())) / self.denom;
        combine(&[(C64::new(1.0, 0.0), &rf), (-t, &self.r_phi0)], grid.len(), self.sp.n())
    }

    /// ‖(A + B₀ − z)u − f‖₂/‖f‖₂.
    pub fn residual(&self, grid: &Grid, f: &CellField) -> f64 {
        let u = self.apply(grid, f);
        self.residual_of(grid, &u, f)
    }

    pub fn residual_of(&self, grid: &Grid, u: &Applied, f: &CellField) -> f64 {
        let uf = grid.from_nodes(u.value());
        let lhs = operator_image(grid, &self.v, self.sp.z(), u, self.sp.n())
            .add(&self.phi0.scale(pairing(grid, &self.phi0, &uf)));
        rel(grid, &lhs, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LapVerdict {
    #[serde(rename = "LAP")]
    Lap,
    #[serde(rename = "virtual_level")]
    VirtualLevel,
}

/// Weighted norms of G(ζₖ) and of G(ζₖ) − G(ζₖ₊₁) along a ray into ζ = 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LapReport {
    #[serde(with = "complex_list")]
    pub zetas: Vec<C64>,
    pub norms: Vec<f64>,
    pub diffs: Vec<f64>,
    pub verdict: LapVerdict,
    /// least-squares slope of log ‖G(ζ)‖ against log |ζ|
    pub fit_exponent: f64,
}

mod complex_list {
    use crate::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

/// Slope above which the norms count as bounded.
pub const BOUNDED_SLOPE: f64 = -0.25;
/// The last difference must be this small relative to the last norm.
pub const CAUCHY_RATIO: f64 = 0.05;

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

impl LapReport {
    pub fn bounded(&self) -> bool {
        self.fit_exponent > BOUNDED_SLOPE
    }

    /// Differences shrink along the ray and end small against the norms.
    pub fn cauchy(&self) -> bool {
        let shrinking = self.diffs.windows(2).all(|w| w[1] <= w[0] * 1.05);
        let last = self.diffs.last().copied().unwrap_or(0.0);
        let norm = self.norms.last().copied().unwrap_or(0.0);
        shrinking && last <= CAUCHY_RATIO * norm
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data")
    }
}

/// ζₖ = εₖe^{iπ/(2N)} for the given radii.
pub fn bisector_ray(n: usize, radii: &[f64]) -> Result<Vec<SpectralParam>> {
    radii.iter().map(|&r| SpectralParam::on_ray(n, r, bisector(n))).collect()
}

/// Requires s, s′ > N − 3/2 and at least two points on the ray.
pub fn lap_probe(v: &Potential, ray: &[SpectralParam], grid: &Grid, w: WeightSpec) -> Result<LapReport> {
    lap_probe_with(v, ray, grid, w, 0.0)
}

pub fn lap_probe_with(v: &Potential, ray: &[SpectralParam], grid: &Grid, w: WeightSpec, nu: f64) -> Result<LapReport> {
    let n = ray.first().ok_or_else(|| Error::Refused("empty ray".into()))?.n();
    if ray.len() < 2 {
        return Err(Error::Refused("a probe needs at least two points on the ray".into()));
    }
    if !w.admissible(n) {
        return Err(Error::Refused(format!("weights s = {}, s' = {} are not above N - 3/2", w.s, w.s_prime)));
    }
    let mut ops = Vec::with_capacity(ray.len());
    for sp in ray {
        let k = if v.is_zero() {
            SeparableKernel::free(sp, grid)?
        } else {
            resolvent_kernel_unchecked(v, sp, grid)?.separable().clone()
        };
        ops.push(WeightedKernelOperator::with_exponential(|i, j| k.at(i, j), grid, w, nu));
    }
    let norms: Vec<f64> = ops.iter().map(|o| o.norm()).collect();
    let diffs: Vec<f64> = ops.windows(2).map(|p| p[0].distance(&p[1])).collect();
    let radii: Vec<f64> = ray.iter().map(|sp| sp.zeta().norm()).collect();
    let fit_exponent = loglog_slope(&radii, &norms);
    let mut report = LapReport {
        zetas: ray.iter().map(|sp| sp.zeta()).collect(),
        norms,
        diffs,
        verdict: LapVerdict::VirtualLevel,
        fit_exponent,
    };
    if report.bounded() && report.cauchy() {
        report.verdict = LapVerdict::Lap;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundShape {
    /// min(⟨x⟩,⟨y⟩)^p
    Min,
    /// max(⟨x⟩,⟨y⟩)^p
    Max,
}

/// |G(x,y)| ≤ C·m(x,y)^p with C fitted where max(|x|,|y|) ≤ X/2 and checked on
/// the remaining samples.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelBoundFit {
    pub shape: BoundShape,
    pub exponent: f64,
    pub constant: f64,
    /// max over validation samples of |G|/(C·min^p)
    pub worst_ratio: f64,
    pub slack: f64,
}

impl KernelBoundFit {
    pub fn passed(&self) -> bool {
        self.worst_ratio <= self.slack
    }
}

pub fn fit_kernel_bound<F>(kernel: F, nodes: &[f64], shape: BoundShape, exponent: f64, stride: usize, slack: f64) -> KernelBoundFit
where
    F: Fn(usize, usize) -> C64,
{
    let half = nodes.iter().fold(0.0f64, |a, x| a.max(x.abs())) / 2.0;
    let s = stride.max(1);
    let mut constant: f64 = 0.0;
    let mut fresh = Vec::new();
    for i in (0..nodes.len()).step_by(s) {
        for j in (0..nodes.len()).step_by(s) {
            let (x, y) = (nodes[i], nodes[j]);
            let (bx, by) = (bracket(x, 1.0), bracket(y, 1.0));
            let m = match shape {
                BoundShape::Min => bx.min(by),
                BoundShape::Max => bx.max(by),
            };
            let r = kernel(i, j).norm() / m.powf(exponent);
            if x.abs().max(y.abs()) <= half {
                constant = constant.max(r);
            } else {
                fresh.push(r);
            }
        }
    }
    let worst = fresh.iter().fold(0.0f64, |a, r| a.max(*r)) / constant.max(1e-300);
    KernelBoundFit { shape, exponent, constant, worst_ratio: worst, slack }
}

/// Weighted norms of the model kernels
/// 𝒦₁ = 𝟙_{ℝ₊}(x)⟨y⟩^{N−1}𝟙_{[1,x]}(y) and 𝒦₂ = 𝟙_{[1,y]}(x)⟨x⟩^{N−1}𝟙_{ℝ₊}(y)
/// on [−X, X] for growing X.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DyadicReport {
    pub n: usize,
    pub weights: WeightSpec,
    pub xs: Vec<f64>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
}

/// Allowed spread of the norms across X for a bounded family.
pub const DYADIC_SPREAD: f64 = 0.10;

impl DyadicReport {
    fn spread(v: &[f64]) -> f64 {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(0.0, f64::max);
        if hi == 0.0 {
            0.0
        } else {
            hi / lo - 1.0
        }
    }

    /// Both families stay within ±10% over the X list.
    pub fn bounded(&self) -> bool {
        Self::spread(&self.k1) <= DYADIC_SPREAD && Self::spread(&self.k2) <= DYADIC_SPREAD
    }

    /// Norm at the largest X over the norm at the smallest, the larger of the two kernels.
    pub fn growth_ratio(&self) -> f64 {
        let r = |v: &[f64]| v.last().unwrap_or(&0.0) / v.first().unwrap_or(&1.0).max(1e-300);
        r(&self.k1).max(r(&self.k2))
    }
}

pub fn model_kernel_1(n: usize, x: f64, y: f64) -> f64 {
    if x > 0.0 && (1.0..=x).contains(&y) {
        bracket(y, (n - 1) as f64)
    } else {
        0.0
    }
}

pub fn model_kernel_2(n: usize, x: f64, y: f64) -> f64 {
    if y > 0.0 && (1.0..=y).contains(&x) {
        bracket(x, (n - 1) as f64)
    } else {
        0.0
    }
}

pub fn dyadic_bound_audit(n: usize, w: WeightSpec, xs: &[f64], h: f64, order: usize) -> Result<DyadicReport> {
    let mut k1 = Vec::with_capacity(xs.len());
    let mut k2 = Vec::with_capacity(xs.len());
    for &x_max in xs {
        let grid = Grid::new(x_max, h, order, &[0.0, 1.0])?;
        let nodes = grid.nodes();
        k1.push(weighted_norm(|i, j| C64::new(model_kernel_1(n, nodes[i], nodes[j]), 0.0), &grid, w));
        k2.push(weighted_norm(|i, j| C64::new(model_kernel_2(n, nodes[i], nodes[j]), 0.0), &grid, w));
    }
    Ok(DyadicReport { n, weights: w, xs: xs.to_vec(), k1, k2 })
}
