//! Threshold z₀ = 0: growth coefficients of the ζ = 0 Jost solutions, classification
//! as regular point or virtual level, and virtual states.
//!
//! Right of supp V the left solution γ(·,0) solves (−i∂ₓ)ᴺu = 0, so it is a
//! polynomial of degree N−1 there (a + bx + cx² for N = 3). The threshold is a
//! virtual level iff the top coefficient vanishes.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::jost::{companion_residual, jost_solution, JostSolution, Side};
use crate::ode::OdeOptions;
use crate::potential::Potential;
use crate::resolvent::{delta, jost_family};
use crate::spectral::{bisector, SpectralParam};
use crate::transfer::transfer_matrix_oracle;
use crate::weights::bracket;
use crate::C64;
use serde::Serialize;
use std::io::Write;

/// Relative tolerance for declaring the top growth coefficient zero.
pub const C_TOLERANCE: f64 = 1e-8;

/// Default radii of the ray ζ = εe^{iπ/(2N)} for the Δ-order regression.
pub const DEFAULT_EPS_RAY: [f64; 5] = [1e-3, 3e-4, 1e-4, 3e-5, 1e-5];

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Polynomial coefficients p₀ + p₁x + … + p_{N−1}x^{N−1} of a ζ = 0 solution on the
/// free region, read from its derivative vector at x₀.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCoefficients {
    pub x0: f64,
    pub coeffs: Vec<C64>,
}

impl GrowthCoefficients {
    pub fn from_state(x0: f64, w: &[C64]) -> Self {
        let n = w.len();
        let coeffs = (0..n)
            .map(|j| {
                (j..n)
                    .map(|k| w[k] / factorial(k) * binomial(k, j) * (-x0).powi((k - j) as i32))
                    .sum()
            })
            .collect();
        Self { x0, coeffs }
    }

    pub fn a(&self) -> C64 {
        self.coeffs[0]
    }

    pub fn b(&self) -> C64 {
        self.coeffs[1]
    }

    /// Top coefficient (x^{N−1}); c for N = 3.
    pub fn c(&self) -> C64 {
        *self.coeffs.last().expect("N ≥ 2")
    }

    pub fn eval(&self, x: f64) -> C64 {
        crate::potential::horner(&self.coeffs, x)
    }

    /// |top| ≤ 10⁻⁸·max(|lower coefficients|, 1).
    pub fn top_vanishes(&self) -> bool {
        let n = self.coeffs.len();
        let scale = self.coeffs[..n - 1].iter().map(|c| c.norm()).fold(1.0, f64::max);
        self.c().norm() <= C_TOLERANCE * scale
    }
}

fn threshold_param(n: usize) -> SpectralParam {
    SpectralParam::new(n, C64::new(0.0, 0.0)).expect("zeta = 0 is in every sector")
}

pub fn growth_coefficients(v: &Potential, side: Side, grid: &Grid) -> Result<GrowthCoefficients> {
    growth_coefficients_n(v, 3, side, grid)
}

pub fn growth_coefficients_n(v: &Potential, n: usize, side: Side, grid: &Grid) -> Result<GrowthCoefficients> {
    let sol = threshold_solution(v, n, side, grid)?;
    growth_of(&sol, v)
}

/// ζ = 0 solution prescribed on `side`: γ (≡ 1 left of supp V, read at x = +L) or
/// θ (≡ 1 right of supp V, read at x = −L).
pub fn threshold_solution(v: &Potential, n: usize, side: Side, grid: &Grid) -> Result<JostSolution> {
    let sp = threshold_param(n);
    let m = match side {
        Side::Right => 0,
        Side::Left => n - 1,
    };
    jost_solution(v, &sp, side, m, grid, &OdeOptions::default())
}

fn growth_of(sol: &JostSolution, v: &Potential) -> Result<GrowthCoefficients> {
    let x0 = match sol.side() {
        Side::Left => v.l(),
        Side::Right => -v.l(),
    };
    let i = sol
        .nodes()
        .iter()
        .position(|&x| x == x0)
        .ok_or_else(|| Error::InvalidGrid(format!("x = {x0} is not a node")))?;
    Ok(GrowthCoefficients::from_state(x0, sol.state(i)))
}

/// Same coefficients through the closed-form transfer matrix (piecewise-constant V).
pub fn growth_coefficients_oracle(v: &Potential, n: usize, side: Side) -> Result<GrowthCoefficients> {
    let sp = threshold_param(n);
    let mut e0 = vec![C64::new(0.0, 0.0); n];
    e0[0] = C64::new(1.0, 0.0);
    let (from, to) = match side {
        Side::Left => (-v.l(), v.l()),
        Side::Right => (v.l(), -v.l()),
    };
    let w = transfer_matrix_oracle(v, &sp, from, to)?.apply(&e0);
    Ok(GrowthCoefficients::from_state(to, &w))
}

/// max |u(x) − polynomial(x)| / max(|u|) over the nodes beyond the reading point.
pub fn polynomial_tail_defect(sol: &JostSolution, g: &GrowthCoefficients) -> f64 {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, &x) in sol.nodes().iter().enumerate() {
        let beyond = match sol.side() {
            Side::Left => x >= g.x0,
            Side::Right => x <= g.x0,
        };
        if beyond {
            worst = worst.max((sol.value(i) - g.eval(x)).norm());
            scale = scale.max(sol.value(i).norm());
        }
    }
    worst / scale.max(1e-300)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Regular,
    VirtualLevel,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::Regular => "regular",
            Classification::VirtualLevel => "virtual_level",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdResiduals {
    /// polynomial tail defect of γ(·,0)
    pub tail_exactness: f64,
    /// companion-system residual of γ(·,0)
    pub equation: f64,
    /// least-squares slope of log|Δ| against log ε
    pub delta_slope: f64,
}

#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub n: usize,
    pub classification: Classification,
    pub growth: GrowthCoefficients,
    pub delta_zero_order: i64,
    pub delta_samples: Vec<(f64, C64)>,
    pub residuals: ThresholdResiduals,
    pub state: JostSolution,
}

impl ThresholdReport {
    pub fn to_json(&self, psi_csv_path: Option<&str>) -> serde_json::Value {
        let cx = |c: C64| serde_json::json!([c.re, c.im]);
        let g = &self.growth;
        let c = if g.coeffs.len() >= 3 { g.coeffs[2] } else { C64::new(0.0, 0.0) };
        serde_json::json!({
            "classification": self.classification.name(),
            "a": cx(g.a()),
            "b": cx(g.b()),
            "c": cx(c),
            "delta_zero_order": self.delta_zero_order,
            "residuals": self.residuals,
            "psi_csv_path": psi_csv_path,
        })
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// |Δ(εe^{iπ/(2N)})| on the ray, probed at −L, 0 and L.
pub fn delta_on_ray(v: &Potential, n: usize, grid: &Grid, eps_ray: &[f64]) -> Result<Vec<(f64, C64)>> {
    let probes = [-v.l(), 0.0, v.l()];
    eps_ray
        .iter()
        .map(|&e| {
            let sp = SpectralParam::on_ray(n, e, bisector(n))?;
            let fam = jost_family(v, &sp, grid)?;
            let refs: Vec<&JostSolution> = fam.iter().collect();
            Ok((e, delta(&refs, &probes)?.value))
        })
        .collect()
}

/// Classifies z₀ = 0 by the top growth coefficient and, independently, by the zero
/// order of Δ along the ray; errors if the two disagree. Supports N = 2 and N = 3,
/// where a regular threshold has order N − 2.
pub fn classify_threshold(v: &Potential, grid: &Grid, eps_ray: &[f64]) -> Result<ThresholdReport> {
    classify_threshold_n(v, 3, grid, eps_ray)
}

pub fn classify_threshold_n(v: &Potential, n: usize, grid: &Grid, eps_ray: &[f64]) -> Result<ThresholdReport> {
    if !(n == 2 || n == 3) {
        return Err(Error::UnsupportedOrder(n));
    }
    if eps_ray.len() < 2 {
        return Err(Error::Refused("the Δ regression needs at least two radii".into()));
    }
    let state = threshold_solution(v, n, Side::Left, grid)?;
    let growth = growth_of(&state, v)?;
    let samples = delta_on_ray(v, n, grid, eps_ray)?;
    if let Some((_, d)) = samples.iter().find(|(_, d)| d.norm() == 0.0) {
        return Err(Error::Dependent { delta: d.norm(), threshold: 0.0 });
    }
    let xs: Vec<f64> = samples.iter().map(|(e, _)| e.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, d)| d.norm().ln()).collect();
    let s = slope(&xs, &ys);
    let order = s.round() as i64;
    let regular_order = n as i64 - 2;
    let classification = match (growth.top_vanishes(), order) {
        (false, o) if o == regular_order => Classification::Regular,
        (true, o) if o > regular_order => Classification::VirtualLevel,
        (top_zero, o) => {
            return Err(Error::CriteriaDisagree {
                c_says: if top_zero { "virtual_level" } else { "regular" },
                order: o,
            })
        }
    };
    let residuals = ThresholdResiduals {
        tail_exactness: polynomial_tail_defect(&state, &growth),
        equation: companion_residual(&state, v, grid),
        delta_slope: s,
    };
    Ok(ThresholdReport { n, classification, growth, delta_zero_order: order, delta_samples: samples, residuals, state })
}

#[derive(Debug, Clone)]
pub struct VirtualState {
    pub nodes: Vec<f64>,
    pub psi: Vec<C64>,
    /// sup over x ≤ 0 of |Ψ|
    pub sup_left: f64,
    /// smallest C with |Ψ(x)| ≤ C⟨x⟩ on x ≥ 0
    pub linear_constant: f64,
    /// log-log slope of |Ψ| on the free region right of supp V
    pub growth_exponent: f64,
    pub equation_residual: f64,
}

impl VirtualState {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,re,im")?;
        for (x, p) in self.nodes.iter().zip(&self.psi) {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", x, p.re, p.im)?;
        }
        Ok(())
    }
}

/// Ψ = γ(·,0)/γ(−L,0) for a virtual level, with its growth audit.
pub fn extract_virtual_state(v: &Potential, grid: &Grid) -> Result<VirtualState> {
    let report = classify_threshold(v, grid, &DEFAULT_EPS_RAY)?;
    virtual_state_from(&report, v)
}

pub fn virtual_state_from(report: &ThresholdReport, v: &Potential) -> Result<VirtualState> {
    if report.classification == Classification::Regular {
        return Err(Error::Refused("z = 0 is a regular point; there is no virtual state".into()));
    }
    let sol = &report.state;
    let nodes = sol.nodes().to_vec();
    let i0 = nodes.iter().position(|&x| x == -v.l()).ok_or_else(|| Error::InvalidGrid("-L is not a node".into()))?;
    let norm = sol.value(i0);
    let psi: Vec<C64> = (0..nodes.len()).map(|i| sol.value(i) / norm).collect();
    let sup_left = nodes.iter().zip(&psi).filter(|(x, _)| **x <= 0.0).map(|(_, p)| p.norm()).fold(0.0, f64::max);
    let linear_constant =
        nodes.iter().zip(&psi).filter(|(x, _)| **x >= 0.0).map(|(x, p)| p.norm() / bracket(*x, 1.0)).fold(0.0, f64::max);
    let start = v.l().max(1.0);
    let (lx, ly): (Vec<f64>, Vec<f64>) = nodes
        .iter()
        .zip(&psi)
        .filter(|(x, _)| **x >= start)
        .map(|(x, p)| (bracket(*x, 1.0).ln(), p.norm().max(1e-300).ln()))
        .unzip();
    let growth_exponent = if lx.len() >= 2 { slope(&lx, &ly) } else { 0.0 };
    Ok(VirtualState { nodes, psi, sup_left, linear_constant, growth_exponent, equation_residual: report.residuals.equation })
}

/// Two-piece purely imaginary potential i(r₁χ_{[−1,0]} + r₂χ_{[0,1]}). At z = 0 the
/// equation is real: u‴ = −r(x)u.
pub fn two_piece_imaginary(r1: f64, r2: f64) -> Potential {
    Potential::new(
        1.0,
        vec![
            crate::potential::Piece::constant(-1.0, 0.0, C64::new(0.0, r1)),
            crate::potential::Piece::constant(0.0, 1.0, C64::new(0.0, r2)),
        ],
        false,
    )
    .expect("two adjacent pieces")
}

fn right_growth(r: (f64, f64)) -> [f64; 2] {
    let v = two_piece_imaginary(r.0, r.1);
    let g = growth_coefficients_oracle(&v, 3, Side::Left).expect("piecewise constant");
    [g.b().re, g.c().re]
}

/// Shooting on (r₁, r₂) for b = c = 0, which makes γ(·,0) constant on both sides:
/// a coarse scan followed by Newton with a finite-difference Jacobian.
pub fn find_two_sided_virtual_level() -> Result<(f64, f64)> {
    let mut best = (f64::INFINITY, (0.0, 0.0));
    for i in -30..=30 {
        for j in -30..=30 {
            let r = (2.0 * i as f64, 2.0 * j as f64);
            if r.0.abs() < 1.0 || r.1.abs() < 1.0 {
                continue;
            }
            let f = right_growth(r);
            let m = f[0].hypot(f[1]);
            if m < best.0 {
                best = (m, r);
            }
        }
    }
    let mut r = best.1;
    for _ in 0..50 {
        let f = right_growth(r);
        if f[0].hypot(f[1]) < 1e-13 {
            return Ok(r);
        }
        let h = 1e-6 * (1.0 + r.0.abs().max(r.1.abs()));
        let fa = right_growth((r.0 + h, r.1));
        let fb = right_growth((r.0, r.1 + h));
        let j = [[(fa[0] - f[0]) / h, (fb[0] - f[0]) / h], [(fa[1] - f[1]) / h, (fb[1] - f[1]) / h]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        r.0 -= (j[1][1] * f[0] - j[0][1] * f[1]) / det;
        r.1 -= (-j[1][0] * f[0] + j[0][0] * f[1]) / det;
    }
    let f = right_growth(r);
    if f[0].hypot(f[1]) < 1e-10 {
        Ok(r)
    } else {
        Err(Error::Singular("shooting for a two-sided virtual level did not converge".into()))
    }
}
