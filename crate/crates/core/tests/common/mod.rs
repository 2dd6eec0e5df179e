//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use jostlab::grid::gauss_legendre;
use jostlab::lap::Projector;
use jostlab::spectral::i_pow;
use jostlab::{Grid, Potential, SpectralParam, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Piecewise-constant potential on [−1, 1] with 1..=max_pieces pieces.
pub fn random_constant_potential(rng: &mut ChaCha8Rng, max_pieces: usize, amplitude: f64) -> Potential {
    let k = rng.gen_range(1..=max_pieces);
    jostlab::potential::random_potential(rng, k, 0, amplitude)
}

/// Matrix exponential by scaling and squaring around a degree-18 Taylor polynomial.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm = a.iter().map(|c| c.norm()).fold(0.0, f64::max) * n as f64;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / C64::new(2f64.powi(s), 0.0);
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=18 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Companion matrix of u^{(N)} = c·u acting on (u, …, u^{(N−1)}).
pub fn companion(n: usize, c: C64) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n - 1 {
        m[(k, k + 1)] = C64::new(1.0, 0.0);
    }
    m[(n - 1, 0)] = c;
    m
}

/// Dense spectral-element solve of ((−i∂ₓ)ᴺ + V + β·φ₀⊗φ₀ − z)u = f on the cells of
/// `grid`: C^{N−1} matching between cells, collocation at Gauss points and radiation
/// conditions at ±X (no growing modes). Returns u at the grid nodes.
pub fn dense_solve<F: Fn(f64) -> C64>(grid: &Grid, v: &Potential, sp: &SpectralParam, beta: f64, f: F) -> Vec<C64> {
    let n = sp.n();
    let p = grid.order();
    let el = grid.element();
    let cells = grid.cells();
    let nc = cells.len();
    let loc = p + 1;
    let size = nc * loc;
    let z = sp.z();
    let mut a = DMatrix::<C64>::zeros(size, size);
    let mut b = DVector::<C64>::zeros(size);
    let d = DMatrix::from_fn(loc, loc, |i, j| el.diff[i][j]);
    let mut dk = vec![DMatrix::<f64>::identity(loc, loc)];
    for k in 1..=n {
        let next = &d * &dk[k - 1];
        dk.push(next);
    }
    let half = |c: usize| 0.5 * (cells[c].1 - cells[c].0);
    let mut row = 0;
    // matching of u, …, u^{(N−1)} across interior cell boundaries
    for c in 0..nc - 1 {
        for k in 0..n {
            for j in 0..loc {
                a[(row, c * loc + j)] += C64::new(dk[k][(p, j)] / half(c).powi(k as i32), 0.0);
                a[(row, (c + 1) * loc + j)] -= C64::new(dk[k][(0, j)] / half(c + 1).powi(k as i32), 0.0);
            }
            row += 1;
        }
    }
    let proj = Projector::new(n).expect("n >= 2");
    let pre = i_pow(-(n as i64));
    let colloc = loc - n;
    let (gx, _) = gauss_legendre(colloc);
    // B₀u = φ₀·Σ wφ₀u over the Lobatto quadrature of each cell
    let pair_row: Vec<(usize, f64)> = (0..nc)
        .flat_map(|c| {
            let (lo, mid) = (cells[c].0, 0.5 * (cells[c].0 + cells[c].1));
            (0..loc).map(move |q| (c, q, lo, mid))
        })
        .map(|(c, q, lo, mid)| {
            let x = lo + half(c) * (el.nodes[q] + 1.0);
            (c * loc + q, half(c) * el.weights[q] * proj.phi(0, x, mid))
        })
        .collect();
    for c in 0..nc {
        let mid = 0.5 * (cells[c].0 + cells[c].1);
        for &t in &gx {
            let x = cells[c].0 + half(c) * (t + 1.0);
            let l = el.lagrange(t);
            let vx = v.eval_near(x, mid);
            for j in 0..loc {
                let top: f64 = (0..loc).map(|q| l[q] * dk[n][(q, j)]).sum::<f64>() / half(c).powi(n as i32);
                a[(row, c * loc + j)] += pre * top + (vx - z) * l[j];
            }
            let phi = proj.phi(0, x, mid);
            if phi != 0.0 && beta != 0.0 {
                for &(col, w) in &pair_row {
                    a[(row, col)] += C64::new(beta * phi * w, 0.0);
                }
            }
            b[row] = f(x);
            row += 1;
        }
    }
    // radiation conditions through the inverse Vandermonde of the exponents iαʲζ
    let lam: Vec<C64> = (0..n).map(|j| C64::i() * sp.root(j)).collect();
    let vand = DMatrix::from_fn(n, n, |k, j| lam[j].powu(k as u32));
    let inv = vand.try_inverse().expect("distinct exponents");
    let state_row = |c: usize, q: usize, k: usize| -> Vec<f64> {
        (0..loc).map(|j| dk[k][(q, j)] / half(c).powi(k as i32)).collect()
    };
    let ends = [(nc - 1, p, sp.left_branches()), (0, 0, sp.right_branches())];
    for (c, q, branches) in ends {
        for j in branches {
            for k in 0..n {
                let r = state_row(c, q, k);
                for (jj, val) in r.iter().enumerate() {
                    a[(row, c * loc + jj)] += inv[(j, k)] * val;
                }
            }
            row += 1;
        }
    }
    assert_eq!(row, size);
    let u = a.lu().solve(&b).expect("dense system");
    let mut out = vec![C64::new(0.0, 0.0); grid.len()];
    for c in 0..nc {
        for q in 0..loc {
            out[grid.global(c, q)] = u[c * loc + q];
        }
    }
    out
}

pub fn max_rel(a: &[C64], b: &[C64]) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// Smooth, decaying test functions.
pub fn test_functions() -> Vec<(&'static str, fn(f64) -> C64)> {
    vec![
        ("gauss", |x| C64::new((-x * x).exp(), 0.0)),
        ("shifted", |x| C64::new((-2.0 * (x - 0.7) * (x - 0.7)).exp(), 0.0)),
        ("odd", |x| C64::new(x * (-x * x).exp(), 0.0)),
        ("chirp", |x| C64::from_polar((-0.8 * x * x).exp(), 1.5 * x)),
        ("sech", |x| C64::new(0.0, 1.0 / (2.0 * x).cosh().powi(2))),
    ]
}

/// Result of one acceptance criterion.
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}
