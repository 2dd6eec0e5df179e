//! Spectral-element grids on [−X, X]: cells split at every breakpoint, each carrying
//! Gauss–Lobatto–Legendre nodes shared at cell endpoints.
//!
//! Functions that may jump at a breakpoint are stored per cell ([`CellField`]), so the
//! endpoint value of a cell is its one-sided limit.

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::C64;

/// Reference element on [−1, 1].
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    bary: Vec<f64>,
    /// diff[i][j] = ℓⱼ′(ξᵢ)
    pub diff: Vec<Vec<f64>>,
    /// integ[i][j] = ∫_{−1}^{ξᵢ} ℓⱼ
    pub integ: Vec<Vec<f64>>,
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    // (P_n(x), P_{n-1}(x))
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, q) = legendre_pair(m, t);
            let dp = m as f64 * (t * p - q) / (t * t - 1.0);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (p, q) = legendre_pair(m, t);
        let dp = m as f64 * (t * p - q) / (t * t - 1.0);
        x[m - 1 - i] = t;
        w[m - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// Gauss–Lobatto–Legendre nodes and weights with p+1 points.
pub fn gauss_lobatto(p: usize) -> (Vec<f64>, Vec<f64>) {
    let n = p;
    let mut x: Vec<f64> = (0..=n)
        .map(|k| -(std::f64::consts::PI * k as f64 / n as f64).cos())
        .collect();
    for _ in 0..200 {
        let mut delta: f64 = 0.0;
        for xi in x.iter_mut() {
            let (pn, pn1) = legendre_pair(n, *xi);
            let dx = (*xi * pn - pn1) / ((n + 1) as f64 * pn);
            *xi -= dx;
            delta = delta.max(dx.abs());
        }
        if delta < 1e-16 {
            break;
        }
    }
    x[0] = -1.0;
    x[n] = 1.0;
    let w = x
        .iter()
        .map(|&xi| {
            let (pn, _) = legendre_pair(n, xi);
            2.0 / ((n * (n + 1)) as f64 * pn * pn)
        })
        .collect();
    (x, w)
}

impl ReferenceElement {
    pub fn new(p: usize) -> Self {
        let (nodes, weights) = gauss_lobatto(p);
        let n = nodes.len();
        let bary: Vec<f64> = (0..n)
            .map(|j| 1.0 / (0..n).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product::<f64>())
            .collect();
        let mut diff = vec![vec![0.0; n]; n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                if i != j {
                    diff[i][j] = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                    s += diff[i][j];
                }
            }
            diff[i][i] = -s;
        }
        let (gx, gw) = gauss_legendre(n + 1);
        let mut el = Self { nodes, weights, bary, diff, integ: vec![] };
        el.integ = (0..n)
            .map(|i| {
                let hi = el.nodes[i];
                let mut row = vec![0.0; n];
                for (t, wt) in gx.iter().zip(&gw) {
                    let s = -1.0 + (hi + 1.0) * (t + 1.0) / 2.0;
                    let l = el.lagrange(s);
                    for j in 0..n {
                        row[j] += wt * (hi + 1.0) / 2.0 * l[j];
                    }
                }
                row
            })
            .collect();
        el
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lagrange basis values ℓⱼ(t).
    pub fn lagrange(&self, t: f64) -> Vec<f64> {
        let n = self.nodes.len();
        if let Some(k) = self.nodes.iter().position(|&x| x == t) {
            let mut v = vec![0.0; n];
            v[k] = 1.0;
            return v;
        }
        let terms: Vec<f64> = (0..n).map(|j| self.bary[j] / (t - self.nodes[j])).collect();
        let s: f64 = terms.iter().sum();
        terms.iter().map(|v| v / s).collect()
    }

    /// Lagrange basis derivatives ℓⱼ′(t).
    pub fn lagrange_deriv(&self, t: f64) -> Vec<f64> {
        if let Some(k) = self.nodes.iter().position(|&x| x == t) {
            return (0..self.len()).map(|j| self.diff[k][j]).collect();
        }
        let n = self.len();
        let l = self.lagrange(t);
        // ℓⱼ′(t) = ℓⱼ(t)·Σ_{k≠j} 1/(t−ξₖ)
        let s: Vec<f64> = (0..n).map(|k| 1.0 / (t - self.nodes[k])).collect();
        let total: f64 = s.iter().sum();
        (0..n).map(|j| l[j] * (total - s[j])).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    x_max: f64,
    h: f64,
    cells: Vec<(f64, f64)>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    elem: ReferenceElement,
}

impl Grid {
    /// Cells of width ≤ h between consecutive breakpoints of {−X, X} ∪ `breaks`,
    /// each with `order`+1 Lobatto nodes.
    pub fn new(x_max: f64, h: f64, order: usize, breaks: &[f64]) -> Result<Self> {
        if !(x_max > 0.0 && h > 0.0 && x_max.is_finite()) {
            return Err(Error::InvalidGrid("X and h must be positive".into()));
        }
        if order < 2 {
            return Err(Error::InvalidGrid("order must be at least 2".into()));
        }
        let mut b: Vec<f64> = vec![-x_max, x_max];
        for &x in breaks {
            if x.abs() >= x_max {
                return Err(Error::InvalidGrid(format!("breakpoint {x} not inside (-X, X)")));
            }
            b.push(x);
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        let elem = ReferenceElement::new(order);
        let mut cells = Vec::new();
        for w in b.windows(2) {
            let k = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
            for i in 0..k {
                let a = if i == 0 { w[0] } else { w[0] + (w[1] - w[0]) * i as f64 / k as f64 };
                let c = if i + 1 == k { w[1] } else { w[0] + (w[1] - w[0]) * (i + 1) as f64 / k as f64 };
                cells.push((a, c));
            }
        }
        let p = order;
        let mut nodes = vec![0.0; cells.len() * p + 1];
        let mut weights = vec![0.0; nodes.len()];
        for (c, &(a, bb)) in cells.iter().enumerate() {
            let half = (bb - a) / 2.0;
            for q in 0..=p {
                let x = if q == 0 {
                    a
                } else if q == p {
                    bb
                } else {
                    a + half * (elem.nodes[q] + 1.0)
                };
                nodes[c * p + q] = x;
                weights[c * p + q] += half * elem.weights[q];
            }
        }
        Ok(Self { x_max, h, cells, nodes, weights, elem })
    }

    /// Grid whose breakpoints include ±L and every piece boundary of `v`.
    pub fn for_potential(v: &Potential, x_max: f64, h: f64, order: usize, extra: &[f64]) -> Result<Self> {
        let mut b = v.breakpoints();
        b.extend_from_slice(extra);
        Self::new(x_max, h, order, &b)
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn order(&self) -> usize {
        self.elem.len() - 1
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.elem
    }

    pub fn cells(&self) -> &[(f64, f64)] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
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

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cell_mid(&self, c: usize) -> f64 {
        0.5 * (self.cells[c].0 + self.cells[c].1)
    }

    /// Global index of local node q of cell c.
    pub fn global(&self, c: usize, q: usize) -> usize {
        c * self.order() + q
    }

    pub fn node_index(&self, x: f64) -> Option<usize> {
        self.nodes.iter().position(|&y| y == x)
    }

    /// Index of the node nearest to x.
    pub fn nearest(&self, x: f64) -> usize {
        let i = self.nodes.partition_point(|&y| y < x);
        if i == 0 {
            0
        } else if i >= self.nodes.len() {
            self.nodes.len() - 1
        } else if (self.nodes[i] - x).abs() < (x - self.nodes[i - 1]).abs() {
            i
        } else {
            i - 1
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.nodes == other.nodes
    }

    /// Samples f(x, cell midpoint) on every cell.
    pub fn sample<F: Fn(f64, f64) -> C64>(&self, f: F) -> CellField {
        let p = self.order();
        let mut v = Vec::with_capacity(self.num_cells() * (p + 1));
        for c in 0..self.num_cells() {
            let mid = self.cell_mid(c);
            for q in 0..=p {
                v.push(f(self.nodes[self.global(c, q)], mid));
            }
        }
        CellField { stride: p + 1, values: v }
    }

    /// Cell field of a globally continuous node function.
    pub fn from_nodes(&self, vals: &[C64]) -> CellField {
        let p = self.order();
        let mut v = Vec::with_capacity(self.num_cells() * (p + 1));
        for c in 0..self.num_cells() {
            for q in 0..=p {
                v.push(vals[self.global(c, q)]);
            }
        }
        CellField { stride: p + 1, values: v }
    }

    fn half(&self, c: usize) -> f64 {
        0.5 * (self.cells[c].1 - self.cells[c].0)
    }

    pub fn integrate(&self, f: &CellField) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for c in 0..self.num_cells() {
            let h = self.half(c);
            for (q, w) in self.elem.weights.iter().enumerate() {
                s += f.at(c, q) * (h * w);
            }
        }
        s
    }

    /// Node values of x ↦ ∫_{−X}^{x} f.
    pub fn cumulative(&self, f: &CellField) -> Vec<C64> {
        let p = self.order();
        let mut out = vec![C64::new(0.0, 0.0); self.len()];
        let mut base = C64::new(0.0, 0.0);
        for c in 0..self.num_cells() {
            let h = self.half(c);
            for q in 1..=p {
                let mut s = C64::new(0.0, 0.0);
                for j in 0..=p {
                    s += f.at(c, j) * self.elem.integ[q][j];
                }
                out[self.global(c, q)] = base + s * h;
            }
            base = out[self.global(c, p)];
        }
        out
    }

    /// Per-cell derivative by spectral differentiation.
    pub fn differentiate(&self, f: &CellField) -> CellField {
        let p = self.order();
        let mut v = Vec::with_capacity(f.values.len());
        for c in 0..self.num_cells() {
            let h = self.half(c);
            for q in 0..=p {
                let mut s = C64::new(0.0, 0.0);
                for j in 0..=p {
                    s += f.at(c, j) * self.elem.diff[q][j];
                }
                v.push(s / h);
            }
        }
        CellField { stride: p + 1, values: v }
    }

    /// Discrete L² norm with optional weight ⟨x⟩^{σ}.
    pub fn l2_norm(&self, f: &CellField, sigma: f64) -> f64 {
        let s = self.integrate(&CellField {
            stride: f.stride,
            values: f
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let c = i / f.stride;
                    let q = i % f.stride;
                    let x = self.nodes[self.global(c, q)];
                    C64::new(v.norm_sqr() * crate::weights::bracket(x, 2.0 * sigma), 0.0)
                })
                .collect(),
        });
        s.re.max(0.0).sqrt()
    }

    /// Refined copy with half the cell width.
    pub fn refined(&self, breaks: &[f64]) -> Result<Self> {
        Self::new(self.x_max, self.h / 2.0, self.order(), breaks)
    }
}

/// Values on every cell's local nodes (endpoints duplicated between cells).
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    stride: usize,
    values: Vec<C64>,
}

impl CellField {
    pub fn at(&self, c: usize, q: usize) -> C64 {
        self.values[c * self.stride + q]
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn map<F: Fn(C64) -> C64>(&self, f: F) -> Self {
        Self { stride: self.stride, values: self.values.iter().map(|v| f(*v)).collect() }
    }

    pub fn zip<F: Fn(C64, C64) -> C64>(&self, other: &CellField, f: F) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        Self {
            stride: self.stride,
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn add(&self, other: &CellField) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CellField) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|a| a * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn from_raw(stride: usize, values: Vec<C64>) -> Self {
        Self { stride, values }
    }
}
