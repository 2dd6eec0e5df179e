//! Compactly supported piecewise-polynomial (optionally rational) complex potentials.

use crate::error::{Error, Result};
use crate::C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One piece on [a, b]: numerator / denominator in powers of the global variable x.
/// A missing denominator means 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub num: Vec<C64>,
    pub den: Option<Vec<C64>>,
}

impl Piece {
    pub fn polynomial(a: f64, b: f64, coeffs: Vec<C64>) -> Self {
        Self { a, b, num: coeffs, den: None }
    }

    pub fn constant(a: f64, b: f64, v: C64) -> Self {
        Self::polynomial(a, b, vec![v])
    }

    pub fn eval(&self, x: f64) -> C64 {
        let n = horner(&self.num, x);
        match &self.den {
            Some(d) => n / horner(d, x),
            None => n,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.den.is_none() && self.num.iter().skip(1).all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn constant_value(&self) -> C64 {
        self.num.first().copied().unwrap_or_default()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }
}

pub fn horner(coeffs: &[C64], x: f64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * x + c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    l: f64,
    pieces: Vec<Piece>,
    continuous: bool,
}

impl Potential {
    pub fn new(l: f64, mut pieces: Vec<Piece>, continuous: bool) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidPotential(format!("support radius L = {l} must be positive")));
        }
        pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
        for p in &pieces {
            if !(p.a < p.b) {
                return Err(Error::InvalidPotential(format!("piece [{}, {}] is empty", p.a, p.b)));
            }
            if p.a < -l || p.b > l {
                return Err(Error::InvalidPotential(format!(
                    "piece [{}, {}] leaves [-{l}, {l}]",
                    p.a, p.b
                )));
            }
            if p.num.is_empty() {
                return Err(Error::InvalidPotential("piece without coefficients".into()));
            }
            if let Some(d) = &p.den {
                if d.is_empty() {
                    return Err(Error::InvalidPotential("empty denominator".into()));
                }
            }
        }
        for w in pieces.windows(2) {
            if w[1].a < w[0].b {
                return Err(Error::InvalidPotential(format!(
                    "pieces [{}, {}] and [{}, {}] overlap",
                    w[0].a, w[0].b, w[1].a, w[1].b
                )));
            }
        }
        let v = Self { l, pieces, continuous };
        if continuous {
            v.check_continuity()?;
        }
        Ok(v)
    }

    pub fn zero(l: f64) -> Self {
        Self { l, pieces: Vec::new(), continuous: true }
    }

    /// v₀·χ_{[a,b]} with support radius l.
    pub fn indicator(a: f64, b: f64, v0: C64, l: f64) -> Result<Self> {
        Self::new(l, vec![Piece::constant(a, b, v0)], false)
    }

    fn check_continuity(&self) -> Result<()> {
        let joint = |x: f64, v: C64, w: C64| {
            let scale = 1.0 + v.norm().max(w.norm());
            if (v - w).norm() > 1e-12 * scale {
                Err(Error::InvalidPotential(format!("discontinuous at x = {x}")))
            } else {
                Ok(())
            }
        };
        for w in self.pieces.windows(2) {
            if w[0].b == w[1].a {
                joint(w[0].b, w[0].eval(w[0].b), w[1].eval(w[1].a))?;
            } else {
                joint(w[0].b, w[0].eval(w[0].b), C64::new(0.0, 0.0))?;
                joint(w[1].a, C64::new(0.0, 0.0), w[1].eval(w[1].a))?;
            }
        }
        if let (Some(f), Some(l)) = (self.pieces.first(), self.pieces.last()) {
            joint(f.a, C64::new(0.0, 0.0), f.eval(f.a))?;
            joint(l.b, l.eval(l.b), C64::new(0.0, 0.0))?;
        }
        Ok(())
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Smallest interval containing every piece.
    pub fn support(&self) -> Option<(f64, f64)> {
        Some((self.pieces.first()?.a, self.pieces.last()?.b))
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = vec![-self.l, self.l];
        for p in &self.pieces {
            b.push(p.a);
            b.push(p.b);
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.pieces.iter().all(Piece::is_constant)
    }

    /// Value at x; at a shared joint the left-closed piece wins.
    pub fn eval(&self, x: f64) -> C64 {
        if x.abs() > self.l {
            return C64::new(0.0, 0.0);
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if p.a <= x && (x < p.b || (x == p.b && self.pieces.get(i + 1).is_none_or(|q| q.a != x))) {
                return p.eval(x);
            }
        }
        C64::new(0.0, 0.0)
    }

    /// Value at x using the piece that contains `reference`; used to evaluate one-sided
    /// limits at breakpoints (reference is the midpoint of the current cell).
    pub fn eval_near(&self, x: f64, reference: f64) -> C64 {
        if reference.abs() > self.l {
            return C64::new(0.0, 0.0);
        }
        match self.pieces.iter().find(|p| p.a <= reference && reference <= p.b) {
            Some(p) => p.eval(x),
            None => C64::new(0.0, 0.0),
        }
    }

    /// x ↦ c·V(−x).
    pub fn mirrored(&self, c: C64) -> Self {
        let flip = |v: &Vec<C64>, scale: C64| -> Vec<C64> {
            v.iter()
                .enumerate()
                .map(|(k, a)| if k % 2 == 0 { *a * scale } else { -*a * scale })
                .collect()
        };
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                a: -p.b,
                b: -p.a,
                num: flip(&p.num, c),
                den: p.den.as_ref().map(|d| flip(d, C64::new(1.0, 0.0))),
            })
            .collect();
        Self::new(self.l, pieces, self.continuous).expect("mirror of a valid potential is valid")
    }

    /// x ↦ c·V(x).
    pub fn scaled(&self, c: C64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece { num: p.num.iter().map(|a| a * c).collect(), ..p.clone() })
            .collect();
        Self { l: self.l, pieces, continuous: self.continuous }
    }

    pub fn to_json(&self) -> PotentialJson {
        PotentialJson {
            l: self.l,
            pieces: self
                .pieces
                .iter()
                .map(|p| PieceJson {
                    a: p.a,
                    b: p.b,
                    coeffs_re: p.num.iter().map(|c| c.re).collect(),
                    coeffs_im: p.num.iter().map(|c| c.im).collect(),
                    den_re: p.den.as_ref().map(|d| d.iter().map(|c| c.re).collect()),
                    den_im: p.den.as_ref().map(|d| d.iter().map(|c| c.im).collect()),
                })
                .collect(),
            continuous: self.continuous.then_some(true),
        }
    }

    pub fn from_json(j: &PotentialJson) -> Result<Self> {
        let join = |re: &[f64], im: &[f64]| -> Vec<C64> {
            let n = re.len().max(im.len());
            (0..n)
                .map(|k| C64::new(re.get(k).copied().unwrap_or(0.0), im.get(k).copied().unwrap_or(0.0)))
                .collect()
        };
        let pieces = j
            .pieces
            .iter()
            .map(|p| Piece {
                a: p.a,
                b: p.b,
                num: join(&p.coeffs_re, &p.coeffs_im),
                den: match (&p.den_re, &p.den_im) {
                    (None, None) => None,
                    (re, im) => Some(join(
                        re.as_deref().unwrap_or(&[]),
                        im.as_deref().unwrap_or(&[]),
                    )),
                },
            })
            .collect();
        Self::new(j.l, pieces, j.continuous.unwrap_or(false))
    }

    pub fn from_json_str(s: &str) -> std::result::Result<Self, String> {
        let j: PotentialJson = serde_json::from_str(s).map_err(|e| e.to_string())?;
        Self::from_json(&j).map_err(|e| e.to_string())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("potential serializes")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PieceJson {
    pub a: f64,
    pub b: f64,
    pub coeffs_re: Vec<f64>,
    #[serde(default)]
    pub coeffs_im: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub den_re: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub den_im: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PotentialJson {
    #[serde(rename = "L")]
    pub l: f64,
    pub pieces: Vec<PieceJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous: Option<bool>,
}

/// Random piecewise polynomial on [-1, 1] split into `n_pieces` equal pieces, complex
/// coefficients uniform in the unit box scaled by `amplitude`; degree 0 gives a
/// piecewise-constant potential.
pub fn random_potential<R: Rng + ?Sized>(
    rng: &mut R,
    n_pieces: usize,
    degree: usize,
    amplitude: f64,
) -> Potential {
    let n = n_pieces.max(1);
    let pieces = (0..n)
        .map(|k| {
            let a = -1.0 + 2.0 * k as f64 / n as f64;
            let b = -1.0 + 2.0 * (k + 1) as f64 / n as f64;
            let coeffs = (0..=degree)
                .map(|_| amplitude * C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            Piece::polynomial(a, b, coeffs)
        })
        .collect();
    Potential::new(1.0, pieces, false).expect("random pieces tile [-1, 1]")
}
