//! Spectral parameter ζ with z = ζᴺ and the branch roots αʲζ, α = e^{2πi/N}.

use crate::error::{Error, Result};
use crate::C64;
use std::f64::consts::PI;

const ARG_SLACK: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParam {
    n: usize,
    zeta: C64,
    in_sector: bool,
}

impl SpectralParam {
    /// ζ must lie in the closed sector 0 ≤ arg ζ ≤ π/N (or be 0).
    pub fn new(n: usize, zeta: C64) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedOrder(n));
        }
        if zeta != C64::new(0.0, 0.0) {
            let arg = zeta.arg();
            if arg < -ARG_SLACK || arg > PI / n as f64 + ARG_SLACK {
                return Err(Error::OutsideSector { n, re: zeta.re, im: zeta.im });
            }
        }
        Ok(Self { n, zeta, in_sector: true })
    }

    /// Point on the ray arg ζ = angle with modulus r.
    pub fn on_ray(n: usize, r: f64, angle: f64) -> Result<Self> {
        Self::new(n, C64::from_polar(r, angle))
    }

    /// Any ζ; used for reflected problems whose parameter leaves the sector.
    pub fn unrestricted(n: usize, zeta: C64) -> Self {
        let in_sector = Self::new(n, zeta).is_ok();
        Self { n, zeta, in_sector }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn zeta(&self) -> C64 {
        self.zeta
    }

    pub fn in_sector(&self) -> bool {
        self.in_sector
    }

    pub fn is_zero(&self) -> bool {
        self.zeta == C64::new(0.0, 0.0)
    }

    pub fn z(&self) -> C64 {
        self.zeta.powu(self.n as u32)
    }

    pub fn alpha(&self) -> C64 {
        alpha_pow(self.n, 1)
    }

    /// αʲζ.
    pub fn root(&self, j: usize) -> C64 {
        alpha_pow(self.n, j) * self.zeta
    }

    pub fn roots(&self) -> Vec<C64> {
        (0..self.n).map(|j| self.root(j)).collect()
    }

    /// Number of branches bounded at +∞, [(N+1)/2]; these are m = 0..count-1.
    pub fn right_count(&self) -> usize {
        (self.n + 1) / 2
    }

    /// Branch indices used for solutions normalized at +∞ (θ) and at −∞ (γ).
    pub fn right_branches(&self) -> std::ops::Range<usize> {
        0..self.right_count()
    }

    pub fn left_branches(&self) -> std::ops::Range<usize> {
        self.right_count()..self.n
    }

    /// Parameter of the problem reflected by x → −x (odd N): z → −z, ζ → −ζ.
    pub fn reflected(&self) -> Self {
        Self::unrestricted(self.n, -self.zeta)
    }
}

/// αᵏ computed from the polar form so that αᴺ = 1 up to rounding.
pub fn alpha_pow(n: usize, k: usize) -> C64 {
    let k = k % n;
    match (n, k) {
        (_, 0) => C64::new(1.0, 0.0),
        (2, 1) => C64::new(-1.0, 0.0),
        (4, 1) => C64::new(0.0, 1.0),
        (4, 2) => C64::new(-1.0, 0.0),
        (4, 3) => C64::new(0.0, -1.0),
        _ => C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64),
    }
}

/// iᵏ for integer k (exact).
pub fn i_pow(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Standard bisecting ray of the sector, arg ζ = π/(2N).
pub fn bisector(n: usize) -> f64 {
    PI / (2.0 * n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_membership() {
        assert!(SpectralParam::new(3, C64::from_polar(0.5, PI / 6.0)).is_ok());
        assert!(SpectralParam::new(3, C64::from_polar(0.5, PI / 3.0)).is_ok());
        assert!(SpectralParam::new(3, C64::new(0.0, 0.0)).is_ok());
        assert!(SpectralParam::new(3, C64::from_polar(0.5, 1.2)).is_err());
        assert!(SpectralParam::new(3, C64::new(0.5, -0.01)).is_err());
        assert!(SpectralParam::new(1, C64::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn z_in_upper_half_plane() {
        for k in 0..=20 {
            let sp = SpectralParam::on_ray(3, 0.7, PI / 3.0 * k as f64 / 20.0).unwrap();
            assert!(sp.z().im >= -1e-14);
        }
    }

    #[test]
    fn branch_partition() {
        let sp = SpectralParam::on_ray(3, 0.5, 0.3).unwrap();
        assert_eq!(sp.right_branches(), 0..2);
        assert_eq!(sp.left_branches(), 2..3);
        for m in sp.right_branches() {
            assert!(sp.root(m).im > 0.0);
        }
        assert!(sp.root(2).im < 0.0);
        let sp2 = SpectralParam::on_ray(2, 0.5, 0.3).unwrap();
        assert_eq!(sp2.right_branches(), 0..1);
        assert_eq!(sp2.left_branches(), 1..2);
    }

    #[test]
    fn alpha_powers() {
        for n in 2..=8 {
            let s: C64 = (0..n).map(|k| alpha_pow(n, k)).sum();
            assert!(s.norm() < 1e-14);
            assert!((alpha_pow(n, 1).powu(n as u32) - 1.0).norm() < 1e-14);
        }
        assert_eq!(i_pow(3), C64::new(0.0, -1.0));
        assert_eq!(i_pow(-1), C64::new(0.0, -1.0));
    }
}
