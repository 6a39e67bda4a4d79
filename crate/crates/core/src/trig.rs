//! Real trigonometric polynomials on unit tori.

use std::collections::HashSet;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid resolution per axis for certified extrema of field components.
pub const CERT_GRID: usize = 256;

/// One Fourier mode `c_cos cos(2 pi (m x1 + n x2)) + c_sin sin(2 pi (m x1 + n x2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode2 {
    pub m: i32,
    pub n: i32,
    #[serde(default, deserialize_with = "crate::io::real::deserialize")]
    pub c_cos: f64,
    #[serde(default, deserialize_with = "crate::io::real::deserialize")]
    pub c_sin: f64,
}

/// A real trigonometric polynomial on the unit 2-torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigPoly2 {
    #[serde(deserialize_with = "crate::io::real::deserialize")]
    pub constant: f64,
    #[serde(default)]
    pub modes: Vec<Mode2>,
}

impl TrigPoly2 {
    pub fn new(constant: f64, modes: Vec<Mode2>) -> Result<Self> {
        let poly = Self { constant, modes };
        poly.validate()?;
        Ok(poly)
    }

    pub fn constant(c: f64) -> Self {
        Self { constant: c, modes: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for md in &self.modes {
            if md.m == 0 && md.n == 0 {
                return Err(Error::Invalid("mode (0,0) belongs in the constant term".into()));
            }
            if !seen.insert((md.m, md.n)) {
                return Err(Error::Invalid(format!("duplicate mode ({}, {})", md.m, md.n)));
            }
            if !md.c_cos.is_finite() || !md.c_sin.is_finite() {
                return Err(Error::Invalid("non-finite mode coefficient".into()));
            }
        }
        if !self.constant.is_finite() {
            return Err(Error::Invalid("non-finite constant term".into()));
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        self.modes.iter().all(|m| m.c_cos == 0.0 && m.c_sin == 0.0)
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        let mut v = self.constant;
        for md in &self.modes {
            let th = TAU * (md.m as f64 * x1 + md.n as f64 * x2);
            let (s, c) = th.sin_cos();
            v += md.c_cos * c + md.c_sin * s;
        }
        v
    }

    pub fn grad(&self, x1: f64, x2: f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        for md in &self.modes {
            let th = TAU * (md.m as f64 * x1 + md.n as f64 * x2);
            let (s, c) = th.sin_cos();
            let d = -md.c_cos * s + md.c_sin * c;
            g[0] += TAU * md.m as f64 * d;
            g[1] += TAU * md.n as f64 * d;
        }
        g
    }

    /// Lipschitz constant `2 pi sum (|m| + |n|)(|c_cos| + |c_sin|)`.
    pub fn lipschitz(&self) -> f64 {
        TAU * self
            .modes
            .iter()
            .map(|md| (md.m.abs() + md.n.abs()) as f64 * (md.c_cos.abs() + md.c_sin.abs()))
            .sum::<f64>()
    }

    /// Grid extrema on a `CERT_GRID x CERT_GRID` lattice (no slack).
    pub fn grid_range(&self) -> (f64, f64) {
        if self.is_constant() {
            return (self.constant, self.constant);
        }
        let n = CERT_GRID;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let v = self.eval(i as f64 / n as f64, j as f64 / n as f64);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// Certified enclosure of the range: grid extrema widened by `L * diam / 2`,
    /// where `diam` is the diagonal of one grid cell.
    pub fn certified_range(&self) -> (f64, f64) {
        let (lo, hi) = self.grid_range();
        let slack = self.lipschitz() * std::f64::consts::SQRT_2 / CERT_GRID as f64 / 2.0;
        (lo - slack, hi + slack)
    }

    /// Upper bound for `sup |a|`.
    pub fn sup_abs_bound(&self) -> f64 {
        let (lo, hi) = self.certified_range();
        lo.abs().max(hi.abs())
    }
}

/// One mode of a trigonometric polynomial on `T^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeN {
    pub k: Vec<i32>,
    #[serde(default, deserialize_with = "crate::io::real::deserialize")]
    pub c_cos: f64,
    #[serde(default, deserialize_with = "crate::io::real::deserialize")]
    pub c_sin: f64,
}

/// A real trigonometric polynomial on `T^d`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialPoly {
    #[serde(default, deserialize_with = "crate::io::real::deserialize")]
    pub constant: f64,
    #[serde(default)]
    pub modes: Vec<ModeN>,
}

impl SpatialPoly {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let mut seen = HashSet::new();
        for md in &self.modes {
            if md.k.len() != dim {
                return Err(Error::Invalid(format!(
                    "potential mode {:?} has {} entries, expected {dim}",
                    md.k,
                    md.k.len()
                )));
            }
            if md.k.iter().all(|&k| k == 0) {
                return Err(Error::Invalid("zero wave vector belongs in the constant term".into()));
            }
            if !seen.insert(md.k.clone()) {
                return Err(Error::Invalid(format!("duplicate potential mode {:?}", md.k)));
            }
        }
        Ok(())
    }

    fn phase(k: &[i32], x: &[f64]) -> f64 {
        TAU * k.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum::<f64>()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for md in &self.modes {
            let (s, c) = Self::phase(&md.k, x).sin_cos();
            v += md.c_cos * c + md.c_sin * s;
        }
        v
    }

    /// Adds `scale * grad` into `out`.
    pub fn add_grad(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        for md in &self.modes {
            let (s, c) = Self::phase(&md.k, x).sin_cos();
            let d = scale * (-md.c_cos * s + md.c_sin * c);
            for (o, &k) in out.iter_mut().zip(&md.k) {
                *o += TAU * k as f64 * d;
            }
        }
    }

    /// Adds `scale * Hess` into the row-major `dim x dim` buffer `out`.
    pub fn add_hessian(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        let dim = x.len();
        for md in &self.modes {
            let (s, c) = Self::phase(&md.k, x).sin_cos();
            let d = -scale * (md.c_cos * c + md.c_sin * s);
            for i in 0..dim {
                let ki = TAU * md.k[i] as f64;
                if ki == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    out[i * dim + j] += d * ki * TAU * md.k[j] as f64;
                }
            }
        }
    }

    /// `sum |c| |2 pi k|^order` over modes, with `|c| = |c_cos| + |c_sin|`.
    pub fn frequency_moment(&self, order: i32, extra_freq: f64) -> f64 {
        self.modes
            .iter()
            .map(|md| {
                let w2: f64 =
                    md.k.iter().map(|&k| (TAU * k as f64).powi(2)).sum::<f64>() + extra_freq * extra_freq;
                (md.c_cos.abs() + md.c_sin.abs()) * w2.sqrt().powi(order)
            })
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.modes.iter().all(|m| m.c_cos == 0.0 && m.c_sin == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn eval_and_grad_match_finite_differences() {
        let p = TrigPoly2::new(
            1.0,
            vec![
                Mode2 { m: 1, n: 0, c_cos: 0.3, c_sin: -0.2 },
                Mode2 { m: 2, n: -1, c_cos: 0.0, c_sin: 0.5 },
            ],
        )
        .unwrap();
        let (x, y, h) = (0.137, 0.612, 1e-6);
        let g = p.grad(x, y);
        let fx = (p.eval(x + h, y) - p.eval(x - h, y)) / (2.0 * h);
        let fy = (p.eval(x, y + h) - p.eval(x, y - h)) / (2.0 * h);
        assert!((g[0] - fx).abs() < 1e-7);
        assert!((g[1] - fy).abs() < 1e-7);
    }

    #[test]
    fn duplicate_and_zero_modes_rejected() {
        let dup = TrigPoly2::new(
            0.0,
            vec![Mode2 { m: 1, n: 0, c_cos: 1.0, c_sin: 0.0 }, Mode2 { m: 1, n: 0, c_cos: 0.0, c_sin: 1.0 }],
        );
        assert!(dup.is_err());
        assert!(TrigPoly2::new(0.0, vec![Mode2 { m: 0, n: 0, c_cos: 1.0, c_sin: 0.0 }]).is_err());
    }

    #[test]
    fn certified_range_encloses_true_range() {
        let p = TrigPoly2::new(3.0 * PI, vec![Mode2 { m: 1, n: 0, c_cos: 0.0, c_sin: 0.5 }]).unwrap();
        let (lo, hi) = p.certified_range();
        assert!(lo <= 3.0 * PI - 0.5 && hi >= 3.0 * PI + 0.5);
        assert!((p.lipschitz() - PI).abs() < 1e-15);
        assert!(hi - (3.0 * PI + 0.5) < 0.01);
    }

    #[test]
    fn spatial_hessian_matches_gradient_differences() {
        let p = SpatialPoly {
            constant: 0.0,
            modes: vec![
                ModeN { k: vec![1, 0], c_cos: 0.01, c_sin: 0.0 },
                ModeN { k: vec![1, 1], c_cos: 0.02, c_sin: 0.03 },
            ],
        };
        let x = [0.21, 0.77];
        let h = 1e-6;
        let mut hess = [0.0; 4];
        p.add_hessian(&x, 1.0, &mut hess);
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let mut gp = [0.0; 2];
            let mut gm = [0.0; 2];
            p.add_grad(&xp, 1.0, &mut gp);
            p.add_grad(&xm, 1.0, &mut gm);
            for i in 0..2 {
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                assert!((hess[i * 2 + j] - fd).abs() < 1e-6, "{i}{j}");
            }
        }
    }
}
