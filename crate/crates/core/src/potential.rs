//! Time-periodic potentials `V(t, x) = sum_i cos(2 pi m_i t / tau + phi_i) P_i(x)`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trig::{ModeN, SpatialPoly};

/// One separable term `cos(2 pi time_mode t / tau + phase) * space(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialTerm {
    #[serde(default)]
    pub time_mode: i32,
    #[serde(default, deserialize_with = "crate::io::real::deserialize")]
    pub phase: f64,
    pub space: SpatialPoly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    dim: usize,
    tau: f64,
    terms: Vec<PotentialTerm>,
}

/// Bounds for `sup |grad_x V|` over `S_tau x T^{2N}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientBound {
    /// Largest value seen on the evaluation grid.
    pub grid_max: f64,
    /// Rigorous upper bound: grid maximum of `|grad V|^2` plus a second-order
    /// remainder from the coefficient moments.
    pub certified: f64,
}

impl Potential {
    pub fn new(dim: usize, tau: f64, terms: Vec<PotentialTerm>) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::Invalid(format!("torus dimension must be even and positive, got {dim}")));
        }
        if !(tau > 0.0) {
            return Err(Error::Invalid(format!("period must be positive, got {tau}")));
        }
        for t in &terms {
            t.space.validate(dim)?;
            if !t.phase.is_finite() {
                return Err(Error::Invalid("non-finite potential phase".into()));
            }
        }
        Ok(Self { dim, tau, terms })
    }

    pub fn zero(dim: usize, tau: f64) -> Self {
        Self { dim, tau, terms: Vec::new() }
    }

    /// `amplitude * (cos 2 pi x_1 + ... + cos 2 pi x_{2N})`, autonomous.
    pub fn cosine_sum(dim: usize, tau: f64, amplitude: f64) -> Self {
        let modes = (0..dim)
            .map(|i| {
                let mut k = vec![0; dim];
                k[i] = 1;
                ModeN { k, c_cos: amplitude, c_sin: 0.0 }
            })
            .collect();
        Self {
            dim,
            tau,
            terms: vec![PotentialTerm { time_mode: 0, phase: 0.0, space: SpatialPoly { constant: 0.0, modes } }],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn terms(&self) -> &[PotentialTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.space.is_zero())
    }

    pub fn is_autonomous(&self) -> bool {
        self.terms.iter().all(|t| t.time_mode == 0)
    }

    fn time_factor(&self, term: &PotentialTerm, t: f64) -> f64 {
        (TAU * term.time_mode as f64 * t / self.tau + term.phase).cos()
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self.terms.iter().map(|term| self.time_factor(term, t) * term.space.eval(x)).sum()
    }

    pub fn grad(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.add_grad(t, x, 1.0, &mut g);
        g
    }

    pub fn add_grad(&self, t: f64, x: &[f64], scale: f64, out: &mut [f64]) {
        for term in &self.terms {
            term.space.add_grad(x, scale * self.time_factor(term, t), out);
        }
    }

    /// Row-major spatial Hessian.
    pub fn hessian(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.dim * self.dim];
        for term in &self.terms {
            term.space.add_hessian(x, self.time_factor(term, t), &mut h);
        }
        h
    }

    /// `V_rev(t, x) = V(tau - t, x)`.
    pub fn time_reversed(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| PotentialTerm { time_mode: t.time_mode, phase: -t.phase, space: t.space.clone() })
            .collect();
        Self { dim: self.dim, tau: self.tau, terms }
    }

    /// Grid maximisation of `|grad_x V|` with a certified second-order remainder.
    pub fn grad_bound(&self) -> GradientBound {
        if self.is_zero() {
            return GradientBound { grid_max: 0.0, certified: 0.0 };
        }
        let nt = if self.is_autonomous() { 1 } else { 64 };
        let budget = (1usize << 20) / nt;
        let mut n = 256usize;
        while n > 2 && n.pow(self.dim as u32) > budget {
            n -= 1;
        }
        let total = n.pow(self.dim as u32);
        let mut best = 0.0_f64;
        let mut x = vec![0.0; self.dim];
        let mut g = vec![0.0; self.dim];
        for it in 0..nt {
            let t = self.tau * it as f64 / nt as f64;
            for idx in 0..total {
                let mut r = idx;
                for xi in x.iter_mut() {
                    *xi = (r % n) as f64 / n as f64;
                    r /= n;
                }
                g.iter_mut().for_each(|v| *v = 0.0);
                self.add_grad(t, &x, 1.0, &mut g);
                best = best.max(g.iter().map(|v| v * v).sum());
            }
        }
        // |D^2 (|grad V|^2)| <= 2 (S2^2 + S1 S3); the maximiser is within half a
        // cell diagonal of some grid node and is a critical point.
        let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
        for term in &self.terms {
            let wt = TAU * term.time_mode as f64 / self.tau;
            s1 += term.space.frequency_moment(1, wt);
            s2 += term.space.frequency_moment(2, wt);
            s3 += term.space.frequency_moment(3, wt);
        }
        let l2 = 2.0 * (s2 * s2 + s1 * s3);
        let hx = 1.0 / n as f64;
        let mut r2 = self.dim as f64 * (hx / 2.0).powi(2);
        if nt > 1 {
            r2 += (self.tau / nt as f64 / 2.0).powi(2);
        }
        GradientBound { grid_max: best.sqrt(), certified: (best + 0.5 * l2 * r2).sqrt() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gradient_of_cosine_sum() {
        let v = Potential::cosine_sum(2, 1.0, 0.01);
        let g = v.grad(0.0, &[0.25, 0.0]);
        assert!((g[0] + 0.02 * PI).abs() < 1e-15);
        assert!(g[1].abs() < 1e-15);
    }

    #[test]
    fn periodic_in_time() {
        let v = Potential::new(
            2,
            1.5,
            vec![PotentialTerm {
                time_mode: 2,
                phase: 0.3,
                space: SpatialPoly { constant: 0.0, modes: vec![ModeN { k: vec![1, -1], c_cos: 0.2, c_sin: 0.1 }] },
            }],
        )
        .unwrap();
        let x = [0.3, 0.9];
        assert!((v.eval(0.2, &x) - v.eval(1.7, &x)).abs() < 1e-14);
        let rev = v.time_reversed();
        assert!((rev.eval(0.4, &x) - v.eval(1.1, &x)).abs() < 1e-14);
    }

    #[test]
    fn grad_bound_for_cosine_sum() {
        let v = Potential::cosine_sum(2, 1.0, 0.01);
        let b = v.grad_bound();
        let exact = 0.02 * PI * 2f64.sqrt();
        assert!((b.grid_max - exact).abs() < 1e-15);
        assert!(b.certified >= exact);
        assert!(b.certified - exact < 1e-4);
    }

    #[test]
    fn zero_potential_has_zero_bound() {
        let b = Potential::zero(4, 1.0).grad_bound();
        assert_eq!(b.certified, 0.0);
    }

    #[test]
    fn rejects_mismatched_modes() {
        let r = Potential::new(
            2,
            1.0,
            vec![PotentialTerm {
                time_mode: 0,
                phase: 0.0,
                space: SpatialPoly { constant: 0.0, modes: vec![ModeN { k: vec![1], c_cos: 1.0, c_sin: 0.0 }] },
            }],
        );
        assert!(r.is_err());
    }
}
