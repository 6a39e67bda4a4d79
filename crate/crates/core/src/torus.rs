//! Flat torus `T^{2N} = R^{2N} / Z^{2N}`: points, phase points, sampled loops
//! and their lifts to the universal cover.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduces a single coordinate into `[0, 1)`.
///
/// `rem_euclid` alone can round tiny negative inputs up to exactly `1.0`.
pub fn wrap_coord(v: f64) -> f64 {
    let r = v - v.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed shortest displacement from `a` to `b` on the circle `R/Z`, in `[-1/2, 1/2]`.
pub fn circle_delta(a: f64, b: f64) -> f64 {
    let d = b - a;
    d - d.round()
}

/// A point of `T^{2N}` with every coordinate in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusPoint(Vec<f64>);

impl TorusPoint {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean distance in the flat metric (shortest representative).
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| circle_delta(*a, *b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Reduces a vector of `R^{2N}` modulo the integer lattice.
pub fn wrap(v: &[f64]) -> TorusPoint {
    TorusPoint(v.iter().copied().map(wrap_coord).collect())
}

/// A point `(x, p)` of `T* T^{2N} = T^{2N} x R^{2N}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: TorusPoint,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: &[f64], p: &[f64]) -> Self {
        assert_eq!(x.len(), p.len(), "position and momentum dimensions differ");
        Self { x: wrap(x), p: p.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Flat-metric distance in phase space (torus distance for `x`, Euclidean for `p`).
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        let dx = self.x.distance(&other.x);
        let dp: f64 = self.p.iter().zip(&other.p).map(|(a, b)| (a - b).powi(2)).sum();
        (dx * dx + dp).sqrt()
    }
}

/// A `tau`-periodic loop in `T^{2N}` given by `M` uniformly spaced samples
/// `gamma(i tau / M)`, `i = 0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusLoop {
    tau: f64,
    samples: Vec<TorusPoint>,
    winding: Vec<i64>,
}

impl TorusLoop {
    pub const MIN_SAMPLES: usize = 8;

    pub fn new(tau: f64, samples: Vec<TorusPoint>) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Invalid(format!("period must be positive, got {tau}")));
        }
        if samples.len() < Self::MIN_SAMPLES {
            return Err(Error::Invalid(format!(
                "a loop needs at least {} samples, got {}",
                Self::MIN_SAMPLES,
                samples.len()
            )));
        }
        let dim = samples[0].dim();
        if samples.iter().any(|s| s.dim() != dim) {
            return Err(Error::Invalid("loop samples have mixed dimensions".into()));
        }
        let lifted = lift_samples(&samples)?;
        let winding = displacement_to_winding(&lifted[0], &lifted[lifted.len() - 1]);
        Ok(Self { tau, samples, winding })
    }

    /// Samples an arbitrary map `t -> R^{2N}` (interpreted modulo `Z^{2N}`).
    pub fn from_fn(tau: f64, m: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let samples = (0..m).map(|i| wrap(&f(tau * i as f64 / m as f64))).collect();
        Self::new(tau, samples)
    }

    /// The reference loop `t -> t h / tau` of class `h`.
    pub fn reference(h: &[i64], tau: f64, m: usize) -> Result<Self> {
        Self::from_fn(tau, m, |t| h.iter().map(|&hi| hi as f64 * t / tau).collect())
    }

    /// A constant loop at `x`.
    pub fn constant(x: &[f64], tau: f64, m: usize) -> Result<Self> {
        Self::from_fn(tau, m, |_| x.to_vec())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn samples(&self) -> &[TorusPoint] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    pub fn winding(&self) -> &[i64] {
        &self.winding
    }

    /// Same loop traversed backwards, `t -> gamma(tau - t)`.
    pub fn reversed(&self) -> Self {
        let m = self.samples.len();
        let samples = (0..m).map(|i| self.samples[(m - i) % m].clone()).collect();
        Self {
            tau: self.tau,
            samples,
            winding: self.winding.iter().map(|h| -h).collect(),
        }
    }

    /// Doubles the sampling density by linear interpolation of the lift.
    pub fn refined(&self) -> Result<Self> {
        let lifted = lift(self)?;
        let mut samples = Vec::with_capacity(2 * self.samples.len());
        for w in lifted.windows(2) {
            samples.push(wrap(&w[0]));
            let mid: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect();
            samples.push(wrap(&mid));
        }
        Self::new(self.tau, samples)
    }
}

fn lift_samples(samples: &[TorusPoint]) -> Result<Vec<Vec<f64>>> {
    let m = samples.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    out.push(samples[0].coords().to_vec());
    for i in 0..m {
        let next = &samples[(i + 1) % m];
        let prev_lift = &out[i];
        let cur = samples[i].coords();
        let mut lifted = Vec::with_capacity(cur.len());
        for (c, (&a, &b)) in cur.iter().zip(next.coords()).enumerate() {
            let d = circle_delta(a, b);
            if d.abs() >= 0.5 - 1e-12 {
                return Err(Error::AmbiguousLift { index: i, coord: c, jump: d.abs() });
            }
            lifted.push(prev_lift[c] + d);
        }
        out.push(lifted);
    }
    Ok(out)
}

fn displacement_to_winding(start: &[f64], end: &[f64]) -> Vec<i64> {
    start.iter().zip(end).map(|(a, b)| (b - a).round() as i64).collect()
}

/// Continuous lift of the loop to `R^{2N}`.
///
/// Returns `M + 1` points: the lifts of the samples followed by the lift of
/// `gamma(tau)`, so that `last - first` equals the winding vector.
pub fn lift(lp: &TorusLoop) -> Result<Vec<Vec<f64>>> {
    lift_samples(&lp.samples)
}

/// Homotopy class of the loop in `pi_1(T^{2N}) = Z^{2N}`.
pub fn winding_class(lp: &TorusLoop) -> Result<Vec<i64>> {
    let lifted = lift(lp)?;
    Ok(displacement_to_winding(&lifted[0], &lifted[lifted.len() - 1]))
}
