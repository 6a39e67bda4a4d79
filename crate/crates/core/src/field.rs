//! Product magnetic forms `sigma = sum_j p_j^*(a_j mu)` on `T^{2N}`, the
//! Lorentz force, the transport operator along loops, non-resonance
//! certificates and the pointwise taming checks for almost complex structures.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{lift, TorusLoop};
use crate::trig::TrigPoly2;

/// `sigma = sum_j p_j^*(a_j mu)`; factor `j` acts on coordinates `(2j, 2j+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagneticField {
    a: Vec<TrigPoly2>,
}

impl MagneticField {
    pub fn new(a: Vec<TrigPoly2>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::Invalid("a magnetic field needs at least one factor".into()));
        }
        for p in &a {
            p.validate()?;
        }
        Ok(Self { a })
    }

    /// `a_j = c_j` constant on every factor.
    pub fn constant(values: &[f64]) -> Self {
        Self { a: values.iter().map(|&c| TrigPoly2::constant(c)).collect() }
    }

    /// Number of particles `N`.
    pub fn particles(&self) -> usize {
        self.a.len()
    }

    /// Dimension `2N` of the configuration torus.
    pub fn dim(&self) -> usize {
        2 * self.a.len()
    }

    pub fn factors(&self) -> &[TrigPoly2] {
        &self.a
    }

    /// `int_{T^2_j} sigma_j`, the mean of `a_j` on the unit torus.
    pub fn flux(&self, j: usize) -> f64 {
        self.a[j].constant
    }

    pub fn fluxes(&self) -> Vec<f64> {
        self.a.iter().map(|p| p.constant).collect()
    }

    pub fn is_constant(&self) -> bool {
        self.a.iter().all(TrigPoly2::is_constant)
    }

    /// `a_j(p_j(x))`.
    pub fn strength(&self, j: usize, x: &[f64]) -> f64 {
        self.a[j].eval(x[2 * j], x[2 * j + 1])
    }

    pub fn strength_grad(&self, j: usize, x: &[f64]) -> [f64; 2] {
        self.a[j].grad(x[2 * j], x[2 * j + 1])
    }

    /// Writes `Y_sigma(x) v` into `out`.
    pub fn apply_lorentz(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        for j in 0..self.a.len() {
            let a = self.strength(j, x);
            out[2 * j] = -a * v[2 * j + 1];
            out[2 * j + 1] = a * v[2 * j];
        }
    }

    /// Upper bound for `max_j sup |a_j|`.
    pub fn sup_norm_bound(&self) -> f64 {
        self.a.iter().map(TrigPoly2::sup_abs_bound).fold(0.0, f64::max)
    }
}

/// The Lorentz force `Y_sigma(x)`, defined by `sigma_x(v, v') = <Y v, v'>`:
/// block diagonal with blocks `a_j(p_j(x)) [[0, -1], [1, 0]]`.
pub fn lorentz(field: &MagneticField, x: &[f64]) -> DMatrix<f64> {
    let d = field.dim();
    let mut y = DMatrix::zeros(d, d);
    for j in 0..field.particles() {
        let a = field.strength(j, x);
        y[(2 * j, 2 * j + 1)] = -a;
        y[(2 * j + 1, 2 * j)] = a;
    }
    y
}

fn rotation_blocks(angles: &[f64]) -> DMatrix<f64> {
    let d = 2 * angles.len();
    let mut f = DMatrix::zeros(d, d);
    for (j, &b) in angles.iter().enumerate() {
        let (s, c) = b.sin_cos();
        f[(2 * j, 2 * j)] = c;
        f[(2 * j, 2 * j + 1)] = -s;
        f[(2 * j + 1, 2 * j)] = s;
        f[(2 * j + 1, 2 * j + 1)] = c;
    }
    f
}

/// Running integrals `int_0^{t_i} f` at every node of a uniform grid
/// (composite Simpson, closing odd counts with the 3/8 rule).
fn cumulative_simpson(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len() - 1;
    let mut out = vec![0.0; n + 1];
    for i in 1..=n {
        out[i] = if i % 2 == 0 {
            out[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i])
        } else if i >= 3 {
            out[i - 3] + 3.0 * h / 8.0 * (f[i - 3] + 3.0 * f[i - 2] + 3.0 * f[i - 1] + f[i])
        } else {
            0.5 * h * (f[0] + f[1])
        };
    }
    out
}

/// Angles `b_j(t) = int_0^t a_j(p_j(gamma(s))) ds` by quadrature on the loop samples.
pub fn transport_angles(field: &MagneticField, lp: &TorusLoop, t: f64) -> Result<Vec<f64>> {
    if lp.dim() != field.dim() {
        return Err(Error::Invalid("loop and field dimensions differ".into()));
    }
    let tau = lp.tau();
    if !(0.0..=tau).contains(&t) {
        return Err(Error::Invalid(format!("time {t} outside [0, {tau}]")));
    }
    let m = lp.len();
    let h = tau / m as f64;
    let lifted = lift(lp)?;
    let idx = ((t / h).floor() as usize).min(m);
    let rem = t - idx as f64 * h;
    let mut angles = Vec::with_capacity(field.particles());
    for j in 0..field.particles() {
        let f: Vec<f64> = lifted.iter().map(|x| field.strength(j, x)).collect();
        let cum = cumulative_simpson(&f, h);
        let mut b = cum[idx];
        if rem > 0.0 && idx < m {
            b += f[idx] * rem + (f[idx + 1] - f[idx]) * rem * rem / (2.0 * h);
        }
        angles.push(b);
    }
    Ok(angles)
}

/// The transport operator `F_sigma^gamma(t)`: block rotations `exp(b_j(t) j)`.
pub fn transport(field: &MagneticField, lp: &TorusLoop, t: f64) -> Result<DMatrix<f64>> {
    Ok(rotation_blocks(&transport_angles(field, lp, t)?))
}

/// Certificate that `tau a_j` stays strictly inside `(2 pi k_j, 2 pi (k_j + 1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonResCertificate {
    pub tau: f64,
    pub k: Vec<i64>,
    pub b_lo: Vec<f64>,
    pub b_hi: Vec<f64>,
    pub epsilon: f64,
}

impl NonResCertificate {
    /// `k_j` for `|a_j|`, i.e. the integer with `2 pi k < |tau a_j| < 2 pi (k+1)`.
    pub fn abs_k(&self) -> Vec<i64> {
        self.k.iter().map(|&k| if k >= 0 { k } else { -k - 1 }).collect()
    }

    pub fn k_total(&self) -> i64 {
        self.abs_k().iter().sum()
    }
}

/// Certifies non-resonance in period `tau` from certified extrema of each `a_j`.
pub fn certify_nonresonance(field: &MagneticField, tau: f64) -> Result<NonResCertificate> {
    if !(tau > 0.0) {
        return Err(Error::Invalid(format!("period must be positive, got {tau}")));
    }
    let mut k = Vec::new();
    let mut b_lo = Vec::new();
    let mut b_hi = Vec::new();
    let mut eps = f64::INFINITY;
    for (j, poly) in field.factors().iter().enumerate() {
        let (lo, hi) = poly.certified_range();
        let (lo, hi) = (tau * lo, tau * hi);
        let kj = (lo / TAU).floor();
        if !(TAU * kj < lo && hi < TAU * (kj + 1.0)) {
            return Err(Error::Resonant { factor: j, lo, hi });
        }
        let e = (lo / 2.0).sin().abs().min((hi / 2.0).sin().abs());
        eps = eps.min(2.0 * e);
        k.push(kj as i64);
        b_lo.push(lo);
        b_hi.push(hi);
    }
    Ok(NonResCertificate { tau, k, b_lo, b_hi, epsilon: eps })
}

/// The standard structure `J = [[0, -Id], [Id, 0]]` on `R^{4N}` in the
/// horizontal-vertical splitting.
pub fn standard_j(dim: usize) -> DMatrix<f64> {
    scaled_j(dim, 1.0)
}

/// `J_A = [[0, -Id / A], [A Id, 0]]`, `dim = 2N` being the torus dimension.
pub fn scaled_j(dim: usize, a: f64) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * dim, 2 * dim);
    for i in 0..dim {
        j[(i, dim + i)] = -1.0 / a;
        j[(dim + i, i)] = a;
    }
    j
}

/// Matrix of `dlambda` in the splitting, normalised so `dlambda(J xi, xi) = |xi|^2`.
fn dlambda_matrix(dim: usize) -> DMatrix<f64> {
    standard_j(dim)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn least_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TameReport {
    pub tame: bool,
    /// Least eigenvalue of the symmetric part of `omega(J., .) - dlambda(J., .) / 4`.
    pub margin: f64,
    /// `max |J - J_A|`, the sup-distance to the rescaled reference structure.
    pub distance_to_reference: f64,
}

/// Pointwise uniform-taming check `omega_sigma(J xi, xi) > dlambda(J xi, xi) / 4`.
pub fn tame_check(field: &MagneticField, x: &[f64], a_scale: f64, j: &DMatrix<f64>) -> Result<TameReport> {
    let dim = field.dim();
    if j.nrows() != 2 * dim || j.ncols() != 2 * dim {
        return Err(Error::Invalid(format!("J must be {0}x{0}", 2 * dim)));
    }
    let id = DMatrix::<f64>::identity(2 * dim, 2 * dim);
    let defect = max_abs(&(j * j + &id));
    if defect > 1e-8 {
        return Err(Error::NotAlmostComplex(defect));
    }
    let dl = dlambda_matrix(dim);
    let mut omega = dl.clone();
    let y = lorentz(field, x);
    // pi^* sigma(xi, zeta) = <Y xi^h, zeta^h>
    for r in 0..dim {
        for c in 0..dim {
            omega[(r, c)] += y[(c, r)];
        }
    }
    let q = j.transpose() * (omega - dl * 0.25);
    let margin = least_symmetric_eigenvalue(&q);
    Ok(TameReport {
        tame: margin > 0.0,
        margin,
        distance_to_reference: max_abs(&(j - scaled_j(dim, a_scale))),
    })
}

/// Least eigenvalue `kappa_J` of `-J_std J`, for `J` compatible with `dlambda`.
pub fn kappa(j: &DMatrix<f64>) -> Result<f64> {
    let n = j.nrows();
    if n != j.ncols() || n % 4 != 0 {
        return Err(Error::Invalid("J must be a square 4N x 4N matrix".into()));
    }
    let g = j.transpose() * dlambda_matrix(n / 2);
    let asym = max_abs(&(&g - g.transpose()));
    if asym > 1e-8 {
        return Err(Error::NotCompatible(format!("dlambda(J., .) is not symmetric (defect {asym:.3e})")));
    }
    let op = -(standard_j(n / 2) * j);
    let k = least_symmetric_eigenvalue(&op);
    if k <= 0.0 {
        return Err(Error::NotCompatible(format!("dlambda(J., .) is not positive (least eigenvalue {k:.3e})")));
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig::Mode2;
    use std::f64::consts::PI;

    fn bumpy() -> MagneticField {
        MagneticField::new(vec![TrigPoly2::new(3.0 * PI, vec![Mode2 { m: 1, n: 0, c_cos: 0.0, c_sin: 0.5 }])
            .unwrap()])
        .unwrap()
    }

    #[test]
    fn lorentz_examples() {
        let y = lorentz(&MagneticField::constant(&[2.0]), &[0.4, 0.1]);
        assert_eq!(y, DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]));
        let y = lorentz(&MagneticField::constant(&[1.0, 3.0]), &[0.0; 4]);
        let mut want = DMatrix::zeros(4, 4);
        want[(0, 1)] = -1.0;
        want[(1, 0)] = 1.0;
        want[(2, 3)] = -3.0;
        want[(3, 2)] = 3.0;
        assert_eq!(y, want);
        let y = lorentz(&bumpy(), &[0.25, 0.0]);
        assert!((y[(1, 0)] - (3.0 * PI + 0.5)).abs() < 1e-12);
        assert!((y[(1, 0)] - 9.9248).abs() < 1e-4);
        assert_eq!(y[(0, 1)], -y[(1, 0)]);
    }

    #[test]
    fn transport_of_constant_field_is_rotation() {
        let field = MagneticField::constant(&[PI]);
        let lp = TorusLoop::from_fn(1.0, 64, |t| vec![0.3 * (TAU * t).sin(), t]).unwrap();
        let f0 = transport(&field, &lp, 0.0).unwrap();
        assert!((f0 - DMatrix::identity(2, 2)).abs().max() < 1e-15);
        let f1 = transport(&field, &lp, 1.0).unwrap();
        assert!((f1 + DMatrix::identity(2, 2)).abs().max() < 1e-12);
        let ft = transport(&field, &lp, 0.37).unwrap();
        let (s, c) = (PI * 0.37).sin_cos();
        assert!((ft[(0, 0)] - c).abs() < 1e-12 && (ft[(1, 0)] - s).abs() < 1e-12);
    }

    #[test]
    fn cumulative_simpson_is_exact_for_cubics() {
        let h = 0.1;
        let f: Vec<f64> = (0..=9).map(|i| (i as f64 * h).powi(3)).collect();
        let c = cumulative_simpson(&f, h);
        for (i, v) in c.iter().enumerate().skip(2) {
            let t = i as f64 * h;
            assert!((v - t.powi(4) / 4.0).abs() < 1e-12, "node {i}");
        }
    }

    #[test]
    fn certificate_for_constant_three_pi() {
        let cert = certify_nonresonance(&MagneticField::constant(&[3.0 * PI]), 1.0).unwrap();
        assert_eq!(cert.k, vec![1]);
        assert_eq!(cert.b_lo[0], 3.0 * PI);
        assert_eq!(cert.b_hi[0], 3.0 * PI);
        assert_eq!(cert.epsilon, 2.0);
    }

    #[test]
    fn certificate_for_two_and_a_half_pi() {
        let cert = certify_nonresonance(&MagneticField::constant(&[2.5 * PI]), 1.0).unwrap();
        assert_eq!(cert.k, vec![1]);
        assert!((cert.epsilon - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn boundary_two_pi_is_resonant() {
        let r = certify_nonresonance(&MagneticField::constant(&[2.0 * PI]), 1.0);
        assert!(matches!(r, Err(Error::Resonant { factor: 0, .. })));
    }

    #[test]
    fn negative_field_uses_absolute_k() {
        let cert = certify_nonresonance(&MagneticField::constant(&[-3.0 * PI]), 1.0).unwrap();
        assert_eq!(cert.k, vec![-2]);
        assert_eq!(cert.abs_k(), vec![1]);
    }

    #[test]
    fn tame_examples() {
        let dim = 2;
        let r = tame_check(&MagneticField::constant(&[0.0]), &[0.0, 0.0], 1.0, &standard_j(dim)).unwrap();
        assert!(r.tame);
        assert!((r.margin - 0.75).abs() < 1e-12);
        for a in [0.5, 1.0, 4.0, 10.0] {
            let r = tame_check(&MagneticField::constant(&[a]), &[0.1, 0.2], a, &scaled_j(dim, a)).unwrap();
            assert!(r.tame, "a = {a}");
            assert_eq!(r.distance_to_reference, 0.0);
        }
        let r = tame_check(&MagneticField::constant(&[10.0]), &[0.0, 0.0], 1.0, &standard_j(dim)).unwrap();
        assert!(!r.tame && r.margin < 0.0);
    }

    #[test]
    fn tame_rejects_non_almost_complex() {
        let j = DMatrix::identity(4, 4);
        let r = tame_check(&MagneticField::constant(&[1.0]), &[0.0, 0.0], 1.0, &j);
        assert!(matches!(r, Err(Error::NotAlmostComplex(_))));
    }

    #[test]
    fn kappa_examples() {
        assert!((kappa(&standard_j(2)).unwrap() - 1.0).abs() < 1e-12);
        assert!((kappa(&scaled_j(2, 4.0)).unwrap() - 0.25).abs() < 1e-12);
        assert!((kappa(&scaled_j(2, 1.0 / 9.0)).unwrap() - 1.0 / 9.0).abs() < 1e-12);
        for a in [1.0, 2.0, 4.0, 9.0, 16.0] {
            assert!((kappa(&scaled_j(4, a)).unwrap() * a - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_rejects_incompatible() {
        let mut j = standard_j(2);
        j[(0, 1)] = 0.5;
        assert!(matches!(kappa(&j), Err(Error::NotCompatible(_))));
    }
}
