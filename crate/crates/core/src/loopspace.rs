//! Fourier loops, the magnetic action functional, its differential and
//! second variation.
//!
//! A loop of `N` particles is stored as
//! `gamma_j(t) = t h_j / tau + sum_{|k| <= K} R(2 pi k t / tau) c_{j,k}`
//! with `R` the counterclockwise rotation; in complex notation
//! `z_j(t) = sum c_{j,k} e^{2 pi i k t / tau}`. The `k = 0` block is the base.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::MagneticField;
use crate::potential::Potential;
use crate::spectral::{bin_frequency, dft};
use crate::torus::{lift, wrap, TorusLoop};

/// Eigenvalues with `|lambda| <= NULL_TOL` count towards the nullity.
pub const NULL_TOL: f64 = 1e-7;
/// Gradient norm below which a loop is accepted as critical.
pub const CRITICAL_TOL: f64 = 1e-8;
/// Truncation levels tried by [`hessian_index`].
pub const INDEX_LEVELS: [usize; 4] = [8, 16, 32, 64];
/// Gauss-Legendre nodes in the cap direction.
const CAP_NODES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierLoop {
    tau: f64,
    k: usize,
    winding: Vec<i64>,
    coeffs: Vec<f64>,
}

impl FourierLoop {
    /// `coeffs` has `(2K + 1) * dim` entries, block `k + K` holding `c_k`.
    pub fn new(tau: f64, k: usize, winding: Vec<i64>, coeffs: Vec<f64>) -> Result<Self> {
        let dim = winding.len();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::Invalid(format!("loop dimension must be even and positive, got {dim}")));
        }
        if k == 0 {
            return Err(Error::Invalid("truncation order must be at least 1".into()));
        }
        if !(tau > 0.0) {
            return Err(Error::Invalid(format!("period must be positive, got {tau}")));
        }
        if coeffs.len() != (2 * k + 1) * dim {
            return Err(Error::Invalid(format!(
                "expected {} coefficients, got {}",
                (2 * k + 1) * dim,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("non-finite loop coefficient".into()));
        }
        Ok(Self { tau, k, winding, coeffs })
    }

    pub fn constant(x: &[f64], tau: f64, k: usize) -> Result<Self> {
        let dim = x.len();
        let mut coeffs = vec![0.0; (2 * k + 1) * dim];
        coeffs[k * dim..(k + 1) * dim].copy_from_slice(x);
        Self::new(tau, k, vec![0; dim], coeffs)
    }

    /// Least-squares (DFT) fit of a sampled loop; needs `M >= 2K + 1`.
    pub fn fit(lp: &TorusLoop, k: usize) -> Result<Self> {
        let m = lp.len();
        if m < 2 * k + 1 {
            return Err(Error::Invalid(format!("{m} samples cannot carry order {k}")));
        }
        let tau = lp.tau();
        let dim = lp.dim();
        let h = lp.winding().to_vec();
        let lifted = lift(lp)?;
        let mut coeffs = vec![0.0; (2 * k + 1) * dim];
        for j in 0..dim / 2 {
            let z: Vec<Complex64> = (0..m)
                .map(|i| {
                    let s = i as f64 / m as f64;
                    Complex64::new(
                        lifted[i][2 * j] - s * h[2 * j] as f64,
                        lifted[i][2 * j + 1] - s * h[2 * j + 1] as f64,
                    )
                })
                .collect();
            let c = dft(&z);
            for (bin, ck) in c.iter().enumerate() {
                let f = bin_frequency(bin, m);
                if f.unsigned_abs() as usize > k {
                    continue;
                }
                let off = ((f + k as i64) as usize) * dim + 2 * j;
                coeffs[off] = ck.re;
                coeffs[off + 1] = ck.im;
            }
        }
        Self::new(tau, k, h, coeffs)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.winding.len()
    }

    pub fn particles(&self) -> usize {
        self.dim() / 2
    }

    pub fn winding(&self) -> &[i64] {
        &self.winding
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// `c_k` for `|k| <= K`.
    pub fn mode(&self, k: i64) -> &[f64] {
        let dim = self.dim();
        let off = (k + self.k as i64) as usize * dim;
        &self.coeffs[off..off + dim]
    }

    pub fn base(&self) -> &[f64] {
        self.mode(0)
    }

    pub fn is_contractible(&self) -> bool {
        self.winding.iter().all(|&h| h == 0)
    }

    fn omega(&self, k: i64) -> f64 {
        TAU * k as f64 / self.tau
    }

    /// Lifted position at time `t`.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let dim = self.dim();
        let mut out: Vec<f64> = self.winding.iter().map(|&h| h as f64 * t / self.tau).collect();
        for k in -(self.k as i64)..=self.k as i64 {
            let (s, c) = (self.omega(k) * t).sin_cos();
            let ck = self.mode(k);
            for j in 0..dim / 2 {
                out[2 * j] += c * ck[2 * j] - s * ck[2 * j + 1];
                out[2 * j + 1] += s * ck[2 * j] + c * ck[2 * j + 1];
            }
        }
        out
    }

    /// Velocity at time `t`.
    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let dim = self.dim();
        let mut out: Vec<f64> = self.winding.iter().map(|&h| h as f64 / self.tau).collect();
        for k in -(self.k as i64)..=self.k as i64 {
            let w = self.omega(k);
            let (s, c) = (w * t).sin_cos();
            let ck = self.mode(k);
            for j in 0..dim / 2 {
                let (u, v) = (c * ck[2 * j] - s * ck[2 * j + 1], s * ck[2 * j] + c * ck[2 * j + 1]);
                out[2 * j] -= w * v;
                out[2 * j + 1] += w * u;
            }
        }
        out
    }

    /// `m` wrapped samples at `t_i = i tau / m`.
    pub fn sample(&self, m: usize) -> Result<TorusLoop> {
        TorusLoop::new(self.tau, (0..m).map(|i| wrap(&self.eval(self.tau * i as f64 / m as f64))).collect())
    }

    /// `t -> gamma(tau - t)`.
    pub fn reversed(&self) -> Self {
        let dim = self.dim();
        let kk = self.k as i64;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for k in -kk..=kk {
            let dst = ((k + kk) as usize) * dim;
            coeffs[dst..dst + dim].copy_from_slice(self.mode(-k));
        }
        for (c, &h) in coeffs[self.k * dim..(self.k + 1) * dim].iter_mut().zip(&self.winding) {
            *c += h as f64;
        }
        Self { tau: self.tau, k: self.k, winding: self.winding.iter().map(|h| -h).collect(), coeffs }
    }

    /// Drops or zero-pads modes to order `k`.
    pub fn with_order(&self, k: usize) -> Result<Self> {
        let dim = self.dim();
        let mut coeffs = vec![0.0; (2 * k + 1) * dim];
        let common = k.min(self.k) as i64;
        for q in -common..=common {
            let dst = ((q + k as i64) as usize) * dim;
            coeffs[dst..dst + dim].copy_from_slice(self.mode(q));
        }
        Self::new(self.tau, k, self.winding.clone(), coeffs)
    }

    /// `self + s * dir` on coefficients of the same shape.
    pub fn axpy(&self, s: f64, dir: &[f64]) -> Self {
        let mut out = self.clone();
        for (c, d) in out.coeffs.iter_mut().zip(dir) {
            *c += s * d;
        }
        out
    }

    /// `L^2` pairing `int <xi, zeta> dt` of two coefficient vectors.
    pub fn pairing(&self, xi: &[f64], zeta: &[f64]) -> f64 {
        self.tau * xi.iter().zip(zeta).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Mode-wise `W^{1,2}` preconditioner `(1 + (2 pi k / tau)^2)^{-1}`.
    pub fn precondition(&self, g: &mut [f64]) {
        let dim = self.dim();
        for k in -(self.k as i64)..=self.k as i64 {
            let f = 1.0 / (1.0 + self.omega(k).powi(2));
            let off = ((k + self.k as i64) as usize) * dim;
            g[off..off + dim].iter_mut().for_each(|v| *v *= f);
        }
    }

    /// `W^{1,2}` norm of the Riesz representative of an `L^2` gradient.
    pub fn sobolev_norm_of_gradient(&self, g: &[f64]) -> f64 {
        let dim = self.dim();
        let mut acc = 0.0;
        for k in -(self.k as i64)..=self.k as i64 {
            let f = 1.0 / (1.0 + self.omega(k).powi(2));
            let off = ((k + self.k as i64) as usize) * dim;
            acc += f * g[off..off + dim].iter().map(|v| v * v).sum::<f64>();
        }
        (self.tau * acc).sqrt()
    }

    /// `L^2` norm of a gradient given by its coefficients.
    pub fn l2_norm(&self, g: &[f64]) -> f64 {
        self.pairing(g, g).sqrt()
    }
}

/// Quadrature nodes for one loop: positions and velocities at `t_i = i tau / M`.
struct Nodes {
    m: usize,
    times: Vec<f64>,
    pos: Vec<Vec<f64>>,
    vel: Vec<Vec<f64>>,
}

fn nodes(lp: &FourierLoop, m: usize) -> Nodes {
    let times: Vec<f64> = (0..m).map(|i| lp.tau * i as f64 / m as f64).collect();
    let pos = times.iter().map(|&t| lp.eval(t)).collect();
    let vel = times.iter().map(|&t| lp.velocity(t)).collect();
    Nodes { m, times, pos, vel }
}

fn quadrature_nodes(k: usize) -> usize {
    256.max(8 * k)
}

/// Values of the Lagrangian action and its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionReport {
    /// `int |gamma'|^2 / 2`.
    pub kinetic: f64,
    /// Integral of the field over the radial cap.
    pub magnetic: f64,
    /// `int V(t, gamma)`.
    pub potential: f64,
    /// `kinetic + magnetic - potential`.
    pub total: f64,
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    // nodes and weights on [0, 1]
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for l in 2..=n {
                let p2 = ((2 * l - 1) as f64 * z * p1 - (l - 1) as f64 * p0) / l as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn require_contractible(lp: &FourierLoop) -> Result<()> {
    if lp.is_contractible() {
        Ok(())
    } else {
        Err(Error::NonContractible(lp.winding.clone()))
    }
}

fn check_compat(field: &MagneticField, v: &Potential, lp: &FourierLoop) -> Result<()> {
    if field.dim() != lp.dim() || v.dim() != lp.dim() {
        return Err(Error::Invalid("field, potential and loop dimensions differ".into()));
    }
    if (v.tau() - lp.tau).abs() > 1e-12 * lp.tau {
        return Err(Error::Invalid(format!("loop period {} differs from potential period {}", lp.tau, v.tau())));
    }
    Ok(())
}

/// Magnetic term over the radial cap `z(s, t) = base + s (gamma(t) - base)`.
/// Orientation is fixed so that a counterclockwise circle in a constant field
/// `a` contributes `-a` times its area.
pub fn magnetic_term(field: &MagneticField, lp: &FourierLoop, base: &[f64]) -> Result<f64> {
    require_contractible(lp)?;
    let nd = nodes(lp, quadrature_nodes(lp.k));
    let (sx, sw) = gauss_legendre(CAP_NODES);
    let mut total = 0.0;
    for i in 0..nd.m {
        let (g, dg) = (&nd.pos[i], &nd.vel[i]);
        for j in 0..lp.particles() {
            let r = [g[2 * j] - base[2 * j], g[2 * j + 1] - base[2 * j + 1]];
            let det = r[0] * dg[2 * j + 1] - r[1] * dg[2 * j];
            if det == 0.0 {
                continue;
            }
            let poly = &field.factors()[j];
            let mut inner = 0.0;
            for (s, w) in sx.iter().zip(&sw) {
                inner += w * s * poly.eval(base[2 * j] + s * r[0], base[2 * j + 1] + s * r[1]);
            }
            total -= inner * det;
        }
    }
    Ok(total * lp.tau / nd.m as f64)
}

/// `S(gamma) = int |gamma'|^2 / 2 - int V(t, gamma) + A(gamma)`.
pub fn action(field: &MagneticField, v: &Potential, lp: &FourierLoop) -> Result<ActionReport> {
    check_compat(field, v, lp)?;
    require_contractible(lp)?;
    let mut kinetic = 0.0;
    for k in -(lp.k as i64)..=lp.k as i64 {
        let n2: f64 = lp.mode(k).iter().map(|c| c * c).sum();
        kinetic += 2.0 * PI * PI * (k * k) as f64 / lp.tau * n2;
    }
    let magnetic = magnetic_term(field, lp, lp.base())?;
    let potential = if v.is_zero() {
        0.0
    } else {
        let m = quadrature_nodes(lp.k);
        (0..m)
            .map(|i| {
                let t = lp.tau * i as f64 / m as f64;
                v.eval(t, &lp.eval(t))
            })
            .sum::<f64>()
            * lp.tau
            / m as f64
    };
    Ok(ActionReport { kinetic, magnetic, potential, total: kinetic + magnetic - potential })
}

/// Fourier coefficients of the `L^2` gradient `-gamma'' + Y gamma' - grad V_t(gamma)`.
/// The result has the loop's coefficient layout; `FourierLoop::pairing`
/// turns it into the differential.
pub fn gradient(field: &MagneticField, v: &Potential, lp: &FourierLoop) -> Result<Vec<f64>> {
    check_compat(field, v, lp)?;
    require_contractible(lp)?;
    Ok(gradient_unchecked(field, v, lp))
}

/// Preconditioned gradient: the `W^{1,2}` Riesz representative.
pub fn sobolev_gradient(field: &MagneticField, v: &Potential, lp: &FourierLoop) -> Result<Vec<f64>> {
    let mut g = gradient(field, v, lp)?;
    lp.precondition(&mut g);
    Ok(g)
}

/// Gradient without the contractibility requirement; the field equation
/// makes sense in every free homotopy class.
pub(crate) fn gradient_unchecked(field: &MagneticField, v: &Potential, lp: &FourierLoop) -> Vec<f64> {
    let dim = lp.dim();
    let kk = lp.k as i64;
    let mut g = vec![0.0; lp.coeffs.len()];
    for k in -kk..=kk {
        let w2 = lp.omega(k).powi(2);
        let off = ((k + kk) as usize) * dim;
        for (gc, c) in g[off..off + dim].iter_mut().zip(lp.mode(k)) {
            *gc = w2 * c;
        }
    }
    if field.is_constant() && v.is_zero() {
        // Y gamma' projects mode-wise
        for k in -kk..=kk {
            let w = lp.omega(k);
            let off = ((k + kk) as usize) * dim;
            let ck = lp.mode(k).to_vec();
            for j in 0..lp.particles() {
                let a = field.factors()[j].constant;
                // a j (w j c) = -a w c
                g[off + 2 * j] -= a * w * ck[2 * j];
                g[off + 2 * j + 1] -= a * w * ck[2 * j + 1];
            }
        }
        // winding drift has no oscillating part; its Lorentz force is constant
        for j in 0..lp.particles() {
            let a = field.factors()[j].constant;
            let hv = [lp.winding[2 * j] as f64 / lp.tau, lp.winding[2 * j + 1] as f64 / lp.tau];
            g[lp.k * dim + 2 * j] += -a * hv[1];
            g[lp.k * dim + 2 * j + 1] += a * hv[0];
        }
        return g;
    }
    let nd = nodes(lp, quadrature_nodes(lp.k));
    let mut force = vec![0.0; dim];
    let inv_m = 1.0 / nd.m as f64;
    for i in 0..nd.m {
        let t = nd.times[i];
        // Y gamma' - grad V
        field.apply_lorentz(&nd.pos[i], &nd.vel[i], &mut force);
        v.add_grad(t, &nd.pos[i], -1.0, &mut force);
        for k in -kk..=kk {
            let (s, c) = (lp.omega(k) * t).sin_cos();
            let off = ((k + kk) as usize) * dim;
            for j in 0..lp.particles() {
                let (f0, f1) = (force[2 * j], force[2 * j + 1]);
                // R^T f
                g[off + 2 * j] += inv_m * (c * f0 + s * f1);
                g[off + 2 * j + 1] += inv_m * (-s * f0 + c * f1);
            }
        }
    }
    g
}

/// Symmetric second variation on modes `|k| <= order`, normalised by `1/tau`
/// so that a constant field gives eigenvalues `w_k^2 - a w_k`.
pub fn hessian_matrix(field: &MagneticField, v: &Potential, lp: &FourierLoop, order: usize) -> Result<DMatrix<f64>> {
    check_compat(field, v, lp)?;
    let dim = lp.dim();
    let nb = (2 * order + 1) * dim;
    let ko = order as i64;
    let mut h = DMatrix::<f64>::zeros(nb, nb);
    let omega = |k: i64| TAU * k as f64 / lp.tau;
    for k in -ko..=ko {
        let w2 = omega(k).powi(2);
        for c in 0..dim {
            let r = ((k + ko) as usize) * dim + c;
            h[(r, r)] = w2;
        }
    }
    if v.is_zero() && field.is_constant() {
        // for constant fields the magnetic block is exactly diagonal per mode
        for k in -ko..=ko {
            let w = omega(k);
            for j in 0..lp.particles() {
                let a = field.factors()[j].constant;
                let r = ((k + ko) as usize) * dim + 2 * j;
                // B^T a j D with D = w j R gives -a w on the diagonal
                h[(r, r)] -= a * w;
                h[(r + 1, r + 1)] -= a * w;
            }
        }
        return Ok(h);
    }
    let m = quadrature_nodes(order.max(lp.k));
    let nd = nodes(lp, m);
    let w = 1.0 / m as f64;
    let mut b = DMatrix::<f64>::zeros(dim, nb);
    let mut dmat = DMatrix::<f64>::zeros(dim, nb);
    let mut q = DMatrix::<f64>::zeros(dim, dim);
    let mut ag = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..m {
        let t = nd.times[i];
        let (g, dg) = (&nd.pos[i], &nd.vel[i]);
        b.fill(0.0);
        dmat.fill(0.0);
        for k in -ko..=ko {
            let wk = omega(k);
            let (s, c) = (wk * t).sin_cos();
            for j in 0..lp.particles() {
                let col = ((k + ko) as usize) * dim + 2 * j;
                let r = 2 * j;
                b[(r, col)] = c;
                b[(r, col + 1)] = -s;
                b[(r + 1, col)] = s;
                b[(r + 1, col + 1)] = c;
                // d/dt R = w j R
                dmat[(r, col)] = -wk * s;
                dmat[(r, col + 1)] = -wk * c;
                dmat[(r + 1, col)] = wk * c;
                dmat[(r + 1, col + 1)] = -wk * s;
            }
        }
        let hv = v.hessian(t, g);
        for r in 0..dim {
            for c in 0..dim {
                q[(r, c)] = -hv[r * dim + c];
            }
        }
        ag.fill(0.0);
        for j in 0..lp.particles() {
            let a = field.strength(j, g);
            let ga = field.strength_grad(j, g);
            let jv = [-dg[2 * j + 1], dg[2 * j]];
            for r in 0..2 {
                for c in 0..2 {
                    q[(2 * j + r, 2 * j + c)] += jv[r] * ga[c];
                }
            }
            ag[(2 * j, 2 * j + 1)] = -a;
            ag[(2 * j + 1, 2 * j)] = a;
        }
        let t1 = &q * &b + &ag * &dmat;
        h.gemm_tr(w, &b, &t1, 1.0);
    }
    let sym = (&h + h.transpose()) * 0.5;
    Ok(sym)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianIndex {
    pub morse_index: usize,
    pub nullity: usize,
    /// Counts agreed on three consecutive truncation levels.
    pub converged: bool,
    /// `(order, index, nullity)` for each level evaluated.
    pub levels: Vec<(usize, usize, usize)>,
}

fn counts(h: &DMatrix<f64>) -> (usize, usize) {
    let eig = SymmetricEigen::new(h.clone()).eigenvalues;
    let neg = eig.iter().filter(|&&l| l < -NULL_TOL).count();
    let null = eig.iter().filter(|&&l| l.abs() <= NULL_TOL).count();
    (neg, null)
}

/// Morse index and nullity of the second variation at a critical loop,
/// computed on increasing truncations until the counts settle.
///
/// With fewer than three admissible levels the last counts are returned with
/// `converged = false`; if three or more levels never settle the result is
/// [`Error::NotConverged`].
pub fn hessian_index(field: &MagneticField, v: &Potential, lp: &FourierLoop, k_max: usize) -> Result<HessianIndex> {
    check_compat(field, v, lp)?;
    let g = gradient_unchecked(field, v, lp);
    let gn = lp.l2_norm(&g);
    if gn >= CRITICAL_TOL {
        return Err(Error::NotCritical(gn));
    }
    let levels: Vec<usize> = INDEX_LEVELS.iter().copied().filter(|&k| k <= k_max).collect();
    if levels.is_empty() {
        return Err(Error::Invalid(format!("no truncation level fits under K_max = {k_max}")));
    }
    let mut out = Vec::new();
    for &k in &levels {
        let (neg, null) = counts(&hessian_matrix(field, v, lp, k)?);
        out.push((k, neg, null));
        if out.len() >= 3 {
            let tail = &out[out.len() - 3..];
            if tail.iter().all(|e| e.1 == tail[0].1 && e.2 == tail[0].2) {
                return Ok(HessianIndex { morse_index: neg, nullity: null, converged: true, levels: out });
            }
        }
    }
    if out.len() < 3 {
        let &(_, neg, null) = out.last().expect("at least one level");
        return Ok(HessianIndex { morse_index: neg, nullity: null, converged: false, levels: out });
    }
    Err(Error::NotConverged(*levels.last().expect("non-empty")))
}

/// Conley-Zehnder index via the index relation: the Morse index for a
/// nondegenerate critical loop, `index + nullity / 2` along a Morse-Bott
/// critical manifold.
pub fn cz_index(field: &MagneticField, v: &Potential, lp: &FourierLoop, is_nondegenerate: bool) -> Result<i64> {
    let hi = hessian_index(field, v, lp, *INDEX_LEVELS.last().expect("levels"))?;
    cz_from_counts(&hi, is_nondegenerate)
}

pub fn cz_from_counts(hi: &HessianIndex, is_nondegenerate: bool) -> Result<i64> {
    let inconsistent = || Error::InconsistentNullity { nullity: hi.nullity, nondegenerate: is_nondegenerate };
    if is_nondegenerate {
        if hi.nullity != 0 {
            return Err(inconsistent());
        }
        Ok(hi.morse_index as i64)
    } else {
        if hi.nullity == 0 || hi.nullity % 2 != 0 {
            return Err(inconsistent());
        }
        Ok((hi.morse_index + hi.nullity / 2) as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentReport {
    pub iterations: usize,
    pub converged: bool,
    /// Action fell below `-1e6`.
    pub unbounded: bool,
    pub gradient_norm: f64,
    /// Action before the first step and after every accepted step.
    pub action_trace: Vec<f64>,
}

pub const UNBOUNDED_ACTION: f64 = -1e6;
const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 50;

/// Preconditioned gradient descent with Armijo backtracking.
pub fn descend(
    field: &MagneticField,
    v: &Potential,
    start: &FourierLoop,
    max_iters: usize,
    grad_tol: f64,
) -> Result<(FourierLoop, DescentReport)> {
    check_compat(field, v, start)?;
    require_contractible(start)?;
    let mut lp = start.clone();
    let mut s = action(field, v, &lp)?.total;
    let mut trace = vec![s];
    let mut iterations = 0;
    loop {
        let g = gradient_unchecked(field, v, &lp);
        let gn = lp.sobolev_norm_of_gradient(&g);
        if gn < grad_tol {
            return Ok((lp, DescentReport { iterations, converged: true, unbounded: false, gradient_norm: gn, action_trace: trace }));
        }
        if s < UNBOUNDED_ACTION || iterations >= max_iters {
            let unbounded = s < UNBOUNDED_ACTION;
            return Ok((lp, DescentReport { iterations, converged: false, unbounded, gradient_norm: gn, action_trace: trace }));
        }
        let mut d = g.clone();
        lp.precondition(&mut d);
        d.iter_mut().for_each(|x| *x = -*x);
        let slope = lp.pairing(&g, &d);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = lp.axpy(alpha, &d);
            let sc = action(field, v, &cand)?.total;
            if sc <= s + ARMIJO_C * alpha * slope {
                accepted = Some((cand, sc));
                break;
            }
            alpha *= 0.5;
        }
        let Some((cand, sc)) = accepted else {
            return Err(Error::LineSearchStall(iterations));
        };
        lp = cand;
        s = sc;
        trace.push(s);
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig::{Mode2, TrigPoly2};

    fn circle(r: f64, k: i64, order: usize) -> FourierLoop {
        let mut lp = FourierLoop::constant(&[0.3, 0.6], 1.0, order).unwrap();
        let off = ((k + order as i64) as usize) * 2;
        lp.coeffs_mut()[off] = r;
        lp
    }

    fn fourier_formula(a: f64, lp: &FourierLoop) -> f64 {
        let kk = lp.order() as i64;
        (-kk..=kk)
            .map(|k| {
                let n2: f64 = lp.mode(k).iter().map(|c| c * c).sum();
                (2.0 * PI * PI * (k * k) as f64 - a * PI * k as f64) * n2
            })
            .sum()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(CAP_NODES);
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(7)).sum();
        assert!((m - 0.125).abs() < 1e-14);
    }

    #[test]
    fn circle_action_matches_closed_form() {
        let a = 3.0 * PI;
        let field = MagneticField::constant(&[a]);
        let z = Potential::zero(2, 1.0);
        let lp = circle(1.0, 1, 4);
        let r = action(&field, &z, &lp).unwrap();
        assert!((r.total + PI * PI).abs() < 1e-9, "{}", r.total);
        assert!((r.total - fourier_formula(a, &lp)).abs() < 1e-9);
        assert!((r.kinetic - 2.0 * PI * PI).abs() < 1e-12);
        assert!((r.magnetic + a * PI).abs() < 1e-9);
    }

    #[test]
    fn constant_loop_has_zero_action() {
        let field = MagneticField::constant(&[3.0 * PI]);
        let lp = FourierLoop::constant(&[0.1, 0.2], 1.0, 3).unwrap();
        assert_eq!(action(&field, &Potential::zero(2, 1.0), &lp).unwrap().total, 0.0);
    }

    #[test]
    fn non_contractible_action_rejected() {
        let lp = FourierLoop::new(1.0, 1, vec![1, 0], vec![0.0; 6]).unwrap();
        let field = MagneticField::constant(&[1.0]);
        assert!(matches!(action(&field, &Potential::zero(2, 1.0), &lp), Err(Error::NonContractible(_))));
        assert!(matches!(gradient(&field, &Potential::zero(2, 1.0), &lp), Err(Error::NonContractible(_))));
    }

    #[test]
    fn fit_round_trip_and_reversal() {
        let lp = FourierLoop::new(
            2.0,
            3,
            vec![1, -2],
            vec![0.1, 0.2, 0.0, 0.05, 0.3, -0.1, 0.2, 0.4, 0.01, 0.0, -0.2, 0.1, 0.03, 0.02],
        )
        .unwrap();
        let s = lp.sample(64).unwrap();
        let back = FourierLoop::fit(&s, 3).unwrap();
        let x0 = lp.eval(0.0);
        let shift: Vec<f64> = back.base().iter().zip(lp.base()).map(|(a, b)| a - b).collect();
        for v in &shift {
            assert!((v - v.round()).abs() < 1e-12);
        }
        for t in [0.0, 0.37, 1.5] {
            let (a, b) = (lp.eval(t), back.eval(t));
            for c in 0..2 {
                assert!((a[c] - b[c] - shift[c]).abs() < 1e-10);
            }
        }
        let e = lp.eval(2.0);
        assert!((e[0] - x0[0] - 1.0).abs() < 1e-12 && (e[1] - x0[1] + 2.0).abs() < 1e-12);
        let rev = lp.reversed();
        for t in [0.0, 0.4, 1.3] {
            let (a, b) = (rev.eval(t), lp.eval(2.0 - t));
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    fn wavy_field() -> MagneticField {
        MagneticField::new(vec![TrigPoly2::new(
            3.0 * PI,
            vec![Mode2 { m: 1, n: 0, c_cos: 0.4, c_sin: 0.0 }, Mode2 { m: 0, n: 1, c_cos: 0.0, c_sin: 0.3 }],
        )
        .unwrap()])
        .unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let field = wavy_field();
        let v = Potential::cosine_sum(2, 1.0, 0.05);
        let mut lp = FourierLoop::constant(&[0.2, 0.7], 1.0, 3).unwrap();
        let dir = [0.03, -0.02, 0.05, 0.01, 0.0, 0.0, 0.1, -0.04, 0.02, 0.03, -0.01, 0.02, 0.0, 0.01];
        lp.coeffs_mut()[6] += 0.01;
        for (c, d) in lp.coeffs_mut().iter_mut().zip(&dir) {
            *c += d;
        }
        let xi: Vec<f64> = (0..14).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.1).collect();
        let g = gradient(&field, &v, &lp).unwrap();
        let h = 1e-5;
        let fd = (action(&field, &v, &lp.axpy(h, &xi)).unwrap().total
            - action(&field, &v, &lp.axpy(-h, &xi)).unwrap().total)
            / (2.0 * h);
        let an = lp.pairing(&g, &xi);
        assert!((fd - an).abs() < 1e-6 * an.abs().max(1e-3), "{fd} vs {an}");
    }

    #[test]
    fn constant_loop_gradient_is_mean_force() {
        let v = Potential::cosine_sum(2, 1.0, 0.01);
        let lp = FourierLoop::constant(&[0.25, 0.0], 1.0, 2).unwrap();
        let g = gradient(&wavy_field(), &v, &lp).unwrap();
        for (i, c) in g.iter().enumerate() {
            let want = if i == 4 { 0.02 * PI } else { 0.0 };
            assert!((c - want).abs() < 1e-14, "{i}: {c}");
        }
        let crit = FourierLoop::constant(&[0.5, 0.0], 1.0, 2).unwrap();
        assert!(gradient(&wavy_field(), &v, &crit).unwrap().iter().all(|c| c.abs() < 1e-14));
    }

    #[test]
    fn constant_loop_indices() {
        for (a, idx) in [(PI, 0), (3.0 * PI, 2), (5.0 * PI, 4), (7.0 * PI, 6)] {
            let field = MagneticField::constant(&[a]);
            let lp = FourierLoop::constant(&[0.4, 0.1], 1.0, 4).unwrap();
            let hi = hessian_index(&field, &Potential::zero(2, 1.0), &lp, 64).unwrap();
            assert_eq!((hi.morse_index, hi.nullity, hi.converged), (idx, 2, true), "a = {a}");
            assert_eq!(cz_index(&field, &Potential::zero(2, 1.0), &lp, false).unwrap(), idx as i64 + 1);
        }
    }

    #[test]
    fn quadrature_hessian_at_potential_critical_point() {
        // constant loop at the maximum of V: every mode block is (w^2 - a w) - Hess V
        let a = 3.0 * PI;
        let amp = 0.01;
        let field = MagneticField::constant(&[a]);
        let v = Potential::cosine_sum(2, 1.0, amp);
        let lp = FourierLoop::constant(&[0.0, 0.0], 1.0, 4).unwrap();
        let h = hessian_matrix(&field, &v, &lp, 3).unwrap();
        for r in 0..14 {
            for c in 0..14 {
                let want = if r == c {
                    let w = TAU * (r / 2) as f64 - TAU * 3.0;
                    w * w - a * w + amp * TAU * TAU
                } else {
                    0.0
                };
                assert!((h[(r, c)] - want).abs() < 1e-9, "({r},{c})");
            }
        }
        let hi = hessian_index(&field, &v, &lp, 64).unwrap();
        assert_eq!((hi.morse_index, hi.nullity), (2, 0));
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let field = wavy_field();
        let v = Potential::cosine_sum(2, 1.0, 0.05);
        let mut lp = FourierLoop::constant(&[0.2, 0.7], 1.0, 2).unwrap();
        lp.coeffs_mut()[6] = 0.05;
        lp.coeffs_mut()[3] = -0.02;
        let h = hessian_matrix(&field, &v, &lp, 2).unwrap();
        let eps = 1e-6;
        for c in 0..10 {
            let mut e = vec![0.0; 10];
            e[c] = 1.0;
            let gp = gradient_unchecked(&field, &v, &lp.axpy(eps, &e));
            let gm = gradient_unchecked(&field, &v, &lp.axpy(-eps, &e));
            for r in 0..10 {
                let fd = (gp[r] - gm[r]) / (2.0 * eps);
                // symmetrisation is exact up to quadrature error
                assert!((h[(r, c)] - fd).abs() < 1e-5, "({r},{c}) {} vs {fd}", h[(r, c)]);
            }
        }
    }

    #[test]
    fn cap_independence() {
        let field = wavy_field();
        let mut lp = FourierLoop::constant(&[0.2, 0.7], 1.0, 2).unwrap();
        lp.coeffs_mut()[6] = 0.2;
        lp.coeffs_mut()[1] = 0.05;
        let m1 = magnetic_term(&field, &lp, lp.base()).unwrap();
        let m2 = magnetic_term(&field, &lp, &[0.9, -0.3]).unwrap();
        assert!((m1 - m2).abs() < 1e-8, "{m1} {m2}");
    }

    #[test]
    fn descend_to_constant_loop() {
        let a = PI;
        let field = MagneticField::constant(&[a]);
        let z = Potential::zero(2, 1.0);
        let lp = circle(0.05, 1, 3);
        let s0 = fourier_formula(a, &lp);
        let (end, rep) = descend(&field, &z, &lp, 500, 1e-10).unwrap();
        assert!(rep.converged);
        assert!((rep.action_trace[0] - s0).abs() < 1e-12);
        assert!(rep.action_trace.windows(2).all(|w| w[1] <= w[0]));
        let s_end = *rep.action_trace.last().unwrap();
        assert!(s_end >= 0.0 && s_end < 1e-12);
        assert!(end.mode(1).iter().all(|c| c.abs() < 1e-8));
    }

    #[test]
    fn descend_unbounded_along_first_mode() {
        let field = MagneticField::constant(&[3.0 * PI]);
        let (_, rep) = descend(&field, &Potential::zero(2, 1.0), &circle(0.1, 1, 2), 200, 1e-10).unwrap();
        assert!(rep.unbounded && !rep.converged);
        assert!(rep.action_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn descend_from_critical_loop_is_immediate() {
        let field = MagneticField::constant(&[3.0 * PI]);
        let lp = FourierLoop::constant(&[0.4, 0.1], 1.0, 2).unwrap();
        let (_, rep) = descend(&field, &Potential::zero(2, 1.0), &lp, 10, 1e-10).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged);
    }
}
