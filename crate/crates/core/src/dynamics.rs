//! The twisted Hamiltonian flow of `H_V = |p|^2 / 2 + V` for the magnetic
//! symplectic form, its variational equation, and the a priori estimates.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{MagneticField, NonResCertificate};
use crate::potential::Potential;
use crate::spectral::periodic_derivative;
use crate::torus::{lift, wrap, PhasePoint, TorusLoop, TorusPoint};

/// `|det(M - Id)|` at or below this value counts as degenerate.
pub const DEG_THRESHOLD: f64 = 1e-6;
/// Default local error tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Endpoint gap above which a trajectory is not considered closed.
pub const PERIODIC_GAP: f64 = 1e-6;

/// `X_{sigma,V}(t, w) = (p, -Y_sigma(x) p - grad V_t(x))`.
pub fn vector_field(field: &MagneticField, v: &Potential, t: f64, w: &PhasePoint) -> (Vec<f64>, Vec<f64>) {
    let d = field.dim();
    let mut dp = vec![0.0; d];
    rhs_momentum(field, v, t, w.x.coords(), &w.p, &mut dp);
    (w.p.clone(), dp)
}

fn rhs_momentum(field: &MagneticField, v: &Potential, t: f64, x: &[f64], p: &[f64], dp: &mut [f64]) {
    field.apply_lorentz(x, p, dp);
    dp.iter_mut().for_each(|c| *c = -*c);
    v.add_grad(t, x, -1.0, dp);
}

/// Jacobian of the vector field at `(t, x, p)`, row-major `2d x 2d`.
fn linearization(field: &MagneticField, v: &Potential, t: f64, x: &[f64], p: &[f64], out: &mut [f64]) {
    let d = field.dim();
    let n = 2 * d;
    out.iter_mut().for_each(|c| *c = 0.0);
    for i in 0..d {
        out[i * n + d + i] = 1.0;
    }
    let hess = v.hessian(t, x);
    for r in 0..d {
        for c in 0..d {
            out[(d + r) * n + c] = -hess[r * d + c];
        }
    }
    for j in 0..field.particles() {
        let a = field.strength(j, x);
        let g = field.strength_grad(j, x);
        let (r0, r1) = (d + 2 * j, d + 2 * j + 1);
        // d/dx of -(Y p): row 2j is +a p_{2j+1}, row 2j+1 is -a p_{2j}
        for c in 0..2 {
            out[r0 * n + 2 * j + c] += g[c] * p[2 * j + 1];
            out[r1 * n + 2 * j + c] -= g[c] * p[2 * j];
        }
        out[r0 * n + d + 2 * j + 1] += a;
        out[r1 * n + d + 2 * j] -= a;
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Dormand-Prince 5(4) with FSAL, integrating `y` in place from `t0` to `t1`.
/// `h` carries the step size between calls. The local error of a step of
/// length `h` is held below `tol * h / unit`, so the error accumulated over
/// one `unit` of time stays near `tol`.
#[allow(clippy::too_many_arguments)]
fn dopri45<F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y: &mut [f64],
    tol: f64,
    unit: f64,
    max_step: f64,
    h: &mut f64,
) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(());
    }
    let dir = span.signum();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut t = t0;
    f(t, y, &mut k[0]);
    if !(*h > 0.0) {
        *h = (0.01 * span.abs()).min(max_step);
    }
    let mut steps = 0usize;
    loop {
        let remaining = (t1 - t) * dir;
        if remaining <= 1e-15 * t1.abs().max(1.0) {
            break;
        }
        let mut hs = h.min(max_step);
        let last = hs >= remaining;
        if last {
            hs = remaining;
        }
        let hd = hs * dir;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (r, kr) in k.iter().enumerate().take(s) {
                    acc += hd * A[s][r] * kr[i];
                }
                tmp[i] = acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            f(t + C[s] * hd, &tmp, &mut tail[0]);
        }
        // stage 7 evaluated at the 5th order solution
        ynew.copy_from_slice(&tmp);
        let mut err = 0.0_f64;
        for i in 0..n {
            let mut e = 0.0;
            for (s, ks) in k.iter().enumerate() {
                e += E[s] * ks[i];
            }
            let sc = tol * (hs / unit) * (1.0 + y[i].abs().max(ynew[i].abs()));
            err = err.max((hd * e).abs() / sc);
        }
        steps += 1;
        if steps > 5_000_000 {
            return Err(Error::StepSizeUnderflow { t });
        }
        if err <= 1.0 || !err.is_finite() && hs < 1e-300 {
            t = if last { t1 } else { t + hd };
            y.copy_from_slice(&ynew);
            k.swap(0, 6);
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !last {
                *h = hs * fac;
            }
            if last {
                break;
            }
        } else {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            *h = hs * fac;
            if *h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t });
            }
        }
    }
    Ok(())
}

/// End point of the lifted flow, optionally with the monodromy `D phi`.
#[derive(Debug, Clone)]
pub struct FlowEnd {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub monodromy: Option<DMatrix<f64>>,
}

struct System<'a> {
    field: &'a MagneticField,
    v: &'a Potential,
    with_monodromy: bool,
    jac: Vec<f64>,
}

impl System<'_> {
    fn state_len(&self) -> usize {
        let n = 2 * self.field.dim();
        if self.with_monodromy {
            n + n * n
        } else {
            n
        }
    }

    fn initial(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        let d = self.field.dim();
        let n = 2 * d;
        let mut y = vec![0.0; self.state_len()];
        y[..d].copy_from_slice(x);
        y[d..n].copy_from_slice(p);
        if self.with_monodromy {
            for i in 0..n {
                y[n + i * n + i] = 1.0;
            }
        }
        y
    }

    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let d = self.field.dim();
        let n = 2 * d;
        let (x, p) = (&y[..d], &y[d..n]);
        dy[..d].copy_from_slice(p);
        rhs_momentum(self.field, self.v, t, x, p, &mut dy[d..n]);
        if self.with_monodromy {
            linearization(self.field, self.v, t, x, p, &mut self.jac);
            let phi = &y[n..];
            let dphi = &mut dy[n..];
            for r in 0..n {
                for c in 0..n {
                    let mut acc = 0.0;
                    for q in 0..n {
                        acc += self.jac[r * n + q] * phi[q * n + c];
                    }
                    dphi[r * n + c] = acc;
                }
            }
        }
    }

    fn split(&self, y: &[f64]) -> FlowEnd {
        let d = self.field.dim();
        let n = 2 * d;
        FlowEnd {
            x: y[..d].to_vec(),
            p: y[d..n].to_vec(),
            monodromy: self.with_monodromy.then(|| DMatrix::from_row_slice(n, n, &y[n..])),
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(Error::Invalid(format!("tolerance {tol:e} outside [1e-13, 1e-6]")));
    }
    Ok(())
}

fn check_dims(field: &MagneticField, v: &Potential, x: &[f64], p: &[f64]) -> Result<()> {
    let d = field.dim();
    if v.dim() != d || x.len() != d || p.len() != d {
        return Err(Error::Invalid("field, potential and state dimensions differ".into()));
    }
    Ok(())
}

/// Flow from lifted `(x0, p0)` at `t0` to `t1`, keeping the lift.
pub fn flow_lifted(
    field: &MagneticField,
    v: &Potential,
    x0: &[f64],
    p0: &[f64],
    t_span: (f64, f64),
    with_monodromy: bool,
    tol: f64,
) -> Result<FlowEnd> {
    check_tol(tol)?;
    check_dims(field, v, x0, p0)?;
    let n = 2 * field.dim();
    let mut sys = System { field, v, with_monodromy, jac: vec![0.0; n * n] };
    let mut y = sys.initial(x0, p0);
    let mut h = 0.0;
    let max_step = v.tau() / 64.0;
    dopri45(|t, y, dy| sys.eval(t, y, dy), t_span.0, t_span.1, &mut y, tol, v.tau(), max_step, &mut h)?;
    Ok(sys.split(&y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub tol: f64,
    pub with_monodromy: bool,
    /// Number of uniform output intervals; `samples + 1` states are returned.
    pub samples: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, with_monodromy: false, samples: 64 }
    }
}

/// A discrete solution with wrapped states, retained lifts and optional
/// monodromy matrices at every output time.
#[derive(Debug, Clone)]
pub struct PhaseTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub lifted: Vec<Vec<f64>>,
    pub monodromy: Option<Vec<DMatrix<f64>>>,
}

impl PhaseTrajectory {
    pub fn final_monodromy(&self) -> Option<&DMatrix<f64>> {
        self.monodromy.as_ref().and_then(|m| m.last())
    }

    /// Integer displacement of the lift over the whole time span.
    pub fn winding(&self) -> Vec<i64> {
        let (a, b) = (&self.lifted[0], &self.lifted[self.lifted.len() - 1]);
        a.iter().zip(b).map(|(a, b)| (b - a).round() as i64).collect()
    }

    /// Phase-space gap between first and last states (after wrapping).
    pub fn endpoint_gap(&self) -> f64 {
        self.states[0].distance(&self.states[self.states.len() - 1])
    }

    /// Drops the closing state and returns the loop of phase points.
    pub fn to_phase_loop(&self) -> Result<PhaseLoop> {
        let tau = self.times[self.times.len() - 1] - self.times[0];
        PhaseLoop::new(tau, self.states[..self.states.len() - 1].to_vec())
    }
}

/// Adaptive Dormand-Prince integration of the twisted Hamiltonian ODE,
/// optionally together with `X' = DX_{sigma,V} X, X(0) = Id`.
pub fn integrate(
    field: &MagneticField,
    v: &Potential,
    w0: &PhasePoint,
    t_span: (f64, f64),
    opts: IntegrateOptions,
) -> Result<PhaseTrajectory> {
    integrate_lifted(field, v, w0.x.coords(), &w0.p, t_span, opts)
}

pub fn integrate_lifted(
    field: &MagneticField,
    v: &Potential,
    x0: &[f64],
    p0: &[f64],
    t_span: (f64, f64),
    opts: IntegrateOptions,
) -> Result<PhaseTrajectory> {
    check_tol(opts.tol)?;
    check_dims(field, v, x0, p0)?;
    if opts.samples == 0 {
        return Err(Error::Invalid("at least one output interval is required".into()));
    }
    let n = 2 * field.dim();
    let mut sys = System { field, v, with_monodromy: opts.with_monodromy, jac: vec![0.0; n * n] };
    let mut y = sys.initial(x0, p0);
    let mut h = 0.0;
    let max_step = v.tau() / 64.0;
    let (t0, t1) = t_span;
    let mut times = Vec::with_capacity(opts.samples + 1);
    let mut states = Vec::with_capacity(opts.samples + 1);
    let mut lifted = Vec::with_capacity(opts.samples + 1);
    let mut mono = Vec::new();
    let mut record = |t: f64, end: FlowEnd| {
        times.push(t);
        states.push(PhasePoint { x: wrap(&end.x), p: end.p });
        lifted.push(end.x);
        if let Some(m) = end.monodromy {
            mono.push(m);
        }
    };
    record(t0, sys.split(&y));
    let mut prev = t0;
    for i in 1..=opts.samples {
        let t = t0 + (t1 - t0) * i as f64 / opts.samples as f64;
        dopri45(|t, y, dy| sys.eval(t, y, dy), prev, t, &mut y, opts.tol, v.tau(), max_step, &mut h)?;
        record(t, sys.split(&y));
        prev = t;
    }
    Ok(PhaseTrajectory { times, states, lifted, monodromy: opts.with_monodromy.then_some(mono) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Nondegeneracy {
    pub det: f64,
    pub nondegenerate: bool,
}

/// `det(D phi^tau - Id)` for a closed trajectory with monodromy.
pub fn nondegeneracy(traj: &PhaseTrajectory) -> Result<Nondegeneracy> {
    let m = traj
        .final_monodromy()
        .ok_or_else(|| Error::Invalid("trajectory carries no monodromy".into()))?;
    let gap = traj.endpoint_gap();
    if gap > PERIODIC_GAP {
        return Err(Error::NotPeriodic { gap });
    }
    let n = m.nrows();
    let det = (m - DMatrix::<f64>::identity(n, n)).determinant();
    Ok(Nondegeneracy { det, nondegenerate: det.abs() > DEG_THRESHOLD })
}

/// A `tau`-periodic loop of phase points sampled at `t_i = i tau / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseLoop {
    tau: f64,
    states: Vec<PhasePoint>,
}

impl PhaseLoop {
    pub const MIN_SAMPLES: usize = 64;

    pub fn new(tau: f64, states: Vec<PhasePoint>) -> Result<Self> {
        if states.len() < Self::MIN_SAMPLES {
            return Err(Error::Invalid(format!(
                "residual needs at least {} samples, got {}",
                Self::MIN_SAMPLES,
                states.len()
            )));
        }
        if !(tau > 0.0) {
            return Err(Error::Invalid(format!("period must be positive, got {tau}")));
        }
        Ok(Self { tau, states })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn states(&self) -> &[PhasePoint] {
        &self.states
    }

    pub fn positions(&self) -> Result<TorusLoop> {
        TorusLoop::new(self.tau, self.states.iter().map(|s| s.x.clone()).collect::<Vec<TorusPoint>>())
    }
}

/// `L^2` norm over `[0, tau]` of `(d_t gamma - p, d_t p + Y p + grad V_t)`,
/// derivatives taken spectrally.
pub fn residual(field: &MagneticField, v: &Potential, lp: &PhaseLoop) -> Result<f64> {
    let d = field.dim();
    let m = lp.states.len();
    let tau = lp.tau;
    let positions = lp.positions()?;
    let lifted = lift(&positions)?;
    let h = positions.winding();
    let mut xdot = vec![vec![0.0; d]; m];
    let mut pdot = vec![vec![0.0; d]; m];
    for c in 0..d {
        let slope = h[c] as f64 / tau;
        let periodic: Vec<f64> =
            (0..m).map(|i| lifted[i][c] - slope * tau * i as f64 / m as f64).collect();
        for (i, v) in periodic_derivative(&periodic, tau).into_iter().enumerate() {
            xdot[i][c] = v + slope;
        }
        let mom: Vec<f64> = lp.states.iter().map(|s| s.p[c]).collect();
        for (i, v) in periodic_derivative(&mom, tau).into_iter().enumerate() {
            pdot[i][c] = v;
        }
    }
    let mut total = 0.0;
    let mut force = vec![0.0; d];
    for i in 0..m {
        let t = tau * i as f64 / m as f64;
        let s = &lp.states[i];
        field.apply_lorentz(&lifted[i], &s.p, &mut force);
        v.add_grad(t, &lifted[i], 1.0, &mut force);
        for c in 0..d {
            total += (xdot[i][c] - s.p[c]).powi(2) + (pdot[i][c] + force[c]).powi(2);
        }
    }
    Ok((total * tau / m as f64).sqrt())
}

/// `(sqrt(tau) + sqrt(2 tau) / eps) (delta + sqrt(tau) |grad V|_inf)`.
pub fn momentum_bound(cert: &NonResCertificate, v: &Potential, delta: f64) -> f64 {
    let tau = cert.tau;
    let g = v.grad_bound().certified;
    (tau.sqrt() + (2.0 * tau).sqrt() / cert.epsilon) * (delta + tau.sqrt() * g)
}

/// `H_V(t, x, p) = |p|^2 / 2 + V(t, x)`.
pub fn energy(v: &Potential, t: f64, x: &[f64], p: &[f64]) -> f64 {
    0.5 * p.iter().map(|c| c * c).sum::<f64>() + v.eval(t, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::certify_nonresonance;
    use std::f64::consts::PI;

    fn three_pi() -> MagneticField {
        MagneticField::constant(&[3.0 * PI])
    }

    #[test]
    fn vector_field_examples() {
        let z = Potential::zero(2, 1.0);
        let a0 = 1.7;
        let (dx, dp) = vector_field(&MagneticField::constant(&[a0]), &z, 0.0, &PhasePoint::new(&[0.1, 0.2], &[1.0, 0.0]));
        assert_eq!(dx, vec![1.0, 0.0]);
        assert_eq!(dp, vec![0.0, -a0]);
        let (dx, dp) = vector_field(&three_pi(), &z, 0.3, &PhasePoint::new(&[0.4, 0.9], &[0.0, 0.0]));
        assert_eq!(dx, vec![0.0, 0.0]);
        assert_eq!(dp, vec![0.0, 0.0]);
        let v = Potential::cosine_sum(2, 1.0, 0.01);
        let (dx, dp) = vector_field(&MagneticField::constant(&[0.0]), &v, 0.0, &PhasePoint::new(&[0.25, 0.0], &[0.0, 0.0]));
        assert_eq!(dx, vec![0.0, 0.0]);
        assert!((dp[0] - 0.02 * PI).abs() < 1e-15 && dp[1].abs() < 1e-15);
    }

    #[test]
    fn linearization_matches_finite_differences() {
        let field = MagneticField::new(vec![crate::trig::TrigPoly2::new(
            2.0,
            vec![crate::trig::Mode2 { m: 1, n: 1, c_cos: 0.4, c_sin: 0.2 }],
        )
        .unwrap()])
        .unwrap();
        let v = Potential::cosine_sum(2, 1.0, 0.05);
        let x = [0.31, 0.72];
        let p = [0.4, -0.3];
        let mut jac = vec![0.0; 16];
        linearization(&field, &v, 0.0, &x, &p, &mut jac);
        let h = 1e-6;
        let eval = |x: &[f64], p: &[f64]| {
            let mut dp = vec![0.0; 2];
            rhs_momentum(&field, &v, 0.0, x, p, &mut dp);
            let mut out = p.to_vec();
            out.extend(dp);
            out
        };
        for c in 0..4 {
            let mut zp = [x[0], x[1], p[0], p[1]];
            let mut zm = zp;
            zp[c] += h;
            zm[c] -= h;
            let fp = eval(&zp[..2], &zp[2..]);
            let fm = eval(&zm[..2], &zm[2..]);
            for r in 0..4 {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                assert!((jac[r * 4 + c] - fd).abs() < 1e-6, "entry ({r},{c})");
            }
        }
    }

    #[test]
    fn constant_field_closed_form() {
        let a = 3.0 * PI;
        let traj = integrate(
            &three_pi(),
            &Potential::zero(2, 1.0),
            &PhasePoint::new(&[0.0, 0.0], &[1.0, 0.0]),
            (0.0, 1.0),
            IntegrateOptions::default(),
        )
        .unwrap();
        let end = traj.states.last().unwrap();
        assert!((end.p[0] + 1.0).abs() < 1e-8 && end.p[1].abs() < 1e-8);
        let x = &traj.lifted[traj.lifted.len() - 1];
        assert!(x[0].abs() < 1e-8);
        assert!((x[1] + 2.0 / a).abs() < 1e-8);
        assert!((end.x.coords()[1] - 0.78779).abs() < 1e-5);
    }

    #[test]
    fn rest_point_stays_put() {
        let traj = integrate(
            &three_pi(),
            &Potential::zero(2, 1.0),
            &PhasePoint::new(&[0.2, 0.6], &[0.0, 0.0]),
            (0.0, 1.0),
            IntegrateOptions { with_monodromy: true, ..Default::default() },
        )
        .unwrap();
        for s in &traj.states {
            assert_eq!(s.x.coords(), &[0.2, 0.6]);
            assert_eq!(s.p, vec![0.0, 0.0]);
        }
        let nd = nondegeneracy(&traj).unwrap();
        assert!(nd.det.abs() < 1e-6 && !nd.nondegenerate);
    }

    #[test]
    fn constant_field_monodromy_blocks() {
        let a = 3.0 * PI;
        let traj = integrate(
            &three_pi(),
            &Potential::zero(2, 1.0),
            &PhasePoint::new(&[0.5, 0.5], &[0.0, 0.0]),
            (0.0, 1.0),
            IntegrateOptions { with_monodromy: true, ..Default::default() },
        )
        .unwrap();
        let m = traj.final_monodromy().unwrap();
        // upper right block = int_0^1 exp(-a s j) ds
        let b = [[a.sin() / a, (1.0 - a.cos()) / a], [(a.cos() - 1.0) / a, a.sin() / a]];
        for r in 0..2 {
            for c in 0..2 {
                let id = if r == c { 1.0 } else { 0.0 };
                assert!((m[(r, c)] - id).abs() < 1e-9);
                assert!(m[(r + 2, c)].abs() < 1e-9);
                assert!((m[(r + 2, c + 2)] + id).abs() < 1e-8);
                assert!((m[(r, c + 2)] - b[r][c]).abs() < 1e-8, "B[{r}][{c}]");
            }
        }
    }

    #[test]
    fn open_trajectory_is_not_periodic() {
        let traj = integrate(
            &three_pi(),
            &Potential::zero(2, 1.0),
            &PhasePoint::new(&[0.0, 0.0], &[0.3, 0.1]),
            (0.0, 1.0),
            IntegrateOptions { with_monodromy: true, ..Default::default() },
        )
        .unwrap();
        assert!(matches!(nondegeneracy(&traj), Err(Error::NotPeriodic { .. })));
    }

    #[test]
    fn tolerance_range_enforced() {
        let r = flow_lifted(&three_pi(), &Potential::zero(2, 1.0), &[0.0; 2], &[0.0; 2], (0.0, 1.0), false, 1e-3);
        assert!(r.is_err());
    }

    #[test]
    fn residual_of_constant_loops() {
        let field = MagneticField::constant(&[1.3]);
        let z = Potential::zero(2, 1.0);
        let rest = PhaseLoop::new(1.0, vec![PhasePoint::new(&[0.2, 0.4], &[0.0, 0.0]); 64]).unwrap();
        assert_eq!(residual(&field, &z, &rest).unwrap(), 0.0);
        let tau = 2.0;
        let p0 = [0.3, -0.4];
        let moving = PhaseLoop::new(tau, vec![PhasePoint::new(&[0.2, 0.4], &p0); 64]).unwrap();
        let want = (tau * (1.0 + 1.3f64.powi(2))).sqrt() * 0.5;
        assert!((residual(&field, &z, &moving).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn residual_of_resonant_circle_orbit_is_small() {
        // a = 2 pi is resonant at tau = 1: every momentum closes up after one period.
        let field = MagneticField::constant(&[2.0 * PI]);
        let z = Potential::zero(2, 1.0);
        let traj = integrate(
            &field,
            &z,
            &PhasePoint::new(&[0.5, 0.5], &[0.2, 0.1]),
            (0.0, 1.0),
            IntegrateOptions { samples: 128, ..Default::default() },
        )
        .unwrap();
        assert!(traj.endpoint_gap() < 1e-8);
        let r = residual(&field, &z, &traj.to_phase_loop().unwrap()).unwrap();
        assert!(r < 10.0 * DEFAULT_TOL, "residual {r:e}");
    }

    #[test]
    fn momentum_bound_examples() {
        let cert = certify_nonresonance(&three_pi(), 1.0).unwrap();
        assert_eq!(momentum_bound(&cert, &Potential::zero(2, 1.0), 0.0), 0.0);
        let c = 1.0 + 2f64.sqrt() / 2.0;
        assert!((momentum_bound(&cert, &Potential::zero(2, 1.0), 0.5) - c * 0.5).abs() < 1e-15);
        let b = momentum_bound(&cert, &Potential::cosine_sum(2, 1.0, 0.01), 0.0);
        let exact = c * 0.02 * PI * 2f64.sqrt();
        assert!((exact - 0.1517).abs() < 1e-4);
        assert!(b >= exact && b - exact < 2e-4, "{b}");
    }
}
