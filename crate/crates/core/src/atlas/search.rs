//! Multi-start shooting for `tau`-periodic orbits in a fixed homotopy class.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    flow_lifted, integrate_lifted, momentum_bound, residual, IntegrateOptions, PhaseTrajectory, DEFAULT_TOL,
    DEG_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::field::{certify_nonresonance, MagneticField};
use crate::loopspace::{action, cz_from_counts, hessian_index, FourierLoop, INDEX_LEVELS};
use crate::potential::Potential;
use crate::seeds::{cube_to_ball, Halton};
use crate::torus::{wrap, PhasePoint};

/// Samples stored per orbit trajectory.
pub const ORBIT_SAMPLES: usize = 128;
/// Fourier order used when an orbit is turned into a loop.
pub const LOOP_ORDER: usize = 31;
/// Orbits closer than this (after the best time shift) are identified.
pub const DEDUP_DIST: f64 = 1e-4;
const TIME_SHIFTS: usize = 64;
const NEWTON_ITERS: usize = 40;
const NEWTON_HALVINGS: usize = 20;
const POLISH_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub seed: u64,
    /// Number of shooting seeds per class.
    pub budget: usize,
    #[serde(deserialize_with = "crate::io::real::deserialize")]
    pub orbit_tol: f64,
    #[serde(deserialize_with = "crate::io::real::deserialize")]
    pub integrator_tol: f64,
    /// Largest Fourier order tried for index computations; `0` skips indices.
    pub k_max: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { seed: 42, budget: 200, orbit_tol: 1e-8, integrator_tol: DEFAULT_TOL, k_max: 64 }
    }
}

/// A periodic orbit found by the search.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub initial: PhasePoint,
    pub winding: Vec<i64>,
    /// Action of the loop; only defined for contractible orbits.
    pub action_total: Option<f64>,
    pub residual: f64,
    pub gap: f64,
    pub det_m: f64,
    pub nondegenerate: bool,
    pub morse_index: Option<usize>,
    pub nullity: Option<usize>,
    /// Floer grading `2N - mu_CZ`, so that the orbit counts per degree sit
    /// over the homology ranks.
    pub cz_index: Option<i64>,
    /// `max_t |p(t)|_inf`.
    pub p_sup: f64,
    /// `p_sup` is within the a priori momentum bound.
    pub momentum_ok: bool,
    pub trajectory: PhaseTrajectory,
}

impl Orbit {
    /// The configuration loop of the orbit traversed backwards; critical
    /// points of the loop-space action are time-reversed orbits.
    pub fn action_loop(&self) -> Result<FourierLoop> {
        let lp = self.trajectory.to_phase_loop()?.positions()?;
        Ok(FourierLoop::fit(&lp, LOOP_ORDER)?.reversed())
    }
}

/// A continuum of degenerate roots filling the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalManifold {
    pub dimension: usize,
    pub degenerate_roots: usize,
    pub cell_coverage: f64,
    pub cells_per_axis: usize,
}

#[derive(Debug, Clone)]
pub struct OrbitSearch {
    pub orbits: Vec<Orbit>,
    pub critical_manifold: Option<CriticalManifold>,
    pub seeds_tried: usize,
    pub seeds_converged: usize,
    pub warnings: Vec<String>,
}

struct Root {
    x: Vec<f64>,
    p: Vec<f64>,
}

fn shooting_residual(
    field: &MagneticField,
    v: &Potential,
    h: &[i64],
    z: &[f64],
    with_jac: bool,
    tol: f64,
) -> Result<(DVector<f64>, Option<DMatrix<f64>>)> {
    let d = field.dim();
    let end = flow_lifted(field, v, &z[..d], &z[d..], (0.0, v.tau()), with_jac, tol)?;
    let mut g = DVector::zeros(2 * d);
    for i in 0..d {
        g[i] = end.x[i] - z[i] - h[i] as f64;
        g[d + i] = end.p[i] - z[d + i];
    }
    let jac = end.monodromy.map(|m| m - DMatrix::identity(2 * d, 2 * d));
    Ok((g, jac))
}

fn newton(
    field: &MagneticField,
    v: &Potential,
    h: &[i64],
    seed: Vec<f64>,
    cfg: &SearchConfig,
    p_cap: f64,
) -> Option<Root> {
    let d = field.dim();
    let tol = cfg.integrator_tol;
    let mut z = seed;
    let (mut g, _) = shooting_residual(field, v, h, &z, false, tol).ok()?;
    let mut gn = g.norm();
    let mut converged_at = None;
    for it in 0..NEWTON_ITERS {
        if gn < cfg.orbit_tol && converged_at.is_none() {
            converged_at = Some(it);
        }
        if let Some(c) = converged_at {
            if it >= c + POLISH_STEPS || gn == 0.0 {
                break;
            }
        }
        let (_, jac) = shooting_residual(field, v, h, &z, true, tol).ok()?;
        let jac = jac?;
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let step = svd.solve(&(-&g), 1e-10 * smax.max(1e-300)).ok()?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_HALVINGS {
            let cand: Vec<f64> = z.iter().zip(step.iter()).map(|(a, s)| a + lambda * s).collect();
            if let Ok((gc, _)) = shooting_residual(field, v, h, &cand, false, tol) {
                if gc.norm() < gn {
                    z = cand;
                    g = gc;
                    gn = g.norm();
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        if z[d..].iter().any(|p| p.abs() > p_cap) {
            return None;
        }
    }
    if gn < cfg.orbit_tol {
        Some(Root { x: z[..d].to_vec(), p: z[d..].to_vec() })
    } else {
        None
    }
}

fn seed_points(dim: usize, cfg: &SearchConfig, radius: f64) -> Vec<Vec<f64>> {
    let halton = Halton::new(2 * dim, cfg.seed);
    (0..cfg.budget)
        .map(|i| {
            let u = halton.point(i);
            let mut z = u[..dim].to_vec();
            z.extend(cube_to_ball(&u[dim..], radius));
            z
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn solve_all(seeds: Vec<Vec<f64>>, f: impl Fn(Vec<f64>) -> Option<Root> + Sync + Send) -> Vec<Option<Root>> {
    use rayon::prelude::*;
    seeds.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn solve_all(seeds: Vec<Vec<f64>>, f: impl Fn(Vec<f64>) -> Option<Root>) -> Vec<Option<Root>> {
    seeds.into_iter().map(f).collect()
}

fn build_orbit(field: &MagneticField, v: &Potential, root: &Root, cfg: &SearchConfig, bound_of: impl Fn(f64) -> Option<f64>) -> Result<Orbit> {
    let x0 = wrap(&root.x);
    let traj = integrate_lifted(
        field,
        v,
        x0.coords(),
        &root.p,
        (0.0, v.tau()),
        IntegrateOptions { tol: cfg.integrator_tol, with_monodromy: true, samples: ORBIT_SAMPLES },
    )?;
    let m = traj.final_monodromy().expect("monodromy requested");
    let det_m = (m - DMatrix::<f64>::identity(m.nrows(), m.ncols())).determinant();
    let res = residual(field, v, &traj.to_phase_loop()?)?;
    let p_sup = traj.states.iter().flat_map(|s| s.p.iter()).fold(0.0_f64, |a, p| a.max(p.abs()));
    let momentum_ok = bound_of(res).is_none_or(|b| p_sup <= b + 1e-9);
    Ok(Orbit {
        initial: PhasePoint { x: x0, p: root.p.clone() },
        winding: traj.winding(),
        action_total: None,
        residual: res,
        gap: traj.endpoint_gap(),
        det_m,
        nondegenerate: det_m.abs() > DEG_THRESHOLD,
        morse_index: None,
        nullity: None,
        cz_index: None,
        p_sup,
        momentum_ok,
        trajectory: traj,
    })
}

/// Phase-space distance of `w` to the orbit `o`, minimised over time shifts.
fn shifted_distance(field: &MagneticField, v: &Potential, o: &Orbit, w: &PhasePoint, tol: f64) -> f64 {
    let n = o.trajectory.states.len() - 1;
    let stride = (n / TIME_SHIFTS).max(1);
    let (mut best, mut best_i) = (f64::INFINITY, 0);
    for i in (0..n).step_by(stride) {
        let d = o.trajectory.states[i].distance(w);
        if d < best {
            best = d;
            best_i = i;
        }
    }
    if best < DEDUP_DIST || best > 0.1 {
        return best;
    }
    // golden-section refinement between neighbouring grid shifts
    let dt = o.trajectory.times[1] - o.trajectory.times[0];
    let t_best = o.trajectory.times[best_i];
    let x0 = &o.trajectory.lifted[0];
    let p0 = &o.trajectory.states[0].p;
    let dist_at = |t: f64| -> f64 {
        match flow_lifted(field, v, x0, p0, (0.0, t), false, tol) {
            Ok(end) => PhasePoint { x: wrap(&end.x), p: end.p }.distance(w),
            Err(_) => f64::INFINITY,
        }
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (t_best - stride as f64 * dt, t_best + stride as f64 * dt);
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let (mut fc, mut fe) = (dist_at(c), dist_at(e));
    for _ in 0..40 {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = dist_at(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = dist_at(e);
        }
    }
    best.min(fc).min(fe)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Fraction of the `c^{2N}` cells of the torus hit by `points`.
fn cell_coverage(points: &[&PhasePoint], dim: usize) -> (f64, usize) {
    let n = points.len();
    let c = 2usize.max(((n as f64).powf(1.0 / dim as f64) / 1.5).floor() as usize);
    let total = c.pow(dim as u32);
    let mut hit = vec![false; total];
    for w in points {
        let mut idx = 0;
        for &x in w.x.coords().iter().rev() {
            idx = idx * c + ((x * c as f64) as usize).min(c - 1);
        }
        hit[idx] = true;
    }
    (hit.iter().filter(|&&h| h).count() as f64 / total as f64, c)
}

/// Shooting search for `tau`-periodic orbits of class `h`.
///
/// Seeds are shifted Halton points over `T^{2N}` times the momentum ball
/// allowed by the a priori bound; roots of the lifted period map are found by
/// damped Newton iteration with pseudo-inverse steps. The result does not
/// depend on the number of worker threads.
pub fn find_orbits(
    field: &MagneticField,
    v: &Potential,
    h: &[i64],
    cfg: &SearchConfig,
) -> Result<OrbitSearch> {
    let d = field.dim();
    if v.dim() != d || h.len() != d {
        return Err(Error::Invalid("field, potential and class dimensions differ".into()));
    }
    if !(cfg.orbit_tol > 0.0) {
        return Err(Error::Invalid("orbit tolerance must be positive".into()));
    }
    let tau = v.tau();
    let mut warnings = Vec::new();
    let cert = match certify_nonresonance(field, tau) {
        Ok(c) => Some(c),
        Err(e) => {
            warnings.push(format!("{e}; searching without the a priori momentum bound"));
            None
        }
    };
    let bound = cert.as_ref().map(|c| momentum_bound(c, v, 0.0)).unwrap_or(1.0);
    let radius = 1.25 * bound + 0.05;
    let p_cap = 10.0 * radius + 10.0;
    let seeds = seed_points(d, cfg, radius);
    let tried = seeds.len();
    let roots = solve_all(seeds, |s| newton(field, v, h, s, cfg, p_cap));
    let roots: Vec<Root> = roots.into_iter().flatten().collect();
    let converged = roots.len();
    let bound_of = |res: f64| cert.as_ref().map(|c| momentum_bound(c, v, res));

    let mut candidates = Vec::new();
    for r in &roots {
        match build_orbit(field, v, r, cfg, bound_of) {
            Ok(o) if o.gap < cfg.orbit_tol.max(1e-9) * 10.0 && o.winding == h => candidates.push(o),
            Ok(_) => {}
            Err(e) => warnings.push(format!("discarded a root: {e}")),
        }
    }

    let degenerate: Vec<&Orbit> = candidates.iter().filter(|o| !o.nondegenerate).collect();
    let mut critical_manifold = None;
    if !candidates.is_empty() && degenerate.len() * 4 > candidates.len() {
        let pts: Vec<&PhasePoint> = degenerate.iter().map(|o| &o.initial).collect();
        let (coverage, cells) = cell_coverage(&pts, d);
        if coverage >= 0.5 {
            critical_manifold = Some(CriticalManifold {
                dimension: d,
                degenerate_roots: degenerate.len(),
                cell_coverage: coverage,
                cells_per_axis: cells,
            });
        }
    }

    let mut kept: Vec<Orbit> = Vec::new();
    let mut representative: Option<Orbit> = None;
    for o in candidates {
        if critical_manifold.is_some() && !o.nondegenerate {
            let replace = representative
                .as_ref()
                .is_none_or(|r| lex_cmp(o.initial.x.coords(), r.initial.x.coords()).is_lt());
            if replace {
                representative = Some(o);
            }
            continue;
        }
        let dup = kept.iter().any(|k| {
            let dist = if v.is_autonomous() {
                shifted_distance(field, v, k, &o.initial, cfg.integrator_tol)
            } else {
                k.initial.distance(&o.initial)
            };
            dist < DEDUP_DIST
        });
        if !dup {
            kept.push(o);
        }
    }
    kept.extend(representative);

    let rev_v = v.time_reversed();
    for o in &mut kept {
        annotate(field, &rev_v, o, cfg);
    }
    kept.sort_by(|a, b| {
        let ka = a.action_total.unwrap_or(f64::INFINITY);
        let kb = b.action_total.unwrap_or(f64::INFINITY);
        ka.total_cmp(&kb)
            .then_with(|| lex_cmp(a.initial.x.coords(), b.initial.x.coords()))
            .then_with(|| lex_cmp(&a.initial.p, &b.initial.p))
    });
    Ok(OrbitSearch { orbits: kept, critical_manifold, seeds_tried: tried, seeds_converged: converged, warnings })
}

/// Fills in action and index data from the time-reversed loop.
fn annotate(field: &MagneticField, rev_v: &Potential, o: &mut Orbit, cfg: &SearchConfig) {
    let Ok(lp) = o.action_loop() else { return };
    if lp.is_contractible() {
        o.action_total = action(field, rev_v, &lp).ok().map(|r| r.total);
    }
    if cfg.k_max >= INDEX_LEVELS[0] {
        if let Ok(hi) = hessian_index(field, rev_v, &lp, cfg.k_max) {
            o.morse_index = Some(hi.morse_index);
            o.nullity = Some(hi.nullity);
            if let Ok(mu) = cz_from_counts(&hi, o.nondegenerate) {
                o.cz_index = Some(field.dim() as i64 - mu);
            }
        }
    }
}
