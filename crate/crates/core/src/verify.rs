//! Self-check suite run by `magtorus verify`: a fixed set of closed-form and
//! reproducibility checks plus checks of the supplied configuration.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::atlas::{find_orbits, morse_audit, novikov_data, predict, SearchConfig};
use crate::dynamics::{integrate, momentum_bound, nondegeneracy, IntegrateOptions};
use crate::error::{Error, Result};
use crate::field::{certify_nonresonance, transport, MagneticField};
use crate::io::{run_find, Resolved};
use crate::loopspace::{action, cz_index, gradient, hessian_index, FourierLoop};
use crate::potential::Potential;
use crate::torus::{wrap_coord, PhasePoint, TorusLoop};
use crate::trig::{Mode2, TrigPoly2};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skip(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub name: String,
    pub status: Status,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    /// The configured field is resonant; configuration checks were skipped.
    pub resonant: bool,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn exit_code(&self) -> u8 {
        if self.resonant {
            2
        } else if self.all_pass() {
            0
        } else {
            3
        }
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let (st, detail) = match &c.status {
                Status::Pass => ("PASS", c.detail.as_str()),
                Status::Fail => ("FAIL", c.detail.as_str()),
                Status::Skip(why) => ("SKIP", why.as_str()),
            };
            let _ = writeln!(s, "{:<4} {:<44} {st} {:>6.2}s  {detail}", c.id, c.name, c.seconds);
        }
        let pass = self.checks.iter().filter(|c| c.status == Status::Pass).count();
        let fail = self.checks.iter().filter(|c| c.status == Status::Fail).count();
        let skip = self.checks.len() - pass - fail;
        let _ = writeln!(s, "{pass} passed, {fail} failed, {skip} skipped");
        s
    }
}

type Outcome = Result<(bool, String)>;

fn run(checks: &mut Vec<Check>, id: &str, name: &str, f: impl FnOnce() -> Outcome) {
    let t0 = Instant::now();
    let (status, detail) = match f() {
        Ok((true, d)) => (Status::Pass, d),
        Ok((false, d)) => (Status::Fail, d),
        Err(e) => (Status::Fail, format!("error: {e}")),
    };
    checks.push(Check { id: id.into(), name: name.into(), status, detail, seconds: t0.elapsed().as_secs_f64() });
}

fn skip(checks: &mut Vec<Check>, id: &str, name: &str, why: &str) {
    checks.push(Check {
        id: id.into(),
        name: name.into(),
        status: Status::Skip(why.into()),
        detail: String::new(),
        seconds: 0.0,
    });
}

fn wavy_field() -> MagneticField {
    MagneticField::new(vec![TrigPoly2 {
        constant: 3.0 * PI,
        modes: vec![Mode2 { m: 1, n: 0, c_cos: 0.0, c_sin: 0.5 }],
    }])
    .expect("valid field")
}

fn perturbed() -> (MagneticField, Potential) {
    (MagneticField::constant(&[3.0 * PI]), Potential::cosine_sum(2, 1.0, 0.01))
}

/// A random loop `t -> x0 + t h + sum_k (u_k cos + v_k sin)(2 pi k t)`.
pub fn random_loop(rng: &mut ChaCha8Rng, m: usize, max_winding: i64) -> Result<TorusLoop> {
    let x0 = [rng.random::<f64>(), rng.random::<f64>()];
    let h = [rng.random_range(-max_winding..=max_winding), rng.random_range(-max_winding..=max_winding)];
    let modes: Vec<[f64; 4]> = (0..3).map(|_| std::array::from_fn(|_| 0.05 * (2.0 * rng.random::<f64>() - 1.0))).collect();
    TorusLoop::from_fn(1.0, m, |t| {
        let mut x = vec![x0[0] + t * h[0] as f64, x0[1] + t * h[1] as f64];
        for (k, md) in modes.iter().enumerate() {
            let (s, c) = (TAU * (k + 1) as f64 * t).sin_cos();
            x[0] += md[0] * c + md[1] * s;
            x[1] += md[2] * c + md[3] * s;
        }
        x
    })
}

/// A random contractible Fourier loop of order `k` with coefficients of size `scale`.
pub fn random_fourier_loop(rng: &mut ChaCha8Rng, k: usize, scale: f64) -> FourierLoop {
    let mut c: Vec<f64> = (0..(2 * k + 1) * 2).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect();
    c[2 * k] = rng.random();
    c[2 * k + 1] = rng.random();
    FourierLoop::new(1.0, k, vec![0, 0], c).expect("valid loop")
}

fn fourier_action(a: f64, lp: &FourierLoop) -> f64 {
    let kk = lp.order() as i64;
    (-kk..=kk)
        .map(|k| {
            let n2: f64 = lp.mode(k).iter().map(|c| c * c).sum();
            (2.0 * PI * PI * (k * k) as f64 - a * PI * k as f64) * n2
        })
        .sum()
}

fn single_mode(k: i64, r: f64, order: usize) -> FourierLoop {
    let mut lp = FourierLoop::constant(&[0.3, 0.6], 1.0, order).expect("valid loop");
    let off = ((k + order as i64) as usize) * 2;
    lp.coeffs_mut()[off] = r;
    lp
}

fn fixed_checks(checks: &mut Vec<Check>, quick: bool) {
    run(checks, "A1", "non-resonance certificate", || {
        let c = certify_nonresonance(&MagneticField::constant(&[3.0 * PI]), 1.0)?;
        let w = certify_nonresonance(&wavy_field(), 1.0)?;
        let oracle = 2.0 * (0.25f64).cos();
        let rel = (w.epsilon - oracle).abs() / oracle;
        Ok((
            c.k == vec![1] && c.epsilon == 2.0 && w.k == vec![1] && rel < 0.01,
            format!("eps = {}, wavy eps = {:.6} (rel. {rel:.2e})", c.epsilon, w.epsilon),
        ))
    });
    run(checks, "A2", "transport bounded away from identity", || {
        let field = wavy_field();
        let eps = certify_nonresonance(&field, 1.0)?.epsilon;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut worst = f64::INFINITY;
        for _ in 0..1000 {
            let lp = random_loop(&mut rng, 64, 2)?;
            let f = transport(&field, &lp, 1.0)?;
            let v = nalgebra::DVector::from_vec(vec![2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0]);
            let lhs = ((&f - nalgebra::DMatrix::identity(2, 2)) * &v).norm();
            worst = worst.min(lhs / (eps * v.norm()));
        }
        Ok((worst >= 1.0 - 1e-6, format!("min |(F - Id) v| / (eps |v|) = {worst:.6}")))
    });
    run(checks, "A3", "closed-form flow for a constant field", || {
        let a = 3.0 * PI;
        let p0 = [1.0, 0.0];
        let traj = integrate(
            &MagneticField::constant(&[a]),
            &Potential::zero(2, 1.0),
            &PhasePoint::new(&[0.0, 0.0], &p0),
            (0.0, 1.0),
            IntegrateOptions::default(),
        )?;
        let mut err = 0.0_f64;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let (sn, cs) = (a * t).sin_cos();
            err = err.max((s.p[0] - (cs * p0[0] + sn * p0[1])).abs());
            err = err.max((s.p[1] - (-sn * p0[0] + cs * p0[1])).abs());
        }
        let x2 = traj.states.last().expect("states").x.coords()[1];
        let want = wrap_coord(-2.0 / a);
        let dx = (x2 - want).abs();
        Ok((err < 1e-8 && dx < 1e-8, format!("max |p - exp(-a t j) p0| = {err:.2e}, |x2(1) - want| = {dx:.2e}")))
    });
    let free = MagneticField::constant(&[3.0 * PI]);
    run(checks, "A4a", "free particle orbits are degenerate", || {
        let mut worst = 0.0_f64;
        for x in [[0.0, 0.0], [0.3, 0.7], [0.5, 0.25]] {
            let traj = integrate(
                &free,
                &Potential::zero(2, 1.0),
                &PhasePoint::new(&x, &[0.0, 0.0]),
                (0.0, 1.0),
                IntegrateOptions { with_monodromy: true, ..Default::default() },
            )?;
            worst = worst.max(nondegeneracy(&traj)?.det.abs());
        }
        Ok((worst < 1e-6, format!("max |det(M - Id)| = {worst:.2e}")))
    });
    if quick {
        skip(checks, "A4b", "no orbits in class (1,0) for V = 0", "quick mode");
        skip(checks, "A5", "momentum bound on found orbits", "quick mode");
    } else {
        run(checks, "A4b", "no orbits in class (1,0) for V = 0", || {
            let s = find_orbits(&free, &Potential::zero(2, 1.0), &[1, 0], &SearchConfig { k_max: 0, ..Default::default() })?;
            Ok((s.orbits.is_empty(), format!("{} orbits", s.orbits.len())))
        });
        run(checks, "A5", "momentum bound on found orbits", || {
            let (field, v) = perturbed();
            let s = find_orbits(&field, &v, &[0, 0], &SearchConfig { k_max: 0, ..Default::default() })?;
            let cert = certify_nonresonance(&field, 1.0)?;
            let worst = s.orbits.iter().map(|o| o.p_sup).fold(0.0, f64::max);
            let ok = s.orbits.iter().all(|o| o.p_sup <= momentum_bound(&cert, &v, o.residual) + 1e-9);
            Ok((ok && worst <= 0.1517 + 1e-9 && !s.orbits.is_empty(), format!("max |p| = {worst:.3e} over {} orbits", s.orbits.len())))
        });
    }
    run(checks, "A6", "Fourier action and constant-loop indices", || {
        let mut err = 0.0_f64;
        for a in [PI, 3.0 * PI, 5.5] {
            for k in [-2, -1, 1, 2, 3] {
                for r in [0.1, 0.5, 1.0] {
                    let lp = single_mode(k, r, 3);
                    let s = action(&MagneticField::constant(&[a]), &Potential::zero(2, 1.0), &lp)?.total;
                    err = err.max((s - fourier_action(a, &lp)).abs());
                }
            }
        }
        let mut idx = Vec::new();
        for m in [1.0, 3.0, 5.0] {
            let f = MagneticField::constant(&[m * PI]);
            let lp = FourierLoop::constant(&[0.2, 0.2], 1.0, 4)?;
            let hi = hessian_index(&f, &Potential::zero(2, 1.0), &lp, 64)?;
            idx.push((hi.morse_index, cz_index(&f, &Potential::zero(2, 1.0), &lp, false)?));
        }
        Ok((err < 1e-9 && idx == vec![(0, 1), (2, 3), (4, 5)], format!("max action gap {err:.2e}, (index, mu) = {idx:?}")))
    });
    run(checks, "A7", "action unbounded below along circles", || {
        let f = MagneticField::constant(&[3.0 * PI]);
        let mut worst = 0.0_f64;
        for r in [0.1, 0.5, 1.0] {
            let s = action(&f, &Potential::zero(2, 1.0), &single_mode(1, r, 2))?.total;
            worst = worst.max((s + PI * PI * r * r).abs() / (r * r));
        }
        Ok((worst < 1e-7, format!("max |S + pi^2 R^2| / R^2 = {worst:.2e}")))
    });
    run(checks, "A8", "gradient against central differences", || {
        let field = wavy_field();
        let v = Potential::cosine_sum(2, 1.0, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut worst = 0.0_f64;
        for _ in 0..50 {
            let lp = random_fourier_loop(&mut rng, 3, 0.05);
            let xi: Vec<f64> = (0..lp.coeffs().len()).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let g = gradient(&field, &v, &lp)?;
            let h = 1e-5;
            let fd = (action(&field, &v, &lp.axpy(h, &xi))?.total - action(&field, &v, &lp.axpy(-h, &xi))?.total)
                / (2.0 * h);
            let an = lp.pairing(&g, &xi);
            worst = worst.max((fd - an).abs() / an.abs().max(1e-12));
        }
        Ok((worst < 1e-6, format!("max rel. error {worst:.2e}")))
    });
    if quick {
        skip(checks, "A9", "four graded orbits of the perturbed example", "quick mode");
    } else {
        run(checks, "A9", "four graded orbits of the perturbed example", || {
            let t0 = Instant::now();
            let (field, v) = perturbed();
            let s = find_orbits(&field, &v, &[0, 0], &SearchConfig::default())?;
            let mut grades: Vec<Option<i64>> = s.orbits.iter().map(|o| o.cz_index).collect();
            grades.sort();
            let audit = morse_audit(&s.orbits, &predict(&field, 1.0)?)?;
            let secs = t0.elapsed().as_secs_f64();
            let ok = s.orbits.len() == 4
                && s.orbits.iter().all(|o| o.nondegenerate)
                && grades == vec![Some(-2), Some(-1), Some(-1), Some(0)]
                && audit.pass
                && secs < 60.0;
            let shown: Vec<i64> = grades.iter().flatten().copied().collect();
            Ok((ok, format!("{} orbits, grades {shown:?}, audit {}", s.orbits.len(), if audit.pass { "pass" } else { "fail" })))
        });
    }
    run(checks, "A10", "rank arithmetic for two particles", || {
        let p = predict(&MagneticField::constant(&[3.0 * PI, 3.0 * PI]), 1.0)?;
        Ok((p.total_rank() == 16 && p.min_count == 5, format!("ranks {:?}", p.hf_ranks)))
    });
    run(checks, "A11", "flux homomorphism", || {
        let f = MagneticField::constant(&[3.0 * PI]);
        let z = novikov_data(&f, &[0, 0])?;
        let h = novikov_data(&f, &[1, 0])?;
        // f(s, t) = (t, s): the swept torus covers T^2 once with orientation det(e2, e1) = -1
        let n = 200;
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64];
                quad -= f.strength(0, &x);
            }
        }
        quad /= (n * n) as f64;
        let ok = z.phi.iter().all(|&v| v == 0.0)
            && z.gamma_rank == 0
            && h.gamma_rank == 1
            && (h.phi[1].abs() - 3.0 * PI).abs() < 1e-8
            && (h.phi[1] - quad).abs() < 1e-8;
        Ok((ok, format!("phi(1,0) = {:?}, rank {}", h.phi, h.gamma_rank)))
    });
    if quick {
        skip(checks, "A12", "byte-identical catalogs", "quick mode");
    } else {
        run(checks, "A12", "byte-identical catalogs", || {
            let (field, v) = perturbed();
            let cfg = crate::io::RunConfig {
                n: 1,
                tau: 1.0,
                field: field.factors().to_vec(),
                potential: v.terms().to_vec(),
                classes: vec![vec![0, 0]],
                search: SearchConfig { seed: 42, k_max: 0, ..Default::default() },
                output_dir: crate::io::DEFAULT_OUTPUT_DIR.into(),
            }
            .resolve()
            .map_err(|e| Error::Invalid(e.to_string()))?;
            let a = run_find(&cfg)?.catalog.to_json();
            let b = run_find(&cfg)?.catalog.to_json();
            Ok((a == b, format!("{} bytes", a.len())))
        });
    }
}

fn config_checks(checks: &mut Vec<Check>, resolved: &Resolved, quick: bool) -> bool {
    let cfg = &resolved.config;
    let field = &resolved.field;
    let cert = certify_nonresonance(field, cfg.tau);
    if let Err(e) = &cert {
        let why = format!("{e}");
        checks.push(Check {
            id: "C1".into(),
            name: "configured field is non-resonant".into(),
            status: Status::Fail,
            detail: why,
            seconds: 0.0,
        });
        for (id, name) in [("C2", "predicted ranks sum to 2^(2N)"), ("C3", "configured search and audit")] {
            skip(checks, id, name, "needs a non-resonant field");
        }
        return true;
    }
    let cert = cert.expect("checked");
    checks.push(Check {
        id: "C1".into(),
        name: "configured field is non-resonant".into(),
        status: Status::Pass,
        detail: format!("k = {:?}, eps = {:.6}", cert.k, cert.epsilon),
        seconds: 0.0,
    });
    run(checks, "C2", "predicted ranks sum to 2^(2N)", || {
        let p = predict(field, cfg.tau)?;
        Ok((p.total_rank() == 1 << field.dim(), format!("ranks {:?}", p.hf_ranks)))
    });
    if quick {
        skip(checks, "C3", "configured search and audit", "quick mode");
    } else {
        run(checks, "C3", "configured search and audit", || {
            let out = run_find(resolved)?;
            let mut ok = true;
            let mut parts = Vec::new();
            for c in &out.catalog.classes {
                ok &= c.orbits.iter().all(|o| o.momentum_ok && o.residual < cfg.search.orbit_tol);
                if let Some(a) = &c.audit {
                    ok &= a.pass;
                }
                parts.push(format!("{:?}: {} orbits", c.class, c.orbits.len()));
            }
            Ok((ok, parts.join(", ")))
        });
    }
    false
}

/// Runs the fixed checks and the checks of `resolved`.
pub fn run_suite(resolved: &Resolved, quick: bool) -> SuiteReport {
    let mut checks = Vec::new();
    fixed_checks(&mut checks, quick);
    let resonant = config_checks(&mut checks, resolved, quick);
    SuiteReport { checks, resonant }
}
