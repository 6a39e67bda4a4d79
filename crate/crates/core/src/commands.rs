//! The four command-line operations, returning printable reports and exit
//! codes so the binary stays a thin argument parser.

use std::fmt::Write as _;
use std::path::Path;

use crate::atlas::{predict, LOOP_ORDER};
use crate::dynamics::{integrate, nondegeneracy, IntegrateOptions, PhaseLoop};
use crate::error::Error;
use crate::field::certify_nonresonance;
use crate::io::{read_orbit_csv, run_find, write_find_output, ConfigError, Resolved, RunConfig};
use crate::loopspace::{cz_from_counts, hessian_index, FourierLoop, INDEX_LEVELS};

/// The configuration used when no `--config` is given.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/perturbed.json");

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerical(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl CommandError {
    /// 1 for bad input, 2 for a resonant field, 3 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CommandError::Config(_) | CommandError::Write { .. } => 1,
            CommandError::Numerical(Error::Resonant { .. }) => 2,
            CommandError::Numerical(Error::Invalid(_)) => 1,
            CommandError::Numerical(_) => 3,
        }
    }
}

/// Text for standard output together with the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    pub code: u8,
}

/// Reads `path` (or the bundled default), applies a seed override and
/// resolves defaults.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<Resolved, ConfigError> {
    let mut cfg = match path {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::from_json(DEFAULT_CONFIG)?,
    };
    if let Some(s) = seed {
        cfg.search.seed = s;
    }
    cfg.resolve()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

pub fn check(resolved: &Resolved) -> Result<Report, CommandError> {
    let cfg = &resolved.config;
    let cert = certify_nonresonance(&resolved.field, cfg.tau)?;
    let pred = predict(&resolved.field, cfg.tau)?;
    let mut s = String::new();
    let _ = writeln!(s, "N = {}, tau = {:?}", cfg.n, cfg.tau);
    let _ = writeln!(s, "k = {}", join(&cert.k));
    for j in 0..cert.k.len() {
        let _ = writeln!(s, "tau*a_{} in [{:.9}, {:.9}]", j + 1, cert.b_lo[j], cert.b_hi[j]);
    }
    let _ = writeln!(s, "eps = {:?}", cert.epsilon);
    let ranks: Vec<String> = pred.hf_ranks.iter().map(|(j, r)| format!("{j}:{r}")).collect();
    let _ = writeln!(s, "ranks {{{}}}", ranks.join(", "));
    let _ = writeln!(
        s,
        "contractible {}-periodic orbits: expect ≥ {}, generically ≥ {}",
        fmt_tau(cfg.tau),
        pred.min_count,
        pred.generic_count
    );
    for h in cfg.classes.iter().filter(|h| h.iter().any(|&c| c != 0)) {
        let _ = writeln!(s, "class ({}): none, or ≥ 2 once one nondegenerate orbit exists", join(h));
    }
    Ok(Report { text: s, code: 0 })
}

fn fmt_tau(tau: f64) -> String {
    if tau.fract() == 0.0 { format!("{}", tau as i64) } else { format!("{tau}") }
}

/// Runs the search, writes the catalog under `dir` and summarises it.
pub fn find(resolved: &Resolved, dir: &Path) -> Result<Report, CommandError> {
    let out = run_find(resolved)?;
    write_find_output(&out, dir).map_err(|source| CommandError::Write { path: dir.display().to_string(), source })?;
    let cat = &out.catalog;
    let mut s = String::new();
    for c in &cat.classes {
        let mut grades: Vec<Option<i64>> = c.orbits.iter().map(|o| o.cz_index).collect();
        grades.sort();
        let grades: Vec<String> = grades.iter().map(|g| g.map_or("-".into(), |g| g.to_string())).collect();
        let _ = write!(s, "class ({}): {} orbits", join(&c.class), c.orbits.len());
        if !grades.is_empty() {
            let _ = write!(s, ", grades [{}]", grades.join(", "));
        }
        if let Some(a) = &c.audit {
            let _ = write!(s, ", audit {}", if a.pass { "PASS" } else { "FAIL" });
        }
        if let Some(b) = c.theorem_b {
            let _ = write!(s, ", two-orbit check {b:?}");
        }
        s.push('\n');
        for n in &c.notes {
            let _ = writeln!(s, "  note: {n}");
        }
    }
    for w in &cat.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    let _ = writeln!(s, "wrote {}", dir.join("catalog.json").display());
    let code = if cat.certificate.is_none() { 2 } else { 0 };
    Ok(Report { text: s, code })
}

pub enum IndexTarget {
    /// The constant loop at this position.
    Constant(Vec<f64>),
    /// An orbit sample file as written by `find`.
    Orbit(PhaseLoop),
}

impl IndexTarget {
    pub fn orbit_file(path: &Path, tau: f64) -> Result<Self, CommandError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.display().to_string(), source: e })?;
        Ok(IndexTarget::Orbit(read_orbit_csv(&text, tau)?))
    }
}

/// Morse index, nullity and Conley-Zehnder index of a critical loop.
pub fn index(resolved: &Resolved, target: &IndexTarget) -> Result<Report, CommandError> {
    let (field, v) = (&resolved.field, &resolved.potential);
    let tau = resolved.config.tau;
    let rev_v = v.time_reversed();
    let k_max = resolved.config.search.k_max.max(INDEX_LEVELS[0]);
    let (lp, nondegenerate) = match target {
        IndexTarget::Constant(x0) => {
            if x0.len() != field.dim() {
                return Err(Error::Invalid(format!("constant loop needs {} coordinates, got {}", field.dim(), x0.len())).into());
            }
            (FourierLoop::constant(x0, tau, 1)?, None)
        }
        IndexTarget::Orbit(pl) => {
            let traj = integrate(
                field,
                v,
                &pl.states()[0],
                (0.0, tau),
                IntegrateOptions { with_monodromy: true, tol: resolved.config.search.integrator_tol, ..Default::default() },
            )?;
            let nd = nondegeneracy(&traj)?;
            (FourierLoop::fit(&pl.positions()?, LOOP_ORDER)?.reversed(), Some(nd.nondegenerate))
        }
    };
    let hi = hessian_index(field, &rev_v, &lp, k_max)?;
    let nondegenerate = nondegenerate.unwrap_or(hi.nullity == 0);
    let mu = cz_from_counts(&hi, nondegenerate)?;
    let mut s = String::new();
    let _ = writeln!(s, "morse_index = {}", hi.morse_index);
    let _ = writeln!(s, "nullity = {}", hi.nullity);
    let _ = writeln!(s, "mu_cz = {mu}");
    if let IndexTarget::Orbit(_) = target {
        let _ = writeln!(s, "grading = {}", field.dim() as i64 - mu);
        let _ = writeln!(s, "nondegenerate = {nondegenerate}");
    }
    let k_used = hi.levels.last().map_or(0, |l| l.0);
    let _ = writeln!(s, "K = {k_used}");
    if !hi.converged {
        let _ = writeln!(s, "warning: fewer than three truncation levels agreed");
    }
    Ok(Report { text: s, code: 0 })
}

pub fn verify(resolved: &Resolved, quick: bool) -> Report {
    let r = crate::verify::run_suite(resolved, quick);
    Report { text: r.table(), code: r.exit_code() }
}
