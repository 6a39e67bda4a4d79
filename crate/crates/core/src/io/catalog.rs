use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Resolved, RunConfig};
use super::json::to_canonical_json;
use crate::atlas::{
    find_orbits, morse_audit, novikov_data, predict, theorem_b_check, AuditReport, CriticalManifold, Graded,
    NovikovData, Orbit, Prediction, TheoremBStatus,
};
use crate::dynamics::PhaseLoop;
use crate::error::{Error, Result};
use crate::field::{certify_nonresonance, NonResCertificate};
use crate::torus::PhasePoint;

pub const TOOL_NAME: &str = "magtorus";

/// One orbit as stored in a catalog; samples live in a separate CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogOrbit {
    pub id: String,
    pub initial_x: Vec<f64>,
    pub initial_p: Vec<f64>,
    pub winding: Vec<i64>,
    pub action_total: Option<f64>,
    pub residual: f64,
    pub gap: f64,
    pub det_m: f64,
    pub nondegenerate: bool,
    pub morse_index: Option<usize>,
    pub nullity: Option<usize>,
    pub cz_index: Option<i64>,
    pub p_sup: f64,
    pub momentum_ok: bool,
    pub samples: String,
}

impl Graded for CatalogOrbit {
    fn grading(&self) -> Option<i64> {
        self.cz_index
    }

    fn is_nondegenerate(&self) -> bool {
        self.nondegenerate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassReport {
    pub class: Vec<i64>,
    pub orbits: Vec<CatalogOrbit>,
    pub critical_manifold: Option<CriticalManifold>,
    pub seeds_tried: usize,
    pub seeds_converged: usize,
    pub novikov: NovikovData,
    pub audit: Option<AuditReport>,
    pub theorem_b: Option<TheoremBStatus>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub certificate: Option<NonResCertificate>,
    pub prediction: Option<Prediction>,
    pub classes: Vec<ClassReport>,
    pub warnings: Vec<String>,
}

impl Catalog {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(self).expect("catalog serialises")
    }

    /// Recomputes every class audit from the stored orbits.
    pub fn reaudit(&self) -> Vec<Option<AuditReport>> {
        self.classes
            .iter()
            .map(|c| {
                let pred = self.prediction.as_ref()?;
                if c.class.iter().any(|&h| h != 0) {
                    return None;
                }
                morse_audit(&c.orbits, pred).ok()
            })
            .collect()
    }
}

/// Everything `find` produces: the catalog and the per-orbit CSV files.
#[derive(Debug, Clone)]
pub struct FindOutput {
    pub resolved_config: RunConfig,
    pub catalog: Catalog,
    /// `(relative path, contents)`.
    pub files: Vec<(String, String)>,
}

fn orbit_id(class: &[i64], i: usize) -> String {
    let parts: Vec<String> =
        class.iter().map(|&h| if h < 0 { format!("m{}", -h) } else { h.to_string() }).collect();
    format!("h{}-{i:03}", parts.join("_"))
}

fn orbit_csv(o: &Orbit) -> String {
    let d = o.initial.dim();
    let mut s = String::from("t");
    for i in 1..=d {
        let _ = write!(s, ",x{i}");
    }
    for i in 1..=d {
        let _ = write!(s, ",p{i}");
    }
    s.push('\n');
    let traj = &o.trajectory;
    for i in 0..traj.states.len() - 1 {
        let _ = write!(s, "{:.16e}", traj.times[i]);
        for x in &traj.lifted[i] {
            let _ = write!(s, ",{x:.16e}");
        }
        for p in &traj.states[i].p {
            let _ = write!(s, ",{p:.16e}");
        }
        s.push('\n');
    }
    s
}

/// Reads an orbit sample file back into a loop of phase points.
pub fn read_orbit_csv(text: &str, tau: f64) -> Result<PhaseLoop> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Invalid("empty orbit file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") || cols.len() < 3 || (cols.len() - 1) % 2 != 0 {
        return Err(Error::Invalid(format!("unexpected orbit file header {header:?}")));
    }
    let d = (cols.len() - 1) / 2;
    let mut states = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Invalid(format!("orbit file line {}: {e}", n + 2)))?;
        if vals.len() != 2 * d + 1 {
            return Err(Error::Invalid(format!("orbit file line {} has {} columns", n + 2, vals.len())));
        }
        states.push(PhasePoint::new(&vals[1..=d], &vals[d + 1..]));
    }
    PhaseLoop::new(tau, states)
}

fn class_notes(class: &[i64], orbits: &[CatalogOrbit], zero_potential: bool, cm: Option<&CriticalManifold>) -> Vec<String> {
    let mut notes = Vec::new();
    let contractible = class.iter().all(|&h| h == 0);
    if let Some(cm) = cm {
        notes.push(format!(
            "degenerate roots fill the torus ({} roots, {:.0}% of {}^{} cells): Morse-Bott family, one representative listed",
            cm.degenerate_roots,
            100.0 * cm.cell_coverage,
            cm.cells_per_axis,
            cm.dimension
        ));
    }
    if orbits.is_empty() && !contractible && zero_potential {
        notes.push("no orbits: consistent with the absence of non-contractible solutions when V = 0".into());
    } else if orbits.is_empty() {
        notes.push("no orbits found".into());
    }
    notes
}

/// Runs the search for every class of a resolved configuration and
/// assembles the catalog.
pub fn run_find(resolved: &Resolved) -> Result<FindOutput> {
    let cfg = &resolved.config;
    let (field, v) = (&resolved.field, &resolved.potential);
    let mut warnings = Vec::new();
    let certificate = match certify_nonresonance(field, cfg.tau) {
        Ok(c) => Some(c),
        Err(e @ Error::Resonant { .. }) => {
            warnings.push(e.to_string());
            None
        }
        Err(e) => return Err(e),
    };
    let prediction = certificate.as_ref().map(|_| predict(field, cfg.tau)).transpose()?;
    let mut classes = Vec::new();
    let mut files = Vec::new();
    for h in &cfg.classes {
        let search = find_orbits(field, v, h, &cfg.search)?;
        for w in &search.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
        let mut orbits = Vec::new();
        for (i, o) in search.orbits.iter().enumerate() {
            let id = orbit_id(h, i);
            let samples = format!("orbits/{id}.csv");
            files.push((samples.clone(), orbit_csv(o)));
            orbits.push(CatalogOrbit {
                id,
                initial_x: o.initial.x.coords().to_vec(),
                initial_p: o.initial.p.clone(),
                winding: o.winding.clone(),
                action_total: o.action_total,
                residual: o.residual,
                gap: o.gap,
                det_m: o.det_m,
                nondegenerate: o.nondegenerate,
                morse_index: o.morse_index,
                nullity: o.nullity,
                cz_index: o.cz_index,
                p_sup: o.p_sup,
                momentum_ok: o.momentum_ok,
                samples,
            });
        }
        let contractible = h.iter().all(|&c| c == 0);
        let audit = match (&prediction, contractible) {
            (Some(p), true) => morse_audit(&orbits, p).ok(),
            _ => None,
        };
        let theorem_b = if contractible { None } else { Some(theorem_b_check(h, &orbits)?) };
        let mut notes = class_notes(h, &orbits, v.is_zero(), search.critical_manifold.as_ref());
        if contractible && audit.is_none() && !orbits.is_empty() {
            notes.push("audit skipped: degenerate or ungraded orbits present".into());
        }
        if theorem_b == Some(TheoremBStatus::Violation) {
            notes.push("a single nondegenerate orbit: a second one exists, so the search is incomplete".into());
        }
        classes.push(ClassReport {
            class: h.clone(),
            orbits,
            critical_manifold: search.critical_manifold,
            seeds_tried: search.seeds_tried,
            seeds_converged: search.seeds_converged,
            novikov: novikov_data(field, h)?,
            audit,
            theorem_b,
            notes,
        });
    }
    let catalog = Catalog {
        tool: TOOL_NAME.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.search.seed,
        config: cfg.clone(),
        certificate,
        prediction,
        classes,
        warnings,
    };
    Ok(FindOutput { resolved_config: cfg.clone(), catalog, files })
}

/// Writes `resolved_config.json`, `catalog.json` and `orbits/*.csv` under `dir`.
pub fn write_find_output(out: &FindOutput, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir.join("orbits"))?;
    std::fs::write(
        dir.join("resolved_config.json"),
        to_canonical_json(&out.resolved_config).expect("config serialises"),
    )?;
    std::fs::write(dir.join("catalog.json"), out.catalog.to_json())?;
    for (rel, text) in &out.files {
        std::fs::write(dir.join(rel), text)?;
    }
    Ok(())
}
