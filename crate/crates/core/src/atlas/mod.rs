//! Orbit search per homotopy class and the bookkeeping that compares orbit
//! counts with the Floer-homological predictions.

mod predict;
mod search;

pub use predict::{
    audit_counts, morse_audit, novikov_data, predict, rational_rank, theorem_b_check, AuditReport, DegreeAudit,
    Graded, NovikovData, Prediction, TheoremBStatus,
};
pub use search::{
    find_orbits, CriticalManifold, Orbit, OrbitSearch, SearchConfig, DEDUP_DIST, LOOP_ORDER, ORBIT_SAMPLES,
};
