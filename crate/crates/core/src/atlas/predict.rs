//! Homology ranks, multiplicity bounds, Novikov flux data and the audits
//! that compare them against a catalog of orbits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{certify_nonresonance, MagneticField, NonResCertificate};

fn binomial(n: u64, k: i64) -> u64 {
    if k < 0 || k as u64 > n {
        return 0;
    }
    let k = (k as u64).min(n - k as u64);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Flux homomorphism values on the translation generators and the rank of
/// the period group they generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NovikovData {
    pub class: Vec<i64>,
    pub phi: Vec<f64>,
    pub gamma_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub cert: NonResCertificate,
    pub k_total: i64,
    /// Degree to rank of `HF^0`; degrees missing from the map have rank 0.
    pub hf_ranks: BTreeMap<i64, u64>,
    pub min_count: u64,
    pub generic_count: u64,
    #[serde(default)]
    pub novikov: Vec<NovikovData>,
}

impl Prediction {
    /// Rank of `HF^h` in degree `j`; zero for every non-contractible class.
    pub fn hf_rank(&self, h: &[i64], j: i64) -> u64 {
        if h.iter().any(|&c| c != 0) {
            return 0;
        }
        self.hf_ranks.get(&j).copied().unwrap_or(0)
    }

    pub fn total_rank(&self) -> u64 {
        self.hf_ranks.values().sum()
    }
}

/// Ranks `binom(2N, j + 2k)` shifted by `k = sum k_j`, together with the
/// orbit-count lower bounds.
pub fn predict(field: &MagneticField, tau: f64) -> Result<Prediction> {
    let cert = certify_nonresonance(field, tau)?;
    let n2 = field.dim() as u64;
    let k_total = cert.k_total();
    let hf_ranks = (-2 * k_total..=n2 as i64 - 2 * k_total).map(|j| (j, binomial(n2, j + 2 * k_total))).collect();
    Ok(Prediction { cert, k_total, hf_ranks, min_count: n2 + 1, generic_count: 1 << n2, novikov: Vec::new() })
}

/// `Phi(e_i) = sum_j flux_j det(e_i|_j, h|_j)` for the translation tori
/// `f_i(s, t) = gamma_h(t) + s e_i`, and the rank of their image over `Q`.
pub fn novikov_data(field: &MagneticField, h: &[i64]) -> Result<NovikovData> {
    let d = field.dim();
    if h.len() != d {
        return Err(Error::Invalid(format!("class has {} entries, expected {d}", h.len())));
    }
    let flux = field.fluxes();
    let phi: Vec<f64> = (0..d)
        .map(|i| {
            let j = i / 2;
            let (h1, h2) = (h[2 * j] as f64, h[2 * j + 1] as f64);
            // det(e_i, h) on factor j
            let det = if i % 2 == 0 { h2 } else { -h1 };
            flux[j] * det
        })
        .collect();
    Ok(NovikovData { class: h.to_vec(), phi: phi.clone(), gamma_rank: rational_rank(&phi) })
}

const REL_TOL: f64 = 1e-9;
const MAX_DEN: i64 = 12;
const MAX_NUM: i64 = 6;

/// Dimension over `Q` of the span of `values`, detecting integer relations
/// with small coefficients.
pub fn rational_rank(values: &[f64]) -> usize {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let mut basis: Vec<f64> = Vec::new();
    for &v in values {
        if v.abs() <= REL_TOL * scale {
            continue;
        }
        if !in_rational_span(v, &basis, scale) {
            basis.push(v);
        }
    }
    basis.len()
}

fn in_rational_span(v: f64, basis: &[f64], scale: f64) -> bool {
    if basis.is_empty() {
        return false;
    }
    let r = basis.len();
    if r > 4 {
        // beyond the search range every new value is taken as independent
        return false;
    }
    let width = (2 * MAX_NUM + 1) as usize;
    let combos = width.pow(r as u32);
    for den in 1..=MAX_DEN {
        for idx in 0..combos {
            let mut rest = idx;
            let mut acc = den as f64 * v;
            for b in basis {
                let c = (rest % width) as i64 - MAX_NUM;
                rest /= width;
                acc -= c as f64 * b;
            }
            if acc.abs() <= REL_TOL * scale * den as f64 {
                return true;
            }
        }
    }
    false
}

/// Anything carrying the data the Morse-inequality audit needs.
pub trait Graded {
    fn grading(&self) -> Option<i64>;
    fn is_nondegenerate(&self) -> bool;
}

impl Graded for super::search::Orbit {
    fn grading(&self) -> Option<i64> {
        self.cz_index
    }

    fn is_nondegenerate(&self) -> bool {
        self.nondegenerate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeAudit {
    pub count: u64,
    pub rank: u64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub degrees: BTreeMap<i64, DegreeAudit>,
    pub total_count: u64,
    pub total_rank: u64,
    pub pass: bool,
}

impl AuditReport {
    pub fn failing_degrees(&self) -> Vec<i64> {
        self.degrees.iter().filter(|(_, a)| !a.pass).map(|(&j, _)| j).collect()
    }
}

/// Weak Morse inequalities `c_j >= rank HF_j` per degree and in total.
pub fn morse_audit<G: Graded>(orbits: &[G], prediction: &Prediction) -> Result<AuditReport> {
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for o in orbits {
        match (o.is_nondegenerate(), o.grading()) {
            (true, Some(j)) => *counts.entry(j).or_default() += 1,
            _ => return Err(Error::DegenerateOrbitPresent),
        }
    }
    Ok(audit_counts(&counts, &prediction.hf_ranks))
}

pub fn audit_counts(counts: &BTreeMap<i64, u64>, ranks: &BTreeMap<i64, u64>) -> AuditReport {
    let mut degrees = BTreeMap::new();
    for &j in counts.keys().chain(ranks.keys()) {
        let count = counts.get(&j).copied().unwrap_or(0);
        let rank = ranks.get(&j).copied().unwrap_or(0);
        degrees.insert(j, DegreeAudit { count, rank, pass: count >= rank });
    }
    let total_count = counts.values().sum();
    let total_rank = ranks.values().sum();
    let pass = degrees.values().all(|a| a.pass) && total_count >= total_rank;
    AuditReport { degrees, total_count, total_rank, pass }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremBStatus {
    Consistent,
    /// A lone nondegenerate orbit: a second one must exist, so the search
    /// missed it.
    Violation,
}

/// Two-orbit check for a non-contractible class.
pub fn theorem_b_check<G: Graded>(class: &[i64], orbits: &[G]) -> Result<TheoremBStatus> {
    if class.iter().all(|&c| c == 0) {
        return Err(Error::Invalid("the two-orbit check applies to non-contractible classes".into()));
    }
    if orbits.len() == 1 && orbits[0].is_nondegenerate() {
        Ok(TheoremBStatus::Violation)
    } else {
        Ok(TheoremBStatus::Consistent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(4, -1), 0);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(6, 3), 20);
    }

    #[test]
    fn rational_rank_detects_relations() {
        assert_eq!(rational_rank(&[0.0, 0.0]), 0);
        assert_eq!(rational_rank(&[3.0 * PI, -3.0 * PI]), 1);
        assert_eq!(rational_rank(&[PI, 2.0f64.sqrt()]), 2);
        assert_eq!(rational_rank(&[PI, 2.5 * PI, 0.0]), 1);
        assert_eq!(rational_rank(&[PI, 1.0, PI + 0.5]), 2);
    }

    #[test]
    fn predictions() {
        let p = predict(&MagneticField::constant(&[PI]), 1.0).unwrap();
        assert_eq!(p.k_total, 0);
        assert_eq!(p.hf_ranks, BTreeMap::from([(0, 1), (1, 2), (2, 1)]));
        let p = predict(&MagneticField::constant(&[-3.0 * PI]), 1.0).unwrap();
        assert_eq!(p.k_total, 1);
        assert_eq!(p.hf_rank(&[1, 0], 0), 0);
    }
}
