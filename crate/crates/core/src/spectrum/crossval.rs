use serde::{Deserialize, Serialize};

use super::{detect_events, eigenvalues_at, scan_spectrum, Classification, CrossingEvent, ScanGrid, ScanParameter};
use crate::ansatz::{find_roots, Branch, SolveFor};
use crate::error::Result;
use crate::fock::FockBasis;
use crate::model::IonParams;

const MATCH_LOCATION_TOL: f64 = 1e-4;
const MATCH_ENERGY_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationOptions {
    pub eta_range: (f64, f64),
    pub steps: usize,
    pub n_levels: usize,
}

impl Default for CrossValidationOptions {
    fn default() -> Self {
        Self {
            eta_range: (0.05, 3.0),
            steps: 300,
            n_levels: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootMatch {
    pub m: usize,
    pub branch: Branch,
    pub eta: f64,
    pub energy: f64,
    /// Distance from `energy` to the nearest eigenvalue of the full spectrum at `eta`.
    pub spectrum_distance: f64,
    /// Closest detected event within `1e-4` in `eta` and `1e-4 nu` in energy.
    pub event: Option<CrossingEvent>,
}

impl RootMatch {
    pub fn is_crossing(&self) -> bool {
        self.event
            .as_ref()
            .is_some_and(|e| e.classification == Classification::Crossing)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineCount {
    pub energy: f64,
    pub roots: usize,
    pub crossings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub params: IonParams,
    pub options: CrossValidationOptions,
    pub roots: Vec<RootMatch>,
    pub events: Vec<CrossingEvent>,
    /// Per distinct energy `(m+1) nu + s delta/2`: distinct ansatz roots and
    /// detected crossings on that line.
    pub lines: Vec<LineCount>,
}

impl CrossValidation {
    pub fn all_roots_are_crossings(&self) -> bool {
        self.roots.iter().all(RootMatch::is_crossing)
    }

    pub fn counts_match(&self) -> bool {
        self.lines.iter().all(|l| l.roots == l.crossings)
    }
}

/// Finds every ansatz root of order `m <= m_max` in the eta range, scans the
/// spectrum over the same range, and pairs each root with a detected event.
pub fn crossvalidate_roots(
    m_max: usize,
    p_fixed: &IonParams,
    basis: &FockBasis,
    options: &CrossValidationOptions,
) -> Result<CrossValidation> {
    let (lo, hi) = options.eta_range;
    let grid = ScanGrid::linspace(ScanParameter::Eta, lo, hi, options.steps)?;
    let scan = scan_spectrum(p_fixed, &grid, options.n_levels, basis)?;
    let events = detect_events(&scan, basis)?;
    let nu = p_fixed.nu;

    let branches: &[Branch] = if p_fixed.delta == 0.0 {
        &[Branch::Plus]
    } else {
        &[Branch::Plus, Branch::Minus]
    };
    let mut roots = Vec::new();
    let mut line_roots: Vec<(f64, Vec<f64>)> = Vec::new();
    for m in 0..=m_max {
        for &branch in branches {
            let found = find_roots(
                m,
                branch,
                SolveFor::Eta2,
                (lo * lo, hi * hi),
                p_fixed,
                crate::ansatz::DEFAULT_GRID_POINTS,
            )?;
            let energy = branch.energy(m, p_fixed);
            let slot = match line_roots
                .iter()
                .position(|(e, _)| (e - energy).abs() <= 1e-12 * nu)
            {
                Some(i) => i,
                None => {
                    line_roots.push((energy, Vec::new()));
                    line_roots.len() - 1
                }
            };
            for r in found.roots.iter().filter(|r| r.value > 0.0) {
                let eta = r.value.sqrt();
                if !line_roots[slot].1.iter().any(|x| (x - eta).abs() < 1e-9) {
                    line_roots[slot].1.push(eta);
                }
                let spectrum = eigenvalues_at(&p_fixed.with_eta(eta), basis)?;
                let spectrum_distance = spectrum
                    .iter()
                    .map(|e| (e - energy).abs())
                    .fold(f64::INFINITY, f64::min);
                let event = events
                    .iter()
                    .filter(|e| {
                        (e.location - eta).abs() <= MATCH_LOCATION_TOL
                            && (e.energy - energy).abs() <= MATCH_ENERGY_TOL * nu
                    })
                    .min_by(|a, b| (a.location - eta).abs().total_cmp(&(b.location - eta).abs()))
                    .cloned();
                roots.push(RootMatch {
                    m,
                    branch,
                    eta,
                    energy,
                    spectrum_distance,
                    event,
                });
            }
        }
    }
    let lines = line_roots
        .into_iter()
        .map(|(energy, etas)| LineCount {
            energy,
            roots: etas.len(),
            crossings: events
                .iter()
                .filter(|e| {
                    e.classification == Classification::Crossing
                        && (e.energy - energy).abs() <= MATCH_ENERGY_TOL * nu
                })
                .count(),
        })
        .collect();
    Ok(CrossValidation {
        params: *p_fixed,
        options: options.clone(),
        roots,
        events,
        lines,
    })
}
