//! The limit `eta >> Omega/nu`, where the coupling `Omega D(i eta)` spreads
//! over many Fock levels and the spectrum approaches that of the uncoupled
//! system: `|e, n>` at `n nu + delta/2` and `|g, n>` at `n nu - delta/2`. In
//! the Jaynes-Cummings picture these are `|-> ⊗ |-i eta/2; n>` and
//! `|+> ⊗ |i eta/2; n>`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lowest_eigenpairs;
use crate::error::{Error, Result};
use crate::fock::{self, FockBasis};
use crate::model::{
    basis_state, build_hamiltonian, parity_operator, product_state, IonParams, Picture, Spin,
    SpinFockState,
};

const MONOTONE_SLACK: f64 = 1e-3;
const DEGENERACY_TOL: f64 = 1e-9;

/// Label of an asymptotic state: `+` is `|g, n>` (`|+>` in the
/// Jaynes-Cummings picture), `-` is `|e, n>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn spin(self) -> Spin {
        match self {
            Sign::Plus => Spin::Ground,
            Sign::Minus => Spin::Excited,
        }
    }

    /// `n nu - delta/2` for `+`, `n nu + delta/2` for `-`.
    pub fn energy(self, n: usize, p: &IonParams) -> f64 {
        let s = match self {
            Sign::Plus => -0.5,
            Sign::Minus => 0.5,
        };
        n as f64 * p.nu + s * p.delta
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticLevel {
    pub energy: f64,
    /// States sharing this energy, as `(n, sign)`.
    pub members: Vec<(usize, Sign)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteSet {
    /// Distinct energies `m nu +- delta/2`, `m = 0..=M`, ascending.
    pub levels: Vec<AsymptoticLevel>,
    /// `Some(k)` when `|delta| = k nu`: then all but `k` of the energies are
    /// shared by two states.
    pub sideband: Option<usize>,
}

impl AsymptoteSet {
    pub fn values(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn nearest_distance(&self, e: f64) -> f64 {
        self.levels
            .iter()
            .map(|l| (l.energy - e).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

fn sideband_order(p: &IonParams) -> Option<usize> {
    let k = (p.delta / p.nu).abs();
    ((k - k.round()).abs() < 1e-12).then(|| k.round() as usize)
}

pub fn asymptotic_levels(p: &IonParams, m_max: usize) -> Result<AsymptoteSet> {
    p.validate()?;
    if m_max < 1 {
        return Err(Error::InvalidParams("need at least M = 1 asymptotes".into()));
    }
    let mut states: Vec<(f64, (usize, Sign))> = (0..=m_max)
        .flat_map(|n| [Sign::Minus, Sign::Plus].map(|s| (s.energy(n, p), (n, s))))
        .collect();
    states.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut levels: Vec<AsymptoticLevel> = Vec::new();
    for (e, member) in states {
        match levels.last_mut() {
            Some(last) if (last.energy - e).abs() <= DEGENERACY_TOL * p.nu => last.members.push(member),
            _ => levels.push(AsymptoticLevel {
                energy: e,
                members: vec![member],
            }),
        }
    }
    Ok(AsymptoteSet {
        levels,
        sideband: sideband_order(p),
    })
}

/// `|g or e> ⊗ |n>` in the ion picture, `|+-> ⊗ |+- i eta/2; n>` in the
/// Jaynes-Cummings picture.
pub fn asymptotic_state(
    p: &IonParams,
    n: usize,
    sign: Sign,
    picture: Picture,
    basis: &FockBasis,
) -> Result<SpinFockState> {
    if n >= basis.dim() {
        return Err(Error::InvalidParams(format!(
            "Fock index {n} outside the interior (dim {})",
            basis.dim()
        )));
    }
    match picture {
        Picture::Ion => Ok(basis_state(sign.spin(), n, basis)),
        Picture::Jcm => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let (alpha, ce) = match sign {
                Sign::Plus => (0.5 * p.eta, h),
                Sign::Minus => (-0.5 * p.eta, -h),
            };
            let mode = fock::displaced_number_state(Complex64::new(0.0, alpha), n, basis)?;
            Ok(product_state(
                Complex64::from(ce),
                Complex64::from(h),
                mode.coeffs(),
            ))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eta: f64,
    pub eigenvalues: Vec<f64>,
    /// Distance of each eigenvalue to the nearest asymptote.
    pub distances: Vec<f64>,
    /// Norm of each eigenvector's projection onto its best asymptotic eigenspace.
    pub overlaps: Vec<f64>,
    pub max_distance: f64,
    pub min_overlap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub distance_monotone: bool,
    pub overlap_monotone: bool,
}

/// Best overlap of `v` (ion picture) with the asymptotic eigenspaces. When
/// several asymptotic states share an energy, any combination of them is an
/// asymptotic eigenstate, so the overlap is the norm of the projection onto
/// their span. `T` maps these spaces onto the Jaynes-Cummings ones, so the
/// number is the same in either picture.
fn asymptotic_overlap(v: &DVector<Complex64>, set: &AsymptoteSet, basis: &FockBasis) -> f64 {
    let s = basis.size();
    set.levels
        .iter()
        .map(|level| {
            level
                .members
                .iter()
                .map(|&(n, sign)| {
                    let idx = match sign {
                        Sign::Minus => n,
                        Sign::Plus => s + n,
                    };
                    v[idx].norm_sqr()
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

pub fn asymptotic_convergence(
    p: &IonParams,
    eta_list: &[f64],
    n_levels: usize,
    basis: &FockBasis,
) -> Result<ConvergenceReport> {
    if eta_list.is_empty() || eta_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("eta_list must be non-empty and increasing".into()));
    }
    let set = asymptotic_levels(p, basis.dim() - 1)?;
    let mut rows = Vec::with_capacity(eta_list.len());
    for &eta in eta_list {
        let q = p.with_eta(eta);
        let (values, vectors) = lowest_eigenpairs(&q, basis, n_levels)?;
        let distances: Vec<f64> = values.iter().map(|&e| set.nearest_distance(e)).collect();
        let overlaps: Vec<f64> = (0..values.len())
            .map(|c| asymptotic_overlap(&vectors.column(c).into_owned(), &set, basis))
            .collect();
        rows.push(ConvergenceRow {
            eta,
            max_distance: distances.iter().copied().fold(0.0, f64::max),
            min_overlap: overlaps.iter().copied().fold(f64::INFINITY, f64::min),
            eigenvalues: values,
            distances,
            overlaps,
        });
    }
    let distance_monotone = rows
        .windows(2)
        .all(|w| w[1].max_distance <= w[0].max_distance + MONOTONE_SLACK);
    let overlap_monotone = rows
        .windows(2)
        .all(|w| w[1].min_overlap >= w[0].min_overlap - MONOTONE_SLACK);
    Ok(ConvergenceReport {
        rows,
        distance_monotone,
        overlap_monotone,
    })
}

/// `||[H, P]|| / ||H||` on the interior, with `P` the parity-like operator of
/// the picture.
pub fn parity_commutator(p: &IonParams, picture: Picture, basis: &FockBasis) -> Result<f64> {
    let h = build_hamiltonian(picture, p, basis)?;
    let par = parity_operator(picture, basis);
    let comm = (&h * &par).into_matrix() - (&par * &h).into_matrix();
    let idx = crate::model::interior_indices(basis);
    let ci = comm.select_rows(&idx).select_columns(&idx);
    let norm = h.interior().norm();
    Ok(if norm > 0.0 { ci.norm() / norm } else { ci.norm() })
}
