//! Numerical spectra of the ion Hamiltonian over parameter scans.
//!
//! Every grid point is diagonalized independently (in parallel, merged by grid
//! index), then a sequential pass tracks level identities by eigenvector
//! overlap. In the gauge `|s, n> -> i^n |s, n>` the ion Hamiltonian is real
//! symmetric, which halves the eigensolver cost; overlaps are gauge invariant.

mod asymptotic;
mod crossval;
mod events;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{hermitian_eigenvalues, hermitian_lowest};
use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::model::{build_h_ion, IonParams};

pub use asymptotic::{
    asymptotic_convergence, asymptotic_levels, asymptotic_state, parity_commutator,
    AsymptoteSet, AsymptoticLevel, ConvergenceReport, ConvergenceRow, Sign,
};
pub use crossval::{crossvalidate_roots, CrossValidation, CrossValidationOptions, LineCount, RootMatch};
pub use events::{detect_events, Classification, CrossingEvent, NearestLine, CROSSING_GAP_TOL};

/// Overlaps below this between tracked neighbours mean the grid is too coarse.
pub const MIN_TRACKING_OVERLAP: f64 = 0.7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanParameter {
    Eta,
    Delta,
    Omega,
}

impl ScanParameter {
    pub fn name(self) -> &'static str {
        match self {
            ScanParameter::Eta => "eta",
            ScanParameter::Delta => "delta",
            ScanParameter::Omega => "omega",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub parameter: ScanParameter,
    pub values: Vec<f64>,
}

impl ScanGrid {
    pub fn new(parameter: ScanParameter, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParams("a scan grid needs at least 2 points".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("scan grid values must be finite".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("scan grid must be strictly increasing".into()));
        }
        Ok(Self { parameter, values })
    }

    /// `steps + 1` evenly spaced points from `lo` to `hi`.
    pub fn linspace(parameter: ScanParameter, lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParams("a scan needs at least one step".into()));
        }
        let values = (0..=steps)
            .map(|k| lo + (hi - lo) * k as f64 / steps as f64)
            .collect();
        Self::new(parameter, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn params_at(&self, fixed: &IonParams, x: f64) -> IonParams {
        set_parameter(fixed, self.parameter, x)
    }

    fn max_abs_eta(&self, fixed: &IonParams) -> f64 {
        match self.parameter {
            ScanParameter::Eta => self.values.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            _ => fixed.eta.abs(),
        }
    }
}

pub(crate) fn set_parameter(fixed: &IonParams, parameter: ScanParameter, x: f64) -> IonParams {
    match parameter {
        ScanParameter::Eta => fixed.with_eta(x),
        ScanParameter::Delta => fixed.with_delta(x),
        ScanParameter::Omega => fixed.with_omega(x),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumScan {
    pub grid: ScanGrid,
    pub fixed: IonParams,
    /// `levels[k][i]`: the `i`-th lowest eigenvalue at grid point `k`.
    pub levels: Vec<Vec<f64>>,
    /// `track_ids[k][i]`: identity of the `i`-th lowest level at grid point `k`.
    pub track_ids: Vec<Vec<usize>>,
    /// Smallest overlap accepted when tracking from point `k` to `k + 1`.
    pub min_overlaps: Vec<f64>,
    pub n_levels: usize,
    pub warnings: Vec<String>,
}

impl SpectrumScan {
    /// Energies of tracked level `id` along the grid.
    pub fn tracked_curve(&self, id: usize) -> Vec<f64> {
        self.levels
            .iter()
            .zip(&self.track_ids)
            .map(|(lv, ids)| {
                let pos = ids.iter().position(|&t| t == id).expect("ids form a permutation");
                lv[pos]
            })
            .collect()
    }
}

fn real_hamiltonian(p: &IonParams, basis: &FockBasis) -> Result<DMatrix<f64>> {
    let h = build_h_ion(p, basis)?;
    h.to_real_gauge().ok_or(Error::NotHermitian {
        deviation: f64::NAN,
    })
}

/// All eigenvalues of `H_ion` at `p`, ascending.
pub fn eigenvalues_at(p: &IonParams, basis: &FockBasis) -> Result<Vec<f64>> {
    hermitian_eigenvalues(&real_hamiltonian(p, basis)?)
}

struct PointResult {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

fn diagonalize_point(p: &IonParams, basis: &FockBasis, n_levels: usize) -> Result<PointResult> {
    let eig = hermitian_lowest(&real_hamiltonian(p, basis)?, n_levels)?;
    Ok(PointResult {
        values: eig.values,
        vectors: eig.vectors,
    })
}

/// Greedy assignment of levels at the next grid point to levels at the current
/// one by largest `|<u_i|v_j>|`, ties broken by energy proximity. Returns
/// `next_of[i] = j` and the smallest accepted overlap.
fn match_levels(a: &PointResult, b: &PointResult) -> (Vec<usize>, f64) {
    let n = a.values.len();
    let overlaps = (a.vectors.transpose() * &b.vectors).map(f64::abs);
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    pairs.sort_by(|&(i, j), &(k, l)| {
        overlaps[(k, l)]
            .total_cmp(&overlaps[(i, j)])
            .then_with(|| {
                let d1 = (a.values[i] - b.values[j]).abs();
                let d2 = (a.values[k] - b.values[l]).abs();
                d1.total_cmp(&d2)
            })
            .then((i, j).cmp(&(k, l)))
    });
    let mut next_of = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    let mut worst = f64::INFINITY;
    for (i, j) in pairs {
        if next_of[i] == usize::MAX && !taken[j] {
            next_of[i] = j;
            taken[j] = true;
            worst = worst.min(overlaps[(i, j)]);
        }
    }
    (next_of, worst)
}

/// Diagonalizes `H_ion` at every grid point, keeps the lowest `n_levels`
/// eigenpairs and tracks level identities across the grid.
pub fn scan_spectrum(
    fixed: &IonParams,
    grid: &ScanGrid,
    n_levels: usize,
    basis: &FockBasis,
) -> Result<SpectrumScan> {
    fixed.validate()?;
    if n_levels == 0 || 2 * n_levels > basis.dim() {
        return Err(Error::InvalidParams(format!(
            "n_levels must be in 1..={} for dim {}",
            basis.dim() / 2,
            basis.dim()
        )));
    }
    basis.check_displacement(grid.max_abs_eta(fixed))?;
    let points: Vec<PointResult> = grid
        .values
        .par_iter()
        .map(|&x| {
            let p = grid.params_at(fixed, x);
            p.validate()?;
            diagonalize_point(&p, basis, n_levels)
        })
        .collect::<Result<_>>()?;

    let mut track_ids = Vec::with_capacity(points.len());
    track_ids.push((0..n_levels).collect::<Vec<_>>());
    let mut min_overlaps = Vec::with_capacity(points.len() - 1);
    let mut warnings = Vec::new();
    for k in 0..points.len() - 1 {
        let (next_of, worst) = match_levels(&points[k], &points[k + 1]);
        let mut ids = vec![0; n_levels];
        for (i, &j) in next_of.iter().enumerate() {
            ids[j] = track_ids[k][i];
        }
        track_ids.push(ids);
        min_overlaps.push(worst);
        if worst < MIN_TRACKING_OVERLAP {
            warnings.push(format!(
                "tracking overlap {worst:.3} between {} = {} and {} (grid too coarse or a level left the window)",
                grid.parameter.name(),
                grid.values[k],
                grid.values[k + 1]
            ));
        }
    }
    Ok(SpectrumScan {
        grid: grid.clone(),
        fixed: *fixed,
        levels: points.into_iter().map(|p| p.values).collect(),
        track_ids,
        min_overlaps,
        n_levels,
        warnings,
    })
}

/// Lowest `count` eigenpairs at `p`, with eigenvectors in the original gauge.
pub fn lowest_eigenpairs(
    p: &IonParams,
    basis: &FockBasis,
    count: usize,
) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let pt = diagonalize_point(p, basis, count)?;
    let mut vecs = DMatrix::from_element(pt.vectors.nrows(), pt.vectors.ncols(), Complex64::new(0.0, 0.0));
    for c in 0..pt.vectors.ncols() {
        let col = crate::model::from_real_gauge(&pt.vectors.column(c).into_owned(), basis);
        vecs.set_column(c, &col);
    }
    Ok((pt.values, vecs))
}
