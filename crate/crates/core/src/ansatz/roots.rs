use serde::{Deserialize, Serialize};

use super::{continuant, Branch, ReducedParams};
use crate::error::{Error, Result};
use crate::model::IonParams;

pub const DEFAULT_GRID_POINTS: usize = 512;
pub const MIN_GRID_POINTS: usize = 64;
const BISECTION_REL_TOL: f64 = 1e-12;
const DOUBLE_ROOT_TOL: f64 = 1e-9;
const REFINE_FACTOR: usize = 8;

/// Which parameter is varied while the others stay fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveFor {
    Eta2,
    Omega2,
    Delta,
}

impl std::str::FromStr for SolveFor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eta2" => Ok(SolveFor::Eta2),
            "omega2" => Ok(SolveFor::Omega2),
            "delta" => Ok(SolveFor::Delta),
            other => Err(format!(
                "unknown parameter '{other}' (expected eta2, omega2 or delta)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: f64,
    /// `|det| / scale` at the returned value.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct RootSearch {
    pub roots: Vec<Root>,
    /// Near-zero minima of `|det|` that never changed sign.
    pub double_root_candidates: Vec<Root>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormRoots {
    /// Positive roots in `eta^2`, ascending.
    pub eta2: Vec<f64>,
    pub negative_discriminant: bool,
}

/// Positive `eta^2` roots of `det M_0` and `det M_1`.
///
/// `m = 0`: `eta^2 = 1 - a + s d`.
/// `m = 1`: `eta^2 = 2 + s d - 3a/4 +- sqrt(a^2/16 - a/2 + 2 + s d)`.
pub fn closed_form_roots(m: usize, rp: &ReducedParams) -> Result<ClosedFormRoots> {
    let sd = rp.s * rp.d;
    let a = rp.a;
    let (mut eta2, negative_discriminant) = match m {
        0 => (vec![1.0 - a + sd], false),
        1 => {
            let disc = a * a / 16.0 - a / 2.0 + 2.0 + sd;
            if disc < 0.0 {
                (Vec::new(), true)
            } else {
                let centre = 2.0 + sd - 0.75 * a;
                let r = disc.sqrt();
                (vec![centre - r, centre + r], false)
            }
        }
        _ => {
            return Err(Error::InvalidParams(format!(
                "closed-form roots exist for m = 0 and m = 1 only, got m = {m}"
            )))
        }
    };
    eta2.retain(|&x| x > 0.0);
    Ok(ClosedFormRoots {
        eta2,
        negative_discriminant,
    })
}

struct Search<'a> {
    f: &'a dyn Fn(f64) -> (f64, f64),
}

impl Search<'_> {
    fn det(&self, x: f64) -> f64 {
        (self.f)(x).0
    }

    fn root(&self, value: f64) -> Root {
        let (d, s) = (self.f)(value);
        Root {
            value,
            residual: d.abs() / s,
        }
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fmid = self.det(mid);
            if fmid == 0.0 {
                return mid;
            }
            if (fmid < 0.0) == (flo < 0.0) {
                lo = mid;
                flo = fmid;
            } else {
                hi = mid;
            }
            if hi - lo <= BISECTION_REL_TOL * lo.abs().max(hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Sign changes and exact zeros on a uniform grid over `[lo, hi]`.
    fn scan(&self, lo: f64, hi: f64, points: usize, roots: &mut Vec<Root>) -> Vec<(f64, (f64, f64))> {
        let xs: Vec<f64> = (0..points)
            .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
            .collect();
        let vals: Vec<(f64, f64)> = xs.iter().map(|&x| (self.f)(x)).collect();
        for k in 0..points {
            if vals[k].0 == 0.0 {
                roots.push(self.root(xs[k]));
            }
        }
        for k in 0..points - 1 {
            let (fa, fb) = (vals[k].0, vals[k + 1].0);
            if fa != 0.0 && fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
                roots.push(self.root(self.bisect(xs[k], xs[k + 1], fa)));
            }
        }
        xs.into_iter().zip(vals).collect()
    }

    fn run(&self, lo: f64, hi: f64, grid_points: usize) -> RootSearch {
        let mut roots = Vec::new();
        let grid = self.scan(lo, hi, grid_points, &mut roots);
        let mut candidates = Vec::new();
        for k in 1..grid.len() - 1 {
            let (x, (f, s)) = grid[k];
            let (fl, fr) = (grid[k - 1].1 .0, grid[k + 1].1 .0);
            let is_min = f.abs() <= fl.abs() && f.abs() <= fr.abs();
            let same_sign = f != 0.0 && (f < 0.0) == (fl < 0.0) && (f < 0.0) == (fr < 0.0);
            if !(is_min && same_sign && f.abs() < DOUBLE_ROOT_TOL * s) {
                continue;
            }
            let mut found = Vec::new();
            let fine = self.scan(grid[k - 1].0, grid[k + 1].0, 2 * REFINE_FACTOR + 1, &mut found);
            if found.is_empty() {
                let best = fine
                    .iter()
                    .min_by(|p, q| (p.1 .0.abs() / p.1 .1).total_cmp(&(q.1 .0.abs() / q.1 .1)))
                    .map(|p| p.0)
                    .unwrap_or(x);
                candidates.push(self.root(best));
            } else {
                roots.extend(found);
            }
        }
        roots.sort_by(|a, b| a.value.total_cmp(&b.value));
        let merge_tol = 4.0 * BISECTION_REL_TOL;
        roots.dedup_by(|b, a| (b.value - a.value).abs() <= merge_tol * a.value.abs().max(1e-300));
        RootSearch {
            roots,
            double_root_candidates: candidates,
        }
    }
}

/// Roots of `det M_m` in one parameter over `range`, by sign-change bracketing
/// on a uniform grid followed by bisection.
///
/// Touching zeros (even multiplicity) do not change sign. Grid points where
/// `|det|` has a local minimum below `1e-9 * scale` are refined at higher
/// density; those that still show no sign change are reported as double-root
/// candidates.
pub fn find_roots(
    m: usize,
    branch: Branch,
    solve_for: SolveFor,
    range: (f64, f64),
    fixed: &IonParams,
    grid_points: usize,
) -> Result<RootSearch> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::EmptyRange { lo, hi });
    }
    if grid_points < MIN_GRID_POINTS {
        return Err(Error::InvalidParams(format!(
            "grid_points must be at least {MIN_GRID_POINTS}, got {grid_points}"
        )));
    }
    if matches!(solve_for, SolveFor::Eta2 | SolveFor::Omega2) && lo < 0.0 {
        return Err(Error::InvalidParams(format!(
            "range for a squared parameter must be non-negative, got [{lo}, {hi}]"
        )));
    }
    fixed.validate()?;
    let s = branch.sign();
    let nu = fixed.nu;
    let base = ReducedParams::new(fixed, Branch::Plus);
    let eta2 = fixed.eta * fixed.eta;
    let f = move |x: f64| match solve_for {
        SolveFor::Eta2 => continuant(m, x, base.a, s * base.d),
        SolveFor::Omega2 => continuant(m, eta2, x / (nu * nu), s * base.d),
        SolveFor::Delta => continuant(m, eta2, base.a, s * x / nu),
    };
    Ok(Search { f: &f }.run(lo, hi, grid_points))
}
