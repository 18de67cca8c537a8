use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{eigenvalues_at, SpectrumScan};
use crate::error::Result;
use crate::fock::FockBasis;

/// Gaps below `CROSSING_GAP_TOL * nu` after refinement count as true crossings.
pub const CROSSING_GAP_TOL: f64 = 1e-6;
const LOCATION_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Crossing,
    Avoided,
}

/// The asymptote `m nu + s delta/2` closest to an energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearestLine {
    pub m: i64,
    /// `+1` or `-1`.
    pub sign: i8,
    pub energy: f64,
    pub distance: f64,
}

impl NearestLine {
    pub fn find(energy: f64, nu: f64, delta: f64) -> Self {
        let mut best = None::<NearestLine>;
        for sign in [1i8, -1] {
            let shift = sign as f64 * 0.5 * delta;
            let m = ((energy - shift) / nu).round() as i64;
            let line = m as f64 * nu + shift;
            let cand = NearestLine {
                m,
                sign,
                energy: line,
                distance: (energy - line).abs(),
            };
            if best.is_none_or(|b| cand.distance < b.distance) {
                best = Some(cand);
            }
        }
        best.expect("two candidates")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    /// Index of the lower of the two adjacent sorted levels.
    pub lower_level: usize,
    pub location: f64,
    /// Mean of the two levels at `location`.
    pub energy: f64,
    pub gap: f64,
    pub classification: Classification,
    pub line: NearestLine,
}

fn golden_section(mut a: f64, mut b: f64, f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > LOCATION_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Local minima of the gap between adjacent sorted levels, refined by
/// golden-section search on freshly computed spectra to a parameter tolerance
/// of `1e-8` and classified against `CROSSING_GAP_TOL * nu`.
pub fn detect_events(scan: &SpectrumScan, basis: &FockBasis) -> Result<Vec<CrossingEvent>> {
    let xs = &scan.grid.values;
    let mut candidates = Vec::new();
    for i in 0..scan.n_levels.saturating_sub(1) {
        let gaps: Vec<f64> = scan.levels.iter().map(|lv| lv[i + 1] - lv[i]).collect();
        for k in 1..xs.len() - 1 {
            if gaps[k] < gaps[k - 1] && gaps[k] <= gaps[k + 1] {
                candidates.push((i, k));
            }
        }
    }
    let nu = scan.fixed.nu;
    let mut events: Vec<CrossingEvent> = candidates
        .par_iter()
        .map(|&(i, k)| {
            let gap_at = |x: f64| -> Result<(f64, f64)> {
                let ev = eigenvalues_at(&scan.grid.params_at(&scan.fixed, x), basis)?;
                Ok((ev[i + 1] - ev[i], 0.5 * (ev[i + 1] + ev[i])))
            };
            let (location, _) = golden_section(xs[k - 1], xs[k + 1], |x| Ok(gap_at(x)?.0))?;
            let (gap, energy) = gap_at(location)?;
            let p = scan.grid.params_at(&scan.fixed, location);
            Ok(CrossingEvent {
                lower_level: i,
                location,
                energy,
                gap,
                classification: if gap < CROSSING_GAP_TOL * nu {
                    Classification::Crossing
                } else {
                    Classification::Avoided
                },
                line: NearestLine::find(energy, p.nu, p.delta),
            })
        })
        .collect::<Result<_>>()?;
    events.sort_by(|a, b| {
        a.location
            .total_cmp(&b.location)
            .then(a.lower_level.cmp(&b.lower_level))
    });
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_vertex() {
        let (x, fx) = golden_section(0.0, 1.0, |x| Ok((x - 0.3).abs())).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx < 1e-8);
    }

    #[test]
    fn nearest_line_labels() {
        let l = NearestLine::find(2.00001, 1.0, 0.0);
        assert_eq!(l.m, 2);
        assert!((l.distance - 1e-5).abs() < 1e-12);
        let l = NearestLine::find(1.52, 1.0, 1.0);
        assert!((l.energy - 1.5).abs() < 1e-15);
        let l = NearestLine::find(0.76, 1.0, 0.5);
        assert_eq!((l.m, l.sign), (1, -1));
    }
}
