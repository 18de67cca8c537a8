//! Exact eigenstates from a finite ansatz.
//!
//! The plus branch looks for eigenstates
//! `|g> sum_n d_n |-i eta; n> + (Omega/nu) |e> sum_n c_n |n>` with energy
//! `(m+1) nu + delta/2`. That works exactly when the `(m+1) x (m+1)`
//! tridiagonal system below has a kernel:
//!
//! ```text
//! row n:  eps_{m-n} d_n + i eta sqrt(n) d_{n-1} - i eta sqrt(n+1) d_{n+1} = 0
//! eps_j = (j + 1 - eta^2) + s delta/nu - Omega^2 / ((j+1) nu^2)
//! ```
//!
//! Note the reversed diagonal: row `n` carries `eps_{m-n}`, not `eps_n`.
//! The minus branch follows from the symmetry `e <-> g, delta -> -delta,
//! eta -> -eta`, so it is the same system with `s = -1` and the sign of
//! `eta` flipped on the off-diagonals.

mod roots;
mod state;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::IonParams;

pub use roots::{
    closed_form_roots, find_roots, ClosedFormRoots, Root, RootSearch, SolveFor, DEFAULT_GRID_POINTS,
    MIN_GRID_POINTS,
};
pub use state::{
    build_ion_eigenstate, degeneracy_partner_check, jcm_consistency, map_to_jcm, null_vector,
    AnsatzEigenstate, AnsatzSolution, JcmConsistency, PartnerEntry, PartnerReport,
};

/// Threshold on `|det M| / scale` for accepting parameters as a root.
pub const ROOT_ACCEPT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    /// `s = +1` for plus, `-1` for minus.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }

    /// `E_m = (m+1) nu + s delta / 2`.
    pub fn energy(self, m: usize, p: &IonParams) -> f64 {
        (m as f64 + 1.0) * p.nu + self.sign() * 0.5 * p.delta
    }
}

impl std::str::FromStr for Branch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plus" | "+" => Ok(Branch::Plus),
            "minus" | "-" => Ok(Branch::Minus),
            other => Err(format!("unknown branch '{other}' (expected plus or minus)")),
        }
    }
}

/// Dimensionless parameters `a = (Omega/nu)^2`, `d = delta/nu` and branch sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedParams {
    pub a: f64,
    pub d: f64,
    pub s: f64,
}

impl ReducedParams {
    pub fn new(p: &IonParams, branch: Branch) -> Self {
        Self {
            a: (p.omega / p.nu).powi(2),
            d: p.delta / p.nu,
            s: branch.sign(),
        }
    }
}

/// `eps_j` for the given branch.
pub fn epsilon(j: usize, p: &IonParams, branch: Branch) -> f64 {
    let rp = ReducedParams::new(p, branch);
    reduced_epsilon(j, p.eta * p.eta, rp.a, rp.s * rp.d)
}

fn reduced_epsilon(j: usize, eta2: f64, a: f64, sd: f64) -> f64 {
    let jp1 = j as f64 + 1.0;
    (jp1 - eta2) + sd - a / jp1
}

fn epsilon_bound(j: usize, eta2: f64, a: f64, sd: f64) -> f64 {
    let jp1 = j as f64 + 1.0;
    jp1 + eta2.abs() + sd.abs() + a.abs() / jp1
}

/// Continuant `f_n = eps_{m-n} f_{n-1} - eta^2 n f_{n-2}` with `f_{-1} = 1`,
/// `f_0 = eps_m`. The second value runs the same recurrence on the absolute
/// sizes of all terms; it bounds what can cancel and is the scale of `det`.
pub(crate) fn continuant(m: usize, eta2: f64, a: f64, sd: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = reduced_epsilon(m, eta2, a, sd);
    let mut sprev = 1.0;
    let mut scur = epsilon_bound(m, eta2, a, sd);
    for n in 1..=m {
        let e = reduced_epsilon(m - n, eta2, a, sd);
        let c = eta2 * n as f64;
        let next = e * cur - c * prev;
        let snext = epsilon_bound(m - n, eta2, a, sd) * scur + c.abs() * sprev;
        prev = cur;
        cur = next;
        sprev = scur;
        scur = snext;
    }
    (cur, scur)
}

/// `det M_m` for the branch, exactly real.
pub fn det_m(m: usize, p: &IonParams, branch: Branch) -> f64 {
    det_with_scale(m, p, branch).0
}

/// `(det M_m, scale)`; `|det| / scale` is the relative size used for root acceptance.
pub fn det_with_scale(m: usize, p: &IonParams, branch: Branch) -> (f64, f64) {
    let rp = ReducedParams::new(p, branch);
    continuant(m, p.eta * p.eta, rp.a, rp.s * rp.d)
}

/// `|det M_m| / scale`.
pub fn det_ratio(m: usize, p: &IonParams, branch: Branch) -> f64 {
    let (d, s) = det_with_scale(m, p, branch);
    d.abs() / s
}

/// The compatibility matrix for order `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalSystem {
    pub m: usize,
    /// `eps_0 ..= eps_m`.
    pub eps: Vec<f64>,
    /// Off-diagonal strength with the branch sign folded in (`-eta` for minus).
    pub eta: f64,
    pub branch: Branch,
}

impl TridiagonalSystem {
    pub fn new(m: usize, p: &IonParams, branch: Branch) -> Self {
        Self {
            m,
            eps: (0..=m).map(|j| epsilon(j, p, branch)).collect(),
            eta: branch.sign() * p.eta,
            branch,
        }
    }

    /// Hermitian matrix acting on `(d_0, ..., d_m)`: diagonal `eps_{m-n}`,
    /// super-diagonal `-i eta sqrt(n+1)`, sub-diagonal `+i eta sqrt(n)`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let k = self.m + 1;
        let mut out = DMatrix::from_element(k, k, Complex64::new(0.0, 0.0));
        for n in 0..k {
            out[(n, n)] = Complex64::from(self.eps[self.m - n]);
            if n + 1 < k {
                let off = self.eta * ((n + 1) as f64).sqrt();
                out[(n, n + 1)] = Complex64::new(0.0, -off);
                out[(n + 1, n)] = Complex64::new(0.0, off);
            }
        }
        out
    }

    /// The same matrix in the gauge `d_n = i^n e_n`, where it is real symmetric
    /// with diagonal `eps_{m-n}` and off-diagonal `eta sqrt(n+1)`.
    pub fn real_matrix(&self) -> DMatrix<f64> {
        let k = self.m + 1;
        let mut out = DMatrix::zeros(k, k);
        for n in 0..k {
            out[(n, n)] = self.eps[self.m - n];
            if n + 1 < k {
                let off = self.eta * ((n + 1) as f64).sqrt();
                out[(n, n + 1)] = off;
                out[(n + 1, n)] = off;
            }
        }
        out
    }

    pub fn determinant(&self) -> f64 {
        let eta2 = self.eta * self.eta;
        let mut prev = 1.0;
        let mut cur = self.eps[self.m];
        for n in 1..=self.m {
            let next = self.eps[self.m - n] * cur - eta2 * n as f64 * prev;
            prev = cur;
            cur = next;
        }
        cur
    }
}
