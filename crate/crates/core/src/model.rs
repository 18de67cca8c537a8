//! The ion-laser Hamiltonian, its driven Jaynes-Cummings picture and the
//! entangling unitary `T` that connects them.
//!
//! Operators on the spin ⊗ mode space are dense `2S x 2S` matrices (`S` being
//! the working Fock size) laid out as `[e-block; g-block]`: indices `0..S`
//! carry `|e>⊗|n>`, indices `S..2S` carry `|g>⊗|n>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, BosonOperator, FockBasis};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// State vector on the spin ⊗ mode working space.
pub type SpinFockState = DVector<Complex64>;

/// Physical parameters of the driven ion, in units with hbar = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IonParams {
    /// Trap frequency.
    pub nu: f64,
    /// Detuning `omega_atom - omega_laser`.
    pub delta: f64,
    /// Rabi frequency of the ion-laser coupling.
    pub omega: f64,
    /// Lamb-Dicke parameter.
    pub eta: f64,
}

impl Default for IonParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            delta: 0.0,
            omega: 0.5,
            eta: 0.0,
        }
    }
}

impl IonParams {
    pub fn new(nu: f64, delta: f64, omega: f64, eta: f64) -> Result<Self> {
        let p = Self {
            nu,
            delta,
            omega,
            eta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::InvalidParams(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "omega must be non-negative, got {}",
                self.omega
            )));
        }
        if !self.delta.is_finite() || !self.eta.is_finite() {
            return Err(Error::InvalidParams("delta and eta must be finite".into()));
        }
        Ok(())
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    pub fn with_omega(self, omega: f64) -> Self {
        Self { omega, ..self }
    }
}

/// Parameters of the Jaynes-Cummings form reached through `T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JcmParams {
    /// Cavity frequency, `omega = nu`.
    pub omega_field: f64,
    /// Atomic transition frequency, `omega0 = 2 Omega`.
    pub omega0: f64,
    /// Coupling, `2 lambda = eta nu`.
    pub lambda: f64,
    /// Coefficient of `sigma_x`, equal to `-delta/2`.
    pub static_drive: f64,
    /// Constant `nu eta^2 / 4`.
    pub energy_shift: f64,
}

impl JcmParams {
    pub fn from_ion(p: &IonParams) -> Self {
        Self {
            omega_field: p.nu,
            omega0: 2.0 * p.omega,
            lambda: 0.5 * p.eta * p.nu,
            static_drive: -0.5 * p.delta,
            energy_shift: 0.25 * p.nu * p.eta * p.eta,
        }
    }

    pub fn to_ion(&self) -> IonParams {
        IonParams {
            nu: self.omega_field,
            delta: -2.0 * self.static_drive,
            omega: 0.5 * self.omega0,
            eta: 2.0 * self.lambda / self.omega_field,
        }
    }
}

/// Which of the two unitarily equivalent descriptions an operator or state lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Picture {
    Ion,
    Jcm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spin {
    Excited,
    Ground,
}

impl Spin {
    fn block(self) -> usize {
        match self {
            Spin::Excited => 0,
            Spin::Ground => 1,
        }
    }
}

/// Dense operator on spin ⊗ truncated mode, `[e; g]` block layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinFockOperator {
    matrix: DMatrix<Complex64>,
    basis: FockBasis,
}

impl SpinFockOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>, basis: &FockBasis) -> Result<Self> {
        let size = 2 * basis.size();
        if matrix.shape() != (size, size) {
            return Err(Error::DimensionMismatch(format!(
                "expected {size}x{size}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            matrix,
            basis: basis.clone(),
        })
    }

    /// Assembles `[[ee, eg], [ge, gg]]`.
    pub fn from_blocks(
        ee: &DMatrix<Complex64>,
        eg: &DMatrix<Complex64>,
        ge: &DMatrix<Complex64>,
        gg: &DMatrix<Complex64>,
        basis: &FockBasis,
    ) -> Result<Self> {
        let s = basis.size();
        for b in [ee, eg, ge, gg] {
            if b.shape() != (s, s) {
                return Err(Error::DimensionMismatch(format!(
                    "block must be {s}x{s}, got {}x{}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        let mut m = DMatrix::from_element(2 * s, 2 * s, ZERO);
        m.view_mut((0, 0), (s, s)).copy_from(ee);
        m.view_mut((0, s), (s, s)).copy_from(eg);
        m.view_mut((s, 0), (s, s)).copy_from(ge);
        m.view_mut((s, s), (s, s)).copy_from(gg);
        Ok(Self {
            matrix: m,
            basis: basis.clone(),
        })
    }

    /// `spin ⊗ boson` for a 2x2 spin matrix in `[e, g]` order.
    pub fn kron(spin: [[Complex64; 2]; 2], boson: &BosonOperator) -> Self {
        let b = boson.matrix();
        let basis = boson.basis();
        let blocks = spin.map(|row| row.map(|c| b * c));
        Self::from_blocks(&blocks[0][0], &blocks[0][1], &blocks[1][0], &blocks[1][1], basis)
            .expect("blocks share the boson basis")
    }

    pub fn identity(basis: &FockBasis) -> Self {
        let size = 2 * basis.size();
        Self {
            matrix: DMatrix::identity(size, size),
            basis: basis.clone(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut DMatrix<Complex64> {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn block(&self, row: Spin, col: Spin) -> DMatrix<Complex64> {
        let s = self.basis.size();
        self.matrix
            .view((row.block() * s, col.block() * s), (s, s))
            .into_owned()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            basis: self.basis.clone(),
        }
    }

    pub fn apply(&self, v: &SpinFockState) -> SpinFockState {
        &self.matrix * v
    }

    /// Largest `|H - H^dag|` element relative to the largest `|H|` element.
    pub fn hermiticity_error(&self) -> f64 {
        let scale = self.matrix.camax().max(f64::MIN_POSITIVE);
        (&self.matrix - self.matrix.adjoint()).camax() / scale
    }

    /// Restriction to spin ⊗ Fock levels `0..dim`.
    pub fn interior(&self) -> DMatrix<Complex64> {
        let idx = interior_indices(&self.basis);
        self.matrix.select_rows(&idx).select_columns(&idx)
    }

    /// The real symmetric matrix `U^dag H U` with `U|s, n> = i^n |s, n>`, when
    /// that gauge makes `H` real (both Hamiltonians here qualify).
    pub fn to_real_gauge(&self) -> Option<DMatrix<f64>> {
        let s = self.basis.size();
        let n = 2 * s;
        let scale = self.matrix.camax().max(f64::MIN_POSITIVE);
        let tol = 1e-14 * scale;
        let mut out = DMatrix::zeros(n, n);
        for c in 0..n {
            for r in 0..n {
                let shift = ((c % s) as i64 - (r % s) as i64).rem_euclid(4);
                let v = self.matrix[(r, c)] * i_pow(shift as u32);
                if v.im.abs() > tol {
                    return None;
                }
                out[(r, c)] = v.re;
            }
        }
        Some(out)
    }
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

/// Maps an eigenvector of [`SpinFockOperator::to_real_gauge`] back to the original gauge.
pub fn from_real_gauge(v: &DVector<f64>, basis: &FockBasis) -> SpinFockState {
    let s = basis.size();
    DVector::from_iterator(
        v.len(),
        v.iter()
            .enumerate()
            .map(|(idx, &x)| i_pow((idx % s) as u32 % 4) * x),
    )
}

impl std::ops::Mul for &SpinFockOperator {
    type Output = SpinFockOperator;

    fn mul(self, rhs: &SpinFockOperator) -> SpinFockOperator {
        SpinFockOperator {
            matrix: &self.matrix * &rhs.matrix,
            basis: self.basis.clone(),
        }
    }
}

/// Indices of spin ⊗ Fock levels `0..dim` in the working layout.
pub fn interior_indices(basis: &FockBasis) -> Vec<usize> {
    let s = basis.size();
    (0..basis.dim()).chain(s..s + basis.dim()).collect()
}

/// `|spin> ⊗ |n>`.
pub fn basis_state(spin: Spin, n: usize, basis: &FockBasis) -> SpinFockState {
    let mut v = DVector::from_element(2 * basis.size(), ZERO);
    v[spin.block() * basis.size() + n] = ONE;
    v
}

/// `(ce |e> + cg |g>) ⊗ |mode>`.
pub fn product_state(ce: Complex64, cg: Complex64, mode: &DVector<Complex64>) -> SpinFockState {
    let s = mode.len();
    let mut v = DVector::from_element(2 * s, ZERO);
    v.rows_mut(0, s).copy_from(&(mode * ce));
    v.rows_mut(s, s).copy_from(&(mode * cg));
    v
}

/// Interior part of a state: spin ⊗ Fock levels `0..dim`.
pub fn interior_state(v: &SpinFockState, basis: &FockBasis) -> SpinFockState {
    v.select_rows(&interior_indices(basis))
}

/// Purity `Tr(rho^2)` of the normalized reduced spin state.
pub fn reduced_spin_purity(v: &SpinFockState) -> f64 {
    let s = v.len() / 2;
    let e = v.rows(0, s);
    let g = v.rows(s, s);
    let ree = e.norm_squared();
    let rgg = g.norm_squared();
    let reg = e.dotc(&g);
    let tr = ree + rgg;
    (ree * ree + rgg * rgg + 2.0 * reg.norm_sqr()) / (tr * tr)
}

fn sigma_z() -> [[Complex64; 2]; 2] {
    [[ONE, ZERO], [ZERO, -ONE]]
}

fn sigma_x() -> [[Complex64; 2]; 2] {
    [[ZERO, ONE], [ONE, ZERO]]
}

/// `H_ion = nu n + (delta/2) sigma_z + Omega (sigma_+ D(i eta) + sigma_- D^dag(i eta))`:
///
/// `[[nu n + delta/2, Omega D(i eta)], [Omega D^dag(i eta), nu n - delta/2]]`.
pub fn build_h_ion(p: &IonParams, basis: &FockBasis) -> Result<SpinFockOperator> {
    p.validate()?;
    let d = fock::displacement(Complex64::new(0.0, p.eta), basis)?.into_matrix();
    let n = fock::number(basis).into_matrix();
    let id = DMatrix::<Complex64>::identity(basis.size(), basis.size());
    let ee = &n * Complex64::from(p.nu) + &id * Complex64::from(0.5 * p.delta);
    let gg = &n * Complex64::from(p.nu) - &id * Complex64::from(0.5 * p.delta);
    let eg = &d * Complex64::from(p.omega);
    let ge = eg.adjoint();
    SpinFockOperator::from_blocks(&ee, &eg, &ge, &gg, basis)
}

/// Jaynes-Cummings Hamiltonian with counter-rotating terms, static drive and
/// constant shift:
/// `omega n + (omega0/2) sigma_z + i lambda sigma_x (a - a^dag) + static_drive sigma_x + energy_shift`.
pub fn build_h_jcm(j: &JcmParams, basis: &FockBasis) -> SpinFockOperator {
    let size = basis.size();
    let a = fock::annihilation(basis).into_matrix();
    let n = fock::number(basis).into_matrix();
    let id = DMatrix::<Complex64>::identity(size, size);
    let diag_common = &n * Complex64::from(j.omega_field) + &id * Complex64::from(j.energy_shift);
    let ee = &diag_common + &id * Complex64::from(0.5 * j.omega0);
    let gg = &diag_common - &id * Complex64::from(0.5 * j.omega0);
    let coupling = (&a - a.adjoint()) * (I * j.lambda) + &id * Complex64::from(j.static_drive);
    SpinFockOperator::from_blocks(&ee, &coupling, &coupling, &gg, basis)
        .expect("blocks built on the same basis")
}

/// `T H_ion T^dag = nu n + Omega sigma_z + i (eta nu/2) sigma_x (a - a^dag) - (delta/2) sigma_x + nu eta^2/4`.
pub fn build_h_jcm_driven(p: &IonParams, basis: &FockBasis) -> Result<SpinFockOperator> {
    p.validate()?;
    Ok(build_h_jcm(&JcmParams::from_ion(p), basis))
}

/// `T = (1/sqrt 2) [[D^dag(beta), D(beta)], [-D^dag(beta), D(beta)]]`, `beta = i eta / 2`.
pub fn build_t(p: &IonParams, basis: &FockBasis) -> Result<SpinFockOperator> {
    let d = fock::displacement(Complex64::new(0.0, 0.5 * p.eta), basis)?.into_matrix();
    let h = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
    let dd = d.adjoint() * h;
    let d = d * h;
    SpinFockOperator::from_blocks(&dd, &d, &(-&dd), &d, basis)
}

/// `T H T^dag`.
pub fn conjugate(h: &SpinFockOperator, t: &SpinFockOperator) -> Result<SpinFockOperator> {
    if h.basis != t.basis {
        return Err(Error::DimensionMismatch(format!(
            "operators on different bases ({}+{} vs {}+{})",
            h.basis.dim(),
            h.basis.buffer(),
            t.basis.dim(),
            t.basis.buffer()
        )));
    }
    Ok(SpinFockOperator {
        matrix: &t.matrix * &h.matrix * t.matrix.adjoint(),
        basis: h.basis.clone(),
    })
}

/// `||a - b||_F / ||a||_F`, both restricted to the interior.
pub fn interior_norm_diff(a: &SpinFockOperator, b: &SpinFockOperator) -> Result<f64> {
    if a.basis != b.basis {
        return Err(Error::DimensionMismatch(
            "interior comparison needs a common basis".into(),
        ));
    }
    let ai = a.interior();
    let diff = (&ai - b.interior()).norm();
    let norm = ai.norm();
    Ok(if norm > 0.0 { diff / norm } else { diff })
}

/// Parity-like symmetry: `sigma_x exp(i pi n)` in the ion picture,
/// `sigma_z exp(i pi n)` in the Jaynes-Cummings picture.
pub fn parity_operator(picture: Picture, basis: &FockBasis) -> SpinFockOperator {
    let spin = match picture {
        Picture::Ion => sigma_x(),
        Picture::Jcm => sigma_z(),
    };
    SpinFockOperator::kron(spin, &fock::parity(basis))
}

pub fn build_hamiltonian(picture: Picture, p: &IonParams, basis: &FockBasis) -> Result<SpinFockOperator> {
    match picture {
        Picture::Ion => build_h_ion(p, basis),
        Picture::Jcm => build_h_jcm_driven(p, basis),
    }
}
