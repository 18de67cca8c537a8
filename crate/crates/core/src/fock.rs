//! Truncated bosonic Fock space: ladder operators, displacement operators and
//! displaced number states.
//!
//! Every operator is built in a working space of `dim + buffer` levels. The
//! buffer absorbs truncation damage at the top edge; comparisons that matter
//! are made on the interior levels `0..dim`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Norm deficit tolerated for a displaced number state held in the truncated space.
pub const TRUNCATION_NORM_TOL: f64 = 1e-10;

/// Working truncation of the oscillator mode.
#[derive(Clone, Debug)]
pub struct FockBasis {
    dim: usize,
    buffer: usize,
    ln_factorial: Arc<[f64]>,
    sqrt_n: Arc<[f64]>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.buffer == other.buffer
    }
}

impl Eq for FockBasis {}

impl FockBasis {
    pub fn new(dim: usize, buffer: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidBasis(format!("dim must be at least 2, got {dim}")));
        }
        let size = dim + buffer;
        let mut ln_factorial = Vec::with_capacity(size + 1);
        let mut acc = 0.0f64;
        ln_factorial.push(0.0);
        for n in 1..=size {
            acc += (n as f64).ln();
            ln_factorial.push(acc);
        }
        let sqrt_n = (0..=size).map(|n| (n as f64).sqrt()).collect::<Vec<_>>();
        Ok(Self {
            dim,
            buffer,
            ln_factorial: ln_factorial.into(),
            sqrt_n: sqrt_n.into(),
        })
    }

    /// Basis with the default buffer, `max(20, ceil(dim / 4))`.
    pub fn with_default_buffer(dim: usize) -> Result<Self> {
        Self::new(dim, default_buffer(dim))
    }

    /// Smallest basis with at least `min_dim` interior levels (default buffer)
    /// that admits a displacement of modulus `alpha_abs`.
    pub fn admitting(min_dim: usize, alpha_abs: f64) -> Result<Self> {
        let mut dim = min_dim.max(2);
        while !displacement_fits(alpha_abs, dim + default_buffer(dim)) {
            dim += 1;
        }
        Self::with_default_buffer(dim)
    }

    /// Whether a displacement of modulus `alpha_abs` fits in this basis.
    pub fn admits(&self, alpha_abs: f64) -> bool {
        displacement_fits(alpha_abs, self.size())
    }

    /// Interior dimension N.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn buffer(&self) -> usize {
        self.buffer
    }

    /// Working size N + B.
    pub fn size(&self) -> usize {
        self.dim + self.buffer
    }

    /// ln(n!) for n in 0..=size.
    pub fn ln_factorial(&self, n: usize) -> f64 {
        self.ln_factorial[n]
    }

    /// sqrt(n) for n in 0..=size.
    pub fn sqrt(&self, n: usize) -> f64 {
        self.sqrt_n[n]
    }

    pub fn admits_displacement(&self, alpha_abs: f64) -> bool {
        displacement_fits(alpha_abs, self.size())
    }

    pub fn check_displacement(&self, alpha_abs: f64) -> Result<()> {
        if self.admits_displacement(alpha_abs) {
            Ok(())
        } else {
            Err(Error::TruncationTooSmall {
                alpha_abs,
                size: self.size(),
                required: displacement_requirement(alpha_abs, self.size()),
            })
        }
    }
}

pub fn default_buffer(dim: usize) -> usize {
    dim.div_ceil(4).max(20)
}

fn displacement_requirement(alpha_abs: f64, size: usize) -> f64 {
    alpha_abs * alpha_abs + 3.0 * alpha_abs * (size as f64).sqrt()
}

fn displacement_fits(alpha_abs: f64, size: usize) -> bool {
    alpha_abs.is_finite() && displacement_requirement(alpha_abs, size) < size as f64
}

/// Dense operator on the truncated mode.
#[derive(Clone, Debug, PartialEq)]
pub struct BosonOperator {
    matrix: DMatrix<Complex64>,
    basis: FockBasis,
}

impl BosonOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>, basis: &FockBasis) -> Result<Self> {
        let size = basis.size();
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

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            basis: self.basis.clone(),
        }
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.matrix * v
    }

    /// Top-left `dim x dim` block.
    pub fn interior(&self) -> DMatrix<Complex64> {
        let n = self.basis.dim();
        self.matrix.view((0, 0), (n, n)).into_owned()
    }
}

impl std::ops::Mul for &BosonOperator {
    type Output = BosonOperator;

    fn mul(self, rhs: &BosonOperator) -> BosonOperator {
        BosonOperator {
            matrix: &self.matrix * &rhs.matrix,
            basis: self.basis.clone(),
        }
    }
}

pub fn identity(basis: &FockBasis) -> BosonOperator {
    BosonOperator {
        matrix: DMatrix::identity(basis.size(), basis.size()),
        basis: basis.clone(),
    }
}

/// Annihilation operator, `<n-1|a|n> = sqrt(n)`.
pub fn annihilation(basis: &FockBasis) -> BosonOperator {
    let size = basis.size();
    let mut m = DMatrix::from_element(size, size, ZERO);
    for n in 1..size {
        m[(n - 1, n)] = Complex64::new(basis.sqrt(n), 0.0);
    }
    BosonOperator {
        matrix: m,
        basis: basis.clone(),
    }
}

pub fn creation(basis: &FockBasis) -> BosonOperator {
    annihilation(basis).adjoint()
}

pub fn number(basis: &FockBasis) -> BosonOperator {
    let size = basis.size();
    let diag = DVector::from_iterator(size, (0..size).map(|n| Complex64::new(n as f64, 0.0)));
    BosonOperator {
        matrix: DMatrix::from_diagonal(&diag),
        basis: basis.clone(),
    }
}

/// `exp(i pi n)`, the oscillator parity.
pub fn parity(basis: &FockBasis) -> BosonOperator {
    let size = basis.size();
    let diag = DVector::from_iterator(
        size,
        (0..size).map(|n| if n % 2 == 0 { ONE } else { -ONE }),
    );
    BosonOperator {
        matrix: DMatrix::from_diagonal(&diag),
        basis: basis.clone(),
    }
}

/// Generalized Laguerre values `L_j^(k)(x)` for `j = 0..count` by the
/// three-term recurrence in the degree.
fn laguerre_sequence(k: usize, x: f64, count: usize, out: &mut Vec<f64>) {
    out.clear();
    if count == 0 {
        return;
    }
    let kf = k as f64;
    out.push(1.0);
    if count == 1 {
        return;
    }
    out.push(1.0 + kf - x);
    for j in 1..count - 1 {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - x) * out[j] - (jf + kf) * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
}

/// `exp(log_prefactor) * lag`, combined in log space so neither factor over- or underflows.
fn scaled(log_prefactor: f64, lag: f64) -> f64 {
    if lag == 0.0 {
        0.0
    } else {
        lag.signum() * (log_prefactor + lag.abs().ln()).exp()
    }
}

/// Displacement operator `D(alpha) = exp(alpha a^dag - alpha^* a)` from the
/// associated-Laguerre closed form of its matrix elements:
///
/// `<m|D|n> = sqrt(n!/m!) alpha^(m-n) e^(-|alpha|^2/2) L_n^(m-n)(|alpha|^2)` for `m >= n`,
/// and `<m|D|n> = sqrt(m!/n!) (-alpha^*)^(n-m) e^(-|alpha|^2/2) L_m^(n-m)(|alpha|^2)` otherwise.
pub fn displacement(alpha: Complex64, basis: &FockBasis) -> Result<BosonOperator> {
    let r = alpha.norm();
    basis.check_displacement(r)?;
    let size = basis.size();
    if r == 0.0 {
        return Ok(identity(basis));
    }
    let x = r * r;
    let ln_r = r.ln();
    let down = alpha / r;
    let up = -alpha.conj() / r;
    let mut m = DMatrix::from_element(size, size, ZERO);
    let mut lag = Vec::with_capacity(size);
    let mut down_pow = ONE;
    let mut up_pow = ONE;
    for k in 0..size {
        laguerre_sequence(k, x, size - k, &mut lag);
        for (j, &l) in lag.iter().enumerate() {
            let (lo, hi) = (j, j + k);
            let log_pref =
                0.5 * (basis.ln_factorial(lo) - basis.ln_factorial(hi)) + k as f64 * ln_r - 0.5 * x;
            let mag = scaled(log_pref, l);
            m[(hi, lo)] = down_pow * mag;
            if k > 0 {
                m[(lo, hi)] = up_pow * mag;
            }
        }
        down_pow *= down;
        up_pow *= up;
    }
    Ok(BosonOperator {
        matrix: m,
        basis: basis.clone(),
    })
}

fn displacement_column(alpha: Complex64, col: usize, basis: &FockBasis) -> DVector<Complex64> {
    let size = basis.size();
    let r = alpha.norm();
    if r == 0.0 {
        let mut v = DVector::from_element(size, ZERO);
        v[col] = ONE;
        return v;
    }
    let x = r * r;
    let ln_r = r.ln();
    let down = alpha / r;
    let up = -alpha.conj() / r;
    let mut lag = Vec::with_capacity(col + 1);
    DVector::from_iterator(
        size,
        (0..size).map(|row| {
            let (lo, hi) = (row.min(col), row.max(col));
            let k = hi - lo;
            laguerre_sequence(k, x, lo + 1, &mut lag);
            let log_pref =
                0.5 * (basis.ln_factorial(lo) - basis.ln_factorial(hi)) + k as f64 * ln_r - 0.5 * x;
            let phase = if row >= col { down } else { up }.powu(k as u32);
            phase * scaled(log_pref, lag[lo])
        }),
    )
}

/// `|alpha; k> = D(alpha)|k>` held in the working space.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacedNumberState {
    alpha: Complex64,
    k: usize,
    coeffs: DVector<Complex64>,
}

impl DisplacedNumberState {
    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &DVector<Complex64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> DVector<Complex64> {
        self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &Self) -> Complex64 {
        self.coeffs.dotc(&other.coeffs)
    }
}

pub fn displaced_number_state(
    alpha: Complex64,
    k: usize,
    basis: &FockBasis,
) -> Result<DisplacedNumberState> {
    if k >= basis.dim() {
        return Err(Error::InvalidParams(format!(
            "Fock index {k} outside the interior (dim {})",
            basis.dim()
        )));
    }
    basis.check_displacement(alpha.norm())?;
    let coeffs = displacement_column(alpha, k, basis);
    let norm = coeffs.norm();
    if norm < 1.0 - TRUNCATION_NORM_TOL {
        return Err(Error::TruncationTooSmall {
            alpha_abs: alpha.norm(),
            size: basis.size(),
            required: displacement_requirement(alpha.norm(), basis.size()),
        });
    }
    Ok(DisplacedNumberState { alpha, k, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn basis(n: usize) -> FockBasis {
        FockBasis::with_default_buffer(n).unwrap()
    }

    #[test]
    fn basis_validation_and_default_buffer() {
        assert!(FockBasis::new(1, 10).is_err());
        assert_eq!(default_buffer(10), 20);
        assert_eq!(default_buffer(100), 25);
        assert_eq!(default_buffer(101), 26);
        let b = FockBasis::new(30, 5).unwrap();
        assert_eq!(b.size(), 35);
        assert_abs_diff_eq!(b.ln_factorial(5), 120f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn ladder_elements() {
        let b = basis(10);
        let a = annihilation(&b);
        assert_eq!(a.matrix()[(0, 1)], ONE);
        assert_abs_diff_eq!(a.matrix()[(1, 2)].re, 2f64.sqrt(), epsilon = 1e-15);
        let mut vac = DVector::from_element(b.size(), ZERO);
        vac[0] = ONE;
        assert_eq!(a.apply(&vac).norm(), 0.0);
        let ad = creation(&b);
        assert_abs_diff_eq!(ad.matrix()[(3, 2)].re, 3f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn number_operator_is_diagonal() {
        let b = basis(10);
        let n = number(&b);
        assert_eq!(n.matrix()[(0, 0)].re, 0.0);
        assert_eq!(n.matrix()[(5, 5)].re, 5.0);
        assert_eq!(n.matrix()[(3, 4)], ZERO);
        let a = annihilation(&b);
        let ada = &a.adjoint() * &a;
        assert!((ada.matrix() - n.matrix()).norm() < 1e-13);
    }

    #[test]
    fn zero_displacement_is_identity() {
        let b = basis(10);
        let d = displacement(ZERO, &b).unwrap();
        assert_eq!(d.matrix(), identity(&b).matrix());
    }

    #[test]
    fn vacuum_element_of_unit_displacement() {
        let b = FockBasis::new(60, 20).unwrap();
        let d = displacement(ONE, &b).unwrap();
        assert_abs_diff_eq!(d.matrix()[(0, 0)].re, (-0.5f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(d.matrix()[(0, 0)].im, 0.0, epsilon = 1e-15);
        // <1|D(alpha)|0> = alpha e^{-|alpha|^2/2}
        assert_abs_diff_eq!(d.matrix()[(1, 0)].re, (-0.5f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(d.matrix()[(0, 1)].re, -(-0.5f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn displacement_rejects_small_truncation() {
        let b = FockBasis::new(10, 0).unwrap();
        let err = displacement(Complex64::new(0.0, 3.0), &b).unwrap_err();
        assert!(matches!(err, Error::TruncationTooSmall { .. }));
        assert!(displaced_number_state(Complex64::new(0.0, 3.0), 1, &b).is_err());
    }

    #[test]
    fn admitting_grows_until_precondition_holds() {
        let b = FockBasis::admitting(80, 4.0).unwrap();
        assert!(b.admits_displacement(4.0));
        let smaller = FockBasis::with_default_buffer(b.dim() - 1).unwrap();
        assert!(!smaller.admits_displacement(4.0));
        assert_eq!(FockBasis::admitting(60, 0.0).unwrap().dim(), 60);
    }

    #[test]
    fn displacement_inverse_on_interior() {
        let b = FockBasis::new(40, 60).unwrap();
        let alpha = Complex64::new(0.7, -1.1);
        let d = displacement(alpha, &b).unwrap();
        let dm = displacement(-alpha, &b).unwrap();
        let prod = (&d * &dm).interior();
        let err = (prod - DMatrix::<Complex64>::identity(40, 40)).camax();
        assert!(err < 1e-10, "err = {err}");
        // D(-alpha) = D(alpha)^dag
        assert!((dm.matrix() - d.matrix().adjoint()).camax() < 1e-14);
    }

    #[test]
    fn displaced_state_basics() {
        let b = basis(20);
        let s = displaced_number_state(ZERO, 3, &b).unwrap();
        assert_eq!(s.coeffs()[3], ONE);
        assert_eq!(s.norm(), 1.0);
        assert!(displaced_number_state(ZERO, 20, &b).is_err());

        let b = FockBasis::new(40, 20).unwrap();
        let s = displaced_number_state(Complex64::new(0.0, 1.0), 2, &b).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-10);
        let n = number(&b);
        let mean = s.coeffs().dotc(&n.apply(s.coeffs())).re;
        assert!((mean - 3.0).abs() < 1e-9, "mean = {mean}");
    }

    #[test]
    fn column_matches_matrix() {
        let b = basis(30);
        let alpha = Complex64::new(-0.4, 1.3);
        let d = displacement(alpha, &b).unwrap();
        for k in [0, 1, 7, 20] {
            let s = displaced_number_state(alpha, k, &b).unwrap();
            let col = d.matrix().column(k).into_owned();
            assert!((s.coeffs() - col).camax() < 1e-15);
        }
    }

    #[test]
    fn parity_squares_to_one() {
        let b = basis(10);
        let p = parity(&b);
        assert_eq!((&p * &p).matrix(), identity(&b).matrix());
        assert_eq!(p.matrix()[(3, 3)], -ONE);
    }
}
