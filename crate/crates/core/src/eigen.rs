//! Dense Hermitian eigensolver.
//!
//! Householder reflections reduce the matrix to Hermitian tridiagonal form, a
//! diagonal unitary absorbs the phases of the off-diagonal so the tridiagonal
//! becomes real symmetric, and implicit-shift QL diagonalizes it. The QL
//! rotations are recorded so eigenvectors can be formed for any subset of
//! eigenvalues without accumulating the full rotation product.
//!
//! Works for any `nalgebra::ComplexField` scalar over `f64`, so real symmetric
//! input takes the same path with half the arithmetic.

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};

/// QL sweeps allowed per eigenvalue.
pub const MAX_SWEEPS: usize = 50;

/// Relative Hermiticity tolerance accepted on input.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub trait Scalar: ComplexField<RealField = f64> + Copy {}

impl<T: ComplexField<RealField = f64> + Copy> Scalar for T {}

/// Eigenvalues in ascending order with eigenvectors as the matching columns.
#[derive(Clone, Debug)]
pub struct Eigen<T: Scalar> {
    pub values: Vec<f64>,
    pub vectors: DMatrix<T>,
}

struct Reflector<T> {
    offset: usize,
    u: Vec<T>,
    h: f64,
}

#[derive(Clone, Copy)]
struct Rotation {
    i: usize,
    c: f64,
    s: f64,
}

struct Tridiagonal<T> {
    diag: Vec<f64>,
    off: Vec<f64>,
    phases: Vec<T>,
    reflectors: Vec<Reflector<T>>,
}

fn check_square_hermitian<T: Scalar>(a: &DMatrix<T>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigensolver needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let mut scale = 0.0f64;
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            let aij = a[(i, j)];
            scale = scale.max(aij.modulus());
            dev = dev.max((aij - a[(j, i)].conjugate()).modulus());
        }
    }
    if dev > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

fn tridiagonalize<T: Scalar>(a: &DMatrix<T>) -> Tridiagonal<T> {
    let n = a.nrows();
    // full Hermitian storage, column-major
    let mut w: Vec<T> = a.as_slice().to_vec();
    let mut reflectors = Vec::new();
    let mut p = vec![T::zero(); n];
    for k in 0..n.saturating_sub(2) {
        let off = k + 1;
        let len = n - off;
        let col = k * n;
        let alpha = w[col + off];
        let tail: f64 = (off + 1..n).map(|i| w[col + i].modulus_squared()).sum();
        if tail == 0.0 {
            continue;
        }
        let alpha_abs = alpha.modulus();
        let sigma = (alpha_abs * alpha_abs + tail).sqrt();
        let phase = if alpha_abs == 0.0 {
            T::one()
        } else {
            alpha.unscale(alpha_abs)
        };
        let mut u: Vec<T> = w[col + off..col + n].to_vec();
        u[0] += phase.scale(sigma);
        let h = sigma * (sigma + alpha_abs);

        // p = A_sub u / h
        let p = &mut p[..len];
        p.iter_mut().for_each(|x| *x = T::zero());
        for (jj, &uj) in u.iter().enumerate() {
            let cstart = (off + jj) * n + off;
            let column = &w[cstart..cstart + len];
            for (pi, &aij) in p.iter_mut().zip(column) {
                *pi += aij * uj;
            }
        }
        let inv_h = 1.0 / h;
        p.iter_mut().for_each(|x| *x = x.scale(inv_h));
        let gamma: f64 = u
            .iter()
            .zip(p.iter())
            .map(|(&ui, &pi)| (ui.conjugate() * pi).real())
            .sum::<f64>()
            * inv_h;
        // q = p - gamma/2 u, then A_sub -= q u^H + u q^H
        for (pi, &ui) in p.iter_mut().zip(&u) {
            *pi -= ui.scale(0.5 * gamma);
        }
        for jj in 0..len {
            let uj = u[jj].conjugate();
            let qj = p[jj].conjugate();
            let cstart = (off + jj) * n + off;
            let column = &mut w[cstart..cstart + len];
            for ((aij, &qi), &ui) in column.iter_mut().zip(p.iter()).zip(&u) {
                *aij -= qi * uj + ui * qj;
            }
        }
        let beta = -phase.scale(sigma);
        w[col + off] = beta;
        w[off * n + k] = beta.conjugate();
        for i in off + 1..n {
            w[col + i] = T::zero();
            w[i * n + k] = T::zero();
        }
        reflectors.push(Reflector { offset: off, u, h });
    }

    let diag: Vec<f64> = (0..n).map(|i| w[i * n + i].real()).collect();
    let mut off = vec![0.0; n];
    let mut phases = vec![T::one(); n];
    for i in 0..n.saturating_sub(1) {
        let e = w[i * n + i + 1];
        let mag = e.modulus();
        off[i] = mag;
        phases[i + 1] = if mag == 0.0 {
            phases[i]
        } else {
            phases[i] * e.unscale(mag)
        };
    }
    Tridiagonal {
        diag,
        off,
        phases,
        reflectors,
    }
}

/// Implicit-shift QL on a real symmetric tridiagonal (`off[i]` couples `i` and
/// `i + 1`, `off[n-1]` unused). Eigenvalues are left unsorted in `d`.
fn ql_implicit(d: &mut [f64], off: &mut [f64], mut rotations: Option<&mut Vec<Rotation>>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let e = off;
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::NonConvergence {
                        index: l,
                        sweeps: MAX_SWEEPS,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(rot) = rotations.as_deref_mut() {
                        rot.push(Rotation { i, c, s });
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Forms the tridiagonal eigenvector for QL position `pos` by replaying the
/// recorded rotations on a unit vector.
fn tridiagonal_vector(n: usize, pos: usize, rotations: &[Rotation]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    y[pos] = 1.0;
    for rot in rotations.iter().rev() {
        let (a, b) = (y[rot.i], y[rot.i + 1]);
        y[rot.i] = rot.c * a + rot.s * b;
        y[rot.i + 1] = -rot.s * a + rot.c * b;
    }
    y
}

fn back_transform<T: Scalar>(tri: &Tridiagonal<T>, z: &[f64]) -> DVector<T> {
    let mut v: Vec<T> = tri
        .phases
        .iter()
        .zip(z)
        .map(|(&ph, &zi)| ph.scale(zi))
        .collect();
    for r in tri.reflectors.iter().rev() {
        let sub = &mut v[r.offset..];
        let dot = r
            .u
            .iter()
            .zip(sub.iter())
            .fold(T::zero(), |acc, (&ui, &vi)| acc + ui.conjugate() * vi);
        let coef = dot.unscale(r.h);
        for (vi, &ui) in sub.iter_mut().zip(&r.u) {
            *vi -= ui * coef;
        }
    }
    DVector::from_vec(v)
}

fn sorted_positions(d: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    idx
}

fn decompose<T: Scalar>(a: &DMatrix<T>, count: usize) -> Result<Eigen<T>> {
    check_square_hermitian(a)?;
    let n = a.nrows();
    let tri = tridiagonalize(a);
    let mut d = tri.diag.clone();
    let mut e = tri.off.clone();
    let mut rotations = Vec::new();
    ql_implicit(&mut d, &mut e, Some(&mut rotations))?;
    let order = sorted_positions(&d);
    let count = count.min(n);
    let mut vectors = DMatrix::from_element(n, count, T::zero());
    let mut values = Vec::with_capacity(count);
    for (col, &pos) in order.iter().take(count).enumerate() {
        values.push(d[pos]);
        let z = tridiagonal_vector(n, pos, &rotations);
        vectors.set_column(col, &back_transform(&tri, &z));
    }
    Ok(Eigen { values, vectors })
}

/// Full eigendecomposition of a Hermitian matrix: `M V = V diag(lambda)`,
/// eigenvalues ascending.
pub fn hermitian_eigendecomposition<T: Scalar>(a: &DMatrix<T>) -> Result<Eigen<T>> {
    decompose(a, a.nrows())
}

/// The `count` lowest eigenpairs.
pub fn hermitian_lowest<T: Scalar>(a: &DMatrix<T>, count: usize) -> Result<Eigen<T>> {
    decompose(a, count)
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues<T: Scalar>(a: &DMatrix<T>) -> Result<Vec<f64>> {
    check_square_hermitian(a)?;
    let tri = tridiagonalize(a);
    let mut d = tri.diag;
    let mut e = tri.off;
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}
