use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{det_ratio, find_roots, Branch, SolveFor, TridiagonalSystem, ROOT_ACCEPT_TOL};
use crate::error::{Error, Result};
use crate::fock::{self, FockBasis};
use crate::model::{self, IonParams, SpinFockState};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);
const KERNEL_TOL: f64 = 1e-8;

/// Coefficients of an exact eigenstate.
///
/// For the plus branch the state is
/// `|g> sum d_n |-i eta; n> + (Omega/nu) |e> sum c_n |n>`; for the minus branch
/// the spin labels are swapped and `eta` enters with the opposite sign.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzSolution {
    pub branch: Branch,
    pub m: usize,
    pub params: IonParams,
    /// `d_0 ..= d_m`, unit norm, `d_0` real and positive.
    pub d: Vec<Complex64>,
    /// `c_0 ..= c_{m+1}`.
    pub c: Vec<Complex64>,
    pub energy: f64,
    /// `||(H_ion - E) psi|| / nu` for the normalized state.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzEigenstate {
    pub solution: AnsatzSolution,
    /// Normalized, in the ion-picture layout `[e; g]`.
    pub state: SpinFockState,
}

fn require_root(m: usize, p: &IonParams, branch: Branch) -> Result<()> {
    let ratio = det_ratio(m, p, branch);
    if ratio.is_nan() || ratio >= ROOT_ACCEPT_TOL {
        return Err(Error::NotAtRoot { ratio });
    }
    Ok(())
}

fn fix_sign(e: &mut DVector<f64>) {
    let norm = e.norm();
    let lead = e.iter().copied().find(|x| x.abs() > 1e-8 * norm).unwrap_or(1.0);
    *e /= norm * lead.signum();
}

fn recursion_kernel(sys: &TridiagonalSystem) -> Option<DVector<f64>> {
    let m = sys.m;
    let eta = sys.eta;
    if eta == 0.0 {
        return None;
    }
    let mut e = DVector::zeros(m + 1);
    e[0] = 1.0;
    for n in 0..m {
        let below = if n > 0 { eta * (n as f64).sqrt() * e[n - 1] } else { 0.0 };
        e[n + 1] = -(sys.eps[m - n] * e[n] + below) / (eta * ((n + 1) as f64).sqrt());
    }
    if !e.iter().all(|x| x.is_finite()) {
        return None;
    }
    let last = sys.eps[0] * e[m] + if m > 0 { eta * (m as f64).sqrt() * e[m - 1] } else { 0.0 };
    let scale = sys
        .eps
        .iter()
        .fold(1.0f64, |acc, x| acc.max(x.abs()))
        .max(eta.abs() * ((m + 1) as f64).sqrt());
    (last.abs() <= KERNEL_TOL * scale * e.norm()).then_some(e)
}

fn inverse_iteration(a: &DMatrix<f64>) -> std::result::Result<DVector<f64>, f64> {
    let k = a.nrows();
    let anorm = a.norm().max(f64::MIN_POSITIVE);
    let mut x = DVector::from_fn(k, |i, _| 1.0 + 0.1 * i as f64);
    x /= x.norm();
    let mut shift = 0.0;
    for _ in 0..4 {
        let shifted = a - DMatrix::identity(k, k) * shift;
        match shifted.lu().solve(&x) {
            Some(y) if y.norm().is_finite() && y.norm() > 0.0 => {
                x = &y / y.norm();
            }
            _ => shift = if shift == 0.0 { 1e-13 * anorm } else { 2.0 * shift },
        }
    }
    let residual = (a * &x).norm() / anorm;
    if residual <= KERNEL_TOL {
        Ok(x)
    } else {
        Err(residual)
    }
}

/// Kernel vector `(d_0, ..., d_m)` of the compatibility matrix, unit norm with
/// `d_0 > 0`.
///
/// Uses the three-term recursion in the real gauge `d_n = i^n e_n` and falls
/// back to inverse iteration when the recursion is unusable.
pub fn null_vector(m: usize, p: &IonParams, branch: Branch) -> Result<DVector<Complex64>> {
    p.validate()?;
    require_root(m, p, branch)?;
    let sys = TridiagonalSystem::new(m, p, branch);
    let mut e = match recursion_kernel(&sys) {
        Some(e) => e,
        None => inverse_iteration(&sys.real_matrix())
            .map_err(|residual| Error::KernelNotFound { residual })?,
    };
    fix_sign(&mut e);
    let mut phase = Complex64::new(1.0, 0.0);
    Ok(DVector::from_iterator(
        m + 1,
        e.iter().map(|&x| {
            let v = phase * x;
            phase *= I;
            v
        }),
    ))
}

fn coefficients(m: usize, p: &IonParams, branch: Branch) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let d = null_vector(m, p, branch)?;
    let eta = branch.sign() * p.eta;
    let mut c: Vec<Complex64> = (0..=m)
        .map(|n| d[n] / (m + 1 - n) as f64)
        .collect();
    c.push(I * (eta * p.nu * p.nu / (p.omega * p.omega)) * ((m + 1) as f64).sqrt() * d[m]);
    Ok((d.iter().copied().collect(), c))
}

fn check_inputs(m: usize, p: &IonParams, basis: &FockBasis) -> Result<()> {
    p.validate()?;
    if p.omega == 0.0 {
        return Err(Error::OmegaZero);
    }
    if m + 2 > basis.dim() {
        return Err(Error::InvalidBasis(format!(
            "order {m} needs at least {} interior levels, have {}",
            m + 2,
            basis.dim()
        )));
    }
    Ok(())
}

/// `sum_n coeffs[n] |alpha; n>`.
fn displaced_sum(coeffs: &[Complex64], alpha: Complex64, basis: &FockBasis) -> Result<DVector<Complex64>> {
    let mut out = DVector::from_element(basis.size(), ZERO);
    for (n, &w) in coeffs.iter().enumerate() {
        let col = fock::displaced_number_state(alpha, n, basis)?;
        out.axpy(w, col.coeffs(), Complex64::new(1.0, 0.0));
    }
    Ok(out)
}

fn stack(e: &DVector<Complex64>, g: &DVector<Complex64>) -> SpinFockState {
    let s = e.len();
    let mut v = DVector::from_element(2 * s, ZERO);
    v.rows_mut(0, s).copy_from(e);
    v.rows_mut(s, s).copy_from(g);
    v
}

fn normalized(mut v: SpinFockState) -> SpinFockState {
    let n = v.norm();
    v /= Complex64::from(n);
    v
}

fn eigen_residual(h: &model::SpinFockOperator, v: &SpinFockState, energy: f64, nu: f64) -> f64 {
    let hv = h.apply(v);
    (hv - v * Complex64::from(energy)).norm() / (nu * v.norm())
}

/// Exact ion-picture eigenstate of order `m` on the given branch.
///
/// Requires `|det M_m| / scale < 1e-8` at `p`.
pub fn build_ion_eigenstate(
    m: usize,
    branch: Branch,
    p: &IonParams,
    basis: &FockBasis,
) -> Result<AnsatzEigenstate> {
    check_inputs(m, p, basis)?;
    let (d, c) = coefficients(m, p, branch)?;
    let eta = branch.sign() * p.eta;
    let displaced = displaced_sum(&d, Complex64::new(0.0, -eta), basis)?;
    let mut bare = DVector::from_element(basis.size(), ZERO);
    for (n, &w) in c.iter().enumerate() {
        bare[n] = w * (p.omega / p.nu);
    }
    let state = normalized(match branch {
        Branch::Plus => stack(&bare, &displaced),
        Branch::Minus => stack(&displaced, &bare),
    });
    let energy = branch.energy(m, p);
    let h = model::build_h_ion(p, basis)?;
    let residual = eigen_residual(&h, &state, energy, p.nu);
    Ok(AnsatzEigenstate {
        solution: AnsatzSolution {
            branch,
            m,
            params: *p,
            d,
            c,
            energy,
            residual,
        },
        state,
    })
}

/// The same eigenstate in the Jaynes-Cummings picture, built directly from the
/// coefficients with `|+-> = (|g> +- |e>)/sqrt 2`:
///
/// plus: `sum_n (d_n |+> - (Omega/nu) c_n |->) ⊗ |-i eta/2; n>`,
/// minus: `sum_n ((Omega/nu) c_n |+> - d_n |->) ⊗ |i eta/2; n>`.
pub fn map_to_jcm(sol: &AnsatzSolution, basis: &FockBasis) -> Result<SpinFockState> {
    let p = &sol.params;
    check_inputs(sol.m, p, basis)?;
    require_root(sol.m, p, sol.branch)?;
    let r = p.omega / p.nu;
    let (plus, minus): (Vec<Complex64>, Vec<Complex64>) = match sol.branch {
        Branch::Plus => (
            pad(&sol.d, sol.c.len()),
            sol.c.iter().map(|&c| -c * r).collect(),
        ),
        Branch::Minus => (
            sol.c.iter().map(|&c| c * r).collect(),
            pad(&sol.d, sol.c.len()).iter().map(|&d| -d).collect(),
        ),
    };
    let alpha = Complex64::new(0.0, -0.5 * sol.branch.sign() * p.eta);
    let h = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
    // |+> has e and g components (1, 1)/sqrt 2, |-> has (-1, 1)/sqrt 2
    let ce: Vec<Complex64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) * h).collect();
    let cg: Vec<Complex64> = plus.iter().zip(&minus).map(|(a, b)| (a + b) * h).collect();
    let e = displaced_sum(&ce, alpha, basis)?;
    let g = displaced_sum(&cg, alpha, basis)?;
    Ok(normalized(stack(&e, &g)))
}

fn pad(v: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = v.to_vec();
    out.resize(len, ZERO);
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JcmConsistency {
    /// `|<T psi_ion | psi_jcm>|`.
    pub transform_overlap: f64,
    /// `||(H_jcm - E) psi_jcm|| / nu`.
    pub residual: f64,
}

/// Compares the direct Jaynes-Cummings construction with `T` applied to the
/// ion-picture state and checks it against `T H_ion T^dag` built from the model.
pub fn jcm_consistency(
    sol: &AnsatzSolution,
    ion_state: &SpinFockState,
    jcm_state: &SpinFockState,
    basis: &FockBasis,
) -> Result<JcmConsistency> {
    let t = model::build_t(&sol.params, basis)?;
    let mapped = t.apply(ion_state);
    let transform_overlap = mapped.dotc(jcm_state).norm() / (mapped.norm() * jcm_state.norm());
    let h = model::build_h_jcm_driven(&sol.params, basis)?;
    let residual = eigen_residual(&h, jcm_state, sol.energy, sol.params.nu);
    Ok(JcmConsistency {
        transform_overlap,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartnerEntry {
    pub eta2: f64,
    /// `|det M+_m| / scale` at the root.
    pub plus_ratio: f64,
    /// `|det M-_{m+k}| / scale` at the same parameters.
    pub partner_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartnerReport {
    pub m: usize,
    pub k: usize,
    /// Whether `delta = k nu` holds, which is when the two branches share an energy.
    pub sideband: bool,
    pub entries: Vec<PartnerEntry>,
}

impl PartnerReport {
    pub fn all_vanish(&self, tol: f64) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(|e| e.partner_ratio < tol)
    }
}

/// At every plus root of order `m` in `eta^2 in (0, eta2_max]`, evaluates the
/// minus determinant of order `m + k`. At `delta = k nu` the energies
/// `(m+1) nu + delta/2` and `(m+k+1) nu - delta/2` coincide and the partner
/// determinant vanishes too.
pub fn degeneracy_partner_check(
    m: usize,
    k: usize,
    p: &IonParams,
    eta2_max: f64,
) -> Result<PartnerReport> {
    let roots = find_roots(
        m,
        Branch::Plus,
        SolveFor::Eta2,
        (0.0, eta2_max),
        p,
        super::DEFAULT_GRID_POINTS,
    )?;
    let entries = roots
        .roots
        .iter()
        .filter(|r| r.value > 0.0)
        .map(|r| {
            let q = p.with_eta(r.value.sqrt());
            PartnerEntry {
                eta2: r.value,
                plus_ratio: det_ratio(m, &q, Branch::Plus),
                partner_ratio: det_ratio(m + k, &q, Branch::Minus),
            }
        })
        .collect();
    Ok(PartnerReport {
        m,
        k,
        sideband: (p.delta / p.nu - k as f64).abs() < 1e-12,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_root(eta2: f64) -> IonParams {
        IonParams::new(1.0, 0.0, 0.5, eta2.sqrt()).unwrap()
    }

    fn m1_upper() -> f64 {
        1.8125 + 1.87890625f64.sqrt()
    }

    fn m1_lower() -> f64 {
        1.8125 - 1.87890625f64.sqrt()
    }

    #[test]
    fn kernel_at_first_order_root() {
        let p = at_root(m1_lower());
        let d = null_vector(1, &p, Branch::Plus).unwrap();
        let ratio = d[1] / d[0];
        assert!(ratio.re.abs() < 1e-12);
        assert!((ratio.im + 2.15636).abs() < 1e-4, "{ratio}");
        assert!(d[0].im == 0.0 && d[0].re > 0.0);
        assert!((d.norm() - 1.0).abs() < 1e-14);
        let sys = TridiagonalSystem::new(1, &p, Branch::Plus);
        assert!((sys.matrix() * &d).norm() < 1e-10);
    }

    #[test]
    fn kernel_rejects_off_root() {
        let p = at_root(1.0);
        assert!(matches!(
            null_vector(1, &p, Branch::Plus),
            Err(Error::NotAtRoot { .. })
        ));
    }

    #[test]
    fn inverse_iteration_handles_zero_coupling() {
        // eta = 0, a = 1 - sd makes eps_0 vanish; the matrix is diagonal
        let p = IonParams::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let d = null_vector(2, &p, Branch::Plus).unwrap();
        assert!((d[2].norm() - 1.0).abs() < 1e-10);
        assert!(d[0].norm() < 1e-10 && d[1].norm() < 1e-10);
    }

    #[test]
    fn c_coefficient_top() {
        let p = at_root(m1_lower());
        let (d, c) = coefficients(1, &p, Branch::Plus).unwrap();
        assert_eq!(c.len(), 3);
        let r = c[2] / d[0];
        assert!((r.norm() - 8.1077).abs() < 1e-3, "{r}");
        assert!((c[0] - d[0] / 2.0).norm() < 1e-15);
    }

    #[test]
    fn ion_eigenstates_have_small_residual() {
        let basis = FockBasis::new(120, 40).unwrap();
        for (m, eta2) in [(0, 0.75), (1, m1_lower()), (1, m1_upper())] {
            let st = build_ion_eigenstate(m, Branch::Plus, &at_root(eta2), &basis).unwrap();
            assert!(st.solution.residual < 1e-8, "m={m}: {}", st.solution.residual);
            assert!((st.state.norm() - 1.0).abs() < 1e-12);
            assert_eq!(st.solution.energy, (m + 1) as f64);
        }
    }

    #[test]
    fn minus_branch_with_detuning() {
        // m = 0 minus: eta^2 = 1 - a - d
        let p = IonParams::new(1.0, 0.3, 0.5, (1.0 - 0.25 - 0.3f64).sqrt()).unwrap();
        let basis = FockBasis::new(60, 30).unwrap();
        let st = build_ion_eigenstate(0, Branch::Minus, &p, &basis).unwrap();
        assert!(st.solution.residual < 1e-8);
        assert!((st.solution.energy - 0.85).abs() < 1e-15);
        assert!(matches!(
            build_ion_eigenstate(0, Branch::Plus, &p, &basis),
            Err(Error::NotAtRoot { .. })
        ));
    }

    #[test]
    fn omega_zero_is_rejected() {
        let p = IonParams::new(1.0, 0.0, 0.0, 1.0).unwrap();
        let basis = FockBasis::new(30, 20).unwrap();
        assert_eq!(
            build_ion_eigenstate(0, Branch::Plus, &p, &basis).unwrap_err(),
            Error::OmegaZero
        );
    }

    #[test]
    fn jcm_state_agrees_with_transform() {
        let basis = FockBasis::new(100, 40).unwrap();
        for branch in [Branch::Plus, Branch::Minus] {
            let st = build_ion_eigenstate(1, branch, &at_root(m1_upper()), &basis).unwrap();
            let jcm = map_to_jcm(&st.solution, &basis).unwrap();
            let chk = jcm_consistency(&st.solution, &st.state, &jcm, &basis).unwrap();
            assert!(chk.transform_overlap > 1.0 - 1e-9, "{branch:?}: {chk:?}");
            assert!(chk.residual < 1e-8, "{branch:?}: {chk:?}");
        }
    }

    #[test]
    fn jcm_map_rejects_non_root() {
        let basis = FockBasis::new(60, 20).unwrap();
        let st = build_ion_eigenstate(0, Branch::Plus, &at_root(0.75), &basis).unwrap();
        let mut sol = st.solution;
        sol.params.eta = 0.0;
        assert!(matches!(map_to_jcm(&sol, &basis), Err(Error::NotAtRoot { .. })));
    }

    #[test]
    fn sideband_partner_determinant_vanishes() {
        let p = IonParams::new(1.0, 1.0, 0.5, 0.0).unwrap();
        let rep = degeneracy_partner_check(0, 1, &p, 5.0).unwrap();
        assert!(rep.sideband);
        assert_eq!(rep.entries.len(), 1);
        assert!((rep.entries[0].eta2 - 1.75).abs() < 1e-10);
        assert!(rep.all_vanish(1e-8), "{rep:?}");

        let off = IonParams::new(1.0, 0.5, 0.5, 0.0).unwrap();
        let rep = degeneracy_partner_check(0, 1, &off, 5.0).unwrap();
        assert!(!rep.sideband);
        assert!(rep.entries.iter().all(|e| e.partner_ratio > 1e-6), "{rep:?}");
    }
}
