use std::fmt::Write as _;

use ionjcm::ansatz::{
    build_ion_eigenstate, closed_form_roots, degeneracy_partner_check, find_roots, Branch, ReducedParams,
    SolveFor, DEFAULT_GRID_POINTS,
};
use ionjcm::fock::{self, FockBasis};
use ionjcm::model::{
    build_h_ion, build_h_jcm_driven, build_t, conjugate, interior_norm_diff, parity_operator, IonParams,
    Picture, Spin, SpinFockOperator,
};
use ionjcm::spectrum::{crossvalidate_roots, parity_commutator, CrossValidationOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use crate::error::CliError;
use crate::output::{object, write_output, Envelope};
use crate::{Context, VerifyArgs};

const SEED: u64 = 0x10_4a_c3;

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

type SuiteResult = Result<(bool, String), ionjcm::Error>;
type Suite<'a> = Box<dyn Fn() -> SuiteResult + 'a>;

fn p(nu: f64, delta: f64, omega: f64, eta: f64) -> IonParams {
    IonParams::new(nu, delta, omega, eta).expect("suite parameters are valid")
}

/// `T` with the sign of its lower-left block flipped.
fn corrupted_t(p: &IonParams, basis: &FockBasis) -> ionjcm::Result<SpinFockOperator> {
    let t = build_t(p, basis)?;
    let ge = -t.block(Spin::Ground, Spin::Excited);
    SpinFockOperator::from_blocks(
        &t.block(Spin::Excited, Spin::Excited),
        &t.block(Spin::Excited, Spin::Ground),
        &ge,
        &t.block(Spin::Ground, Spin::Ground),
        basis,
    )
}

fn transform_equivalence(basis: &FockBasis, draws: usize, corrupt: bool) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let q = p(
            rng.random_range(0.5..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(0.0..2.0),
            rng.random_range(-2.5..2.5),
        );
        let t = if corrupt { corrupted_t(&q, basis)? } else { build_t(&q, basis)? };
        let lhs = conjugate(&build_h_ion(&q, basis)?, &t)?;
        worst = worst.max(interior_norm_diff(&lhs, &build_h_jcm_driven(&q, basis)?)?);
    }
    Ok((worst < 1e-9, format!("max interior diff {worst:.2e} over {draws} draws")))
}

fn recursion() -> SuiteResult {
    let basis = FockBasis::new(60, 100)?;
    let n = fock::number(&basis);
    let mut worst = 0.0f64;
    let mut alphas = vec![Complex64::new(0.0, 0.0)];
    for r in [0.5, 1.5, 3.0] {
        for k in 0..8 {
            alphas.push(Complex64::from_polar(r, std::f64::consts::FRAC_PI_4 * k as f64));
        }
    }
    for alpha in alphas {
        let states = (0..=21)
            .map(|k| fock::displaced_number_state(alpha, k, &basis))
            .collect::<ionjcm::Result<Vec<_>>>()?;
        for k in 0..=20 {
            let mut rhs = states[k].coeffs() * Complex64::from(alpha.norm_sqr() + k as f64)
                + states[k + 1].coeffs() * (alpha * ((k + 1) as f64).sqrt());
            if k > 0 {
                rhs += states[k - 1].coeffs() * (alpha.conj() * (k as f64).sqrt());
            }
            worst = worst.max((n.apply(states[k].coeffs()) - rhs).norm());
        }
    }
    Ok((worst < 1e-9, format!("max residual {worst:.2e} for |alpha| <= 3, k <= 20")))
}

fn parity(basis: &FockBasis) -> SuiteResult {
    let q = p(1.0, 0.0, 0.5, 1.3);
    let comm = parity_commutator(&q, Picture::Ion, basis)?.max(parity_commutator(&q, Picture::Jcm, basis)?);
    let op = parity_operator(Picture::Ion, basis);
    let base = p(1.0, 0.0, 0.5, 0.0);
    let mut worst = 0.0f64;
    for m in 0..=1 {
        for r in find_roots(m, Branch::Plus, SolveFor::Eta2, (0.0, 4.0), &base, DEFAULT_GRID_POINTS)?.roots {
            let q = base.with_eta(r.value.sqrt());
            let plus = build_ion_eigenstate(m, Branch::Plus, &q, basis)?.state;
            let minus = build_ion_eigenstate(m, Branch::Minus, &q, basis)?.state;
            for (sign, v) in [(1.0, &plus + &minus), (-1.0, &plus - &minus)] {
                let v = &v / Complex64::from(v.norm());
                worst = worst.max((op.apply(&v) - &v * Complex64::from(sign)).norm());
            }
        }
    }
    Ok((
        comm < 1e-10 && worst < 1e-8,
        format!("commutator {comm:.2e}, combination residual {worst:.2e}"),
    ))
}

fn closed_form() -> SuiteResult {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (omega, delta) in [(0.5, 0.0), (0.3, 0.2), (1.0, -0.4), (0.7, 1.0)] {
        let q = p(1.0, delta, omega, 0.0);
        for branch in [Branch::Plus, Branch::Minus] {
            for m in 0..=1 {
                let cf = closed_form_roots(m, &ReducedParams::new(&q, branch))?;
                let expected: Vec<f64> = cf.eta2.into_iter().filter(|&x| x > 1e-6).collect();
                let hi = expected.iter().fold(1.0f64, |a, &x| a.max(2.0 * x));
                let found: Vec<f64> = find_roots(m, branch, SolveFor::Eta2, (0.0, hi), &q, DEFAULT_GRID_POINTS)?
                    .roots
                    .into_iter()
                    .map(|r| r.value)
                    .filter(|&x| x > 1e-6)
                    .collect();
                if found.len() != expected.len() {
                    return Ok((false, format!("root count {} vs {} at {q:?}", found.len(), expected.len())));
                }
                for (a, b) in found.iter().zip(&expected) {
                    worst = worst.max((a - b).abs());
                    checked += 1;
                }
            }
        }
    }
    Ok((worst < 1e-10, format!("max |bisection - closed form| {worst:.2e} over {checked} roots")))
}

fn cross_validation(basis: &FockBasis, quick: bool) -> SuiteResult {
    let (m_max, options) = if quick {
        (
            1,
            CrossValidationOptions {
                eta_range: (0.05, 2.0),
                steps: 80,
                n_levels: 6,
            },
        )
    } else {
        (2, CrossValidationOptions::default())
    };
    let cv = crossvalidate_roots(m_max, &p(1.0, 0.0, 0.5, 0.0), basis, &options)?;
    let crossings = cv.roots.iter().filter(|r| r.is_crossing()).count();
    Ok((
        cv.all_roots_are_crossings() && cv.counts_match(),
        format!("{crossings}/{} roots matched to crossings, m <= {m_max}", cv.roots.len()),
    ))
}

fn degeneracy_partner() -> SuiteResult {
    let q = p(1.0, 1.0, 0.5, 0.0);
    let mut worst = 0.0f64;
    for m in 0..=2 {
        let rep = degeneracy_partner_check(m, 1, &q, 12.0)?;
        if !rep.sideband || rep.entries.is_empty() {
            return Ok((false, format!("no plus roots of order {m}")));
        }
        worst = rep.entries.iter().fold(worst, |a, e| a.max(e.partner_ratio));
    }
    Ok((worst < 1e-8, format!("max partner |det|/scale {worst:.2e}, m <= 2")))
}

pub fn run(ctx: &Context, a: &VerifyArgs) -> Result<(), CliError> {
    let dim = if a.quick { 60 } else { ctx.dim };
    let basis = FockBasis::new(dim, ctx.buffer).map_err(CliError::usage)?;
    let mut env = Envelope::new("verify");
    env.set("dim", dim.into());
    env.set("buffer", ctx.buffer.into());
    env.set("quick", a.quick.into());
    if a.corrupt_t {
        env.set("corrupt_t", true.into());
    }
    let draws = if a.quick { 5 } else { 20 };

    let suites: Vec<(&'static str, Suite<'_>)> = vec![
        ("transform-equivalence", Box::new(|| transform_equivalence(&basis, draws, a.corrupt_t))),
        ("recursion", Box::new(recursion)),
        ("parity", Box::new(|| parity(&basis))),
        ("closed-form", Box::new(closed_form)),
        ("cross-validation", Box::new(|| cross_validation(&basis, a.quick))),
        ("degeneracy-partner", Box::new(degeneracy_partner)),
    ];
    let outcomes: Vec<Outcome> = suites
        .into_iter()
        .map(|(name, suite)| match suite() {
            Ok((passed, detail)) => Outcome { name, passed, detail },
            Err(e) => Outcome {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect();

    let mut table = String::new();
    writeln!(table, "{:<22} {:<6} detail", "suite", "status").unwrap();
    for o in &outcomes {
        writeln!(table, "{:<22} {:<6} {}", o.name, if o.passed { "PASS" } else { "FAIL" }, o.detail).unwrap();
    }
    write_output(None, &table)?;

    let all = outcomes.iter().all(|o| o.passed);
    if let Some(out) = ctx.out.as_deref() {
        let list = outcomes
            .iter()
            .map(|o| {
                object([
                    ("detail", Value::from(o.detail.as_str())),
                    ("name", Value::from(o.name)),
                    ("passed", Value::from(o.passed)),
                ])
            })
            .collect();
        let mut body = Map::new();
        body.insert("passed".into(), all.into());
        body.insert("suites".into(), Value::Array(list));
        write_output(Some(out), &env.json_document(body))?;
    }
    if all {
        Ok(())
    } else {
        let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
        Err(CliError::Verification(format!("failed suites: {}", failed.join(", "))))
    }
}
