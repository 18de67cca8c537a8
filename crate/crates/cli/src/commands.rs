use std::fmt::Write as _;

use ionjcm::ansatz::{
    build_ion_eigenstate, closed_form_roots, det_ratio, find_roots, jcm_consistency, map_to_jcm, Branch,
    ReducedParams, SolveFor, DEFAULT_GRID_POINTS,
};
use ionjcm::model::IonParams;
use ionjcm::spectrum::{
    asymptotic_convergence, detect_events, scan_spectrum, Classification, CrossingEvent, ScanGrid,
    ScanParameter,
};
use ionjcm::Error;
use serde_json::{Map, Value};

use crate::config::{ion_params, pick, record_params, resolve_basis, Format, DEFAULT_NU};
use crate::error::CliError;
use crate::output::{
    complex_list, events_path, fmt_f64, num, num_list, object, write_output, Envelope,
};
use crate::{AnsatzArgs, AsymptoticsArgs, Context, Physics, RootsArgs, SpectrumArgs};

/// Residual and transform-overlap tolerance for a verified eigenstate.
const STATE_TOL: f64 = 1e-8;
const CLOSED_FORM_TOL: f64 = 1e-10;

fn physics(ctx: &Context, phys: &Physics, delta: f64, omega: f64, eta: f64) -> Result<IonParams, CliError> {
    let f = &ctx.file;
    ion_params(
        pick(phys.nu, f.nu, DEFAULT_NU),
        pick(phys.delta, f.delta, delta),
        pick(phys.omega, f.omega, omega),
        eta,
    )
}

/// Library errors rooted in user input are usage errors.
fn input_error(e: Error) -> CliError {
    match e {
        Error::InvalidParams(_) | Error::EmptyRange { .. } | Error::InvalidBasis(_) => CliError::usage(e),
        other => other.into(),
    }
}

fn eta_from(eta: Option<f64>, eta2: Option<f64>, ctx: &Context) -> Result<Option<f64>, CliError> {
    let eta = eta.or(if eta2.is_some() { None } else { ctx.file.eta });
    let eta2 = eta2.or(if eta.is_some() { None } else { ctx.file.eta2 });
    match (eta, eta2) {
        (Some(e), _) => Ok(Some(e)),
        (None, Some(x)) if x >= 0.0 => Ok(Some(x.sqrt())),
        (None, Some(x)) => Err(CliError::Usage(format!("--eta2 must be non-negative, got {x}"))),
        (None, None) => Ok(None),
    }
}

fn classification_name(c: Classification) -> &'static str {
    match c {
        Classification::Crossing => "crossing",
        Classification::Avoided => "avoided",
    }
}

fn event_json(e: &CrossingEvent) -> Value {
    object([
        ("classification", Value::from(classification_name(e.classification))),
        ("energy", num(e.energy)),
        ("gap", num(e.gap)),
        (
            "line",
            object([
                ("distance", num(e.line.distance)),
                ("energy", num(e.line.energy)),
                ("m", Value::from(e.line.m)),
                ("sign", Value::from(e.line.sign)),
            ]),
        ),
        ("location", num(e.location)),
        ("lower_level", Value::from(e.lower_level)),
    ])
}

pub fn spectrum(ctx: &Context, a: &SpectrumArgs) -> Result<(), CliError> {
    let f = &ctx.file;
    let p = physics(ctx, &a.phys, 0.0, 0.5, 0.0)?;
    let eta_min = pick(a.eta_min, f.eta_min, 0.0);
    let eta_max = pick(a.eta_max, f.eta_max, 4.0);
    let steps = pick(a.steps, f.steps, 400);
    let levels = pick(a.levels, f.levels, 10);
    if eta_max.is_nan() || eta_min.is_nan() || eta_max <= eta_min {
        return Err(CliError::Usage(format!("need eta-max > eta-min, got [{eta_min}, {eta_max}]")));
    }
    if levels == 0 {
        return Err(CliError::Usage("--levels must be positive".into()));
    }
    let format = ctx.format.unwrap_or(Format::Csv);

    let mut env = Envelope::new("spectrum");
    record_params(&mut env, &p);
    env.set("eta_min", num(eta_min));
    env.set("eta_max", num(eta_max));
    env.set("steps", steps.into());
    env.set("levels", levels.into());
    env.set("format", format.name().into());
    let basis = resolve_basis(ctx.dim, ctx.buffer, eta_min.abs().max(eta_max.abs()), 2 * levels, &mut env)?;
    let grid = ScanGrid::linspace(ScanParameter::Eta, eta_min, eta_max, steps).map_err(input_error)?;
    let scan = scan_spectrum(&p, &grid, levels, &basis).map_err(input_error)?;
    env.warnings.extend(scan.warnings.iter().cloned());
    let events = detect_events(&scan, &basis)?;
    let events_json = Value::Array(events.iter().map(event_json).collect());

    let body = match format {
        Format::Csv => {
            let mut s = env.csv_preamble();
            s.push_str("eta,level_index,tracked_id,energy\n");
            for (k, &eta) in grid.values.iter().enumerate() {
                for i in 0..levels {
                    writeln!(
                        s,
                        "{},{},{},{}",
                        fmt_f64(eta),
                        i,
                        scan.track_ids[k][i],
                        fmt_f64(scan.levels[k][i])
                    )
                    .unwrap();
                }
            }
            s
        }
        Format::Json => {
            let mut rows = Vec::with_capacity(grid.len() * levels);
            for (k, &eta) in grid.values.iter().enumerate() {
                for i in 0..levels {
                    rows.push(object([
                        ("energy", num(scan.levels[k][i])),
                        ("eta", num(eta)),
                        ("level_index", Value::from(i)),
                        ("tracked_id", Value::from(scan.track_ids[k][i])),
                    ]));
                }
            }
            let mut body = Map::new();
            body.insert("events".into(), events_json.clone());
            body.insert("rows".into(), Value::Array(rows));
            env.json_document(body)
        }
    };
    write_output(ctx.out.as_deref(), &body)?;
    match ctx.out.as_deref() {
        Some(out) => {
            let mut doc = Map::new();
            doc.insert("events".into(), events_json);
            write_output(Some(&events_path(out)), &env.json_document(doc))?;
        }
        None if format == Format::Csv => {
            eprintln!("ionjcm: events are written next to --out; none written for stdout");
        }
        None => {}
    }
    Ok(())
}

struct RootRow {
    root: f64,
    residual: f64,
    closed_form_match: Option<bool>,
    double_root: bool,
}

pub fn roots(ctx: &Context, a: &RootsArgs) -> Result<(), CliError> {
    let f = &ctx.file;
    let m = pick(a.m, f.m, 0);
    let branch = pick(a.branch, f.branch, Branch::Plus);
    let solve_for = pick(a.solve_for, f.solve_for, SolveFor::Eta2);
    let eta = eta_from(a.eta, a.eta2, ctx)?;
    let eta = match (solve_for, eta) {
        (SolveFor::Eta2, _) => 0.0,
        (_, Some(e)) => e,
        (_, None) => {
            return Err(CliError::Usage(format!(
                "--eta or --eta2 is required when solving for {}",
                solve_name(solve_for)
            )))
        }
    };
    let p = physics(ctx, &a.phys, 0.0, 0.5, eta)?;
    let range = match a.range.as_deref().map(|r| [r[0], r[1]]).or(f.range) {
        Some(r) => r,
        None => match solve_for {
            SolveFor::Eta2 | SolveFor::Omega2 => [0.0, 10.0],
            SolveFor::Delta => [-5.0 * p.nu, 5.0 * p.nu],
        },
    };
    let grid_points = a.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
    let format = ctx.format.unwrap_or(Format::Json);

    let mut env = Envelope::new("roots");
    record_params(&mut env, &p);
    if solve_for != SolveFor::Eta2 {
        env.set("eta", num(p.eta));
    }
    env.set("m", m.into());
    env.set("branch", branch.name().into());
    env.set("solve_for", solve_name(solve_for).into());
    env.set("range", num_list(&range));
    env.set("grid_points", grid_points.into());
    env.set("format", format.name().into());

    let search = find_roots(m, branch, solve_for, (range[0], range[1]), &p, grid_points).map_err(input_error)?;
    let closed = if m <= 1 && solve_for == SolveFor::Eta2 {
        Some(closed_form_roots(m, &ReducedParams::new(&p, branch))?.eta2)
    } else {
        None
    };
    let matches = |x: f64| {
        closed
            .as_ref()
            .map(|cf| cf.iter().any(|&c| (c - x).abs() <= CLOSED_FORM_TOL * x.abs().max(1.0)))
    };
    let mut rows: Vec<RootRow> = search
        .roots
        .iter()
        .map(|r| RootRow {
            root: r.value,
            residual: r.residual,
            closed_form_match: matches(r.value),
            double_root: false,
        })
        .chain(search.double_root_candidates.iter().map(|r| RootRow {
            root: r.value,
            residual: r.residual,
            closed_form_match: matches(r.value),
            double_root: true,
        }))
        .collect();
    rows.sort_by(|x, y| x.root.total_cmp(&y.root));
    if !search.double_root_candidates.is_empty() {
        env.warn(format!(
            "{} double-root candidate(s) without a sign change",
            search.double_root_candidates.len()
        ));
    }

    let body = match format {
        Format::Csv => {
            let mut s = env.csv_preamble();
            s.push_str("m,branch,solve_for,root,det_residual,closed_form_match,double_root_flag\n");
            for r in &rows {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    m,
                    branch.name(),
                    solve_name(solve_for),
                    fmt_f64(r.root),
                    fmt_f64(r.residual),
                    r.closed_form_match.map(|b| b.to_string()).unwrap_or_default(),
                    r.double_root
                )
                .unwrap();
            }
            s
        }
        Format::Json => {
            let list = rows
                .iter()
                .map(|r| {
                    object([
                        ("branch", Value::from(branch.name())),
                        ("closed_form_match", r.closed_form_match.map_or(Value::Null, Value::from)),
                        ("det_residual", num(r.residual)),
                        ("double_root_flag", Value::from(r.double_root)),
                        ("m", Value::from(m)),
                        ("root", num(r.root)),
                        ("solve_for", Value::from(solve_name(solve_for))),
                    ])
                })
                .collect();
            let mut body = Map::new();
            body.insert("roots".into(), Value::Array(list));
            env.json_document(body)
        }
    };
    write_output(ctx.out.as_deref(), &body)
}

fn solve_name(s: SolveFor) -> &'static str {
    match s {
        SolveFor::Eta2 => "eta2",
        SolveFor::Omega2 => "omega2",
        SolveFor::Delta => "delta",
    }
}

/// Nearest `eta^2` root within a relative window, if there is one.
fn polish_eta(m: usize, branch: Branch, p: &IonParams) -> Result<Option<f64>, CliError> {
    let x = p.eta * p.eta;
    if x <= 0.0 {
        return Ok(None);
    }
    let search = find_roots(m, branch, SolveFor::Eta2, (x * (1.0 - 1e-4), x * (1.0 + 1e-4)), p, 64)
        .map_err(input_error)?;
    Ok(search
        .roots
        .iter()
        .map(|r| r.value)
        .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs())))
}

pub fn ansatz(ctx: &Context, a: &AnsatzArgs) -> Result<(), CliError> {
    let f = &ctx.file;
    let m = pick(a.m, f.m, 0);
    let branch = pick(a.branch, f.branch, Branch::Plus);
    let eta = eta_from(a.eta, a.eta2, ctx)?
        .ok_or_else(|| CliError::Usage("ansatz needs --eta or --eta2".into()))?;
    let mut p = physics(ctx, &a.phys, 0.0, 0.5, eta)?;

    let mut env = Envelope::new("ansatz");
    if a.polish {
        if let Some(root) = polish_eta(m, branch, &p)? {
            env.warn(format!("eta2 polished from {} to {}", fmt_f64(p.eta * p.eta), fmt_f64(root)));
            p = p.with_eta(p.eta.signum() * root.sqrt());
        }
    }
    record_params(&mut env, &p);
    env.set("eta", num(p.eta));
    env.set("m", m.into());
    env.set("branch", branch.name().into());
    env.set("emit_state", a.emit_state.into());
    if ctx.format == Some(Format::Csv) {
        env.warn("ansatz output is JSON only; csv request ignored");
    }
    let basis = resolve_basis(ctx.dim, ctx.buffer, p.eta.abs(), m + 2, &mut env)?;

    let st = build_ion_eigenstate(m, branch, &p, &basis)?;
    let jcm = map_to_jcm(&st.solution, &basis)?;
    let check = jcm_consistency(&st.solution, &st.state, &jcm, &basis)?;
    let sol = &st.solution;
    let verified = sol.residual < STATE_TOL
        && check.residual < STATE_TOL
        && check.transform_overlap > 1.0 - STATE_TOL;

    let mut body = Map::new();
    body.insert("branch".into(), branch.name().into());
    body.insert("m".into(), m.into());
    body.insert("energy".into(), num(sol.energy));
    body.insert("det_ratio".into(), num(det_ratio(m, &p, branch)));
    body.insert("d".into(), complex_list(&sol.d));
    body.insert("c".into(), complex_list(&sol.c));
    body.insert("residual_ion".into(), num(sol.residual));
    body.insert("residual_jcm".into(), num(check.residual));
    body.insert("transform_overlap".into(), num(check.transform_overlap));
    body.insert("verified".into(), verified.into());
    if a.emit_state {
        body.insert(
            "state".into(),
            object([
                ("ion", complex_list(st.state.iter())),
                ("jcm", complex_list(jcm.iter())),
                (
                    "layout",
                    Value::from(format!(
                        "e block then g block, Fock levels 0..{} each",
                        basis.size() - 1
                    )),
                ),
            ]),
        );
    }
    write_output(ctx.out.as_deref(), &env.json_document(body))?;
    if verified {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "residual_ion {:e}, residual_jcm {:e}, transform overlap {}",
            sol.residual, check.residual, check.transform_overlap
        )))
    }
}

pub fn asymptotics(ctx: &Context, a: &AsymptoticsArgs) -> Result<(), CliError> {
    let f = &ctx.file;
    let p = physics(ctx, &a.phys, 0.0, 0.5, 0.0)?;
    let eta_list = a
        .eta_list
        .clone()
        .or_else(|| f.eta_list.clone())
        .unwrap_or_else(|| vec![1.0, 2.0, 3.0, 4.0]);
    let levels = pick(a.levels, f.levels, 8);
    if levels == 0 {
        return Err(CliError::Usage("--levels must be positive".into()));
    }
    let format = ctx.format.unwrap_or(Format::Csv);

    let mut env = Envelope::new("asymptotics");
    record_params(&mut env, &p);
    env.set("eta_list", num_list(&eta_list));
    env.set("levels", levels.into());
    env.set("format", format.name().into());
    let eta_abs = eta_list.iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
    let basis = resolve_basis(ctx.dim, ctx.buffer, eta_abs, 2 * levels, &mut env)?;
    let report = asymptotic_convergence(&p, &eta_list, levels, &basis).map_err(input_error)?;

    let body = match format {
        Format::Csv => {
            let mut s = env.csv_preamble();
            writeln!(s, "# distance_monotone: {}", report.distance_monotone).unwrap();
            writeln!(s, "# overlap_monotone: {}", report.overlap_monotone).unwrap();
            s.push_str("eta,level_index,energy,asymptote_distance,overlap\n");
            for row in &report.rows {
                for i in 0..row.eigenvalues.len() {
                    writeln!(
                        s,
                        "{},{},{},{},{}",
                        fmt_f64(row.eta),
                        i,
                        fmt_f64(row.eigenvalues[i]),
                        fmt_f64(row.distances[i]),
                        fmt_f64(row.overlaps[i])
                    )
                    .unwrap();
                }
            }
            s
        }
        Format::Json => {
            let rows = report
                .rows
                .iter()
                .map(|r| {
                    object([
                        ("distances", num_list(&r.distances)),
                        ("eigenvalues", num_list(&r.eigenvalues)),
                        ("eta", num(r.eta)),
                        ("max_distance", num(r.max_distance)),
                        ("min_overlap", num(r.min_overlap)),
                        ("overlaps", num_list(&r.overlaps)),
                    ])
                })
                .collect();
            let mut body = Map::new();
            body.insert("distance_monotone".into(), report.distance_monotone.into());
            body.insert("overlap_monotone".into(), report.overlap_monotone.into());
            body.insert("rows".into(), Value::Array(rows));
            env.json_document(body)
        }
    };
    write_output(ctx.out.as_deref(), &body)
}
