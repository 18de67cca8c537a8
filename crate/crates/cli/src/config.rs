use std::path::Path;

use ionjcm::ansatz::{Branch, SolveFor};
use ionjcm::fock::FockBasis;
use ionjcm::model::IonParams;
use serde::Deserialize;

use crate::error::CliError;
use crate::output::{num, Envelope};

pub const DEFAULT_NU: f64 = 1.0;
pub const DEFAULT_DIM: usize = 120;
pub const DEFAULT_BUFFER: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Key-value JSON config file. Every key is optional; command-line flags win.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub nu: Option<f64>,
    pub delta: Option<f64>,
    pub omega: Option<f64>,
    pub eta: Option<f64>,
    pub eta2: Option<f64>,
    pub dim: Option<usize>,
    pub buffer: Option<usize>,
    pub format: Option<Format>,
    pub eta_min: Option<f64>,
    pub eta_max: Option<f64>,
    pub steps: Option<usize>,
    pub levels: Option<usize>,
    pub m: Option<usize>,
    pub branch: Option<Branch>,
    pub solve_for: Option<SolveFor>,
    pub range: Option<[f64; 2]>,
    pub eta_list: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Flag value, else config-file value, else default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn ion_params(nu: f64, delta: f64, omega: f64, eta: f64) -> Result<IonParams, CliError> {
    IonParams::new(nu, delta, omega, eta).map_err(CliError::usage)
}

pub fn record_params(env: &mut Envelope, p: &IonParams) {
    env.set("nu", num(p.nu));
    env.set("delta", num(p.delta));
    env.set("omega", num(p.omega));
}

/// Interior size the truncation rule asks for at Lamb-Dicke parameter `eta`.
pub fn rule_dim(eta_abs: f64) -> usize {
    (eta_abs * eta_abs + 6.0 * eta_abs + 40.0).ceil() as usize
}

/// Basis holding displacements up to `eta_abs`: `dim` is raised to the
/// truncation rule, to `min_dim`, and then until the displacement check passes.
pub fn resolve_basis(
    dim: usize,
    buffer: usize,
    eta_abs: f64,
    min_dim: usize,
    env: &mut Envelope,
) -> Result<FockBasis, CliError> {
    if dim < 2 {
        return Err(CliError::Usage(format!("--dim must be at least 2, got {dim}")));
    }
    let mut n = dim.max(rule_dim(eta_abs)).max(min_dim);
    let mut basis = FockBasis::new(n, buffer).map_err(CliError::usage)?;
    while !basis.admits(eta_abs) {
        n += 1;
        basis = FockBasis::new(n, buffer).map_err(CliError::usage)?;
    }
    if n != dim {
        env.warn(format!("dim raised from {dim} to {n} for |eta| = {eta_abs}"));
    }
    env.set("dim", n.into());
    env.set("buffer", buffer.into());
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_is_flag_then_file_then_default() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick(None, None, 3), 3);
    }

    #[test]
    fn config_file_parses_and_rejects_unknown_keys() {
        let c: FileConfig =
            serde_json::from_str(r#"{"omega": 0.5, "branch": "minus", "solve_for": "delta", "range": [-3, 3]}"#)
                .unwrap();
        assert_eq!(c.omega, Some(0.5));
        assert_eq!(c.branch, Some(Branch::Minus));
        assert_eq!(c.solve_for, Some(SolveFor::Delta));
        assert_eq!(c.range, Some([-3.0, 3.0]));
        assert!(serde_json::from_str::<FileConfig>(r#"{"omgea": 0.5}"#).is_err());
    }

    #[test]
    fn basis_is_raised_for_large_eta() {
        let mut env = Envelope::new("spectrum");
        let b = resolve_basis(120, 40, 1.0, 0, &mut env).unwrap();
        assert_eq!(b.dim(), 120);
        assert!(env.warnings.is_empty());
        let b = resolve_basis(120, 40, 4.0, 0, &mut env).unwrap();
        assert!(b.dim() > 120 && b.admits(4.0));
        assert!(!FockBasis::new(b.dim() - 1, 40).unwrap().admits(4.0));
        assert_eq!(env.warnings.len(), 1);
        let b = resolve_basis(50, 40, 2.0, 0, &mut env).unwrap();
        assert_eq!(b.dim(), rule_dim(2.0));
    }
}
