//! Scenario files (TOML) and flag overrides.

use std::path::{Path, PathBuf};

use koopman_lambert::basis::DomainBox;
use koopman_lambert::elements::GravityModel;
use koopman_lambert::lambert::{LambertProblem, SolverConfig};
use koopman_lambert::oracles::IntegratorConfig;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    r0: Option<[f64; 3]>,
    rf: Option<[f64; 3]>,
    tof: Option<f64>,
    revolutions: Option<u32>,
    prograde: Option<bool>,
    order: Option<usize>,
    out: Option<PathBuf>,
    gravity: GravityModel,
    domain: Option<DomainSpec>,
    solver: SolverConfig,
    integrator: IntegratorConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub j2: Option<bool>,
    pub order: Option<usize>,
    pub revolutions: Option<u32>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub problem: LambertProblem,
    /// Largest total polynomial order of the basis.
    pub order: usize,
    /// `None` derives the box from the transfer.
    pub domain: Option<DomainBox>,
    pub solver: SolverConfig,
    pub integrator: IntegratorConfig,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct HashedFields<'a> {
    problem: &'a LambertProblem,
    order: usize,
    domain: Option<&'a DomainBox>,
    solver: &'a SolverConfig,
    integrator: &'a IntegratorConfig,
}

impl Scenario {
    /// Read `path` (or start from an empty file) and apply the overrides.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let Some(p) = path else {
            return Self::resolve(FileConfig::default(), overrides);
        };
        let text = std::fs::read_to_string(p)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
        Self::parse(&text, overrides).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("{}: {m}", p.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, overrides: &Overrides) -> CliResult<Self> {
        let file = toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        Self::resolve(file, overrides)
    }

    fn resolve(file: FileConfig, overrides: &Overrides) -> CliResult<Self> {
        let missing = |name: &str| CliError::Usage(format!("config is missing required field `{name}`"));
        let r0 = file.r0.ok_or_else(|| missing("r0"))?;
        let rf = file.rf.ok_or_else(|| missing("rf"))?;
        let tof = file.tof.ok_or_else(|| missing("tof"))?;
        let mut gravity = file.gravity;
        if let Some(j2) = overrides.j2 {
            gravity.j2_enabled = j2;
        }
        let problem = LambertProblem {
            r0: Vector3::from(r0),
            rf: Vector3::from(rf),
            tof,
            revolutions: overrides.revolutions.or(file.revolutions).unwrap_or(0),
            gravity,
            prograde: file.prograde.unwrap_or(true),
        };
        problem.validate()?;
        file.solver.validate()?;
        file.integrator.validate()?;
        let order = overrides
            .order
            .or(file.order)
            .unwrap_or(if gravity.j2_enabled { 3 } else { 1 });
        if order == 0 {
            return Err(CliError::Usage("order must be at least 1".into()));
        }
        let domain = file.domain.map(|d| DomainBox::new(d.lower, d.upper)).transpose()?;
        Ok(Self {
            problem,
            order,
            domain,
            solver: file.solver,
            integrator: file.integrator,
            out: overrides
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("kolambert-out")),
        })
    }

    /// SHA-256 over every field that influences results (not the output
    /// directory).
    pub fn hash(&self) -> String {
        let fields = HashedFields {
            problem: &self.problem,
            order: self.order,
            domain: self.domain.as_ref(),
            solver: &self.solver,
            integrator: &self.integrator,
        };
        let json = serde_json::to_string(&fields).expect("scenario serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CURTIS: &str = "r0 = [5000.0, 10000.0, 2100.0]\nrf = [-14600.0, 2500.0, 7000.0]\ntof = 3600.0\n";

    #[test]
    fn defaults_fill_everything_but_the_transfer() {
        let s = Scenario::parse(CURTIS, &Overrides::default()).unwrap();
        assert_eq!(s.order, 1);
        assert_eq!(s.problem.revolutions, 0);
        assert!(s.problem.prograde);
        assert!(!s.problem.gravity.j2_enabled);
        assert_eq!(s.solver, SolverConfig::default());
        assert!(s.domain.is_none());
    }

    #[test]
    fn missing_fields_are_named() {
        for (field, text) in [
            ("r0", "rf = [1.0, 2.0, 3.0]\ntof = 1.0\n"),
            ("rf", "r0 = [1.0, 2.0, 3.0]\ntof = 1.0\n"),
            ("tof", "r0 = [1.0, 2.0, 3.0]\nrf = [3.0, 2.0, 1.0]\n"),
        ] {
            let err = Scenario::parse(text, &Overrides::default()).unwrap_err();
            assert!(
                matches!(&err, CliError::Usage(m) if m.contains(&format!("`{field}`"))),
                "{err}"
            );
        }
    }

    #[test]
    fn flags_win_over_file() {
        let text = format!("{CURTIS}order = 2\nrevolutions = 1\n[gravity]\nj2_enabled = false\n");
        let o = Overrides {
            j2: Some(true),
            order: Some(4),
            revolutions: Some(2),
            out: Some("elsewhere".into()),
        };
        let s = Scenario::parse(&text, &o).unwrap();
        assert!(s.problem.gravity.j2_enabled);
        assert_eq!((s.order, s.problem.revolutions), (4, 2));
        assert_eq!(s.out, PathBuf::from("elsewhere"));
    }

    #[test]
    fn j2_defaults_to_order_three() {
        let text = format!("{CURTIS}[gravity]\nj2_enabled = true\n");
        assert_eq!(Scenario::parse(&text, &Overrides::default()).unwrap().order, 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Scenario::parse(&format!("{CURTIS}tolerance = 1.0\n"), &Overrides::default()).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
    }

    #[test]
    fn hash_tracks_results_not_output_location() {
        let a = Scenario::parse(CURTIS, &Overrides::default()).unwrap();
        let mut b = a.clone();
        b.out = "other".into();
        assert_eq!(a.hash(), b.hash());
        b.problem.tof += 1.0;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
