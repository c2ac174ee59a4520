//! Run configuration: a JSON document, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vortex_core::lattice::{reduce_to_fundamental_domain, LatticeShape};
use vortex_core::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Classify,
    Zeros,
    Branch,
    Beta,
    FieldExport,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Classify => "classify",
            Command::Zeros => "zeros",
            Command::Branch => "branch",
            Command::Beta => "beta",
            Command::FieldExport => "field-export",
        }
    }
}

/// Every knob of a run. Unknown JSON keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub tau_re: f64,
    pub tau_im: f64,
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub kappa: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub s_points: usize,
    /// Amplitude of the single state written by `field-export`.
    pub s: f64,
    pub n_max: usize,
    /// Highest Landau level reported by `spectrum`.
    pub levels: usize,
    pub fd_side: usize,
    /// Trapezoid grid side for β.
    pub grid_side: usize,
    pub gauss_order: usize,
    pub gauss_panels: usize,
    /// Samples per side of exported fields.
    pub field_side: usize,
    pub residual_tol: f64,
    pub location_tol: f64,
    pub spectrum_tol: f64,
    pub fd_tol: f64,
    pub quadrature_tol: f64,
    /// Not serialized: artifacts and the config hash do not depend on where they go.
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            tau_re: 0.5,
            tau_im: 3f64.sqrt() / 2.0,
            n: 1,
            k: 2,
            r: 0,
            kappa: 1.0,
            s_min: 1e-3,
            s_max: 0.1,
            s_points: 40,
            s: 0.05,
            n_max: 10,
            levels: 3,
            fd_side: 48,
            grid_side: 64,
            gauss_order: 24,
            gauss_panels: 2,
            field_side: 32,
            residual_tol: 1e-9,
            location_tol: 1e-10,
            spectrum_tol: 1e-10,
            fd_tol: 1e-6,
            quadrature_tol: 1e-6,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Io(PathBuf, std::io::Error),
    Parse(serde_json::Error),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(p, e) => write!(f, "cannot read {}: {e}", p.display()),
            ConfigError::Parse(e) => write!(f, "invalid config JSON: {e}"),
            ConfigError::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(ConfigError::Parse)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        Self::from_json(&text)
    }

    pub fn tau(&self) -> C64 {
        C64::new(self.tau_re, self.tau_im)
    }

    /// Checks every field and replaces τ by its reduced representative.
    pub fn validate(mut self) -> Result<Self, ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.command.is_none() {
            return bad("no command given");
        }
        let tols = [
            ("residual_tol", self.residual_tol),
            ("location_tol", self.location_tol),
            ("spectrum_tol", self.spectrum_tol),
            ("fd_tol", self.fd_tol),
            ("quadrature_tol", self.quadrature_tol),
        ];
        for (name, t) in tols {
            if !(t.is_finite() && t > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be positive, got {t}")));
            }
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return bad("kappa must be positive");
        }
        if !(self.s_min > 0.0 && self.s_max > self.s_min && self.s_max.is_finite()) {
            return bad("need 0 < s_min < s_max");
        }
        if self.s_points < 8 {
            return bad("s_points must be at least 8 for the branch fit");
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return bad("field-export amplitude s must be positive");
        }
        if self.n_max < 2 || self.n_max > 10 {
            return bad("n_max must lie in 2..=10, the range of the reference table");
        }
        if self.fd_side < 16 || self.grid_side < 8 || self.gauss_order < 2 || self.gauss_panels < 1 || self.field_side < 2 {
            return bad("grid sizes too small");
        }
        let tau = reduce_to_fundamental_domain(self.tau()).map_err(|e| ConfigError::Invalid(format!("tau: {e}")))?;
        self.tau_re = tau.re;
        self.tau_im = tau.im;
        LatticeShape::new(tau, self.n, self.k, self.r).map_err(|e| ConfigError::Invalid(format!("(n, k, r): {e}")))?;
        Ok(self)
    }

    /// SHA-256 of the canonical JSON of the validated configuration.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig { command: Some(Command::Zeros), ..RunConfig::default() }
    }

    #[test]
    fn tau_is_reduced() {
        let c = RunConfig { tau_re: 1.5, tau_im: 3f64.sqrt() / 2.0, ..base() }.validate().unwrap();
        assert!((c.tau_re - 0.5).abs() < 1e-12 && (c.tau_im - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig { residual_tol: 0.0, ..base() }.validate().is_err());
        assert!(RunConfig { tau_im: -1.0, ..base() }.validate().is_err());
        assert!(RunConfig { tau_re: 0.0, tau_im: 1.0, k: 6, r: 0, n: 2, ..base() }.validate().is_err());
        assert!(RunConfig { command: None, ..base() }.validate().is_err());
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = base().validate().unwrap();
        let b = RunConfig { kappa: 0.9, ..base() }.validate().unwrap();
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
