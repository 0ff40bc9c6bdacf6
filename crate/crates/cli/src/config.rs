//! Experiment configuration: TOML parsing and per-experiment validation.

use std::path::{Path, PathBuf};

use deltalab::disorder::DistributionSpec;
use deltalab::spectra::{CountingMethod, SolverConfig};
use deltalab::stats::Tiling;
use deltalab::{BoundaryCondition, Dimension, DomainSpec};
use serde::{Deserialize, Serialize};

use crate::output::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    Les,
    Zeta,
    Dos,
    Wegner,
    Minami,
    Fracmom,
    UanaGap,
    Rankone,
    OracleCompare,
}

impl Experiment {
    /// Fields that must be present, beyond `experiment` itself.
    pub fn required(self) -> &'static [&'static str] {
        const MODEL: [&str; 5] = ["dimension", "L", "bc", "realizations", "master_seed"];
        match self {
            Experiment::Spectrum | Experiment::OracleCompare => &["dimension", "L", "bc", "realizations", "master_seed", "window"],
            Experiment::Les => &["dimension", "L", "bc", "realizations", "master_seed", "E0", "w"],
            Experiment::Zeta | Experiment::UanaGap => &["dimension", "L", "bc", "realizations", "master_seed", "E0", "w", "alpha"],
            Experiment::Dos => &MODEL,
            Experiment::Wegner | Experiment::Minami => &["dimension", "L", "bc", "realizations", "master_seed", "E0"],
            Experiment::Fracmom => &["dimension", "L", "bc", "realizations", "master_seed", "E0", "s"],
            Experiment::Rankone => &["trials", "master_seed"],
        }
    }

    /// Whether `E0 = "auto-dos-scan"` is meaningful.
    fn uses_e0(self) -> bool {
        matches!(
            self,
            Experiment::Les | Experiment::Zeta | Experiment::UanaGap | Experiment::Wegner | Experiment::Minami | Experiment::Fracmom
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum E0Spec {
    Value(f64),
    Auto(AutoDos),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoDos {
    #[serde(rename = "auto-dos-scan")]
    Scan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionConfig {
    /// Couplings uniform on `[-b, -a]`.
    Uniform { a: f64, b: f64 },
    TruncatedGaussian { a: f64, b: f64, mean: f64, std_dev: f64 },
    Piecewise { edges: Vec<f64>, density: Vec<f64> },
}

impl Default for DistributionConfig {
    fn default() -> Self {
        DistributionConfig::Uniform { a: 1.0, b: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_root_tol")]
    pub root_tol: f64,
    #[serde(default = "default_image_tol")]
    pub image_tol: f64,
    #[serde(default = "default_cond_cap")]
    pub cond_cap: f64,
}

fn default_root_tol() -> f64 {
    1e-11
}
fn default_image_tol() -> f64 {
    1e-13
}
fn default_cond_cap() -> f64 {
    deltalab::kmatrix::CONDITION_CAP
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { root_tol: default_root_tol(), image_tol: default_image_tol(), cond_cap: default_cond_cap() }
    }
}

/// The config file as written. Every field but `experiment` is optional at
/// the parsing stage; [`Config::validate`] checks the required list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Experiment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bc: Option<BoundaryCondition>,
    #[serde(rename = "E0", skip_serializing_if = "Option::is_none")]
    pub e0: Option<E0Spec>,
    /// Rescaled half-width: points are kept in `[-w, w]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    /// Extra rescaled length above `w` used to close the last gap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extension: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tiling: Option<Tiling>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_distance: Option<f64>,
    /// Physical energy window `[lo, hi)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<f64>>,
    /// DOS scan grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
    /// DOS window width.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Realizations for the DOS pass that fixes `n̂(E_0)` or an automatic `E_0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dos_realizations: Option<u64>,
    /// Test functions `(a, σ, τ)` for the ξ-ζ gap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_functions: Option<Vec<[f64; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// Largest matrix size in the rank-one suite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counting: Option<CountingMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionConfig>,
    #[serde(rename = "realizations", skip_serializing_if = "Option::is_none")]
    pub realizations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Default DOS grid for d = 1 with couplings in `[-3, -1]`.
pub fn default_dos_grid() -> Vec<f64> {
    (0..34).map(|i| -3.5 + 0.1 * i as f64).collect()
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp()).collect()
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(None, format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg
                .strip_prefix("missing field `")
                .and_then(|r| r.split('`').next())
                .map(str::to_string);
            Failure::config(field, msg)
        })
    }

    fn has(&self, field: &str) -> bool {
        match field {
            "dimension" => self.dimension.is_some(),
            "L" => self.l.is_some(),
            "bc" => self.bc.is_some(),
            "E0" => self.e0.is_some(),
            "w" => self.w.is_some(),
            "alpha" => self.alpha.is_some(),
            "s" => self.s.is_some(),
            "window" => self.window.is_some(),
            "trials" => self.trials.is_some(),
            "realizations" => self.realizations.is_some(),
            "master_seed" => self.master_seed.is_some(),
            _ => unreachable!("unknown required field {field}"),
        }
    }

    /// Checks required fields and value ranges. Physical windows must lie in
    /// `(-inf, 0)`; windows around an automatic `E_0` are checked once it is known.
    pub fn validate(&self) -> Result<(), Failure> {
        for f in self.experiment.required() {
            if !self.has(f) {
                return Err(Failure::config(
                    Some(f.to_string()),
                    format!("experiment `{}` requires field `{f}`", self.experiment_name()),
                ));
            }
        }
        let bad = |field: &str, why: String| Err(Failure::config(Some(field.to_string()), why));
        if self.output_dir.is_none() {
            return bad("output_dir", "no output directory in the config or on the command line".into());
        }
        if let Some(d) = self.dimension {
            if Dimension::new(d).is_err() {
                return bad("dimension", format!("dimension must be 1, 2 or 3, got {d}"));
            }
        }
        if let Some(l) = self.l {
            if !(l >= 1.0 && l.is_finite()) {
                return bad("L", format!("L must be at least 1, got {l}"));
            }
        }
        if self.realizations == Some(0) {
            return bad("realizations", "at least one realization is required".into());
        }
        if self.trials == Some(0) {
            return bad("trials", "at least one trial is required".into());
        }
        if let Some(E0Spec::Auto(_)) = self.e0 {
            if !self.experiment.uses_e0() {
                return bad("E0", "auto-dos-scan only applies to experiments with a reference energy".into());
            }
            if self.dimension != Some(1) && self.energies.is_none() {
                return bad("energies", "auto-dos-scan outside d = 1 needs an explicit `energies` grid".into());
            }
        }
        if let Some(E0Spec::Value(e)) = self.e0 {
            if !(e < 0.0) {
                return bad("E0", format!("E0 must be negative, got {e}"));
            }
        }
        if let Some([lo, hi]) = self.window {
            if !(lo < hi && hi < 0.0) {
                return bad("window", format!("window must satisfy lo < hi < 0, got [{lo}, {hi}]"));
            }
        }
        if let Some(w) = self.w {
            if !(w > 0.0) {
                return bad("w", format!("w must be positive, got {w}"));
            }
        }
        if let Some(x) = self.extension {
            if !(x >= 0.0) {
                return bad("extension", format!("extension must be nonnegative, got {x}"));
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return bad("alpha", format!("alpha must lie in (0, 1), got {a}"));
            }
        }
        if let Some(s) = self.s {
            if !(s > 0.0 && s < 1.0) {
                return bad("s", format!("s must lie in (0, 1), got {s}"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return bad("delta", format!("delta must be positive, got {d}"));
            }
        }
        if let Some(es) = &self.energies {
            let d = self.delta();
            if es.is_empty() || es.iter().any(|e| !(e + d / 2.0 < 0.0)) {
                return bad("energies", format!("energies must be nonempty with E + delta/2 < 0 (delta = {d})"));
            }
        }
        if self.experiment == Experiment::Dos && self.energies.is_none() && self.dimension != Some(1) {
            return bad("energies", "a DOS scan outside d = 1 needs an explicit `energies` grid".into());
        }
        if let Some(etas) = &self.etas {
            if etas.len() < 2 || etas.iter().any(|&h| !(h > 0.0)) {
                return bad("etas", "etas needs at least two positive values".into());
            }
        }
        if let Some(tf) = &self.test_functions {
            if tf.is_empty() || tf.iter().any(|t| !(t[0] > 0.0 && t[2] > 0.0)) {
                return bad("test_functions", "test functions need a > 0 and tau > 0".into());
            }
        }
        if let Some(n) = self.max_n {
            if n == 0 {
                return bad("max_n", "max_n must be at least 1".into());
            }
        }
        if let Some(t) = self.tolerances {
            if !(t.root_tol > 0.0 && t.image_tol > 0.0 && t.cond_cap > 0.0 && t.cond_cap < 1.0) {
                return bad("tolerances", "tolerances must be positive, with cond_cap < 1".into());
            }
        }
        if self.experiment == Experiment::OracleCompare && (self.dimension != Some(1) || self.bc != Some(BoundaryCondition::Dirichlet)) {
            return bad("bc", "oracle-compare needs dimension = 1 and bc = \"dirichlet\"".into());
        }
        if self.experiment.required().contains(&"L") {
            self.domain().map_err(|e| Failure::config(Some("L".into()), e.to_string()))?;
        }
        self.distribution_spec()
            .map_err(|e| Failure::config(Some("distribution".into()), e.to_string()))?;
        if let (Some(E0Spec::Value(e0)), Some(w)) = (self.e0, self.w) {
            let vol = self.l.expect("validated").powi(self.dimension.expect("validated") as i32);
            let top = e0 + (w + self.extension.unwrap_or(0.0)) / vol;
            if !(top < 0.0) {
                return bad("w", format!("window around E0 reaches {top} >= 0"));
            }
        }
        Ok(())
    }

    pub fn experiment_name(&self) -> String {
        serde_json::to_value(self.experiment).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
    }

    pub fn domain(&self) -> deltalab::Result<DomainSpec> {
        let dim = Dimension::new(self.dimension.unwrap_or(1))?;
        DomainSpec::cube(dim, self.l.unwrap_or(1.0), self.bc.unwrap_or(BoundaryCondition::Dirichlet))
    }

    pub fn distribution_spec(&self) -> deltalab::Result<DistributionSpec> {
        match self.distribution.clone().unwrap_or_default() {
            DistributionConfig::Uniform { a, b } => DistributionSpec::uniform(a, b),
            DistributionConfig::TruncatedGaussian { a, b, mean, std_dev } => {
                DistributionSpec::truncated_gaussian(a, b, mean, std_dev)
            }
            DistributionConfig::Piecewise { edges, density } => DistributionSpec::piecewise(edges, density),
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.unwrap_or_default()
    }

    pub fn solver(&self) -> SolverConfig {
        let t = self.tolerances();
        SolverConfig {
            tol: t.root_tol,
            green_tol: t.image_tol,
            method: self.counting.unwrap_or(CountingMethod::Auto),
            ..SolverConfig::default()
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.1)
    }

    pub fn dos_realizations(&self) -> u64 {
        self.dos_realizations.unwrap_or(400)
    }

    pub fn dos_grid(&self) -> Vec<f64> {
        self.energies.clone().unwrap_or_else(default_dos_grid)
    }

    pub fn etas(&self) -> Vec<f64> {
        self.etas.clone().unwrap_or_else(|| match self.experiment {
            Experiment::Minami => log_space(1e-2, 0.1, 6),
            _ => log_space(1e-3, 0.1, 7),
        })
    }

    pub fn test_functions(&self) -> Vec<[f64; 3]> {
        self.test_functions
            .clone()
            .unwrap_or_else(|| vec![[1.0, 0.0, 1.0], [0.5, -3.0, 0.5], [2.0, 2.0, 2.0]])
    }

    pub fn realizations(&self) -> u64 {
        self.realizations.unwrap_or(0)
    }

    pub fn seed(&self) -> u64 {
        self.master_seed.unwrap_or(0)
    }
}
