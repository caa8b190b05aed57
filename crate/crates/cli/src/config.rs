//! Run configuration shared by the subcommands and `run --config`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use zs_core::coefficients::CoefficientPreset;
use zs_core::disk::{BoundaryCoeffMode, DiskModel};
use zs_core::family::MatrixEncoding;
use zs_core::verify::{Suite, SuiteOptions};

use crate::error::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckEllipticity,
    Spectrum,
    Expand,
    Pencil,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    #[serde(alias = "paper_eq_unit")]
    Paper,
    #[serde(alias = "derived_from_b")]
    Derived,
}

impl From<ModeName> for BoundaryCoeffMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Paper => BoundaryCoeffMode::PaperEqUnit,
            ModeName::Derived => BoundaryCoeffMode::DerivedFromB,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub d: f64,
    pub rho: f64,
    pub vartheta: f64,
    pub mode: ModeName,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { d: 0.0, rho: 0.0, vartheta: 1.0, mode: ModeName::Paper }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<DiskModel, AppError> {
        DiskModel::new(self.vartheta, self.d, self.rho, self.mode.into()).map_err(AppError::config)
    }
}

/// Either a closed-form preset or a tabulated CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientConfig {
    pub closed_form: Option<CoefficientPreset>,
    pub table: Option<PathBuf>,
    /// number of quasi-random disk samples for closed forms
    pub samples: usize,
    pub include_origin: bool,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self { closed_form: None, table: None, samples: 400, include_origin: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipticityConfig {
    /// audit this ray; with neither `ray` nor `scan_rays` the optimal ray is used
    pub ray: Option<f64>,
    pub scan_rays: Option<usize>,
    pub ae_fraction: f64,
}

impl Default for EllipticityConfig {
    fn default() -> Self {
        Self { ray: None, scan_rays: None, ae_fraction: zs_core::ellipticity::AE_ZERO_FRACTION }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub kmax: usize,
    pub count: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { kmax: 2, count: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum BuiltinFunction {
    One,
    ReZ,
    ImZ,
    /// 1 − |z|²
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpandConfig {
    pub input: Option<PathBuf>,
    pub function: Option<BuiltinFunction>,
    pub kmax: usize,
    pub nmax: usize,
}

impl Default for ExpandConfig {
    fn default() -> Self {
        Self { input: None, function: None, kmax: 2, nmax: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PencilAction {
    #[default]
    CharValues,
    Solve,
    RayScan,
    Corners,
    Chains,
    DoubleCompleteness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CornerModeName {
    #[default]
    SelfAdjoint,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EncodingName {
    #[default]
    Base64,
    Csv,
}

impl From<EncodingName> for MatrixEncoding {
    fn from(e: EncodingName) -> Self {
        match e {
            EncodingName::Base64 => MatrixEncoding::Base64,
            EncodingName::Csv => MatrixEncoding::Csv,
        }
    }
}

/// Seeded compact perturbation of Dc, or matrices read from a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationConfig {
    /// defaults to the top-level seed
    pub seed: Option<u64>,
    pub norm: f64,
    pub file: Option<PathBuf>,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self { seed: None, norm: 0.3, file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PencilConfig {
    pub family: Option<PathBuf>,
    pub kmax: usize,
    pub n: usize,
    pub perturbation: Option<PerturbationConfig>,
    pub action: PencilAction,
    pub lambda: Option<String>,
    pub rhs: Option<PathBuf>,
    pub phi: f64,
    pub moduli: String,
    pub eps: f64,
    pub corner_mode: CornerModeName,
    pub write_family: Option<PathBuf>,
    pub encoding: EncodingName,
}

impl Default for PencilConfig {
    fn default() -> Self {
        Self {
            family: None,
            kmax: 2,
            n: 6,
            perturbation: None,
            action: PencilAction::CharValues,
            lambda: None,
            rhs: None,
            phi: 0.0,
            moduli: "1:50:2000".into(),
            eps: 1e-6,
            corner_mode: CornerModeName::SelfAdjoint,
            write_family: None,
            encoding: EncodingName::Base64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// all suites when absent
    pub suite: Option<Suite>,
    /// `seed` here is replaced by the top-level seed
    pub options: SuiteOptions,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub remainder_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub boundary_residual: f64,
    pub optimal_ray_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { boundary_residual: 1e-11, optimal_ray_margin: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub coefficients: Option<CoefficientConfig>,
    #[serde(default)]
    pub ellipticity: EllipticityConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub expand: ExpandConfig,
    #[serde(default)]
    pub pencil: PencilConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            seed: 0,
            threads: None,
            model: ModelConfig::default(),
            coefficients: None,
            ellipticity: EllipticityConfig::default(),
            spectrum: SpectrumConfig::default(),
            expand: ExpandConfig::default(),
            pencil: PencilConfig::default(),
            verify: VerifyConfig::default(),
            output: OutputConfig::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        if text.trim().is_empty() {
            return Err(AppError::config_msg("configuration is empty"));
        }
        let cfg: Self = toml::from_str(text).map_err(|e| AppError::config_msg(format!("configuration: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Input paths in a config file are relative to the file.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        if let Some(c) = &mut self.coefficients {
            fix(&mut c.table);
        }
        fix(&mut self.expand.input);
        fix(&mut self.pencil.family);
        fix(&mut self.pencil.rhs);
        if let Some(p) = &mut self.pencil.perturbation {
            fix(&mut p.file);
        }
    }

    /// Checks ranges and required combinations before anything runs.
    pub fn validate(&self) -> Result<(), AppError> {
        self.model.build()?;
        if self.threads == Some(0) {
            return Err(AppError::config_msg("threads must be >= 1"));
        }
        match self.command {
            Command::CheckEllipticity => {
                let c = self
                    .coefficients
                    .as_ref()
                    .ok_or_else(|| AppError::config_msg("check-ellipticity needs a [coefficients] section"))?;
                if c.closed_form.is_some() == c.table.is_some() {
                    return Err(AppError::config_msg("[coefficients] needs exactly one of closed_form or table"));
                }
                if c.table.is_none() && c.samples == 0 {
                    return Err(AppError::config_msg("coefficients.samples must be >= 1"));
                }
                if self.ellipticity.ray.is_some() && self.ellipticity.scan_rays.is_some() {
                    return Err(AppError::config_msg("use either ray or scan_rays, not both"));
                }
                if self.ellipticity.scan_rays == Some(0) {
                    return Err(AppError::config_msg("scan_rays must be >= 1"));
                }
            }
            Command::Spectrum => {
                if self.spectrum.count == 0 {
                    return Err(AppError::config_msg("spectrum.count must be >= 1"));
                }
            }
            Command::Expand => {
                if self.expand.input.is_some() == self.expand.function.is_some() {
                    return Err(AppError::config_msg("expand needs exactly one of input or function"));
                }
                if self.expand.nmax == 0 {
                    return Err(AppError::config_msg("expand.nmax must be >= 1"));
                }
            }
            Command::Pencil => {
                let p = &self.pencil;
                if p.family.is_none() && p.n == 0 {
                    return Err(AppError::config_msg("pencil.n must be >= 1"));
                }
                if p.action == PencilAction::Solve && (p.lambda.is_none() || p.rhs.is_none()) {
                    return Err(AppError::config_msg("solve needs lambda and rhs"));
                }
                if let Some(l) = &p.lambda {
                    parse_complex(l)?;
                }
                if p.action == PencilAction::RayScan {
                    parse_moduli(&p.moduli)?;
                }
                if !(p.eps > 0.0) {
                    return Err(AppError::config_msg("pencil.eps must be > 0"));
                }
                if let Some(pert) = &p.perturbation {
                    if pert.file.is_none() && !(pert.norm >= 0.0) {
                        return Err(AppError::config_msg("perturbation.norm must be >= 0"));
                    }
                }
            }
            Command::Verify => {}
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, recorded in every output header.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn suite_options(&self) -> SuiteOptions {
        SuiteOptions { seed: self.seed, ..self.verify.options.clone() }
    }
}

/// Parses `a+bi`, `a`, `bi`, `a-bi`.
pub fn parse_complex(s: &str) -> Result<num_complex::Complex64, AppError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    t.parse::<num_complex::Complex64>()
        .map_err(|_| AppError::config_msg(format!("cannot parse complex number '{s}' (expected a+bi)")))
}

/// Parses `lo:hi:n` into a modulus grid.
pub fn parse_moduli(s: &str) -> Result<(f64, f64, usize), AppError> {
    let bad = || AppError::config_msg(format!("moduli '{s}' must be lo:hi:n with 0 < lo < hi and n >= 2"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(bad());
    }
    Ok((lo, hi, n))
}
