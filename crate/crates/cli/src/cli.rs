//! Command-line flags, each subcommand lowered to a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use zs_core::verify::Suite;

use crate::config::{
    BuiltinFunction, Command, CornerModeName, EncodingName, ModeName, PencilAction, PerturbationConfig, RunConfig,
};
use crate::error::AppError;

#[derive(Debug, Parser)]
#[command(name = "zs", version, about = "Parameter-elliptic mixed problems: ray audits, pencils and the disk model")]
pub struct Cli {
    /// worker threads for parallel loops; ZS_THREADS takes precedence
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Args, Clone)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub d: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub vartheta: f64,
    #[arg(long, value_enum, default_value_t = ModeName::Paper)]
    pub mode: ModeName,
}

#[derive(Debug, Args, Clone)]
pub struct OutArgs {
    /// primary output (default stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report with the gated checks
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Audit the phase of a0^(2) on one ray, the optimal ray, or a ray scan
    CheckEllipticity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true, conflicts_with = "scan_rays")]
        ray: Option<f64>,
        #[arg(long)]
        scan_rays: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Radial eigenvalues of the disk model as CSV
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2)]
        kmax: usize,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Expand samples or a built-in function in the disk eigenbasis
    Expand {
        #[command(flatten)]
        model: ModelArgs,
        /// CSV with columns x1,x2,re,im
        #[arg(long, conflicts_with = "function", required_unless_present = "function")]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        function: Option<BuiltinFunction>,
        #[arg(long, default_value_t = 2)]
        kmax: usize,
        #[arg(long, default_value_t = 20)]
        nmax: usize,
        /// CSV of the remainder after n = 1..N radial modes
        #[arg(long)]
        remainder_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Characteristic values, solves, ray scans, corners and chains of a family
    Pencil(PencilArgs),
    /// Run a property suite and emit a JSON pass/fail report
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        /// all suites when omitted
        #[arg(long)]
        suite: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a TOML configuration file
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct PencilArgs {
    /// family JSON; without it the disk family is assembled from the model flags
    #[arg(long)]
    pub family: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 2)]
    pub kmax: usize,
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// norm of a seeded compact perturbation added to Dc
    #[arg(long, conflicts_with = "perturbation")]
    pub perturb_norm: Option<f64>,
    #[arg(long, requires = "perturb_norm")]
    pub perturb_seed: Option<u64>,
    /// JSON with dim, encoding and optional Ds, Dc blocks
    #[arg(long)]
    pub perturbation: Option<PathBuf>,
    #[arg(long, group = "action")]
    pub char_values: bool,
    #[arg(long, group = "action", requires_all = ["lambda", "rhs"])]
    pub solve: bool,
    #[arg(long)]
    pub lambda: Option<String>,
    /// CSV with one re,im row per component
    #[arg(long)]
    pub rhs: Option<PathBuf>,
    #[arg(long, group = "action")]
    pub ray_scan: bool,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, default_value = "1:50:2000")]
    pub moduli: String,
    #[arg(long, group = "action")]
    pub corners: bool,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = CornerModeName::SelfAdjoint)]
    pub corner_mode: CornerModeName,
    #[arg(long, group = "action")]
    pub chains: bool,
    #[arg(long, group = "action")]
    pub double_completeness: bool,
    #[arg(long)]
    pub write_family: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EncodingName::Base64)]
    pub encoding: EncodingName,
    #[command(flatten)]
    pub out: OutArgs,
}

fn with_model(mut cfg: RunConfig, m: &ModelArgs, out: &OutArgs) -> RunConfig {
    cfg.model.d = m.d;
    cfg.model.rho = m.rho;
    cfg.model.vartheta = m.vartheta;
    cfg.model.mode = m.mode;
    with_out(cfg, out)
}

fn with_out(mut cfg: RunConfig, out: &OutArgs) -> RunConfig {
    cfg.output.out = out.out.clone();
    cfg.output.report = out.report.clone();
    cfg.seed = out.seed;
    cfg
}

impl Sub {
    pub fn into_config(self) -> Result<RunConfig, AppError> {
        Ok(match self {
            Sub::CheckEllipticity { config, ray, scan_rays, out } => {
                let mut cfg = RunConfig::load(&config)?;
                if cfg.command != Command::CheckEllipticity {
                    return Err(AppError::config_msg(format!(
                        "{}: command is {:?}, expected check-ellipticity",
                        config.display(),
                        cfg.command
                    )));
                }
                if ray.is_some() || scan_rays.is_some() {
                    cfg.ellipticity.ray = ray;
                    cfg.ellipticity.scan_rays = scan_rays;
                }
                if out.out.is_some() {
                    cfg.output.out = out.out;
                }
                if out.report.is_some() {
                    cfg.output.report = out.report;
                }
                if out.seed != 0 {
                    cfg.seed = out.seed;
                }
                cfg
            }
            Sub::Spectrum { model, kmax, count, out } => {
                let mut cfg = with_model(RunConfig::new(Command::Spectrum), &model, &out);
                cfg.spectrum.kmax = kmax;
                cfg.spectrum.count = count;
                cfg
            }
            Sub::Expand { model, input, function, kmax, nmax, remainder_out, out } => {
                let mut cfg = with_model(RunConfig::new(Command::Expand), &model, &out);
                cfg.expand.input = input;
                cfg.expand.function = function;
                cfg.expand.kmax = kmax;
                cfg.expand.nmax = nmax;
                cfg.output.remainder_out = remainder_out;
                cfg
            }
            Sub::Pencil(p) => {
                let mut cfg = with_model(RunConfig::new(Command::Pencil), &p.model, &p.out);
                let pc = &mut cfg.pencil;
                pc.family = p.family;
                pc.kmax = p.kmax;
                pc.n = p.n;
                pc.perturbation = match (p.perturb_norm, p.perturbation) {
                    (Some(norm), _) => Some(PerturbationConfig { seed: p.perturb_seed, norm, file: None }),
                    (None, Some(file)) => Some(PerturbationConfig { file: Some(file), ..PerturbationConfig::default() }),
                    (None, None) => None,
                };
                pc.action = if p.solve {
                    PencilAction::Solve
                } else if p.ray_scan {
                    PencilAction::RayScan
                } else if p.corners {
                    PencilAction::Corners
                } else if p.chains {
                    PencilAction::Chains
                } else if p.double_completeness {
                    PencilAction::DoubleCompleteness
                } else {
                    PencilAction::CharValues
                };
                pc.lambda = p.lambda;
                pc.rhs = p.rhs;
                pc.phi = p.phi;
                pc.moduli = p.moduli;
                pc.eps = p.eps;
                pc.corner_mode = p.corner_mode;
                pc.write_family = p.write_family;
                pc.encoding = p.encoding;
                cfg
            }
            Sub::Verify { model, suite, out } => {
                let mut cfg = with_model(RunConfig::new(Command::Verify), &model, &out);
                cfg.verify.suite = suite.map(|s| s.parse::<Suite>()).transpose()?;
                cfg
            }
            Sub::Run { config } => RunConfig::load(&config)?,
        })
    }
}
