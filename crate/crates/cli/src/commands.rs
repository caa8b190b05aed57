//! Execution of a validated [`RunConfig`].

use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;
use zs_core::coefficients::{EllipticCoefficients, TabulatedSample};
use zs_core::disk::{expand_function, expand_samples, find_eigenvalues, DiskModel, DiskSample, Expansion};
use zs_core::ellipticity::{check_ray_with, optimal_ray, scan_rays, Ray};
use zs_core::family::{
    assemble_disk_family, chain_residual, characteristic_values, corner_check, decode_matrix,
    double_completeness_check, hminus_norm, moduli_grid, ray_scan, root_chains, solve, CornerMode, FamilyMatrices,
    MatrixEncoding,
};
use zs_core::linalg::{disk_samples, CMatrix, CVector};
use zs_core::perturb::CompactPerturbation;
use zs_core::report::{Check, Report};
use zs_core::verify::{verify_suite, Suite};

use crate::config::{
    parse_complex, parse_moduli, BuiltinFunction, Command, CornerModeName, PencilAction, RunConfig,
};
use crate::error::AppError;
use crate::output::{json_bytes, num, report_json, Artifacts, Table};

/// What a run produced. Artifacts are written by the caller only when the
/// run got this far.
pub struct Outcome {
    pub artifacts: Artifacts,
    pub report: Report,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.report.gated_pass()
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    hash: String,
    artifacts: Artifacts,
    report: Report,
}

impl<'a> Ctx<'a> {
    fn table(&mut self, path: Option<&Path>, table: &Table) -> Result<(), AppError> {
        let bytes = table.render(&self.hash, self.cfg.seed)?;
        self.artifacts.add(path, bytes);
        Ok(())
    }

    fn out(&self) -> Option<&'a Path> {
        self.cfg.output.out.as_deref()
    }
}

/// Report skeleton echoing the configuration.
pub fn base_report(cfg: &RunConfig) -> Report {
    Report::new(serde_json::json!({ "config": cfg, "config_sha256": cfg.hash() }))
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, AppError> {
    cfg.validate()?;
    let mut ctx = Ctx { cfg, hash: cfg.hash(), artifacts: Artifacts::default(), report: base_report(cfg) };
    match cfg.command {
        Command::CheckEllipticity => check_ellipticity(&mut ctx)?,
        Command::Spectrum => spectrum(&mut ctx)?,
        Command::Expand => expand(&mut ctx)?,
        Command::Pencil => pencil(&mut ctx)?,
        Command::Verify => verify(&mut ctx)?,
    }
    if cfg.command != Command::Verify {
        if let Some(path) = &cfg.output.report {
            ctx.artifacts.add(Some(path), report_json(&ctx.report));
        }
    }
    Ok(Outcome { artifacts: ctx.artifacts, report: ctx.report })
}

fn read(path: &Path) -> Result<String, AppError> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

/// Numeric CSV rows; `#` comment lines and a leading non-numeric header are
/// skipped.
fn numeric_rows(path: &Path, width: Option<usize>) -> Result<Vec<Vec<f64>>, AppError> {
    let text = read(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| AppError::io(path, e))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => {
                if let Some(w) = width {
                    if v.len() != w {
                        return Err(AppError::config_msg(format!(
                            "{}: row {} has {} fields, expected {w}",
                            path.display(),
                            i + 1,
                            v.len()
                        )));
                    }
                }
                rows.push(v);
            }
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(AppError::config_msg(format!("{}: row {}: {e}", path.display(), i + 1)));
            }
        }
    }
    if rows.is_empty() {
        return Err(AppError::config_msg(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

/// Rows `x1..xn, ReA11, ImA11, …, ReAnn, ImAnn, Re a02, Im a02`.
fn read_coefficient_table(path: &Path) -> Result<Vec<TabulatedSample>, AppError> {
    let rows = numeric_rows(path, None)?;
    let width = rows[0].len();
    let n = (1..=4)
        .find(|&n| n + 2 * n * n + 2 == width)
        .ok_or_else(|| AppError::config_msg(format!("{}: {width} columns fit no dimension n <= 4", path.display())))?;
    rows.iter()
        .map(|r| {
            if r.len() != width {
                return Err(AppError::config_msg(format!("{}: ragged rows", path.display())));
            }
            let a = CMatrix::from_fn(n, n, |i, j| {
                let k = n + 2 * (i * n + j);
                Complex64::new(r[k], r[k + 1])
            });
            Ok(TabulatedSample { x: r[..n].to_vec(), a, a02: Complex64::new(r[width - 2], r[width - 1]) })
        })
        .collect()
}

fn check_ellipticity(ctx: &mut Ctx) -> Result<(), AppError> {
    let cfg = ctx.cfg;
    let cc = cfg.coefficients.as_ref().expect("validated");
    let coeffs = match (&cc.closed_form, &cc.table) {
        (Some(preset), _) => preset.build(disk_samples(cc.samples, cc.include_origin))?,
        (None, Some(path)) => EllipticCoefficients::tabulated(read_coefficient_table(path)?)?,
        (None, None) => unreachable!("validated"),
    };
    let decomp = coeffs.phase_decomposition()?;
    let ae = cfg.ellipticity.ae_fraction;
    if let Some(count) = cfg.ellipticity.scan_rays {
        let reports = scan_rays(&decomp, count)?;
        let mut t = Table::new(&["phi_gamma", "theta1", "eta"]);
        for r in &reports {
            t.push(vec![num(r.phi_gamma), num(r.theta1), num(r.eta)]);
        }
        ctx.table(ctx.cfg.output.out.as_deref(), &t)?;
        let best = reports.iter().map(|r| r.theta1).fold(f64::NEG_INFINITY, f64::max);
        ctx.report.push(Check::at_least("best_theta1", best, -1.0 + 1e-12).soft());
        return Ok(());
    }
    let (ray, optimal) = match cfg.ellipticity.ray {
        Some(phi) => (Ray::new(phi), false),
        None => (optimal_ray(&decomp)?, true),
    };
    let r = check_ray_with(&decomp, ray, ae)?;
    ctx.report.push(Check::at_least("theta1", r.theta1, -1.0 + 1e-12).with_detail("theta1 > -1 on the ray"));
    ctx.report.push(Check::at_most("zero_fraction", r.zero_fraction, ae).with_detail("a02 nonvanishing almost everywhere"));
    ctx.report.push(Check::at_least("theta0", r.theta0, f64::MIN_POSITIVE).soft().with_detail("strong ellipticity"));
    if optimal {
        let bound = (decomp.phi / 2.0).cos() - cfg.tolerances.optimal_ray_margin;
        ctx.report.push(Check::at_least("optimal_ray_theta1", r.theta1, bound).with_detail("theta1 >= cos(Phi/2)"));
    }
    ctx.artifacts.add(ctx.out(), json_bytes(&r));
    Ok(())
}

fn spectrum(ctx: &mut Ctx) -> Result<(), AppError> {
    let cfg = ctx.cfg;
    let model = cfg.model.build()?;
    let mut t = Table::new(&["k", "nu", "mu", "lambda_sq", "boundary_residual", "norm_hd"]);
    let mut worst: f64 = 0.0;
    for k in 0..=cfg.spectrum.kmax as i64 {
        for p in find_eigenvalues(&model, k, cfg.spectrum.count).map_err(|e| AppError::from(e).context(format!("k = {k}")))? {
            worst = worst.max(p.residual.abs());
            t.push(vec![k.to_string(), p.nu.to_string(), num(p.mu), num(p.lambda_sq), num(p.residual), num(p.norm_hd)]);
        }
    }
    ctx.report.push(Check::at_most("max_boundary_residual", worst, cfg.tolerances.boundary_residual));
    ctx.table(ctx.out(), &t)
}

fn builtin(f: BuiltinFunction) -> impl Fn(f64, f64) -> Complex64 + Sync {
    move |r: f64, phi: f64| match f {
        BuiltinFunction::One => Complex64::new(1.0, 0.0),
        BuiltinFunction::ReZ => Complex64::new(r * phi.cos(), 0.0),
        BuiltinFunction::ImZ => Complex64::new(r * phi.sin(), 0.0),
        BuiltinFunction::Bump => Complex64::new(1.0 - r * r, 0.0),
    }
}

fn expand(ctx: &mut Ctx) -> Result<(), AppError> {
    let cfg = ctx.cfg;
    let model = cfg.model.build()?;
    let e: Expansion = match (&cfg.expand.input, cfg.expand.function) {
        (Some(path), _) => {
            let samples: Vec<DiskSample> = numeric_rows(path, Some(4))?
                .into_iter()
                .map(|r| DiskSample { x: [r[0], r[1]], value: Complex64::new(r[2], r[3]) })
                .collect();
            expand_samples(&model, &samples, cfg.expand.kmax, cfg.expand.nmax)?
        }
        (None, Some(f)) => expand_function(&model, builtin(f), cfg.expand.kmax, cfg.expand.nmax)?,
        (None, None) => unreachable!("validated"),
    };
    let mut coeffs = Table::new(&["k", "nu", "mu", "coeff_re", "coeff_im"]);
    for c in &e.coefficients {
        coeffs.push(vec![c.k.to_string(), c.nu.to_string(), num(c.mu), num(c.coefficient.re), num(c.coefficient.im)]);
    }
    ctx.table(ctx.out(), &coeffs)?;
    if let Some(path) = cfg.output.remainder_out.as_deref() {
        let mut rem = Table::new(&["n", "remainder"]);
        for (i, r) in e.remainder_by_n.iter().enumerate() {
            rem.push(vec![(i + 1).to_string(), num(*r)]);
        }
        ctx.table(Some(path), &rem)?;
    }
    let growth = e.remainder_by_n.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    ctx.report.push(Check::at_most("remainder_increase", growth, 1e-12).with_detail("remainder non-increasing in N"));
    ctx.report.push(Check::at_most("remainder", e.remainder, 1.0).soft());
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbationFile {
    dim: usize,
    #[serde(default)]
    encoding: Option<String>,
    #[serde(rename = "Ds", default)]
    ds: Option<String>,
    #[serde(rename = "Dc", default)]
    dc: Option<String>,
}

fn load_perturbation(path: &Path, dim: usize) -> Result<(CMatrix, CMatrix), AppError> {
    let file: PerturbationFile = serde_json::from_str(&read(path)?)
        .map_err(|e| AppError::config_msg(format!("{}: {e}", path.display())))?;
    if file.dim != dim {
        return Err(AppError::config_msg(format!("{}: dim {} but the family has {dim}", path.display(), file.dim)));
    }
    let enc = match file.encoding.as_deref() {
        None | Some("base64") => MatrixEncoding::Base64,
        Some("csv") => MatrixEncoding::Csv,
        Some(other) => return Err(AppError::config_msg(format!("unknown encoding '{other}'"))),
    };
    let dec = |s: &Option<String>| match s {
        Some(text) => decode_matrix(text, dim, enc).map_err(AppError::from),
        None => Ok(CMatrix::zeros(dim, dim)),
    };
    Ok((dec(&file.ds)?, dec(&file.dc)?))
}

fn build_family(cfg: &RunConfig, model: &DiskModel) -> Result<FamilyMatrices, AppError> {
    let p = &cfg.pencil;
    let mut family = match &p.family {
        Some(path) => FamilyMatrices::from_json(&read(path)?).map_err(|e| AppError::from(e).context(path.display()))?,
        None => assemble_disk_family(model, p.kmax, p.n, None)?,
    };
    if let Some(pert) = &p.perturbation {
        let n = family.dim;
        let (ds, dc) = match &pert.file {
            Some(path) => load_perturbation(path, n)?,
            None => {
                let seed = pert.seed.unwrap_or(cfg.seed);
                (CMatrix::zeros(n, n), CompactPerturbation::new(seed, pert.norm)?.matrix(n))
            }
        };
        let (ds, dc) = (&family.ds + ds, &family.dc + dc);
        family = family.with_perturbations(Some(ds), Some(dc))?;
    }
    Ok(family)
}

fn cplx(z: Complex64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

fn pencil(ctx: &mut Ctx) -> Result<(), AppError> {
    let cfg = ctx.cfg;
    let p = &cfg.pencil;
    let model = cfg.model.build()?;
    let family = build_family(cfg, &model)?;
    if let Some(path) = &p.write_family {
        ctx.artifacts.add(Some(path), family.to_json(MatrixEncoding::from(p.encoding)).into_bytes());
    }
    match p.action {
        PencilAction::CharValues => {
            let cvs = characteristic_values(&family)?;
            let mut t = Table::new(&["lambda_re", "lambda_im", "zeta_re", "zeta_im", "algebraic_multiplicity", "chain_length"]);
            for cv in &cvs {
                let [lr, li] = cplx(cv.lambda);
                let [zr, zi] = cplx(cv.zeta);
                t.push(vec![lr, li, zr, zi, cv.algebraic_multiplicity.to_string(), cv.chain_length.to_string()]);
            }
            ctx.report.push(Check::at_least("characteristic_values", cvs.len() as f64, 0.0).soft());
            ctx.table(ctx.out(), &t)?;
        }
        PencilAction::Solve => {
            let lambda = parse_complex(p.lambda.as_deref().expect("validated"))?;
            let path = p.rhs.as_deref().expect("validated");
            let rows = numeric_rows(path, Some(2))?;
            if rows.len() != family.dim {
                return Err(AppError::config_msg(format!(
                    "{}: {} entries but the family has dimension {}",
                    path.display(),
                    rows.len(),
                    family.dim
                )));
            }
            let rhs = CVector::from_iterator(family.dim, rows.iter().map(|r| Complex64::new(r[0], r[1])));
            let x = solve(&family, lambda, &rhs)?;
            let resid = (family.eval(lambda) * &x - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
            ctx.report.push(Check::at_most("relative_residual", resid, 1e-8));
            if let Ok(h) = hminus_norm(&family, &rhs) {
                ctx.report.push(Check::at_least("rhs_hminus_norm", h, 0.0).soft());
            }
            let mut t = Table::new(&["index", "re", "im"]);
            for (i, v) in x.iter().enumerate() {
                let [re, im] = cplx(*v);
                t.push(vec![i.to_string(), re, im]);
            }
            ctx.table(ctx.out(), &t)?;
        }
        PencilAction::RayScan => {
            let (lo, hi, n) = parse_moduli(&p.moduli)?;
            let scan = ray_scan(&family, Ray::new(p.phi), &moduli_grid(lo, hi, n)?)?;
            let mut t = Table::new(&["modulus", "lambda_re", "lambda_im", "sigma_min", "sigma_min_restricted"]);
            for r in &scan.rows {
                let [lr, li] = cplx(r.lambda);
                t.push(vec![num(r.modulus), lr, li, num(r.sigma_min), num(r.sigma_min_restricted)]);
            }
            ctx.table(ctx.out(), &t)?;
            ctx.report.push(Check::at_least("p1", scan.p1, 0.0).soft());
            ctx.report.push(Check::at_least("q1", scan.q1, 0.0).soft());
            let dips: Vec<String> =
                scan.dips.iter().filter(|d| d.sigma_min < 1e-6).map(|d| format!("{:.12}", d.modulus)).collect();
            ctx.report.push(
                Check::at_least("deep_dips", dips.len() as f64, 0.0)
                    .soft()
                    .with_detail(format!("moduli with sigma_min < 1e-6: [{}]", dips.join(", "))),
            );
        }
        PencilAction::Corners => {
            let cvs = characteristic_values(&family)?;
            let mode = match p.corner_mode {
                CornerModeName::SelfAdjoint => CornerMode::SelfAdjointCompact,
                CornerModeName::General => CornerMode::General,
            };
            let r = corner_check(&cvs, p.eps, model.rho, 2, mode)?;
            let mut t = Table::new(&["lambda_re", "lambda_im", "modulus"]);
            for o in &r.outliers {
                let [lr, li] = cplx(o.lambda);
                t.push(vec![lr, li, num(o.modulus)]);
            }
            ctx.table(ctx.out(), &t)?;
            ctx.report.push(Check::at_least("inside_fraction", r.inside_fraction, 0.0).soft());
            ctx.report.push(Check::at_least("outliers", r.outliers.len() as f64, 0.0).soft());
        }
        PencilAction::Chains => {
            let cvs = characteristic_values(&family)?;
            let mut t = Table::new(&["lambda_re", "lambda_im", "chain", "j", "component", "re", "im"]);
            let mut worst: f64 = 0.0;
            for cv in &cvs {
                for (ci, chain) in root_chains(&family, cv)?.iter().enumerate() {
                    worst = worst.max(chain_residual(&family, chain));
                    for (j, v) in chain.vectors.iter().enumerate() {
                        for (comp, z) in v.iter().enumerate() {
                            let [lr, li] = cplx(chain.lambda0);
                            let [re, im] = cplx(*z);
                            t.push(vec![lr, li, ci.to_string(), j.to_string(), comp.to_string(), re, im]);
                        }
                    }
                }
            }
            ctx.report.push(Check::at_most("max_chain_residual", worst, 1e-8));
            ctx.table(ctx.out(), &t)?;
        }
        PencilAction::DoubleCompleteness => {
            let dc = double_completeness_check(&family)?;
            let mut check = Check::at_least("root_vector_rank", dc.rank as f64, dc.dim as f64);
            check.detail = Some(format!("companion span criterion, {} root vectors", dc.vectors));
            ctx.report.push(check);
            ctx.artifacts.add(ctx.out(), json_bytes(&dc));
        }
    }
    Ok(())
}

fn verify(ctx: &mut Ctx) -> Result<(), AppError> {
    let cfg = ctx.cfg;
    let model = cfg.model.build()?;
    let opts = cfg.suite_options();
    let suites: Vec<Suite> = match cfg.verify.suite {
        Some(s) => vec![s],
        None => Suite::ALL.to_vec(),
    };
    let mut combined = base_report(cfg);
    for s in suites {
        let r = verify_suite(s, &model, &opts);
        for mut check in r.checks {
            if cfg.verify.suite.is_none() {
                check.name = format!("{}.{}", s.name(), check.name);
            }
            combined.push(check);
        }
        if let Some(err) = r.error {
            combined.partial = true;
            let msg = format!("{}: {err}", s.name());
            combined.error = Some(match combined.error.take() {
                Some(prev) => format!("{prev}; {msg}"),
                None => msg,
            });
        }
    }
    let bytes = report_json(&combined);
    if let Some(path) = &cfg.output.report {
        ctx.artifacts.add(Some(path), bytes.clone());
    }
    ctx.artifacts.add(ctx.out(), bytes);
    ctx.report = combined;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EncodingName;

    #[test]
    fn spectrum_rows_and_gate() {
        let mut cfg = RunConfig::new(Command::Spectrum);
        cfg.spectrum.kmax = 2;
        cfg.spectrum.count = 5;
        let out = run(&cfg).unwrap();
        assert!(out.passed());
        let text = String::from_utf8(out.artifacts.files[0].1.clone()).unwrap();
        assert_eq!(text.lines().count(), 2 + 15);
    }

    #[test]
    fn solve_requires_rhs() {
        let mut cfg = RunConfig::new(Command::Pencil);
        cfg.pencil.action = PencilAction::Solve;
        cfg.pencil.lambda = Some("1+1i".into());
        let err = run(&cfg).err().unwrap();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn encodings_map() {
        assert_eq!(MatrixEncoding::from(EncodingName::Csv), MatrixEncoding::Csv);
    }
}
