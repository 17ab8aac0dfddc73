//! Subcommand execution and output files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use oflm::covariance::{self, CovModel};
use oflm::error::{Error, Result};
use oflm::kernels::FourierKernelParams;
use oflm::levy::LevyKind;
use oflm::limits::{self, LimitModel, Rescale};
use oflm::mcstats::{self, fmt17, Ensemble};
use oflm::quad::QuadSpec;
use oflm::simulate::{self, MaSimulator, PathModel, RhSimulator, SimOptions, Window};
use oflm::timerev;
use serde_json::{json, Value};

use crate::config::{LimitsConfig, Model, RescaleKind, Validated};

type RVec = DVector<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Simulate,
    Cov,
    Timerev,
    Limits,
    Parseval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ToleranceProfile {
    Default,
    Strict,
}

pub struct Context {
    pub seed: u64,
    pub out: PathBuf,
    pub profile: ToleranceProfile,
}

impl Context {
    fn sim_options(&self, v: &Validated) -> SimOptions {
        let mut opts = v.config.simulation.clone();
        if self.profile == ToleranceProfile::Strict {
            opts.quad = QuadSpec::strict();
        }
        opts
    }

    fn timerev_tol(&self, v: &Validated) -> f64 {
        v.config.timerev.tol.unwrap_or(match self.profile {
            ToleranceProfile::Default => timerev::DEFAULT_TOL,
            ToleranceProfile::Strict => 1e-12,
        })
    }
}

/// Runs one subcommand and returns the files it wrote.
pub fn run(cmd: Command, v: &Validated, ctx: &Context) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&ctx.out)?;
    match cmd {
        Command::Validate => validate(v, ctx),
        Command::Simulate => simulate_paths(v, ctx),
        Command::Cov => cov(v, ctx),
        Command::Timerev => timerev_report(v, ctx),
        Command::Limits => limits_table(v, ctx),
        Command::Parseval => parseval(v, ctx),
    }
}

fn write(ctx: &Context, name: &str, contents: &str) -> Result<PathBuf> {
    let path = ctx.out.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn write_json(ctx: &Context, name: &str, value: &Value) -> Result<PathBuf> {
    write(ctx, name, &(serde_json::to_string_pretty(value).expect("JSON value serializes") + "\n"))
}

fn csv_header(v: &Validated, ctx: &Context, columns: &str) -> String {
    format!("# config_digest={} seed={}\n{columns}\n", v.digest, ctx.seed)
}

fn simulator(model: &Model, grid: &[f64], opts: &SimOptions) -> Result<(Box<dyn PathModel>, Window)> {
    Ok(match model {
        Model::Ma { params, mu } => {
            let s = MaSimulator::new(params.clone(), mu, grid, opts)?;
            let w = s.window().clone();
            (Box::new(s), w)
        }
        Model::Rh { params, mu } => {
            let s = RhSimulator::new(params.clone(), mu, grid, opts)?;
            let w = s.window().clone();
            (Box::new(s), w)
        }
    })
}

fn cov_model(model: &Model) -> Result<CovModel> {
    match model {
        Model::Ma { params, mu } => CovModel::ma(params.clone(), mu),
        Model::Rh { params, mu } => CovModel::rh(params.clone(), mu),
    }
}

fn validate(v: &Validated, ctx: &Context) -> Result<Vec<PathBuf>> {
    let (_, window) = simulator(&v.model, &v.config.grid, &ctx.sim_options(v))?;
    let hurst = cov_model(&v.model)?.hurst().report().clone();
    let report = json!({
        "config_digest": v.digest,
        "valid": true,
        "dim": v.model.dim(),
        "variant": match v.model { Model::Ma { .. } => "ma", Model::Rh { .. } => "rh" },
        "hurst": hurst,
        "normalization_residual": v.normalization_residual,
        "window": { "lo": window.lo, "hi": window.hi, "tail_fraction": window.tail_fraction },
    });
    Ok(vec![write_json(ctx, "validate.json", &report)?])
}

fn simulate_paths(v: &Validated, ctx: &Context) -> Result<Vec<PathBuf>> {
    let (sim, _) = simulator(&v.model, &v.config.grid, &ctx.sim_options(v))?;
    let ens = simulate::simulate_ensemble(sim.as_ref(), v.config.replications, ctx.seed, &v.digest)?;
    let p = ens.dim();
    let cols: Vec<String> = (1..=p).map(|i| format!("X{i}")).collect();
    let mut out = csv_header(v, ctx, &format!("replication,t,{}", cols.join(",")));
    for path in ens.paths() {
        for (k, &t) in path.grid.iter().enumerate() {
            let vals: Vec<String> = path.values[k].iter().map(|x| fmt17(*x)).collect();
            let _ = writeln!(out, "{},{},{}", path.replication, fmt17(t), vals.join(","));
        }
    }
    Ok(vec![write(ctx, "paths.csv", &out)?])
}

fn cov(v: &Validated, ctx: &Context) -> Result<Vec<PathBuf>> {
    let model = cov_model(&v.model)?;
    let spec = ctx.sim_options(v).quad;
    let mut out = csv_header(v, ctx, "s,t,row,col,value");
    for &s in &v.config.grid {
        for &t in &v.config.grid {
            let c = model.cov(s, t, &spec)?;
            for i in 0..c.nrows() {
                for j in 0..c.ncols() {
                    let _ = writeln!(out, "{},{},{},{},{}", fmt17(s), fmt17(t), i + 1, j + 1, fmt17(c[(i, j)]));
                }
            }
        }
    }
    Ok(vec![write(ctx, "cov.csv", &out)?])
}

/// One u-vector per grid time; defaults to a few constant vectors.
fn u_vectors(us: &[Vec<Vec<f64>>], p: usize, n_times: usize) -> Result<Vec<Vec<RVec>>> {
    if us.is_empty() {
        return Ok([0.25, 0.5, 1.0].iter().map(|&u| vec![RVec::from_element(p, u); n_times]).collect());
    }
    us.iter()
        .map(|per_time| {
            if per_time.len() != n_times || per_time.iter().any(|u| u.len() != p) {
                return Err(Error::ValidationError(format!(
                    "each chf point needs {n_times} vectors of length {p}"
                )));
            }
            Ok(per_time.iter().map(|u| RVec::from_column_slice(u)).collect())
        })
        .collect()
}

fn timerev_report(v: &Validated, ctx: &Context) -> Result<Vec<PathBuf>> {
    let tol = ctx.timerev_tol(v);
    let (report, ofbm) = match &v.model {
        Model::Ma { params, mu } => {
            let r = timerev::check_maoflm(params, mu, tol)?;
            let g = match params.m_pair() {
                Some((mp, mm)) => Some(timerev::check_ofbm_time(mp, mm, params.hurst().d(), tol)?),
                None => None,
            };
            (r, g)
        }
        Model::Rh { params, mu } => {
            (timerev::check_rhoflm(params, mu, tol)?, Some(timerev::check_ofbm_fourier(params.a(), tol)))
        }
    };
    let mut value = json!({
        "config_digest": v.digest,
        "tolerance": tol,
        "verdict": report.verdict,
        "report": report,
        "ofbm": ofbm,
    });
    if let Some(emp) = &v.config.timerev.empirical {
        let grid = &v.config.grid;
        if grid.iter().any(|t| *t <= 0.0) {
            return Err(Error::ValidationError("the empirical check needs a positive grid".into()));
        }
        let reversed: Vec<f64> = grid.iter().rev().map(|t| -t).collect();
        let opts = ctx.sim_options(v);
        let us = u_vectors(&emp.us, v.model.dim(), grid.len())?;
        let (fwd, _) = simulator(&v.model, grid, &opts)?;
        let (rev, _) = simulator(&v.model, &reversed, &opts)?;
        let a = simulate::simulate_ensemble(fwd.as_ref(), emp.replications, ctx.seed, &v.digest)?;
        let b = simulate::simulate_ensemble(rev.as_ref(), emp.replications, ctx.seed.wrapping_add(1), &v.digest)?;
        value["empirical"] = json!(timerev::empirical_reversibility(&a, &b, grid, &us)?);
    }
    Ok(vec![write_json(ctx, "timerev.json", &value)?])
}

struct Row {
    scale: f64,
    metric: String,
    value: f64,
    se: Option<f64>,
}

fn limits_table(v: &Validated, ctx: &Context) -> Result<Vec<PathBuf>> {
    let cfg: &LimitsConfig =
        v.config.limits.as_ref().ok_or_else(|| Error::ValidationError("the limits subcommand needs a \"limits\" section".into()))?;
    let grid = &v.config.grid;
    let opts = ctx.sim_options(v);
    let model = match &v.model {
        Model::Ma { params, mu } => LimitModel::Ma { params: params.clone(), mu: mu.clone() },
        Model::Rh { params, mu } => LimitModel::Rh { params: params.clone(), mu: mu.clone() },
    };
    let us = u_vectors(&cfg.us, v.model.dim(), grid.len())?;
    let mut rows = Vec::new();
    for &scale in &cfg.scales {
        let kind = match cfg.rescale {
            RescaleKind::MaLarge => Rescale::MaLarge { c: scale },
            RescaleKind::RhSmall => Rescale::RhSmall { eps: scale },
            RescaleKind::MaLocal => Rescale::MaLocal { eps: scale },
            RescaleKind::RhLarge => Rescale::RhLarge { c: scale },
        };
        let ens = limits::rescaled_ensemble(&kind, &model, grid, v.config.replications, ctx.seed, &opts, &v.digest)?;
        match cfg.rescale {
            RescaleKind::MaLarge | RescaleKind::RhSmall => gaussian_rows(v, &ens, &us, scale, &opts, &mut rows)?,
            RescaleKind::MaLocal | RescaleKind::RhLarge => stable_rows(v, &ens, &us, scale, &opts, &mut rows)?,
        }
    }
    let mut out = csv_header(v, ctx, "scale,metric,value,se");
    for r in rows {
        let se = r.se.map(fmt17).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{se}", fmt17(r.scale), r.metric, fmt17(r.value));
    }
    Ok(vec![write(ctx, "limits.csv", &out)?])
}

fn gaussian_rows(
    v: &Validated,
    ens: &Ensemble,
    us: &[Vec<RVec>],
    scale: f64,
    opts: &SimOptions,
    rows: &mut Vec<Row>,
) -> Result<()> {
    let grid = &v.config.grid;
    let gram = cov_model(&v.model)?.gram(grid, &opts.quad)?;
    let d = limits::gaussian_limit_distance(ens, &gram, grid, us)?;
    rows.push(Row { scale, metric: "cov_max_z".into(), value: d.max_cov_z, se: None });
    rows.push(Row { scale, metric: "chf_distance".into(), value: d.max_chf_distance, se: Some(d.chf_radius) });
    let p = v.model.dim();
    for (k, (kurt, se)) in d.kurtosis.iter().enumerate() {
        let (t, coord) = (grid[k / p], k % p + 1);
        rows.push(Row { scale, metric: format!("kurtosis_t{t}_x{coord}"), value: *kurt, se: Some(*se) });
        if let (Model::Ma { params, mu }, 1) = (&v.model, p) {
            if t != 0.0 {
                match limits::predicted_kurtosis(params, mu, t, &opts.quad) {
                    Ok(base) => rows.push(Row {
                        scale,
                        metric: format!("kurtosis_predicted_t{t}_x1"),
                        value: base / scale,
                        se: None,
                    }),
                    Err(Error::FourthMomentDiverged) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(())
}

fn stable_rows(
    v: &Validated,
    ens: &Ensemble,
    us: &[Vec<RVec>],
    scale: f64,
    opts: &SimOptions,
    rows: &mut Vec<Row>,
) -> Result<()> {
    let grid = &v.config.grid;
    let emp = mcstats::empirical_chf(ens, grid, us)?;
    for (k, (u, (z, radius))) in us.iter().zip(&emp).enumerate() {
        rows.push(Row { scale, metric: format!("chf_re_{k}"), value: z.re, se: Some(*radius) });
        rows.push(Row { scale, metric: format!("chf_im_{k}"), value: z.im, se: Some(*radius) });
        if let Model::Ma { params, mu } = &v.model {
            if let LevyKind::TemperedOpStable(tos) = mu.kind() {
                let limit = limits::opstable_limit_chf(u, grid, params, tos, &opts.quad)?;
                rows.push(Row { scale, metric: format!("limit_re_{k}"), value: limit.re, se: None });
                rows.push(Row { scale, metric: format!("limit_im_{k}"), value: limit.im, se: None });
                rows.push(Row { scale, metric: format!("chf_gap_{k}"), value: (z - limit).norm(), se: Some(*radius) });
            }
        }
    }
    Ok(())
}

fn parseval(v: &Validated, ctx: &Context) -> Result<Vec<PathBuf>> {
    let Model::Ma { params, .. } = &v.model else {
        return Err(Error::ValidationError("parseval needs a moving-average model with m_minus = 0".into()));
    };
    let pc = v.config.parseval;
    let linked = FourierKernelParams::linked_from_time(params)?;
    let residual = covariance::parseval_residual(pc.s, pc.t, params, &linked, &ctx.sim_options(v).quad)?;
    let value = json!({
        "config_digest": v.digest,
        "s": pc.s,
        "t": pc.t,
        "constant": covariance::PARSEVAL_CONSTANT,
        "residual": residual,
    });
    Ok(vec![write_json(ctx, "parseval.json", &value)?])
}

/// Provenance record written next to every run's outputs.
pub fn write_manifest(
    out: &Path,
    cmd: Command,
    digest: &str,
    seed: u64,
    profile: ToleranceProfile,
    threads: usize,
    wall_time: f64,
    outputs: &[PathBuf],
) -> Result<PathBuf> {
    let names: Vec<String> =
        outputs.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
    let value = json!({
        "config_digest": digest,
        "subcommand": format!("{cmd:?}").to_lowercase(),
        "seed": seed,
        "tolerance_profile": format!("{profile:?}").to_lowercase(),
        "threads": threads,
        "versions": { "oflm-lab": env!("CARGO_PKG_VERSION"), "oflm-core": oflm::VERSION },
        "wall_time_seconds": wall_time,
        "outputs": names,
    });
    let path = out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&value).expect("JSON value serializes") + "\n")?;
    Ok(path)
}
