//! Command-line front end: TOML configs, pipelines, artifacts and plots.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod pipelines;
pub mod plots;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use thiserror::Error;

use tcqpt_core::channels::ChannelError;
use tcqpt_core::dynamics::DynamicsError;
use tcqpt_core::noise::NoiseError;
use tcqpt_core::numerics::{FitError, LinalgError, SpectrumError};
use tcqpt_core::rb::RbError;
use tcqpt_core::tcqpt::QptError;

use config::{Pipeline, RunConfig};
use output::{write_csv, write_json, Artifacts};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    /// 2 for bad configs, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::MissingArtifact(_) | CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::MissingArtifact(_) => "missing_artifact",
            CliError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::MissingArtifact(m) | CliError::Io(m) => m.clone(),
        }
    }
}

impl From<QptError> for CliError {
    fn from(e: QptError) -> Self {
        match e {
            QptError::InvalidConfig(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<RbError> for CliError {
    fn from(e: RbError) -> Self {
        match e {
            RbError::InvalidConfig(m) => CliError::Config(m),
            RbError::Model(q) => q.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<NoiseError> for CliError {
    fn from(e: NoiseError) -> Self {
        match e {
            NoiseError::InvalidSpec(_) | NoiseError::InvalidParams(_) | NoiseError::InconsistentParameters { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

macro_rules! numerical_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Numerical(e.to_string())
            }
        }
    )*};
}

numerical_from!(DynamicsError, ChannelError, FitError, LinalgError, SpectrumError);

/// One invocation of a pipeline.
#[derive(Debug, Clone)]
pub struct RunRequest {
    pub pipeline: Pipeline,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub plot: bool,
}

/// Runs a pipeline into `req.out`. On failure an `error.json` is left in the
/// output directory before the error is returned.
pub fn execute(req: &RunRequest) -> Result<Artifacts, CliError> {
    fs::create_dir_all(&req.out).map_err(|e| CliError::io(&req.out, e))?;
    let started = Instant::now();
    let res = execute_inner(req, started);
    if let Err(e) = &res {
        let body = json!({ "kind": e.kind(), "message": e.message(), "exit_code": e.exit_code() });
        let text = serde_json::to_string_pretty(&body).expect("json") + "\n";
        let path = req.out.join("error.json");
        if let Err(io) = fs::write(&path, text) {
            log::error!("cannot write {}: {io}", path.display());
        }
    }
    res
}

fn load(req: &RunRequest) -> Result<RunConfig, CliError> {
    let mut cfg = match &req.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = cfg.pipeline {
        if p != req.pipeline {
            log::warn!("config names pipeline `{}`, running `{}`", p.name(), req.pipeline.name());
        }
    }
    cfg.pipeline = Some(req.pipeline);
    if let Some(s) = req.seed {
        cfg.sim.seed = s;
    }
    Ok(cfg)
}

fn execute_inner(req: &RunRequest, started: Instant) -> Result<Artifacts, CliError> {
    let cfg = load(req)?;
    let mut art = Artifacts::new(&req.out);
    art.write_text("config.resolved.toml", &cfg.to_toml())?;
    let points = cfg.expand_sweep()?;
    if points.is_empty() {
        let run = pipelines::run(req.pipeline, &cfg, &req.out)?;
        art.extend_flat(&run);
    } else {
        let mut aggregate = Vec::new();
        for (label, sub) in &points {
            log::info!("sweep point {label}");
            let dir = req.out.join(label);
            fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
            let mut sub_art = Artifacts::new(&dir);
            sub_art.write_text("config.resolved.toml", &sub.to_toml())?;
            let run = pipelines::run(req.pipeline, sub, &dir)?;
            sub_art.extend_flat(&run);
            if req.pipeline == Pipeline::Benchmarks {
                let value = label.split_once('=').map(|(_, v)| v).unwrap_or(label);
                aggregate.extend(read_rows(&dir.join("benchmarks.csv"))?.into_iter().map(|mut r| {
                    r.insert(0, value.to_string());
                    r
                }));
            }
            if req.plot {
                for p in plots::render_plots(&dir)? {
                    if let Some(name) = p.file_name().and_then(|n| n.to_str()) {
                        sub_art.push(name);
                    }
                }
            }
            art.extend(label, &sub_art);
        }
        if req.pipeline == Pipeline::Benchmarks {
            write_csv(&mut art, "sweep_benchmarks.csv", &["value", "benchmark", "fidelity", "stderr"], aggregate)?;
        }
    }
    if req.plot {
        // A sweep of a non-benchmark pipeline leaves no CSV at the top level.
        let has_csv = art.files().iter().any(|f| !f.contains('/') && f.ends_with(".csv"));
        if has_csv {
            for p in plots::render_plots(&req.out)? {
                if let Some(name) = p.file_name().and_then(|n| n.to_str()) {
                    art.push(name);
                }
            }
        }
    }
    let manifest = json!({
        "pipeline": req.pipeline.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.sim.seed,
        "files": art.files(),
        "parameters": config::flatten(&cfg),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "threads": rayon::current_num_threads(),
    });
    write_json(&mut art, "manifest.json", &manifest)?;
    Ok(art)
}

fn read_rows(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::MissingArtifact(format!("{}: {e}", path.display())))?;
    r.records()
        .map(|rec| {
            rec.map(|x| x.iter().map(str::to_string).collect())
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        })
        .collect()
}
