// SPDX-License-Identifier: Apache-2.0

//! Configuration documents and the commands behind the `magblock` binary.
//!
//! A configuration is one JSON document; every number is in units of κ.
//! Each command returns a serializable report that echoes the configuration
//! it ran with.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{
    analytic_poles, g2_analytic, optimal_deltas, steady_amplitudes, AmplitudeSet, ConditionRoots,
    Factors,
};
use crate::error::{invalid, Error, Result};
use crate::model::{
    full_space, reduce, EffectiveParams, FullModelParams, MAGNON, PUMP, REDUCTION_VALIDITY_RATIO,
    SIGNAL,
};
use crate::steadystate::{g2_zero, liouvillian_for, occupation, solve_steady};
use crate::sweep::{
    find_dips, numeric_point, run_sweep, write_csv, Axis, Column, Dip, G2Cell, Method, OutputFlags,
    ParamField, SolverSpec, SweepResult, SweepSpec,
};
use crate::validate::{run_all, Check, ValidateOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelBlock {
    Effective(EffectiveParams),
    Full(FullModelParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default = "default_cutoff_p")]
    pub cutoff_p: usize,
    #[serde(default = "default_cutoff_m")]
    pub cutoff_m: usize,
    /// Signal-mode cutoff; used by the full model only.
    #[serde(default = "default_cutoff_s")]
    pub cutoff_s: usize,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
}

fn default_cutoff_p() -> usize {
    12
}
fn default_cutoff_m() -> usize {
    6
}
fn default_cutoff_s() -> usize {
    3
}
fn default_method() -> Method {
    Method::SteadyLinear
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            cutoff_p: default_cutoff_p(),
            cutoff_m: default_cutoff_m(),
            cutoff_s: default_cutoff_s(),
            method: default_method(),
            dt: None,
            t_final: None,
        }
    }
}

impl SolverBlock {
    pub fn spec(&self) -> SolverSpec {
        SolverSpec {
            cutoff_p: self.cutoff_p,
            cutoff_m: self.cutoff_m,
            method: self.method,
            dt: self.dt,
            t_final: self.t_final,
        }
    }
}

/// One curve of a sweep: the base parameters with some fields replaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub label: String,
    #[serde(default)]
    pub overrides: BTreeMap<ParamField, f64>,
    /// CSV path; defaults to the output path with `_<label>` appended.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub outputs: OutputFlags,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunBlock>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// CSV destination of a sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Where to write the JSON report in addition to standard output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub output: OutputBlock,
    /// κ/2π in MHz; only carried into reports.
    #[serde(default = "default_kappa_mhz")]
    pub kappa_mhz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_kappa_mhz() -> f64 {
    2.0
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            Error::Config {
                path: e.path().to_string(),
                message: format!("{inner} (line {}, column {})", inner.line(), inner.column()),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config { path: field, message } => {
                Error::Config { path: format!("{}: {field}", path.display()), message }
            }
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match &self.model {
            ModelBlock::Effective(p) => p.validate()?,
            ModelBlock::Full(p) => p.validate()?,
        }
        self.solver.spec().validate()?;
        if self.solver.cutoff_s < 2 {
            return Err(invalid("cutoff_s must be at least 2"));
        }
        if let Some(sweep) = &self.sweep {
            let mut labels: Vec<&str> = sweep.runs.iter().map(|r| r.label.as_str()).collect();
            labels.sort_unstable();
            if labels.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid("sweep run labels must be unique"));
            }
            if labels.iter().any(|l| l.is_empty() || l.contains(['/', '\\'])) {
                return Err(invalid("sweep run labels must be non-empty and free of path separators"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn effective(&self) -> Result<EffectiveParams> {
        match self.model {
            ModelBlock::Effective(p) => Ok(p),
            ModelBlock::Full(_) => Err(invalid("this command needs a `model.effective` block")),
        }
    }

    pub fn full(&self) -> Result<FullModelParams> {
        match self.model {
            ModelBlock::Full(p) => Ok(p),
            ModelBlock::Effective(_) => Err(invalid("this command needs a `model.full` block")),
        }
    }
}

/// Command-line overrides applied on top of a configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub cutoff_p: Option<usize>,
    pub cutoff_m: Option<usize>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, mut config: Config) -> Result<Config> {
        if let Some(n) = self.cutoff_p {
            config.solver.cutoff_p = n;
        }
        if let Some(n) = self.cutoff_m {
            config.solver.cutoff_m = n;
        }
        if let Some(s) = self.seed {
            config.seed = Some(s);
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Cutoffs {
    pub p: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    pub m: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyReport {
    pub units: &'static str,
    pub kappa_mhz: f64,
    pub g2_magnon: G2Cell,
    pub occupations: BTreeMap<String, f64>,
    pub residual: f64,
    pub cutoffs: Cutoffs,
    pub method: Method,
    pub config: Config,
}

pub fn cmd_steady(config: &Config) -> Result<SteadyReport> {
    let (g2, occupations, residual, cutoffs) = match config.model {
        ModelBlock::Effective(p) => {
            let pt = numeric_point(&p, &config.solver.spec())?;
            let occ = BTreeMap::from([(PUMP.to_string(), pt.n_photon), (MAGNON.to_string(), pt.n_magnon)]);
            let cut = Cutoffs { p: config.solver.cutoff_p, s: None, m: config.solver.cutoff_m };
            (pt.g2, occ, pt.residual, cut)
        }
        ModelBlock::Full(p) => {
            if config.solver.method != Method::SteadyLinear {
                return Err(invalid("the full model supports the steady-linear method only"));
            }
            let s = &config.solver;
            let space = full_space(s.cutoff_p, s.cutoff_s, s.cutoff_m)?;
            let ss = solve_steady(&liouvillian_for(&p, &space)?)?;
            let g2 = match g2_zero(&ss.rho, MAGNON) {
                Ok(v) => G2Cell::Value(v),
                Err(Error::UndefinedCorrelation { .. }) => G2Cell::Undefined,
                Err(e) => return Err(e),
            };
            let mut occ = BTreeMap::new();
            for label in [PUMP, SIGNAL, MAGNON] {
                occ.insert(label.to_string(), occupation(&ss.rho, label)?);
            }
            let cut = Cutoffs { p: s.cutoff_p, s: Some(s.cutoff_s), m: s.cutoff_m };
            (g2, occ, ss.residual, cut)
        }
    };
    Ok(SteadyReport {
        units: "kappa",
        kappa_mhz: config.kappa_mhz,
        g2_magnon: g2,
        occupations,
        residual,
        cutoffs,
        method: config.solver.method,
        config: config.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub label: Option<String>,
    pub csv: Option<PathBuf>,
    pub rows: usize,
    pub undefined_numeric: usize,
    pub analytic_poles: usize,
    /// Deepest first; 1D sweeps only.
    pub dips: Vec<Dip>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub units: &'static str,
    pub runs: Vec<RunSummary>,
    pub config: Config,
}

fn labelled_path(base: &Path, label: &str) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}_{label}.{ext}"))
}

/// The sweep specs a configuration describes, with their CSV destinations.
pub fn sweep_runs(config: &Config, out: Option<&Path>) -> Result<Vec<(Option<String>, SweepSpec, Option<PathBuf>)>> {
    let base = config.effective()?;
    let sweep = config.sweep.as_ref().ok_or_else(|| invalid("this command needs a `sweep` block"))?;
    let csv = out.map(Path::to_path_buf).or_else(|| config.output.csv.clone());
    let make = |base: EffectiveParams| SweepSpec {
        base,
        axes: sweep.axes.clone(),
        solver: config.solver.spec(),
        outputs: sweep.outputs,
    };
    if sweep.runs.is_empty() {
        return Ok(vec![(None, make(base), csv)]);
    }
    Ok(sweep
        .runs
        .iter()
        .map(|run| {
            let mut p = base;
            for (field, value) in &run.overrides {
                field.set(&mut p, *value);
            }
            let path = match (&run.csv, out, &csv) {
                (Some(own), None, _) => Some(own.clone()),
                (_, _, Some(b)) => Some(labelled_path(b, &run.label)),
                (own, _, None) => own.clone(),
            };
            (Some(run.label.clone()), make(p), path)
        })
        .collect())
}

fn summarize(label: Option<String>, csv: Option<PathBuf>, result: &SweepResult) -> Result<RunSummary> {
    let dips = if result.spec.axes.len() == 1 && result.spec.outputs.g2_numeric {
        find_dips(result, Column::G2Numeric)?
    } else {
        Vec::new()
    };
    Ok(RunSummary {
        label,
        csv,
        rows: result.rows.len(),
        undefined_numeric: result.rows.iter().filter(|r| r.g2_numeric == Some(G2Cell::Undefined)).count(),
        analytic_poles: result.rows.iter().filter(|r| r.g2_analytic == Some(G2Cell::Pole)).count(),
        dips,
    })
}

/// Runs every sweep of the configuration and writes its CSV files.
pub fn cmd_sweep(config: &Config, out: Option<&Path>) -> Result<(SweepReport, Vec<SweepResult>)> {
    let mut runs = Vec::new();
    let mut results = Vec::new();
    for (label, spec, csv) in sweep_runs(config, out)? {
        log::info!("sweeping {} points{}", spec.point_count(), label.as_deref().map(|l| format!(" ({l})")).unwrap_or_default());
        let result = run_sweep(&spec)?;
        if let Some(path) = &csv {
            write_csv(&result, path)?;
        }
        runs.push(summarize(label, csv, &result)?);
        results.push(result);
    }
    Ok((SweepReport { units: "kappa", runs, config: config.clone() }, results))
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticReport {
    pub units: &'static str,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "Z_plus_g2_X")]
    pub pole_factor: f64,
    pub g2_analytic: G2Cell,
    /// `null` when a denominator vanishes; see `amplitudes_error`.
    pub amplitudes: Option<AmplitudeSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitudes_error: Option<String>,
    pub roots: ConditionRoots,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roots_error: Option<String>,
    /// `Δp` values where `Z + g²X = 0`.
    pub poles_delta_p: Vec<f64>,
    /// `X = 0` holds exactly.
    pub umb_condition_satisfied: bool,
    /// `Y = 0` holds exactly.
    pub cmb_condition_satisfied: bool,
    pub config: Config,
}

pub fn cmd_analytic(config: &Config) -> Result<AnalyticReport> {
    let p = config.effective()?;
    let fac = Factors::new(&p);
    let (amplitudes, amplitudes_error) = match steady_amplitudes(&p) {
        Ok(a) => (Some(a), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let roots = optimal_deltas(&p);
    Ok(AnalyticReport {
        units: "kappa",
        x: fac.x,
        y: fac.y,
        z: fac.z,
        pole_factor: fac.pole(p.g),
        g2_analytic: g2_analytic(&p).map_or(G2Cell::Pole, G2Cell::Value),
        amplitudes,
        amplitudes_error,
        roots,
        roots_error: roots.cmb().err().map(|e| e.to_string()),
        poles_delta_p: analytic_poles(&p),
        umb_condition_satisfied: fac.x == 0.0,
        cmb_condition_satisfied: fac.y == 0.0,
        config: config.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReduceReport {
    pub units: &'static str,
    pub effective: EffectiveParams,
    pub validity_ratio: f64,
    pub warning: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub config: Config,
}

pub fn cmd_reduce(config: &Config) -> Result<ReduceReport> {
    let full = config.full()?;
    let effective = reduce(&full)?;
    let ratio = full.validity_ratio();
    let note = (full.delta_s < 0.0).then(|| {
        "delta_s < 0: chi and g change sign relative to delta_s > 0 (the reverse propagation direction)".to_string()
    });
    Ok(ReduceReport {
        units: "kappa",
        effective,
        validity_ratio: ratio,
        warning: ratio < REDUCTION_VALIDITY_RATIO,
        note,
        config: config.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub passed: bool,
    pub seed: u64,
    pub cutoffs: Cutoffs,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<Config>,
}

/// Runs the self-checks. Cutoffs and seed come from the configuration when
/// one is given, otherwise from the defaults, then from `overrides`.
pub fn cmd_validate(config: Option<&Config>, overrides: &Overrides, flip_kerr_sign: bool) -> Result<ValidateReport> {
    let mut opts = ValidateOptions { flip_kerr_sign, ..Default::default() };
    if let Some(c) = config {
        opts.cutoff_p = c.solver.cutoff_p;
        opts.cutoff_m = c.solver.cutoff_m;
        opts.seed = c.seed.unwrap_or(opts.seed);
    }
    opts.cutoff_p = overrides.cutoff_p.unwrap_or(opts.cutoff_p);
    opts.cutoff_m = overrides.cutoff_m.unwrap_or(opts.cutoff_m);
    opts.seed = overrides.seed.unwrap_or(opts.seed);
    if opts.cutoff_p < 2 || opts.cutoff_m < 2 {
        return Err(invalid("cutoffs must be at least 2"));
    }
    let checks = run_all(&opts);
    Ok(ValidateReport {
        passed: checks.iter().all(|c| c.passed),
        seed: opts.seed,
        cutoffs: Cutoffs { p: opts.cutoff_p, s: None, m: opts.cutoff_m },
        checks,
        config: config.cloned(),
    })
}
