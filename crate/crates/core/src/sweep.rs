// SPDX-License-Identifier: Apache-2.0

//! One- and two-dimensional parameter sweeps over the effective model.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{analytic_poles, g2_analytic, optimal_deltas};
use crate::error::{invalid, Error, Result};
use crate::model::{effective_space, EffectiveParams, MAGNON, PUMP};
use crate::steadystate::{
    evolve, g2_zero, liouvillian_for, occupation, solve_steady, DensityDiagnostics, DensityMatrix,
};

/// A sweepable field of [`EffectiveParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ParamField {
    #[serde(rename = "delta_p")]
    DeltaP,
    #[serde(rename = "delta_m")]
    DeltaM,
    #[serde(rename = "chi")]
    Chi,
    #[serde(rename = "g")]
    G,
    #[serde(rename = "F")]
    F,
    #[serde(rename = "kappa")]
    Kappa,
    #[serde(rename = "gamma")]
    Gamma,
}

impl ParamField {
    pub fn name(self) -> &'static str {
        match self {
            ParamField::DeltaP => "delta_p",
            ParamField::DeltaM => "delta_m",
            ParamField::Chi => "chi",
            ParamField::G => "g",
            ParamField::F => "F",
            ParamField::Kappa => "kappa",
            ParamField::Gamma => "gamma",
        }
    }

    pub fn get(self, p: &EffectiveParams) -> f64 {
        match self {
            ParamField::DeltaP => p.delta_p,
            ParamField::DeltaM => p.delta_m,
            ParamField::Chi => p.chi,
            ParamField::G => p.g,
            ParamField::F => p.f,
            ParamField::Kappa => p.kappa,
            ParamField::Gamma => p.gamma,
        }
    }

    pub fn set(self, p: &mut EffectiveParams, value: f64) {
        let slot = match self {
            ParamField::DeltaP => &mut p.delta_p,
            ParamField::DeltaM => &mut p.delta_m,
            ParamField::Chi => &mut p.chi,
            ParamField::G => &mut p.g,
            ParamField::F => &mut p.f,
            ParamField::Kappa => &mut p.kappa,
            ParamField::Gamma => &mut p.gamma,
        };
        *slot = value;
    }
}

impl fmt::Display for ParamField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Linearly spaced values `start, …, stop` (both included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub field: ParamField,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(field: ParamField, start: f64, stop: f64, points: usize) -> Self {
        Axis { field, start, stop, points }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(invalid(format!("axis `{}` has non-finite bounds", self.field)));
        }
        if !(self.start < self.stop) {
            return Err(invalid(format!("axis `{}` needs start < stop", self.field)));
        }
        if self.points < 2 {
            return Err(invalid(format!("axis `{}` needs at least 2 points", self.field)));
        }
        Ok(())
    }

    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.points {
            return self.stop;
        }
        let n = (self.points - 1) as f64;
        (self.start * (n - k as f64) + self.stop * k as f64) / n
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.value(k)).collect()
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.points - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SteadyLinear,
    TimeEvolution,
}

/// Truncation and numerical method for the master-equation side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub cutoff_p: usize,
    pub cutoff_m: usize,
    pub method: Method,
    /// Time step for `time-evolution`; `None` picks the default from the
    /// Liouvillian diagonal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Integration horizon for `time-evolution`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec { cutoff_p: 12, cutoff_m: 6, method: Method::SteadyLinear, dt: None, t_final: None }
    }
}

impl SolverSpec {
    pub const DEFAULT_T_FINAL: f64 = 50.0;

    pub fn validate(&self) -> Result<()> {
        if self.cutoff_p < 2 || self.cutoff_m < 2 {
            return Err(invalid("cutoffs must be at least 2"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid(format!("dt = {dt} must be positive")));
            }
        }
        if let Some(t) = self.t_final {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid(format!("t_final = {t} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFlags {
    #[serde(default = "yes")]
    pub g2_numeric: bool,
    #[serde(default = "yes")]
    pub g2_analytic: bool,
    #[serde(default = "yes")]
    pub occupations: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputFlags {
    fn default() -> Self {
        OutputFlags { g2_numeric: true, g2_analytic: true, occupations: true }
    }
}

impl OutputFlags {
    fn needs_master_equation(&self) -> bool {
        self.g2_numeric || self.occupations
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: EffectiveParams,
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub outputs: OutputFlags,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.solver.validate()?;
        if !(1..=2).contains(&self.axes.len()) {
            return Err(invalid(format!("a sweep needs 1 or 2 axes, got {}", self.axes.len())));
        }
        for a in &self.axes {
            a.validate()?;
        }
        if self.axes.len() == 2 && self.axes[0].field == self.axes[1].field {
            return Err(invalid("the two axes sweep the same field"));
        }
        Ok(())
    }

    pub fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    /// Axis values of grid point `index`; the last axis varies fastest.
    pub fn coordinates(&self, mut index: usize) -> Vec<f64> {
        let mut ks = vec![0; self.axes.len()];
        for (k, axis) in ks.iter_mut().zip(&self.axes).rev() {
            *k = index % axis.points;
            index /= axis.points;
        }
        ks.iter().zip(&self.axes).map(|(&k, a)| a.value(k)).collect()
    }

    pub fn params_at(&self, coordinates: &[f64]) -> EffectiveParams {
        let mut p = self.base;
        for (axis, &v) in self.axes.iter().zip(coordinates) {
            axis.field.set(&mut p, v);
        }
        p
    }
}

/// A g² value, or the reason there is none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum G2Cell {
    Value(f64),
    /// Occupation below the guard.
    Undefined,
    /// The weak-drive closed form diverges.
    Pole,
}

impl G2Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            G2Cell::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for G2Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            G2Cell::Value(v) => f.write_str(&format_float(*v)),
            G2Cell::Undefined => f.write_str("NA"),
            G2Cell::Pole => f.write_str("POLE"),
        }
    }
}

impl Serialize for G2Cell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            G2Cell::Value(v) => s.serialize_f64(*v),
            G2Cell::Undefined => s.serialize_str("NA"),
            G2Cell::Pole => s.serialize_str("POLE"),
        }
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub axis_values: Vec<f64>,
    pub g2_numeric: Option<G2Cell>,
    pub g2_analytic: Option<G2Cell>,
    pub n_magnon: Option<f64>,
    pub n_photon: Option<f64>,
    pub residual: Option<f64>,
    /// Invariants of the numeric steady state; not written to CSV.
    pub diagnostics: Option<DensityDiagnostics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<Row>,
}

/// Master-equation results at one parameter point.
#[derive(Debug, Clone)]
pub struct NumericPoint {
    pub rho: DensityMatrix,
    pub g2: G2Cell,
    pub n_magnon: f64,
    pub n_photon: f64,
    pub residual: f64,
}

/// Solves the master equation of the effective model at one point.
pub fn numeric_point(params: &EffectiveParams, solver: &SolverSpec) -> Result<NumericPoint> {
    params.validate()?;
    let space = effective_space(solver.cutoff_p, solver.cutoff_m)?;
    let l = liouvillian_for(params, &space)?;
    let (rho, residual) = match solver.method {
        Method::SteadyLinear => {
            let ss = solve_steady(&l)?;
            (ss.rho, ss.residual)
        }
        Method::TimeEvolution => {
            let dt = solver.dt.unwrap_or_else(|| crate::steadystate::default_dt(&l));
            let t = solver.t_final.unwrap_or(SolverSpec::DEFAULT_T_FINAL);
            let rho = evolve(&DensityMatrix::vacuum(&space), &l, t, dt)?;
            let lr = l.apply(&rho)?;
            (rho, lr.norm_max() / l.norm_max())
        }
    };
    let g2 = match g2_zero(&rho, MAGNON) {
        Ok(v) => G2Cell::Value(v),
        Err(Error::UndefinedCorrelation { .. }) => G2Cell::Undefined,
        Err(e) => return Err(e),
    };
    Ok(NumericPoint {
        n_magnon: occupation(&rho, MAGNON)?,
        n_photon: occupation(&rho, PUMP)?,
        g2,
        rho,
        residual,
    })
}

/// Closed-form g² with the pole mapped to [`G2Cell::Pole`].
pub fn analytic_cell(params: &EffectiveParams) -> G2Cell {
    match g2_analytic(params) {
        Ok(v) => G2Cell::Value(v),
        Err(_) => G2Cell::Pole,
    }
}

fn evaluate(spec: &SweepSpec, index: usize) -> Result<Row> {
    let axis_values = spec.coordinates(index);
    let params = spec.params_at(&axis_values);
    let wrap = |e: Error| Error::SweepPoint { index, values: axis_values.clone(), source: Box::new(e) };
    let mut row = Row {
        axis_values: axis_values.clone(),
        g2_numeric: None,
        g2_analytic: spec.outputs.g2_analytic.then(|| analytic_cell(&params)),
        n_magnon: None,
        n_photon: None,
        residual: None,
        diagnostics: None,
    };
    if spec.outputs.needs_master_equation() {
        let pt = numeric_point(&params, &spec.solver).map_err(wrap)?;
        row.diagnostics = Some(pt.rho.diagnostics().map_err(wrap)?);
        row.residual = Some(pt.residual);
        if spec.outputs.g2_numeric {
            row.g2_numeric = Some(pt.g2);
        }
        if spec.outputs.occupations {
            row.n_magnon = Some(pt.n_magnon);
            row.n_photon = Some(pt.n_photon);
        }
    }
    Ok(row)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(spec, Execution::Parallel)
}

/// Evaluates every grid point; rows come back in index order either way.
pub fn run_sweep_with(spec: &SweepSpec, execution: Execution) -> Result<SweepResult> {
    spec.validate()?;
    let n = spec.point_count();
    let rows: Result<Vec<Row>> = match execution {
        Execution::Serial => (0..n).map(|i| evaluate(spec, i)).collect(),
        Execution::Parallel => (0..n).into_par_iter().map(|i| evaluate(spec, i)).collect(),
    };
    Ok(SweepResult { spec: spec.clone(), rows: rows? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    G2Numeric,
    G2Analytic,
}

impl Row {
    pub fn cell(&self, column: Column) -> Option<f64> {
        match column {
            Column::G2Numeric => self.g2_numeric,
            Column::G2Analytic => self.g2_analytic,
        }
        .and_then(G2Cell::value)
    }
}

/// A local minimum of a g² column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dip {
    /// Interpolated axis position.
    pub position: f64,
    /// Interpolated g² at `position`.
    pub depth: f64,
    /// Index of the grid point at the minimum.
    pub index: usize,
}

/// Strict local minima of a 1D column, refined by a parabola through
/// `log₁₀ g²` at the minimum and its two neighbours; deepest first.
///
/// Points where the column is zero or undefined break the search.
pub fn find_dips(result: &SweepResult, column: Column) -> Result<Vec<Dip>> {
    if result.spec.axes.len() != 1 {
        return Err(invalid("dips are located on 1D sweeps only"));
    }
    let axis = &result.spec.axes[0];
    let h = axis.step();
    let logs: Vec<Option<f64>> = result
        .rows
        .iter()
        .map(|r| r.cell(column).filter(|v| *v > 0.0).map(f64::log10))
        .collect();
    let mut dips = Vec::new();
    for i in 1..logs.len().saturating_sub(1) {
        let (Some(y0), Some(y1), Some(y2)) = (logs[i - 1], logs[i], logs[i + 1]) else {
            continue;
        };
        if !(y1 < y0 && y1 < y2) {
            continue;
        }
        let curv = y0 - 2.0 * y1 + y2;
        let offset = h * (y0 - y2) / (2.0 * curv);
        let log_min = y1 - (y0 - y2) * (y0 - y2) / (8.0 * curv);
        dips.push(Dip { position: axis.value(i) + offset, depth: 10f64.powf(log_min), index: i });
    }
    dips.sort_by(|a, b| a.depth.total_cmp(&b.depth));
    Ok(dips)
}

/// Numeric g² for both propagation directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contrast {
    pub g2_forward: G2Cell,
    pub g2_backward: G2Cell,
    /// `10 log₁₀(g2_backward / g2_forward)`; `None` when either side is
    /// undefined.
    pub contrast_db: Option<f64>,
}

pub fn nonreciprocity_contrast(params: &EffectiveParams) -> Result<Contrast> {
    nonreciprocity_contrast_with(params, &SolverSpec::default())
}

/// `params` is the forward direction; the backward one flips χ and g.
pub fn nonreciprocity_contrast_with(params: &EffectiveParams, solver: &SolverSpec) -> Result<Contrast> {
    let forward = numeric_point(params, solver)?.g2;
    let backward = if params.chi == 0.0 && params.g == 0.0 {
        forward
    } else {
        numeric_point(&params.reversed(), solver)?.g2
    };
    let contrast_db = match (forward, backward) {
        (G2Cell::Value(f), G2Cell::Value(b)) if f > 0.0 && b > 0.0 => Some(10.0 * (b / f).log10()),
        _ => None,
    };
    Ok(Contrast { g2_forward: forward, g2_backward: backward, contrast_db })
}

/// Grid points farther than `margin` (in Δp) from every blockade root and
/// every pole of the closed form. Meaningful for sweeps along `delta_p`.
pub fn away_from_singularities(result: &SweepResult, margin: f64) -> Vec<usize> {
    let axis = &result.spec.axes[0];
    if result.spec.axes.len() != 1 || axis.field != ParamField::DeltaP {
        return Vec::new();
    }
    let base = result.spec.base;
    let mut special = optimal_deltas(&base).all();
    special.extend(analytic_poles(&base));
    result
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| special.iter().all(|s| (r.axis_values[0] - s).abs() > margin))
        .map(|(i, _)| i)
        .collect()
}

fn columns(spec: &SweepSpec) -> Vec<&'static str> {
    let mut cols: Vec<&'static str> = spec.axes.iter().map(|a| a.field.name()).collect();
    if spec.outputs.g2_numeric {
        cols.push("g2_numeric");
    }
    if spec.outputs.g2_analytic {
        cols.push("g2_analytic");
    }
    if spec.outputs.occupations {
        cols.extend(["n_magnon", "n_photon"]);
    }
    if spec.outputs.needs_master_equation() {
        cols.push("residual");
    }
    cols
}

/// Writes the table. Leading `#` lines carry the sweep spec as JSON so the
/// file is self-describing; columns switched off in the output flags are
/// left out.
pub fn write_csv_to(result: &SweepResult, mut out: impl Write) -> Result<()> {
    let echo = serde_json::to_string(&result.spec).map_err(|e| invalid(e.to_string()))?;
    writeln!(out, "# magnon-blockade sweep, all quantities in units of kappa")?;
    writeln!(out, "# spec: {echo}")?;
    writeln!(out, "{}", columns(&result.spec).join(","))?;
    for row in &result.rows {
        let mut cells: Vec<String> = row.axis_values.iter().map(|v| format_float(*v)).collect();
        cells.extend(row.g2_numeric.map(|c| c.to_string()));
        cells.extend(row.g2_analytic.map(|c| c.to_string()));
        if result.spec.outputs.occupations {
            cells.push(row.n_magnon.map_or_else(|| "NA".into(), format_float));
            cells.push(row.n_photon.map_or_else(|| "NA".into(), format_float));
        }
        cells.extend(row.residual.map(format_float));
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(result, std::io::BufWriter::new(file))
}
