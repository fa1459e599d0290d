//! Seeded experiment protocol and result emission.
//!
//! - parses JSON experiment specs (unknown keys rejected, missing keys filled
//!   with the reference defaults)
//! - sweeps one axis (transmit SNR or an array size) over a value list
//! - evaluates capacity quantities per trial at the unoptimized reference
//!   point (equal-power covariance, per-trial random phases), or runs the
//!   alternating optimizer per angle realization
//! - aggregates trials deterministically (trial-ordered compensated
//!   reduction), so output bytes are independent of the worker count
//! - emits CSV/JSON tables with a fixed, documented column schema
//! - ships the `fig2`..`fig9` presets used by the CLI
//!
//! Trial `t` of a run draws from the `(master_seed, t)` substream: the
//! realization first, then the per-trial phase draw (reference point) or the
//! fresh-gain block (optimize mode). The draw order is part of the
//! reproducibility contract.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{
    app_summand, c_app_quadrature, c_high_snr_upper, c_jen1, c_jen2, eigen_triplet,
    exact_capacity_value, CapacityKind, Pairing, ReflectionState, TransmitCovariance,
};
use crate::channel::{sample_realization, trial_rng, ChannelRealization, SteeringSet, SystemConfig};
use crate::error::{Error, Result};
use crate::optimizer::{alternating_optimization, AoOptions};
use crate::stats::mean_std_err;

// ---------------------------------------------------------------------------
// spec types
// ---------------------------------------------------------------------------

/// Which scalar parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Transmit SNR in dB: `power_budget = noise_var·10^(v/10)`.
    SnrDb,
    /// Base-station array size.
    NB,
    /// Total reflecting elements; the panel stays `10 × (v/10)`, so values
    /// must be positive multiples of 10.
    NR,
    /// User array size.
    NU,
    /// No sweep: a single output row.
    None,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::NB => "n_b",
            SweepAxis::NR => "n_r",
            SweepAxis::NU => "n_u",
            SweepAxis::None => "none",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<SweepAxis> {
        match s {
            "snr_db" => Ok(SweepAxis::SnrDb),
            "n_b" => Ok(SweepAxis::NB),
            "n_r" => Ok(SweepAxis::NR),
            "n_u" => Ok(SweepAxis::NU),
            "none" => Ok(SweepAxis::None),
            other => Err(Error::config(
                "axis",
                format!("unknown axis `{other}`, expected snr_db, n_b, n_r, n_u, or none"),
            )),
        }
    }
}

/// Sweep axis plus its value list. With [`SweepAxis::None`] the value list
/// must stay empty and the run produces exactly one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep { axis: SweepAxis::None, values: Vec::new() }
    }
}

/// What a run does at each sweep value.
///
/// `validate`, `sweep`, and `upper_bound` share the reference-point
/// evaluation loop and differ only in their default quantity set;
/// `optimize` runs the alternating optimizer per angle realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Validate,
    Sweep,
    Optimize,
    UpperBound,
}

/// Which half-steps the optimizer runs (`baseline` freezes both, i.e. the
/// equal-power/random-phase reference).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizeVariant {
    Both,
    CovarianceOnly,
    PhasesOnly,
    Baseline,
}

impl OptimizeVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptimizeVariant::Both => "both",
            OptimizeVariant::CovarianceOnly => "covariance_only",
            OptimizeVariant::PhasesOnly => "phases_only",
            OptimizeVariant::Baseline => "baseline",
        }
    }

    /// `(run_waterfill, run_rcg)` flags for the alternating optimizer.
    fn half_steps(&self) -> (bool, bool) {
        match self {
            OptimizeVariant::Both => (true, true),
            OptimizeVariant::CovarianceOnly => (true, false),
            OptimizeVariant::PhasesOnly => (false, true),
            OptimizeVariant::Baseline => (false, false),
        }
    }
}

/// One experiment: a base configuration, an optional sweep, and the
/// quantities to report. Parse from JSON with [`parse_config`]; missing keys
/// take the defaults below, unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExperimentSpec")]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub sweep: Sweep,
    /// Monte-Carlo trials per sweep value (angle realizations).
    pub trials: usize,
    pub master_seed: u64,
    pub mode: Mode,
    /// Reported quantities; when omitted the mode picks its default set.
    pub quantities: Vec<CapacityKind>,
    /// Optimizer variants (optimize mode only); one column group each.
    pub variants: Vec<OptimizeVariant>,
    /// Fresh gain draws per realization when evaluating an optimized pair.
    pub gain_draws: usize,
    /// Emit the per-outer-iteration objective trace instead of per-value
    /// rows (optimize mode with no sweep only).
    pub trace: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        RawExperimentSpec::default().resolve().expect("default spec is valid")
    }
}

/// Deserialization shadow: optional fields that depend on the mode stay
/// `None` until resolved.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawExperimentSpec {
    base: SystemConfig,
    sweep: Sweep,
    trials: usize,
    master_seed: u64,
    mode: Mode,
    quantities: Option<Vec<CapacityKind>>,
    variants: Option<Vec<OptimizeVariant>>,
    gain_draws: usize,
    trace: bool,
}

impl Default for RawExperimentSpec {
    fn default() -> Self {
        RawExperimentSpec {
            base: SystemConfig::default(),
            sweep: Sweep::default(),
            trials: 1000,
            master_seed: 42,
            mode: Mode::Validate,
            quantities: None,
            variants: None,
            gain_draws: 100,
            trace: false,
        }
    }
}

impl RawExperimentSpec {
    fn resolve(self) -> Result<ExperimentSpec> {
        let quantities = self.quantities.unwrap_or_else(|| match self.mode {
            Mode::Validate | Mode::Sweep => vec![
                CapacityKind::ExactMc,
                CapacityKind::AppMc,
                CapacityKind::AppQuadrature,
                CapacityKind::Jen1,
                CapacityKind::Jen2,
            ],
            Mode::Optimize => vec![CapacityKind::ExactMc],
            Mode::UpperBound => vec![CapacityKind::HighSnrUpper],
        });
        let spec = ExperimentSpec {
            base: self.base,
            sweep: self.sweep,
            trials: self.trials,
            master_seed: self.master_seed,
            mode: self.mode,
            quantities,
            variants: self.variants.unwrap_or_else(|| vec![OptimizeVariant::Both]),
            gain_draws: self.gain_draws,
            trace: self.trace,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<RawExperimentSpec> for ExperimentSpec {
    type Error = Error;

    fn try_from(raw: RawExperimentSpec) -> Result<ExperimentSpec> {
        raw.resolve()
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate().map_err(|e| Error::config("base", e.to_string()))?;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if self.quantities.is_empty() {
            return Err(Error::config("quantities", "must name at least one quantity"));
        }
        if has_duplicates(&self.quantities) {
            return Err(Error::config("quantities", "entries must be distinct"));
        }
        if self.variants.is_empty() {
            return Err(Error::config("variants", "must name at least one variant"));
        }
        if has_duplicates(&self.variants) {
            return Err(Error::config("variants", "entries must be distinct"));
        }
        if self.gain_draws == 0 {
            return Err(Error::config("gain_draws", "must be >= 1"));
        }
        if self.mode != Mode::Optimize && self.variants != [OptimizeVariant::Both] {
            return Err(Error::config("variants", "only apply to optimize mode"));
        }
        if self.trace && (self.mode != Mode::Optimize || self.sweep.axis != SweepAxis::None) {
            return Err(Error::config("trace", "requires optimize mode with no sweep axis"));
        }
        match self.sweep.axis {
            SweepAxis::None => {
                if !self.sweep.values.is_empty() {
                    return Err(Error::config("sweep.values", "must be empty when axis is none"));
                }
            }
            SweepAxis::SnrDb => {
                if self.sweep.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("sweep.values", "SNR values must be finite"));
                }
            }
            SweepAxis::NB | SweepAxis::NU => {
                if self.sweep.values.iter().any(|&v| !is_positive_integer(v)) {
                    return Err(Error::config(
                        "sweep.values",
                        "array sizes must be positive integers",
                    ));
                }
            }
            SweepAxis::NR => {
                if self.sweep.values.iter().any(|&v| !is_positive_integer(v) || v % 10.0 != 0.0) {
                    return Err(Error::config(
                        "sweep.values",
                        "reflecting-element counts must be positive multiples of 10 (panel is 10 × v/10)",
                    ));
                }
            }
        }
        Ok(())
    }

    /// The configuration at one sweep value.
    pub(crate) fn config_at(&self, value: f64) -> SystemConfig {
        let mut cfg = self.base.clone();
        match self.sweep.axis {
            SweepAxis::None => {}
            SweepAxis::SnrDb => cfg = cfg.with_snr_db(value),
            SweepAxis::NB => cfg.n_b = value as usize,
            SweepAxis::NU => cfg.n_u = value as usize,
            SweepAxis::NR => {
                cfg.n_r_y = 10;
                cfg.n_r_z = (value as usize) / 10;
            }
        }
        cfg
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items.iter().enumerate().any(|(i, a)| items[..i].contains(a))
}

fn is_positive_integer(v: f64) -> bool {
    v.is_finite() && v > 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64
}

/// Parses and validates an experiment spec from a JSON file. Schema errors
/// name the offending key.
pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path)?;
    parse_spec(&text)
}

/// [`parse_config`] for an in-memory JSON document.
pub fn parse_spec(json: &str) -> Result<ExperimentSpec> {
    let mut de = serde_json::Deserializer::from_str(json);
    serde_path_to_error::deserialize(&mut de)
        .map_err(|e| Error::config(e.path().to_string(), e.inner().to_string()))
}

/// [`parse_spec`], but a document that does not name a `mode` takes the
/// given one instead of `validate`. Used by the CLI so each subcommand
/// supplies its natural default; an explicit `mode` key still wins.
pub fn parse_spec_with_default_mode(json: &str, mode: Mode) -> Result<ExperimentSpec> {
    let mut value: serde_json::Value = serde_json::from_str(json)?;
    if let Some(obj) = value.as_object_mut() {
        if !obj.contains_key("mode") {
            obj.insert("mode".to_string(), serde_json::to_value(mode)?);
        }
    }
    serde_path_to_error::deserialize(value)
        .map_err(|e| Error::config(e.path().to_string(), e.inner().to_string()))
}

// ---------------------------------------------------------------------------
// result table
// ---------------------------------------------------------------------------

/// Output format for [`emit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<OutputFormat> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::config("format", format!("unknown format `{other}`, expected csv or json"))),
        }
    }
}

/// Plot-ready results: one row per sweep value (or per outer iteration in
/// trace runs). CSV cells carry 10 significant digits; JSON carries full
/// `f64` precision. Only `high_snr_upper` columns may hold non-finite
/// values, rendered as `-inf`/`inf`/`nan`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Divergence markers are reserved for the high-SNR bound columns.
fn column_allows_nonfinite(name: &str) -> bool {
    name.starts_with("high_snr_upper")
}

fn format_cell(column: &str, v: f64) -> Result<String> {
    if v.is_finite() {
        // 10 significant digits.
        Ok(format!("{v:.9e}"))
    } else if column_allows_nonfinite(column) {
        Ok(if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        })
    } else {
        Err(Error::numeric("emit", format!("non-finite value in column `{column}`")))
    }
}

impl ResultTable {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for (k, row) in self.rows.iter().enumerate() {
            assert_eq!(row.len(), self.columns.len(), "row {k} width mismatch");
            let cells = row
                .iter()
                .zip(&self.columns)
                .map(|(v, c)| format_cell(c, *v))
                .collect::<Result<Vec<String>>>()?;
            w.write_record(&cells)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::numeric("emit", e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::numeric("emit", e.to_string()))
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut out = Vec::with_capacity(self.rows.len());
        for (k, row) in self.rows.iter().enumerate() {
            assert_eq!(row.len(), self.columns.len(), "row {k} width mismatch");
            let mut obj = serde_json::Map::new();
            for (v, c) in row.iter().zip(&self.columns) {
                let value = match serde_json::Number::from_f64(*v) {
                    Some(n) => serde_json::Value::Number(n),
                    // from_f64 is None exactly for non-finite values.
                    None => serde_json::Value::String(format_cell(c, *v)?),
                };
                obj.insert(c.clone(), value);
            }
            out.push(serde_json::Value::Object(obj));
        }
        let mut text = serde_json::to_string_pretty(&out)?;
        text.push('\n');
        Ok(text)
    }

    /// `value` column position for a quantity/variant pair, if present.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Writes the table to `path` in the requested format.
pub fn emit(table: &ResultTable, format: OutputFormat, path: &Path) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => table.to_csv_string()?,
        OutputFormat::Json => table.to_json_string()?,
    };
    fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// column schema
// ---------------------------------------------------------------------------

fn variant_suffix(spec: &ExperimentSpec, variant: OptimizeVariant) -> String {
    if spec.variants.len() > 1 {
        format!("_{}", variant.as_str())
    } else {
        String::new()
    }
}

/// Column order contract: the sweep column first, then per variant (optimize
/// mode) the diagnostics `jen2_initial`, `jen2_final`, `outer_iters`
/// followed by `{quantity}`, `{quantity}_stderr` pairs in spec order; trace
/// runs report `iteration` then `jen2`, `jen2_stderr` per variant.
fn column_layout(spec: &ExperimentSpec) -> Vec<String> {
    let mut cols = Vec::new();
    if spec.trace {
        cols.push("iteration".to_string());
        for &v in &spec.variants {
            let sfx = variant_suffix(spec, v);
            cols.push(format!("jen2{sfx}"));
            cols.push(format!("jen2_stderr{sfx}"));
        }
        return cols;
    }
    cols.push(match spec.sweep.axis {
        SweepAxis::None => "point".to_string(),
        axis => axis.as_str().to_string(),
    });
    match spec.mode {
        Mode::Validate | Mode::Sweep | Mode::UpperBound => {
            for q in &spec.quantities {
                cols.push(q.as_str().to_string());
                cols.push(format!("{}_stderr", q.as_str()));
            }
        }
        Mode::Optimize => {
            for &v in &spec.variants {
                let sfx = variant_suffix(spec, v);
                cols.push(format!("jen2_initial{sfx}"));
                cols.push(format!("jen2_final{sfx}"));
                cols.push(format!("outer_iters{sfx}"));
                for q in &spec.quantities {
                    cols.push(format!("{}{sfx}", q.as_str()));
                    cols.push(format!("{}_stderr{sfx}", q.as_str()));
                }
            }
        }
    }
    cols
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

/// Mean and standard error over trial-ordered samples. Non-finite samples
/// are legal only where divergence markers are (the high-SNR bound): the
/// aggregate is then the propagated marker with `nan` uncertainty.
fn aggregate(values: &[f64], quantity: CapacityKind) -> Result<(f64, f64)> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(mean_std_err(values))
    } else if quantity == CapacityKind::HighSnrUpper {
        let value = if values.iter().any(|v| v.is_nan()) { f64::NAN } else { f64::NEG_INFINITY };
        Ok((value, f64::NAN))
    } else {
        Err(Error::numeric("run_experiment", format!("non-finite {} sample", quantity.as_str())))
    }
}

/// Quantities at the unoptimized reference point of trial `t`: equal-power
/// covariance and phases drawn right after the realization from the same
/// substream. `exact_mc` and `app_mc` share the realization's gain draws.
fn reference_trial(
    cfg: &SystemConfig,
    master_seed: u64,
    trial: u64,
    quantities: &[CapacityKind],
) -> Result<Vec<f64>> {
    let mut rng = trial_rng(master_seed, trial);
    let r = sample_realization(cfg, &mut rng);
    let theta = ReflectionState::random(cfg.n_r(), &mut rng);
    let s = SteeringSet::from_realization(&r, cfg);
    let q = TransmitCovariance::equal_power(cfg);
    let trip = eigen_triplet(&q, &theta, &s)?;

    let mut out = Vec::with_capacity(quantities.len());
    for quantity in quantities {
        let value = match quantity {
            CapacityKind::ExactMc => exact_capacity_value(cfg, &q, &theta, &r, &s)?,
            CapacityKind::AppMc => {
                let g_sq: Vec<f64> = r.gains_g.iter().map(|g| g.norm_sqr()).collect();
                let t_sq: Vec<f64> = r.gains_t.iter().map(|t| t.norm_sqr()).collect();
                app_summand(cfg, &trip, &g_sq, &t_sq, Pairing::Unordered)?
            }
            CapacityKind::AppQuadrature => c_app_quadrature(cfg, &trip)?.value,
            CapacityKind::Jen1 => c_jen1(cfg, &trip)?.value,
            CapacityKind::Jen2 => c_jen2(cfg, &trip)?.value,
            CapacityKind::HighSnrUpper => c_high_snr_upper(cfg, &trip)?.value,
        };
        out.push(value);
    }
    Ok(out)
}

/// Per-variant outputs of one optimize-mode trial.
struct OptimizeTrial {
    /// Per variant: `[jen2_initial, jen2_final, outer_iters, quantities...]`.
    values: Vec<Vec<f64>>,
    /// Per variant: objective trace (initial point included).
    traces: Vec<Vec<f64>>,
}

/// Runs every variant on trial `t`'s angle realization. The fresh-gain block
/// used to evaluate optimized pairs is drawn once, right after the
/// realization, and shared across variants.
fn optimize_trial(
    cfg: &SystemConfig,
    spec: &ExperimentSpec,
    trial: u64,
) -> Result<OptimizeTrial> {
    let mut rng = trial_rng(spec.master_seed, trial);
    let r = sample_realization(cfg, &mut rng);
    let gain_block: Vec<ChannelRealization> =
        (0..spec.gain_draws).map(|_| r.with_fresh_gains(&mut rng)).collect();
    let s = SteeringSet::from_realization(&r, cfg);

    let mut values = Vec::with_capacity(spec.variants.len());
    let mut traces = Vec::with_capacity(spec.variants.len());
    for &variant in &spec.variants {
        let (run_waterfill, run_rcg) = variant.half_steps();
        let opts = AoOptions { theta_seed: trial, run_waterfill, run_rcg, ..AoOptions::default() };
        let out = alternating_optimization(cfg, &s, &opts)?;
        let trip = eigen_triplet(&out.q, &out.theta, &s)?;

        let mut row =
            vec![out.c_jen2_initial, out.c_jen2_final, out.iterations.len() as f64];
        for quantity in &spec.quantities {
            let value = match quantity {
                CapacityKind::ExactMc => {
                    let per_draw = gain_block
                        .iter()
                        .map(|rk| exact_capacity_value(cfg, &out.q, &out.theta, rk, &s))
                        .collect::<Result<Vec<f64>>>()?;
                    mean_std_err(&per_draw).0
                }
                CapacityKind::AppMc => {
                    let per_draw = gain_block
                        .iter()
                        .map(|rk| {
                            let g_sq: Vec<f64> =
                                rk.gains_g.iter().map(|g| g.norm_sqr()).collect();
                            let t_sq: Vec<f64> =
                                rk.gains_t.iter().map(|t| t.norm_sqr()).collect();
                            app_summand(cfg, &trip, &g_sq, &t_sq, Pairing::Unordered)
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    mean_std_err(&per_draw).0
                }
                CapacityKind::AppQuadrature => c_app_quadrature(cfg, &trip)?.value,
                CapacityKind::Jen1 => c_jen1(cfg, &trip)?.value,
                CapacityKind::Jen2 => c_jen2(cfg, &trip)?.value,
                CapacityKind::HighSnrUpper => c_high_snr_upper(cfg, &trip)?.value,
            };
            row.push(value);
        }
        values.push(row);
        traces.push(out.objective_trace());
    }
    Ok(OptimizeTrial { values, traces })
}

fn reference_row(spec: &ExperimentSpec, sweep_value: f64) -> Result<Vec<f64>> {
    let cfg = spec.config_at(sweep_value);
    cfg.validate()?;
    let per_trial: Vec<Vec<f64>> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| reference_trial(&cfg, spec.master_seed, t, &spec.quantities))
        .collect::<Result<Vec<_>>>()?;

    let mut row = vec![sweep_value];
    for (k, quantity) in spec.quantities.iter().enumerate() {
        let samples: Vec<f64> = per_trial.iter().map(|v| v[k]).collect();
        let (mean, std_err) = aggregate(&samples, *quantity)?;
        row.push(mean);
        row.push(std_err);
    }
    Ok(row)
}

fn optimize_row(spec: &ExperimentSpec, sweep_value: f64) -> Result<Vec<f64>> {
    let cfg = spec.config_at(sweep_value);
    cfg.validate()?;
    let per_trial: Vec<OptimizeTrial> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| optimize_trial(&cfg, spec, t))
        .collect::<Result<Vec<_>>>()?;

    let mut row = vec![sweep_value];
    for (vi, _) in spec.variants.iter().enumerate() {
        // diagnostics: means only
        for di in 0..3 {
            let samples: Vec<f64> = per_trial.iter().map(|t| t.values[vi][di]).collect();
            let (mean, _) = aggregate(&samples, CapacityKind::Jen2)?;
            row.push(mean);
        }
        for (k, quantity) in spec.quantities.iter().enumerate() {
            let samples: Vec<f64> = per_trial.iter().map(|t| t.values[vi][3 + k]).collect();
            let (mean, std_err) = aggregate(&samples, *quantity)?;
            row.push(mean);
            row.push(std_err);
        }
    }
    Ok(row)
}

/// Objective-trace rows: traces are padded to the longest run with their
/// final value, so late iterations average converged runs at their plateau.
fn trace_rows(spec: &ExperimentSpec) -> Result<Vec<Vec<f64>>> {
    let cfg = spec.config_at(0.0);
    cfg.validate()?;
    let per_trial: Vec<OptimizeTrial> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| optimize_trial(&cfg, spec, t))
        .collect::<Result<Vec<_>>>()?;

    let longest = per_trial
        .iter()
        .flat_map(|t| t.traces.iter().map(Vec::len))
        .max()
        .expect("at least one trial");
    let mut rows = Vec::with_capacity(longest);
    for k in 0..longest {
        let mut row = vec![k as f64];
        for vi in 0..spec.variants.len() {
            let samples: Vec<f64> = per_trial
                .iter()
                .map(|t| {
                    let trace = &t.traces[vi];
                    trace[k.min(trace.len() - 1)]
                })
                .collect();
            let (mean, std_err) = aggregate(&samples, CapacityKind::Jen2)?;
            row.push(mean);
            row.push(std_err);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Runs the experiment: one row per sweep value in list order (or one row
/// per outer iteration for trace runs). Output is a pure function of the
/// spec, independent of the rayon worker count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let columns = column_layout(spec);
    let rows = if spec.trace {
        trace_rows(spec)?
    } else {
        let points: Vec<f64> =
            if spec.sweep.axis == SweepAxis::None { vec![0.0] } else { spec.sweep.values.clone() };
        points
            .iter()
            .map(|&v| match spec.mode {
                Mode::Validate | Mode::Sweep | Mode::UpperBound => reference_row(spec, v),
                Mode::Optimize => optimize_row(spec, v),
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(ResultTable { columns, rows })
}

// ---------------------------------------------------------------------------
// figure presets
// ---------------------------------------------------------------------------

/// Named presets behind the CLI's `fig2`..`fig9` subcommands. `axis`
/// overrides the swept array dimension for the growth studies (`fig4`,
/// `fig9`); other figures reject an override.
pub fn figure_preset(fig: u8, axis: Option<SweepAxis>) -> Result<ExperimentSpec> {
    if axis.is_some() && fig != 4 && fig != 9 {
        return Err(Error::config("axis", format!("fig{fig} does not take an axis override")));
    }
    let mut spec = ExperimentSpec::default();
    match fig {
        // Approximation tightness against transmit SNR (reference defaults).
        2 => {
            spec.sweep = Sweep {
                axis: SweepAxis::SnrDb,
                values: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            };
        }
        // High-SNR upper bound against transmit SNR with N_s = P = L = 4.
        3 => {
            spec.base.p_paths = 4;
            spec.base.l_paths = 4;
            spec.sweep =
                Sweep { axis: SweepAxis::SnrDb, values: vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0] };
            spec.quantities = vec![CapacityKind::ExactMc, CapacityKind::HighSnrUpper];
        }
        // Upper-bound saturation against one growing array dimension,
        // starting from a 10/10/10 system at 50 dB with 6/6 paths.
        4 => {
            spec.base = array_growth_base();
            spec.mode = Mode::UpperBound;
            spec.quantities = vec![CapacityKind::HighSnrUpper];
            spec.sweep = growth_sweep(axis)?;
        }
        // Optimizer convergence trace at 10 dB (reference defaults).
        5 => {
            spec.base = spec.base.with_snr_db(10.0);
            spec.mode = Mode::Optimize;
            spec.quantities = vec![CapacityKind::Jen2];
            spec.trace = true;
        }
        // Optimized ergodic capacity against transmit SNR. Instantaneous-CSI
        // benchmark curves are out of scope; this emits the proposed-design
        // curve only.
        6 => {
            spec.mode = Mode::Optimize;
            spec.quantities = vec![CapacityKind::ExactMc];
            spec.sweep = Sweep {
                axis: SweepAxis::SnrDb,
                values: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            };
        }
        // Influence of each optimization block at 16 BS antennas: full,
        // covariance-only, phases-only, and the unoptimized baseline.
        7 => {
            spec.mode = Mode::Optimize;
            spec.quantities = vec![CapacityKind::ExactMc];
            spec.variants = vec![
                OptimizeVariant::Both,
                OptimizeVariant::CovarianceOnly,
                OptimizeVariant::PhasesOnly,
                OptimizeVariant::Baseline,
            ];
            spec.sweep = Sweep {
                axis: SweepAxis::SnrDb,
                values: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            };
        }
        // Same influence study at 32 BS antennas.
        8 => {
            spec = figure_preset(7, None)?;
            spec.base.n_b = 32;
        }
        // Optimized capacity against one growing array dimension (same
        // growth protocol as fig4, optimizer enabled).
        9 => {
            spec.base = array_growth_base();
            spec.mode = Mode::Optimize;
            spec.quantities = vec![CapacityKind::ExactMc];
            spec.sweep = growth_sweep(axis)?;
        }
        other => {
            return Err(Error::config("figure", format!("no preset fig{other}; expected 2..=9")))
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// 10-antenna/10-element starting point at 50 dB with 6/6 paths, shared by
/// the two array-growth figures.
fn array_growth_base() -> SystemConfig {
    SystemConfig {
        n_b: 10,
        n_r_y: 10,
        n_r_z: 1,
        n_u: 10,
        p_paths: 6,
        l_paths: 6,
        ..SystemConfig::default()
    }
    .with_snr_db(50.0)
}

fn growth_sweep(axis: Option<SweepAxis>) -> Result<Sweep> {
    let axis = axis.unwrap_or(SweepAxis::NB);
    match axis {
        SweepAxis::NB | SweepAxis::NR | SweepAxis::NU => Ok(Sweep {
            axis,
            values: vec![10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 640.0],
        }),
        other => Err(Error::config(
            "axis",
            format!("growth figures sweep an array dimension, got `{}`", other.as_str()),
        )),
    }
}

// ---------------------------------------------------------------------------
