//! `sample`, `bounds` and `validate`.

use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rfharvest_core::bounds::{
    expected_harvest_rate, power_outage_bound_dpp, power_outage_bound_ppp,
    transmission_outage_bound_dpp, transmission_outage_bound_ppp,
};
use rfharvest_core::montecarlo::simulate_harvest;
use rfharvest_core::{
    Alpha, GinibreModel, McConfig, ObservationWindow, PointPattern, RngStream, SourceModel,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, ModelSpec};
use crate::error::CliError;
use crate::output::{report_path_for, sweep_csv, write_atomic, Flag, SweepRow};

/// Largest relative gap between a requested α and `-1/m` that is snapped
/// (with a warning) rather than rejected.
pub const ALPHA_SNAP_TOLERANCE: f64 = 0.02;

/// Parses `"ppp"` or a number, snapping near misses such as `-0.03` to the
/// closest `-1/m`.
pub fn parse_model(text: &str) -> Result<ModelSpec, CliError> {
    if text.eq_ignore_ascii_case("ppp") {
        return Ok(ModelSpec::Ppp);
    }
    let value: f64 = text
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("alpha {text:?} is neither a number nor \"ppp\"")))?;
    if let Ok(alpha) = Alpha::from_value(value) {
        return Ok(ModelSpec::Ginibre { m: alpha.m() });
    }
    let nearest = Alpha::nearest(value)?;
    let gap = ((nearest.value() - value) / value).abs();
    if gap > ALPHA_SNAP_TOLERANCE {
        return Err(rfharvest_core::Error::InvalidAlpha(value).into());
    }
    warn!(
        "alpha = {value} is not of the form -1/m; using {} instead",
        nearest.label()
    );
    Ok(ModelSpec::Ginibre { m: nearest.m() })
}

pub fn source_model(spec: ModelSpec, rho: f64, radius: f64) -> Result<SourceModel, CliError> {
    let window = ObservationWindow::new(radius)?;
    Ok(match spec {
        ModelSpec::Ginibre { m } => {
            SourceModel::Ginibre(GinibreModel::new(Alpha::from_m(m)?, rho, window)?)
        }
        ModelSpec::Ppp => SourceModel::Poisson { rho, window },
    })
}

/// One realization on stream `(seed, 0)`.
pub fn sample_pattern(
    config: &ExperimentConfig,
    model: ModelSpec,
    rho: f64,
    seed: u64,
) -> Result<PointPattern, CliError> {
    let source = source_model(model, rho, config.window_radius)?;
    Ok(source.sample(&RngStream::new(seed, 0))?)
}

pub fn cmd_sample(
    config: &ExperimentConfig,
    model: ModelSpec,
    rho: f64,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let pattern = sample_pattern(config, model, rho, seed)?;
    info!("{} points written to {}", pattern.len(), out.display());
    write_atomic(out, pattern.to_csv().as_bytes())
}

/// Power and transmission outage bounds for one grid cell.
pub fn cell_bounds(
    config: &ExperimentConfig,
    model: ModelSpec,
    rho: f64,
) -> Result<(f64, f64), CliError> {
    let params = config.harvest_params();
    let link = config.link_params();
    let radius = config.window_radius;
    Ok(match source_model(model, rho, radius)? {
        SourceModel::Ginibre(g) => (
            power_outage_bound_dpp(&g, &params)?,
            transmission_outage_bound_dpp(&g, &params, &link)?,
        ),
        SourceModel::Poisson { .. } => (
            power_outage_bound_ppp(rho, radius, &params)?,
            transmission_outage_bound_ppp(rho, radius, &params, &link)?,
        ),
    })
}

fn plain_row(rho: f64, alpha: &str, metric: &str, value: f64) -> SweepRow {
    SweepRow {
        rho,
        alpha: alpha.to_string(),
        metric: metric.to_string(),
        value,
        ci_low: None,
        ci_high: None,
        bound: None,
        flag: None,
    }
}

pub fn bounds_rows(config: &ExperimentConfig) -> Result<Vec<SweepRow>, CliError> {
    config.validate()?;
    let params = config.harvest_params();
    let mut rows = Vec::new();
    for &rho in &config.rho_sweep {
        let rate = expected_harvest_rate(&params, rho, config.window_radius)?;
        for &model in &config.models {
            let label = model.label();
            let (power, transmission) = cell_bounds(config, model, rho)?;
            rows.push(plain_row(rho, &label, "power_outage_bound", power));
            rows.push(plain_row(
                rho,
                &label,
                "transmission_outage_bound",
                transmission,
            ));
            rows.push(plain_row(rho, &label, "expected_rate", rate));
        }
    }
    Ok(rows)
}

pub fn cmd_bounds(config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let rows = bounds_rows(config)?;
    write_atomic(out, sweep_csv(&rows).as_bytes())
}

/// Seed of grid cell `index`: the master seed passed through a splitmix64
/// step keyed by the index, so cells draw from unrelated streams.
pub fn cell_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tightness {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config_echo: ExperimentConfig,
    pub grid: Vec<SweepRow>,
    /// Largest `estimate - bound` over the grid.
    pub max_violation: f64,
    /// Estimate-to-bound ratios over the determinantal (α = -1) cells.
    pub tightness: Option<Tightness>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone)]
pub struct Validation {
    pub rows: Vec<SweepRow>,
    pub report: Report,
}

impl Validation {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.flag == Some(Flag::Pass))
    }
}

/// Monte Carlo outage estimates against their bounds over the whole grid.
///
/// Replications of a cell run on the current rayon pool; the output does not
/// depend on its size.
pub fn validate_grid(config: &ExperimentConfig) -> Result<Validation, CliError> {
    config.validate()?;
    let start = Instant::now();
    let params = config.harvest_params();
    let link = config.link_params();
    let mut rows = Vec::new();
    let mut index = 0u64;
    for &rho in &config.rho_sweep {
        for &model in &config.models {
            let source = source_model(model, rho, config.window_radius)?;
            let mc = McConfig {
                master_seed: cell_seed(config.monte_carlo.master_seed, index),
                ..config.monte_carlo
            };
            index += 1;
            let samples = simulate_harvest(&source, &params, &mc)?;
            let (power_bound, transmission_bound) = cell_bounds(config, model, rho)?;
            let label = model.label();
            for (metric, estimate, bound) in [
                ("power_outage", samples.power_outage(&params), power_bound),
                (
                    "transmission_outage",
                    samples.transmission_outage(&params, &link),
                    transmission_bound,
                ),
            ] {
                let flag = if estimate.dominated_by(bound) {
                    Flag::Pass
                } else {
                    Flag::Fail
                };
                if flag == Flag::Fail {
                    warn!(
                        "rho = {rho}, alpha = {label}, {metric}: estimate {} exceeds bound {bound}",
                        estimate.point_estimate
                    );
                }
                rows.push(SweepRow {
                    rho,
                    alpha: label.clone(),
                    metric: metric.to_string(),
                    value: estimate.point_estimate,
                    ci_low: Some(estimate.ci_low),
                    ci_high: Some(estimate.ci_high),
                    bound: Some(bound),
                    flag: Some(flag),
                });
            }
            info!("cell rho = {rho}, alpha = {label} done");
        }
    }
    let max_violation = rows
        .iter()
        .map(|r| r.value - r.bound.unwrap_or(f64::INFINITY))
        .fold(f64::NEG_INFINITY, f64::max);
    let tightness = tightness(&rows);
    let report = Report {
        config_echo: config.clone(),
        grid: rows.clone(),
        max_violation,
        tightness,
        elapsed_s: start.elapsed().as_secs_f64(),
    };
    Ok(Validation { rows, report })
}

fn tightness(rows: &[SweepRow]) -> Option<Tightness> {
    let label = ModelSpec::Ginibre { m: 1 }.label();
    let mut ratios: Vec<f64> = rows
        .iter()
        .filter(|r| r.alpha == label)
        .filter_map(|r| r.bound.filter(|b| *b > 0.0).map(|b| r.value / b))
        .collect();
    if ratios.is_empty() {
        return None;
    }
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    let median = if n % 2 == 1 {
        ratios[n / 2]
    } else {
        0.5 * (ratios[n / 2 - 1] + ratios[n / 2])
    };
    Some(Tightness {
        min: ratios[0],
        median,
        max: ratios[n - 1],
    })
}

/// Runs [`validate_grid`] on a pool of `workers` threads and writes the CSV
/// and the JSON report.
pub fn cmd_validate(
    config: &ExperimentConfig,
    out: &Path,
    report_path: Option<&Path>,
    workers: Option<usize>,
) -> Result<Validation, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let validation = pool.install(|| validate_grid(config))?;
    write_atomic(out, sweep_csv(&validation.rows).as_bytes())?;
    let report_path = report_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| report_path_for(out));
    let json = serde_json::to_string_pretty(&validation.report)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write_atomic(&report_path, json.as_bytes())?;
    Ok(validation)
}
