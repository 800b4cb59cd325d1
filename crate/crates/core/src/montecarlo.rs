//! Seeded Monte Carlo estimates of harvest and outage metrics.
//!
//! Replication `i` always uses stream `(master_seed, i)` and per-replication
//! results are reduced in index order, so estimates are bitwise identical
//! whatever the size of the rayon pool.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{ensure_nonnegative, Error, Result};
use crate::harvest::{aggregate_over, transmit_power, HarvestParams, LinkParams};
use crate::samplers::{
    sample_alpha_dpp, sample_ppp, GinibreModel, ObservationWindow, PointPattern, RngStream,
};
use crate::specfun::neumaier_sum;

/// Which process generates the sources.
#[derive(Debug, Clone)]
pub enum SourceModel {
    Ginibre(GinibreModel),
    Poisson { rho: f64, window: ObservationWindow },
}

impl SourceModel {
    pub fn rho(&self) -> f64 {
        match self {
            SourceModel::Ginibre(model) => model.rho(),
            SourceModel::Poisson { rho, .. } => *rho,
        }
    }

    pub fn window(&self) -> ObservationWindow {
        match self {
            SourceModel::Ginibre(model) => model.window(),
            SourceModel::Poisson { window, .. } => *window,
        }
    }

    /// `"-1/m"` for Ginibre models, `"PPP"` otherwise.
    pub fn label(&self) -> String {
        match self {
            SourceModel::Ginibre(model) => model.alpha().label(),
            SourceModel::Poisson { .. } => "PPP".to_string(),
        }
    }

    pub fn sample(&self, stream: &RngStream) -> Result<PointPattern> {
        match self {
            SourceModel::Ginibre(model) => sample_alpha_dpp(model, stream),
            SourceModel::Poisson { rho, window } => sample_ppp(*rho, *window, stream),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub replications: usize,
    pub master_seed: u64,
    pub confidence_level: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            replications: 10_000,
            master_seed: 0,
            confidence_level: 0.99,
        }
    }
}

impl McConfig {
    pub fn new(replications: usize, master_seed: u64) -> Self {
        McConfig {
            replications,
            master_seed,
            ..McConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::invalid("confidence_level", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Two-sided standard normal quantile for the confidence level.
    pub fn z(&self) -> f64 {
        Normal::standard().inverse_cdf(0.5 + 0.5 * self.confidence_level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub point_estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replications: usize,
    pub standard_error: f64,
}

impl McEstimate {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    /// Whether `bound` is compatible with the data as an upper bound, i.e.
    /// the estimate exceeds it by no more than the lower CI arm.
    pub fn dominated_by(&self, bound: f64) -> bool {
        self.point_estimate - bound <= self.point_estimate - self.ci_low
    }

    fn mean(values: &[f64], z: f64) -> McEstimate {
        let n = values.len();
        let mean = neumaier_sum(values.iter().copied()) / n as f64;
        let standard_error = if n > 1 {
            let ss = neumaier_sum(values.iter().map(|v| (v - mean) * (v - mean)));
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            point_estimate: mean,
            ci_low: mean - z * standard_error,
            ci_high: mean + z * standard_error,
            replications: n,
            standard_error,
        }
    }

    /// Wilson score interval for `hits` successes out of `n`.
    pub fn proportion(hits: usize, n: usize, z: f64) -> McEstimate {
        let nf = n as f64;
        let p = hits as f64 / nf;
        let z2 = z * z;
        let denom = 1.0 + z2 / nf;
        let centre = (p + z2 / (2.0 * nf)) / denom;
        let arm = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
        McEstimate {
            point_estimate: p,
            ci_low: (centre - arm).clamp(0.0, p),
            ci_high: (centre + arm).clamp(p, 1.0),
            replications: n,
            standard_error: (p * (1.0 - p) / nf).sqrt(),
        }
    }
}

/// Per-replication summaries from one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestSamples {
    /// Aggregate harvested power `P_H` of each replication.
    pub harvested: Vec<f64>,
    /// Distance from the origin to the closest source (∞ when empty).
    pub nearest: Vec<f64>,
    confidence_level: f64,
}

impl HarvestSamples {
    pub fn replications(&self) -> usize {
        self.harvested.len()
    }

    fn z(&self) -> f64 {
        McConfig {
            confidence_level: self.confidence_level,
            ..McConfig::default()
        }
        .z()
    }

    pub fn expected_rate(&self) -> McEstimate {
        McEstimate::mean(&self.harvested, self.z())
    }

    /// Indicator of `P_H < P_C` per replication.
    pub fn power_outage_events(&self, params: &HarvestParams) -> Vec<bool> {
        self.harvested
            .iter()
            .map(|&h| h < params.p_circuit)
            .collect()
    }

    /// Indicator of `P_T = 0` or `C < m_rate` per replication.
    pub fn transmission_outage_events(
        &self,
        params: &HarvestParams,
        link: &LinkParams,
    ) -> Vec<bool> {
        self.harvested
            .iter()
            .map(|&h| {
                let pt = transmit_power(params, h);
                pt == 0.0 || link.rate_in_threshold_units(pt) < link.rate_threshold
            })
            .collect()
    }

    pub fn power_outage(&self, params: &HarvestParams) -> McEstimate {
        self.proportion(&self.power_outage_events(params))
    }

    pub fn transmission_outage(&self, params: &HarvestParams, link: &LinkParams) -> McEstimate {
        self.proportion(&self.transmission_outage_events(params, link))
    }

    /// Fraction of replications with no source in the open ball `B(0, r)`.
    pub fn void_probability(&self, r: f64) -> McEstimate {
        let events: Vec<bool> = self.nearest.iter().map(|&d| d >= r).collect();
        self.proportion(&events)
    }

    fn proportion(&self, events: &[bool]) -> McEstimate {
        let hits = events.iter().filter(|&&e| e).count();
        McEstimate::proportion(hits, events.len(), self.z())
    }
}

/// Draw `cfg.replications` source patterns and record `P_H` and the
/// nearest-source distance for each.
pub fn simulate_harvest(
    source: &SourceModel,
    params: &HarvestParams,
    cfg: &McConfig,
) -> Result<HarvestSamples> {
    params.validate()?;
    cfg.validate()?;
    let rows: Vec<(f64, f64)> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|id| {
            let pattern = source.sample(&RngStream::new(cfg.master_seed, id))?;
            let nearest = pattern
                .points()
                .iter()
                .map(|p| p[0].hypot(p[1]))
                .fold(f64::INFINITY, f64::min);
            Ok((aggregate_over(params, pattern.points()), nearest))
        })
        .collect::<Result<_>>()?;
    let (harvested, nearest) = rows.into_iter().unzip();
    Ok(HarvestSamples {
        harvested,
        nearest,
        confidence_level: cfg.confidence_level,
    })
}

pub fn estimate_expected_rate(
    source: &SourceModel,
    params: &HarvestParams,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Ok(simulate_harvest(source, params, cfg)?.expected_rate())
}

pub fn estimate_power_outage(
    source: &SourceModel,
    params: &HarvestParams,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Ok(simulate_harvest(source, params, cfg)?.power_outage(params))
}

pub fn estimate_transmission_outage(
    source: &SourceModel,
    params: &HarvestParams,
    link: &LinkParams,
    cfg: &McConfig,
) -> Result<McEstimate> {
    link.validate()?;
    Ok(simulate_harvest(source, params, cfg)?.transmission_outage(params, link))
}

pub fn estimate_void_probability(
    source: &SourceModel,
    r: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    ensure_nonnegative("r", r)?;
    Ok(simulate_harvest(source, &HarvestParams::default(), cfg)?.void_probability(r))
}
