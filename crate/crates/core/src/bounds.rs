//! Closed-form expected harvest and outage upper bounds.
//!
//! Outage happens only if the ball around the sensor in which a single
//! source would suffice is empty, so each outage probability is bounded by
//! a void probability: the Fredholm determinant power for the Ginibre α-DPP,
//! `exp(-πρr²)` for the Poisson process.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_nonnegative, ensure_positive, Result};
use crate::harvest::{HarvestParams, LinkParams};
use crate::samplers::GinibreModel;
use crate::specfun::log_det_product;

/// Critical radii driving the power and transmission outage bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageThresholds {
    pub gamma_i: f64,
    pub gamma_i_m: f64,
}

impl OutageThresholds {
    pub fn new(params: &HarvestParams, link: &LinkParams) -> Self {
        OutageThresholds {
            gamma_i: critical_radius(params),
            gamma_i_m: critical_radius_rate(params, link),
        }
    }
}

/// Mean harvested power `E[P_H]` on `B(0, R)` with the sensor at the centre.
///
/// Equal for every α since it only involves the first-order intensity.
pub fn expected_harvest_rate(params: &HarvestParams, rho: f64, radius: f64) -> Result<f64> {
    ensure_nonnegative("rho", rho)?;
    ensure_positive("radius", radius)?;
    let eps = params.epsilon;
    // ∫_0^R 2πr / (r + ε)² dr = 2π (ε/(R+ε) + ln((R+ε)/ε) - 1)
    let bracket = eps / (radius + eps) + (radius / eps).ln_1p() - 1.0;
    Ok(2.0 * PI * params.link_constant() * rho * bracket)
}

/// `γ_i`: the distance within which one source alone covers `P_C`.
///
/// Infinite when `P_C = 0`.
pub fn critical_radius(params: &HarvestParams) -> f64 {
    (params.link_constant() / params.p_circuit).sqrt()
}

/// `γ_i^m`: as [`critical_radius`] with the power needed to meet the rate
/// threshold added to `P_C`.
pub fn critical_radius_rate(params: &HarvestParams, link: &LinkParams) -> f64 {
    (params.link_constant() / (params.p_circuit + link.required_transmit_power())).sqrt()
}

pub fn power_outage_bound_dpp(model: &GinibreModel, params: &HarvestParams) -> Result<f64> {
    dpp_void(model, critical_radius(params))
}

pub fn transmission_outage_bound_dpp(
    model: &GinibreModel,
    params: &HarvestParams,
    link: &LinkParams,
) -> Result<f64> {
    dpp_void(model, critical_radius_rate(params, link))
}

pub fn power_outage_bound_ppp(rho: f64, radius: f64, params: &HarvestParams) -> Result<f64> {
    ppp_void(rho, radius, critical_radius(params))
}

pub fn transmission_outage_bound_ppp(
    rho: f64,
    radius: f64,
    params: &HarvestParams,
    link: &LinkParams,
) -> Result<f64> {
    ppp_void(rho, radius, critical_radius_rate(params, link))
}

fn dpp_void(model: &GinibreModel, gamma: f64) -> Result<f64> {
    if model.rho() == 0.0 {
        return Ok(1.0);
    }
    log_det_product(
        model.spectrum(),
        model.alpha(),
        gamma.min(model.window().radius()),
    )
}

fn ppp_void(rho: f64, radius: f64, gamma: f64) -> Result<f64> {
    ensure_nonnegative("rho", rho)?;
    ensure_positive("radius", radius)?;
    if rho == 0.0 {
        return Ok(1.0);
    }
    let r = gamma.min(radius);
    Ok((-PI * rho * r * r).exp().clamp(0.0, 1.0))
}
