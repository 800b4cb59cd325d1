//! Free-space harvesting at the sensor and the resulting transmission rate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_nonnegative, ensure_positive, Result};
use crate::samplers::PointPattern;

/// Device and channel constants of the harvesting link.
///
/// Defaults: 30% conversion efficiency, 1 W LTE sources at 1800 MHz
/// (λ = 0.167 m), unit-free antenna gains of 1.5, circuit power 15.8 µW,
/// minimum source distance ε = 0.1 m and the sensor at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvestParams {
    pub beta: f64,
    pub p_source: f64,
    pub g_source: f64,
    pub g_harvester: f64,
    pub wavelength: f64,
    pub epsilon: f64,
    pub p_circuit: f64,
    pub sensor_position: [f64; 2],
}

impl Default for HarvestParams {
    fn default() -> Self {
        HarvestParams {
            beta: 0.3,
            p_source: 1.0,
            g_source: 1.5,
            g_harvester: 1.5,
            wavelength: 0.167,
            epsilon: 0.1,
            p_circuit: 15.8e-6,
            sensor_position: [0.0, 0.0],
        }
    }
}

impl HarvestParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("beta", self.beta)?;
        if self.beta > 1.0 {
            return Err(crate::Error::invalid("beta", "must lie in (0, 1]"));
        }
        ensure_positive("p_source", self.p_source)?;
        ensure_positive("g_source", self.g_source)?;
        ensure_positive("g_harvester", self.g_harvester)?;
        ensure_positive("wavelength", self.wavelength)?;
        ensure_positive("epsilon", self.epsilon)?;
        // Zero circuit power is allowed; it makes power outage impossible.
        ensure_nonnegative("p_circuit", self.p_circuit)?;
        if !self.sensor_position.iter().all(|c| c.is_finite()) {
            return Err(crate::Error::invalid("sensor_position", "must be finite"));
        }
        Ok(())
    }

    /// `β P_S G_S G_H λ² / (4π)²`, the received power at unit distance.
    pub fn link_constant(&self) -> f64 {
        let four_pi = 4.0 * PI;
        self.beta * self.p_source * self.g_source * self.g_harvester * self.wavelength.powi(2)
            / (four_pi * four_pi)
    }
}

/// How the rate threshold enters the SNR requirement `2^{m'} - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RateConvention {
    /// `m' = m_rate`: the threshold is a spectral efficiency (bits/s/Hz).
    #[default]
    PaperLiteral,
    /// `m' = m_rate / W`: the threshold is a rate in bits/s.
    BandwidthNormalized,
}

/// Sensor-to-sink transmission constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub bandwidth: f64,
    pub channel_gain: f64,
    pub noise_power: f64,
    pub rate_threshold: f64,
    pub rate_convention: RateConvention,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            bandwidth: 1e3,
            // 62.5 d^-4 at d = 50 m
            channel_gain: 62.5 * 50f64.powi(-4),
            noise_power: 1e-12,
            rate_threshold: 3.0,
            rate_convention: RateConvention::PaperLiteral,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("bandwidth", self.bandwidth)?;
        ensure_positive("channel_gain", self.channel_gain)?;
        ensure_nonnegative("noise_power", self.noise_power)?;
        ensure_nonnegative("rate_threshold", self.rate_threshold)
    }

    /// Threshold exponent `m'`.
    pub fn threshold_exponent(&self) -> f64 {
        match self.rate_convention {
            RateConvention::PaperLiteral => self.rate_threshold,
            RateConvention::BandwidthNormalized => self.rate_threshold / self.bandwidth,
        }
    }

    /// Transmit power needed to reach the threshold: `σ² (2^{m'} - 1) / h`.
    pub fn required_transmit_power(&self) -> f64 {
        self.noise_power * (self.threshold_exponent() * std::f64::consts::LN_2).exp_m1()
            / self.channel_gain
    }

    /// The achievable rate expressed in the unit of `rate_threshold`.
    pub fn rate_in_threshold_units(&self, transmit: f64) -> f64 {
        let rate = max_rate(self, transmit);
        match self.rate_convention {
            RateConvention::PaperLiteral => rate / self.bandwidth,
            RateConvention::BandwidthNormalized => rate,
        }
    }
}

/// Power harvested from one source at `source_position` (watts).
pub fn friis_rate(params: &HarvestParams, source_position: [f64; 2]) -> f64 {
    let dx = params.sensor_position[0] - source_position[0];
    let dy = params.sensor_position[1] - source_position[1];
    let d = params.epsilon + dx.hypot(dy);
    params.link_constant() / (d * d)
}

/// Total harvested power `P_H` over a pattern.
pub fn aggregate_rate(params: &HarvestParams, pattern: &PointPattern) -> f64 {
    aggregate_over(params, pattern.points())
}

pub(crate) fn aggregate_over(params: &HarvestParams, points: &[[f64; 2]]) -> f64 {
    points.iter().map(|&p| friis_rate(params, p)).sum()
}

/// `[P_H - P_C]^+`
pub fn transmit_power(params: &HarvestParams, harvested: f64) -> f64 {
    (harvested - params.p_circuit).max(0.0)
}

/// Shannon rate `W log₂(1 + h P_T / σ²)` in bits/s.
pub fn max_rate(link: &LinkParams, transmit: f64) -> f64 {
    link.bandwidth * (link.channel_gain * transmit / link.noise_power).ln_1p()
        / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::ObservationWindow;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn friis_at_minimum_distance() {
        let params = HarvestParams::default();
        // 0.3 · 1 · 1.5 · 1.5 · 0.167² / (4π · 0.1)²
        let expected = 0.3 * 2.25 * 0.167f64.powi(2) / (4.0 * PI * 0.1).powi(2);
        assert_relative_eq!(
            friis_rate(&params, [0.0, 0.0]),
            expected,
            max_relative = 1e-14
        );
        assert_relative_eq!(expected, 1.192e-2, max_relative = 1e-3);
    }

    #[test]
    fn inverse_square_in_offset_distance() {
        let params = HarvestParams::default();
        // ε + d = 1.0 → 2.0
        let near = friis_rate(&params, [0.9, 0.0]);
        let far = friis_rate(&params, [0.0, 1.9]);
        assert_relative_eq!(near / far, 4.0, max_relative = 1e-12);
        assert!(friis_rate(&params, [1e9, 0.0]) < 1e-20);
    }

    #[test]
    fn aggregate_is_additive() {
        let params = HarvestParams::default();
        let w = ObservationWindow::new(10.0).unwrap();
        assert_eq!(aggregate_rate(&params, &PointPattern::empty(w)), 0.0);
        let one = PointPattern::new(vec![[3.0, 0.0]], w).unwrap();
        let two = PointPattern::new(vec![[3.0, 0.0], [0.0, -3.0]], w).unwrap();
        assert_eq!(
            aggregate_rate(&params, &two),
            2.0 * aggregate_rate(&params, &one)
        );
    }

    #[test]
    fn transmit_power_kink() {
        let params = HarvestParams::default();
        let pc = params.p_circuit;
        assert_eq!(transmit_power(&params, pc), 0.0);
        assert_eq!(transmit_power(&params, 0.0), 0.0);
        assert_relative_eq!(transmit_power(&params, 2.0 * pc), pc);
    }

    #[test]
    fn shannon_rate_values() {
        let link = LinkParams::default();
        assert_eq!(max_rate(&link, 0.0), 0.0);
        assert_relative_eq!(link.channel_gain, 1e-5, max_relative = 1e-14);
        // h P / σ² = 10 at 1 µW and 1e7 at 1 W
        assert_relative_eq!(
            max_rate(&link, 1e-6),
            1000.0 * 11f64.log2(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            max_rate(&link, 1.0),
            1000.0 * (1.0 + 1e7f64).log2(),
            max_relative = 1e-12
        );
        assert_relative_eq!(max_rate(&link, 1.0), 2.3253e4, max_relative = 1e-4);
        // h P / σ² = 1
        assert_relative_eq!(max_rate(&link, 1e-7), 1000.0, max_relative = 1e-14);
    }

    #[test]
    fn threshold_conventions() {
        let mut link = LinkParams::default();
        assert_relative_eq!(link.required_transmit_power(), 7e-7, max_relative = 1e-12);
        link.rate_convention = RateConvention::BandwidthNormalized;
        link.rate_threshold = 3000.0;
        assert_relative_eq!(link.required_transmit_power(), 7e-7, max_relative = 1e-12);
        link.rate_threshold = 0.0;
        assert_eq!(link.required_transmit_power(), 0.0);
    }

    #[test]
    fn validation() {
        assert!(HarvestParams::default().validate().is_ok());
        let bad = HarvestParams {
            epsilon: 0.0,
            ..HarvestParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = HarvestParams {
            beta: 1.2,
            ..HarvestParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = LinkParams {
            bandwidth: -1.0,
            ..LinkParams::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn friis_is_rotation_invariant(r in 0.0f64..50.0, a in 0.0f64..6.3, b in 0.0f64..6.3) {
            let params = HarvestParams::default();
            let p = friis_rate(&params, [r * a.cos(), r * a.sin()]);
            let q = friis_rate(&params, [r * b.cos(), r * b.sin()]);
            prop_assert!((p - q).abs() <= 1e-12 * p);
        }

        #[test]
        fn friis_decreases_with_distance(r1 in 0.0f64..50.0, dr in 1e-6f64..50.0) {
            let params = HarvestParams::default();
            prop_assert!(friis_rate(&params, [r1 + dr, 0.0]) < friis_rate(&params, [r1, 0.0]));
        }

        #[test]
        fn adding_a_source_never_lowers_harvest(
            xs in proptest::collection::vec((-7.0f64..7.0, -7.0f64..7.0), 0..20),
            extra in (-7.0f64..7.0, -7.0f64..7.0),
        ) {
            let params = HarvestParams::default();
            let w = ObservationWindow::new(10.0).unwrap();
            let mut pts: Vec<[f64; 2]> = xs.iter().map(|&(x, y)| [x, y]).collect();
            let before = aggregate_rate(&params, &PointPattern::new(pts.clone(), w).unwrap());
            pts.push([extra.0, extra.1]);
            let after = aggregate_rate(&params, &PointPattern::new(pts, w).unwrap());
            prop_assert!(after >= before);
        }

        #[test]
        fn rate_is_increasing_and_concave(p in 0.0f64..1e-4, dp in 1e-9f64..1e-5) {
            let link = LinkParams::default();
            let (a, b, c) = (max_rate(&link, p), max_rate(&link, p + dp), max_rate(&link, p + 2.0 * dp));
            prop_assert!(b > a);
            prop_assert!(b - a >= (c - b) * (1.0 - 1e-9));
        }

        #[test]
        fn transmit_power_piecewise_linear(h in 0.0f64..1e-3) {
            let params = HarvestParams::default();
            let pt = transmit_power(&params, h);
            prop_assert!(pt >= 0.0);
            if h <= params.p_circuit { prop_assert_eq!(pt, 0.0); }
            else { prop_assert!((pt - (h - params.p_circuit)).abs() <= 1e-18); }
        }
    }
}
