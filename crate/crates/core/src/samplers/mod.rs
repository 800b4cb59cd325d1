//! Point-pattern generation on a centred disk.
//!
//! Ginibre α-DPPs with `α = -1/m` are drawn as the superposition of `m`
//! independent determinantal processes with kernel `K / m`; each of those is
//! a mixture of projection processes (Bernoulli thinning of the spectrum)
//! sampled point by point in [`projection`]. The Poisson process is the
//! `α → 0` baseline.

mod poisson;
mod projection;

use std::fmt::Write as _;
use std::io;
use std::sync::Arc;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_nonnegative, ensure_positive, Error, Result};
use crate::specfun::{GinibreSpectrum, Truncation};

pub use poisson::{sample_ppp, sample_ppp_with};
pub use projection::{
    sample_alpha_dpp, sample_alpha_dpp_with, sample_many, sample_projection_dpp,
    sample_projection_dpp_with, SamplerOptions,
};

/// The closed disk `B(0, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationWindow {
    radius: f64,
}

impl ObservationWindow {
    pub fn new(radius: f64) -> Result<Self> {
        ensure_positive("radius", radius)?;
        Ok(ObservationWindow { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    pub fn contains(&self, point: [f64; 2]) -> bool {
        point[0].hypot(point[1]) <= self.radius
    }
}

/// One realization of the source process.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    points: Vec<[f64; 2]>,
    window: ObservationWindow,
}

impl PointPattern {
    pub fn new(points: Vec<[f64; 2]>, window: ObservationWindow) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !window.contains(**p)) {
            return Err(Error::invalid(
                "points",
                format!(
                    "({}, {}) lies outside B(0, {})",
                    p[0],
                    p[1],
                    window.radius()
                ),
            ));
        }
        Ok(PointPattern { points, window })
    }

    pub(crate) fn from_trusted(points: Vec<[f64; 2]>, window: ObservationWindow) -> Self {
        debug_assert!(points.iter().all(|p| window.contains(*p)));
        PointPattern { points, window }
    }

    pub fn empty(window: ObservationWindow) -> Self {
        PointPattern {
            points: Vec::new(),
            window,
        }
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn window(&self) -> ObservationWindow {
        self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points with `‖x‖ < r`.
    pub fn count_within(&self, r: f64) -> usize {
        self.points.iter().filter(|p| p[0].hypot(p[1]) < r).count()
    }

    /// CSV with header `x_m,y_m` and 17 significant digits per coordinate.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(16 + 50 * self.points.len());
        out.push_str("x_m,y_m\n");
        for p in &self.points {
            let _ = writeln!(out, "{:.16e},{:.16e}", p[0], p[1]);
        }
        out
    }

    pub fn write_csv<W: io::Write>(&self, mut writer: W) -> io::Result<()> {
        writer.write_all(self.to_csv().as_bytes())
    }
}

/// Repulsion parameter `α = -1/m`, stored by its integer `m ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Alpha {
    m: u32,
}

impl Alpha {
    pub const DETERMINANTAL: Alpha = Alpha { m: 1 };

    pub fn from_m(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m", "must be a positive integer"));
        }
        Ok(Alpha { m })
    }

    /// Accepts `value` only if it equals `-1/m` to within 1e-9 relative.
    pub fn from_value(value: f64) -> Result<Self> {
        let nearest = Self::nearest(value)?;
        if ((nearest.value() - value) / value).abs() <= 1e-9 {
            Ok(nearest)
        } else {
            Err(Error::InvalidAlpha(value))
        }
    }

    /// The `-1/m` closest to `value` in `[-1, 0)`.
    pub fn nearest(value: f64) -> Result<Self> {
        if !(-1.0..0.0).contains(&value) {
            return Err(Error::InvalidAlpha(value));
        }
        let m = (-1.0 / value).round();
        if m > u32::MAX as f64 {
            return Err(Error::InvalidAlpha(value));
        }
        Ok(Alpha { m: m as u32 })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn value(&self) -> f64 {
        -1.0 / self.m as f64
    }

    /// `"-1"`, `"-1/2"`, ...
    pub fn label(&self) -> String {
        if self.m == 1 {
            "-1".to_string()
        } else {
            format!("-1/{}", self.m)
        }
    }
}

impl TryFrom<u32> for Alpha {
    type Error = Error;

    fn try_from(m: u32) -> Result<Self> {
        Alpha::from_m(m)
    }
}

impl From<Alpha> for u32 {
    fn from(alpha: Alpha) -> u32 {
        alpha.m
    }
}

/// Ginibre α-DPP of density `rho` on a disk window, with its spectrum.
#[derive(Debug, Clone)]
pub struct GinibreModel {
    alpha: Alpha,
    rho: f64,
    window: ObservationWindow,
    spectrum: Arc<GinibreSpectrum>,
}

impl GinibreModel {
    /// `rho = 0` is accepted and gives the empty process.
    pub fn new(alpha: Alpha, rho: f64, window: ObservationWindow) -> Result<Self> {
        ensure_nonnegative("rho", rho)?;
        let spectrum = if rho == 0.0 {
            GinibreSpectrum::vacuum(window.radius())
        } else {
            GinibreSpectrum::new(rho, window.radius(), Truncation::Auto)?
        };
        Ok(GinibreModel {
            alpha,
            rho,
            window,
            spectrum: Arc::new(spectrum),
        })
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn window(&self) -> ObservationWindow {
        self.window
    }

    pub fn spectrum(&self) -> &GinibreSpectrum {
        &self.spectrum
    }

    /// Eigenvalues of one superposition component, `λ_n / m`.
    pub fn component_eigenvalues(&self) -> Vec<f64> {
        let m = self.alpha.m() as f64;
        self.spectrum.eigenvalues().iter().map(|l| l / m).collect()
    }

    /// Exact mean and variance of the total point count.
    pub fn count_moments(&self) -> (f64, f64) {
        let m = self.alpha.m() as f64;
        let lam = self.spectrum.eigenvalues();
        let mean: f64 = lam.iter().sum();
        let sq: f64 = lam.iter().map(|l| l * l).sum();
        (mean, mean - sq / m)
    }
}

/// Identifies an independent random stream: `(master_seed, stream_id)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngStream {
            master_seed,
            stream_id,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_rule() {
        assert_eq!(Alpha::from_value(-1.0).unwrap().m(), 1);
        assert_eq!(Alpha::from_value(-0.5).unwrap().m(), 2);
        assert_eq!(Alpha::from_value(-0.25).unwrap().m(), 4);
        assert_eq!(Alpha::from_value(-1.0 / 33.0).unwrap().m(), 33);
        assert!(Alpha::from_value(-0.03).is_err());
        assert_eq!(Alpha::nearest(-0.03).unwrap().m(), 33);
        assert!(Alpha::from_value(0.0).is_err());
        assert!(Alpha::from_value(0.5).is_err());
        assert!(Alpha::from_value(-1.5).is_err());
        assert!(Alpha::from_value(-0.4).is_err());
        assert!(Alpha::from_m(0).is_err());
        assert_eq!(Alpha::from_m(4).unwrap().label(), "-1/4");
    }

    #[test]
    fn window_and_pattern_invariants() {
        assert!(ObservationWindow::new(0.0).is_err());
        let w = ObservationWindow::new(2.0).unwrap();
        assert!(PointPattern::new(vec![[2.0, 0.0], [0.0, -1.0]], w).is_ok());
        assert!(PointPattern::new(vec![[1.5, 1.5]], w).is_err());
    }

    #[test]
    fn csv_layout() {
        let w = ObservationWindow::new(1.0).unwrap();
        let p = PointPattern::new(vec![[0.5, -0.25]], w).unwrap();
        assert_eq!(
            p.to_csv(),
            "x_m,y_m\n5.0000000000000000e-1,-2.5000000000000000e-1\n"
        );
        assert_eq!(PointPattern::empty(w).to_csv(), "x_m,y_m\n");
    }

    #[test]
    fn csv_values_round_trip() {
        let w = ObservationWindow::new(10.0).unwrap();
        let p = PointPattern::new(vec![[std::f64::consts::PI, -1.0 / 3.0]], w).unwrap();
        let csv = p.to_csv();
        let row = csv.lines().nth(1).unwrap();
        let parsed: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(parsed, vec![std::f64::consts::PI, -1.0 / 3.0]);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        use rand::Rng;
        let a: u64 = RngStream::new(7, 3).rng().random();
        let b: u64 = RngStream::new(7, 3).rng().random();
        let c: u64 = RngStream::new(7, 4).rng().random();
        let d: u64 = RngStream::new(8, 3).rng().random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn vacuum_model() {
        let w = ObservationWindow::new(10.0).unwrap();
        let model = GinibreModel::new(Alpha::DETERMINANTAL, 0.0, w).unwrap();
        assert!(model.spectrum().is_empty());
        assert_eq!(model.count_moments(), (0.0, 0.0));
        assert!(GinibreModel::new(Alpha::DETERMINANTAL, -1.0, w).is_err());
    }
}
