//! Fixtures shared by the criterion benches.

use rfharvest_core::{Alpha, GinibreModel, ObservationWindow};

/// Ginibre model on the reference 10 m window.
pub fn reference_model(m: u32, rho: f64) -> GinibreModel {
    let window = ObservationWindow::new(10.0).expect("positive radius");
    GinibreModel::new(Alpha::from_m(m).expect("m >= 1"), rho, window).expect("valid model")
}
