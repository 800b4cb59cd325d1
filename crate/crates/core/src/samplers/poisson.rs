use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{ObservationWindow, PointPattern, RngStream};
use crate::error::{ensure_nonnegative, Error, Result};

/// Homogeneous Poisson process of density `rho` on the window.
pub fn sample_ppp(rho: f64, window: ObservationWindow, stream: &RngStream) -> Result<PointPattern> {
    let mut rng = stream.rng();
    let points = sample_ppp_with(rho, window, &mut rng)?;
    Ok(PointPattern::from_trusted(points, window))
}

pub fn sample_ppp_with<R: Rng + ?Sized>(
    rho: f64,
    window: ObservationWindow,
    rng: &mut R,
) -> Result<Vec<[f64; 2]>> {
    ensure_nonnegative("rho", rho)?;
    let mean = rho * window.area();
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::invalid("rho", e.to_string()))?
        .sample(rng) as usize;
    let radius = window.radius();
    Ok((0..count)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let theta = 2.0 * PI * rng.random::<f64>();
            [r * theta.cos(), r * theta.sin()]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density_is_empty() {
        let w = ObservationWindow::new(10.0).unwrap();
        assert!(sample_ppp(0.0, w, &RngStream::new(0, 0))
            .unwrap()
            .is_empty());
        assert!(sample_ppp(-1.0, w, &RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn points_stay_in_window() {
        let w = ObservationWindow::new(3.0).unwrap();
        for id in 0..50 {
            let p = sample_ppp(2.0, w, &RngStream::new(4, id)).unwrap();
            assert!(p.points().iter().all(|x| w.contains(*x)));
        }
    }
}
