//! Special functions and the Ginibre spectrum on a centred disk.
//!
//! Eigenvalues of the Ginibre kernel restricted to `B(0, R)` are
//! `λ_n = γ(n + 1, x) / n!` with `x = πρR²`, i.e. the regularized lower
//! incomplete Gamma function at integer order. Equivalently `λ_n` is the
//! upper tail `Pr(Poisson(x) ≥ n + 1)` and `1 - λ_n` the lower tail
//! `Pr(Poisson(x) ≤ n)`. Both tails are accumulated as sums of positive
//! Poisson masses in a scaled log domain, so neither `n!` nor `1 - λ_n` is
//! ever formed by cancellation.

use std::f64::consts::PI;

use statrs::function::factorial::{factorial, ln_factorial};
use statrs::function::gamma::gamma;

use crate::error::{ensure_nonnegative, ensure_positive, Error, Result};
use crate::samplers::Alpha;

const MAX_SERIES_TERMS: usize = 100_000;
/// Relative accuracy required of the trace identity `Σ λ_n = πρR²`.
pub const TRACE_TOLERANCE: f64 = 1e-9;
/// Poisson masses this far (in log units) below the running maximum are dropped.
const LN_TAIL_CUTOFF: f64 = 46.0;

/// Lower incomplete Gamma function `γ(z, a) = ∫_0^a e^{-t} t^{z-1} dt`.
///
/// Uses the power series for `a < z + 1` and the Lentz continued fraction for
/// the complementary function otherwise. The result overflows to `+inf` once
/// `Γ(z)` is beyond the range of `f64`.
pub fn lower_incomplete_gamma(z: f64, a: f64) -> Result<f64> {
    check_gamma_args(z, a)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    if a < z + 1.0 {
        // γ(z,a) = a^z e^{-a} Σ_k a^k / (z (z+1) ... (z+k))
        Ok((z * a.ln() - a).exp() * gamma_series(z, a))
    } else {
        let upper = (z * a.ln() - a).exp() * upper_gamma_fraction(z, a);
        Ok(complete_gamma(z) - upper)
    }
}

/// Regularized lower incomplete Gamma `P(z, a) = γ(z, a) / Γ(z)`.
pub fn regularized_lower_gamma(z: f64, a: f64) -> Result<f64> {
    check_gamma_args(z, a)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    let ln_prefactor = z * a.ln() - a - statrs::function::gamma::ln_gamma(z);
    if a < z + 1.0 {
        Ok((ln_prefactor.exp() * gamma_series(z, a)).min(1.0))
    } else {
        Ok((1.0 - ln_prefactor.exp() * upper_gamma_fraction(z, a)).max(0.0))
    }
}

/// `γ(n + 1, a)` at integer order, evaluated through the regularized
/// Poisson-tail identity `γ(n+1, a) / n! = 1 - e^{-a} Σ_{k≤n} a^k / k!`.
pub fn lower_incomplete_gamma_int(n: usize, a: f64) -> Result<f64> {
    ensure_nonnegative("a", a)?;
    let tails = PoissonTails::new(a, n);
    Ok(tails.ln_lower[n].exp() * factorial(n as u64))
}

fn check_gamma_args(z: f64, a: f64) -> Result<()> {
    ensure_positive("z", z)?;
    ensure_nonnegative("a", a)
}

fn complete_gamma(z: f64) -> f64 {
    if z.fract() == 0.0 && z <= 171.0 {
        factorial(z as u64 - 1)
    } else {
        gamma(z)
    }
}

/// `Σ_{k≥0} a^k / (z (z+1) ... (z+k))`
fn gamma_series(z: f64, a: f64) -> f64 {
    let mut term = 1.0 / z;
    let mut sum = term;
    let mut denom = z;
    for _ in 0..MAX_SERIES_TERMS {
        denom += 1.0;
        term *= a / denom;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON * 0.25 {
            break;
        }
    }
    sum
}

/// Continued fraction for `Γ(z, a) e^{a} a^{-z}` (modified Lentz).
fn upper_gamma_fraction(z: f64, a: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = a + 1.0 - z;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_SERIES_TERMS {
        let an = -(i as f64) * (i as f64 - z);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    h
}

/// `ln Pr(Poisson(mean) = k)`, accurate in the relative sense even when
/// `k ≈ mean` is large (saddle-point form with Stirling remainder).
pub fn ln_poisson_pmf(k: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return -mean;
    }
    let kf = k as f64;
    -0.5 * (2.0 * PI * kf).ln() - stirling_remainder(k) - deviance_term(kf, mean)
}

/// `ln k! - [(k + 1/2) ln k - k + ln √(2π)]`
fn stirling_remainder(k: usize) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let n = k as f64;
    if k <= 15 {
        return ln_factorial(k as u64) - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * PI).ln();
    }
    let nn = n * n;
    if k > 500 {
        (S0 - S1 / nn) / n
    } else if k > 80 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if k > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// `k ln(k / mean) + mean - k`, without cancellation near `k = mean`.
fn deviance_term(k: f64, mean: f64) -> f64 {
    if (k - mean).abs() < 0.1 * (k + mean) {
        let v = (k - mean) / (k + mean);
        let mut s = (k - mean) * v;
        let mut ej = 2.0 * k * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        k * (k / mean).ln() + mean - k
    }
}

/// Running sum of `exp(ln_term)` kept as `ln_ref + ln(acc)`.
#[derive(Clone, Copy)]
struct ScaledSum {
    ln_ref: f64,
    acc: f64,
}

impl ScaledSum {
    const EMPTY: Self = ScaledSum {
        ln_ref: f64::NEG_INFINITY,
        acc: 0.0,
    };

    fn add(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term > self.ln_ref {
            self.acc = self.acc * (self.ln_ref - ln_term).exp() + 1.0;
            self.ln_ref = ln_term;
        } else {
            self.acc += (ln_term - self.ln_ref).exp();
        }
    }

    fn ln(&self) -> f64 {
        if self.acc == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.ln_ref + self.acc.ln()
        }
    }
}

/// Both Poisson tails at every order `0..=n_max`, in log form.
///
/// `ln_lower[n] = ln Pr(Poisson(x) ≥ n + 1) = ln P(n + 1, x)` and
/// `ln_upper[n] = ln Pr(Poisson(x) ≤ n) = ln Q(n + 1, x)`.
#[derive(Debug, Clone)]
pub struct PoissonTails {
    pub ln_lower: Vec<f64>,
    pub ln_upper: Vec<f64>,
}

impl PoissonTails {
    pub fn new(x: f64, n_max: usize) -> Self {
        if x == 0.0 {
            return PoissonTails {
                ln_lower: vec![f64::NEG_INFINITY; n_max + 1],
                ln_upper: vec![0.0; n_max + 1],
            };
        }
        let mut ln_pmf: Vec<f64> = Vec::with_capacity(n_max + 2);
        let mut tail_peak = f64::NEG_INFINITY;
        let mut k = 0usize;
        loop {
            let lp = ln_poisson_pmf(k, x);
            ln_pmf.push(lp);
            if k > n_max {
                tail_peak = tail_peak.max(lp);
                if (k as f64) > x && lp < tail_peak - LN_TAIL_CUTOFF {
                    break;
                }
            }
            k += 1;
        }

        let mut ln_upper = Vec::with_capacity(n_max + 1);
        let mut forward = ScaledSum::EMPTY;
        for &lp in &ln_pmf[..=n_max] {
            forward.add(lp);
            ln_upper.push(forward.ln().min(0.0));
        }

        let mut ln_lower = vec![0.0; n_max + 1];
        let mut backward = ScaledSum::EMPTY;
        for n in (0..ln_pmf.len()).rev() {
            if n <= n_max {
                ln_lower[n] = backward.ln().min(0.0);
            }
            backward.add(ln_pmf[n]);
        }
        PoissonTails { ln_lower, ln_upper }
    }
}

/// Truncation rule for the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// `ceil(x) + max(50, ceil(10 √x))`, extended until the trace identity holds.
    Auto,
    /// Keep indices `0..=n`.
    Fixed(usize),
}

/// Eigenvalues of the Ginibre kernel of density `rho` restricted to `B(0, radius)`.
///
/// `eigenvalues[n]` may round to exactly `1.0` for large `πρR²`; the exact
/// complement is kept separately as `ln(1 - λ_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GinibreSpectrum {
    rho: f64,
    radius: f64,
    eigenvalues: Vec<f64>,
    ln_complements: Vec<f64>,
}

impl GinibreSpectrum {
    pub fn new(rho: f64, radius: f64, truncation: Truncation) -> Result<Self> {
        ensure_positive("rho", rho)?;
        ensure_positive("radius", radius)?;
        let x = PI * rho * radius * radius;
        if !x.is_finite() {
            return Err(Error::invalid("rho", "πρR² overflows"));
        }
        match truncation {
            Truncation::Fixed(n) => Ok(Self::with_order(rho, radius, x, n)),
            Truncation::Auto => {
                let margin = 50f64.max((10.0 * x.sqrt()).ceil());
                let mut n = (x.ceil() + margin) as usize;
                loop {
                    let mut spectrum = Self::with_order(rho, radius, x, n);
                    // Trailing eigenvalues that underflow carry no mass.
                    while spectrum.eigenvalues.len() > 1
                        && *spectrum.eigenvalues.last().unwrap() == 0.0
                    {
                        spectrum.eigenvalues.pop();
                        spectrum.ln_complements.pop();
                    }
                    if spectrum.trace_defect() <= TRACE_TOLERANCE * x {
                        return Ok(spectrum);
                    }
                    n += 50;
                }
            }
        }
    }

    /// Spectrum of a vacuum model (ρ = 0): no eigenvalues.
    pub(crate) fn vacuum(radius: f64) -> Self {
        GinibreSpectrum {
            rho: 0.0,
            radius,
            eigenvalues: Vec::new(),
            ln_complements: Vec::new(),
        }
    }

    fn with_order(rho: f64, radius: f64, x: f64, n: usize) -> Self {
        let tails = PoissonTails::new(x, n);
        GinibreSpectrum {
            rho,
            radius,
            eigenvalues: tails.ln_lower.iter().map(|l| l.exp()).collect(),
            ln_complements: tails.ln_upper,
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `πρR²`, the expected number of points in the window.
    pub fn mean_count(&self) -> f64 {
        PI * self.rho * self.radius * self.radius
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `ln(1 - λ_n)` for every retained index.
    pub fn ln_complements(&self) -> &[f64] {
        &self.ln_complements
    }

    /// Largest retained index; `None` for the vacuum spectrum.
    pub fn n_trunc(&self) -> Option<usize> {
        self.eigenvalues.len().checked_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Compensated `Σ λ_n`.
    pub fn trace(&self) -> f64 {
        neumaier_sum(self.eigenvalues.iter().copied())
    }

    /// `|Σ λ_n - πρR²|`
    pub fn trace_defect(&self) -> f64 {
        (self.trace() - self.mean_count()).abs()
    }

    /// Spectrum of the same kernel restricted to the smaller disk `B(0, r)`.
    pub fn restricted(&self, r: f64) -> Result<Self> {
        ensure_nonnegative("effective_radius", r)?;
        let r = r.min(self.radius);
        if r == self.radius {
            return Ok(self.clone());
        }
        if self.rho == 0.0 || r == 0.0 {
            return Ok(Self::vacuum(r));
        }
        Self::new(self.rho, r, Truncation::Auto)
    }

    /// `ln Π_n (1 + α λ_n)^{-1/α}` over the retained spectrum.
    pub fn ln_void_probability(&self, alpha: Alpha) -> Result<f64> {
        let m = alpha.m() as f64;
        let mut terms = Vec::with_capacity(self.eigenvalues.len());
        for (n, (&lambda, &ln_comp)) in self
            .eigenvalues
            .iter()
            .zip(&self.ln_complements)
            .enumerate()
        {
            let term = if alpha.m() == 1 {
                ln_comp
            } else {
                (-lambda / m).ln_1p()
            };
            if !term.is_finite() {
                return Err(Error::DegenerateProduct { index: n });
            }
            terms.push(term);
        }
        Ok(m * neumaier_sum(terms.into_iter()))
    }
}

/// Void probability of `B(0, min(R, effective_radius))` under the Ginibre
/// α-DPP: `(Π_n (1 + α λ̃_n))^{-1/α}` with `λ̃_n` the eigenvalues on the
/// smaller disk. Evaluated in log domain and clamped to `[0, 1]`.
pub fn log_det_product(
    spectrum: &GinibreSpectrum,
    alpha: Alpha,
    effective_radius: f64,
) -> Result<f64> {
    let restricted = spectrum.restricted(effective_radius)?;
    if restricted.is_empty() {
        return Ok(1.0);
    }
    let ln_value = restricted.ln_void_probability(alpha)?;
    Ok(ln_value.exp().clamp(0.0, 1.0))
}

pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lower_gamma_trivial_values() {
        assert_eq!(lower_incomplete_gamma(1.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            lower_incomplete_gamma(1.0, 1.0).unwrap(),
            1.0 - (-1.0f64).exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            lower_incomplete_gamma_int(0, 1.0).unwrap(),
            1.0 - (-1.0f64).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn lower_gamma_rejects_bad_arguments() {
        assert!(lower_incomplete_gamma(0.0, 1.0).is_err());
        assert!(lower_incomplete_gamma(-2.0, 1.0).is_err());
        assert!(lower_incomplete_gamma(2.0, -1.0).is_err());
        assert!(lower_incomplete_gamma(f64::NAN, 1.0).is_err());
        assert!(lower_incomplete_gamma_int(3, -0.5).is_err());
    }

    #[test]
    fn closed_form_at_integer_order() {
        // γ(3, a) = 2 - e^{-a}(a² + 2a + 2)
        for a in [0.1f64, 0.7, 2.0, 5.0, 30.0] {
            let exact = 2.0 - (-a).exp() * (a * a + 2.0 * a + 2.0);
            assert_relative_eq!(
                lower_incomplete_gamma(3.0, a).unwrap(),
                exact,
                max_relative = 1e-13
            );
            assert_relative_eq!(
                lower_incomplete_gamma_int(2, a).unwrap(),
                exact,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn regularized_matches_unregularized() {
        for (z, a) in [(0.5, 0.3), (2.5, 4.0), (7.0, 3.0), (12.3, 20.0)] {
            let p = regularized_lower_gamma(z, a).unwrap();
            let g = lower_incomplete_gamma(z, a).unwrap();
            assert_relative_eq!(p, g / gamma(z), max_relative = 1e-12);
        }
    }

    #[test]
    fn poisson_pmf_matches_direct_formula() {
        for (k, mean) in [(0usize, 3.0), (1, 0.2), (7, 7.5), (40, 31.0), (300, 314.0)] {
            let direct = k as f64 * f64::ln(mean) - mean - ln_factorial(k as u64);
            assert_relative_eq!(ln_poisson_pmf(k, mean), direct, epsilon = 1e-10);
        }
        assert_eq!(ln_poisson_pmf(0, 0.0), 0.0);
        assert_eq!(ln_poisson_pmf(3, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn tails_are_complementary() {
        let tails = PoissonTails::new(12.5, 40);
        for n in 0..=40 {
            let total = tails.ln_lower[n].exp() + tails.ln_upper[n].exp();
            assert_relative_eq!(total, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn first_eigenvalue_closed_form() {
        let spectrum = GinibreSpectrum::new(1.0 / PI, 1.0, Truncation::Auto).unwrap();
        assert_relative_eq!(
            spectrum.eigenvalues()[0],
            1.0 - (-1.0f64).exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(spectrum.ln_complements()[0], -1.0, max_relative = 1e-14);
    }

    #[test]
    fn spectrum_rejects_nonpositive_inputs() {
        assert!(GinibreSpectrum::new(0.0, 1.0, Truncation::Auto).is_err());
        assert!(GinibreSpectrum::new(1.0, -1.0, Truncation::Auto).is_err());
        assert!(GinibreSpectrum::new(f64::INFINITY, 1.0, Truncation::Auto).is_err());
    }

    #[test]
    fn auto_truncation_margin() {
        let spectrum = GinibreSpectrum::new(1.0, 10.0, Truncation::Auto).unwrap();
        let x = spectrum.mean_count();
        let n = spectrum.n_trunc().unwrap() as f64;
        assert!(n >= x.ceil() + (10.0 * x.sqrt()).ceil());
        assert!(spectrum.trace_defect() <= TRACE_TOLERANCE * x);
    }

    #[test]
    fn fixed_truncation_keeps_requested_order() {
        let spectrum = GinibreSpectrum::new(0.05, 10.0, Truncation::Fixed(7)).unwrap();
        assert_eq!(spectrum.n_trunc(), Some(7));
        assert!(spectrum.trace() < spectrum.mean_count());
    }

    #[test]
    fn super_exponential_decay_past_mean() {
        let spectrum = GinibreSpectrum::new(1.0, 10.0, Truncation::Auto).unwrap();
        let lam = spectrum.eigenvalues();
        assert!(lam[450] / lam[314] < 1e-12);
        // Pr(Poisson(100π) > 400), independent reference value
        assert_relative_eq!(lam[400], 1.4386903966733632e-6, max_relative = 1e-9);
        assert!(lam[50] > 1.0 - 1e-12);
    }

    #[test]
    fn empty_ball_gives_unit_void_probability() {
        let spectrum = GinibreSpectrum::new(1.0, 10.0, Truncation::Auto).unwrap();
        let half = Alpha::from_m(2).unwrap();
        assert_eq!(log_det_product(&spectrum, half, 0.0).unwrap(), 1.0);
        assert!(log_det_product(&spectrum, half, -1.0).is_err());
    }

    #[test]
    fn sparse_limit_gives_unit_void_probability() {
        let spectrum = GinibreSpectrum::new(1e-12, 10.0, Truncation::Auto).unwrap();
        let value = log_det_product(&spectrum, Alpha::from_m(1).unwrap(), 10.0).unwrap();
        assert_relative_eq!(value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn determinantal_void_is_below_poisson_void() {
        let spectrum = GinibreSpectrum::new(1.0, 10.0, Truncation::Auto).unwrap();
        let r = 2.747;
        let det = log_det_product(&spectrum, Alpha::from_m(1).unwrap(), r).unwrap();
        let poisson = (-PI * r * r).exp();
        assert!(det < poisson, "{det} !< {poisson}");
        assert!(det > 0.0);
    }

    #[test]
    fn large_window_has_no_overflow() {
        // πρR² = 1e4
        let rho = 1e4 / (PI * 100.0);
        let spectrum = GinibreSpectrum::new(rho, 10.0, Truncation::Auto).unwrap();
        assert!(spectrum.trace_defect() <= TRACE_TOLERANCE * 1e4);
        for m in [1, 2, 100] {
            let ln_v = spectrum
                .ln_void_probability(Alpha::from_m(m).unwrap())
                .unwrap();
            assert!(ln_v.is_finite() && ln_v < 0.0);
        }
    }

    #[test]
    fn compensated_sum_handles_cancellation() {
        let values = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(values.into_iter()), 2.0);
    }
}
