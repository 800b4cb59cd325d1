//! Sequential sampling of Ginibre projection processes on the disk.
//!
//! Given an active index set `I`, the projection kernel is
//! `K_I(x, y) = Σ_{n∈I} φ_n(x) conj(φ_n(y))` with the disk-normalised
//! eigenfunctions
//!
//! ```text
//! φ_n(z) = sqrt(ρ / (λ_n n!)) e^{-πρ|z|²/2} (sqrt(πρ) z)^n .
//! ```
//!
//! Points are drawn one at a time. After `k` points the conditional density
//! is `‖E^* v(x)‖² / (|I| - k)`, where `v(x) = (φ_n(x))_{n∈I}` and the columns
//! of `E` are an orthonormal basis of the coefficient subspace orthogonal to
//! `v(x_1), …, v(x_k)` (Schmidt orthogonalization, kept in complement form).
//! Each draw is a rejection step with uniform proposals on the disk; the
//! envelope is the maximum of the initial diagonal `K_I(x, x)`, which bounds
//! every residual diagonal pointwise.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use super::{GinibreModel, PointPattern, RngStream};
use crate::error::{Error, Result};
use crate::specfun::ln_poisson_pmf;

/// Below this many active indices the envelope is the sum of per-term peaks.
const SMALL_INDEX_SET: usize = 16;
const ENVELOPE_MARGIN: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerOptions {
    /// Proposals allowed per point before giving up.
    pub max_attempts: usize,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions {
            max_attempts: 10_000,
        }
    }
}

/// One draw of the projection mixture with Bernoulli probabilities
/// `scaled_eigenvalues[n]` over the eigenfunctions of `model`.
pub fn sample_projection_dpp(
    model: &GinibreModel,
    scaled_eigenvalues: &[f64],
    stream: &RngStream,
) -> Result<PointPattern> {
    let mut rng = stream.rng();
    let points = sample_projection_dpp_with(
        model,
        scaled_eigenvalues,
        &mut rng,
        SamplerOptions::default(),
    )?;
    Ok(PointPattern::from_trusted(points, model.window()))
}

pub fn sample_projection_dpp_with<R: Rng + ?Sized>(
    model: &GinibreModel,
    scaled_eigenvalues: &[f64],
    rng: &mut R,
    options: SamplerOptions,
) -> Result<Vec<[f64; 2]>> {
    let eigenvalues = model.spectrum().eigenvalues();
    if scaled_eigenvalues.len() > eigenvalues.len() {
        return Err(Error::invalid(
            "scaled_eigenvalues",
            format!(
                "{} values for a spectrum of length {}",
                scaled_eigenvalues.len(),
                eigenvalues.len()
            ),
        ));
    }
    if let Some(bad) = scaled_eigenvalues
        .iter()
        .find(|p| !(0.0..=1.0).contains(*p))
    {
        return Err(Error::invalid(
            "scaled_eigenvalues",
            format!("{bad} is not a probability"),
        ));
    }
    let active: Vec<usize> = scaled_eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &p)| rng.random::<f64>() < p)
        .map(|(n, _)| n)
        .collect();
    if active.is_empty() {
        return Ok(Vec::new());
    }
    let basis = ActiveBasis::new(model, &active);
    let mut points = Vec::with_capacity(active.len());
    run_sequential(&basis, rng, options, &mut points)?;
    Ok(points)
}

/// Superposition of `m` independent projection-mixture draws with
/// eigenvalues `λ_n / m`, for `α = -1/m`.
pub fn sample_alpha_dpp(model: &GinibreModel, stream: &RngStream) -> Result<PointPattern> {
    let mut rng = stream.rng();
    let points = sample_alpha_dpp_with(model, &mut rng, SamplerOptions::default())?;
    Ok(PointPattern::from_trusted(points, model.window()))
}

pub fn sample_alpha_dpp_with<R: Rng + ?Sized>(
    model: &GinibreModel,
    rng: &mut R,
    options: SamplerOptions,
) -> Result<Vec<[f64; 2]>> {
    if model.spectrum().is_empty() {
        return Ok(Vec::new());
    }
    let scaled = model.component_eigenvalues();
    let mut points = Vec::new();
    for _ in 0..model.alpha().m() {
        points.extend(sample_projection_dpp_with(model, &scaled, rng, options)?);
    }
    Ok(points)
}

/// Eigenfunctions `φ_n`, `n ∈ I`, evaluated in polar form.
struct ActiveBasis {
    radius: f64,
    /// `πρR²`
    x_window: f64,
    indices: Vec<usize>,
    /// `ρ / λ_n` per active index.
    weights: Vec<f64>,
    /// `1/n` and `ln n` for `n ≤ max index`.
    inv_n: Vec<f64>,
    ln_n: Vec<f64>,
}

impl ActiveBasis {
    fn new(model: &GinibreModel, indices: &[usize]) -> Self {
        let rho = model.rho();
        let radius = model.window().radius();
        let lam = model.spectrum().eigenvalues();
        let max_index = *indices.last().unwrap();
        ActiveBasis {
            radius,
            x_window: PI * rho * radius * radius,
            indices: indices.to_vec(),
            weights: indices.iter().map(|&n| rho / lam[n]).collect(),
            inv_n: (0..=max_index)
                .map(|n| if n == 0 { 0.0 } else { 1.0 / n as f64 })
                .collect(),
            ln_n: (0..=max_index).map(|n| (n as f64).ln()).collect(),
        }
    }

    fn dim(&self) -> usize {
        self.indices.len()
    }

    /// Fills `moduli[i] = |φ_{I[i]}|` at `t = πρ|z|²` and returns `K_I(z, z)`.
    fn moduli(&self, t: f64, moduli: &mut [f64]) -> f64 {
        let max_index = self.inv_n.len() - 1;
        let ln_t = t.ln();
        // Poisson mass e^{-t} t^n / n!, in log form until it leaves underflow range.
        let mut ln_mass = -t;
        let mut mass = 0.0;
        let mut linear = false;
        let mut slot = 0;
        let mut diag = 0.0;
        for n in 0..=max_index {
            if n > 0 {
                if linear {
                    mass *= t * self.inv_n[n];
                } else if t > 0.0 {
                    ln_mass += ln_t - self.ln_n[n];
                } else {
                    ln_mass = f64::NEG_INFINITY;
                }
            }
            if !linear && ln_mass > -700.0 {
                mass = ln_mass.exp();
                linear = true;
            }
            if self.indices[slot] == n {
                let sq = self.weights[slot] * mass;
                moduli[slot] = sq.sqrt();
                diag += sq;
                slot += 1;
            }
        }
        diag
    }

    /// Complex features `φ_n = |φ_n| e^{i n θ}` from precomputed moduli.
    fn features(&self, theta: f64, moduli: &[f64], re: &mut [f64], im: &mut [f64]) {
        let (s, c) = theta.sin_cos();
        let (mut pr, mut pi) = (1.0f64, 0.0f64);
        let mut power = 0;
        for (slot, &n) in self.indices.iter().enumerate() {
            while power < n {
                let next_r = pr * c - pi * s;
                pi = pr * s + pi * c;
                pr = next_r;
                power += 1;
            }
            re[slot] = moduli[slot] * pr;
            im[slot] = moduli[slot] * pi;
        }
    }

    /// Upper bound on `K_I(z, z)` over the disk.
    fn envelope(&self) -> f64 {
        if self.dim() <= SMALL_INDEX_SET {
            // Each term peaks at t = n (clamped to the window).
            return self
                .indices
                .iter()
                .zip(&self.weights)
                .map(|(&n, &w)| w * ln_poisson_pmf(n, (n as f64).min(self.x_window)).exp())
                .sum::<f64>()
                * ENVELOPE_MARGIN;
        }
        self.radial_maximum() * ENVELOPE_MARGIN
    }

    /// Grid search over `t ∈ [0, πρR²]` refined by golden-section search.
    fn radial_maximum(&self) -> f64 {
        let mut scratch = vec![0.0; self.dim()];
        let steps = (8.0 * self.x_window).ceil().max(256.0) as usize;
        let h = self.x_window / steps as f64;
        let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
        for i in 0..=steps {
            let value = self.moduli(i as f64 * h, &mut scratch);
            if value > best {
                best = value;
                best_i = i;
            }
        }
        let mut lo = best_i.saturating_sub(1) as f64 * h;
        let mut hi = ((best_i + 1).min(steps)) as f64 * h;
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..40 {
            let a = hi - ratio * (hi - lo);
            let b = lo + ratio * (hi - lo);
            let fa = self.moduli(a, &mut scratch);
            let fb = self.moduli(b, &mut scratch);
            best = best.max(fa).max(fb);
            if fa < fb {
                lo = a;
            } else {
                hi = b;
            }
        }
        best
    }
}

/// Orthonormal basis of the remaining coefficient subspace.
///
/// Row-major with a fixed row stride `n`; only the first `cols` entries of
/// each row are live.
struct ResidualBasis {
    n: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ResidualBasis {
    fn identity(n: usize) -> Self {
        let mut re = vec![0.0; n * n];
        for j in 0..n {
            re[j * n + j] = 1.0;
        }
        ResidualBasis {
            n,
            cols: n,
            re,
            im: vec![0.0; n * n],
        }
    }

    /// `u = E^* v` using only rows in `band`, outside of which `v` is
    /// negligible; returns `‖u‖²`.
    fn project(
        &self,
        vre: &[f64],
        vim: &[f64],
        band: std::ops::Range<usize>,
        ure: &mut [f64],
        uim: &mut [f64],
    ) -> f64 {
        let (n, d) = (self.n, self.cols);
        let (ure, uim) = (&mut ure[..d], &mut uim[..d]);
        ure.fill(0.0);
        uim.fill(0.0);
        accumulate_rows(&self.re, &self.im, n, vre, vim, band, ure, uim);
        ure.iter().zip(uim.iter()).map(|(a, b)| a * a + b * b).sum()
    }

    /// Removes the direction `E u / ‖u‖` with a Householder reflection in
    /// coefficient space and drops the resulting column.
    fn deflate(&mut self, ure: &mut [f64], uim: &mut [f64], norm_sq: f64) {
        let (n, d) = (self.n, self.cols);
        let norm = norm_sq.sqrt();
        let (mut pivot, mut pivot_abs) = (0, -1.0);
        for j in 0..d {
            let a = ure[j].hypot(uim[j]);
            if a > pivot_abs {
                pivot = j;
                pivot_abs = a;
            }
        }
        let (ph_r, ph_i) = if pivot_abs > 0.0 {
            (ure[pivot] / pivot_abs, uim[pivot] / pivot_abs)
        } else {
            (1.0, 0.0)
        };
        // w = u + e^{iφ} ‖u‖ e_p
        ure[pivot] += ph_r * norm;
        uim[pivot] += ph_i * norm;
        let beta = 1.0 / (norm * (norm + pivot_abs));
        reflect_rows(
            &mut self.re,
            &mut self.im,
            n,
            d,
            &ure[..d],
            &uim[..d],
            beta,
            pivot,
        );
        self.cols -= 1;
    }

    /// Column `j` as complex pairs, for tests.
    #[cfg(test)]
    fn column(&self, j: usize) -> Vec<(f64, f64)> {
        (0..self.n)
            .map(|row| (self.re[row * self.n + j], self.im[row * self.n + j]))
            .collect()
    }
}

// The hot loops are compiled twice, once with AVX2 enabled, and picked at
// run time. No FMA contraction happens and reductions keep a fixed order,
// so both versions produce identical bits.
macro_rules! dispatch {
    ($generic:ident, $avx2:ident, fn($($arg:ident: $ty:ty),* $(,)?)) => {
        #[cfg(target_arch = "x86_64")]
        #[target_feature(enable = "avx2")]
        unsafe fn $avx2($($arg: $ty),*) {
            $generic($($arg),*)
        }

        #[cfg(target_arch = "x86_64")]
        if is_x86_feature_detected!("avx2") {
            // SAFETY: the required CPU feature was detected just above.
            return unsafe { $avx2($($arg),*) };
        }
        $generic($($arg),*)
    };
}

/// `u += E[band]^* v[band]` over rows of stride `n`.
#[allow(clippy::too_many_arguments)]
fn accumulate_rows(
    re: &[f64],
    im: &[f64],
    n: usize,
    vre: &[f64],
    vim: &[f64],
    band: std::ops::Range<usize>,
    ure: &mut [f64],
    uim: &mut [f64],
) {
    #[inline(always)]
    fn kernel(
        re: &[f64],
        im: &[f64],
        n: usize,
        vre: &[f64],
        vim: &[f64],
        band: std::ops::Range<usize>,
        ure: &mut [f64],
        uim: &mut [f64],
    ) {
        let d = ure.len();
        for row in band {
            let (vr, vi) = (vre[row], vim[row]);
            let er = &re[row * n..row * n + d];
            let ei = &im[row * n..row * n + d];
            for j in 0..d {
                ure[j] += er[j] * vr + ei[j] * vi;
                uim[j] += er[j] * vi - ei[j] * vr;
            }
        }
    }
    dispatch!(
        kernel,
        kernel_avx2,
        fn(
            re: &[f64],
            im: &[f64],
            n: usize,
            vre: &[f64],
            vim: &[f64],
            band: std::ops::Range<usize>,
            ure: &mut [f64],
            uim: &mut [f64],
        )
    );
}

/// Applies `E ← E (I - β w w^*)` row by row, then moves the last live column
/// into the pivot slot.
#[allow(clippy::too_many_arguments)]
fn reflect_rows(
    re: &mut [f64],
    im: &mut [f64],
    n: usize,
    d: usize,
    wr: &[f64],
    wi: &[f64],
    beta: f64,
    pivot: usize,
) {
    #[inline(always)]
    fn kernel(
        re: &mut [f64],
        im: &mut [f64],
        n: usize,
        d: usize,
        wr: &[f64],
        wi: &[f64],
        beta: f64,
        pivot: usize,
    ) {
        let last = d - 1;
        for row in 0..n {
            let er = &mut re[row * n..row * n + d];
            let ei = &mut im[row * n..row * n + d];
            let (a, b) = dot(er, ei, wr, wi);
            let (yr, yi) = (beta * a, beta * b);
            for j in 0..d {
                er[j] -= yr * wr[j] + yi * wi[j];
                ei[j] -= yi * wr[j] - yr * wi[j];
            }
            er[pivot] = er[last];
            ei[pivot] = ei[last];
        }
    }
    dispatch!(
        kernel,
        kernel_avx2,
        fn(
            re: &mut [f64],
            im: &mut [f64],
            n: usize,
            d: usize,
            wr: &[f64],
            wi: &[f64],
            beta: f64,
            pivot: usize,
        )
    );
}

/// `Σ e_i w_i` over complex vectors in split form.
#[inline(always)]
fn dot(er: &[f64], ei: &[f64], wr: &[f64], wi: &[f64]) -> (f64, f64) {
    let mut acc_r = [0.0f64; 4];
    let mut acc_i = [0.0f64; 4];
    let chunks = er.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let i = 4 * c + l;
            acc_r[l] += er[i] * wr[i] - ei[i] * wi[i];
            acc_i[l] += er[i] * wi[i] + ei[i] * wr[i];
        }
    }
    let mut re = (acc_r[0] + acc_r[1]) + (acc_r[2] + acc_r[3]);
    let mut im = (acc_i[0] + acc_i[1]) + (acc_i[2] + acc_i[3]);
    for i in 4 * chunks..er.len() {
        re += er[i] * wr[i] - ei[i] * wi[i];
        im += er[i] * wi[i] + ei[i] * wr[i];
    }
    (re, im)
}

/// Slots whose squared modulus exceeds `1e-32` of the diagonal. Dropping the
/// rest changes `‖E^* v‖²` by far less than one ulp.
fn significant_band(moduli: &[f64], diag: f64) -> std::ops::Range<usize> {
    let floor = 1e-16 * diag.sqrt();
    let first = moduli.iter().position(|&m| m > floor).unwrap_or(0);
    let last = moduli.iter().rposition(|&m| m > floor).map_or(0, |i| i + 1);
    first..last.max(first)
}

fn run_sequential<R: Rng + ?Sized>(
    basis: &ActiveBasis,
    rng: &mut R,
    options: SamplerOptions,
    points: &mut Vec<[f64; 2]>,
) -> Result<()> {
    let dim = basis.dim();
    let envelope = basis.envelope();
    let mut residual = ResidualBasis::identity(dim);
    let mut moduli = vec![0.0; dim];
    let (mut vre, mut vim) = (vec![0.0; dim], vec![0.0; dim]);
    let (mut ure, mut uim) = (vec![0.0; dim], vec![0.0; dim]);

    for k in 0..dim {
        let mut attempts = 0;
        let (point, norm_sq) = loop {
            if attempts == options.max_attempts {
                return Err(Error::RejectionBudgetExhausted { point: k, attempts });
            }
            attempts += 1;
            let u_radial: f64 = rng.random();
            let u_angle: f64 = rng.random();
            let u_accept: f64 = rng.random();
            let t = basis.x_window * u_radial;
            let threshold = u_accept * envelope;
            let diag = basis.moduli(t, &mut moduli);
            if threshold >= diag {
                continue;
            }
            let theta = 2.0 * PI * u_angle;
            basis.features(theta, &moduli, &mut vre, &mut vim);
            let band = significant_band(&moduli, diag);
            let norm_sq = residual.project(&vre, &vim, band, &mut ure, &mut uim);
            if threshold < norm_sq {
                let r = basis.radius * u_radial.sqrt();
                break ([r * theta.cos(), r * theta.sin()], norm_sq);
            }
        };
        points.push(point);
        if k + 1 < dim {
            residual.deflate(&mut ure, &mut uim, norm_sq);
        }
    }
    Ok(())
}

/// Parallel helper used by tests and benches: `replications` independent
/// α-DPP draws on streams `0..replications`.
#[doc(hidden)]
pub fn sample_many(
    model: &GinibreModel,
    master_seed: u64,
    replications: usize,
) -> Result<Vec<PointPattern>> {
    (0..replications as u64)
        .into_par_iter()
        .map(|id| sample_alpha_dpp(model, &RngStream::new(master_seed, id)))
        .collect()
}
