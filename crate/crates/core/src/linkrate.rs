//! Transmit beamforming and achievable rates.
//!
//! The power constraint is on the generator voltages, `Σ|v_G|² = budget`.
//! Noise is whitened with `R_n^{-1/2}` before precoding so that every user
//! sees unit-variance noise.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::multiport::{standard_complex, ChannelRealization};

/// Relative eigenvalue floor used for `R_n^{-1/2}`.
pub const WHITENING_FLOOR: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("power budget must be positive and finite, got {0}")]
    InvalidBudget(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("noise correlation has no positive spectrum to whiten")]
    SingularWhitening,
    #[error("regularised Gram matrix is singular")]
    SingularGram,
}

pub type Result<T> = std::result::Result<T, LinkError>;

type CMat = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PowerBudget {
    /// Sum of squared generator-voltage magnitudes, V².
    pub total_generator_power: f64,
}

impl PowerBudget {
    pub fn new(total_generator_power: f64) -> Result<Self> {
        if !(total_generator_power.is_finite() && total_generator_power > 0.0) {
            return Err(LinkError::InvalidBudget(total_generator_power));
        }
        Ok(PowerBudget {
            total_generator_power,
        })
    }
}

/// `R_n^{-1/2}` from the Hermitian eigendecomposition, eigenvalues floored
/// at `WHITENING_FLOOR·tr(R_n)`.
pub fn inverse_sqrt(r_n: &CMat) -> Result<CMat> {
    if r_n.nrows() != r_n.ncols() {
        return Err(LinkError::DimensionMismatch("R_n is not square".into()));
    }
    let herm = (r_n + r_n.adjoint()) * Complex64::new(0.5, 0.0);
    let trace = herm.trace().re;
    if !(trace.is_finite() && trace > 0.0) {
        return Err(LinkError::SingularWhitening);
    }
    let eig = herm.symmetric_eigen();
    let floor = WHITENING_FLOOR * trace;
    let d = eig
        .eigenvalues
        .map(|l| Complex64::new(1.0 / l.max(floor).sqrt(), 0.0));
    let v = &eig.eigenvectors;
    Ok(v * CMat::from_diagonal(&d) * v.adjoint())
}

/// Whitened channel `R_n^{-1/2} H`.
pub fn whiten(h: &CMat, r_n: &CMat) -> Result<CMat> {
    if r_n.nrows() != h.nrows() {
        return Err(LinkError::DimensionMismatch(format!(
            "H has {} rows but R_n is {}x{}",
            h.nrows(),
            r_n.nrows(),
            r_n.ncols()
        )));
    }
    Ok(inverse_sqrt(r_n)? * h)
}

/// Single-user spectral efficiency with maximum-ratio generator voltages,
/// `log2(1 + budget·‖h‖²/R_n)`.
pub fn spectral_efficiency_point(chan: &ChannelRealization, budget: PowerBudget) -> Result<f64> {
    if chan.h.nrows() != 1 || chan.r_n.shape() != (1, 1) {
        return Err(LinkError::DimensionMismatch(format!(
            "single-user channel expected, got {} users",
            chan.h.nrows()
        )));
    }
    let noise = chan.r_n[(0, 0)].re;
    if !(noise > 0.0) {
        return Err(LinkError::SingularWhitening);
    }
    let gain = chan.h.norm_squared();
    Ok((budget.total_generator_power * gain / noise).ln_1p() / std::f64::consts::LN_2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    /// N×M generator-voltage precoder with `tr(P Pᴴ) = budget`.
    pub p: CMat,
    /// Power normalisation; the receivers apply `1/c`.
    pub c: f64,
}

/// Transmit Wiener filter on the whitened channel,
/// `P = c (H_wᴴ H_w + ξ I)⁻¹ H_wᴴ` with `ξ = M/budget`.
pub fn lmmse_precoder(h: &CMat, r_n: &CMat, budget: PowerBudget) -> Result<Precoder> {
    let h_w = whiten(h, r_n)?;
    lmmse_precoder_whitened(&h_w, budget)
}

pub fn lmmse_precoder_whitened(h_w: &CMat, budget: PowerBudget) -> Result<Precoder> {
    let (m, n) = h_w.shape();
    if m == 0 || n == 0 {
        return Err(LinkError::DimensionMismatch("empty channel".into()));
    }
    let xi = m as f64 / budget.total_generator_power;
    // push-through form H_wᴴ (H_w H_wᴴ + ξ I)⁻¹, an M×M solve that stays
    // accurate in the zero-forcing limit when N > M
    let gram = h_w * h_w.adjoint() + CMat::identity(m, m) * Complex64::new(xi, 0.0);
    let inv = gram.try_inverse().ok_or(LinkError::SingularGram)?;
    let p0 = h_w.adjoint() * inv;
    let power = p0.norm_squared();
    if !(power > 0.0 && power.is_finite()) {
        // zero channel: nothing to steer, spread the budget evenly
        let p = CMat::from_element(n, m, Complex64::new((budget.total_generator_power / (n * m) as f64).sqrt(), 0.0));
        return Ok(Precoder { p, c: f64::INFINITY });
    }
    let c = (budget.total_generator_power / power).sqrt();
    Ok(Precoder {
        p: p0 * Complex64::new(c, 0.0),
        c,
    })
}

/// Sum-MSE with the optimal common receive scalar,
/// `M - |tr G|²/(‖G‖_F² + M)` for `G = H_w P`.
pub fn sum_mse(h_w: &CMat, p: &CMat) -> f64 {
    let g = h_w * p;
    let m = g.nrows() as f64;
    m - g.trace().norm_sqr() / (g.norm_squared() + m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub per_user_rate: Vec<f64>,
    pub sinr: Vec<f64>,
    pub precoder: CMat,
}

/// Per-user SINR and rate for `G = R_n^{-1/2} H P`.
pub fn per_user_rates(h: &CMat, r_n: &CMat, precoder: &Precoder) -> Result<RateResult> {
    if precoder.p.nrows() != h.ncols() || precoder.p.ncols() != h.nrows() {
        return Err(LinkError::DimensionMismatch(format!(
            "precoder is {}x{}, channel is {}x{}",
            precoder.p.nrows(),
            precoder.p.ncols(),
            h.nrows(),
            h.ncols()
        )));
    }
    let g = whiten(h, r_n)? * &precoder.p;
    Ok(rates_from_effective(&g, precoder.p.clone()))
}

pub fn rates_from_effective(g: &CMat, precoder: CMat) -> RateResult {
    let m = g.nrows();
    let mut sinr = Vec::with_capacity(m);
    for u in 0..m {
        let signal = g[(u, u)].norm_sqr();
        let interference: f64 = (0..g.ncols())
            .filter(|&j| j != u)
            .map(|j| g[(u, j)].norm_sqr())
            .sum();
        sinr.push(signal / (interference + 1.0));
    }
    let per_user_rate = sinr.iter().map(|s| s.ln_1p() / std::f64::consts::LN_2).collect();
    RateResult {
        per_user_rate,
        sinr,
        precoder,
    }
}

/// Random precoder scaled to the power budget.
pub fn random_feasible_precoder<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, budget: PowerBudget) -> CMat {
    let p = CMat::from_fn(n, m, |_, _| standard_complex(rng));
    scale_to_budget(p, budget)
}

pub fn scale_to_budget(p: CMat, budget: PowerBudget) -> CMat {
    let power = p.norm_squared();
    p * Complex64::new((budget.total_generator_power / power).sqrt(), 0.0)
}

/// Generator voltages for unit symbols on every stream.
pub fn generator_voltages(p: &CMat) -> DVector<Complex64> {
    p.column_sum()
}
