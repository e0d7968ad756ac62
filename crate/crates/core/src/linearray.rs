//! Spectral model of the infinite, periodically fed connected wire: the
//! admittance spectrum Y(α), its impulse response y(z), the periodised
//! admittance Y_d(α), the discrete impedance kernel z_d[m] and the open-circuit
//! Toeplitz matrix Z_T of a finite set of feeds.
//!
//! Internally everything runs in units normalised to the free-space
//! wavenumber k0: `u = α/k0`, `ka`, `kd` and `κ = k/k0 = 1 - jδ`. The
//! normalised admittance is `ŷ(u) = Z0·k0·Y(α) = 4κ / (b² J0(b·ka) H0⁽²⁾(b·ka))`
//! with `b = β/k0`, so `Z_d/Z0 = kd / Σ_ℓ ŷ(u - ℓ·2π/kd)`. Results expressed
//! relative to Z0 therefore depend on frequency only through ka and kd.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::quadrature::{self, mode_sum, IntegrationSpec, QuadError, TailSumSpec, VecEstimate};
use crate::specfun::{self, beta_of_alpha, Order, SpecFunError};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const MU0: f64 = 1.256_637_062_12e-6;
pub const EPS0: f64 = 8.854_187_812_8e-12;

/// Largest admissible regularisation loss.
pub const MAX_LOSS: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearrayError {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("admittance denominator vanishes at alpha/k0 = {0}")]
    Singularity(f64),
    #[error("zero discrete admittance at alpha/k0 = {0}")]
    ZeroAdmittance(f64),
    #[error("grid size {size} must be a power of two and at least {min}")]
    InvalidGrid { size: usize, min: usize },
    #[error("kernel has {have} lags, {need} requested")]
    ShortKernel { have: usize, need: usize },
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

pub type Result<T> = std::result::Result<T, LinearrayError>;

fn invalid(field: &'static str, reason: impl Into<String>) -> LinearrayError {
    LinearrayError::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    pub frequency_hz: f64,
}

impl Medium {
    pub fn new(frequency_hz: f64) -> Result<Self> {
        if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
            return Err(invalid("frequency_hz", format!("{frequency_hz} is not positive")));
        }
        Ok(Medium { frequency_hz })
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency_hz
    }

    /// Lossless free-space wavenumber.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    /// Regularised wavenumber `k0 (1 - j·loss_delta)`.
    pub fn wavenumber(&self, loss_delta: f64) -> Complex64 {
        Complex64::new(self.k0(), -self.k0() * loss_delta)
    }

    pub fn epsilon(&self) -> f64 {
        EPS0
    }

    pub fn mu(&self) -> f64 {
        MU0
    }

    pub fn z0(&self) -> f64 {
        (MU0 / EPS0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineGeometry {
    pub wire_radius_a: f64,
    pub feed_spacing_delta: f64,
    pub num_feeds: usize,
    pub loss_delta: f64,
}

impl LineGeometry {
    pub fn new(wire_radius_a: f64, feed_spacing_delta: f64, num_feeds: usize, loss_delta: f64) -> Result<Self> {
        let g = LineGeometry {
            wire_radius_a,
            feed_spacing_delta,
            num_feeds,
            loss_delta,
        };
        g.validate()?;
        Ok(g)
    }

    /// Geometry given in wavelengths of `med`.
    pub fn in_wavelengths(med: &Medium, a_over_lambda: f64, delta_over_lambda: f64, num_feeds: usize, loss_delta: f64) -> Result<Self> {
        let l = med.wavelength();
        Self::new(a_over_lambda * l, delta_over_lambda * l, num_feeds, loss_delta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wire_radius_a.is_finite() && self.wire_radius_a > 0.0) {
            return Err(invalid("wire_radius_a", format!("{} must be positive", self.wire_radius_a)));
        }
        if !(self.feed_spacing_delta.is_finite() && self.feed_spacing_delta > self.wire_radius_a) {
            return Err(invalid(
                "feed_spacing_delta",
                format!(
                    "{} must exceed the wire radius {}",
                    self.feed_spacing_delta, self.wire_radius_a
                ),
            ));
        }
        if self.num_feeds < 1 {
            return Err(invalid("num_feeds", "at least one feed is required"));
        }
        if !(self.loss_delta >= 0.0 && self.loss_delta <= MAX_LOSS) {
            return Err(invalid(
                "loss_delta",
                format!("{} outside [0, {MAX_LOSS}]", self.loss_delta),
            ));
        }
        Ok(())
    }

    /// Axial position of feed `n`; the feeds are centred on z = 0.
    pub fn feed_position(&self, n: usize) -> f64 {
        (n as f64 - (self.num_feeds as f64 - 1.0) / 2.0) * self.feed_spacing_delta
    }
}

/// Dimensionless description of the problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectricalSize {
    pub ka: f64,
    pub kd: f64,
    pub kappa: Complex64,
}

impl ElectricalSize {
    pub fn of(geom: &LineGeometry, med: &Medium) -> Self {
        let k0 = med.k0();
        ElectricalSize {
            ka: k0 * geom.wire_radius_a,
            kd: k0 * geom.feed_spacing_delta,
            kappa: Complex64::new(1.0, -geom.loss_delta),
        }
    }

    /// Brillouin-zone width in units of k0.
    pub fn zone(&self) -> f64 {
        2.0 * PI / self.kd
    }

    /// Reduce `u` to the centred zone `[-zone/2, zone/2)`.
    pub fn reduce(&self, u: f64) -> f64 {
        let p = self.zone();
        let r = u - p * (u / p).round();
        if r >= 0.5 * p {
            r - p
        } else {
            r
        }
    }
}

/// `J0(x)·H0⁽²⁾(x)` for `Im x <= 0` without overflow.
pub(crate) fn j0h0(x: Complex64) -> Result<Complex64> {
    let j = specfun::bessel_j_scaled(Order::Zero, x)?;
    let h = specfun::hankel2_scaled(Order::Zero, x)?;
    // exp(|Im x|) exp(-jx) = exp(-j Re x) when Im x <= 0
    Ok(j * h * Complex64::from_polar(1.0, -x.re) * (x.im.abs() + x.im).exp())
}

/// `ŷ(u) = Z0·k0·Y(u·k0)`.
pub fn normalized_admittance(u: f64, es: &ElectricalSize) -> Result<Complex64> {
    let b = beta_of_alpha(Complex64::new(u, 0.0), es.kappa);
    if b == Complex64::new(0.0, 0.0) {
        return Err(LinearrayError::Singularity(u));
    }
    let den = b * b * j0h0(b * es.ka)?;
    if !(den.norm() >= 1e-300) {
        return Err(LinearrayError::Singularity(u));
    }
    Ok(es.kappa * 4.0 / den)
}

/// Spectral admittance Y(α) in siemens.
pub fn admittance_spectrum(alpha: f64, geom: &LineGeometry, med: &Medium) -> Result<Complex64> {
    let es = ElectricalSize::of(geom, med);
    Ok(normalized_admittance(alpha / med.k0(), &es)? / (med.z0() * med.k0()))
}

/// Default integration setup for y(z): window `[-alpha_max, alpha_max]` with
/// breakpoints at the branch points ±Re(k).
pub fn impulse_spec(med: &Medium, alpha_max: f64) -> Result<IntegrationSpec> {
    let k0 = med.k0();
    let spec = IntegrationSpec::new(-alpha_max, alpha_max)?;
    Ok(if alpha_max > k0 {
        spec.with_splits(vec![-k0, k0])?
    } else {
        spec
    })
}

/// `y(z) = (1/2π) ∫ Y(α) e^{jαz} dα` over the window of `spec`.
pub fn admittance_impulse_response(
    z: f64,
    geom: &LineGeometry,
    med: &Medium,
    spec: &IntegrationSpec,
) -> Result<quadrature::Estimate> {
    let v = impulse_response_batch(&[z], geom, med, spec)?;
    Ok(quadrature::Estimate {
        value: v.value[0],
        error: v.error[0],
        panels: v.panels,
        warning: v.warning,
    })
}

/// y(z) at several axial positions with one shared adaptive panel tree.
pub fn impulse_response_batch(
    zs: &[f64],
    geom: &LineGeometry,
    med: &Medium,
    spec: &IntegrationSpec,
) -> Result<VecEstimate> {
    let es = ElectricalSize::of(geom, med);
    let k0 = med.k0();
    let scale = 1.0 / (2.0 * PI * med.z0() * k0);
    let mut failure = None;
    let est = quadrature::integrate_vec(
        |alpha, out| match normalized_admittance(alpha / k0, &es) {
            Ok(y) => {
                let y = y * scale;
                for (o, z) in out.iter_mut().zip(zs) {
                    *o = y * Complex64::from_polar(1.0, alpha * z);
                }
            }
            Err(e) => {
                failure.get_or_insert(e);
            }
        },
        zs.len(),
        spec,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

/// `Σ_{|ℓ| ≤ l_max} ŷ(u_c - ℓ·zone)` with `u_c` the centred-zone image of `u`.
pub fn normalized_mode_sum(u: f64, es: &ElectricalSize, tail: &TailSumSpec) -> Result<Complex64> {
    let uc = es.reduce(u);
    let p = es.zone();
    let mut failure = None;
    let s = mode_sum(
        |l| match normalized_admittance(uc - l as f64 * p, es) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        },
        tail,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(s),
    }
}

/// `Y_d(α) = (1/Δ) Σ_ℓ Y(α - 2πℓ/Δ)` truncated at `tail.l_max`.
pub fn discrete_admittance(alpha: f64, geom: &LineGeometry, med: &Medium, tail: &TailSumSpec) -> Result<Complex64> {
    let es = ElectricalSize::of(geom, med);
    let s = normalized_mode_sum(alpha / med.k0(), &es, tail)?;
    Ok(s / (med.z0() * es.kd))
}

/// `Z_d(α) = 1 / Y_d(α)` in ohms.
pub fn impedance_spectrum(alpha: f64, geom: &LineGeometry, med: &Medium, tail: &TailSumSpec) -> Result<Complex64> {
    let es = ElectricalSize::of(geom, med);
    Ok(normalized_impedance(alpha / med.k0(), &es, tail)? * med.z0())
}

/// `Z_d/Z0` at `u = α/k0`.
pub fn normalized_impedance(u: f64, es: &ElectricalSize, tail: &TailSumSpec) -> Result<Complex64> {
    let s = normalized_mode_sum(u, es, tail)?;
    if s == Complex64::new(0.0, 0.0) {
        return Err(LinearrayError::ZeroAdmittance(u));
    }
    Ok(es.kd / s)
}

/// Spectral truncation and sampling choices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelNumerics {
    /// Spectral window half-width in units of Re(k).
    pub alpha_max_factor: f64,
    /// Mode-sum truncation; derived from the window when `None`.
    pub l_max: Option<usize>,
    /// Brillouin-zone samples; `max(2048, 64 N)` rounded up to a power of two when `None`.
    pub grid_size: Option<usize>,
}

impl Default for KernelNumerics {
    fn default() -> Self {
        KernelNumerics {
            alpha_max_factor: 100.0,
            l_max: None,
            grid_size: None,
        }
    }
}

impl KernelNumerics {
    pub fn l_max(&self, geom: &LineGeometry, med: &Medium) -> usize {
        self.l_max.unwrap_or_else(|| {
            let es = ElectricalSize::of(geom, med);
            ((self.alpha_max_factor * es.kd / (2.0 * PI)).ceil() as usize).max(1)
        })
    }

    pub fn grid_size(&self, geom: &LineGeometry) -> usize {
        self.grid_size
            .unwrap_or_else(|| (64 * geom.num_feeds).max(2048).next_power_of_two())
    }

    pub fn tail(&self, geom: &LineGeometry, med: &Medium) -> Result<TailSumSpec> {
        Ok(TailSumSpec::plain(self.l_max(geom, med))?)
    }
}

/// Samples of Y_d on the uniform grid `α_i = i·(2π/Δ)/M`, `i = 0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAdmittance {
    pub alpha_grid: Vec<f64>,
    pub yd_samples: Vec<Complex64>,
    pub l_max: usize,
}

pub fn spectral_admittance(geom: &LineGeometry, med: &Medium, grid_size: usize, tail: &TailSumSpec) -> Result<SpectralAdmittance> {
    let es = ElectricalSize::of(geom, med);
    let sums = zone_mode_sums(&es, grid_size, tail)?;
    let k0 = med.k0();
    let scale = 1.0 / (med.z0() * es.kd);
    Ok(SpectralAdmittance {
        alpha_grid: (0..grid_size)
            .map(|i| i as f64 * es.zone() * k0 / grid_size as f64)
            .collect(),
        yd_samples: sums.into_iter().map(|s| s * scale).collect(),
        l_max: tail.l_max,
    })
}

fn zone_mode_sums(es: &ElectricalSize, grid_size: usize, tail: &TailSumSpec) -> Result<Vec<Complex64>> {
    let p = es.zone();
    (0..grid_size)
        .into_par_iter()
        .map(|i| normalized_mode_sum(i as f64 * p / grid_size as f64, es, tail))
        .collect()
}

/// The lags `z_d[m]`, `m = 0..M`, of the periodic kernel (lag `M - m` is lag `-m`).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteImpedance {
    normalized: Vec<Complex64>,
    z0: f64,
    pub spacing: f64,
    pub num_feeds: usize,
}

impl DiscreteImpedance {
    /// `z_d[m]` in ohms, for any integer lag.
    pub fn lag(&self, m: i64) -> Complex64 {
        self.normalized_lag(m) * self.z0
    }

    /// `z_d[m] / Z0`.
    pub fn normalized_lag(&self, m: i64) -> Complex64 {
        let len = self.normalized.len() as i64;
        self.normalized[m.rem_euclid(len) as usize]
    }

    /// The first `num_feeds` lags in ohms.
    pub fn kernel(&self) -> Vec<Complex64> {
        (0..self.num_feeds as i64).map(|m| self.lag(m)).collect()
    }

    pub fn grid_size(&self) -> usize {
        self.normalized.len()
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }
}

/// `z_d[m] = (Δ/2π) ∫_0^{2π/Δ} e^{jαmΔ} / Y_d(α) dα`, by an M-point inverse DFT.
pub fn impedance_kernel(geom: &LineGeometry, med: &Medium, grid_size: usize, tail: &TailSumSpec) -> Result<DiscreteImpedance> {
    geom.validate()?;
    let min = 64 * geom.num_feeds;
    if !grid_size.is_power_of_two() || grid_size < min {
        return Err(LinearrayError::InvalidGrid { size: grid_size, min });
    }
    let es = ElectricalSize::of(geom, med);
    let sums = zone_mode_sums(&es, grid_size, tail)?;
    let mut buf = Vec::with_capacity(grid_size);
    for (i, s) in sums.iter().enumerate() {
        if *s == Complex64::new(0.0, 0.0) {
            return Err(LinearrayError::ZeroAdmittance(i as f64 * es.zone() / grid_size as f64));
        }
        buf.push(es.kd / s);
    }
    let fft = FftPlanner::new().plan_fft_inverse(grid_size);
    fft.process(&mut buf);
    let inv = 1.0 / grid_size as f64;
    buf.iter_mut().for_each(|v| *v *= inv);
    Ok(DiscreteImpedance {
        normalized: buf,
        z0: med.z0(),
        spacing: geom.feed_spacing_delta,
        num_feeds: geom.num_feeds,
    })
}

/// Kernel with the default numerics for `geom`.
pub fn default_kernel(geom: &LineGeometry, med: &Medium, numerics: &KernelNumerics) -> Result<DiscreteImpedance> {
    impedance_kernel(geom, med, numerics.grid_size(geom), &numerics.tail(geom, med)?)
}

/// Open-circuit impedance matrix `Z_T[m, n] = z_d[|m - n|]`.
pub fn finite_array_impedance(kernel: &DiscreteImpedance, n: usize) -> Result<DMatrix<Complex64>> {
    if n > kernel.grid_size() {
        return Err(LinearrayError::ShortKernel {
            have: kernel.grid_size(),
            need: n,
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| kernel.lag((i as i64 - j as i64).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup(delta_wl: f64, n: usize) -> (LineGeometry, Medium) {
        let med = Medium::new(1e9).unwrap();
        let geom = LineGeometry::in_wavelengths(&med, 1.0 / 500.0, delta_wl, n, 1e-4).unwrap();
        (geom, med)
    }

    #[test]
    fn medium_constants() {
        let med = Medium::new(2.4e9).unwrap();
        assert!((med.z0() - (med.mu() / med.epsilon()).sqrt()).abs() < 1e-12 * med.z0());
        assert!((med.z0() - 376.730_313).abs() < 1e-5);
        let k = med.wavenumber(1e-4) * med.wavelength();
        assert!((k - c(2.0 * PI, -2.0 * PI * 1e-4)).norm() < 1e-12 * 2.0 * PI);
        assert!(Medium::new(0.0).is_err());
    }

    #[test]
    fn geometry_invariants() {
        assert!(LineGeometry::new(-1e-3, 0.1, 2, 1e-4).is_err());
        let e = LineGeometry::new(1e-3, 1e-3, 2, 1e-4).unwrap_err();
        assert!(e.to_string().contains("feed_spacing_delta"));
        assert!(LineGeometry::new(1e-3, 0.1, 0, 1e-4).is_err());
        assert!(LineGeometry::new(1e-3, 0.1, 1, 0.1).is_err());
        let g = LineGeometry::new(1e-3, 0.5, 3, 0.0).unwrap();
        assert_eq!(g.feed_position(0), -0.5);
        assert_eq!(g.feed_position(1), 0.0);
    }

    #[test]
    fn admittance_at_zero_is_direct_substitution() {
        let (geom, med) = setup(2.0, 1);
        let k = med.wavenumber(geom.loss_delta);
        let ka = k * geom.wire_radius_a;
        let j0 = specfun::bessel_j(Order::Zero, ka).unwrap();
        let h0 = specfun::hankel2(Order::Zero, ka).unwrap();
        let want = k * 4.0 / med.z0() / (k * k * j0 * h0);
        let got = admittance_spectrum(0.0, &geom, &med).unwrap();
        assert!((got - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn admittance_is_even() {
        let (geom, med) = setup(2.0, 1);
        let a = 0.7 * med.k0();
        assert_eq!(
            admittance_spectrum(a, &geom, &med).unwrap(),
            admittance_spectrum(-a, &geom, &med).unwrap()
        );
    }

    #[test]
    fn evanescent_admittance_matches_modified_bessel_route() {
        // β = -j w: J0(βa) H0(βa) = I0(wa) · (2j/π) K0(wa)
        let med = Medium::new(1e9).unwrap();
        let geom = LineGeometry::in_wavelengths(&med, 1.0 / 500.0, 2.0, 1, 0.0).unwrap();
        let k0 = med.k0();
        let alpha = 3.0 * k0;
        let w = (alpha * alpha - k0 * k0).sqrt();
        let x = w * geom.wire_radius_a;
        let i0 = specfun::bessel_i(Order::Zero, c(x, 0.0)).unwrap().re;
        let k0f = specfun::bessel_k(Order::Zero, c(x, 0.0)).unwrap().re;
        let den = -w * w * i0 * k0f * (2.0 / PI);
        let want = c(0.0, -4.0 * k0 / (med.z0() * den));
        let got = admittance_spectrum(alpha, &geom, &med).unwrap();
        assert!((got - want).norm() < 1e-9 * want.norm(), "{got} {want}");
    }

    #[test]
    fn lossless_branch_point_is_singular() {
        let med = Medium::new(1e9).unwrap();
        let geom = LineGeometry::in_wavelengths(&med, 0.002, 2.0, 1, 0.0).unwrap();
        assert!(matches!(
            admittance_spectrum(med.k0(), &geom, &med),
            Err(LinearrayError::Singularity(_))
        ));
    }

    #[test]
    fn periodised_admittance_is_periodic() {
        let (geom, med) = setup(2.0, 1);
        let tail = TailSumSpec::plain(200).unwrap();
        let p = 2.0 * PI / geom.feed_spacing_delta;
        for &a in &[0.1 * p, 0.37 * p, 0.5 * p] {
            let y1 = discrete_admittance(a, &geom, &med, &tail).unwrap();
            let y2 = discrete_admittance(a + p, &geom, &med, &tail).unwrap();
            assert!((y1 - y2).norm() <= 1e-12 * y1.norm());
        }
    }

    #[test]
    fn periodised_admittance_self_converges() {
        // Re Y_d settles; Im Y_d carries the delta-gap term and must grow by the
        // analytic tail Σ 2·4πκ·ka/(ℓ·zone) / (Z0·kd) (large-argument I0·K0 ~ 1/2w).
        let (geom, med) = setup(2.0, 1);
        let a = PI / geom.feed_spacing_delta;
        let y1 = discrete_admittance(a, &geom, &med, &TailSumSpec::plain(2000).unwrap()).unwrap();
        let y2 = discrete_admittance(a, &geom, &med, &TailSumSpec::plain(4000).unwrap()).unwrap();
        assert!((y1.re - y2.re).abs() < 5e-4 * y2.re.abs(), "{y1} {y2}");
        let es = ElectricalSize::of(&geom, &med);
        let predicted: f64 = (2001..=4000)
            .map(|l| 2.0 * 4.0 * PI * es.ka / (l as f64 * es.zone()))
            .sum::<f64>()
            / (med.z0() * es.kd);
        let grown = y2.im - y1.im;
        assert!((grown - predicted).abs() < 0.01 * predicted, "{grown} {predicted}");
    }

    #[test]
    fn passivity_over_the_zone() {
        let (geom, med) = setup(2.0, 1);
        let num = KernelNumerics::default();
        let tail = num.tail(&geom, &med).unwrap();
        let sa = spectral_admittance(&geom, &med, 1024, &tail).unwrap();
        for y in &sa.yd_samples {
            assert!((1.0 / y).re >= 0.0);
        }
        assert_eq!(sa.l_max, 200);
    }

    #[test]
    fn kernel_symmetry_and_passivity() {
        let (geom, med) = setup(2.0, 4);
        let k = default_kernel(&geom, &med, &KernelNumerics::default()).unwrap();
        assert_eq!(k.grid_size(), 2048);
        for m in 1..20 {
            let a = k.lag(m);
            let b = k.lag(-m);
            assert!((a - b).norm() < 1e-12 * k.lag(0).norm(), "m={m}");
        }
        assert!(k.lag(0).re > 0.0);
        assert_eq!(k.kernel().len(), 4);
    }

    #[test]
    fn grid_refinement_changes_self_impedance_little() {
        let (geom, med) = setup(2.0, 1);
        let tail = KernelNumerics::default().tail(&geom, &med).unwrap();
        let a = impedance_kernel(&geom, &med, 1024, &tail).unwrap().lag(0);
        let b = impedance_kernel(&geom, &med, 2048, &tail).unwrap().lag(0);
        assert!((a - b).norm() < 1e-4 * b.norm(), "{a} {b}");
    }

    #[test]
    fn kernel_rejects_bad_grid() {
        let (geom, med) = setup(2.0, 32);
        let tail = TailSumSpec::plain(10).unwrap();
        assert!(matches!(
            impedance_kernel(&geom, &med, 1000, &tail),
            Err(LinearrayError::InvalidGrid { .. })
        ));
        assert!(matches!(
            impedance_kernel(&geom, &med, 1024, &tail),
            Err(LinearrayError::InvalidGrid { .. })
        ));
    }

    #[test]
    fn toeplitz_construction() {
        let (geom, med) = setup(2.0, 3);
        let k = impedance_kernel(&geom, &med, 256, &TailSumSpec::plain(50).unwrap()).unwrap();
        let z1 = finite_array_impedance(&k, 1).unwrap();
        assert_eq!(z1[(0, 0)], k.lag(0));
        let z = finite_array_impedance(&k, 3).unwrap();
        assert_eq!(z, z.transpose());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(z[(i, j)], k.kernel()[(i as i64 - j as i64).unsigned_abs() as usize]);
            }
        }
    }

    #[test]
    fn impulse_response_is_even() {
        let (geom, med) = setup(2.0, 1);
        let spec = impulse_spec(&med, 20.0 * med.k0())
            .unwrap()
            .with_tolerances(1e-10, 1e-300)
            .unwrap();
        let z = 0.3 * med.wavelength();
        let r = impulse_response_batch(&[z, -z], &geom, &med, &spec).unwrap();
        assert!((r.value[0] - r.value[1]).norm() < 1e-9 * r.value[0].norm());
    }

    #[test]
    fn gap_susceptance_grows_with_window() {
        let (geom, med) = setup(2.0, 1);
        let vals: Vec<f64> = [50.0, 100.0, 200.0]
            .iter()
            .map(|f| {
                let spec = impulse_spec(&med, f * med.k0()).unwrap();
                admittance_impulse_response(0.0, &geom, &med, &spec).unwrap().value.im
            })
            .collect();
        // monotone, and roughly logarithmic: equal increments per doubling
        assert!(vals[0].abs() < vals[1].abs() && vals[1].abs() < vals[2].abs(), "{vals:?}");
        let d1 = vals[1] - vals[0];
        let d2 = vals[2] - vals[1];
        assert!((d1 - d2).abs() < 0.1 * d1.abs(), "{vals:?}");
    }
}
