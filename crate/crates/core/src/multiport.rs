//! Multiport circuit model of the transmit array and the loop receivers.
//!
//! The coupled system is described by the hybrid matrix
//!
//! ```text
//! [v_T]   [Z_T   H_TR] [i_T]   [ṽ_T]
//! [i_R] = [H_RT  Y_R ] [v_R] + [ĩ_R]
//! ```
//!
//! closed by generators with series resistance R on the transmit ports and
//! LNAs with input resistance R_in and transconductance gain β/R_in on the
//! receive ports. Eliminating the terminations gives
//! `F_MIMO [i_T; v_R] = [v_G - ṽ_T; -ĩ_R]` with
//! `F_MIMO = [[Z_T + R·I, H_TR], [H_RT, Y_R + I/R_in]]`, and the LNA output
//! currents are `i_L = (β/R_in) v_R + n_LNA`.
//!
//! Thermal sources follow the fluctuation-dissipation theorem for this
//! representation: `E[[ṽ_T; ĩ_R][ṽ_T; ĩ_R]ᴴ] = 4kT·(G + Gᴴ)/2` per hertz.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Largest condition number accepted for the matrices that are inverted.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultiportError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Z_T is not complex symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("Y_R must be diagonal")]
    NotDiagonal,
    #[error("{block} is singular or ill-conditioned (condition number {condition:.3e})")]
    Singular { block: &'static str, condition: f64 },
    #[error("noise correlation is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("noise correlation is not positive semidefinite (min eigenvalue {min_eig:.3e}, trace {trace:.3e})")]
    NotPsd { min_eig: f64, trace: f64 },
    #[error("invalid amplifier parameter {field}: {value}")]
    InvalidChain { field: &'static str, value: f64 },
}

pub type Result<T> = std::result::Result<T, MultiportError>;

type CMat = DMatrix<Complex64>;
type CVec = DVector<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmplifierChain {
    pub source_resistance_r: f64,
    pub lna_input_resistance_rin: f64,
    pub lna_gain_beta: f64,
    pub noise_figure_nf: f64,
    pub temperature_t: f64,
    pub boltzmann_kb: f64,
}

impl Default for AmplifierChain {
    fn default() -> Self {
        AmplifierChain {
            source_resistance_r: 50.0,
            lna_input_resistance_rin: 50.0,
            lna_gain_beta: 10.0,
            noise_figure_nf: 2.0,
            temperature_t: 290.0,
            boltzmann_kb: BOLTZMANN,
        }
    }
}

impl AmplifierChain {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("source_resistance_r", self.source_resistance_r),
            ("lna_input_resistance_rin", self.lna_input_resistance_rin),
            ("lna_gain_beta", self.lna_gain_beta),
            ("temperature_t", self.temperature_t),
            ("boltzmann_kb", self.boltzmann_kb),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(MultiportError::InvalidChain { field, value });
            }
        }
        if !(self.noise_figure_nf.is_finite() && self.noise_figure_nf >= 1.0) {
            return Err(MultiportError::InvalidChain {
                field: "noise_figure_nf",
                value: self.noise_figure_nf,
            });
        }
        Ok(())
    }

    /// `4 k_B T`, the thermal noise density scale per hertz.
    pub fn thermal_scale(&self) -> f64 {
        4.0 * self.boltzmann_kb * self.temperature_t
    }

    /// Variance of the LNA output noise current, `4kT β (N_f - 1) / R_in`.
    pub fn lna_noise_variance(&self) -> f64 {
        self.thermal_scale() * self.lna_gain_beta * (self.noise_figure_nf - 1.0)
            / self.lna_input_resistance_rin
    }

    /// Output current per volt at the LNA input, `β / R_in`.
    pub fn transconductance(&self) -> f64 {
        self.lna_gain_beta / self.lna_input_resistance_rin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiportModel {
    pub z_t: CMat,
    pub y_r: CMat,
    pub h_tr: CMat,
    pub h_rt: CMat,
}

fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.norm()))
}

/// Fill in `H_TR = -H_RTᵀ` and check the block invariants.
pub fn assemble_gmimo(z_t: CMat, y_r: CMat, h_rt: CMat) -> Result<MultiportModel> {
    let n = z_t.nrows();
    let m = y_r.nrows();
    if z_t.ncols() != n {
        return Err(MultiportError::DimensionMismatch(format!(
            "Z_T is {}x{}",
            z_t.nrows(),
            z_t.ncols()
        )));
    }
    if y_r.ncols() != m {
        return Err(MultiportError::DimensionMismatch(format!(
            "Y_R is {}x{}",
            y_r.nrows(),
            y_r.ncols()
        )));
    }
    if h_rt.shape() != (m, n) {
        return Err(MultiportError::DimensionMismatch(format!(
            "H_RT is {}x{}, expected {m}x{n}",
            h_rt.nrows(),
            h_rt.ncols()
        )));
    }
    let asym = max_abs(&(&z_t - z_t.transpose())) / max_abs(&z_t).max(f64::MIN_POSITIVE);
    if asym > 1e-12 {
        return Err(MultiportError::NotSymmetric(asym));
    }
    for i in 0..m {
        for j in 0..m {
            if i != j && y_r[(i, j)] != Complex64::new(0.0, 0.0) {
                return Err(MultiportError::NotDiagonal);
            }
        }
    }
    let h_tr = -h_rt.transpose();
    Ok(MultiportModel { z_t, y_r, h_tr, h_rt })
}

impl MultiportModel {
    pub fn num_feeds(&self) -> usize {
        self.z_t.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.y_r.nrows()
    }

    /// The hybrid matrix `[[Z_T, H_TR], [H_RT, Y_R]]`.
    pub fn g_mimo(&self) -> CMat {
        let (n, m) = (self.num_feeds(), self.num_users());
        let mut g = CMat::zeros(n + m, n + m);
        g.view_mut((0, 0), (n, n)).copy_from(&self.z_t);
        g.view_mut((0, n), (n, m)).copy_from(&self.h_tr);
        g.view_mut((n, 0), (m, n)).copy_from(&self.h_rt);
        g.view_mut((n, n), (m, m)).copy_from(&self.y_r);
        g
    }

    /// `G_MIMO` with the generator and LNA terminations added.
    pub fn f_mimo(&self, chain: &AmplifierChain) -> CMat {
        let (n, m) = (self.num_feeds(), self.num_users());
        let mut f = self.g_mimo();
        for i in 0..n {
            f[(i, i)] += chain.source_resistance_r;
        }
        for i in 0..m {
            f[(n + i, n + i)] += 1.0 / chain.lna_input_resistance_rin;
        }
        f
    }

    /// `4kT (G + Gᴴ)/2`, covariance of `[ṽ_T; ĩ_R]` per hertz.
    pub fn source_covariance(&self, chain: &AmplifierChain) -> CMat {
        hermitian_part(&self.g_mimo()) * Complex64::new(chain.thermal_scale(), 0.0)
    }
}

/// Condition number from the singular values.
pub fn condition_number(a: &CMat) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let s = a.clone().singular_values();
    let max = s.max();
    let min = s.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn checked_inverse(a: &CMat, block: &'static str) -> Result<CMat> {
    let condition = condition_number(a);
    if !(condition < MAX_CONDITION) {
        return Err(MultiportError::Singular { block, condition });
    }
    a.clone()
        .try_inverse()
        .ok_or(MultiportError::Singular { block, condition })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockInverse {
    pub k_t: CMat,
    pub k_tr: CMat,
    pub k_rt: CMat,
    pub k_r: CMat,
    pub q: CMat,
}

impl BlockInverse {
    pub fn k_mimo(&self) -> CMat {
        let (n, m) = (self.k_t.nrows(), self.k_r.nrows());
        let mut k = CMat::zeros(n + m, n + m);
        k.view_mut((0, 0), (n, n)).copy_from(&self.k_t);
        k.view_mut((0, n), (n, m)).copy_from(&self.k_tr);
        k.view_mut((n, 0), (m, n)).copy_from(&self.k_rt);
        k.view_mut((n, n), (m, m)).copy_from(&self.k_r);
        k
    }
}

/// Block inverse of `F_MIMO` through the Schur complement
/// `Q = (Z_T + R·I - H_TR (Y_R + I/R_in)⁻¹ H_RT)⁻¹`.
pub fn block_inverse(model: &MultiportModel, chain: &AmplifierChain) -> Result<BlockInverse> {
    chain.validate()?;
    let (n, m) = (model.num_feeds(), model.num_users());
    let d = &model.y_r + CMat::identity(m, m) * Complex64::new(1.0 / chain.lna_input_resistance_rin, 0.0);
    let d_inv = checked_inverse(&d, "Y_R + I/R_in")?;
    let s = &model.z_t + CMat::identity(n, n) * Complex64::new(chain.source_resistance_r, 0.0)
        - &model.h_tr * &d_inv * &model.h_rt;
    let q = checked_inverse(&s, "Schur complement Q")?;
    let k_tr = -(&q * &model.h_tr * &d_inv);
    let k_rt = -(&d_inv * &model.h_rt * &q);
    let k_r = &d_inv + &d_inv * &model.h_rt * &q * &model.h_tr * &d_inv;
    Ok(BlockInverse {
        k_t: q.clone(),
        k_tr,
        k_rt,
        k_r,
        q,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// LNA output current per generator volt, M×N.
    pub h: CMat,
    /// Output noise correlation per hertz, M×M Hermitian.
    pub r_n: CMat,
}

/// Channel `H = (β/R_in) K_RT` and its noise correlation.
pub fn end_to_end(model: &MultiportModel, chain: &AmplifierChain) -> Result<ChannelRealization> {
    let k = block_inverse(model, chain)?;
    let h = &k.k_rt * Complex64::new(chain.transconductance(), 0.0);
    let r_n = noise_correlation(model, chain, &k)?;
    Ok(ChannelRealization { h, r_n })
}

/// `R_n = (4kTβ²/R_in²)[(N_f-1)R_in/β·I + K_RT Z' K_RTᴴ + K_RT X K_Rᴴ + K_R Xᴴ K_RTᴴ + K_R Y' K_Rᴴ]`
/// with `Z'`, `Y'` the Hermitian parts of Z_T, Y_R and `X = (H_TR + H_RTᴴ)/2`.
pub fn noise_correlation(model: &MultiportModel, chain: &AmplifierChain, k: &BlockInverse) -> Result<CMat> {
    let m = model.num_users();
    let zh = hermitian_part(&model.z_t);
    let yh = hermitian_part(&model.y_r);
    let x = (&model.h_tr + model.h_rt.adjoint()) * Complex64::new(0.5, 0.0);
    let lna = chain.lna_noise_variance() / chain.transconductance().powi(2) / chain.thermal_scale();
    let inner = CMat::identity(m, m) * Complex64::new(lna, 0.0)
        + &k.k_rt * &zh * k.k_rt.adjoint()
        + &k.k_rt * &x * k.k_r.adjoint()
        + &k.k_r * x.adjoint() * k.k_rt.adjoint()
        + &k.k_r * &yh * k.k_r.adjoint();
    let scale = chain.thermal_scale() * chain.transconductance().powi(2);
    let r = inner * Complex64::new(scale, 0.0);
    finish_correlation(r)
}

fn finish_correlation(r: CMat) -> Result<CMat> {
    let norm = r.norm();
    let asym = (&r - r.adjoint()).norm();
    if asym > 1e-10 * norm {
        return Err(MultiportError::NotHermitian(asym / norm));
    }
    let r = hermitian_part(&r);
    let trace = r.trace().re;
    if r.nrows() > 0 {
        let min_eig = r.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-9 * trace {
            return Err(MultiportError::NotPsd { min_eig, trace });
        }
    }
    Ok(r)
}

/// The five-term correlation written with real parts of the blocks,
/// `K_RT Re{Z_T} K_RTᴴ + K_RT Re{H_TR} K_Rᴴ + K_R Re{H_RT} K_RTᴴ + K_R Re{Y_R} K_Rᴴ`
/// plus the LNA term, returned without symmetrisation. It coincides with
/// [`noise_correlation`] whenever `G_MIMO` is complex symmetric.
pub fn noise_correlation_reciprocal_form(model: &MultiportModel, chain: &AmplifierChain, k: &BlockInverse) -> CMat {
    let m = model.num_users();
    let re = |a: &CMat| a.map(|v| Complex64::new(v.re, 0.0));
    let lna = chain.lna_noise_variance() / chain.transconductance().powi(2) / chain.thermal_scale();
    let inner = CMat::identity(m, m) * Complex64::new(lna, 0.0)
        + &k.k_rt * re(&model.z_t) * k.k_rt.adjoint()
        + &k.k_rt * re(&model.h_tr) * k.k_r.adjoint()
        + &k.k_r * re(&model.h_rt) * k.k_rt.adjoint()
        + &k.k_r * re(&model.y_r) * k.k_r.adjoint();
    inner * Complex64::new(chain.thermal_scale() * chain.transconductance().powi(2), 0.0)
}

/// Noise injected into the circuit for one realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSources {
    pub v_t: CVec,
    pub i_r: CVec,
    pub lna: CVec,
}

impl NoiseSources {
    pub fn zeros(n: usize, m: usize) -> Self {
        NoiseSources {
            v_t: CVec::zeros(n),
            i_r: CVec::zeros(m),
            lna: CVec::zeros(m),
        }
    }
}

/// Solve the terminated circuit directly and return the LNA output currents.
pub fn direct_circuit_oracle(model: &MultiportModel, chain: &AmplifierChain, v_g: &CVec, noise: &NoiseSources) -> Result<CVec> {
    chain.validate()?;
    let (n, m) = (model.num_feeds(), model.num_users());
    if v_g.len() != n || noise.v_t.len() != n || noise.i_r.len() != m || noise.lna.len() != m {
        return Err(MultiportError::DimensionMismatch(
            "generator or noise vector length".into(),
        ));
    }
    let f = model.f_mimo(chain);
    let condition = condition_number(&f);
    if !(condition < MAX_CONDITION) {
        return Err(MultiportError::Singular {
            block: "F_MIMO",
            condition,
        });
    }
    let mut rhs = CVec::zeros(n + m);
    for i in 0..n {
        rhs[i] = v_g[i] - noise.v_t[i];
    }
    for i in 0..m {
        rhs[n + i] = -noise.i_r[i];
    }
    let x = f.lu().solve(&rhs).ok_or(MultiportError::Singular {
        block: "F_MIMO",
        condition,
    })?;
    let g = chain.transconductance();
    Ok(CVec::from_fn(m, |i, _| x[n + i] * g + noise.lna[i]))
}

/// Draws circularly symmetric Gaussian noise with the circuit's statistics.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    factor: CMat,
    lna_sigma: f64,
    n: usize,
    m: usize,
}

impl NoiseSampler {
    pub fn new(model: &MultiportModel, chain: &AmplifierChain) -> Result<Self> {
        chain.validate()?;
        let c = model.source_covariance(chain);
        // Z and Y blocks differ by ~1e6 in scale; factor the correlation
        // matrix D C D with D = diag(1/sqrt(C_ii)) so both stay accurate
        let d = c.diagonal().map(|v| {
            let s = if v.re > 0.0 { 1.0 / v.re.sqrt() } else { 1.0 };
            Complex64::new(s, 0.0)
        });
        let scaled = CMat::from_diagonal(&d) * &c * CMat::from_diagonal(&d);
        let eig = scaled.clone().symmetric_eigen();
        let trace = scaled.trace().re;
        let min = eig.eigenvalues.min();
        if min < -1e-9 * trace.abs() {
            return Err(MultiportError::NotPsd { min_eig: min, trace });
        }
        let sqrt = eig
            .eigenvalues
            .map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
        let unscale = d.map(|v| Complex64::new(1.0 / v.re, 0.0));
        let factor = CMat::from_diagonal(&unscale) * &eig.eigenvectors * CMat::from_diagonal(&sqrt);
        Ok(NoiseSampler {
            factor,
            lna_sigma: chain.lna_noise_variance().sqrt(),
            n: model.num_feeds(),
            m: model.num_users(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> NoiseSources {
        let dim = self.n + self.m;
        let w = CVec::from_fn(dim, |_, _| standard_complex(rng));
        let s = &self.factor * w;
        NoiseSources {
            v_t: CVec::from_fn(self.n, |i, _| s[i]),
            i_r: CVec::from_fn(self.m, |i, _| s[self.n + i]),
            lna: CVec::from_fn(self.m, |_, _| standard_complex(rng) * self.lna_sigma),
        }
    }
}

/// Empirical covariance of the LNA output currents over `draws` noise
/// realisations pushed through [`direct_circuit_oracle`] with `v_G = 0`.
pub fn monte_carlo_output_covariance<R: Rng + ?Sized>(
    model: &MultiportModel,
    chain: &AmplifierChain,
    draws: usize,
    rng: &mut R,
) -> Result<CMat> {
    let sampler = NoiseSampler::new(model, chain)?;
    let (n, m) = (model.num_feeds(), model.num_users());
    let v_g = CVec::zeros(n);
    let mut acc = CMat::zeros(m, m);
    for _ in 0..draws {
        let noise = sampler.sample(rng);
        let i_l = direct_circuit_oracle(model, chain, &v_g, &noise)?;
        acc += &i_l * i_l.adjoint();
    }
    Ok(acc / Complex64::new(draws.max(1) as f64, 0.0))
}

/// Largest entrywise deviation of `empirical` from `exact` in units of the
/// Monte-Carlo standard error `sqrt(R_ii R_jj / draws)`.
pub fn max_sigma_deviation(empirical: &CMat, exact: &CMat, draws: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..exact.nrows() {
        for j in 0..exact.ncols() {
            let sigma = (exact[(i, i)].re * exact[(j, j)].re / draws as f64).sqrt();
            worst = worst.max((empirical[(i, j)] - exact[(i, j)]).norm() / sigma);
        }
    }
    worst
}

/// `CN(0, 1)`.
pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_c<R: Rng>(rng: &mut R, scale: f64) -> Complex64 {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
    }

    /// Passive random model: Re parts dominate the couplings.
    fn random_model<R: Rng>(rng: &mut R, n: usize, m: usize) -> MultiportModel {
        let mut z = CMat::from_fn(n, n, |_, _| rand_c(rng, 20.0));
        z = (&z + z.transpose()) * c(0.5, 0.0);
        for i in 0..n {
            z[(i, i)] += c(100.0 + 50.0 * rng.gen::<f64>(), 0.0);
        }
        let y = CMat::from_diagonal(&CVec::from_fn(m, |_, _| {
            c(2e-3 + 1e-3 * rng.gen::<f64>(), rng.gen_range(-5e-3..5e-3))
        }));
        let h = CMat::from_fn(m, n, |_, _| rand_c(rng, 1e-2));
        assemble_gmimo(z, y, h).unwrap()
    }

    #[test]
    fn reciprocity_fill_in() {
        let z = CMat::from_element(1, 1, c(70.0, 10.0));
        let y = CMat::from_element(1, 1, c(0.01, 0.0));
        let h = CMat::from_element(1, 1, c(0.2, -0.1));
        let model = assemble_gmimo(z, y, h).unwrap();
        assert_eq!(model.h_tr[(0, 0)], -model.h_rt[(0, 0)]);
        assert_eq!(model.g_mimo().shape(), (2, 2));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = random_model(&mut rng, 3, 2);
        assert_eq!(model.h_tr, -model.h_rt.transpose());
    }

    #[test]
    fn invariants_are_checked() {
        let z = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(1.0, 0.0)]);
        let y = CMat::identity(1, 1);
        let h = CMat::zeros(1, 2);
        assert!(matches!(assemble_gmimo(z, y.clone(), h.clone()), Err(MultiportError::NotSymmetric(_))));
        let z = CMat::identity(2, 2);
        assert!(matches!(
            assemble_gmimo(z.clone(), y.clone(), CMat::zeros(2, 2)),
            Err(MultiportError::DimensionMismatch(_))
        ));
        let y2 = CMat::from_element(2, 2, c(1.0, 0.0));
        assert_eq!(assemble_gmimo(z, y2, CMat::zeros(2, 2)), Err(MultiportError::NotDiagonal));
        let bad = AmplifierChain {
            noise_figure_nf: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn decoupled_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut model = random_model(&mut rng, 3, 2);
        model.h_rt = CMat::zeros(2, 3);
        model.h_tr = CMat::zeros(3, 2);
        let chain = AmplifierChain::default();
        let k = block_inverse(&model, &chain).unwrap();
        let zr = (&model.z_t + CMat::identity(3, 3) * c(50.0, 0.0)).try_inverse().unwrap();
        let yr = (&model.y_r + CMat::identity(2, 2) * c(1.0 / 50.0, 0.0)).try_inverse().unwrap();
        assert!((&k.k_t - zr).norm() < 1e-14);
        assert!((&k.k_r - yr).norm() < 1e-12);
        assert_eq!(k.k_tr.norm(), 0.0);
        assert_eq!(k.k_rt.norm(), 0.0);
        let ch = end_to_end(&model, &chain).unwrap();
        assert_eq!(ch.h.norm(), 0.0);
    }

    #[test]
    fn scalar_block_inverse_closed_form() {
        let (z, y, h) = (c(73.0, 42.5), c(2.6e-3, 1.1e-2), c(3e-2, -1e-2));
        let model = assemble_gmimo(
            CMat::from_element(1, 1, z),
            CMat::from_element(1, 1, y),
            CMat::from_element(1, 1, h),
        )
        .unwrap();
        let chain = AmplifierChain::default();
        let k = block_inverse(&model, &chain).unwrap();
        let a = z + 50.0;
        let b = -h;
        let d = y + 1.0 / 50.0;
        let det = a * d - b * h;
        let want = [d / det, -b / det, -h / det, a / det];
        let got = [k.k_t[(0, 0)], k.k_tr[(0, 0)], k.k_rt[(0, 0)], k.k_r[(0, 0)]];
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-14 * w.norm().max(1e-300) + 1e-300, "{g} {w}");
        }
    }

    #[test]
    fn block_inverse_matches_dense_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chain = AmplifierChain::default();
        let model = random_model(&mut rng, 3, 2);
        let k = block_inverse(&model, &chain).unwrap().k_mimo();
        let dense = model.f_mimo(&chain).try_inverse().unwrap();
        assert!(max_abs(&(&k - &dense)) < 1e-10);
        let id = &k * model.f_mimo(&chain);
        assert!(max_abs(&(id - CMat::identity(5, 5))) < 1e-10);
    }

    #[test]
    fn singular_models_are_reported() {
        let model = assemble_gmimo(
            CMat::from_element(1, 1, c(-50.0, 0.0)),
            CMat::from_element(1, 1, c(0.0, 0.0)),
            CMat::zeros(1, 1),
        )
        .unwrap();
        assert!(matches!(
            block_inverse(&model, &AmplifierChain::default()),
            Err(MultiportError::Singular { .. })
        ));
    }

    #[test]
    fn noise_term_dropout() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut model = random_model(&mut rng, 2, 2);
        model.h_rt = CMat::zeros(2, 2);
        model.h_tr = CMat::zeros(2, 2);
        let chain = AmplifierChain {
            noise_figure_nf: 1.0,
            ..Default::default()
        };
        let k = block_inverse(&model, &chain).unwrap();
        let ch = end_to_end(&model, &chain).unwrap();
        let re_y = model.y_r.map(|v| c(v.re, 0.0));
        let want = &k.k_r * re_y * k.k_r.adjoint()
            * c(chain.thermal_scale() * chain.transconductance().powi(2), 0.0);
        assert!((&ch.r_n - &want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn gain_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = random_model(&mut rng, 3, 2);
        let chain = AmplifierChain::default();
        let double = AmplifierChain {
            lna_gain_beta: 2.0 * chain.lna_gain_beta,
            ..chain
        };
        let a = end_to_end(&model, &chain).unwrap();
        let b = end_to_end(&model, &double).unwrap();
        assert!((&b.h - &a.h * c(2.0, 0.0)).norm() < 1e-14 * b.h.norm());
        let lna = CMat::identity(2, 2) * c(chain.lna_noise_variance(), 0.0);
        let rest = &a.r_n - &lna;
        let want = lna * c(2.0, 0.0) + rest * c(4.0, 0.0);
        assert!((&b.r_n - want).norm() < 1e-12 * b.r_n.norm());
    }

    #[test]
    fn reciprocal_form_agrees_on_symmetric_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut model = random_model(&mut rng, 3, 2);
        // a complex symmetric G_MIMO needs H_TR = H_RTᵀ
        model.h_tr = model.h_rt.transpose();
        let chain = AmplifierChain::default();
        let k = block_inverse(&model, &chain).unwrap();
        let a = noise_correlation(&model, &chain, &k).unwrap();
        let b = noise_correlation_reciprocal_form(&model, &chain, &k);
        assert!((&a - &b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn direct_oracle_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = random_model(&mut rng, 3, 2);
        let chain = AmplifierChain::default();
        let zero = direct_circuit_oracle(&model, &chain, &CVec::zeros(3), &NoiseSources::zeros(3, 2)).unwrap();
        assert_eq!(zero.norm(), 0.0);
        let v = CVec::from_fn(3, |_, _| rand_c(&mut rng, 1.0));
        let i = direct_circuit_oracle(&model, &chain, &v, &NoiseSources::zeros(3, 2)).unwrap();
        let ch = end_to_end(&model, &chain).unwrap();
        let want = &ch.h * &v;
        assert!((&i - &want).norm() < 1e-10 * want.norm());
    }

    #[test]
    fn scalar_chain_gain_by_hand() {
        // (z + R) i + h_tr v = 1, h_rt i + (y + 1/R_in) v = 0, i_L = β v / R_in
        let (z, y, h) = (c(60.0, -20.0), c(1e-3, 4e-3), c(2e-2, 5e-3));
        let model = assemble_gmimo(
            CMat::from_element(1, 1, z),
            CMat::from_element(1, 1, y),
            CMat::from_element(1, 1, h),
        )
        .unwrap();
        let chain = AmplifierChain::default();
        let i = direct_circuit_oracle(&model, &chain, &CVec::from_element(1, c(1.0, 0.0)), &NoiseSources::zeros(1, 1)).unwrap();
        let v = -h / ((z + 50.0) * (y + 0.02) + h * h);
        let want = v * (10.0 / 50.0);
        assert!((i[0] - want).norm() < 1e-14 * want.norm());
    }

    #[test]
    fn sampler_reproduces_source_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = random_model(&mut rng, 2, 1);
        let chain = AmplifierChain::default();
        let s = NoiseSampler::new(&model, &chain).unwrap();
        let c_want = model.source_covariance(&chain);
        let draws = 20_000;
        let mut acc = CMat::zeros(3, 3);
        for _ in 0..draws {
            let n = s.sample(&mut rng);
            let x = CVec::from_fn(3, |i, _| if i < 2 { n.v_t[i] } else { n.i_r[i - 2] });
            acc += &x * x.adjoint();
        }
        acc /= c(draws as f64, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let sigma = (c_want[(i, i)].re * c_want[(j, j)].re / draws as f64).sqrt();
                assert!((acc[(i, j)] - c_want[(i, j)]).norm() < 4.0 * sigma);
            }
        }
    }

    #[test]
    fn monte_carlo_output_matches_noise_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let model = random_model(&mut rng, 3, 2);
        let chain = AmplifierChain::default();
        let exact = end_to_end(&model, &chain).unwrap().r_n;
        let draws = 20_000;
        let emp = monte_carlo_output_covariance(&model, &chain, draws, &mut rng).unwrap();
        assert!(max_sigma_deviation(&emp, &exact, draws) < 4.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn noise_correlation_is_hermitian_psd(seed in any::<u64>(), n in 1usize..5, m in 1usize..4) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let model = random_model(&mut rng, n, m);
                let ch = end_to_end(&model, &AmplifierChain::default()).unwrap();
                prop_assert_eq!(&ch.r_n, &ch.r_n.adjoint());
                let trace = ch.r_n.trace().re;
                let min = ch.r_n.clone().symmetric_eigenvalues().min();
                prop_assert!(min >= -1e-12 * trace);
            }
        }
    }
}
