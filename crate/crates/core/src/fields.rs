//! Near fields of the driven wire and the hybrid coupling to small loop
//! receivers.
//!
//! For a gap-voltage spectrum V̂(α) the azimuthal magnetic field spectrum is
//! `H_φ(r, α) = ωε V̂(α) / (jβ) · H1⁽²⁾(βr) / H0⁽²⁾(βa)`; with `ωε = k0/Z0`
//! this is `V̂/(j Z0 b) · H1⁽²⁾/H0⁽²⁾` in terms of `b = β/k0`.
//!
//! Two spatial syntheses are provided:
//!
//! * [`h_phi_spatial`] integrates the field of an arbitrary set of feed
//!   voltages over the full spectral window.
//! * [`open_array_field`] gives the field of the infinite array driven by a
//!   unit current at one gap with every other gap open. Its voltage spectrum
//!   is `Z_d(α)·e^{-jα z_n}`, periodic in α, so the window is folded onto one
//!   Brillouin zone and the images are summed inside the integrand.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::linearray::{
    normalized_impedance, ElectricalSize, LineGeometry, LinearrayError, Medium,
};
use crate::quadrature::{integrate_vec, AccuracyWarning, IntegrationSpec, QuadError, TailSumSpec};
use crate::specfun::{beta_of_alpha, hankel2_pair_scaled, hankel2_scaled, Order, SpecFunError};

const J: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("receiver radius {r} must exceed the wire radius {a}")]
    InsideWire { r: f64, a: f64 },
    #[error("invalid receiver {field}: {reason}")]
    InvalidReceiver { field: &'static str, reason: String },
    #[error("Chu model has non-positive radiation conductance {0}")]
    InvalidModel(f64),
    #[error("field spectrum is singular at alpha/k0 = {0}")]
    Singularity(f64),
    #[error(transparent)]
    Linearray(#[from] LinearrayError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

pub type Result<T> = std::result::Result<T, FieldError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverKind {
    HertzianLoop,
    ChuLoop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverSpec {
    pub r: f64,
    pub z: f64,
    pub kind: ReceiverKind,
    pub dipole_length_dl: f64,
    pub chu_radius: f64,
}

impl ReceiverSpec {
    /// Receiver with the default probe sizes: δℓ = λ/100, a_Chu = λ/20.
    pub fn with_defaults(med: &Medium, r: f64, z: f64, kind: ReceiverKind) -> Self {
        let l = med.wavelength();
        ReceiverSpec {
            r,
            z,
            kind,
            dipole_length_dl: l / 100.0,
            chu_radius: l / 20.0,
        }
    }

    pub fn validate(&self, geom: &LineGeometry) -> Result<()> {
        if !(self.r.is_finite() && self.r > geom.wire_radius_a) {
            return Err(FieldError::InsideWire {
                r: self.r,
                a: geom.wire_radius_a,
            });
        }
        if !self.z.is_finite() {
            return Err(FieldError::InvalidReceiver {
                field: "z",
                reason: "not finite".into(),
            });
        }
        if !(self.dipole_length_dl.is_finite() && self.dipole_length_dl > 0.0) {
            return Err(FieldError::InvalidReceiver {
                field: "dipole_length_dl",
                reason: format!("{} must be positive", self.dipole_length_dl),
            });
        }
        if self.kind == ReceiverKind::ChuLoop && !(self.chu_radius.is_finite() && self.chu_radius > 0.0) {
            return Err(FieldError::InvalidReceiver {
                field: "chu_radius",
                reason: format!("{} must be positive", self.chu_radius),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub h_phi: Complex64,
    pub r: f64,
    pub z: f64,
}

/// Truncation and tolerance settings for the spatial field integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldNumerics {
    /// Lower bound of the spectral window, in units of Re(k).
    pub alpha_max_factor: f64,
    /// The window is widened until `exp(-α_max (r - a))` drops below this.
    pub decay_target: f64,
    pub rel_tol: f64,
    /// Absolute tolerance on the field normalised by k0 (per volt or per ampere).
    pub abs_tol: f64,
}

impl Default for FieldNumerics {
    fn default() -> Self {
        FieldNumerics {
            alpha_max_factor: 100.0,
            decay_target: 1e-12,
            rel_tol: 1e-8,
            abs_tol: 1e-13,
        }
    }
}

impl FieldNumerics {
    /// Spectral half-window in units of k0 for a receiver at radius `r`.
    pub fn window(&self, geom: &LineGeometry, med: &Medium, r: f64) -> f64 {
        let decay = -self.decay_target.ln() / (med.k0() * (r - geom.wire_radius_a));
        self.alpha_max_factor.max(decay)
    }
}

/// `H1⁽²⁾(b·kr) / (j b H0⁽²⁾(b·ka))`, the field per unit normalised voltage.
fn radial_factor(b: Complex64, kr: f64, ka: f64) -> Result<Complex64> {
    let h1 = hankel2_pair_scaled(b * kr)?.one;
    let h0 = hankel2_scaled(Order::Zero, b * ka)?;
    // the scaled values carry exp(jx); restore exp(-jb(kr - ka))
    Ok(h1 / (h0 * J * b) * (-J * b * (kr - ka)).exp())
}

fn radial_factor_at(u: f64, es: &ElectricalSize, kr: f64) -> Result<Complex64> {
    let b = beta_of_alpha(Complex64::new(u, 0.0), es.kappa);
    if b == Complex64::new(0.0, 0.0) {
        return Err(FieldError::Singularity(u));
    }
    radial_factor(b, kr, es.ka)
}

/// `H_φ(r, α)` for the voltage spectrum value `vhat`.
pub fn h_phi_spectrum(alpha: f64, r: f64, vhat: Complex64, geom: &LineGeometry, med: &Medium) -> Result<Complex64> {
    if !(r > geom.wire_radius_a) {
        return Err(FieldError::InsideWire {
            r,
            a: geom.wire_radius_a,
        });
    }
    if vhat == Complex64::new(0.0, 0.0) {
        return Ok(vhat);
    }
    let es = ElectricalSize::of(geom, med);
    Ok(vhat * radial_factor_at(alpha / med.k0(), &es, med.k0() * r)? / med.z0())
}

/// `ĥ^Hertz(α) = δℓ · H_φ(r, α)` with the voltage spectrum `Z_d(α)`.
pub fn hertz_coupling(alpha: f64, rx: &ReceiverSpec, zd_alpha: Complex64, geom: &LineGeometry, med: &Medium) -> Result<Complex64> {
    rx.validate(geom)?;
    Ok(h_phi_spectrum(alpha, rx.r, zd_alpha, geom, med)? * rx.dipole_length_dl)
}

/// Radiation conductance of the small loop, `2π δℓ² / (3 Z0 λ²)`.
pub fn hertz_conductance(rx: &ReceiverSpec, med: &Medium) -> f64 {
    let l = med.wavelength();
    2.0 * PI * rx.dipole_length_dl.powi(2) / (3.0 * med.z0() * l * l)
}

/// Dual (TE) Chu equivalent admittance `(1/Z0)(1/(jk a) + 1/(1 + jk a))`.
pub fn chu_admittance(rx: &ReceiverSpec, med: &Medium) -> Complex64 {
    let ka = Complex64::new(0.0, med.k0() * rx.chu_radius);
    (1.0 / ka + 1.0 / (1.0 + ka)) / med.z0()
}

/// Receive-side admittance used for `Y_R`.
pub fn receiver_admittance(rx: &ReceiverSpec, med: &Medium) -> Complex64 {
    match rx.kind {
        ReceiverKind::HertzianLoop => Complex64::new(hertz_conductance(rx, med), 0.0),
        ReceiverKind::ChuLoop => chu_admittance(rx, med),
    }
}

/// `√(Re Y^Chu / Re Y^Hertz)` for Chu receivers, 1 for Hertzian loops.
pub fn coupling_scale(rx: &ReceiverSpec, med: &Medium) -> Result<f64> {
    match rx.kind {
        ReceiverKind::HertzianLoop => Ok(1.0),
        ReceiverKind::ChuLoop => {
            let g = chu_admittance(rx, med).re;
            if !(g > 0.0) {
                return Err(FieldError::InvalidModel(g));
            }
            Ok((g / hertz_conductance(rx, med)).sqrt())
        }
    }
}

/// `ĥ^Chu(α) = √(Re Y^Chu / Re Y^Hertz) · ĥ^Hertz(α)`.
pub fn chu_coupling(alpha: f64, rx: &ReceiverSpec, zd_alpha: Complex64, geom: &LineGeometry, med: &Medium) -> Result<Complex64> {
    let scale = match rx.kind {
        ReceiverKind::ChuLoop => coupling_scale(rx, med)?,
        ReceiverKind::HertzianLoop => {
            return Err(FieldError::InvalidReceiver {
                field: "kind",
                reason: "chu_coupling needs a chu_loop receiver".into(),
            })
        }
    };
    Ok(hertz_coupling(alpha, rx, zd_alpha, geom, med)? * scale)
}

/// Field at `(r, z)` radiated by the gap voltages `feed_voltages` (feed n at
/// `geom.feed_position(n)`) with all other gaps shorted.
pub fn h_phi_spatial(
    r: f64,
    z: f64,
    feed_voltages: &[Complex64],
    geom: &LineGeometry,
    med: &Medium,
    numerics: &FieldNumerics,
) -> Result<(FieldSample, Option<AccuracyWarning>)> {
    if !(r > geom.wire_radius_a) {
        return Err(FieldError::InsideWire {
            r,
            a: geom.wire_radius_a,
        });
    }
    if feed_voltages.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Ok((
            FieldSample {
                h_phi: Complex64::new(0.0, 0.0),
                r,
                z,
            },
            None,
        ));
    }
    let es = ElectricalSize::of(geom, med);
    let k0 = med.k0();
    let kr = k0 * r;
    // axial offsets to each feed, in units of 1/k0
    let offsets: Vec<f64> = (0..feed_voltages.len())
        .map(|n| k0 * (z - geom.feed_position(n)))
        .collect();
    let umax = numerics.window(geom, med, r);
    let span = offsets.iter().fold(0.0f64, |m, o| m.max(o.abs()));
    let mut spec = IntegrationSpec::new(-umax, umax)?
        .with_tolerances(numerics.rel_tol, numerics.abs_tol)?;
    if umax > 1.0 {
        spec = spec.with_splits(vec![-1.0, 1.0])?;
    }
    if span > 0.0 {
        spec = spec.with_seed_width((2.0 * PI / span).min(umax));
    }
    let mut failure = None;
    let est = integrate_vec(
        |u, out| {
            let f = match radial_factor_at(u, &es, kr) {
                Ok(f) => f,
                Err(e) => {
                    failure.get_or_insert(e);
                    return;
                }
            };
            let mut acc = Complex64::new(0.0, 0.0);
            for (v, o) in feed_voltages.iter().zip(&offsets) {
                acc += v * Complex64::from_polar(1.0, u * o);
            }
            out[0] = f * acc / (2.0 * PI);
        },
        1,
        &spec,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((
        FieldSample {
            h_phi: est.value[0] * k0 / med.z0(),
            r,
            z,
        },
        est.warning,
    ))
}

/// Receivers at a common radius, described by their axial offsets from the
/// driven gap.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub r: f64,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldBatch {
    /// `H_φ` in A/m per ampere of gap current, indexed like the probe sets.
    pub values: Vec<Vec<Complex64>>,
    pub warnings: Vec<AccuracyWarning>,
}

/// Field of the infinite array driven by 1 A at one gap, all other gaps open.
pub fn open_array_field(
    sets: &[ProbeSet],
    geom: &LineGeometry,
    med: &Medium,
    tail: &TailSumSpec,
    numerics: &FieldNumerics,
) -> Result<FieldBatch> {
    for s in sets {
        if !(s.r > geom.wire_radius_a) {
            return Err(FieldError::InsideWire {
                r: s.r,
                a: geom.wire_radius_a,
            });
        }
    }
    let es = ElectricalSize::of(geom, med);
    let k0 = med.k0();
    let p = es.zone();
    struct Prepared {
        kr: f64,
        images: i64,
        offsets: Vec<f64>,
        step: Vec<Complex64>,
    }
    let prepared: Vec<Prepared> = sets
        .iter()
        .map(|s| {
            let umax = numerics.window(geom, med, s.r);
            let offsets: Vec<f64> = s.offsets.iter().map(|o| o * k0).collect();
            Prepared {
                kr: k0 * s.r,
                images: (umax / p + 0.5).ceil() as i64,
                step: offsets.iter().map(|o| Complex64::from_polar(1.0, p * o)).collect(),
                offsets,
            }
        })
        .collect();
    let dim: usize = prepared.iter().map(|s| s.offsets.len()).sum();
    if dim == 0 {
        return Ok(FieldBatch {
            values: sets.iter().map(|_| Vec::new()).collect(),
            warnings: Vec::new(),
        });
    }

    // branch points ±1 folded into the centred zone
    let mut splits: Vec<f64> = [es.reduce(1.0), es.reduce(-1.0)]
        .into_iter()
        .filter(|s| s.abs() < 0.5 * p * (1.0 - 1e-12))
        .collect();
    splits.sort_by(f64::total_cmp);
    splits.dedup();
    let spec = IntegrationSpec::new(-0.5 * p, 0.5 * p)?
        .with_tolerances(numerics.rel_tol, numerics.abs_tol)?
        .with_splits(splits)?;

    let mut failure: Option<FieldError> = None;
    let mut phase = vec![Complex64::new(0.0, 0.0); dim];
    let est = integrate_vec(
        |uc, out| {
            let zeta = match normalized_impedance(uc, &es, tail) {
                Ok(z) => z,
                Err(e) => {
                    failure.get_or_insert(e.into());
                    return;
                }
            };
            let mut base = 0;
            for set in &prepared {
                let n = set.offsets.len();
                let ph = &mut phase[base..base + n];
                let u0 = uc - set.images as f64 * p;
                for (slot, o) in ph.iter_mut().zip(&set.offsets) {
                    *slot = Complex64::from_polar(1.0, u0 * o);
                }
                let acc = &mut out[base..base + n];
                for l in -set.images..=set.images {
                    let u = uc + l as f64 * p;
                    let f = match radial_factor_at(u, &es, set.kr) {
                        Ok(f) => f,
                        Err(e) => {
                            failure.get_or_insert(e);
                            return;
                        }
                    };
                    for ((a, ph), st) in acc.iter_mut().zip(ph.iter_mut()).zip(&set.step) {
                        *a += f * *ph;
                        *ph *= st;
                    }
                }
                for a in acc.iter_mut() {
                    *a *= zeta / (2.0 * PI);
                }
                base += n;
            }
        },
        dim,
        &spec,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut values = Vec::with_capacity(sets.len());
    let mut base = 0;
    for set in &prepared {
        let n = set.offsets.len();
        // Z_d = Z0·ζ and the field carries 1/Z0, so only k0 remains
        values.push(est.value[base..base + n].iter().map(|v| v * k0).collect());
        base += n;
    }
    Ok(FieldBatch {
        values,
        warnings: est.warning.into_iter().collect(),
    })
}

/// How the transmit-to-receive coupling is synthesised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRoute {
    /// Field of the infinite array with only the driven gap carrying current.
    #[default]
    OpenArray,
    /// Field of the N port voltages `Z_T e_n`, other gaps shorted.
    TruncatedFeeds,
}

/// `H_RT[u, n]`: response at receiver `u` to unit current at feed `n`.
pub fn build_hrt(
    users: &[ReceiverSpec],
    geom: &LineGeometry,
    med: &Medium,
    tail: &TailSumSpec,
    numerics: &FieldNumerics,
    route: CouplingRoute,
    z_t: Option<&DMatrix<Complex64>>,
) -> Result<(DMatrix<Complex64>, Vec<AccuracyWarning>)> {
    for u in users {
        u.validate(geom)?;
    }
    let n = geom.num_feeds;
    let mut h = DMatrix::zeros(users.len(), n);
    let mut warnings = Vec::new();
    match route {
        CouplingRoute::OpenArray => {
            // group receivers by radius so each radial factor is shared
            let mut radii: Vec<f64> = users.iter().map(|u| u.r).collect();
            radii.sort_by(f64::total_cmp);
            radii.dedup();
            let mut sets: Vec<ProbeSet> = radii
                .iter()
                .map(|&r| ProbeSet {
                    r,
                    offsets: Vec::new(),
                })
                .collect();
            let mut index = Vec::with_capacity(users.len());
            for u in users {
                let s = radii.iter().position(|r| *r == u.r).unwrap();
                index.push((s, sets[s].offsets.len()));
                for col in 0..n {
                    sets[s].offsets.push(u.z - geom.feed_position(col));
                }
            }
            let batch = open_array_field(&sets, geom, med, tail, numerics)?;
            warnings.extend(batch.warnings);
            for (ui, u) in users.iter().enumerate() {
                let (s, start) = index[ui];
                let scale = coupling_scale(u, med)? * u.dipole_length_dl;
                for col in 0..n {
                    h[(ui, col)] = batch.values[s][start + col] * scale;
                }
            }
        }
        CouplingRoute::TruncatedFeeds => {
            let z_t = z_t.ok_or(FieldError::InvalidReceiver {
                field: "route",
                reason: "the truncated-feed route needs Z_T".into(),
            })?;
            for col in 0..n {
                let v: Vec<Complex64> = z_t.column(col).iter().copied().collect();
                for (ui, u) in users.iter().enumerate() {
                    let (s, w) = h_phi_spatial(u.r, u.z, &v, geom, med, numerics)?;
                    warnings.extend(w);
                    h[(ui, col)] = s.h_phi * coupling_scale(u, med)? * u.dipole_length_dl;
                }
            }
        }
    }
    Ok((h, warnings))
}
