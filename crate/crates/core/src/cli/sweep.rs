//! Scenario runners behind the CLI verbs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::config::{Scenario, Sweep};
use crate::fields::{build_hrt, open_array_field, receiver_admittance, FieldError, ProbeSet};
use crate::linearray::{default_kernel, finite_array_impedance, DiscreteImpedance, LinearrayError, LineGeometry};
use crate::linkrate::{lmmse_precoder, per_user_rates, spectral_efficiency_point, LinkError};
use crate::multiport::{
    assemble_gmimo, end_to_end, max_sigma_deviation, monte_carlo_output_covariance, MultiportError, MultiportModel,
};
use crate::quadrature::AccuracyWarning;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Linearray(#[from] LinearrayError),
    #[error("{0}")]
    Field(#[from] FieldError),
    #[error("{0}")]
    Multiport(#[from] MultiportError),
    #[error("{0}")]
    Link(#[from] LinkError),
    #[error("the {verb} verb cannot run a {sweep} sweep")]
    WrongSweep { verb: &'static str, sweep: &'static str },
}

pub type Result<T> = std::result::Result<T, RunError>;

/// Numeric output with named columns, rows in emission order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = self.columns.iter().position(|c| *c == name).expect("known column");
        self.rows.iter().map(|r| r[i]).collect()
    }
}

/// Everything a verb produces.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
    /// Resolved numeric knobs echoed into the manifest.
    pub numerics: Vec<(String, serde_json::Value)>,
    pub summary: Vec<(String, serde_json::Value)>,
}

fn sweep_name(s: &Sweep) -> &'static str {
    match s {
        Sweep::SeMap { .. } => "se_map",
        Sweep::SpacingStudy { .. } => "spacing_study",
        Sweep::TwoUser { .. } => "two_user_trajectory",
    }
}

fn warn_text(w: &[AccuracyWarning], context: &str) -> Vec<String> {
    w.iter().map(|w| format!("{context}: {w}")).collect()
}

fn echo_numerics(s: &Scenario, geom: &LineGeometry, out: &mut RunOutput) {
    let kn = &s.kernel_numerics;
    let tag = if s.geometry.feed_spacing_delta == geom.feed_spacing_delta {
        String::new()
    } else {
        format!("[delta={}]", geom.feed_spacing_delta / s.length_unit)
    };
    out.numerics.push((format!("l_max{tag}"), kn.l_max(geom, &s.medium).into()));
    out.numerics.push((format!("grid_size{tag}"), kn.grid_size(geom).into()));
}

fn base_numerics(s: &Scenario, out: &mut RunOutput) {
    let f = &s.field_numerics;
    out.numerics.push(("alpha_max_factor".into(), f.alpha_max_factor.into()));
    out.numerics.push(("decay_target".into(), f.decay_target.into()));
    out.numerics.push(("rel_tol".into(), f.rel_tol.into()));
    out.numerics.push(("abs_tol".into(), f.abs_tol.into()));
    out.numerics.push((
        "coupling_route".into(),
        serde_json::to_value(s.route).expect("serialisable"),
    ));
    out.numerics.push(("reference_frequency_hz".into(), s.medium.frequency_hz.into()));
    out.numerics.push(("length_unit_m".into(), s.length_unit.into()));
    out.numerics.push(("dipole_length_m".into(), s.dipole_length.into()));
    out.numerics.push(("chu_radius_m".into(), s.chu_radius.into()));
}

struct Prepared {
    z_t: DMatrix<Complex64>,
}

fn prepare(s: &Scenario, geom: &LineGeometry) -> Result<(Prepared, DiscreteImpedance)> {
    let kernel = default_kernel(geom, &s.medium, &s.kernel_numerics)?;
    let z_t = finite_array_impedance(&kernel, geom.num_feeds)?;
    Ok((Prepared { z_t }, kernel))
}

fn model_for(s: &Scenario, z_t: &DMatrix<Complex64>, users: &[(f64, f64)], h_rt: DMatrix<Complex64>) -> Result<MultiportModel> {
    let y = DVector::from_iterator(
        users.len(),
        users.iter().map(|&(r, z)| receiver_admittance(&s.receiver(r, z), &s.medium)),
    );
    Ok(assemble_gmimo(z_t.clone(), DMatrix::from_diagonal(&y), h_rt)?)
}

/// Single-user SE along `z` at radius `r`, driven gap at z = 0.
fn se_line(s: &Scenario, geom: &LineGeometry, p: &Prepared, r: f64, zs: &[f64]) -> Result<(Vec<f64>, Vec<AccuracyWarning>)> {
    let users: Vec<_> = zs.iter().map(|&z| s.receiver(r, z)).collect();
    let tail = s.kernel_numerics.tail(geom, &s.medium)?;
    let (h, warnings) = build_hrt(&users, geom, &s.medium, &tail, &s.field_numerics, s.route, Some(&p.z_t))?;
    let se = zs
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let model = model_for(s, &p.z_t, &[(r, z)], h.rows(i, 1).into_owned())?;
            let chan = end_to_end(&model, &s.chain)?;
            Ok(spectral_efficiency_point(&chan, s.budget)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((se, warnings))
}

/// SE map over the (r, z) grid, rows ordered r-major.
pub fn run_se_map(s: &Scenario) -> Result<RunOutput> {
    let Sweep::SeMap { r, z } = &s.sweep else {
        return Err(RunError::WrongSweep {
            verb: "se-map",
            sweep: sweep_name(&s.sweep),
        });
    };
    let mut out = RunOutput::default();
    base_numerics(s, &mut out);
    echo_numerics(s, &s.geometry, &mut out);
    let (p, _) = prepare(s, &s.geometry)?;
    let lines = r
        .par_iter()
        .map(|&ri| se_line(s, &s.geometry, &p, ri, z))
        .collect::<Vec<_>>();
    let u = s.length_unit;
    let mut rows = Vec::with_capacity(r.len() * z.len());
    for (&ri, line) in r.iter().zip(lines) {
        let (se, w) = line?;
        out.warnings.extend(warn_text(&w, &format!("r={}", ri / u)));
        for (&zi, v) in z.iter().zip(se) {
            rows.push(vec![ri / u, zi / u, v]);
        }
    }
    let mean = rows.iter().map(|r| r[2]).sum::<f64>() / rows.len() as f64;
    out.summary.push(("mean_se_bits".into(), mean.into()));
    out.tables.push(Table {
        name: "se_map",
        columns: vec!["r", "z", "se_bits"],
        rows,
    });
    Ok(out)
}

/// SE along `z` at a fixed radius for each feed spacing.
pub fn run_spacing_study(s: &Scenario) -> Result<RunOutput> {
    let Sweep::SpacingStudy { spacings, r, z } = &s.sweep else {
        return Err(RunError::WrongSweep {
            verb: "se-map",
            sweep: sweep_name(&s.sweep),
        });
    };
    let mut out = RunOutput::default();
    base_numerics(s, &mut out);
    let u = s.length_unit;
    let lines = spacings
        .par_iter()
        .map(|&d| {
            let sc = s.with_spacing(d);
            let (p, _) = prepare(&sc, &sc.geometry)?;
            se_line(&sc, &sc.geometry, &p, *r, z)
        })
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    let mut means = serde_json::Map::new();
    for (&d, line) in spacings.iter().zip(lines) {
        echo_numerics(s, &s.with_spacing(d).geometry, &mut out);
        let (se, w) = line?;
        out.warnings.extend(warn_text(&w, &format!("delta={}", d / u)));
        means.insert(format!("{}", d / u), (se.iter().sum::<f64>() / se.len() as f64).into());
        for (&zi, v) in z.iter().zip(se) {
            rows.push(vec![d / u, r / u, zi / u, v]);
        }
    }
    out.summary.push(("mean_se_bits_by_spacing".into(), means.into()));
    out.tables.push(Table {
        name: "spacing_study",
        columns: vec!["delta", "r", "z", "se_bits"],
        rows,
    });
    Ok(out)
}

/// Per-user LMMSE rates while the second user moves along its trajectory.
pub fn run_two_user(s: &Scenario) -> Result<RunOutput> {
    let Sweep::TwoUser { user1, r2, z2 } = &s.sweep else {
        return Err(RunError::WrongSweep {
            verb: "two-user",
            sweep: sweep_name(&s.sweep),
        });
    };
    let mut out = RunOutput::default();
    base_numerics(s, &mut out);
    echo_numerics(s, &s.geometry, &mut out);
    let (p, _) = prepare(s, &s.geometry)?;
    let mut users = vec![s.receiver(user1.0, user1.1)];
    users.extend(z2.iter().map(|&z| s.receiver(*r2, z)));
    let tail = s.kernel_numerics.tail(&s.geometry, &s.medium)?;
    let (h, w) = build_hrt(&users, &s.geometry, &s.medium, &tail, &s.field_numerics, s.route, Some(&p.z_t))?;
    out.warnings.extend(warn_text(&w, "trajectory"));
    let rates = z2
        .par_iter()
        .enumerate()
        .map(|(k, &z)| {
            let h_rt = DMatrix::from_fn(2, h.ncols(), |i, j| h[(if i == 0 { 0 } else { k + 1 }, j)]);
            let model = model_for(s, &p.z_t, &[*user1, (*r2, z)], h_rt)?;
            let chan = end_to_end(&model, &s.chain)?;
            let pre = lmmse_precoder(&chan.h, &chan.r_n, s.budget)?;
            Ok(per_user_rates(&chan.h, &chan.r_n, &pre)?.per_user_rate)
        })
        .collect::<Result<Vec<_>>>()?;
    let u = s.length_unit;
    let rows: Vec<Vec<f64>> = z2
        .iter()
        .zip(&rates)
        .map(|(&z, r)| vec![z / u, r[0], r[1]])
        .collect();
    let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let a: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let b: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    if rows.len() > 2 {
        out.summary.push((
            "detrended_rate_pearson".into(),
            pearson(&detrend(&t, &a), &detrend(&t, &b)).into(),
        ));
    }
    out.tables.push(Table {
        name: "two_user",
        columns: vec!["z2", "rate_user1", "rate_user2"],
        rows,
    });
    Ok(out)
}

/// The z_d kernel over one period of lags and the port matrix Z_T.
pub fn run_impedance(s: &Scenario) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    base_numerics(s, &mut out);
    echo_numerics(s, &s.geometry, &mut out);
    let (p, kernel) = prepare(s, &s.geometry)?;
    let half = kernel.grid_size() as i64 / 2;
    let rows = (-half + 1..half)
        .map(|m| {
            let z = kernel.lag(m);
            let n = kernel.normalized_lag(m);
            vec![m as f64, z.re, z.im, n.re, n.im]
        })
        .collect();
    out.tables.push(Table {
        name: "zd_kernel",
        columns: vec!["m", "re_zd_ohm", "im_zd_ohm", "re_zd_over_z0", "im_zd_over_z0"],
        rows,
    });
    let n = p.z_t.nrows();
    let mut rows = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let z = p.z_t[(i, j)];
            rows.push(vec![i as f64, j as f64, z.re, z.im]);
        }
    }
    out.tables.push(Table {
        name: "z_t",
        columns: vec!["row", "col", "re_ohm", "im_ohm"],
        rows,
    });
    Ok(out)
}

/// `H_φ` over the se_map grid for 1 A at the gap at z = 0, other gaps open.
pub fn run_fields(s: &Scenario) -> Result<RunOutput> {
    let Sweep::SeMap { r, z } = &s.sweep else {
        return Err(RunError::WrongSweep {
            verb: "fields",
            sweep: sweep_name(&s.sweep),
        });
    };
    let mut out = RunOutput::default();
    base_numerics(s, &mut out);
    echo_numerics(s, &s.geometry, &mut out);
    let tail = s.kernel_numerics.tail(&s.geometry, &s.medium)?;
    let sets: Vec<ProbeSet> = r
        .iter()
        .map(|&ri| ProbeSet {
            r: ri,
            offsets: z.clone(),
        })
        .collect();
    let batches = sets
        .par_iter()
        .map(|set| open_array_field(std::slice::from_ref(set), &s.geometry, &s.medium, &tail, &s.field_numerics))
        .collect::<Vec<_>>();
    let u = s.length_unit;
    let mut rows = Vec::new();
    for (&ri, batch) in r.iter().zip(batches) {
        let batch = batch?;
        out.warnings.extend(warn_text(&batch.warnings, &format!("r={}", ri / u)));
        for (&zi, h) in z.iter().zip(&batch.values[0]) {
            rows.push(vec![ri / u, zi / u, h.re, h.im, h.norm()]);
        }
    }
    out.tables.push(Table {
        name: "fields",
        columns: vec!["r", "z", "re_h_phi", "im_h_phi", "abs_h_phi"],
        rows,
    });
    Ok(out)
}

/// Monte-Carlo check of the output noise correlation at the first sweep point.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NoiseCheck {
    pub seed: u64,
    pub draws: usize,
    pub max_sigma: f64,
}

pub fn noise_check(s: &Scenario, seed: u64, draws: usize) -> Result<NoiseCheck> {
    let users: Vec<(f64, f64)> = match &s.sweep {
        Sweep::SeMap { r, z } => vec![(r[0], z[0])],
        Sweep::SpacingStudy { r, z, .. } => vec![(*r, z[0])],
        Sweep::TwoUser { user1, r2, z2 } => vec![*user1, (*r2, z2[0])],
    };
    let geom = match &s.sweep {
        Sweep::SpacingStudy { spacings, .. } => s.with_spacing(spacings[0]).geometry,
        _ => s.geometry,
    };
    let (p, _) = prepare(s, &geom)?;
    let specs: Vec<_> = users.iter().map(|&(r, z)| s.receiver(r, z)).collect();
    let tail = s.kernel_numerics.tail(&geom, &s.medium)?;
    let (h, _) = build_hrt(&specs, &geom, &s.medium, &tail, &s.field_numerics, s.route, Some(&p.z_t))?;
    let model = model_for(s, &p.z_t, &users, h)?;
    let exact = end_to_end(&model, &s.chain)?.r_n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let emp = monte_carlo_output_covariance(&model, &s.chain, draws, &mut rng)?;
    Ok(NoiseCheck {
        seed,
        draws,
        max_sigma: max_sigma_deviation(&emp, &exact, draws),
    })
}

/// Residual of the least-squares line through `(x, y)`.
pub fn detrend(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    x.iter().zip(y).map(|(a, b)| b - my - slope * (a - mx)).collect()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|x| (x - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Positions of strict interior local maxima, refined by a parabola through
/// the three neighbouring samples.
pub fn local_maxima(x: &[f64], y: &[f64]) -> Vec<f64> {
    (1..y.len().saturating_sub(1))
        .filter(|&i| y[i] > y[i - 1] && y[i] > y[i + 1])
        .map(|i| {
            let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
            let h = x[i + 1] - x[i];
            x[i] + 0.5 * h * (a - c) / (a - 2.0 * b + c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics_helpers() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!(detrend(&x, &y).iter().all(|v| v.abs() < 1e-15));
        assert!((pearson(&x, &y) - 1.0).abs() < 1e-15);
        let z = [3.0, 2.0, 1.0, 0.0];
        assert!((pearson(&x, &z) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn maxima_of_a_sampled_cosine() {
        let x: Vec<f64> = (0..=200).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = x.iter().map(|t| (2.0 * std::f64::consts::PI * t / 0.5).cos()).collect();
        let p = local_maxima(&x, &y);
        assert_eq!(p.len(), 3);
        for (k, v) in p.iter().enumerate() {
            assert!((v - 0.5 * (k + 1) as f64).abs() < 1e-3);
        }
    }
}
