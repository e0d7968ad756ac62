//! Scenario files.
//!
//! A scenario is a TOML document. Lengths are in wavelengths by default
//! (`medium.units = "wavelengths"`), in which case the reference frequency only
//! fixes the internal SI scale and the results do not depend on it.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fields::{CouplingRoute, FieldNumerics, ReceiverKind, ReceiverSpec};
use crate::linearray::{KernelNumerics, LineGeometry, Medium, MAX_LOSS};
use crate::linkrate::PowerBudget;
use crate::multiport::AmplifierChain;

pub const REFERENCE_FREQUENCY_HZ: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Wavelengths,
    Meters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumConfig {
    pub frequency_hz: f64,
    pub units: Units,
}

impl Default for MediumConfig {
    fn default() -> Self {
        MediumConfig {
            frequency_hz: REFERENCE_FREQUENCY_HZ,
            units: Units::Wavelengths,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub wire_radius: f64,
    pub feed_spacing: f64,
    #[serde(default = "one")]
    pub num_feeds: usize,
    #[serde(default = "default_loss")]
    pub loss_delta: f64,
}

fn one() -> usize {
    1
}

fn default_loss() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverConfig {
    pub kind: ReceiverKind,
    /// Defaults to λ/100.
    pub dipole_length: Option<f64>,
    /// Defaults to λ/20.
    pub chu_radius: Option<f64>,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        ReceiverConfig {
            kind: ReceiverKind::ChuLoop,
            dipole_length: None,
            chu_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    /// Sum of squared generator-voltage magnitudes, V².
    pub total_generator_power: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            total_generator_power: 1e-15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub alpha_max_factor: f64,
    pub l_max: Option<usize>,
    pub grid_size: Option<usize>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub decay_target: f64,
    pub coupling_route: CouplingRoute,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let f = FieldNumerics::default();
        NumericsConfig {
            alpha_max_factor: f.alpha_max_factor,
            l_max: None,
            grid_size: None,
            rel_tol: f.rel_tol,
            abs_tol: f.abs_tol,
            decay_target: f.decay_target,
            coupling_route: CouplingRoute::OpenArray,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Axis {
    /// Evenly spaced values; exactly antisymmetric when `start = -stop`.
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let d = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| (self.start * (self.points - 1 - i) as f64 + self.stop * i as f64) / d)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepConfig {
    SeMap { r: Axis, z: Axis },
    SpacingStudy { spacings: Vec<f64>, r: f64, z: Axis },
    TwoUserTrajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub z_start: f64,
    pub z_end: f64,
    pub step: f64,
}

impl Trajectory {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.z_end - self.z_start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.z_start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    pub r: f64,
    pub z: Option<f64>,
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub medium: MediumConfig,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub amplifier: AmplifierChain,
    #[serde(default)]
    pub receiver: ReceiverConfig,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub users: Vec<UserConfig>,
}

/// Sweep with every length in metres.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    SeMap { r: Vec<f64>, z: Vec<f64> },
    SpacingStudy { spacings: Vec<f64>, r: f64, z: Vec<f64> },
    TwoUser { user1: (f64, f64), r2: f64, z2: Vec<f64> },
}

/// A validated scenario in SI units.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub medium: Medium,
    pub geometry: LineGeometry,
    pub chain: AmplifierChain,
    pub budget: PowerBudget,
    pub receiver_kind: ReceiverKind,
    pub dipole_length: f64,
    pub chu_radius: f64,
    pub kernel_numerics: KernelNumerics,
    pub field_numerics: FieldNumerics,
    pub route: CouplingRoute,
    /// Metres per configured length unit.
    pub length_unit: f64,
    pub sweep: Sweep,
}

impl Scenario {
    pub fn receiver(&self, r: f64, z: f64) -> ReceiverSpec {
        ReceiverSpec {
            r,
            z,
            kind: self.receiver_kind,
            dipole_length_dl: self.dipole_length,
            chu_radius: self.chu_radius,
        }
    }

    /// Same scenario with a different feed spacing (metres).
    pub fn with_spacing(&self, delta: f64) -> Scenario {
        let mut s = self.clone();
        s.geometry.feed_spacing_delta = delta;
        s
    }

    /// Short content hash of the configuration with all defaults filled in.
    pub fn run_id(&self) -> String {
        run_id(&self.config)
    }
}

pub fn run_id(config: &ScenarioConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serialises");
    let digest = Sha256::digest(canonical.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    resolve(parse_config(&text)?)
}

struct Checker(Vec<Diagnostic>);

impl Checker {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic {
            field: field.into(),
            message: message.into(),
        });
    }

    fn positive(&mut self, field: &str, v: f64) -> bool {
        if v.is_finite() && v > 0.0 {
            true
        } else {
            self.push(field, format!("{v} must be positive and finite"));
            false
        }
    }

    fn finite(&mut self, field: &str, v: f64) -> bool {
        if v.is_finite() {
            true
        } else {
            self.push(field, format!("{v} must be finite"));
            false
        }
    }

    fn radius(&mut self, field: &str, r: f64, a: f64) {
        if !(r.is_finite() && r > a) {
            self.push(field, format!("{r} must lie outside the wire (radius {a})"));
        }
    }

    fn axis(&mut self, field: &str, axis: &Axis) -> bool {
        let mut ok = self.finite(&format!("{field}.start"), axis.start);
        ok &= self.finite(&format!("{field}.stop"), axis.stop);
        if axis.points == 0 {
            self.push(format!("{field}.points"), "must be at least 1");
            ok = false;
        }
        ok
    }
}

/// Check every invariant and convert to SI units.
pub fn resolve(config: ScenarioConfig) -> Result<Scenario, ConfigError> {
    let mut c = Checker(Vec::new());

    let freq_ok = c.positive("medium.frequency_hz", config.medium.frequency_hz);
    let medium = Medium::new(if freq_ok {
        config.medium.frequency_hz
    } else {
        REFERENCE_FREQUENCY_HZ
    })
    .expect("positive frequency");
    let unit = match config.medium.units {
        Units::Wavelengths => medium.wavelength(),
        Units::Meters => 1.0,
    };

    let g = &config.geometry;
    let a_ok = c.positive("geometry.wire_radius", g.wire_radius);
    if a_ok && !(g.feed_spacing.is_finite() && g.feed_spacing > g.wire_radius) {
        c.push(
            "geometry.feed_spacing",
            format!(
                "{} must exceed geometry.wire_radius {} (LineGeometry requires Δ > a)",
                g.feed_spacing, g.wire_radius
            ),
        );
    }
    if g.num_feeds < 1 {
        c.push("geometry.num_feeds", "at least one feed is required");
    }
    if !(g.loss_delta >= 0.0 && g.loss_delta <= MAX_LOSS) {
        c.push(
            "geometry.loss_delta",
            format!("{} outside [0, {MAX_LOSS}]", g.loss_delta),
        );
    }
    let a = g.wire_radius;

    if let Err(e) = config.amplifier.validate() {
        c.push("amplifier", e.to_string());
    }
    c.positive("budget.total_generator_power", config.budget.total_generator_power);

    let rc = &config.receiver;
    let dl = rc.dipole_length.unwrap_or(0.01 * medium.wavelength() / unit);
    let chu = rc.chu_radius.unwrap_or(0.05 * medium.wavelength() / unit);
    c.positive("receiver.dipole_length", dl);
    if rc.kind == ReceiverKind::ChuLoop {
        c.positive("receiver.chu_radius", chu);
    }

    let n = &config.numerics;
    if !(n.alpha_max_factor.is_finite() && n.alpha_max_factor > 1.0) {
        c.push(
            "numerics.alpha_max_factor",
            format!("{} must exceed 1", n.alpha_max_factor),
        );
    }
    c.positive("numerics.rel_tol", n.rel_tol);
    c.positive("numerics.abs_tol", n.abs_tol);
    if !(n.decay_target > 0.0 && n.decay_target < 1.0) {
        c.push("numerics.decay_target", format!("{} outside (0, 1)", n.decay_target));
    }
    if n.l_max == Some(0) {
        c.push("numerics.l_max", "must be at least 1");
    }
    if let Some(m) = n.grid_size {
        let min = 64 * g.num_feeds.max(1);
        if !m.is_power_of_two() || m < min {
            c.push(
                "numerics.grid_size",
                format!("{m} must be a power of two and at least 64·num_feeds = {min}"),
            );
        }
    }

    let sweep = match &config.sweep {
        SweepConfig::SeMap { r, z } => {
            if g.num_feeds != 1 {
                c.push("geometry.num_feeds", "se_map drives a single gap at z = 0; set num_feeds = 1");
            }
            if c.axis("sweep.r", r) {
                for v in r.values() {
                    c.radius("sweep.r", v, a);
                }
            }
            c.axis("sweep.z", z);
            Sweep::SeMap {
                r: r.values().iter().map(|v| v * unit).collect(),
                z: z.values().iter().map(|v| v * unit).collect(),
            }
        }
        SweepConfig::SpacingStudy { spacings, r, z } => {
            if g.num_feeds != 1 {
                c.push("geometry.num_feeds", "spacing_study drives a single gap; set num_feeds = 1");
            }
            if spacings.is_empty() {
                c.push("sweep.spacings", "at least one spacing is required");
            }
            for (i, d) in spacings.iter().enumerate() {
                if !(d.is_finite() && *d > a) {
                    c.push(
                        format!("sweep.spacings[{i}]"),
                        format!("{d} must exceed geometry.wire_radius {a} (LineGeometry requires Δ > a)"),
                    );
                }
            }
            c.radius("sweep.r", *r, a);
            c.axis("sweep.z", z);
            Sweep::SpacingStudy {
                spacings: spacings.iter().map(|v| v * unit).collect(),
                r: r * unit,
                z: z.values().iter().map(|v| v * unit).collect(),
            }
        }
        SweepConfig::TwoUserTrajectory => two_user_sweep(&config.users, a, unit, &mut c),
    };

    if !c.0.is_empty() {
        return Err(ConfigError::Invalid(c.0));
    }

    let geometry = LineGeometry::new(g.wire_radius * unit, g.feed_spacing * unit, g.num_feeds, g.loss_delta)
        .map_err(|e| ConfigError::Invalid(vec![Diagnostic {
            field: "geometry".into(),
            message: e.to_string(),
        }]))?;
    let kernel_numerics = KernelNumerics {
        alpha_max_factor: n.alpha_max_factor,
        l_max: n.l_max,
        grid_size: n.grid_size,
    };
    let field_numerics = FieldNumerics {
        alpha_max_factor: n.alpha_max_factor,
        decay_target: n.decay_target,
        rel_tol: n.rel_tol,
        abs_tol: n.abs_tol,
    };
    Ok(Scenario {
        medium,
        geometry,
        chain: config.amplifier,
        budget: PowerBudget::new(config.budget.total_generator_power).expect("checked above"),
        receiver_kind: rc.kind,
        dipole_length: dl * unit,
        chu_radius: chu * unit,
        kernel_numerics,
        field_numerics,
        route: n.coupling_route,
        length_unit: unit,
        sweep,
        config,
    })
}

fn two_user_sweep(users: &[UserConfig], a: f64, unit: f64, c: &mut Checker) -> Sweep {
    let empty = Sweep::TwoUser {
        user1: (0.0, 0.0),
        r2: 0.0,
        z2: Vec::new(),
    };
    if users.len() != 2 {
        c.push("users", format!("two_user_trajectory needs exactly two users, found {}", users.len()));
        return empty;
    }
    let (u1, u2) = (&users[0], &users[1]);
    c.radius("users[0].r", u1.r, a);
    c.radius("users[1].r", u2.r, a);
    let z1 = match (u1.z, &u1.trajectory) {
        (Some(z), None) => {
            c.finite("users[0].z", z);
            z
        }
        _ => {
            c.push("users[0]", "the first user is fixed: give z and no trajectory");
            0.0
        }
    };
    let z2 = match (&u2.trajectory, u2.z) {
        (Some(t), None) => {
            let ok = c.finite("users[1].trajectory.z_start", t.z_start)
                & c.finite("users[1].trajectory.z_end", t.z_end)
                & c.positive("users[1].trajectory.step", t.step);
            if ok && t.z_end < t.z_start {
                c.push("users[1].trajectory.z_end", "must not precede z_start");
            }
            if ok && t.z_end >= t.z_start {
                t.values()
            } else {
                Vec::new()
            }
        }
        _ => {
            c.push("users[1]", "the second user moves: give a trajectory and no z");
            Vec::new()
        }
    };
    Sweep::TwoUser {
        user1: (u1.r * unit, z1 * unit),
        r2: u2.r * unit,
        z2: z2.iter().map(|v| v * unit).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[geometry]
wire_radius = 0.002
feed_spacing = 2.0

[sweep]
kind = "se_map"
r = { start = 0.1, stop = 0.5, points = 3 }
z = { start = -1.0, stop = 1.0, points = 5 }
"#;

    fn diagnostics(text: &str) -> Vec<Diagnostic> {
        match resolve(parse_config(text).unwrap()) {
            Err(ConfigError::Invalid(d)) => d,
            other => panic!("expected diagnostics, got {other:?}"),
        }
    }

    #[test]
    fn well_formed_config_is_ok() {
        let s = resolve(parse_config(BASE).unwrap()).unwrap();
        let lam = s.medium.wavelength();
        assert_eq!(s.geometry.num_feeds, 1);
        assert!((s.geometry.feed_spacing_delta - 2.0 * lam).abs() < 1e-15);
        assert!((s.dipole_length - lam / 100.0).abs() < 1e-15);
        match &s.sweep {
            Sweep::SeMap { r, z } => {
                assert_eq!(r.len(), 3);
                assert_eq!(z.len(), 5);
                assert_eq!(z[0], -z[4]);
                assert_eq!(z[2], 0.0);
            }
            _ => panic!(),
        }
        assert_eq!(s.run_id().len(), 16);
    }

    #[test]
    fn negative_radius_names_the_field() {
        let d = diagnostics(&BASE.replace("wire_radius = 0.002", "wire_radius = -0.002"));
        assert!(d.iter().any(|d| d.field == "geometry.wire_radius"), "{d:?}");
    }

    #[test]
    fn spacing_below_radius_cites_geometry_invariant() {
        let d = diagnostics(&BASE.replace("feed_spacing = 2.0", "feed_spacing = 0.001"));
        let d = d.iter().find(|d| d.field == "geometry.feed_spacing").unwrap();
        assert!(d.message.contains("LineGeometry"));
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = parse_config("[geometry]\nwire_radius = = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_config(&BASE.replace("[sweep]", "[sweep]\ncolour = 1")).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn trajectory_checks() {
        let two = r#"
[geometry]
wire_radius = 0.002
feed_spacing = 2.0
num_feeds = 2

[sweep]
kind = "two_user_trajectory"

[[users]]
r = 0.5
z = 0.0

[[users]]
r = 0.5
trajectory = { z_start = -1.0, z_end = 1.0, step = 0.5 }
"#;
        let s = resolve(parse_config(two).unwrap()).unwrap();
        match s.sweep {
            Sweep::TwoUser { z2, .. } => assert_eq!(z2.len(), 5),
            _ => panic!(),
        }
        let d = diagnostics(&two.replace("step = 0.5", "step = 0.0"));
        assert!(d.iter().any(|d| d.field == "users[1].trajectory.step"));
        let single = two.replace("z_end = 1.0", "z_end = -1.0");
        match resolve(parse_config(&single).unwrap()).unwrap().sweep {
            Sweep::TwoUser { z2, .. } => assert_eq!(z2, vec![-1.0 * Medium::new(1e9).unwrap().wavelength()]),
            _ => panic!(),
        }
    }

    #[test]
    fn run_id_tracks_numerics() {
        let a = parse_config(BASE).unwrap();
        let mut b = a.clone();
        assert_eq!(run_id(&a), run_id(&b));
        b.numerics.rel_tol = 1e-9;
        assert_ne!(run_id(&a), run_id(&b));
    }
}
