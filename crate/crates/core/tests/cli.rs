use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use wirelink::cli::config::{parse_config, resolve};
use wirelink::cli::sweep::{detrend, local_maxima, pearson};
use wirelink::cli::{main_with_args, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK};
use wirelink::fields::{build_hrt, receiver_admittance};
use wirelink::linearray::{default_kernel, finite_array_impedance};
use wirelink::linkrate::spectral_efficiency_point;
use wirelink::multiport::{assemble_gmimo, end_to_end};

const SINGLE_FEED: &str = r#"
[geometry]
wire_radius = 0.002
feed_spacing = 2.0
num_feeds = 1
loss_delta = 1e-4

[sweep]
kind = "se_map"
r = { start = 0.3, stop = 0.3, points = 1 }
z = { start = -1.5, stop = 1.5, points = 61 }
"#;

fn two_user(feeds: usize, user1: (f64, f64), r2: f64, traj: (f64, f64, f64)) -> String {
    format!(
        r#"
[geometry]
wire_radius = 0.002
feed_spacing = 2.0
num_feeds = {feeds}
loss_delta = 1e-4

[sweep]
kind = "two_user_trajectory"

[[users]]
r = {:?}
z = {:?}

[[users]]
r = {r2:?}
trajectory = {{ z_start = {:?}, z_end = {:?}, step = {:?} }}
"#,
        user1.0, user1.1, traj.0, traj.1, traj.2
    )
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(verb: &str, config: &Path, out: &Path) -> i32 {
    main_with_args([
        "wirelink",
        verb,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

/// Parse a written CSV into its column names and rows.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (cols, rows)
}

fn column(csv: &(Vec<String>, Vec<Vec<f64>>), name: &str) -> Vec<f64> {
    let i = csv.0.iter().position(|c| c == name).unwrap();
    csv.1.iter().map(|r| r[i]).collect()
}

#[test]
fn validate_accepts_shipped_configs() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let tmp = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        assert_eq!(run("validate", &path, tmp.path()), EXIT_OK, "{}", path.display());
    }
}

#[test]
fn validate_reports_bad_geometry() {
    let tmp = tempfile::tempdir().unwrap();
    let negative = SINGLE_FEED.replace("wire_radius = 0.002", "wire_radius = -0.002");
    let p = write_config(tmp.path(), "neg.toml", &negative);
    assert_eq!(run("validate", &p, tmp.path()), EXIT_CONFIG);

    let overlap = SINGLE_FEED.replace("feed_spacing = 2.0", "feed_spacing = 0.001");
    let err = resolve(parse_config(&overlap).unwrap()).unwrap_err();
    assert!(err.to_string().contains("Δ > a") || format!("{err:?}").contains("Δ > a"), "{err:?}");
    let p = write_config(tmp.path(), "overlap.toml", &overlap);
    assert_eq!(run("validate", &p, tmp.path()), EXIT_CONFIG);

    let p = write_config(tmp.path(), "garbage.toml", "geometry = 3");
    assert_eq!(run("validate", &p, tmp.path()), EXIT_CONFIG);
}

#[test]
fn verb_and_sweep_must_match() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "map.toml", SINGLE_FEED);
    assert_eq!(run("two-user", &p, &tmp.path().join("o")), EXIT_CONFIG);
}

#[test]
fn se_map_writes_symmetric_deterministic_output() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "map.toml", SINGLE_FEED);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run("se-map", &p, &a), EXIT_OK);
    assert_eq!(run("se-map", &p, &b), EXIT_OK);
    let first = fs::read(a.join("se_map.csv")).unwrap();
    assert_eq!(first, fs::read(b.join("se_map.csv")).unwrap());

    let csv = read_csv(&a.join("se_map.csv"));
    let z = column(&csv, "z");
    let se = column(&csv, "se_bits");
    let n = z.len();
    for i in 0..n {
        assert_eq!(z[i], -z[n - 1 - i]);
        assert!((se[i] - se[n - 1 - i]).abs() <= 1e-6 * se[i].abs(), "z = {}", z[i]);
    }
    // standing-wave peaks over the 3λ window
    assert!(local_maxima(&z, &se).len() >= 3);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    for key in ["run_id", "verb", "version", "config", "numerics", "outputs", "threads", "wall_time_s"] {
        assert!(manifest.get(key).is_some(), "manifest lacks {key}");
    }
    assert_eq!(manifest["config"]["geometry"]["loss_delta"], 1e-4);
    assert!(manifest["numerics"].get("grid_size").is_some());
    let header = String::from_utf8(first).unwrap();
    assert!(header.contains(&format!("# run_id: {}", manifest["run_id"].as_str().unwrap())));
}

#[test]
fn single_point_grid_matches_direct_evaluation() {
    let text = SINGLE_FEED.replace("points = 61", "points = 1").replace("start = -1.5", "start = 0.7").replace("stop = 1.5", "stop = 0.7");
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "one.toml", &text);
    assert_eq!(run("se-map", &p, tmp.path()), EXIT_OK);
    let csv = read_csv(&tmp.path().join("se_map.csv"));
    assert_eq!(csv.1.len(), 1);

    let s = resolve(parse_config(&text).unwrap()).unwrap();
    let lam = s.medium.wavelength();
    let spec = s.receiver(0.3 * lam, 0.7 * lam);
    let kernel = default_kernel(&s.geometry, &s.medium, &s.kernel_numerics).unwrap();
    let z_t = finite_array_impedance(&kernel, 1).unwrap();
    let tail = s.kernel_numerics.tail(&s.geometry, &s.medium).unwrap();
    let (h, _) = build_hrt(&[spec.clone()], &s.geometry, &s.medium, &tail, &s.field_numerics, s.route, Some(&z_t)).unwrap();
    let y = DMatrix::from_diagonal(&DVector::from_element(1, receiver_admittance(&spec, &s.medium)));
    let chan = end_to_end(&assemble_gmimo(z_t, y, h).unwrap(), &s.chain).unwrap();
    let want = spectral_efficiency_point(&chan, s.budget).unwrap();
    assert!((csv.1[0][2] - want).abs() <= 1e-12 * want, "{} vs {want}", csv.1[0][2]);
}

#[test]
fn single_point_trajectory_gives_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "t.toml", &two_user(2, (0.5, 0.0), 0.5, (0.4, 0.4, 0.1)));
    assert_eq!(run("two-user", &p, tmp.path()), EXIT_OK);
    assert_eq!(read_csv(&tmp.path().join("two_user.csv")).1.len(), 1);
}

#[test]
fn colocated_users_get_equal_rates() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "t.toml", &two_user(2, (0.5, 0.4), 0.5, (0.4, 0.4, 0.1)));
    assert_eq!(run("two-user", &p, tmp.path()), EXIT_OK);
    let row = &read_csv(&tmp.path().join("two_user.csv")).1[0];
    assert!((row[1] - row[2]).abs() <= 1e-9 * row[1], "{row:?}");
}

#[test]
fn default_two_user_rates_anticorrelate() {
    let tmp = tempfile::tempdir().unwrap();
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/two_user.toml");
    assert_eq!(run("two-user", &p, tmp.path()), EXIT_OK);
    let csv = read_csv(&tmp.path().join("two_user.csv"));
    let z = column(&csv, "z2");
    let rho = pearson(&detrend(&z, &column(&csv, "rate_user1")), &detrend(&z, &column(&csv, "rate_user2")));
    assert!(rho < 0.0, "rho = {rho}");
}

#[test]
fn non_passive_coupling_is_a_numeric_failure() {
    // loops this close to a four-feed array violate the passivity bound of the coupling model
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "t.toml", &two_user(4, (0.1, 0.0), 0.1, (0.8, 0.8, 0.1)));
    assert_eq!(run("two-user", &p, &tmp.path().join("o")), EXIT_NUMERIC);
}

#[test]
fn seed_adds_noise_check_to_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "t.toml", &two_user(2, (0.5, 0.0), 0.5, (0.4, 0.4, 0.1)));
    let code = main_with_args([
        "wirelink", "two-user", "--config", p.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(),
        "--seed", "7", "--threads", "1",
    ]);
    assert_eq!(code, EXIT_OK);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["noise_check"]["seed"], 7);
    assert_eq!(manifest["threads"], 1);
}

#[test]
fn impedance_and_fields_verbs_run() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SINGLE_FEED.replace("points = 61", "points = 5");
    let p = write_config(tmp.path(), "m.toml", &text);
    assert_eq!(run("impedance", &p, &tmp.path().join("imp")), EXIT_OK);
    assert_eq!(run("fields", &p, &tmp.path().join("fld")), EXIT_OK);
    let z = read_csv(&tmp.path().join("imp/z_t.csv"));
    assert_eq!(z.1.len(), 1);
    assert_eq!(read_csv(&tmp.path().join("fld/fields.csv")).1.len(), 5);
}
