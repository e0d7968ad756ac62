use num_complex::Complex64;
use wirelink::specfun::{
    bessel_i_scaled, bessel_j_scaled, bessel_k_scaled, bessel_y_scaled, hankel2_scaled, Order,
};

struct Row {
    ray: String,
    order: Order,
    func: String,
    z: Complex64,
    value: Complex64,
}

fn load() -> Vec<Row> {
    let text = include_str!("data/bessel_oracle.csv");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let p = |i: usize| f[i].parse::<f64>().unwrap();
            Row {
                ray: f[0].to_string(),
                order: Order::try_from(f[1].parse::<i64>().unwrap()).unwrap(),
                func: f[2].to_string(),
                z: Complex64::new(p(3), p(4)),
                value: Complex64::new(p(5), p(6)),
            }
        })
        .collect()
}

fn eval(row: &Row) -> Complex64 {
    match row.func.as_str() {
        "J" => bessel_j_scaled(row.order, row.z),
        "Y" => bessel_y_scaled(row.order, row.z),
        "H2" => hankel2_scaled(row.order, row.z),
        "K" => bessel_k_scaled(row.order, row.z),
        "I" => bessel_i_scaled(row.order, row.z),
        other => panic!("unknown function {other}"),
    }
    .unwrap()
}

fn worst(ray: &str, tol: f64) {
    let rows: Vec<Row> = load().into_iter().filter(|r| r.ray == ray).collect();
    assert!(!rows.is_empty());
    let mut failures = Vec::new();
    let mut max_err: f64 = 0.0;
    for row in &rows {
        let got = eval(row);
        let err = (got - row.value).norm() / row.value.norm();
        max_err = max_err.max(err);
        if !(err <= tol) {
            failures.push(format!(
                "{} n={:?} z={} got={} want={} rel={:.2e}",
                row.func, row.order, row.z, got, row.value, err
            ));
        }
    }
    println!("{ray}: {} rows, max rel err {max_err:.3e}", rows.len());
    assert!(
        failures.is_empty(),
        "{} failures, first few:\n{}",
        failures.len(),
        failures.iter().take(20).cloned().collect::<Vec<_>>().join("\n")
    );
}

#[test]
fn real_axis_grid() {
    worst("real", 1e-10);
}

#[test]
fn negative_imaginary_ray() {
    worst("negj", 1e-10);
}

#[test]
fn complex_plane_sample() {
    worst("cplx", 1e-10);
}

#[test]
fn modified_functions_right_half_plane() {
    worst("rhp", 1e-10);
}
