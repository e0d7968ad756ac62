//! The admittance impulse response y(z) sampled at the feed spacing
//! reproduces the Fourier coefficients of the periodic admittance Y_d.

use std::f64::consts::PI;

use num_complex::Complex64;
use wirelink::linearray::{discrete_admittance, impulse_response_batch, KernelNumerics, LineGeometry, Medium};
use wirelink::quadrature::{integrate_vec, IntegrationSpec};

fn main() {
    let med = Medium::new(1e9).unwrap();
    let geom = LineGeometry::in_wavelengths(&med, 1.0 / 500.0, 2.0, 1, 1e-4).unwrap();
    let tail = KernelNumerics::default().tail(&geom, &med).unwrap();
    let d = geom.feed_spacing_delta;
    let p = 2.0 * PI / d;
    let window = (tail.l_max as f64 + 0.5) * p;
    let zs: Vec<f64> = (0..=8).map(|n| n as f64 * d).collect();

    let k0 = med.k0();
    let spec = IntegrationSpec::new(-window, window)
        .unwrap()
        .with_splits(vec![-k0, k0])
        .unwrap()
        .with_tolerances(1e-7, 1e-300)
        .unwrap()
        .with_seed_width(p / 2.0);
    let y = impulse_response_batch(&zs, &geom, &med, &spec).unwrap();

    let zone = IntegrationSpec::new(-p / 2.0, p / 2.0)
        .unwrap()
        .with_splits(vec![0.0])
        .unwrap()
        .with_tolerances(1e-9, 1e-300)
        .unwrap();
    let c = integrate_vec(
        |al, out| {
            let v = discrete_admittance(al, &geom, &med, &tail).unwrap() * (d / (2.0 * PI));
            for (o, z) in out.iter_mut().zip(&zs) {
                *o = v * Complex64::from_polar(1.0, al * z);
            }
        },
        zs.len(),
        &zone,
    )
    .unwrap();
    println!("{:>3} {:>40} {:>40} {:>10}", "n", "y(nΔ) [S/m·m]", "zone coefficient", "rel diff");
    for n in 0..zs.len() {
        let rel = (y.value[n] - c.value[n]).norm() / y.value[n].norm();
        println!("{n:>3} {:>40} {:>40} {rel:>10.2e}", y.value[n].to_string(), c.value[n].to_string());
    }
}
