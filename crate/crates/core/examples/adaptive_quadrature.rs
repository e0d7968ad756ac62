//! Adaptive Gauss-Kronrod integration with breakpoints, and a mode sum with
//! an asymptotic tail correction.

use num_complex::Complex64;
use wirelink::quadrature::{integrate, mode_sum, Acceleration, IntegrationSpec, TailSumSpec};

fn main() {
    // integrable 1/sqrt singularity at a breakpoint
    let spec = IntegrationSpec::new(-1.0, 1.0)
        .unwrap()
        .with_splits(vec![0.0])
        .unwrap()
        .with_tolerances(1e-10, 1e-14)
        .unwrap();
    let est = integrate(|x| Complex64::new(1.0 / x.abs().sqrt(), 0.0), &spec).unwrap();
    println!("∫ |x|^-1/2 over [-1, 1] = {:.12} (exact 4), error estimate {:.1e}, {} panels", est.value.re, est.error, est.panels);

    // oscillatory integrand
    let spec = IntegrationSpec::new(0.0, 200.0).unwrap().with_tolerances(1e-10, 1e-14).unwrap();
    let est = integrate(|x| Complex64::from_polar(1.0, x) / (1.0 + x * x), &spec).unwrap();
    println!("∫ e^(jx)/(1+x²) over [0, 200] = {:.10}, {} panels", est.value, est.panels);

    // Σ 1/(1+ℓ²) over all integers is π coth π
    let exact = std::f64::consts::PI / std::f64::consts::PI.tanh();
    let term = |l: i64| Complex64::new(1.0 / (1.0 + (l * l) as f64), 0.0);
    let plain = mode_sum(term, &TailSumSpec::plain(10).unwrap());
    let tail = TailSumSpec::new(
        10,
        Acceleration::AsymptoticTail {
            coefficient: Complex64::new(1.0, 0.0),
            power: 2.0,
        },
    )
    .unwrap();
    let accel = mode_sum(term, &tail);
    println!("mode sum to |ℓ| ≤ 10: plain {:.6}, with tail {:.6}, exact {:.6}", plain.re, accel.re, exact);
}
