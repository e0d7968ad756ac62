//! Bessel and Hankel functions of complex argument, including the evanescent
//! branch of the radial wavenumber.

use num_complex::Complex64;
use wirelink::specfun::{bessel_j, bessel_k, bessel_y, beta_of_alpha, hankel2, hankel2_scaled, Order};

fn main() {
    println!("{:>24} {:>44} {:>44}", "z", "J0(z)", "H0(2)(z)");
    for z in [
        Complex64::new(0.5, 0.0),
        Complex64::new(2.404_825_557_695_773, 0.0),
        Complex64::new(30.0, 0.0),
        Complex64::new(3.0, -2.0),
        Complex64::new(0.0, -5.0),
    ] {
        println!(
            "{:>24} {:>44} {:>44}",
            z.to_string(),
            bessel_j(Order::Zero, z).unwrap().to_string(),
            hankel2(Order::Zero, z).unwrap().to_string()
        );
    }

    // Wronskian J1 Y0 - J0 Y1 = 2/(π x)
    let x = Complex64::new(7.3, 0.0);
    let w = bessel_j(Order::One, x).unwrap() * bessel_y(Order::Zero, x).unwrap()
        - bessel_j(Order::Zero, x).unwrap() * bessel_y(Order::One, x).unwrap();
    println!("\nWronskian residual at x = 7.3: {:.2e}", (w - 2.0 / (std::f64::consts::PI * x)).norm());

    // beyond the light line β is on the -j ray and H0(2)(-jw) = (2j/π) K0(w)
    let k = Complex64::new(1.0, 0.0);
    let beta = beta_of_alpha(Complex64::new(3.0, 0.0), k);
    println!("β(α = 3k) = {beta}");
    let h = hankel2(Order::Zero, beta).unwrap();
    let kk = bessel_k(Order::Zero, Complex64::new(beta.im.abs(), 0.0)).unwrap();
    println!("H0(2)(β) = {h}, (2j/π)K0 = {}", kk * Complex64::new(0.0, 2.0 / std::f64::consts::PI));

    // scaled values stay finite far down the ray
    let deep = Complex64::new(0.0, -2000.0);
    println!("exp(jz) H0(2)(z) at z = {deep}: {}", hankel2_scaled(Order::Zero, deep).unwrap());
}
