//! Discrete impedance z_d[m] of a connected array and the port matrix Z_T.

use wirelink::linearray::{default_kernel, finite_array_impedance, KernelNumerics, LineGeometry, Medium};

fn main() {
    let med = Medium::new(1e9).unwrap();
    let numerics = KernelNumerics::default();
    for spacing in [0.5, 2.0, 2.25] {
        let geom = LineGeometry::in_wavelengths(&med, 1.0 / 500.0, spacing, 4, 1e-4).unwrap();
        let kernel = default_kernel(&geom, &med, &numerics).unwrap();
        println!("Δ = {spacing}λ (l_max = {}, M = {})", numerics.l_max(&geom, &med), kernel.grid_size());
        for m in 0..4 {
            let z = kernel.lag(m);
            println!("  z_d[{m}] = {:>10.4} {:+10.4}j Ω", z.re, z.im);
        }
        let z_t = finite_array_impedance(&kernel, geom.num_feeds).unwrap();
        println!("  Z_T symmetric: {}", z_t == z_t.transpose());
    }
}
