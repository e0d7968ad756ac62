//! Azimuthal magnetic field near the array when one gap carries 1 A and all
//! other gaps are open.

use wirelink::fields::{open_array_field, FieldNumerics, ProbeSet};
use wirelink::linearray::{KernelNumerics, LineGeometry, Medium};

fn main() {
    let med = Medium::new(1e9).unwrap();
    let lam = med.wavelength();
    let geom = LineGeometry::in_wavelengths(&med, 1.0 / 500.0, 2.0, 1, 1e-4).unwrap();
    let tail = KernelNumerics::default().tail(&geom, &med).unwrap();
    let offsets: Vec<f64> = (0..=12).map(|i| i as f64 * 0.125 * lam).collect();
    let sets: Vec<ProbeSet> = [0.1, 0.5]
        .iter()
        .map(|r| ProbeSet {
            r: r * lam,
            offsets: offsets.clone(),
        })
        .collect();
    let batch = open_array_field(&sets, &geom, &med, &tail, &FieldNumerics::default()).unwrap();
    println!("{:>8} {:>16} {:>16}", "z/λ", "|H| at r=0.1λ", "|H| at r=0.5λ");
    for (i, z) in offsets.iter().enumerate() {
        println!(
            "{:>8.3} {:>16.6} {:>16.6}",
            z / lam,
            batch.values[0][i].norm(),
            batch.values[1][i].norm()
        );
    }
    println!("accuracy warnings: {}", batch.warnings.len());
}
