//! Single-gap spectral-efficiency lines for feed spacings 2λ and 2.25λ.

use wirelink::cli::config::{parse_config, resolve};
use wirelink::cli::sweep::{local_maxima, run_spacing_study};

fn main() {
    let config = parse_config(include_str!("../configs/spacing_study.toml")).unwrap();
    let scenario = resolve(config).unwrap();
    let out = run_spacing_study(&scenario).unwrap();
    let table = &out.tables[0];
    let delta = table.column("delta");
    let z = table.column("z");
    let se = table.column("se_bits");
    for spacing in [2.0, 2.25] {
        let idx: Vec<usize> = (0..delta.len()).filter(|&i| delta[i] == spacing).collect();
        let zs: Vec<f64> = idx.iter().map(|&i| z[i]).collect();
        let ss: Vec<f64> = idx.iter().map(|&i| se[i]).collect();
        let mean = ss.iter().sum::<f64>() / ss.len() as f64;
        let peaks = local_maxima(&zs, &ss);
        println!("Δ = {spacing}λ: mean SE {mean:.3} bit/s/Hz, peaks at z/λ = {:.3?}", peaks);
        for i in (0..zs.len()).step_by(10) {
            let bar = "#".repeat((ss[i] * 4.0).round().max(0.0) as usize);
            println!("  z = {:+.2}λ {:6.3} {bar}", zs[i], ss[i]);
        }
    }
}
