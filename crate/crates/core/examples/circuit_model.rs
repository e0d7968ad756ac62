//! Multiport model of a two-feed array and two loop receivers: end-to-end
//! channel, noise correlation and a Monte-Carlo check through the circuit.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wirelink::fields::{build_hrt, receiver_admittance, CouplingRoute, FieldNumerics, ReceiverKind, ReceiverSpec};
use wirelink::linearray::{default_kernel, finite_array_impedance, KernelNumerics, LineGeometry, Medium};
use wirelink::multiport::{
    assemble_gmimo, block_inverse, end_to_end, max_sigma_deviation, monte_carlo_output_covariance, AmplifierChain,
};

fn main() {
    let med = Medium::new(1e9).unwrap();
    let lam = med.wavelength();
    let geom = LineGeometry::in_wavelengths(&med, 1.0 / 500.0, 2.0, 2, 1e-4).unwrap();
    let numerics = KernelNumerics::default();
    let kernel = default_kernel(&geom, &med, &numerics).unwrap();
    let z_t = finite_array_impedance(&kernel, 2).unwrap();
    let users = [
        ReceiverSpec::with_defaults(&med, 0.5 * lam, 0.0, ReceiverKind::ChuLoop),
        ReceiverSpec::with_defaults(&med, 0.5 * lam, 0.8 * lam, ReceiverKind::ChuLoop),
    ];
    let tail = numerics.tail(&geom, &med).unwrap();
    let (h_rt, _) = build_hrt(&users, &geom, &med, &tail, &FieldNumerics::default(), CouplingRoute::OpenArray, None).unwrap();
    let y_r = DMatrix::from_diagonal(&DVector::from_iterator(2, users.iter().map(|u| receiver_admittance(u, &med))));
    let model = assemble_gmimo(z_t, y_r, h_rt).unwrap();
    let chain = AmplifierChain::default();

    let k = block_inverse(&model, &chain).unwrap();
    let residual = (k.k_mimo() * model.f_mimo(&chain) - DMatrix::identity(4, 4))
        .iter()
        .fold(0.0f64, |m, v| m.max(v.norm()));
    println!("‖K_MIMO F_MIMO - I‖_max = {residual:.2e}");

    let chan = end_to_end(&model, &chain).unwrap();
    println!("H (A/V) = {:.4e}", chan.h);
    println!("R_n (A²/Hz) = {:.4e}", chan.r_n);

    let draws = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let emp = monte_carlo_output_covariance(&model, &chain, draws, &mut rng).unwrap();
    println!(
        "Monte-Carlo ({draws} draws): worst entry {:.2} standard errors from R_n",
        max_sigma_deviation(&emp, &chan.r_n, draws)
    );
}
