//! Two users with an LMMSE transmit beamformer: user 1 fixed, user 2 moving
//! parallel to the array.

use wirelink::cli::config::{parse_config, resolve};
use wirelink::cli::sweep::run_two_user;

fn main() {
    let scenario = resolve(parse_config(include_str!("../configs/two_user.toml")).unwrap()).unwrap();
    let out = run_two_user(&scenario).unwrap();
    let t = &out.tables[0];
    for row in t.rows.iter().step_by(10) {
        println!("z2 = {:+.2}λ  rate 1 = {:.3}  rate 2 = {:.3} bit/s/Hz", row[0], row[1], row[2]);
    }
    for (k, v) in &out.summary {
        println!("{k}: {v}");
    }
}
