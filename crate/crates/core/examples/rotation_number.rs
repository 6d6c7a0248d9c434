//! Fibered rotation numbers and the integrated density of states.
//!
//! For v = 0 the cocycle at E = 2cos 2πω is conjugate to a rotation by ω, so
//! the rotation number is known exactly.
//!
//! `cargo run --release --example rotation_number`

use std::f64::consts::TAU;

use qpcocycle::arithmetic::golden;
use qpcocycle::rotnum::{fibered_rotation_number, ids};
use qpcocycle::spectral::{amo_potential, schrodinger};

fn main() -> qpcocycle::Result<()> {
    let zero = amo_potential(0.0);
    for omega in [0.1, 0.2, 0.3, 0.4] {
        let e = 2.0 * (TAU * omega).cos();
        let rho = fibered_rotation_number(&schrodinger(&zero, e, golden())?, 1 << 16, 0.0, 0.0)?;
        println!("omega {omega}: rho {:.6}  spread {:.1e}", rho.value, rho.spread);
    }
    let amo = amo_potential(1.0);
    println!("\nIDS of the almost Mathieu operator, lambda = 1");
    for k in 0..=12 {
        let e = -3.0 + 0.5 * k as f64;
        println!("  N({e:+.1}) = {:.4}", ids(&amo, golden(), e, 1 << 14)?);
    }
    Ok(())
}
