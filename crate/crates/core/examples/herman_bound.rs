//! Lyapunov exponents of the almost Mathieu cocycle stay above ln(λ/2) at
//! every energy.
//!
//! `cargo run --release --example herman_bound -- [lambda]`

use qpcocycle::arithmetic::golden;
use qpcocycle::spectral::herman_check;

fn main() -> qpcocycle::Result<()> {
    let lambda: f64 = std::env::args().nth(1).map_or(4.0, |s| s.parse().expect("lambda"));
    let r = 2.0 + lambda;
    let energies: Vec<f64> = (0..100).map(|j| -r + 2.0 * r * j as f64 / 99.0).collect();
    let chk = herman_check(lambda, golden(), &energies, 4096)?;
    println!(
        "lambda {lambda}: min L over 100 energies = {:.5}, bound ln(lambda/2) = {:.5}, holds: {}",
        chk.min_l, chk.bound, chk.holds
    );
    Ok(())
}
