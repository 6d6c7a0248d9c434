//! Lyapunov exponent of the almost Mathieu cocycle at E = 0 against the
//! lower bound max(ln(λ/2), 0).
//!
//! `cargo run --release --example lyapunov_exponent`

use qpcocycle::arithmetic::golden;
use qpcocycle::cocycle::lyapunov;
use qpcocycle::spectral::{amo_potential, schrodinger};

fn main() -> qpcocycle::Result<()> {
    println!("{:>6} {:>10} {:>10} {:>10}", "lambda", "L", "spread", "ln(l/2)+");
    for lambda in [0.5, 1.0, 2.0, 3.0, 4.0, 6.0] {
        let c = schrodinger(&amo_potential(lambda), 0.0, golden())?;
        let l = lyapunov(&c, 8192, 16, 1)?;
        let bound = (lambda / 2.0f64).ln().max(0.0);
        println!("{lambda:>6} {:>10.5} {:>10.2e} {bound:>10.5}", l.value, l.spread);
    }
    // outside the spectrum of the free operator the exponent is explicit
    let free = schrodinger(&amo_potential(0.0), 3.0, golden())?;
    let exact = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    println!("free, E = 3: {:.6} (exact {exact:.6})", lyapunov(&free, 4096, 4, 0)?.value);
    Ok(())
}
