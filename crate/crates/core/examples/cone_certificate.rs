//! Invariant cone-field certificates of uniform hyperbolicity, inside and
//! outside the spectrum of the almost Mathieu operator.
//!
//! `cargo run --release --example cone_certificate`

use qpcocycle::arithmetic::golden;
use qpcocycle::cocycle::uh_certificate;
use qpcocycle::spectral::{amo_potential, schrodinger};

fn main() -> qpcocycle::Result<()> {
    let v = amo_potential(3.0);
    // |E| > 5 is always hyperbolic; inside, the spectrum has gaps
    for e in [-5.5, -4.2, -1.0, 0.0, 0.35, 2.0, 5.5] {
        let c = schrodinger(&v, e, golden())?;
        match uh_certificate(&c, 256, 1 << 12)? {
            Some(cert) => println!(
                "E = {e:+.2}: certified at n = {:>4}, {} cells, min half-angle {:.2e}, margin {:.3}",
                cert.n_step, cert.grid_size, cert.half_angle, cert.contraction_margin
            ),
            None => println!("E = {e:+.2}: undecided up to n = 4096"),
        }
    }
    Ok(())
}
