//! Scan the almost Mathieu operator at the golden mean and report the
//! measure proxy of the spectrum.
//!
//! `cargo run --release --example spectrum_scan -- [lambda] [dE] [grid size]`

use std::time::Instant;

use qpcocycle::arithmetic::golden;
use qpcocycle::spectral::{amo_potential, inclusion_radius, spectrum_measure, spectrum_scan, ScanParams};

fn main() -> qpcocycle::Result<()> {
    let mut args = std::env::args().skip(1);
    let lambda: f64 = args.next().map_or(1.0, |s| s.parse().expect("lambda"));
    let de: f64 = args.next().map_or(1e-2, |s| s.parse().expect("dE"));
    let grid_size: usize = args.next().map_or(256, |s| s.parse().expect("grid size"));
    let v = amo_potential(lambda);
    let r = inclusion_radius(&v);
    let start = Instant::now();
    let scan = spectrum_scan(&v, golden(), -r, r, de, ScanParams { grid_size, ..ScanParams::default() })?;
    let measure = spectrum_measure(&scan)?;
    println!(
        "lambda {lambda}  dE {de}  energies {}  measure {measure:.4}  (|4 - 2 lambda| = {})  {:.1?}",
        scan.entries.len(),
        (4.0 - 2.0 * lambda).abs(),
        start.elapsed()
    );
    Ok(())
}
