//! A coarse Hofstadter butterfly: energies that could not be certified
//! uniformly hyperbolic are drawn as `#`.
//!
//! `cargo run --release --example butterfly -- [lambda] [rows] [cols]`

use qpcocycle::spectral::{butterfly, Class};

fn main() -> qpcocycle::Result<()> {
    let mut args = std::env::args().skip(1);
    let lambda: f64 = args.next().map_or(2.0, |s| s.parse().expect("lambda"));
    let rows: usize = args.next().map_or(32, |s| s.parse().expect("rows"));
    let cols: usize = args.next().map_or(96, |s| s.parse().expect("cols"));
    let r = 2.0 + lambda;
    let alphas: Vec<f64> = (0..rows).map(|j| (j as f64 + 0.5) / rows as f64).collect();
    let energies: Vec<f64> = (0..cols).map(|j| -r + 2.0 * r * (j as f64 + 0.5) / cols as f64).collect();
    let b = butterfly(lambda, &alphas, &energies, 64, 2048)?;
    for row in b.cells.chunks(cols) {
        let line: String = row
            .iter()
            .map(|c| if c.class == Class::Undecided { '#' } else { ' ' })
            .collect();
        println!("{:.3} |{line}|", row[0].alpha);
    }
    if !b.perturbed.is_empty() {
        println!("{} frequencies were moved off a nearby rational", b.perturbed.len());
    }
    Ok(())
}
