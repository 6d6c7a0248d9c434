//! Solving the cohomological equation for a rotation-valued cocycle and
//! checking the conjugacy by substitution.
//!
//! `cargo run --release --example so2_reduce -- [K]`

use qpcocycle::arithmetic::{golden, silver};
use qpcocycle::cocycle::{Cocycle, QpMap, TrigPoly};
use qpcocycle::linalg2::Mat2;
use qpcocycle::renorm::so2_reduce;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> qpcocycle::Result<()> {
    let k: usize = std::env::args().nth(1).map_or(32, |s| s.parse().expect("K"));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for alpha in [golden(), silver()] {
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let theta: f64 = rng.gen_range(0.0..1.0);
            let modes: Vec<(f64, f64)> = (1..=8).map(|_| (rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2))).collect();
            let phi = move |x: f64| {
                theta
                    + modes
                        .iter()
                        .enumerate()
                        .map(|(j, (a, b))| {
                            let t = std::f64::consts::TAU * (j + 1) as f64 * x;
                            (a * t.cos() + b * t.sin()) / (j + 1) as f64
                        })
                        .sum::<f64>()
            };
            let map = TrigPoly::from_fn(1, 64, |x| Mat2::rotation(phi(x)))?;
            let red = so2_reduce(&Cocycle::new(alpha, QpMap::Trig(map))?, k)?;
            worst = worst.max(red.residual);
        }
        println!("alpha = {alpha:.6}: worst substitution residual over 10 cocycles {worst:.2e}");
    }
    let resonant = Cocycle::new(0.25, QpMap::constant(Mat2::rotation(0.1)))?;
    println!("alpha = 1/4: {}", so2_reduce(&resonant, k).unwrap_err());
    Ok(())
}
