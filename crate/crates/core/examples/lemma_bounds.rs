//! The a-priori Lipschitz and derivative bounds for iterates of conjugated
//! rotation cocycles, evaluated on random instances.
//!
//! `cargo run --release --example lemma_bounds`

use std::f64::consts::TAU;

use qpcocycle::arithmetic::golden;
use qpcocycle::cocycle::{derivative_bound_check, lipschitz_bound_check, QpMap, TrigPoly};
use qpcocycle::linalg2::Mat2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> qpcocycle::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut lip_ok, mut der_ok, mut tightest) = (0, 0, f64::INFINITY);
    let trials = 20;
    for _ in 0..trials {
        let (s, t): (f64, f64) = (rng.gen_range(-0.3..0.3), rng.gen_range(0.0..1.0));
        let b = QpMap::Trig(TrigPoly::from_fn(1, 32, move |x| {
            let f = 1.0 + s * (TAU * x).cos();
            Mat2::diag(f, 1.0 / f) * Mat2::rotation(t)
        })?);
        let a1: f64 = rng.gen_range(-0.1..0.1);
        let theta: f64 = rng.gen_range(0.0..1.0);
        let r = QpMap::Trig(TrigPoly::from_fn(1, 32, move |x| Mat2::rotation(theta + a1 * (TAU * x).sin()))?);
        let n = rng.gen_range(1..=50);
        let x0: f64 = rng.gen_range(0.0..1.0);
        let x = x0 + rng.gen_range(-0.01..0.01);
        let lip = lipschitz_bound_check(&b, &r, golden(), n, x0, x)?;
        let order = rng.gen_range(0..=1);
        let der = derivative_bound_check(&b, &r, golden(), n, order, x0, x, 8.0)?;
        lip_ok += lip.holds as usize;
        der_ok += der.holds as usize;
        if lip.rhs > 0.0 {
            tightest = tightest.min(lip.rhs / lip.lhs.max(1e-300));
        }
    }
    println!("Lipschitz bound held in {lip_ok}/{trials}, derivative bound in {der_ok}/{trials}");
    println!("smallest rhs/lhs ratio of the Lipschitz bound: {tightest:.2}");
    Ok(())
}
