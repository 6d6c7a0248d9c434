//! Depth-n renormalization from the closed q_n-step formulas, checked against
//! n single steps, and the window norms of the generators by depth.
//!
//! `cargo run --release --example deep_renormalization -- [depth]`

use std::sync::Arc;

use qpcocycle::arithmetic::golden;
use qpcocycle::cocycle::{Cocycle, QpMap, TrigPoly};
use qpcocycle::linalg2::Mat2;
use qpcocycle::renorm::{normalize, renormalize_around, renormalize_deep};

fn main() -> qpcocycle::Result<()> {
    let depth: usize = std::env::args().nth(1).map_or(8, |s| s.parse().expect("depth"));
    let b = Arc::new(QpMap::Trig(TrigPoly::from_fn(1, 32, |x| {
        let f = 1.0 + 0.3 * (std::f64::consts::TAU * x).cos();
        Mat2::diag(f, 1.0 / f)
    })?));
    let c = Cocycle::new(golden(), QpMap::constant(Mat2::rotation(0.27)))?.conjugate(b);
    let phi = normalize(&c)?;
    let x_star = 0.0;

    let mut stepped = phi.clone();
    println!("{:>5} {:>10} {:>12} {:>10} {:>10}", "depth", "alpha_n", "step vs deep", "sup |G|", "sup |G'|");
    for n in 1..=depth {
        stepped = renormalize_around(&stepped, x_star)?;
        let deep = renormalize_deep(&phi, n, x_star, 1.0)?;
        let xs = deep.window_samples(64);
        let mut gap: f64 = 0.0;
        let (mut c0, mut c1): (f64, f64) = (0.0, 0.0);
        for &x in &xs {
            for (g, s) in [(&deep.gen10, &stepped.gen10), (&deep.gen01, &stepped.gen01)] {
                let m = g.eval(x);
                gap = gap.max((m - s.eval(x)).operator_norm());
                c0 = c0.max(m.operator_norm());
                let h = 1e-5;
                c1 = c1.max((g.eval(x + h) - g.eval(x - h)).scale(0.5 / h).operator_norm());
            }
        }
        println!("{n:>5} {:>10.6} {gap:>12.1e} {c0:>10.4} {c1:>10.4}", deep.gen01.gamma);
    }
    Ok(())
}
