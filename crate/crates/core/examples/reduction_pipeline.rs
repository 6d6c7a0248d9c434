//! End-to-end reduction: renormalize, fit a constant conjugacy to rotations
//! at every depth, reduce the projected rotation cocycle and measure the
//! composed conjugacy.
//!
//! `cargo run --release --example reduction_pipeline -- [depth]`

use qpcocycle::arithmetic::golden;
use qpcocycle::cocycle::{Cocycle, QpMap, TrigPoly};
use qpcocycle::linalg2::Mat2;
use qpcocycle::renorm::{reduction_pipeline, PipelineParams, PipelineReport};
use qpcocycle::rotnum::fibered_rotation_number;
use qpcocycle::spectral::{amo_potential, schrodinger};

fn show(name: &str, r: &PipelineReport) {
    println!("{name}");
    for d in &r.depths {
        println!(
            "  depth {}  alpha_n {:.6}  SO(2)-distance {:.2e} / {:.2e}",
            d.depth, d.alpha_n, d.so2_distance_gen10, d.so2_distance_gen01
        );
    }
    let f = &r.final_;
    println!(
        "  {:?}: reducer residual {:?}, total residual {:?}, rho {:.6}, Diophantine wrt alpha: {}",
        f.outcome, f.residual_so2_reduce, f.residual_total, f.rho, f.dio_check.holds
    );
}

fn main() -> qpcocycle::Result<()> {
    let depth: usize = std::env::args().nth(1).map_or(5, |s| s.parse().expect("depth"));
    let params = PipelineParams { depth, ..PipelineParams::default() };

    let b = |x: f64| Mat2::rotation(0.1 * (std::f64::consts::TAU * x).sin());
    let alpha = golden();
    let map = TrigPoly::from_fn(1, 64, |x| b(x + alpha) * Mat2::rotation(0.15) * b(x).adjugate())?;
    show("R_0.15 conjugated by R_(0.1 sin 2pi x)", &reduction_pipeline(&Cocycle::new(alpha, QpMap::Trig(map))?, params)?);

    // almost Mathieu, lambda = 0.3, at the energy where rho = alpha/4
    let v = amo_potential(0.3);
    let (mut lo, mut hi) = (-2.3, 2.3);
    while hi - lo > 1e-10 {
        let e = 0.5 * (lo + hi);
        let rho = fibered_rotation_number(&schrodinger(&v, e, alpha)?, 1 << 14, 0.0, 0.0)?.value;
        if rho > alpha / 4.0 {
            lo = e;
        } else {
            hi = e;
        }
    }
    let e = 0.5 * (lo + hi);
    show(&format!("almost Mathieu, lambda = 0.3, E = {e:.8}"), &reduction_pipeline(&schrodinger(&v, e, alpha)?, params)?);
    Ok(())
}
