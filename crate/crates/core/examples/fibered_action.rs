//! Fibered Z^2-actions: normalization, base change, rescaling and one
//! renormalization step, with the degree and rotation number transforming
//! as they should.
//!
//! `cargo run --release --example fibered_action`

use qpcocycle::arithmetic::golden;
use qpcocycle::cocycle::{Cocycle, QpMap, TrigPoly};
use qpcocycle::linalg2::Mat2;
use qpcocycle::renorm::{action_degree, action_rot, base_change, module_distance, normalize, renormalize, rescale};

fn main() -> qpcocycle::Result<()> {
    let n_iter = 1 << 14;
    let map = TrigPoly::from_fn(1, 16, |x| {
        let s = 0.3 * (std::f64::consts::TAU * x).sin();
        Mat2::new(1.0, s, 0.0, 1.0) * Mat2::rotation(0.23)
    })?;
    let phi = normalize(&Cocycle::new(golden(), QpMap::Trig(map))?)?;
    let rho = action_rot(&phi, n_iter)?.value;
    println!("degree {}, rot {rho:.6}, commutation defect {:.1e}", action_degree(&phi)?, phi.commutation_defect());

    for u in [[[2, 1], [1, 1]], [[0, 1], [1, 0]], [[1, -3], [0, -1]]] {
        let nu = base_change(&phi, u)?;
        let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
        let r = action_rot(&nu, n_iter)?.value;
        let (d, n, m) = module_distance(r - det as f64 * rho, 1.0, golden(), 20);
        println!(
            "U = {u:?}: degree {}, rot {r:.6} = det U * rot + ({n}) + ({m})*alpha up to {d:.1e}",
            action_degree(&nu)?
        );
    }

    let m = rescale(&phi, 0.5)?;
    let r = action_rot(&m, n_iter)?.value;
    let (d, _, _) = module_distance(r - 2.0 * rho, 2.0, 2.0 * golden(), 20);
    println!("rescaled by 1/2: frequencies {:?}, rot - 2 rot = {d:.1e} modulo the module", m.frequencies());

    let r1 = renormalize(&phi)?;
    println!("one renormalization step: frequencies {:?}, degree {}", r1.frequencies(), action_degree(&r1)?);
    Ok(())
}
