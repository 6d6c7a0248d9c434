//! Topological degree of loops in SL(2,R), by angle continuation.
//!
//! `cargo run --example degree`

use qpcocycle::cocycle::{QpMap, TrigPoly};
use qpcocycle::linalg2::Mat2;
use qpcocycle::rotnum::{degree, AngleReference};

fn main() -> qpcocycle::Result<()> {
    for k in [-2, 0, 1, 3] {
        let map = QpMap::Trig(TrigPoly::rotation_winding(k));
        println!("x -> R_(kx), k = {k:+}: degree {}", degree(&map)?);
    }
    // a sheared rotation loop: the shear does not change the homotopy class
    let sheared = QpMap::Trig(TrigPoly::from_fn(1, 16, |x| {
        Mat2::new(1.0, 2.0 * (std::f64::consts::TAU * x).sin(), 0.0, 1.0) * Mat2::rotation(x)
    })?);
    println!("sheared rotation loop: degree {}", degree(&sheared)?);
    let schrodinger = QpMap::Trig(TrigPoly::from_fn(1, 4, |x| {
        Mat2::new(0.4 - 2.0 * (std::f64::consts::TAU * x).cos(), -1.0, 1.0, 0.0)
    })?);
    let reference = AngleReference::iwasawa(&schrodinger)?;
    println!(
        "Schrodinger map: degree {}, continuation used {} points",
        degree(&schrodinger)?,
        reference.len()
    );
    Ok(())
}
