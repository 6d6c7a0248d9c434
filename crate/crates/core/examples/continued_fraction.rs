//! Continued-fraction data of a few frequencies and their finite-horizon
//! Diophantine status.
//!
//! `cargo run --example continued_fraction -- [alpha] [depth]`

use qpcocycle::arithmetic::{check_dc, check_rdc, expand, golden, silver, DioParams};

fn main() -> qpcocycle::Result<()> {
    let mut args = std::env::args().skip(1);
    let extra = args.next().map(|s| s.parse::<f64>().expect("alpha"));
    let depth: usize = args.next().map_or(12, |s| s.parse().expect("depth"));
    let mut alphas = vec![("golden", golden()), ("silver", silver()), ("e - 2", std::f64::consts::E - 2.0)];
    if let Some(a) = extra {
        alphas.push(("given", a));
    }
    let params = DioParams::new(0.05, 2.0, 10_000)?;
    for (name, alpha) in alphas {
        let cf = expand(alpha, depth)?;
        println!("{name} = {alpha}");
        println!("  a    {:?}", cf.a);
        println!("  q    {:?}", cf.q);
        println!("  beta_n * q_(n+1) {:?}", (0..depth).map(|n| format!("{:.3}", cf.betas[n] * cf.q[n + 1] as f64)).collect::<Vec<_>>());
        let dc = check_dc(alpha, params);
        let rdc = check_rdc(alpha, params, 8);
        println!("  DC(0.05, 2) up to q = 10^4: {} (worst q = {}), levels in DC: {:?}", dc.holds, dc.worst, rdc.levels);
    }
    Ok(())
}
