//! An unforced eigenmode decays at its exact linear rate, since the
//! nonlinearity vanishes on a single eigenspace.
//!
//! `cargo run --release --example eigenmode_decay`

use bardina::dynamics::ModelParams;
use bardina::hodge::{inner_l2, VelocityState};
use bardina::integrator::{run, Scheme, SchemeConfig};
use bardina::spectral::{BasisPlan, Geometry, SpectralIndex};

fn main() -> bardina::Result<()> {
    let plan = BasisPlan::new(Geometry::Sphere, 12)?;
    let index = SpectralIndex::Sphere { degree: 4, order: 2 };
    let params = ModelParams::unforced(&plan, 0.2, 0.5, 0.0);
    let mut u0 = VelocityState::zero(&plan);
    u0.psi[plan.position(&index)?] = 1.0;
    let rate = params.nu * plan.eigenvalue(&index)?;
    let n0 = inner_l2(&plan, &u0, &u0)?.sqrt();
    let cfg = SchemeConfig::new(Scheme::IfRk4, 1e-3, 1.0, 100);
    println!("{:>6} {:>22} {:>12}", "t", "|u|", "rel. error");
    run(&plan, &u0, &params, &cfg, |t, s| {
        let n = inner_l2(&plan, s, s)?.sqrt();
        let exact = n0 * (-rate * t).exp();
        println!("{t:>6.2} {n:>22.16} {:>12.2e}", (n - exact).abs() / exact);
        Ok(())
    })?;
    Ok(())
}
