//! Lyapunov exponents of the zero state, where each one is known exactly:
//! `-νλ - σ/(1 + α²λ)` per eigenmode.
//!
//! `cargo run --release --example lyapunov_equilibrium`

use bardina::dynamics::ModelParams;
use bardina::hodge::VelocityState;
use bardina::integrator::Scheme;
use bardina::lyapunov::{benettin_run, LyapunovConfig};
use bardina::spectral::{BasisPlan, Geometry};

fn main() -> bardina::Result<()> {
    let plan = BasisPlan::new(Geometry::Sphere, 8)?;
    let (nu, alpha, sigma) = (0.5, 0.5, 0.2);
    let params = ModelParams::unforced(&plan, nu, alpha, sigma);
    let cfg = LyapunovConfig::new(6, 0.0, 20.0, 0.5, 0);
    let report = benettin_run(&plan, &VelocityState::zero(&plan), &params, Scheme::IfRk4, 1e-2, &cfg, |_, _, _| Ok(()))?;
    let mut exact: Vec<f64> = plan.eigenvalues()[..6].iter().map(|l| -nu * l - sigma / (1.0 + alpha * alpha * l)).collect();
    exact.sort_by(|a, b| b.total_cmp(a));
    println!("{:>3} {:>12} {:>12}", "i", "computed", "exact");
    for (i, (m, e)) in report.exponents.iter().zip(&exact).enumerate() {
        println!("{:>3} {m:>12.6} {e:>12.6}", i + 1);
    }
    println!("partial sums: {:?}", report.partial_sums);
    Ok(())
}
