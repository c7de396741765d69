//! The prepared equation with a cut-off nonlinearity: the ball of radius 2ρ
//! is invariant and trajectories from outside are drawn into it.
//!
//! `cargo run --release --example prepared_equation`

use bardina::bounds::{self, Physical};
use bardina::dynamics::{ModelParams, PreparedSystem};
use bardina::hodge::VelocityState;
use bardina::integrator::{Scheme, Stepper};
use bardina::spectral::{BasisPlan, Geometry, SpectralIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bardina::Result<()> {
    let plan = BasisPlan::new(Geometry::Sphere, 10)?;
    let mut params = ModelParams::unforced(&plan, 0.05, 0.5, 0.0);
    params.forcing.f1[plan.position(&SpectralIndex::Sphere { degree: 3, order: 1 })?] = 1.0;
    let rho = bounds::absorbing_radii(Physical::from(&params), Geometry::Sphere, &params.forcing.norms(&plan))?.rho;
    let sys = PreparedSystem::new(&plan, &params, rho)?;
    let norm = |v: &[f64]| v.iter().zip(plan.eigenvalues()).map(|(c, l)| l * c * c).sum::<f64>().sqrt();
    let mut v = VelocityState::random(&plan, &mut ChaCha8Rng::seed_from_u64(2), 2.0, true).psi.to_vec();
    let s = 5.0 * rho / norm(&v);
    v.iter_mut().for_each(|c| *c *= s);
    let mut stepper = Stepper::new(&sys, Scheme::IfRk4, 1e-2)?;
    println!("rho = {rho:.4e}");
    for k in 0..=2000 {
        if k % 200 == 0 {
            println!("t = {:>5.1}  |v| / 2rho = {:.6}", k as f64 * 1e-2, norm(&v) / (2.0 * rho));
        }
        stepper.step(&sys, &mut v);
    }
    Ok(())
}
