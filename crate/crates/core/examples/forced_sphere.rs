//! A forced run on the sphere, tracking the energy and enstrophy against
//! their Gronwall envelopes.
//!
//! `cargo run --release --example forced_sphere`

use bardina::dynamics::ModelParams;
use bardina::estimates::{check_trajectory, energy_record, EnvelopeTrack, Slack};
use bardina::hodge::VelocityState;
use bardina::integrator::{run, Scheme, SchemeConfig};
use bardina::spectral::{BasisPlan, Geometry, SpectralIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bardina::Result<()> {
    let plan = BasisPlan::new(Geometry::Sphere, 16)?;
    let mut params = ModelParams::unforced(&plan, 0.02, 0.4, 0.0);
    params.forcing.f1[plan.position(&SpectralIndex::Sphere { degree: 5, order: 3 })?] = 0.5;
    params.forcing.f1[plan.position(&SpectralIndex::Sphere { degree: 7, order: -2 })?] = 0.3;
    let u0 = VelocityState::random(&plan, &mut ChaCha8Rng::seed_from_u64(1), 3.0, true);
    let cfg = SchemeConfig::new(Scheme::IfRk4, 5e-3, 40.0, 400);
    let slack = Slack::new(cfg.dt);
    let track = EnvelopeTrack::new(&plan, &params, &u0, slack)?;
    let mut records = Vec::new();
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "t", "E1", "envelope", "E2", "envelope");
    run(&plan, &u0, &params, &cfg, |t, s| {
        let r = energy_record(&plan, s, &params, t, Some(&track))?;
        println!("{t:>6.1} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e}", r.e1, r.env1, r.e2, r.env2);
        records.push(r);
        Ok(())
    })?;
    let report = check_trajectory(&records, &slack);
    println!("{} samples, {} envelope exceedances", report.checked, report.violations.len());
    Ok(())
}
