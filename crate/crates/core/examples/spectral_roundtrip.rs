//! Spectral transforms on both geometries: eigenvalues, grid sizes and the
//! synthesis/analysis roundtrip.
//!
//! `cargo run --release --example spectral_roundtrip -- 21`

use std::f64::consts::PI;

use bardina::estimates::spectral_residuals;
use bardina::spectral::{BasisPlan, Geometry};

fn main() -> bardina::Result<()> {
    let truncation = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(21);
    for geometry in [Geometry::Sphere, Geometry::Torus { length: 2.0 * PI }] {
        let plan = BasisPlan::new(geometry, truncation)?;
        let (rows, cols) = plan.grid_shape();
        println!("{} truncation {truncation}: {} modes on a {rows} x {cols} grid", geometry.name(), plan.len());
        println!("  first eigenvalues: {:?}", &plan.eigenvalues()[..6.min(plan.len())]);
        let r = spectral_residuals(&plan, 1, 8)?;
        println!("  roundtrip residual {:.2e}, Parseval residual {:.2e}", r.roundtrip, r.parseval);
    }
    Ok(())
}
