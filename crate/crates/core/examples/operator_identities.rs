//! The cancellation identities of the discrete nonlinearity, with and without
//! dealiasing.
//!
//! `cargo run --release --example operator_identities`

use std::f64::consts::PI;

use bardina::estimates::{identity_suite, IdentityOptions};
use bardina::spectral::{BasisPlan, Geometry};

fn main() -> bardina::Result<()> {
    for geometry in [Geometry::Sphere, Geometry::Torus { length: 2.0 * PI }] {
        let plan = BasisPlan::new(geometry, 16)?;
        for aliased in [false, true] {
            let table = identity_suite(&plan, 7, &IdentityOptions { aliased, ..Default::default() })?;
            println!("{} ({})", geometry.name(), if aliased { "aliased grid" } else { "dealiased" });
            for row in &table.rows {
                println!("  {:<22} {:.3e} {}", row.name, row.max_residual, if row.pass { "ok" } else { "FAILS" });
            }
        }
    }
    Ok(())
}
