//! Attractor dimension bounds over a range of Grashof numbers, together with
//! the absorbing-ball radii.
//!
//! `cargo run --release --example dimension_bounds`

use std::f64::consts::PI;

use bardina::bounds::{self, Physical};
use bardina::dynamics::ForcingNorms;
use bardina::spectral::Geometry;

fn main() -> bardina::Result<()> {
    let p = Physical { nu: 0.1, alpha: 1.0, sigma: 0.05 };
    println!("{:>8} {:>12} {:>12} {:>12} {:>12}", "G", "sphere N*", "sphere tight", "torus N*", "sphere rho");
    for g in [1.0, 3.0, 10.0, 30.0, 100.0] {
        let f = ForcingNorms { f1: g * p.nu * p.nu, a_inv: g * p.nu * p.nu / 2.0, a_inv_half: g * p.nu * p.nu / 2f64.sqrt(), f2: 0.0 };
        let sphere = bounds::report(Physical { sigma: 0.0, ..p }, Geometry::Sphere, &f, 1.0, 10, None)?;
        let torus = bounds::report(p, Geometry::Torus { length: 2.0 * PI }, &f, 1.0, 10, None)?;
        println!(
            "{g:>8.1} {:>12.5} {:>12.5} {:>12.5} {:>12.5e}",
            sphere.n_star,
            sphere.n_star_tight.unwrap_or(f64::NAN),
            torus.n_star,
            sphere.radii.rho
        );
    }
    println!("{}", bounds::EXPONENT_NOTE);
    Ok(())
}
