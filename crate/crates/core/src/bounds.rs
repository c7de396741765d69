//! Closed-form constants and bounds: dissipation rates, forcing constants,
//! absorbing-ball radii, attractor-dimension bounds, Grashof numbers, and the
//! spectral-gap report for the sphere's prepared equation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ForcingNorms, ModelParams};
use crate::error::{Error, Result};
use crate::spectral::Geometry;

/// Sobolev–Lieb–Thirring constant on the sphere and the torus.
pub const K1: f64 = 3.0 / (2.0 * PI);
/// Lower eigenvalue-sum constant on the sphere: `Σλᵢ ≥ k₂λ₁N²`.
pub const K2_SPHERE: f64 = 0.25;

/// Attached to every report that contains an attractor-dimension bound.
pub const EXPONENT_NOTE: &str = "N* is the root of the quadratic-in-N trace bound, i.e. the bracket raised to the power +1/2";

/// Scalar parameters the bounds depend on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Physical {
    pub nu: f64,
    pub alpha: f64,
    pub sigma: f64,
}

impl From<&ModelParams> for Physical {
    fn from(p: &ModelParams) -> Self {
        Physical { nu: p.nu, alpha: p.alpha, sigma: p.sigma }
    }
}

impl Physical {
    fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::config("params.nu", "must be positive"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::config("params.alpha", "must be positive"));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::config("params.sigma", "must be non-negative"));
        }
        Ok(())
    }
}

/// Rates and forcing constants of the energy and enstrophy inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub lambda1: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub l1: f64,
    pub l2: f64,
    pub k1: f64,
    /// `None` on the torus, where the eigenvalue sums are used directly.
    pub k2: Option<f64>,
    /// True when the drag-free sphere forms (both rates `νλ₁`) are in use.
    pub sphere_drag_free: bool,
}

/// `λ₁, δ, δ′, L₁, L₂, k₁, k₂`.
///
/// With drag, `δ = min{νλ₁, σ}`, `δ′ = min{3νλ₁/2, 2σ}`,
/// `L₁ = min{|A⁻¹f₁|²/(να²), |A^{-1/2}f₁|²/ν} + |f₂|²/σ`, and
/// `L₂ = min{|A^{-1/2}f₁|²/(να²), |f₁|²/ν}`. On the drag-free sphere both
/// rates are `νλ₁`.
pub fn constants(p: Physical, geometry: Geometry, f: &ForcingNorms) -> Result<Constants> {
    p.validate()?;
    let lambda1 = geometry.lambda1();
    let (nu, a2) = (p.nu, p.alpha * p.alpha);
    let l1_core = (f.a_inv.powi(2) / (nu * a2)).min(f.a_inv_half.powi(2) / nu);
    let l2 = (f.a_inv_half.powi(2) / (nu * a2)).min(f.f1.powi(2) / nu);
    let k2 = match geometry {
        Geometry::Sphere => Some(K2_SPHERE),
        Geometry::Torus { .. } => None,
    };
    if p.sigma == 0.0 {
        if let Geometry::Torus { .. } = geometry {
            return Err(Error::config("params.sigma", "must be positive on the torus"));
        }
        let rate = nu * lambda1;
        return Ok(Constants {
            lambda1,
            delta: rate,
            delta_prime: rate,
            l1: l1_core,
            l2,
            k1: K1,
            k2,
            sphere_drag_free: true,
        });
    }
    Ok(Constants {
        lambda1,
        delta: (nu * lambda1).min(p.sigma),
        delta_prime: (1.5 * nu * lambda1).min(2.0 * p.sigma),
        l1: l1_core + f.f2.powi(2) / p.sigma,
        l2,
        k1: K1,
        k2,
        sphere_drag_free: false,
    })
}

/// Exponential envelopes `E(t) ≤ e^{-rt}E(0) + C(1 - e^{-rt})` for
/// `E₁ = |u|² + α²‖u‖²` and `E₂ = ‖u‖² + α²|Au|²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub rate1: f64,
    pub ceiling1: f64,
    pub rate2: f64,
    pub ceiling2: f64,
}

impl Envelope {
    /// Drag-free sphere: rates `νλ₁`, ceilings `|A⁻¹f|²/(ν²α²λ₁)` and
    /// `|A^{-1/2}f|²/(ν²α²λ₁)`. Otherwise `L₁/δ` and `2L₂/δ′`.
    pub fn new(p: Physical, geometry: Geometry, f: &ForcingNorms) -> Result<Self> {
        let c = constants(p, geometry, f)?;
        if c.sphere_drag_free {
            let l = p.nu * p.alpha * p.alpha;
            return Ok(Envelope {
                rate1: c.delta,
                ceiling1: f.a_inv.powi(2) / l / c.delta,
                rate2: c.delta_prime,
                ceiling2: f.a_inv_half.powi(2) / l / c.delta_prime,
            });
        }
        Ok(Envelope { rate1: c.delta, ceiling1: c.l1 / c.delta, rate2: c.delta_prime, ceiling2: 2.0 * c.l2 / c.delta_prime })
    }

    pub fn at(&self, e1_0: f64, e2_0: f64, t: f64) -> (f64, f64) {
        let d1 = (-self.rate1 * t).exp();
        let d2 = (-self.rate2 * t).exp();
        (d1 * e1_0 + self.ceiling1 * (1.0 - d1), d2 * e2_0 + self.ceiling2 * (1.0 - d2))
    }
}

/// Absorbing-ball radii, each twice the corresponding limsup bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Radii {
    /// Ball in H for `u`.
    pub rho0: f64,
    /// Ball in V for `u`, from the energy estimate.
    pub rho1: f64,
    /// Ball in V for `u`, from the enstrophy estimate.
    pub rho1_tilde: f64,
    /// Ball in D(A) for `u`.
    pub rho2: f64,
    /// `ρ₀ + α²ρ₂`: the radius used by the cut-off.
    pub rho: f64,
    /// `(ρ₀ + α²ρ₂)/2`: the limsup bound on `|v|`.
    pub rho_half: f64,
}

/// Radii derived from the envelope ceilings: `|u|²(1+α²λ₁) ≤ C₁`,
/// `α²‖u‖² ≤ C₁`, `‖u‖²(1+α²λ₁) ≤ C₂`, `α²|Au|² ≤ C₂`.
pub fn absorbing_radii(p: Physical, geometry: Geometry, f: &ForcingNorms) -> Result<Radii> {
    let env = Envelope::new(p, geometry, f)?;
    let a2 = p.alpha * p.alpha;
    let s = 1.0 + a2 * geometry.lambda1();
    let rho0 = 2.0 * (env.ceiling1 / s).sqrt();
    let rho1 = 2.0 * (env.ceiling1 / a2).sqrt();
    let rho1_tilde = 2.0 * (env.ceiling2 / s).sqrt();
    let rho2 = 2.0 * (env.ceiling2 / a2).sqrt();
    let rho = rho0 + a2 * rho2;
    Ok(Radii { rho0, rho1, rho1_tilde, rho2, rho, rho_half: 0.5 * rho })
}

/// Which dimension bound to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundVariant {
    /// `[k₁/(2k₂λ₁ν²)(1 + 1/(λ₁α²)) L₂/δ′]^{1/2}` with the constants of [`constants`].
    Generic,
    /// Sphere closed form in the Grashof number `|f|/ν²`.
    Sphere,
    /// Sphere, using the tighter `L₂/δ′ ≤ |A^{-1/2}f|²/(4ν²α²)`.
    SphereTight,
    /// Torus closed form in `|f|/ν²`.
    Torus,
    /// Spherical domain of area `area`, in `|f||Ω|/ν²`.
    SphericalDomain { area: f64 },
}

/// `|f|/ν²`, or `|f||Ω|/ν²` on a domain.
pub fn grashof(p: Physical, f: &ForcingNorms, variant: BoundVariant) -> f64 {
    let g = f.total() / (p.nu * p.nu);
    match variant {
        BoundVariant::SphericalDomain { area } => g * area,
        _ => g,
    }
}

/// `N* = [k₁/(2k₂λ₁ν²)(1 + 1/(λ₁α²)) L₂/δ′]^{1/2}` for a given `L₂/δ′`.
pub fn n_star(p: Physical, lambda1: f64, k2: f64, l2_over_delta: f64) -> f64 {
    let a2 = p.alpha * p.alpha;
    (K1 / (2.0 * k2 * lambda1 * p.nu * p.nu) * (1.0 + 1.0 / (lambda1 * a2)) * l2_over_delta).sqrt()
}

/// Upper bound `N*` on the attractor dimension.
pub fn attractor_bound(p: Physical, geometry: Geometry, f: &ForcingNorms, variant: BoundVariant) -> Result<f64> {
    p.validate()?;
    let a = p.alpha;
    let g = grashof(p, f, variant);
    match variant {
        BoundVariant::Generic => {
            let c = constants(p, geometry, f)?;
            let k2 = c.k2.ok_or(Error::UnsupportedGeometry { operation: "generic dimension bound", geometry: "torus" })?;
            Ok(n_star(p, c.lambda1, k2, c.l2 / c.delta_prime))
        }
        BoundVariant::Sphere => Ok(3f64.sqrt() * g / (4.0 * PI.sqrt() * a) * (1.0 + 0.5 / (a * a)).sqrt()),
        BoundVariant::SphereTight => {
            let l2_over = f.a_inv_half.powi(2) / (4.0 * p.nu.powi(2) * a * a);
            Ok(n_star(p, 2.0, K2_SPHERE, l2_over))
        }
        BoundVariant::Torus => {
            let l = match geometry {
                Geometry::Torus { length } => length,
                Geometry::Sphere => {
                    return Err(Error::UnsupportedGeometry { operation: "torus dimension bound", geometry: "sphere" })
                }
            };
            let c = 3.0 * 2f64.sqrt() * l.powi(3) / (16.0 * PI.powi(3) * a);
            Ok(c * (1.0 + l * l / (4.0 * PI * PI * a * a)).sqrt() * g)
        }
        BoundVariant::SphericalDomain { area } => {
            if !(area > 0.0 && area <= 4.0 * PI) {
                return Err(Error::config("bounds.domain_area", format!("must lie in (0, 4π], got {area}")));
            }
            Ok((3.0 / PI).sqrt() / (8.0 * PI * a) * (1.0 + area / (2.0 * PI * a * a)).sqrt() * g)
        }
    }
}

/// Right-hand side of the sphere trace bound
/// `q_N ≤ -(ν/2)k₂λ₁N² + (k₁/(4ν))(1 + 1/(λ₁α²)) L₂/δ′`, with `L₂/δ′` supplied.
pub fn sphere_qn_bound(p: Physical, n: f64, l2_over_delta: f64) -> f64 {
    let l1 = 2.0;
    -0.5 * p.nu * K2_SPHERE * l1 * n * n + K1 / (4.0 * p.nu) * (1.0 + 1.0 / (l1 * p.alpha * p.alpha)) * l2_over_delta
}

/// Right-hand side of the torus trace bound
/// `q_N ≤ -νπN²/(6L²) + 3L⁴/(256π⁵α²)(1 + L²/(4π²α²))|f|²/ν³`.
pub fn torus_qn_bound(p: Physical, length: f64, n: f64, f: f64) -> f64 {
    let (l, a) = (length, p.alpha);
    -p.nu * PI * n * n / (6.0 * l * l)
        + 3.0 * l.powi(4) / (256.0 * PI.powi(5) * a * a) * (1.0 + l * l / (4.0 * PI * PI * a * a)) * f * f / p.nu.powi(3)
}

/// `2L₂/δ′`: bound on the long-time average of `‖u‖²`.
pub fn average_enstrophy_bound(p: Physical, geometry: Geometry, f: &ForcingNorms) -> Result<f64> {
    let c = constants(p, geometry, f)?;
    Ok(2.0 * c.l2 / c.delta_prime)
}

/// Spectral gaps against the Lipschitz constant of the cut-off nonlinearity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InertialReport {
    /// `(n, λ_{n+1} - λ_n)` for `n = 1..=n_max`.
    pub gaps: Vec<(usize, f64)>,
    /// The user-supplied constant `c` in the Lipschitz estimate.
    pub c: f64,
    pub rho: f64,
    /// `ℓ = c·λ₁⁻¹·α⁻⁴·4ρ`.
    pub lipschitz: f64,
    /// Smallest `n` with `λ_{n+1} - λ_n > 2ℓ/ν`; `None` if beyond `n_max`.
    pub crossing: Option<usize>,
    pub gap_condition: String,
    pub squeezing_rate: String,
}

/// Gap table and gap-condition crossing on the sphere.
pub fn inertial_report(p: Physical, geometry: Geometry, rho: f64, n_max: usize, c: f64) -> Result<InertialReport> {
    if !matches!(geometry, Geometry::Sphere) {
        return Err(Error::UnsupportedGeometry { operation: "inertial report", geometry: geometry.name() });
    }
    p.validate()?;
    if !(c > 0.0) {
        return Err(Error::config("bounds.c", "must be positive"));
    }
    let lambda = |n: usize| (n * (n + 1)) as f64;
    let gaps: Vec<(usize, f64)> = (1..=n_max).map(|n| (n, lambda(n + 1) - lambda(n))).collect();
    let lipschitz = c / geometry.lambda1() / p.alpha.powi(4) * 4.0 * rho;
    let threshold = 2.0 * lipschitz / p.nu;
    let crossing = gaps.iter().find(|(_, g)| *g > threshold).map(|(n, _)| *n);
    Ok(InertialReport {
        gaps,
        c,
        rho,
        lipschitz,
        crossing,
        gap_condition: "classical sufficient form: gap > 2*lipschitz/nu".into(),
        squeezing_rate: "not computable: no formula for the squeezing rate is available".into(),
    })
}

/// Everything the bounds calculator produces for one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub geometry: Geometry,
    pub params: Physical,
    pub forcing: ForcingNorms,
    pub lambda1: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub l1: f64,
    pub l2: f64,
    pub k1: f64,
    pub k2: Option<f64>,
    pub radii: Radii,
    pub grashof: f64,
    /// Generic bound (sphere only).
    pub n_star_generic: Option<f64>,
    /// Geometry-specific closed-form bound.
    pub n_star: f64,
    /// Sphere bound with the tighter forcing norm.
    pub n_star_tight: Option<f64>,
    /// Domain bound, when an area is given.
    pub n_star_domain: Option<f64>,
    pub average_enstrophy_bound: f64,
    pub inertial: Option<InertialReport>,
    pub notes: Vec<String>,
}

/// Assemble a [`BoundsReport`].
pub fn report(
    p: Physical,
    geometry: Geometry,
    f: &ForcingNorms,
    c: f64,
    n_max: usize,
    domain_area: Option<f64>,
) -> Result<BoundsReport> {
    let k = constants(p, geometry, f)?;
    let radii = absorbing_radii(p, geometry, f)?;
    let (n_star, n_star_generic, n_star_tight, inertial) = match geometry {
        Geometry::Sphere => (
            attractor_bound(p, geometry, f, BoundVariant::Sphere)?,
            Some(attractor_bound(p, geometry, f, BoundVariant::Generic)?),
            Some(attractor_bound(p, geometry, f, BoundVariant::SphereTight)?),
            Some(inertial_report(p, geometry, radii.rho, n_max, c)?),
        ),
        Geometry::Torus { .. } => (attractor_bound(p, geometry, f, BoundVariant::Torus)?, None, None, None),
    };
    let n_star_domain = domain_area
        .map(|area| attractor_bound(p, geometry, f, BoundVariant::SphericalDomain { area }))
        .transpose()?;
    let mut notes = vec![EXPONENT_NOTE.to_string()];
    if k.sphere_drag_free {
        notes.push("drag-free sphere: delta = delta' = nu*lambda1".into());
    }
    if geometry.harmonic_dim() > 0 {
        notes.push("torus: k2 bypassed, the eigenvalue sum is bounded directly".into());
    }
    Ok(BoundsReport {
        geometry,
        params: p,
        forcing: *f,
        lambda1: k.lambda1,
        delta: k.delta,
        delta_prime: k.delta_prime,
        l1: k.l1,
        l2: k.l2,
        k1: k.k1,
        k2: k.k2,
        radii,
        grashof: grashof(p, f, BoundVariant::Generic),
        n_star_generic,
        n_star,
        n_star_tight,
        n_star_domain,
        average_enstrophy_bound: 2.0 * k.l2 / k.delta_prime,
        inertial,
        notes,
    })
}
