//! Right-hand sides of the simplified Bardina system in u-form, its
//! linearisation, and the cut-off ("prepared") equation on the sphere.
//!
//! Per mode, with `N = (P + Q)(ζ n×u)` and the forcing streamfunction `f̂`:
//!
//! ```text
//! dψ̂/dt = -νλψ̂ + (f̂ - N̂ₚ - σψ̂) / (1 + α²λ)
//! dh/dt  = f₂ - σh - N_q
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hodge::{
    area_mean_raw, check_state, curl_project_raw, inner_l2_raw, inner_v_raw, norm_au_sq, velocity_raw,
    vorticity_coeffs, HarmonicVector, VelocityState,
};
use crate::integrator::SplitSystem;
use crate::spectral::{BasisPlan, Geometry, ScalarCoeffs};

/// Time-independent forcing `f = f₁ + f₂`.
///
/// `f1` holds the streamfunction coefficients of `f₁ ∈ H`, so that
/// `f₁ = n×∇(Σ f1ᵢ Yᵢ)`; `f2` is the harmonic part.
#[derive(Clone, Debug, PartialEq)]
pub struct Forcing {
    pub f1: ScalarCoeffs,
    pub f2: HarmonicVector,
}

/// Norms of the forcing that enter the a priori bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ForcingNorms {
    /// `|A⁻¹f₁|`
    pub a_inv: f64,
    /// `|A^{-1/2}f₁|`
    pub a_inv_half: f64,
    /// `|f₁|`
    pub f1: f64,
    /// `|f₂|`
    pub f2: f64,
}

impl ForcingNorms {
    /// `|f| = (|f₁|² + |f₂|²)^{1/2}`.
    pub fn total(&self) -> f64 {
        self.f1.hypot(self.f2)
    }

    pub fn is_zero(&self) -> bool {
        self.total() == 0.0
    }
}

impl Forcing {
    pub fn zero(plan: &BasisPlan) -> Self {
        Forcing { f1: plan.zero_coeffs(), f2: HarmonicVector::zero_for(plan) }
    }

    pub fn as_state(&self) -> VelocityState {
        VelocityState { psi: self.f1.clone(), harmonic: self.f2 }
    }

    /// Norms computed modewise, without quadrature.
    pub fn norms(&self, plan: &BasisPlan) -> ForcingNorms {
        let mut n = ForcingNorms::default();
        for (c, l) in self.f1.iter().zip(plan.eigenvalues()) {
            n.a_inv += c * c / l;
            n.a_inv_half += c * c;
            n.f1 += l * c * c;
        }
        let f2 = plan.geometry().area() * self.f2.dot(&self.f2);
        ForcingNorms { a_inv: n.a_inv.sqrt(), a_inv_half: n.a_inv_half.sqrt(), f1: n.f1.sqrt(), f2: f2.sqrt() }
    }
}

/// Physical parameters and forcing.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub nu: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub forcing: Forcing,
}

impl ModelParams {
    pub fn unforced(plan: &BasisPlan, nu: f64, alpha: f64, sigma: f64) -> Self {
        ModelParams { nu, alpha, sigma, forcing: Forcing::zero(plan) }
    }

    /// Range checks; the torus needs `σ > 0` to damp the harmonic part.
    pub fn validate(&self, plan: &BasisPlan) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::config("params.nu", format!("must be positive, got {}", self.nu)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("params.alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("params.sigma", format!("must be non-negative, got {}", self.sigma)));
        }
        if matches!(plan.geometry(), Geometry::Torus { .. }) && self.sigma == 0.0 {
            return Err(Error::config("params.sigma", "must be positive on the torus"));
        }
        check_state(plan, &self.forcing.as_state())
    }

    /// `1 + α²λ` per mode.
    pub fn filter_factors(&self, plan: &BasisPlan) -> Vec<f64> {
        let a2 = self.alpha * self.alpha;
        plan.eigenvalues().iter().map(|l| 1.0 + a2 * l).collect()
    }
}

/// `(P + Q)` applied to a nonlinear vector field, in streamfunction/harmonic form.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearSplit {
    pub p_part: ScalarCoeffs,
    pub q_part: HarmonicVector,
}

/// Projects `g = ζ·(n×w)`, given `ζ` and the grid components of `w`.
fn project_rotated(plan: &BasisPlan, zeta_times: impl Fn(usize) -> (f64, f64), npts: usize) -> (Vec<f64>, [f64; 2]) {
    let mut g1 = vec![0.0; npts];
    let mut g2 = vec![0.0; npts];
    for i in 0..npts {
        let (a, b) = zeta_times(i);
        g1[i] = a;
        g2[i] = b;
    }
    let q = curl_project_raw(plan, &g1, &g2);
    let p = q.iter().zip(plan.eigenvalues()).zip(plan.dealias_mask()).map(|((q, l), &k)| if k { q / l } else { 0.0 }).collect();
    let mean = if plan.geometry().harmonic_dim() > 0 { area_mean_raw(plan, &g1, &g2) } else { [0.0; 2] };
    (p, mean)
}

/// Grid samples of a velocity and its vorticity.
#[derive(Clone, Debug)]
pub struct FrozenBase {
    zeta: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
}

impl FrozenBase {
    pub fn new(plan: &BasisPlan, u: &VelocityState) -> Self {
        Self::from_raw(plan, &u.psi, u.harmonic.components())
    }

    fn from_raw(plan: &BasisPlan, psi: &[f64], h: [f64; 2]) -> Self {
        let (u1, u2) = velocity_raw(plan, psi, h);
        let zeta = plan.synth_raw(&vorticity_coeffs(plan, psi));
        FrozenBase { zeta, u1, u2 }
    }
}

fn nonlinear_raw(plan: &BasisPlan, psi: &[f64], h: [f64; 2]) -> (Vec<f64>, [f64; 2]) {
    let b = FrozenBase::from_raw(plan, psi, h);
    // ζ·(n×u) with n×(a, b) = (-b, a).
    project_rotated(plan, |i| (-b.zeta[i] * b.u2[i], b.zeta[i] * b.u1[i]), b.zeta.len())
}

/// Tangent nonlinearity `ζ_U·(n×u) + ζ_u·(n×U)` at a frozen base `u`.
fn tangent_nonlinear_raw(plan: &BasisPlan, base: &FrozenBase, psi: &[f64], h: [f64; 2]) -> (Vec<f64>, [f64; 2]) {
    let t = FrozenBase::from_raw(plan, psi, h);
    project_rotated(
        plan,
        |i| {
            let a = -(t.zeta[i] * base.u2[i] + base.zeta[i] * t.u2[i]);
            let b = t.zeta[i] * base.u1[i] + base.zeta[i] * t.u1[i];
            (a, b)
        },
        t.zeta.len(),
    )
}

fn split(plan: &BasisPlan, (p, q): (Vec<f64>, [f64; 2])) -> NonlinearSplit {
    let q_part = match HarmonicVector::zero_for(plan) {
        HarmonicVector::Empty => HarmonicVector::Empty,
        HarmonicVector::Planar(_) => HarmonicVector::Planar(q),
    };
    NonlinearSplit { p_part: ScalarCoeffs(p), q_part }
}

/// `𝔹(u, u) = (P + Q)(ζ·(n×u))`, dealiased.
pub fn nonlinear_term(plan: &BasisPlan, u: &VelocityState) -> Result<NonlinearSplit> {
    check_state(plan, u)?;
    Ok(split(plan, nonlinear_raw(plan, &u.psi, u.harmonic.components())))
}

/// Linearised nonlinearity `Ñ(u, U)`.
pub fn tangent_nonlinear_term(plan: &BasisPlan, u: &VelocityState, tangent: &VelocityState) -> Result<NonlinearSplit> {
    check_state(plan, u)?;
    check_state(plan, tangent)?;
    let base = FrozenBase::new(plan, u);
    Ok(split(plan, tangent_nonlinear_raw(plan, &base, &tangent.psi, tangent.harmonic.components())))
}

/// The u-form Bardina system split into its exactly integrable part `-νλ`
/// and the remainder.
pub struct BardinaSystem<'a> {
    plan: &'a BasisPlan,
    sigma: f64,
    forcing: Vec<f64>,
    harmonic_forcing: [f64; 2],
    inv_filter: Vec<f64>,
    rates: Vec<f64>,
}

impl<'a> BardinaSystem<'a> {
    pub fn new(plan: &'a BasisPlan, params: &ModelParams) -> Result<Self> {
        params.validate(plan)?;
        let inv_filter: Vec<f64> = params.filter_factors(plan).iter().map(|f| 1.0 / f).collect();
        let mut rates: Vec<f64> = plan.eigenvalues().iter().map(|l| params.nu * l).collect();
        rates.extend(std::iter::repeat(0.0).take(plan.geometry().harmonic_dim()));
        Ok(BardinaSystem {
            plan,
            sigma: params.sigma,
            forcing: params.forcing.f1.0.clone(),
            harmonic_forcing: params.forcing.f2.components(),
            inv_filter,
            rates,
        })
    }

    pub fn plan(&self) -> &BasisPlan {
        self.plan
    }

    /// Remainder for a linearisation at `base` (no forcing).
    pub(crate) fn tangent_remainder(&self, base: &FrozenBase, y: &[f64], out: &mut [f64]) {
        let m = self.plan.len();
        let h = harmonic_of(y, m);
        let (p, q) = tangent_nonlinear_raw(self.plan, base, &y[..m], h);
        for i in 0..m {
            out[i] = (-p[i] - self.sigma * y[i]) * self.inv_filter[i];
        }
        for (k, o) in out[m..].iter_mut().enumerate() {
            *o = -self.sigma * y[m + k] - q[k];
        }
    }

    pub(crate) fn frozen(&self, y: &[f64]) -> FrozenBase {
        let m = self.plan.len();
        FrozenBase::from_raw(self.plan, &y[..m], harmonic_of(y, m))
    }
}

fn harmonic_of(y: &[f64], m: usize) -> [f64; 2] {
    match &y[m..] {
        [a, b] => [*a, *b],
        _ => [0.0; 2],
    }
}

impl SplitSystem for BardinaSystem<'_> {
    fn dim(&self) -> usize {
        self.rates.len()
    }

    fn linear_rates(&self) -> &[f64] {
        &self.rates
    }

    fn remainder(&self, y: &[f64], out: &mut [f64]) {
        let m = self.plan.len();
        let h = harmonic_of(y, m);
        let (p, q) = nonlinear_raw(self.plan, &y[..m], h);
        for i in 0..m {
            out[i] = (self.forcing[i] - p[i] - self.sigma * y[i]) * self.inv_filter[i];
        }
        for (k, o) in out[m..].iter_mut().enumerate() {
            *o = self.harmonic_forcing[k] - self.sigma * y[m + k] - q[k];
        }
    }
}

fn tendency(system: &impl SplitSystem, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    system.remainder(y, &mut out);
    for ((o, r), v) in out.iter_mut().zip(system.linear_rates()).zip(y) {
        *o -= r * v;
    }
    out
}

/// `du/dt` for the u-form system.
pub fn rhs_u(plan: &BasisPlan, state: &VelocityState, params: &ModelParams) -> Result<VelocityState> {
    check_state(plan, state)?;
    let sys = BardinaSystem::new(plan, params)?;
    VelocityState::from_flat(plan, &tendency(&sys, &state.to_flat()))
}

/// `dU/dt` of the first variation at `u`: the nonlinearity is replaced by
/// `Ñ(u, U)`, the forcing dropped, and the drag acts on `U`.
pub fn rhs_tangent(plan: &BasisPlan, tangent: &VelocityState, u: &VelocityState, params: &ModelParams) -> Result<VelocityState> {
    check_state(plan, tangent)?;
    check_state(plan, u)?;
    let sys = BardinaSystem::new(plan, params)?;
    let base = FrozenBase::new(plan, u);
    let y = tangent.to_flat();
    let mut out = vec![0.0; y.len()];
    sys.tangent_remainder(&base, &y, &mut out);
    for ((o, r), v) in out.iter_mut().zip(sys.linear_rates()).zip(&y) {
        *o -= r * v;
    }
    VelocityState::from_flat(plan, &out)
}

/// `dv/dt` for the v-form of the same system, `v = (I + α²A)u`.
pub fn rhs_v(plan: &BasisPlan, v: &VelocityState, params: &ModelParams) -> Result<VelocityState> {
    let u = crate::hodge::helmholtz_unfilter(plan, v, params.alpha)?;
    let du = rhs_u(plan, &u, params)?;
    crate::hodge::helmholtz_filter(plan, &du, params.alpha)
}

/// C¹ cut-off: 1 on `[0, ρ]`, 0 on `[2ρ, ∞)`, cubic in between.
pub fn cutoff_theta(s: f64, rho: f64) -> f64 {
    let x = s / rho;
    if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        let t = x - 1.0;
        1.0 - 3.0 * t * t + 2.0 * t * t * t
    }
}

/// The sphere's prepared equation in v-form:
/// `dv̂/dt = -νλv̂ - θ_ρ(|v|)(R̂(v) - f̂) - σû`, with `R(v) = 𝔹(u, u)`.
pub struct PreparedSystem<'a> {
    plan: &'a BasisPlan,
    nu: f64,
    sigma: f64,
    rho: f64,
    forcing: Vec<f64>,
    inv_filter: Vec<f64>,
    rates: Vec<f64>,
}

impl<'a> PreparedSystem<'a> {
    pub fn new(plan: &'a BasisPlan, params: &ModelParams, rho: f64) -> Result<Self> {
        if !matches!(plan.geometry(), Geometry::Sphere) {
            return Err(Error::UnsupportedGeometry { operation: "prepared equation", geometry: plan.geometry().name() });
        }
        params.validate(plan)?;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::config("rho", format!("must be positive, got {rho}")));
        }
        Ok(PreparedSystem {
            plan,
            nu: params.nu,
            sigma: params.sigma,
            rho,
            forcing: params.forcing.f1.0.clone(),
            inv_filter: params.filter_factors(plan).iter().map(|f| 1.0 / f).collect(),
            rates: plan.eigenvalues().iter().map(|l| params.nu * l).collect(),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn viscosity(&self) -> f64 {
        self.nu
    }
}

impl SplitSystem for PreparedSystem<'_> {
    fn dim(&self) -> usize {
        self.rates.len()
    }

    fn linear_rates(&self) -> &[f64] {
        &self.rates
    }

    fn remainder(&self, v: &[f64], out: &mut [f64]) {
        let norm = v.iter().zip(self.plan.eigenvalues()).map(|(c, l)| l * c * c).sum::<f64>().sqrt();
        let theta = cutoff_theta(norm, self.rho);
        let u: Vec<f64> = v.iter().zip(&self.inv_filter).map(|(c, f)| c * f).collect();
        let p = if theta > 0.0 { nonlinear_raw(self.plan, &u, [0.0; 2]).0 } else { vec![0.0; u.len()] };
        for i in 0..v.len() {
            out[i] = -theta * (p[i] - self.forcing[i]) - self.sigma * u[i];
        }
    }
}

/// `dv/dt` of the prepared equation (sphere only).
pub fn prepared_rhs(plan: &BasisPlan, v: &VelocityState, params: &ModelParams, rho: f64) -> Result<VelocityState> {
    let sys = PreparedSystem::new(plan, params, rho)?;
    check_state(plan, v)?;
    VelocityState::from_flat(plan, &tendency(&sys, &v.to_flat()))
}

/// Relative residual of the energy balance
/// `dE₁/dt = -2ν(‖u‖² + α²|Au|²) - 2σ|u|² + 2⟨f, u⟩`, with `dE₁/dt`
/// evaluated from [`rhs_u`]. Vanishes up to rounding whenever the discrete
/// nonlinearity is energy-neutral.
pub fn energy_residual(plan: &BasisPlan, state: &VelocityState, params: &ModelParams) -> Result<f64> {
    let du = rhs_u(plan, state, params)?;
    let a2 = params.alpha * params.alpha;
    let de1 = 2.0 * (inner_l2_raw(plan, state, &du) + a2 * inner_v_raw(plan, state, &du));
    let e2 = inner_v_raw(plan, state, state) + a2 * norm_au_sq(plan, state);
    let drag = params.sigma * inner_l2_raw(plan, state, state);
    let work = inner_l2_raw(plan, &params.forcing.as_state(), state);
    let law = -2.0 * params.nu * e2 - 2.0 * drag + 2.0 * work;
    let scale = 2.0 * params.nu * e2 + 2.0 * drag + 2.0 * work.abs();
    if scale == 0.0 {
        return Ok(de1.abs());
    }
    Ok((de1 - law).abs() / scale)
}
