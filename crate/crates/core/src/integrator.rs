//! Integrating-factor time stepping for systems `y' = -c∘y + G(y)` with a
//! diagonal, non-negative linear rate vector `c`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{BardinaSystem, ModelParams};
use crate::error::{Error, Result};
use crate::hodge::{velocity_raw, VelocityState};
use crate::spectral::BasisPlan;

/// A system whose stiff part is diagonal and linear.
pub trait SplitSystem: Sync {
    fn dim(&self) -> usize;
    /// Decay rates `c ≥ 0`; the linear part `-c∘y` is propagated exactly.
    fn linear_rates(&self) -> &[f64];
    /// The remainder `G(y)`, written into `out`.
    fn remainder(&self, y: &[f64], out: &mut [f64]);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `y⁺ = e^{-c dt}(y + dt G(y))`, first order.
    IfEuler,
    /// Classical RK4 on the integrating-factor variable `e^{ct}y`, fourth order.
    IfRk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    #[serde(default = "default_scheme")]
    pub kind: Scheme,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_scheme() -> Scheme {
    Scheme::IfRk4
}

fn default_stride() -> usize {
    1
}

impl SchemeConfig {
    pub fn new(kind: Scheme, dt: f64, t_end: f64, stride: usize) -> Self {
        SchemeConfig { kind, dt, t_end, stride }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("scheme.dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::config("scheme.t_end", format!("must be non-negative, got {}", self.t_end)));
        }
        if self.stride == 0 {
            return Err(Error::config("scheme.stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of steps needed to reach `t_end`.
    pub fn total_steps(&self) -> u64 {
        steps_to(self.t_end, self.dt)
    }
}

/// Steps of size `dt` needed to reach `t`, tolerating rounding in `t / dt`.
pub(crate) fn steps_to(t: f64, dt: f64) -> u64 {
    let r = t / dt;
    let n = r.round();
    if (r - n).abs() <= 1e-9 * n.max(1.0) {
        n as u64
    } else {
        r.ceil() as u64
    }
}

/// Reusable stepping workspace for one system and step size.
pub struct Stepper {
    scheme: Scheme,
    dt: f64,
    half: Vec<f64>,
    full: Vec<f64>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Stepper {
    pub fn new(system: &impl SplitSystem, scheme: Scheme, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config("scheme.dt", format!("must be positive, got {dt}")));
        }
        let half: Vec<f64> = system.linear_rates().iter().map(|c| (-0.5 * c * dt).exp()).collect();
        let full = half.iter().map(|e| e * e).collect();
        let n = system.dim();
        Ok(Stepper { scheme, dt, half, full, k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n] })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advance `y` by one step in place; returns `false` if the result is not finite.
    pub fn step(&mut self, system: &impl SplitSystem, y: &mut [f64]) -> bool {
        let h = self.dt;
        let (e, e2) = (&self.half, &self.full);
        match self.scheme {
            Scheme::IfEuler => {
                let g = &mut self.k[0];
                system.remainder(y, g);
                for i in 0..y.len() {
                    y[i] = e2[i] * (y[i] + h * g[i]);
                }
            }
            Scheme::IfRk4 => {
                let [k1, k2, k3, k4] = &mut self.k;
                let tmp = &mut self.tmp;
                system.remainder(y, k1);
                for i in 0..y.len() {
                    tmp[i] = e[i] * (y[i] + 0.5 * h * k1[i]);
                }
                system.remainder(tmp, k2);
                for i in 0..y.len() {
                    tmp[i] = e[i] * y[i] + 0.5 * h * k2[i];
                }
                system.remainder(tmp, k3);
                for i in 0..y.len() {
                    tmp[i] = e2[i] * y[i] + h * e[i] * k3[i];
                }
                system.remainder(tmp, k4);
                for i in 0..y.len() {
                    y[i] = e2[i] * y[i] + h / 6.0 * (e2[i] * k1[i] + 2.0 * e[i] * (k2[i] + k3[i]) + k4[i]);
                }
            }
        }
        y.iter().all(|v| v.is_finite())
    }
}

/// Integrate from step `k0` (time `k0·dt`) to the configured end time,
/// calling `observe(k, t, y)` after every step with `k % stride == 0`.
pub fn integrate<S: SplitSystem>(
    system: &S,
    y: &mut [f64],
    k0: u64,
    config: &SchemeConfig,
    mut observe: impl FnMut(u64, f64, &[f64]) -> Result<()>,
) -> Result<()> {
    config.validate()?;
    let mut stepper = Stepper::new(system, config.kind, config.dt)?;
    let total = config.total_steps();
    for k in (k0 + 1)..=total {
        let t = k as f64 * config.dt;
        if !stepper.step(system, y) {
            return Err(Error::Divergence { t });
        }
        if k % config.stride as u64 == 0 {
            observe(k, t, y)?;
        }
    }
    Ok(())
}

/// Observer samples of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<(f64, VelocityState)>,
    pub final_state: VelocityState,
    pub final_time: f64,
}

/// One step of the u-form system.
pub fn step(plan: &BasisPlan, state: &VelocityState, params: &ModelParams, scheme: Scheme, dt: f64) -> Result<VelocityState> {
    crate::hodge::check_state(plan, state)?;
    let sys = BardinaSystem::new(plan, params)?;
    let mut stepper = Stepper::new(&sys, scheme, dt)?;
    let mut y = state.to_flat();
    if !stepper.step(&sys, &mut y) {
        return Err(Error::Divergence { t: dt });
    }
    VelocityState::from_flat(plan, &y)
}

/// Integrate the u-form system from `t = 0`, recording `state0` and every
/// `stride`-th state. `observer` sees each recorded state.
pub fn run(
    plan: &BasisPlan,
    state0: &VelocityState,
    params: &ModelParams,
    config: &SchemeConfig,
    mut observer: impl FnMut(f64, &VelocityState) -> Result<()>,
) -> Result<Trajectory> {
    crate::hodge::check_state(plan, state0)?;
    let sys = BardinaSystem::new(plan, params)?;
    let mut samples = vec![(0.0, state0.clone())];
    observer(0.0, state0)?;
    let mut y = state0.to_flat();
    integrate(&sys, &mut y, 0, config, |_, t, y| {
        let s = VelocityState::from_flat(plan, y)?;
        observer(t, &s)?;
        samples.push((t, s));
        Ok(())
    })?;
    let final_time = config.total_steps() as f64 * config.dt;
    Ok(Trajectory { samples, final_state: VelocityState::from_flat(plan, &y)?, final_time })
}

/// Step size with an advective Courant number of 0.5, based on the largest
/// grid speed of `state` and the largest retained wavenumber. The viscous part
/// is integrated exactly and does not constrain the step. Returns `fallback`
/// when the state is at rest.
pub fn suggest_dt(plan: &BasisPlan, state: &VelocityState, params: &ModelParams, fallback: f64) -> f64 {
    let (u1, u2) = velocity_raw(plan, &state.psi, state.harmonic.components());
    let umax = u1.iter().zip(&u2).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
    let kmax = plan.eigenvalues().last().copied().unwrap_or(1.0).sqrt();
    let rate = umax * kmax + params.sigma;
    if rate > 0.0 {
        (0.5 / rate).min(fallback)
    } else {
        fallback
    }
}
