//! Energy diagnostics along trajectories, Gronwall envelope checks, the
//! trilinear-identity suite and separation growth of nearby trajectories.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{average_enstrophy_bound, Envelope, Physical};
use crate::dynamics::{energy_residual, nonlinear_term, rhs_tangent, rhs_u, tangent_nonlinear_term, ModelParams};
use crate::error::Result;
use crate::hodge::{
    check_state, inner_l2_raw, inner_v_raw, norm_au_sq, stokes_apply, trilinear_b_signed, velocity_raw,
    vorticity_coeffs, HarmonicVector, VelocityState,
};
use crate::integrator::{run, SchemeConfig};
use crate::spectral::{BasisPlan, Geometry, ScalarCoeffs};

/// Norms and energies of one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `|u|`
    pub norm_u_l2: f64,
    /// `‖u‖`
    pub norm_u_v: f64,
    /// `|Au|`
    pub norm_au: f64,
    /// `|u₂|`, the harmonic part.
    pub norm_u2: f64,
    /// `|v|` with `v = (I + α²A)u`.
    pub norm_v: f64,
    /// `|u|² + α²‖u‖²`
    pub e1: f64,
    /// `‖u‖² + α²|Au|²`
    pub e2: f64,
    /// Envelope for `e1`; `+∞` when no envelope is tracked.
    pub env1: f64,
    pub env2: f64,
    pub energy_residual: f64,
    /// Number of envelopes (0, 1 or 2) exceeded beyond slack.
    pub violations: u32,
}

/// Tolerance of the envelope checks: a sample is flagged when
/// `E > env·(1 + relative + per_dt2·dt²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub relative: f64,
    /// Discretisation allowance per unit `dt²` (time⁻² units).
    pub per_dt2: f64,
    pub dt: f64,
}

impl Slack {
    pub fn new(dt: f64) -> Self {
        Slack { relative: 1e-6, per_dt2: 1.0, dt }
    }

    pub fn factor(&self) -> f64 {
        1.0 + self.relative + self.per_dt2 * self.dt * self.dt
    }
}

/// Envelopes anchored at a trajectory's initial energies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeTrack {
    pub envelope: Envelope,
    pub e1_0: f64,
    pub e2_0: f64,
    pub slack: Slack,
}

impl EnvelopeTrack {
    pub fn new(plan: &BasisPlan, params: &ModelParams, state0: &VelocityState, slack: Slack) -> Result<Self> {
        let envelope = Envelope::new(Physical::from(params), plan.geometry(), &params.forcing.norms(plan))?;
        let (e1_0, e2_0) = energies(plan, state0, params.alpha);
        Ok(EnvelopeTrack { envelope, e1_0, e2_0, slack })
    }

    pub fn at(&self, t: f64) -> (f64, f64) {
        self.envelope.at(self.e1_0, self.e2_0, t)
    }
}

/// `(env1, env2)` at time `t` for initial energies `(e1_0, e2_0)`.
pub fn gronwall_envelopes(plan: &BasisPlan, params: &ModelParams, e1_0: f64, e2_0: f64, t: f64) -> Result<(f64, f64)> {
    let env = Envelope::new(Physical::from(params), plan.geometry(), &params.forcing.norms(plan))?;
    Ok(env.at(e1_0, e2_0, t))
}

fn energies(plan: &BasisPlan, u: &VelocityState, alpha: f64) -> (f64, f64) {
    let a2 = alpha * alpha;
    let l2 = inner_l2_raw(plan, u, u);
    let v = inner_v_raw(plan, u, u);
    (l2 + a2 * v, v + a2 * norm_au_sq(plan, u))
}

/// Diagnostics of `state` at time `t`; all norms are modewise sums.
pub fn energy_record(
    plan: &BasisPlan,
    state: &VelocityState,
    params: &ModelParams,
    t: f64,
    track: Option<&EnvelopeTrack>,
) -> Result<DiagnosticsRecord> {
    check_state(plan, state)?;
    let a2 = params.alpha * params.alpha;
    let l2 = inner_l2_raw(plan, state, state);
    let v = inner_v_raw(plan, state, state);
    let au = norm_au_sq(plan, state);
    let u2 = plan.geometry().area() * state.harmonic.dot(&state.harmonic);
    let norm_v_sq: f64 = state
        .psi
        .iter()
        .zip(plan.eigenvalues())
        .map(|(c, l)| l * (1.0 + a2 * l).powi(2) * c * c)
        .sum::<f64>()
        + u2;
    let (e1, e2) = (l2 + a2 * v, v + a2 * au);
    let (env1, env2, violations) = match track {
        Some(tr) => {
            let (env1, env2) = tr.at(t);
            let k = tr.slack.factor();
            (env1, env2, (e1 > env1 * k) as u32 + (e2 > env2 * k) as u32)
        }
        None => (f64::INFINITY, f64::INFINITY, 0),
    };
    Ok(DiagnosticsRecord {
        t,
        norm_u_l2: l2.sqrt(),
        norm_u_v: v.sqrt(),
        norm_au: au.sqrt(),
        norm_u2: u2.sqrt(),
        norm_v: norm_v_sq.sqrt(),
        e1,
        e2,
        env1,
        env2,
        energy_residual: energy_residual(plan, state, params)?,
        violations,
    })
}

/// A sample exceeding an envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub t: f64,
    /// `"E1"` or `"E2"`.
    pub quantity: String,
    pub value: f64,
    pub envelope: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Flag every record with `E1 > env1·k` or `E2 > env2·k`, `k = slack.factor()`.
pub fn check_trajectory(records: &[DiagnosticsRecord], slack: &Slack) -> ViolationReport {
    let k = slack.factor();
    let mut violations = Vec::new();
    for (index, r) in records.iter().enumerate() {
        for (quantity, value, envelope) in [("E1", r.e1, r.env1), ("E2", r.e2, r.env2)] {
            if !(value <= envelope * k) {
                violations.push(Violation { index, t: r.t, quantity: quantity.into(), value, envelope });
            }
        }
    }
    ViolationReport { checked: records.len(), violations }
}

/// Running time averages of `‖u‖²` against `2L₂/δ′ + E₂(0)(1 - e^{-δ′t})/(δ′t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeAverageReport {
    /// `(t, average, bound)` at every record after the first.
    pub rows: Vec<(f64, f64, f64)>,
    pub violations: usize,
}

/// Trapezoidal running averages of `‖u‖²` over `records` (which must start at `t = 0`).
pub fn time_average_check(plan: &BasisPlan, params: &ModelParams, records: &[DiagnosticsRecord], slack: &Slack) -> Result<TimeAverageReport> {
    let p = Physical::from(params);
    let f = params.forcing.norms(plan);
    let ceiling = average_enstrophy_bound(p, plan.geometry(), &f)?;
    let dp = crate::bounds::constants(p, plan.geometry(), &f)?.delta_prime;
    let mut rows = Vec::new();
    let mut integral = 0.0;
    let mut violations = 0;
    let Some(first) = records.first() else {
        return Ok(TimeAverageReport { rows, violations });
    };
    let e2_0 = first.e2;
    for w in records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        integral += 0.5 * (b.t - a.t) * (a.norm_u_v.powi(2) + b.norm_u_v.powi(2));
        let t = b.t - first.t;
        if t <= 0.0 {
            continue;
        }
        let avg = integral / t;
        let bound = ceiling + e2_0 * (1.0 - (-dp * t).exp()) / (dp * t);
        if !(avg <= bound * slack.factor()) {
            violations += 1;
        }
        rows.push((b.t, avg, bound));
    }
    Ok(TimeAverageReport { rows, violations })
}

/// Options of [`identity_suite`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityOptions {
    pub states: usize,
    pub tolerance: f64,
    /// Use states outside the dealiasing band on a minimal grid, and report
    /// which residuals degrade relative to the clean configuration.
    pub aliased: bool,
    /// Sign of one term of the trilinear form; anything but `1.0` breaks it.
    pub sign: f64,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        IdentityOptions { states: 20, tolerance: 1e-9, aliased: false, sign: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// In aliased mode: whether the residual exceeds the tolerance although
    /// the clean configuration meets it.
    pub degraded: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityTable {
    pub geometry: Geometry,
    pub truncation: usize,
    pub rows: Vec<IdentityRow>,
}

impl IdentityTable {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Grid samples of velocity and vorticity.
struct Sampled {
    u1: Vec<f64>,
    u2: Vec<f64>,
    zeta: Vec<f64>,
}

fn sample(plan: &BasisPlan, s: &VelocityState) -> Sampled {
    let (u1, u2) = velocity_raw(plan, &s.psi, s.harmonic.components());
    let zeta = plan.synth_raw(&vorticity_coeffs(plan, &s.psi));
    Sampled { u1, u2, zeta }
}

/// `½∫(|ζ_w c(u,v)| + |ζ_u c(v,w)| + |ζ_v c(u,w)|)`: the size of the terms
/// that cancel in the trilinear identities.
fn trilinear_scale(plan: &BasisPlan, u: &VelocityState, v: &VelocityState, w: &VelocityState) -> f64 {
    let (su, sv, sw) = (sample(plan, u), sample(plan, v), sample(plan, w));
    let c = |a: &Sampled, b: &Sampled, i: usize| (a.u1[i] * b.u2[i] - a.u2[i] * b.u1[i]).abs();
    let g: Vec<f64> = (0..su.zeta.len())
        .map(|i| 0.5 * (sw.zeta[i].abs() * c(&su, &sv, i) + su.zeta[i].abs() * c(&sv, &sw, i) + sv.zeta[i].abs() * c(&su, &sw, i)))
        .collect();
    plan.integrate_raw(&g)
}

fn ratio(residual: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        residual.abs() / scale
    } else {
        residual.abs()
    }
}

fn as_state(p: ScalarCoeffs, q: HarmonicVector) -> VelocityState {
    VelocityState { psi: p, harmonic: q }
}

/// Residuals of one set of states on one plan, keyed by identity name.
fn residuals(plan: &BasisPlan, states: &[[VelocityState; 3]], sign: f64) -> Result<Vec<(&'static str, f64)>> {
    let torus = plan.geometry().harmonic_dim() > 0;
    let mut names = vec!["b(u,v,v)", "b(u,v,w)+b(u,w,v)", "<B(u,u),u>", "<B(u,u),Au>"];
    if torus {
        names.push("<Q(zeta n x h),h>");
    }
    let mut worst = vec![0.0f64; names.len()];
    for [u, v, w] in states {
        let buvv = trilinear_b_signed(plan, u, v, v, sign)?;
        worst[0] = worst[0].max(ratio(buvv, trilinear_scale(plan, u, v, v)));
        let anti = trilinear_b_signed(plan, u, v, w, sign)? + trilinear_b_signed(plan, u, w, v, sign)?;
        worst[1] = worst[1].max(ratio(anti, trilinear_scale(plan, u, v, w)));
        let n = nonlinear_term(plan, u)?;
        let nb = as_state(n.p_part, n.q_part);
        worst[2] = worst[2].max(ratio(inner_l2_raw(plan, &nb, u), trilinear_scale(plan, u, u, u)));
        let au = stokes_apply(plan, u)?;
        worst[3] = worst[3].max(ratio(inner_l2_raw(plan, &nb, &au), trilinear_scale(plan, u, u, &au)));
        if torus {
            let h_only = VelocityState { psi: plan.zero_coeffs(), harmonic: u.harmonic };
            let mut rot = tangent_nonlinear_term(plan, &h_only, v)?;
            rot.p_part = plan.zero_coeffs();
            let q = as_state(rot.p_part, rot.q_part);
            let zeta_abs: Vec<f64> = plan.synth_raw(&vorticity_coeffs(plan, &v.psi)).iter().map(|z| z.abs()).collect();
            let scale = u.harmonic.dot(&u.harmonic) * plan.integrate_raw(&zeta_abs);
            worst[4] = worst[4].max(ratio(inner_l2_raw(plan, &q, &h_only), scale));
        }
    }
    Ok(names.into_iter().zip(worst).collect())
}

fn random_triples(plan: &BasisPlan, count: usize, seed: u64, dealiased: bool) -> Vec<[VelocityState; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| std::array::from_fn(|_| VelocityState::random(plan, &mut rng, 2.0, dealiased)))
        .collect()
}

/// Relative residuals of the trilinear identities over seeded random states:
/// `b(u,v,v) = 0`, `b(u,v,w) = -b(u,w,v)`, `⟨𝔹(u,u),u⟩ = 0`,
/// `⟨𝔹(u,u),Au⟩ = 0` and, on the torus, `⟨ℚ(ζ·(n×h)), h⟩ = 0`.
pub fn identity_suite(plan: &BasisPlan, seed: u64, options: &IdentityOptions) -> Result<IdentityTable> {
    let clean = residuals(plan, &random_triples(plan, options.states, seed, true), options.sign)?;
    let rows = if options.aliased {
        let coarse = coarse_plan(plan)?;
        let dirty = residuals(&coarse, &random_triples(&coarse, options.states, seed, false), options.sign)?;
        dirty
            .into_iter()
            .zip(&clean)
            .map(|((name, r), (_, c))| IdentityRow {
                name: name.into(),
                max_residual: r,
                tolerance: options.tolerance,
                pass: r <= options.tolerance,
                degraded: Some(r > options.tolerance && *c <= options.tolerance),
            })
            .collect()
    } else {
        clean
            .into_iter()
            .map(|(name, r)| IdentityRow {
                name: name.into(),
                max_residual: r,
                tolerance: options.tolerance,
                pass: r <= options.tolerance,
                degraded: None,
            })
            .collect()
    };
    Ok(IdentityTable { geometry: plan.geometry(), truncation: plan.truncation(), rows })
}

/// The smallest grid that still resolves every retained mode.
fn coarse_plan(plan: &BasisPlan) -> Result<BasisPlan> {
    let t = plan.truncation();
    match plan.geometry() {
        Geometry::Sphere => BasisPlan::with_grid(Geometry::Sphere, t, t + 1, 2 * t + 1),
        g @ Geometry::Torus { .. } => BasisPlan::with_grid(g, t, 2 * t + 1, 2 * t + 1),
    }
}

/// One sample of [`separation_growth`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub t: f64,
    /// `|δ|² + α²‖δ‖²` for `δ = u_a - u_b`.
    pub distance_e1: f64,
    /// `log(distance(t)/distance(0))`; `None` when either distance vanishes.
    pub log_growth: Option<f64>,
    /// `∫₀ᵗ ‖u_a‖² ds`.
    pub gronwall_exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub samples: Vec<GrowthSample>,
    /// `log_growth / t` at the final sample.
    pub growth_rate: Option<f64>,
    /// Whether the distance never increased between samples.
    pub monotone_decay: bool,
}

/// Integrate two trajectories side by side and report how their distance evolves.
pub fn separation_growth(
    plan: &BasisPlan,
    u0_a: &VelocityState,
    u0_b: &VelocityState,
    params: &ModelParams,
    config: &SchemeConfig,
) -> Result<GrowthReport> {
    let a = run(plan, u0_a, params, config, |_, _| Ok(()))?;
    let b = run(plan, u0_b, params, config, |_, _| Ok(()))?;
    let a2 = params.alpha * params.alpha;
    let mut samples: Vec<GrowthSample> = Vec::with_capacity(a.samples.len());
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for ((t, sa), (_, sb)) in a.samples.iter().zip(&b.samples) {
        let d = sa.axpy(-1.0, sb);
        let distance_e1 = inner_l2_raw(plan, &d, &d) + a2 * inner_v_raw(plan, &d, &d);
        let enst = inner_v_raw(plan, sa, sa);
        if let Some((tp, ep)) = prev {
            integral += 0.5 * (t - tp) * (ep + enst);
        }
        prev = Some((*t, enst));
        let d0 = samples.first().map(|s| s.distance_e1).unwrap_or(distance_e1);
        let log_growth = (d0 > 0.0 && distance_e1 > 0.0).then(|| (distance_e1 / d0).ln());
        samples.push(GrowthSample { t: *t, distance_e1, log_growth, gronwall_exponent: integral });
    }
    let monotone_decay = samples.windows(2).all(|w| w[1].distance_e1 <= w[0].distance_e1);
    let growth_rate = samples.last().and_then(|s| match s.log_growth {
        Some(g) if s.t > 0.0 => Some(g / s.t),
        _ => None,
    });
    Ok(GrowthReport { samples, growth_rate, monotone_decay })
}

/// Worst relative residuals of the transform roundtrip and of Parseval's
/// identity over `trials` seeded random coefficient vectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralResiduals {
    pub roundtrip: f64,
    pub parseval: f64,
}

pub fn spectral_residuals(plan: &BasisPlan, seed: u64, trials: usize) -> Result<SpectralResiduals> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SpectralResiduals { roundtrip: 0.0, parseval: 0.0 };
    for _ in 0..trials {
        let c = ScalarCoeffs(plan.eigenvalues().iter().map(|_| rng.gen_range(-1.0..1.0)).collect());
        let g = plan.synthesize(&c)?;
        let back = plan.analyze(&g)?;
        let diff: f64 = back.iter().zip(c.iter()).map(|(a, b)| (a - b).powi(2)).sum();
        let norm = c.norm_sq();
        let sq: Vec<f64> = g.values.iter().map(|v| v * v).collect();
        out.roundtrip = out.roundtrip.max((diff / norm).sqrt());
        out.parseval = out.parseval.max((plan.integrate_raw(&sq) - norm).abs() / norm);
    }
    Ok(out)
}

/// Worst relative mismatch between a central difference of `rhs_u` along
/// `U` and `rhs_tangent(U, u)`, over `pairs` seeded random `(u, U)`.
pub fn tangent_consistency(plan: &BasisPlan, params: &ModelParams, seed: u64, pairs: usize, eps: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let u = VelocityState::random(plan, &mut rng, 2.0, true);
        let w = VelocityState::random(plan, &mut rng, 2.0, true);
        let plus = rhs_u(plan, &u.axpy(eps, &w), params)?.to_flat();
        let minus = rhs_u(plan, &u.axpy(-eps, &w), params)?.to_flat();
        let lin = rhs_tangent(plan, &w, &u, params)?.to_flat();
        let (mut num, mut den) = (0.0, 0.0);
        for ((p, m), l) in plus.iter().zip(&minus).zip(&lin) {
            num += ((p - m) / (2.0 * eps) - l).powi(2);
            den += l * l;
        }
        worst = worst.max(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() });
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Forcing;
    use crate::integrator::Scheme;
    use crate::spectral::SpectralIndex;
    use std::f64::consts::PI;

    fn mode(plan: &BasisPlan, ix: SpectralIndex, amp: f64) -> VelocityState {
        let mut s = VelocityState::zero(plan);
        s.psi[plan.position(&ix).unwrap()] = amp;
        s
    }

    #[test]
    fn record_examples() {
        let s = BasisPlan::new(Geometry::Sphere, 4).unwrap();
        let p = ModelParams::unforced(&s, 1.0, 1.0, 0.0);
        // |u|² = λψ̂² = 1 for λ = 2.
        let u = mode(&s, SpectralIndex::Sphere { degree: 1, order: 0 }, 1.0 / 2f64.sqrt());
        let r = energy_record(&s, &u, &p, 0.0, None).unwrap();
        assert!((r.norm_u_l2 - 1.0).abs() < 1e-15);
        assert!((r.e1 - 3.0).abs() < 1e-14);
        assert!((r.e2 - 6.0).abs() < 1e-14);
        assert!((r.norm_v - 3.0).abs() < 1e-14);
        let z = energy_record(&s, &VelocityState::zero(&s), &p, 0.0, None).unwrap();
        assert_eq!((z.e1, z.e2, z.norm_u_l2, z.norm_v, z.energy_residual), (0.0, 0.0, 0.0, 0.0, 0.0));

        let t = BasisPlan::new(Geometry::Torus { length: 2.0 * PI }, 4).unwrap();
        let p = ModelParams::unforced(&t, 1.0, 1.0, 0.5);
        let mut h = VelocityState::zero(&t);
        h.harmonic = HarmonicVector::Planar([1.0, 0.0]);
        let r = energy_record(&t, &h, &p, 0.0, None).unwrap();
        assert!((r.norm_u_l2 - 2.0 * PI).abs() < 1e-13);
        assert!((r.norm_u2 - 2.0 * PI).abs() < 1e-13);
        assert_eq!(r.norm_u_v, 0.0);
    }

    #[test]
    fn envelope_examples() {
        let s = BasisPlan::new(Geometry::Sphere, 4).unwrap();
        let mut p = ModelParams::unforced(&s, 0.5, 1.0, 0.0);
        assert_eq!(gronwall_envelopes(&s, &p, 2.0, 3.0, 0.0).unwrap(), (2.0, 3.0));
        let (e1, _) = gronwall_envelopes(&s, &p, 2.0, 3.0, 1.5).unwrap();
        assert!((e1 - 2.0 * (-1.5f64).exp()).abs() < 1e-15);
        p.forcing.f1[0] = 0.7;
        let f = p.forcing.norms(&s);
        let (e1, _) = gronwall_envelopes(&s, &p, 2.0, 3.0, 1e5).unwrap();
        assert!((e1 - f.a_inv.powi(2) / (0.25 * 2.0)).abs() < 1e-13);
        let t = BasisPlan::new(Geometry::Torus { length: 1.0 }, 4).unwrap();
        let mut q = ModelParams::unforced(&t, 0.5, 1.0, 0.1);
        q.sigma = 0.0;
        assert!(gronwall_envelopes(&t, &q, 1.0, 1.0, 1.0).is_err());
    }

    fn eigen_run(t_end: f64) -> (BasisPlan, ModelParams, Vec<DiagnosticsRecord>, Slack) {
        let s = BasisPlan::new(Geometry::Sphere, 6).unwrap();
        let p = ModelParams::unforced(&s, 0.2, 0.6, 0.0);
        let u = mode(&s, SpectralIndex::Sphere { degree: 3, order: -2 }, 0.4);
        let cfg = SchemeConfig::new(Scheme::IfRk4, 1e-2, t_end, 5);
        let slack = Slack::new(cfg.dt);
        let track = EnvelopeTrack::new(&s, &p, &u, slack).unwrap();
        let mut recs = Vec::new();
        run(&s, &u, &p, &cfg, |t, st| {
            recs.push(energy_record(&s, st, &p, t, Some(&track))?);
            Ok(())
        })
        .unwrap();
        (s, p, recs, slack)
    }

    #[test]
    fn trajectory_checks() {
        let (_, _, recs, slack) = eigen_run(2.0);
        assert!(check_trajectory(&recs, &slack).is_clean());
        assert!(recs.iter().all(|r| r.violations == 0));
        let (_, _, recs, slack) = eigen_run(0.1);
        let inflated: Vec<_> = recs.iter().map(|r| DiagnosticsRecord { e1: 2.0 * r.e1, e2: 2.0 * r.e2, ..r.clone() }).collect();
        let rep = check_trajectory(&inflated, &slack);
        let flagged: std::collections::BTreeSet<_> = rep.violations.iter().map(|v| v.index).collect();
        assert_eq!(flagged.len(), recs.len());
        assert!(check_trajectory(&[], &slack).is_clean());
    }

    #[test]
    fn time_average_holds_for_decay() {
        let (s, p, recs, slack) = eigen_run(2.0);
        let rep = time_average_check(&s, &p, &recs, &slack).unwrap();
        assert_eq!(rep.violations, 0);
        assert_eq!(rep.rows.len(), recs.len() - 1);
    }

    #[test]
    fn identities_hold() {
        for plan in [
            BasisPlan::new(Geometry::Sphere, 8).unwrap(),
            BasisPlan::new(Geometry::Torus { length: 2.0 * PI }, 8).unwrap(),
        ] {
            let opts = IdentityOptions { states: 4, ..Default::default() };
            let t = identity_suite(&plan, 3, &opts).unwrap();
            assert!(t.all_pass(), "{t:?}");
            let broken = identity_suite(&plan, 3, &IdentityOptions { sign: -1.0, ..opts }).unwrap();
            assert!(!broken.rows[0].pass && !broken.rows[1].pass);
            assert!(broken.rows[2].pass);
        }
    }

    #[test]
    fn aliasing_degrades_energy_identity() {
        let plan = BasisPlan::new(Geometry::Torus { length: 2.0 * PI }, 8).unwrap();
        let opts = IdentityOptions { states: 3, aliased: true, ..Default::default() };
        let t = identity_suite(&plan, 5, &opts).unwrap();
        let energy = t.rows.iter().find(|r| r.name == "<B(u,u),u>").unwrap();
        assert_eq!(energy.degraded, Some(true), "{t:?}");
    }

    #[test]
    fn verification_helpers() {
        for plan in [BasisPlan::new(Geometry::Sphere, 8).unwrap(), BasisPlan::new(Geometry::Torus { length: 2.0 }, 8).unwrap()] {
            let r = spectral_residuals(&plan, 1, 3).unwrap();
            assert!(r.roundtrip < 1e-12 && r.parseval < 1e-12, "{r:?}");
            let sigma = if plan.geometry().harmonic_dim() > 0 { 0.2 } else { 0.0 };
            let p = ModelParams::unforced(&plan, 0.3, 0.5, sigma);
            assert!(tangent_consistency(&plan, &p, 2, 3, 1e-6).unwrap() < 1e-6);
        }
    }

    #[test]
    fn separation_examples() {
        let s = BasisPlan::new(Geometry::Sphere, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = VelocityState::random(&s, &mut rng, 3.0, true).scaled(1e-2);
        let p = ModelParams::unforced(&s, 0.5, 0.5, 0.0);
        let cfg = SchemeConfig::new(Scheme::IfRk4, 1e-2, 1.0, 10);
        let same = separation_growth(&s, &u, &u, &p, &cfg).unwrap();
        assert!(same.samples.iter().all(|g| g.distance_e1 == 0.0));
        let w = VelocityState::random(&s, &mut rng, 3.0, true).scaled(1e-2);
        let decay = separation_growth(&s, &u, &w, &p, &cfg).unwrap();
        assert!(decay.monotone_decay);
        assert!(decay.growth_rate.unwrap() < 0.0);

        let mut pf = p.clone();
        pf.forcing = Forcing { f1: s.zero_coeffs(), f2: HarmonicVector::Empty };
        pf.forcing.f1[s.position(&SpectralIndex::Sphere { degree: 4, order: 1 }).unwrap()] = 2.0;
        let big = VelocityState::random(&s, &mut rng, 2.0, true);
        let near = big.axpy(1e-8, &VelocityState::random(&s, &mut rng, 2.0, true));
        let rep = separation_growth(&s, &big, &near, &pf, &cfg).unwrap();
        assert!(rep.growth_rate.unwrap().is_finite());
    }
}
