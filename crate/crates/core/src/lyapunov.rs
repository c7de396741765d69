//! Lyapunov exponents in the weighted product `[a, b] = α²⟨Curlₙa, Curlₙb⟩ + ⟨a, b⟩`
//! by tangent-ensemble reorthonormalisation, instantaneous traces of the
//! linearisation, Kaplan–Yorke dimension, and comparison with `N*`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::K1;
use crate::dynamics::{BardinaSystem, ModelParams};
use crate::error::{Error, Result};
use crate::hodge::{check_state, inner_v_raw, VelocityState};
use crate::integrator::{steps_to, Scheme, SplitSystem, Stepper};
use crate::spectral::BasisPlan;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    /// Ensemble size.
    pub n: usize,
    #[serde(default)]
    pub t_transient: f64,
    pub t_average: f64,
    pub renorm_interval: f64,
    #[serde(default)]
    pub seed: u64,
    /// Start the ensemble with the harmonic directions (torus only).
    #[serde(default = "default_true")]
    pub include_harmonic: bool,
    /// Size of the seeded perturbation of the initial directions.
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
}

fn default_true() -> bool {
    true
}

fn default_perturbation() -> f64 {
    1e-3
}

impl LyapunovConfig {
    pub fn new(n: usize, t_transient: f64, t_average: f64, renorm_interval: f64, seed: u64) -> Self {
        LyapunovConfig {
            n,
            t_transient,
            t_average,
            renorm_interval,
            seed,
            include_harmonic: true,
            perturbation: default_perturbation(),
        }
    }

    pub fn validate(&self, plan: &BasisPlan) -> Result<()> {
        let max = VelocityState::flat_len(plan);
        if self.n == 0 || self.n > max {
            return Err(Error::config("lyapunov.n", format!("must lie in 1..={max}, got {}", self.n)));
        }
        if !(self.t_average > 0.0 && self.t_average.is_finite()) {
            return Err(Error::config("lyapunov.t_average", "must be positive"));
        }
        if !(self.renorm_interval > 0.0 && self.renorm_interval.is_finite()) {
            return Err(Error::config("lyapunov.renorm_interval", "must be positive"));
        }
        if !(self.t_transient >= 0.0 && self.t_transient.is_finite()) {
            return Err(Error::config("lyapunov.t_transient", "must be non-negative"));
        }
        if !(self.perturbation >= 0.0 && self.perturbation.is_finite()) {
            return Err(Error::config("lyapunov.perturbation", "must be non-negative"));
        }
        Ok(())
    }
}

/// Weights `w` with `[a, b] = Σ wᵢaᵢbᵢ` on flat state vectors.
fn weights(plan: &BasisPlan, alpha: f64) -> Vec<f64> {
    let a2 = alpha * alpha;
    let mut w: Vec<f64> = plan.eigenvalues().iter().map(|l| l + a2 * l * l).collect();
    w.extend(std::iter::repeat(plan.geometry().area()).take(plan.geometry().harmonic_dim()));
    w
}

fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

/// Modified Gram–Schmidt on `n` consecutive vectors of length `w.len()`.
fn gram_schmidt(w: &[f64], vectors: &mut [f64]) -> Result<Vec<f64>> {
    let d = w.len();
    let n = vectors.len() / d;
    let mut r = Vec::with_capacity(n);
    for i in 0..n {
        let (done, rest) = vectors.split_at_mut(i * d);
        let vi = &mut rest[..d];
        for j in 0..i {
            let vj = &done[j * d..(j + 1) * d];
            let c = wdot(w, vi, vj);
            vi.iter_mut().zip(vj).for_each(|(x, y)| *x -= c * y);
        }
        let norm = wdot(w, vi, vi).sqrt();
        if !(norm >= 1e-300) {
            return Err(Error::DegenerateEnsemble { vector: i, value: norm });
        }
        vi.iter_mut().for_each(|x| *x /= norm);
        r.push(norm);
    }
    Ok(r)
}

/// Orthonormalise in the weighted product; returns the vectors and the
/// diagonal factors `rᵢ`.
pub fn orthonormalize(plan: &BasisPlan, tangents: &[VelocityState], alpha: f64) -> Result<(Vec<VelocityState>, Vec<f64>)> {
    let mut flat = Vec::with_capacity(tangents.len() * VelocityState::flat_len(plan));
    for t in tangents {
        check_state(plan, t)?;
        flat.extend(t.to_flat());
    }
    let w = weights(plan, alpha);
    let r = gram_schmidt(&w, &mut flat)?;
    let out = flat.chunks(w.len()).map(|c| VelocityState::from_flat(plan, c)).collect::<Result<_>>()?;
    Ok((out, r))
}

/// `Σₖ [F′(u)wₖ, wₖ]`.
pub fn trace_qn(plan: &BasisPlan, u: &VelocityState, tangents: &[VelocityState], params: &ModelParams) -> Result<f64> {
    check_state(plan, u)?;
    let sys = BardinaSystem::new(plan, params)?;
    let base = sys.frozen(&u.to_flat());
    let w = weights(plan, params.alpha);
    let mut total = 0.0;
    let mut out = vec![0.0; w.len()];
    for t in tangents {
        check_state(plan, t)?;
        let y = t.to_flat();
        sys.tangent_remainder(&base, &y, &mut out);
        for ((o, r), v) in out.iter_mut().zip(sys.linear_rates()).zip(&y) {
            *o -= r * v;
        }
        total += wdot(&w, &out, &y);
    }
    Ok(total)
}

/// Right-hand side of the instantaneous trace inequality
/// `Σₖ[F′(u)wₖ, wₖ] ≤ -(ν/2)Σ_{i≤N}λᵢ + (k₁/(8ν))(1 + 1/(λ₁α²))‖u‖²`.
pub fn trace_bound(plan: &BasisPlan, u: &VelocityState, params: &ModelParams, n: usize) -> f64 {
    let sum: f64 = plan.eigenvalues().iter().take(n).sum();
    let l1 = plan.lambda1();
    -0.5 * params.nu * sum
        + K1 / (8.0 * params.nu) * (1.0 + 1.0 / (l1 * params.alpha * params.alpha)) * inner_v_raw(plan, u, u)
}

/// Base state and `n` tangents integrated together; the tangents are
/// evaluated concurrently against the base at each stage.
struct Ensemble<'a> {
    system: BardinaSystem<'a>,
    d: usize,
    rates: Vec<f64>,
}

impl<'a> Ensemble<'a> {
    fn new(plan: &'a BasisPlan, params: &ModelParams, n: usize) -> Result<Self> {
        let system = BardinaSystem::new(plan, params)?;
        let d = system.dim();
        let rates = system.linear_rates().iter().copied().cycle().take(d * (n + 1)).collect();
        Ok(Ensemble { system, d, rates })
    }
}

impl SplitSystem for Ensemble<'_> {
    fn dim(&self) -> usize {
        self.rates.len()
    }

    fn linear_rates(&self) -> &[f64] {
        &self.rates
    }

    fn remainder(&self, y: &[f64], out: &mut [f64]) {
        let d = self.d;
        let (base_in, tangents_in) = y.split_at(d);
        let (base_out, tangents_out) = out.split_at_mut(d);
        self.system.remainder(base_in, base_out);
        let frozen = self.system.frozen(base_in);
        tangents_out
            .par_chunks_mut(d)
            .zip(tangents_in.par_chunks(d))
            .for_each(|(o, t)| self.system.tangent_remainder(&frozen, t, o));
    }
}

/// Running estimates at one renormalisation instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    /// Running exponent estimates in ensemble order.
    pub mu: Vec<f64>,
    /// Running partial sums `q₁ … q_N`.
    pub q: Vec<f64>,
}

/// Outcome of [`compare_bound`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// First `N` with `q_N < 0`.
    pub crossing: Option<usize>,
    pub n_star: f64,
    /// `max(1, ⌈N*⌉)`.
    pub threshold: usize,
    /// `q_N < 0` for every measured `N ≥ crossing`.
    pub negative_beyond_crossing: bool,
    /// Crossing at or below the threshold and negative beyond it.
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    /// `μ₁ ≥ … ≥ μ_N`.
    pub exponents: Vec<f64>,
    /// `q_N = Σ_{i≤N} μᵢ`.
    pub partial_sums: Vec<f64>,
    pub series: Vec<SeriesRow>,
    pub kaplan_yorke: f64,
    /// Set when every partial sum is non-negative, so `kaplan_yorke` is only a lower bound.
    pub kaplan_yorke_saturated: bool,
    pub t_average: f64,
    pub renormalizations: usize,
    pub n_star: Option<f64>,
    pub verdict: Option<Verdict>,
}

/// Initial directions: the harmonic directions (when requested) followed by
/// eigenmodes in order of increasing eigenvalue, each perturbed by a seeded
/// random vector of relative size `perturbation`.
fn initial_tangents(plan: &BasisPlan, config: &LyapunovConfig) -> Vec<f64> {
    let d = VelocityState::flat_len(plan);
    let m = plan.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = Vec::with_capacity(d);
    if config.include_harmonic {
        order.extend(m..d);
    }
    order.extend(0..m);
    if !config.include_harmonic {
        order.extend(m..d);
    }
    let mut out = vec![0.0; config.n * d];
    for (k, &slot) in order.iter().take(config.n).enumerate() {
        let v = &mut out[k * d..(k + 1) * d];
        for x in v.iter_mut() {
            *x = config.perturbation * rng.gen_range(-1.0..1.0);
        }
        v[slot] += 1.0;
    }
    out
}

/// Co-integrate `u` and `N` tangents, renormalising every `renorm_interval`.
/// `observer(t, u, tangents)` sees the orthonormal ensemble after each
/// renormalisation of the averaging phase.
pub fn benettin_run(
    plan: &BasisPlan,
    u0: &VelocityState,
    params: &ModelParams,
    scheme: Scheme,
    dt: f64,
    config: &LyapunovConfig,
    mut observer: impl FnMut(f64, &VelocityState, &[VelocityState]) -> Result<()>,
) -> Result<ExponentReport> {
    check_state(plan, u0)?;
    config.validate(plan)?;
    let ens = Ensemble::new(plan, params, config.n)?;
    let d = ens.d;
    let w = weights(plan, params.alpha);
    let mut y = u0.to_flat();
    y.extend(initial_tangents(plan, config));
    gram_schmidt(&w, &mut y[d..])?;

    let per = steps_to(config.renorm_interval, dt).max(1);
    let interval = per as f64 * dt;
    let transient = steps_to(config.t_transient, interval);
    let averaging = steps_to(config.t_average, interval).max(1);
    let mut stepper = Stepper::new(&ens, scheme, dt)?;
    let mut logs = vec![0.0; config.n];
    let mut series = Vec::with_capacity(averaging as usize);
    let mut k: u64 = 0;
    for block in 0..(transient + averaging) {
        for _ in 0..per {
            k += 1;
            if !stepper.step(&ens, &mut y) {
                return Err(Error::Divergence { t: k as f64 * dt });
            }
        }
        let r = gram_schmidt(&w, &mut y[d..])?;
        if block < transient {
            continue;
        }
        let t = k as f64 * dt;
        let elapsed = (block - transient + 1) as f64 * interval;
        logs.iter_mut().zip(&r).for_each(|(l, r)| *l += r.ln());
        let mu: Vec<f64> = logs.iter().map(|l| l / elapsed).collect();
        let q = partial_sums(&mu);
        series.push(SeriesRow { t, mu, q });
        let u = VelocityState::from_flat(plan, &y[..d])?;
        let tangents: Vec<VelocityState> =
            y[d..].chunks(d).map(|c| VelocityState::from_flat(plan, c)).collect::<Result<_>>()?;
        observer(t, &u, &tangents)?;
    }
    let t_average = averaging as f64 * interval;
    let mut exponents: Vec<f64> = logs.iter().map(|l| l / t_average).collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    let (kaplan_yorke, kaplan_yorke_saturated) = kaplan_yorke(&exponents);
    Ok(ExponentReport {
        partial_sums: partial_sums(&exponents),
        exponents,
        series,
        kaplan_yorke,
        kaplan_yorke_saturated,
        t_average,
        renormalizations: averaging as usize,
        n_star: None,
        verdict: None,
    })
}

fn partial_sums(x: &[f64]) -> Vec<f64> {
    x.iter()
        .scan(0.0, |s, v| {
            *s += v;
            Some(*s)
        })
        .collect()
}

/// Kaplan–Yorke dimension of exponents sorted in descending order, and
/// whether the partial sums stay non-negative throughout (the value is then
/// the lower bound `N`).
pub fn kaplan_yorke(exponents: &[f64]) -> (f64, bool) {
    if exponents.first().map_or(true, |m| *m < 0.0) {
        return (0.0, false);
    }
    let sums = partial_sums(exponents);
    let j = sums.iter().rposition(|s| *s >= 0.0).unwrap_or(0) + 1;
    if j == exponents.len() {
        return (j as f64, true);
    }
    (j as f64 + sums[j - 1] / exponents[j].abs(), false)
}

/// Compare the measured `q_N` against the analytic bound `N*`.
pub fn compare_bound(partial_sums: &[f64], n_star: f64) -> Verdict {
    let crossing = partial_sums.iter().position(|q| *q < 0.0).map(|i| i + 1);
    let threshold = (n_star.ceil() as usize).max(1);
    let negative_beyond_crossing = crossing.is_some_and(|c| partial_sums[c - 1..].iter().all(|q| *q < 0.0));
    let consistent = negative_beyond_crossing && crossing.is_some_and(|c| c <= threshold);
    Verdict { crossing, n_star, threshold, negative_beyond_crossing, consistent }
}
