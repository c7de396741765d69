//! Divergence-free vector fields represented by a streamfunction plus a
//! harmonic part, with the Stokes operator, Helmholtz filter, projections,
//! inner products, and the trilinear form.
//!
//! Conventions: `u = n×∇ψ + h`, where `n×(a, b) = (-b, a)` in the local frame,
//! and the scalar vorticity is `ζ = Δψ`, so `ζ̂ = -λψ̂`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{BasisPlan, GridField, ScalarCoeffs, VectorGridField};

/// Constant (harmonic) part of a velocity field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum HarmonicVector {
    /// The sphere carries no harmonic vector fields.
    Empty,
    /// Constant field `(h₁, h₂)` on the torus.
    Planar([f64; 2]),
}

impl HarmonicVector {
    pub fn zero_for(plan: &BasisPlan) -> Self {
        match plan.geometry().harmonic_dim() {
            0 => HarmonicVector::Empty,
            _ => HarmonicVector::Planar([0.0; 2]),
        }
    }

    /// Components, with the empty element reading as zero.
    pub fn components(&self) -> [f64; 2] {
        match *self {
            HarmonicVector::Empty => [0.0; 2],
            HarmonicVector::Planar(h) => h,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        match self {
            HarmonicVector::Empty => &[],
            HarmonicVector::Planar(h) => h,
        }
    }

    pub fn dim(&self) -> usize {
        self.as_slice().len()
    }

    pub(crate) fn from_slice(values: &[f64]) -> Self {
        match values {
            [] => HarmonicVector::Empty,
            [a, b] => HarmonicVector::Planar([*a, *b]),
            _ => panic!("harmonic part has dimension 0 or 2"),
        }
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        match *self {
            HarmonicVector::Empty => HarmonicVector::Empty,
            HarmonicVector::Planar([a, b]) => HarmonicVector::Planar([f(a), f(b)]),
        }
    }

    pub fn dot(&self, other: &HarmonicVector) -> f64 {
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }
}

/// Velocity `u = n×∇ψ + h`, divergence-free by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityState {
    pub psi: ScalarCoeffs,
    pub harmonic: HarmonicVector,
}

impl VelocityState {
    pub fn zero(plan: &BasisPlan) -> Self {
        VelocityState { psi: plan.zero_coeffs(), harmonic: HarmonicVector::zero_for(plan) }
    }

    /// Length of the flat layout `[ψ̂…, h…]`.
    pub fn flat_len(plan: &BasisPlan) -> usize {
        plan.len() + plan.geometry().harmonic_dim()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.psi.0.clone();
        out.extend_from_slice(self.harmonic.as_slice());
        out
    }

    pub fn from_flat(plan: &BasisPlan, flat: &[f64]) -> Result<Self> {
        if flat.len() != Self::flat_len(plan) {
            return Err(Error::shape(format!("{} state values", Self::flat_len(plan)), flat.len()));
        }
        let (psi, h) = flat.split_at(plan.len());
        Ok(VelocityState { psi: ScalarCoeffs(psi.to_vec()), harmonic: HarmonicVector::from_slice(h) })
    }

    /// Random streamfunction with `|ψ̂| ∝ λ^{-slope/2}` per mode; when
    /// `dealiased`, modes outside the plan's dealiasing band are left at zero.
    /// Torus states also receive a random harmonic part.
    pub fn random<R: Rng + ?Sized>(plan: &BasisPlan, rng: &mut R, slope: f64, dealiased: bool) -> Self {
        let psi = plan
            .eigenvalues()
            .iter()
            .zip(plan.dealias_mask())
            .map(|(&l, &keep)| {
                let x: f64 = rng.gen_range(-1.0..1.0);
                if dealiased && !keep {
                    0.0
                } else {
                    x * l.powf(-0.5 * slope)
                }
            })
            .collect();
        let harmonic = match HarmonicVector::zero_for(plan) {
            HarmonicVector::Empty => HarmonicVector::Empty,
            HarmonicVector::Planar(_) => HarmonicVector::Planar([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]),
        };
        VelocityState { psi: ScalarCoeffs(psi), harmonic }
    }

    pub fn scaled(&self, s: f64) -> Self {
        VelocityState {
            psi: ScalarCoeffs(self.psi.iter().map(|c| c * s).collect()),
            harmonic: self.harmonic.map(|h| h * s),
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &VelocityState) -> Self {
        let psi = self.psi.iter().zip(other.psi.iter()).map(|(a, b)| a + s * b).collect();
        let mut h = self.harmonic;
        if let (HarmonicVector::Planar(a), HarmonicVector::Planar(b)) = (&mut h, other.harmonic) {
            a[0] += s * b[0];
            a[1] += s * b[1];
        }
        VelocityState { psi: ScalarCoeffs(psi), harmonic: h }
    }

    pub fn is_finite(&self) -> bool {
        self.psi.iter().chain(self.harmonic.as_slice()).all(|v| v.is_finite())
    }
}

pub(crate) fn check_state(plan: &BasisPlan, state: &VelocityState) -> Result<()> {
    plan.check_coeffs(&state.psi)?;
    let want = plan.geometry().harmonic_dim();
    if state.harmonic.dim() != want {
        return Err(Error::shape(format!("harmonic part of dimension {want}"), state.harmonic.dim()));
    }
    Ok(())
}

fn wrap(plan: &BasisPlan, values: Vec<f64>) -> GridField {
    let (rows, cols) = plan.grid_shape();
    GridField { rows, cols, values }
}

/// Grid components of `n×∇ψ + h`.
pub(crate) fn velocity_raw(plan: &BasisPlan, psi: &[f64], h: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
    let (mut g1, mut g2) = plan.gradient_raw(psi);
    for v in g2.iter_mut() {
        *v = -*v + h[0];
    }
    if h[1] != 0.0 {
        g1.iter_mut().for_each(|v| *v += h[1]);
    }
    (g2, g1)
}

/// Coefficients of `ζ = Δψ`.
pub(crate) fn vorticity_coeffs(plan: &BasisPlan, psi: &[f64]) -> Vec<f64> {
    psi.iter().zip(plan.eigenvalues()).map(|(c, l)| -l * c).collect()
}

/// `∫ g·(n×∇Y)` for every basis function, i.e. the coefficients of `Curlₙ g`
/// up to sign; dividing by `λ` gives the streamfunction of the Leray part.
pub(crate) fn curl_project_raw(plan: &BasisPlan, g1: &[f64], g2: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = g1.iter().map(|v| -v).collect();
    plan.project_raw(None, Some(g2), Some(&neg))
}

pub(crate) fn area_mean_raw(plan: &BasisPlan, g1: &[f64], g2: &[f64]) -> [f64; 2] {
    let area = plan.geometry().area();
    [plan.integrate_raw(g1) / area, plan.integrate_raw(g2) / area]
}

/// `u = n×∇ψ + h` on the grid, in the local orthonormal frame.
pub fn velocity_grid(plan: &BasisPlan, state: &VelocityState) -> Result<VectorGridField> {
    check_state(plan, state)?;
    let (a, b) = velocity_raw(plan, &state.psi, state.harmonic.components());
    Ok(VectorGridField { first: wrap(plan, a), second: wrap(plan, b) })
}

/// Coefficients of the scalar vorticity `ζ = Curlₙ u = Δψ`.
pub fn scalar_vorticity(plan: &BasisPlan, state: &VelocityState) -> Result<ScalarCoeffs> {
    check_state(plan, state)?;
    Ok(ScalarCoeffs(vorticity_coeffs(plan, &state.psi)))
}

/// Stokes operator: `ψ̂ ↦ λψ̂`, harmonic part annihilated.
pub fn stokes_apply(plan: &BasisPlan, state: &VelocityState) -> Result<VelocityState> {
    check_state(plan, state)?;
    Ok(VelocityState {
        psi: ScalarCoeffs(state.psi.iter().zip(plan.eigenvalues()).map(|(c, l)| l * c).collect()),
        harmonic: state.harmonic.map(|_| 0.0),
    })
}

fn filter_by(plan: &BasisPlan, state: &VelocityState, alpha: f64, invert: bool) -> Result<VelocityState> {
    check_state(plan, state)?;
    if !(alpha > 0.0) {
        return Err(Error::config("params.alpha", format!("must be positive, got {alpha}")));
    }
    let a2 = alpha * alpha;
    let psi = state
        .psi
        .iter()
        .zip(plan.eigenvalues())
        .map(|(c, l)| if invert { c / (1.0 + a2 * l) } else { c * (1.0 + a2 * l) })
        .collect();
    Ok(VelocityState { psi: ScalarCoeffs(psi), harmonic: state.harmonic })
}

/// `v = (I + α²A)u`; the harmonic part passes through.
pub fn helmholtz_filter(plan: &BasisPlan, u: &VelocityState, alpha: f64) -> Result<VelocityState> {
    filter_by(plan, u, alpha, false)
}

/// `u = (I + α²A)⁻¹v`; the harmonic part passes through.
pub fn helmholtz_unfilter(plan: &BasisPlan, v: &VelocityState, alpha: f64) -> Result<VelocityState> {
    filter_by(plan, v, alpha, true)
}

/// Streamfunction of the divergence-free, mean-free part of `g`.
pub fn leray_project(plan: &BasisPlan, g: &VectorGridField) -> Result<ScalarCoeffs> {
    plan.check_grid(&g.first)?;
    plan.check_grid(&g.second)?;
    let q = curl_project_raw(plan, &g.first.values, &g.second.values);
    Ok(ScalarCoeffs(q.iter().zip(plan.eigenvalues()).map(|(q, l)| q / l).collect()))
}

/// Harmonic part of `g`: the area mean on the torus, empty on the sphere.
pub fn harmonic_project(plan: &BasisPlan, g: &VectorGridField) -> Result<HarmonicVector> {
    plan.check_grid(&g.first)?;
    plan.check_grid(&g.second)?;
    Ok(match HarmonicVector::zero_for(plan) {
        HarmonicVector::Empty => HarmonicVector::Empty,
        HarmonicVector::Planar(_) => HarmonicVector::Planar(area_mean_raw(plan, &g.first.values, &g.second.values)),
    })
}

fn check_pair(plan: &BasisPlan, a: &VelocityState, b: &VelocityState) -> Result<()> {
    check_state(plan, a)?;
    check_state(plan, b)
}

pub(crate) fn inner_l2_raw(plan: &BasisPlan, a: &VelocityState, b: &VelocityState) -> f64 {
    let spectral: f64 = a.psi.iter().zip(b.psi.iter()).zip(plan.eigenvalues()).map(|((x, y), l)| l * x * y).sum();
    spectral + plan.geometry().area() * a.harmonic.dot(&b.harmonic)
}

pub(crate) fn inner_v_raw(plan: &BasisPlan, a: &VelocityState, b: &VelocityState) -> f64 {
    a.psi.iter().zip(b.psi.iter()).zip(plan.eigenvalues()).map(|((x, y), l)| l * l * x * y).sum()
}

/// Plain L² pairing `⟨a, b⟩`.
pub fn inner_l2(plan: &BasisPlan, a: &VelocityState, b: &VelocityState) -> Result<f64> {
    check_pair(plan, a, b)?;
    Ok(inner_l2_raw(plan, a, b))
}

/// `⟨Curlₙ a, Curlₙ b⟩`.
pub fn inner_v(plan: &BasisPlan, a: &VelocityState, b: &VelocityState) -> Result<f64> {
    check_pair(plan, a, b)?;
    Ok(inner_v_raw(plan, a, b))
}

/// `[a, b] = α²⟨Curlₙ a, Curlₙ b⟩ + ⟨a, b⟩`.
pub fn inner_weighted(plan: &BasisPlan, a: &VelocityState, b: &VelocityState, alpha: f64) -> Result<f64> {
    check_pair(plan, a, b)?;
    Ok(alpha * alpha * inner_v_raw(plan, a, b) + inner_l2_raw(plan, a, b))
}

/// `|Au|²`.
pub(crate) fn norm_au_sq(plan: &BasisPlan, a: &VelocityState) -> f64 {
    a.psi.iter().zip(plan.eigenvalues()).map(|(x, l)| l * l * l * x * x).sum()
}

/// Grid samples of velocity and vorticity used by [`trilinear_b`].
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

/// `b(u, v, w) = ∫ (∇ᵤv)·w`, evaluated through the symmetric form
/// `½∫[-ζ_w c(u,v) + ζ_u c(v,w) + ζ_v c(u,w)]` with `c(a,b) = a₁b₂ - a₂b₁`,
/// so that `b(u,v,v) = 0` holds pointwise on the grid.
pub fn trilinear_b(plan: &BasisPlan, u: &VelocityState, v: &VelocityState, w: &VelocityState) -> Result<f64> {
    trilinear_b_signed(plan, u, v, w, 1.0)
}

/// [`trilinear_b`] with the sign of the `ζ_v` term multiplied by `sign`.
/// Any value other than `1.0` breaks the antisymmetry; used to exercise the
/// identity checks.
pub fn trilinear_b_signed(
    plan: &BasisPlan,
    u: &VelocityState,
    v: &VelocityState,
    w: &VelocityState,
    sign: f64,
) -> Result<f64> {
    check_pair(plan, u, v)?;
    check_state(plan, w)?;
    let (su, sv, sw) = (sample(plan, u), sample(plan, v), sample(plan, w));
    let c = |a: &Sampled, b: &Sampled, i: usize| a.u1[i] * b.u2[i] - a.u2[i] * b.u1[i];
    let integrand: Vec<f64> = (0..su.u1.len())
        .map(|i| {
            0.5 * (-sw.zeta[i] * c(&su, &sv, i) + su.zeta[i] * c(&sv, &sw, i) + sign * sv.zeta[i] * c(&su, &sw, i))
        })
        .collect();
    Ok(plan.integrate_raw(&integrand))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Geometry, SpectralIndex};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sphere() -> BasisPlan {
        BasisPlan::new(Geometry::Sphere, 10).unwrap()
    }

    fn torus() -> BasisPlan {
        BasisPlan::new(Geometry::Torus { length: 2.0 * PI }, 9).unwrap()
    }

    fn mode(plan: &BasisPlan, ix: SpectralIndex, amp: f64) -> VelocityState {
        let mut s = VelocityState::zero(plan);
        s.psi[plan.position(&ix).unwrap()] = amp;
        s
    }

    #[test]
    fn velocity_examples() {
        let t = torus();
        let z = velocity_grid(&t, &VelocityState::zero(&t)).unwrap();
        assert!(z.first.values.iter().chain(&z.second.values).all(|&v| v == 0.0));
        // ψ = sin(y) → u = (-cos y, 0).
        let s = mode(&t, SpectralIndex::Torus { k1: 0, k2: -1 }, 2.0 * PI / 2f64.sqrt());
        let u = velocity_grid(&t, &s).unwrap();
        for (i, (_, y)) in t.grid_points().into_iter().enumerate() {
            assert!((u.first.values[i] + y.cos()).abs() < 1e-13);
            assert!(u.second.values[i].abs() < 1e-13);
        }
        let mut h = VelocityState::zero(&t);
        h.harmonic = HarmonicVector::Planar([1.0, 0.0]);
        let u = velocity_grid(&t, &h).unwrap();
        assert!(u.first.values.iter().all(|&v| v == 1.0));
        assert!(u.second.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vorticity_and_stokes() {
        let s = sphere();
        let st = mode(&s, SpectralIndex::Sphere { degree: 1, order: 0 }, 1.0);
        let z = scalar_vorticity(&s, &st).unwrap();
        assert_eq!(z[s.position(&SpectralIndex::Sphere { degree: 1, order: 0 }).unwrap()], -2.0);
        let st = mode(&s, SpectralIndex::Sphere { degree: 2, order: 1 }, 1.5);
        let a = stokes_apply(&s, &st).unwrap();
        assert_eq!(a.psi, st.scaled(6.0).psi);
        let t = torus();
        let mut h = VelocityState::zero(&t);
        h.harmonic = HarmonicVector::Planar([1.0, 1.0]);
        assert!(scalar_vorticity(&t, &h).unwrap().iter().all(|&v| v == 0.0));
        let a = stokes_apply(&t, &h).unwrap();
        assert_eq!(a, VelocityState::zero(&t));
    }

    #[test]
    fn curl_of_vorticity_recovers_stokes() {
        // A u = -n×∇ζ, so projecting that grid field must give λψ̂.
        for p in [sphere(), torus()] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let st = VelocityState::random(&p, &mut rng, 2.0, false);
            let zeta = scalar_vorticity(&p, &st).unwrap();
            let (g1, g2) = velocity_raw(&p, &zeta, [0.0; 2]);
            let neg = VectorGridField {
                first: wrap(&p, g1.iter().map(|v| -v).collect()),
                second: wrap(&p, g2.iter().map(|v| -v).collect()),
            };
            let au = leray_project(&p, &neg).unwrap();
            let want = stokes_apply(&p, &st).unwrap();
            for (a, b) in au.iter().zip(want.psi.iter()) {
                assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn filter_pair() {
        let s = sphere();
        let st = mode(&s, SpectralIndex::Sphere { degree: 2, order: 0 }, 1.0);
        let u = helmholtz_unfilter(&s, &st, 0.5).unwrap();
        assert!((u.psi[s.position(&SpectralIndex::Sphere { degree: 2, order: 0 }).unwrap()] - 1.0 / 2.5).abs() < 1e-15);
        let t = torus();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let st = VelocityState::random(&t, &mut rng, 1.0, false);
        let back = helmholtz_filter(&t, &helmholtz_unfilter(&t, &st, 0.7).unwrap(), 0.7).unwrap();
        assert_eq!(back.harmonic, st.harmonic);
        for (a, b) in back.psi.iter().zip(st.psi.iter()) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1e-300));
        }
        assert!(helmholtz_filter(&t, &st, 0.0).is_err());
    }

    #[test]
    fn projections() {
        for p in [sphere(), torus()] {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let st = VelocityState::random(&p, &mut rng, 1.0, false);
            // Pure gradient.
            let grad = p.surface_gradient(&st.psi).unwrap();
            let lp = leray_project(&p, &grad).unwrap();
            assert!(lp.iter().all(|v| v.abs() < 1e-10), "{:?}", p);
            // Identity on H.
            let mut pure = st.clone();
            pure.harmonic = pure.harmonic.map(|_| 0.0);
            let u = velocity_grid(&p, &pure).unwrap();
            let back = leray_project(&p, &u).unwrap();
            for (a, b) in back.iter().zip(pure.psi.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
            let hp = harmonic_project(&p, &u).unwrap();
            assert!(hp.components().iter().all(|v| v.abs() < 1e-12));
            // Harmonic part recovered.
            let u = velocity_grid(&p, &st).unwrap();
            let hp = harmonic_project(&p, &u).unwrap();
            for (a, b) in hp.as_slice().iter().zip(st.harmonic.as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let t = torus();
        let mut c = VelocityState::zero(&t);
        c.harmonic = HarmonicVector::Planar([0.3, -2.0]);
        let u = velocity_grid(&t, &c).unwrap();
        assert!(leray_project(&t, &u).unwrap().iter().all(|v| v.abs() < 1e-13));
        assert_eq!(harmonic_project(&t, &u).unwrap().as_slice().len(), 2);
        let s = sphere();
        let u = velocity_grid(&s, &VelocityState::random(&s, &mut ChaCha8Rng::seed_from_u64(0), 1.0, false)).unwrap();
        assert_eq!(harmonic_project(&s, &u).unwrap(), HarmonicVector::Empty);
    }

    #[test]
    fn velocity_is_divergence_free() {
        for p in [sphere(), torus()] {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let st = VelocityState::random(&p, &mut rng, 0.0, false);
            let u = velocity_grid(&p, &st).unwrap();
            // ∫ u·∇Y = -∫ (div u) Y for every Y.
            let div = p.project_raw(None, Some(&u.first.values), Some(&u.second.values));
            let scale = inner_v_raw(&p, &st, &st).sqrt();
            assert!(div.iter().all(|d| d.abs() <= 1e-10 * scale));
        }
    }

    #[test]
    fn inner_products() {
        let s = sphere();
        let e = mode(&s, SpectralIndex::Sphere { degree: 1, order: 1 }, 1.0 / 2f64.sqrt());
        assert!((inner_l2(&s, &e, &e).unwrap() - 1.0).abs() < 1e-15);
        assert!((inner_weighted(&s, &e, &e, 1.0).unwrap() - 3.0).abs() < 1e-15);
        let f = mode(&s, SpectralIndex::Sphere { degree: 3, order: -1 }, 1.0);
        assert_eq!(inner_l2(&s, &e, &f).unwrap(), 0.0);
        assert_eq!(inner_v(&s, &e, &f).unwrap(), 0.0);
        assert_eq!(inner_weighted(&s, &e, &f, 2.0).unwrap(), 0.0);
        // Spectral L² agrees with grid quadrature, harmonic part included.
        let t = torus();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = VelocityState::random(&t, &mut rng, 1.0, false);
        let b = VelocityState::random(&t, &mut rng, 1.0, false);
        let (ua, ub) = (velocity_grid(&t, &a).unwrap(), velocity_grid(&t, &b).unwrap());
        let dot: Vec<f64> = (0..ua.first.values.len())
            .map(|i| ua.first.values[i] * ub.first.values[i] + ua.second.values[i] * ub.second.values[i])
            .collect();
        let quad = t.integrate_raw(&dot);
        let spec = inner_l2(&t, &a, &b).unwrap();
        assert!((quad - spec).abs() < 1e-12 * spec.abs().max(1.0));
        let w = inner_weighted(&t, &a, &b, 0.4).unwrap();
        assert!((w - (0.16 * inner_v(&t, &a, &b).unwrap() + spec)).abs() < 1e-14 * w.abs().max(1.0));
        let mut h = VelocityState::zero(&t);
        h.harmonic = HarmonicVector::Planar([1.0, 0.0]);
        assert!((inner_l2(&t, &h, &h).unwrap().sqrt() - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn poincare() {
        for p in [sphere(), torus()] {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let mut st = VelocityState::random(&p, &mut rng, 1.0, false);
            st.harmonic = st.harmonic.map(|_| 0.0);
            let l2 = inner_l2_raw(&p, &st, &st);
            let v = inner_v_raw(&p, &st, &st);
            assert!(l2 <= v / p.lambda1());
            let e = mode(&p, p.indices()[0], 1.0);
            assert!((inner_l2_raw(&p, &e, &e) - inner_v_raw(&p, &e, &e) / p.lambda1()).abs() < 1e-14);
        }
    }

    #[test]
    fn trilinear_identities() {
        for p in [sphere(), torus()] {
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let u = VelocityState::random(&p, &mut rng, 1.0, true);
            let v = VelocityState::random(&p, &mut rng, 1.0, true);
            let w = VelocityState::random(&p, &mut rng, 1.0, true);
            let scale = inner_l2_raw(&p, &u, &u).sqrt() * (inner_v_raw(&p, &v, &v) + inner_l2_raw(&p, &v, &v));
            assert!(trilinear_b(&p, &u, &v, &v).unwrap().abs() <= 1e-10 * scale);
            let a = trilinear_b(&p, &u, &v, &w).unwrap();
            let b = trilinear_b(&p, &u, &w, &v).unwrap();
            assert!((a + b).abs() <= 1e-10 * a.abs().max(1.0));
            assert!(trilinear_b_signed(&p, &u, &v, &v, -1.0).unwrap().abs() > 1e-6 * scale);
        }
    }

    #[test]
    fn trilinear_matches_direct_covariant_quadrature() {
        // u, v, w from ψ = cos x, cos y, cos(x + y) on the 2π torus.
        let t = torus();
        let l = 2.0 * PI;
        let c = l / 2f64.sqrt();
        let u = mode(&t, SpectralIndex::Torus { k1: 1, k2: 0 }, c);
        let v = mode(&t, SpectralIndex::Torus { k1: 0, k2: 1 }, c);
        let w = mode(&t, SpectralIndex::Torus { k1: 1, k2: 1 }, c);
        // Direct oracle: u = (-ψ_y, ψ_x), ∫ (u·∇)v · w on a fine uniform grid.
        let n = 64;
        let h = l / n as f64;
        let mut direct = 0.0;
        for j in 0..n {
            for i in 0..n {
                let (x, y) = (i as f64 * h, j as f64 * h);
                let uu = (0.0, -x.sin());
                // v = (-∂y cos y, ∂x cos y) = (sin y, 0); ∇v₁ = (0, cos y).
                let dv1 = (0.0, y.cos());
                let dv2 = (0.0, 0.0);
                let ww = ((x + y).sin(), -(x + y).sin());
                let a1 = uu.0 * dv1.0 + uu.1 * dv1.1;
                let a2 = uu.0 * dv2.0 + uu.1 * dv2.1;
                direct += (a1 * ww.0 + a2 * ww.1) * h * h;
            }
        }
        let b = trilinear_b(&t, &u, &v, &w).unwrap();
        assert!((b - direct).abs() < 1e-12 * direct.abs().max(1.0), "{b} vs {direct}");
        assert!(direct.abs() > 1.0);
    }
}
