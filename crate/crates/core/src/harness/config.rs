//! JSON run configuration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Forcing, ModelParams};
use crate::error::{Error, Result};
use crate::hodge::{inner_l2_raw, inner_v_raw, HarmonicVector, VelocityState};
use crate::integrator::SchemeConfig;
use crate::lyapunov::LyapunovConfig;
use crate::spectral::{BasisPlan, Geometry, SpectralIndex};

/// A mode label as written in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeLabel {
    Sphere { degree: usize, order: isize },
    Torus { k1: i64, k2: i64 },
}

impl ModeLabel {
    pub fn index(&self) -> SpectralIndex {
        match *self {
            ModeLabel::Sphere { degree, order } => SpectralIndex::Sphere { degree, order },
            ModeLabel::Torus { k1, k2 } => SpectralIndex::Torus { k1, k2 },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeAmplitude {
    pub index: ModeLabel,
    pub amplitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub nu: f64,
    pub alpha: f64,
    #[serde(default)]
    pub sigma: f64,
}

/// Forcing as streamfunction amplitudes of `f₁` plus the harmonic pair `f₂`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    #[serde(default)]
    pub modes: Vec<ModeAmplitude>,
    #[serde(default)]
    pub harmonic: [f64; 2],
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialSpec {
    #[default]
    Zero,
    /// One eigenmode with the given streamfunction amplitude.
    Eigenmode { index: ModeLabel, amplitude: f64 },
    /// Seeded random field with `|ψ̂| ∝ λ^{-slope/2}`, rescaled so that
    /// `|u|² + α²‖u‖² = energy`.
    Random {
        #[serde(default = "default_slope")]
        slope: f64,
        #[serde(default = "default_energy")]
        energy: f64,
    },
}

fn default_slope() -> f64 {
    3.0
}

fn default_energy() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsOptions {
    /// The constant of the Lipschitz estimate in the gap report.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Area of a spherical domain for the domain bound.
    #[serde(default)]
    pub domain_area: Option<f64>,
}

fn default_c() -> f64 {
    1.0
}

fn default_n_max() -> usize {
    20
}

impl Default for BoundsOptions {
    fn default() -> Self {
        BoundsOptions { c: default_c(), n_max: default_n_max(), domain_area: None }
    }
}

/// A complete run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub geometry: Geometry,
    pub truncation: usize,
    pub params: ParamsSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub lyapunov: Option<LyapunovConfig>,
    #[serde(default)]
    pub bounds: BoundsOptions,
    /// Seed of every random element; required by random initial data.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: RunSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })?;
    spec.validate()?;
    Ok(spec)
}

impl RunSpec {
    pub fn plan(&self) -> Result<BasisPlan> {
        BasisPlan::new(self.geometry, self.truncation)
    }

    pub fn validate(&self) -> Result<()> {
        let plan = self.plan()?;
        self.model_params(&plan)?.validate(&plan)?;
        self.scheme.validate()?;
        let torus = plan.geometry().harmonic_dim() > 0;
        for (i, m) in self.forcing.modes.iter().enumerate() {
            check_mode(&plan, m.index, &format!("forcing.modes[{i}].index"))?;
            if !m.amplitude.is_finite() {
                return Err(Error::config(format!("forcing.modes[{i}].amplitude"), "must be finite"));
            }
        }
        if !torus && self.forcing.harmonic != [0.0; 2] {
            return Err(Error::config("forcing.harmonic", "the sphere has no harmonic fields"));
        }
        match self.initial {
            InitialSpec::Zero => {}
            InitialSpec::Eigenmode { index, amplitude } => {
                check_mode(&plan, index, "initial.index")?;
                if !amplitude.is_finite() {
                    return Err(Error::config("initial.amplitude", "must be finite"));
                }
            }
            InitialSpec::Random { slope, energy } => {
                if self.seed.is_none() {
                    return Err(Error::config("seed", "required by random initial data"));
                }
                if !slope.is_finite() {
                    return Err(Error::config("initial.slope", "must be finite"));
                }
                if !(energy >= 0.0 && energy.is_finite()) {
                    return Err(Error::config("initial.energy", "must be non-negative"));
                }
            }
        }
        if let Some(l) = &self.lyapunov {
            l.validate(&plan)?;
        }
        if !(self.bounds.c > 0.0) {
            return Err(Error::config("bounds.c", "must be positive"));
        }
        Ok(())
    }

    pub fn model_params(&self, plan: &BasisPlan) -> Result<ModelParams> {
        let mut forcing = Forcing::zero(plan);
        for (i, m) in self.forcing.modes.iter().enumerate() {
            let at = plan.position(&m.index.index()).map_err(|e| Error::config(format!("forcing.modes[{i}].index"), e.to_string()))?;
            forcing.f1[at] += m.amplitude;
        }
        if let HarmonicVector::Planar(_) = forcing.f2 {
            forcing.f2 = HarmonicVector::Planar(self.forcing.harmonic);
        }
        Ok(ModelParams { nu: self.params.nu, alpha: self.params.alpha, sigma: self.params.sigma, forcing })
    }

    pub fn initial_state(&self, plan: &BasisPlan) -> Result<VelocityState> {
        match self.initial {
            InitialSpec::Zero => Ok(VelocityState::zero(plan)),
            InitialSpec::Eigenmode { index, amplitude } => {
                let mut s = VelocityState::zero(plan);
                let at = plan.position(&index.index()).map_err(|e| Error::config("initial.index", e.to_string()))?;
                s.psi[at] = amplitude;
                Ok(s)
            }
            InitialSpec::Random { slope, energy } => {
                let seed = self.seed.ok_or_else(|| Error::config("seed", "required by random initial data"))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = VelocityState::random(plan, &mut rng, slope, true);
                let a2 = self.params.alpha * self.params.alpha;
                let e1 = inner_l2_raw(plan, &s, &s) + a2 * inner_v_raw(plan, &s, &s);
                Ok(if e1 > 0.0 { s.scaled((energy / e1).sqrt()) } else { s })
            }
        }
    }

    /// The Lyapunov configuration with the run seed applied.
    pub fn lyapunov_config(&self) -> Option<LyapunovConfig> {
        self.lyapunov.map(|mut l| {
            if let Some(s) = self.seed {
                l.seed = s;
            }
            l
        })
    }
}

/// The mode must be retained and, on the torus, inside the dealiasing band:
/// forcing or data outside the band would be cut by the dealiased
/// nonlinearity and break the discrete energy balance.
fn check_mode(plan: &BasisPlan, label: ModeLabel, path: &str) -> Result<()> {
    let ix = label.index();
    let at = plan.position(&ix).map_err(|e| Error::config(path, e.to_string()))?;
    if !plan.dealias_mask()[at] {
        return Err(Error::config(path, format!("mode {ix} lies outside the dealiasing band")));
    }
    Ok(())
}
