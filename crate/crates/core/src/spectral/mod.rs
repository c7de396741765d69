//! Laplace–Beltrami eigenbases, quadrature grids, and grid ↔ spectral transforms.
//!
//! A [`BasisPlan`] fixes a geometry and a truncation. Scalar fields are stored
//! as real coefficients against an orthonormal (in the plain L² sense) real
//! eigenbasis, one slot per [`SpectralIndex`], ordered by ascending eigenvalue.
//! The mean mode is never stored.

mod quadrature;
mod sphere;
mod torus;

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use quadrature::gauss_legendre;
use sphere::{LatTable, SphereBasis};
use torus::TorusBasis;

/// The two supported closed surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Geometry {
    /// Unit sphere.
    Sphere,
    /// Square flat torus `[0, length]²`.
    Torus { length: f64 },
}

impl Geometry {
    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Sphere => "sphere",
            Geometry::Torus { .. } => "torus",
        }
    }

    /// Total surface area.
    pub fn area(&self) -> f64 {
        match *self {
            Geometry::Sphere => 4.0 * PI,
            Geometry::Torus { length } => length * length,
        }
    }

    /// Smallest nonzero eigenvalue of `-Δ`.
    pub fn lambda1(&self) -> f64 {
        match *self {
            Geometry::Sphere => 2.0,
            Geometry::Torus { length } => (2.0 * PI / length).powi(2),
        }
    }

    /// Dimension of the space of harmonic vector fields.
    pub fn harmonic_dim(&self) -> usize {
        match self {
            Geometry::Sphere => 0,
            Geometry::Torus { .. } => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Geometry::Torus { length } = *self {
            if !(length > 0.0 && length.is_finite()) {
                return Err(Error::config("geometry.length", format!("must be positive and finite, got {length}")));
            }
        }
        Ok(())
    }
}

/// Label of one real basis function.
///
/// On the torus, `k` in the upper half plane (`k1 > 0`, or `k1 == 0 && k2 > 0`)
/// labels `(√2/L) cos(2π k·x / L)` and `-k` labels the matching sine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpectralIndex {
    Sphere { degree: usize, order: isize },
    Torus { k1: i64, k2: i64 },
}

impl fmt::Display for SpectralIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralIndex::Sphere { degree, order } => write!(f, "(n={degree}, m={order})"),
            SpectralIndex::Torus { k1, k2 } => write!(f, "k=({k1}, {k2})"),
        }
    }
}

/// Real spectral coefficients in plan order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScalarCoeffs(pub Vec<f64>);

impl ScalarCoeffs {
    pub fn zeros(len: usize) -> Self {
        ScalarCoeffs(vec![0.0; len])
    }

    pub fn dot(&self, other: &ScalarCoeffs) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }
}

impl Deref for ScalarCoeffs {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ScalarCoeffs {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Real samples on a plan's grid, row-major.
///
/// Sphere: rows are latitudes (colatitude increasing), columns longitudes.
/// Torus: rows are `y`, columns are `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        GridField { rows, cols, values: vec![0.0; rows * cols] }
    }
}

/// Two tangent components on the grid: `(θ̂, φ̂)` on the sphere, `(x̂, ŷ)` on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorGridField {
    pub first: GridField,
    pub second: GridField,
}

#[derive(Clone)]
enum Backend {
    Sphere(SphereBasis),
    Torus(TorusBasis),
}

/// Precomputed basis, eigenvalues, quadrature, and transform tables.
///
/// Immutable after construction and shareable across threads.
#[derive(Clone)]
pub struct BasisPlan {
    geometry: Geometry,
    truncation: usize,
    indices: Vec<SpectralIndex>,
    eigenvalues: Vec<f64>,
    keep: Vec<bool>,
    backend: Backend,
}

impl fmt::Debug for BasisPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (rows, cols) = self.grid_shape();
        f.debug_struct("BasisPlan")
            .field("geometry", &self.geometry)
            .field("truncation", &self.truncation)
            .field("modes", &self.indices.len())
            .field("grid", &(rows, cols))
            .finish()
    }
}

/// Smallest integer `≥ n` whose only prime factors are 2, 3 and 5.
fn smooth_at_least(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

impl BasisPlan {
    /// Plan whose grid integrates products of three band-limited fields exactly.
    pub fn new(geometry: Geometry, truncation: usize) -> Result<Self> {
        let (rows, cols) = match geometry {
            Geometry::Sphere => ((3 * truncation + 2).div_ceil(2), smooth_at_least(3 * truncation + 1)),
            Geometry::Torus { .. } => {
                let n = smooth_at_least(3 * truncation + 1);
                (n, n)
            }
        };
        Self::with_grid(geometry, truncation, rows, cols)
    }

    /// Plan on an explicit grid. Grids smaller than the default alias cubic
    /// integrands; this is only useful for aliasing studies.
    pub fn with_grid(geometry: Geometry, truncation: usize, rows: usize, cols: usize) -> Result<Self> {
        geometry.validate()?;
        if truncation == 0 {
            return Err(Error::config("truncation", "must be at least 1"));
        }
        match geometry {
            Geometry::Sphere => {
                if rows < truncation + 1 || cols < 2 * truncation + 1 {
                    return Err(Error::config(
                        "grid",
                        format!("sphere grid {rows}x{cols} cannot resolve degree {truncation}"),
                    ));
                }
                Ok(Self::build_sphere(truncation, rows, cols))
            }
            Geometry::Torus { length } => {
                if rows != cols || cols < 2 * truncation + 1 {
                    return Err(Error::config(
                        "grid",
                        format!("torus grid {rows}x{cols} cannot resolve wavenumber {truncation}"),
                    ));
                }
                Ok(Self::build_torus(length, truncation, cols))
            }
        }
    }

    fn build_sphere(lmax: usize, nlat: usize, nlon: usize) -> Self {
        let mut indices = Vec::new();
        for n in 1..=lmax {
            for m in -(n as isize)..=(n as isize) {
                indices.push(SpectralIndex::Sphere { degree: n, order: m });
            }
        }
        let eigenvalues: Vec<f64> = indices
            .iter()
            .map(|ix| match ix {
                SpectralIndex::Sphere { degree, .. } => (degree * (degree + 1)) as f64,
                _ => unreachable!(),
            })
            .collect();
        let width = 2 * lmax + 1;
        let mut slot = vec![usize::MAX; (lmax + 1) * width];
        for (i, ix) in indices.iter().enumerate() {
            if let SpectralIndex::Sphere { degree, order } = *ix {
                slot[degree * width + (order + lmax as isize) as usize] = i;
            }
        }
        let keep = vec![true; indices.len()];
        let backend = Backend::Sphere(SphereBasis::new(lmax, nlat, nlon, slot));
        BasisPlan { geometry: Geometry::Sphere, truncation: lmax, indices, eigenvalues, keep, backend }
    }

    fn build_torus(length: f64, kmax: usize, n: usize) -> Self {
        let k = kmax as i64;
        let mut indices = Vec::new();
        for k1 in -k..=k {
            for k2 in -k..=k {
                if k1 != 0 || k2 != 0 {
                    indices.push(SpectralIndex::Torus { k1, k2 });
                }
            }
        }
        let key = |ix: &SpectralIndex| match *ix {
            SpectralIndex::Torus { k1, k2 } => (k1 * k1 + k2 * k2, k1, k2),
            _ => unreachable!(),
        };
        indices.sort_by_key(key);
        let scale = (2.0 * PI / length).powi(2);
        let eigenvalues = indices.iter().map(|ix| scale * key(ix).0 as f64).collect();
        let band = (2 * kmax / 3) as i64;
        let keep = indices
            .iter()
            .map(|ix| match *ix {
                SpectralIndex::Torus { k1, k2 } => k1.abs() <= band && k2.abs() <= band,
                _ => unreachable!(),
            })
            .collect();
        let backend = Backend::Torus(TorusBasis::new(length, n, &indices));
        BasisPlan { geometry: Geometry::Torus { length }, truncation: kmax, indices, eigenvalues, keep, backend }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Number of stored scalar modes.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Mode labels in storage order.
    pub fn indices(&self) -> &[SpectralIndex] {
        &self.indices
    }

    /// Eigenvalues of `-Δ` in storage order (ascending).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Storage slot of `index`.
    pub fn position(&self, index: &SpectralIndex) -> Result<usize> {
        let out_of_range = || Error::Index { index: index.to_string(), truncation: self.truncation };
        match (*index, &self.backend) {
            (SpectralIndex::Sphere { degree, order }, Backend::Sphere(_)) => {
                if degree == 0 || degree > self.truncation || order.unsigned_abs() > degree {
                    return Err(out_of_range());
                }
                // Modes are grouped by degree, orders ascending.
                Ok(degree * degree - 1 + (order + degree as isize) as usize)
            }
            (SpectralIndex::Torus { k1, k2 }, Backend::Torus(t)) => t.position(k1, k2).ok_or_else(out_of_range),
            _ => Err(out_of_range()),
        }
    }

    pub fn eigenvalue(&self, index: &SpectralIndex) -> Result<f64> {
        Ok(self.eigenvalues[self.position(index)?])
    }

    /// Whether each slot survives [`BasisPlan::dealias`].
    pub fn dealias_mask(&self) -> &[bool] {
        &self.keep
    }

    /// Grid dimensions `(rows, cols)`.
    pub fn grid_shape(&self) -> (usize, usize) {
        match &self.backend {
            Backend::Sphere(s) => (s.nlat, s.nlon),
            Backend::Torus(t) => (t.n, t.n),
        }
    }

    /// Coordinates of every grid point, row-major: `(θ, φ)` on the sphere,
    /// `(x, y)` on the torus.
    pub fn grid_points(&self) -> Vec<(f64, f64)> {
        let (rows, cols) = self.grid_shape();
        let mut out = Vec::with_capacity(rows * cols);
        match &self.backend {
            Backend::Sphere(s) => {
                for j in 0..rows {
                    let theta = s.cos_theta[j].acos();
                    for i in 0..cols {
                        out.push((theta, 2.0 * PI * i as f64 / cols as f64));
                    }
                }
            }
            Backend::Torus(t) => {
                let h = t.length / t.n as f64;
                for j in 0..rows {
                    for i in 0..cols {
                        out.push((i as f64 * h, j as f64 * h));
                    }
                }
            }
        }
        out
    }

    /// Area element attached to each row of the grid.
    pub fn row_weights(&self) -> Vec<f64> {
        match &self.backend {
            Backend::Sphere(s) => s.cell_weight.clone(),
            Backend::Torus(t) => vec![t.cell_area(); t.n],
        }
    }

    /// Quadrature approximation of `∫ f dA`.
    pub fn integrate(&self, field: &GridField) -> Result<f64> {
        self.check_grid(field)?;
        Ok(self.integrate_raw(&field.values))
    }

    pub(crate) fn integrate_raw(&self, values: &[f64]) -> f64 {
        let cols = self.grid_shape().1;
        self.row_weights()
            .iter()
            .zip(values.chunks_exact(cols))
            .map(|(w, row)| w * row.iter().sum::<f64>())
            .sum()
    }

    pub fn zero_coeffs(&self) -> ScalarCoeffs {
        ScalarCoeffs::zeros(self.len())
    }

    pub fn zero_grid(&self) -> GridField {
        let (rows, cols) = self.grid_shape();
        GridField::zeros(rows, cols)
    }

    pub(crate) fn check_grid(&self, field: &GridField) -> Result<()> {
        let (rows, cols) = self.grid_shape();
        if field.rows != rows || field.cols != cols || field.values.len() != rows * cols {
            return Err(Error::shape(
                format!("{rows}x{cols} grid"),
                format!("{}x{} grid with {} values", field.rows, field.cols, field.values.len()),
            ));
        }
        Ok(())
    }

    pub(crate) fn check_coeffs(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.len() {
            return Err(Error::shape(format!("{} coefficients", self.len()), format!("{} coefficients", coeffs.len())));
        }
        Ok(())
    }

    fn wrap(&self, values: Vec<f64>) -> GridField {
        let (rows, cols) = self.grid_shape();
        GridField { rows, cols, values }
    }

    /// Grid samples of the field with the given coefficients.
    pub fn synthesize(&self, coeffs: &ScalarCoeffs) -> Result<GridField> {
        self.check_coeffs(coeffs)?;
        Ok(self.wrap(self.synth_raw(coeffs)))
    }

    /// Orthogonal projection of grid data onto the retained modes. The mean
    /// and everything beyond the truncation are discarded.
    pub fn analyze(&self, field: &GridField) -> Result<ScalarCoeffs> {
        self.check_grid(field)?;
        Ok(ScalarCoeffs(self.project_raw(Some(&field.values), None, None)))
    }

    /// `∇ψ` on the grid: `(∂θψ, ∂φψ / sin θ)` on the sphere, `(∂ₓψ, ∂ᵧψ)` on the torus.
    pub fn surface_gradient(&self, coeffs: &ScalarCoeffs) -> Result<VectorGridField> {
        self.check_coeffs(coeffs)?;
        let (a, b) = self.gradient_raw(coeffs);
        Ok(VectorGridField { first: self.wrap(a), second: self.wrap(b) })
    }

    /// Zero every slot outside the dealiasing band.
    pub fn dealias(&self, coeffs: &ScalarCoeffs) -> ScalarCoeffs {
        ScalarCoeffs(self.dealias_raw(coeffs))
    }

    pub(crate) fn dealias_raw(&self, coeffs: &[f64]) -> Vec<f64> {
        coeffs.iter().zip(&self.keep).map(|(&c, &k)| if k { c } else { 0.0 }).collect()
    }

    pub(crate) fn synth_raw(&self, coeffs: &[f64]) -> Vec<f64> {
        match &self.backend {
            Backend::Sphere(s) => s.synthesize(coeffs, LatTable::Value, false),
            Backend::Torus(t) => t.synthesize(coeffs, None),
        }
    }

    pub(crate) fn gradient_raw(&self, coeffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match &self.backend {
            Backend::Sphere(s) => (
                s.synthesize(coeffs, LatTable::DTheta, false),
                s.synthesize(coeffs, LatTable::Value, true),
            ),
            Backend::Torus(t) => (t.synthesize(coeffs, Some(0)), t.synthesize(coeffs, Some(1))),
        }
    }

    /// Quadrature of `a·Y + b·(∇Y)₁ + c·(∇Y)₂` against every basis function `Y`.
    pub(crate) fn project_raw(&self, a: Option<&[f64]>, b: Option<&[f64]>, c: Option<&[f64]>) -> Vec<f64> {
        match &self.backend {
            Backend::Sphere(s) => s.analyze(a, b, c, self.len()),
            Backend::Torus(t) => t.analyze(a, b, c, self.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_coeffs(plan: &BasisPlan, seed: u64) -> ScalarCoeffs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarCoeffs((0..plan.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den.max(1e-300)
    }

    fn plans() -> Vec<BasisPlan> {
        vec![
            BasisPlan::new(Geometry::Sphere, 1).unwrap(),
            BasisPlan::new(Geometry::Sphere, 12).unwrap(),
            BasisPlan::new(Geometry::Torus { length: 2.0 * PI }, 1).unwrap(),
            BasisPlan::new(Geometry::Torus { length: 3.0 }, 9).unwrap(),
        ]
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_at_least(64), 64);
        assert_eq!(smooth_at_least(7), 8);
        assert_eq!(smooth_at_least(31), 32);
        assert_eq!(smooth_at_least(61), 64);
        assert_eq!(smooth_at_least(11), 12);
    }

    #[test]
    fn sphere_eigenvalues() {
        let p = BasisPlan::new(Geometry::Sphere, 1).unwrap();
        assert_eq!(p.eigenvalues(), &[2.0, 2.0, 2.0]);
        let p = BasisPlan::new(Geometry::Sphere, 5).unwrap();
        for m in -5..=5 {
            assert_eq!(p.eigenvalue(&SpectralIndex::Sphere { degree: 5, order: m }).unwrap(), 30.0);
        }
        assert_eq!(p.eigenvalue(&SpectralIndex::Sphere { degree: 1, order: 0 }).unwrap(), 2.0);
        assert_eq!(p.eigenvalue(&SpectralIndex::Sphere { degree: 3, order: -2 }).unwrap(), 12.0);
        assert!(p.eigenvalue(&SpectralIndex::Sphere { degree: 6, order: 0 }).is_err());
        assert!(p.eigenvalue(&SpectralIndex::Sphere { degree: 0, order: 0 }).is_err());
        assert!(p.eigenvalue(&SpectralIndex::Torus { k1: 1, k2: 0 }).is_err());
        for (i, ix) in p.indices().iter().enumerate() {
            assert_eq!(p.position(ix).unwrap(), i);
        }
    }

    #[test]
    fn torus_eigenvalues() {
        let p = BasisPlan::new(Geometry::Torus { length: 2.0 * PI }, 1).unwrap();
        assert!((p.lambda1() - 1.0).abs() < 1e-15);
        assert!((p.eigenvalue(&SpectralIndex::Torus { k1: 1, k2: 1 }).unwrap() - 2.0).abs() < 1e-15);
        let p = BasisPlan::new(Geometry::Torus { length: 3.0 }, 4).unwrap();
        assert!((p.lambda1() - 4.0 * PI * PI / 9.0).abs() < 1e-14);
        assert!(p.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        for (i, ix) in p.indices().iter().enumerate() {
            assert_eq!(p.position(ix).unwrap(), i);
        }
        assert!(p.position(&SpectralIndex::Torus { k1: 5, k2: 0 }).is_err());
    }

    #[test]
    fn invalid_plans() {
        assert!(BasisPlan::new(Geometry::Sphere, 0).is_err());
        assert!(BasisPlan::new(Geometry::Torus { length: 0.0 }, 3).is_err());
        assert!(BasisPlan::new(Geometry::Torus { length: -1.0 }, 3).is_err());
    }

    #[test]
    fn grid_sizes_meet_exactness_requirements() {
        for l in 1..=21 {
            let p = BasisPlan::new(Geometry::Sphere, l).unwrap();
            let (rows, cols) = p.grid_shape();
            assert!(rows >= (3 * l + 2).div_ceil(2));
            assert!(cols > 3 * l);
            let t = BasisPlan::new(Geometry::Torus { length: 1.0 }, l).unwrap();
            assert!(t.grid_shape().0 > 3 * l);
        }
    }

    #[test]
    fn roundtrip_and_parseval() {
        for (s, p) in plans().iter().enumerate() {
            let c = random_coeffs(p, s as u64);
            let g = p.synthesize(&c).unwrap();
            let back = p.analyze(&g).unwrap();
            assert!(rel(&back, &c) < 1e-12, "{p:?}");
            let sq = GridField { values: g.values.iter().map(|v| v * v).collect(), ..g.clone() };
            let energy = p.integrate(&sq).unwrap();
            assert!((energy - c.norm_sq()).abs() <= 1e-12 * c.norm_sq(), "{p:?}");
        }
    }

    #[test]
    fn analysis_is_quadrature_adjoint_of_synthesis() {
        for (s, p) in plans().iter().enumerate() {
            let c = random_coeffs(p, 100 + s as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(7 + s as u64);
            let mut g = p.zero_grid();
            g.values.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
            let sc = p.synthesize(&c).unwrap();
            let prod = GridField { values: sc.values.iter().zip(&g.values).map(|(a, b)| a * b).collect(), ..sc };
            let lhs = p.integrate(&prod).unwrap();
            let rhs = c.dot(&p.analyze(&g).unwrap());
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn sphere_y21_oracle() {
        let p = BasisPlan::new(Geometry::Sphere, 6).unwrap();
        let mut g = p.zero_grid();
        for (v, (theta, phi)) in g.values.iter_mut().zip(p.grid_points()) {
            // Real orthonormal Y(2, 1) with Condon–Shortley phase.
            *v = -(15.0 / (4.0 * PI)).sqrt() * theta.sin() * theta.cos() * phi.cos();
        }
        let c = p.analyze(&g).unwrap();
        let at = p.position(&SpectralIndex::Sphere { degree: 2, order: 1 }).unwrap();
        for (i, v) in c.iter().enumerate() {
            let want = if i == at { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "slot {i}: {v}");
        }
    }

    #[test]
    fn sphere_sine_mode_oracle() {
        let p = BasisPlan::new(Geometry::Sphere, 4).unwrap();
        let mut c = p.zero_coeffs();
        c[p.position(&SpectralIndex::Sphere { degree: 3, order: -2 }).unwrap()] = 1.0;
        let g = p.synthesize(&c).unwrap();
        for (v, (theta, phi)) in g.values.iter().zip(p.grid_points()) {
            // √2 P̄(3,2) sin 2φ with P̄(3,2) = (1/4) sqrt(105/(2π)) x s².
            let want = 2f64.sqrt() * 0.25 * (105.0 / (2.0 * PI)).sqrt() * theta.cos() * theta.sin().powi(2) * (2.0 * phi).sin();
            assert!((v - want).abs() < 1e-13);
        }
    }

    #[test]
    fn sphere_gradient_oracle() {
        let p = BasisPlan::new(Geometry::Sphere, 5).unwrap();
        let mut c = p.zero_coeffs();
        c[p.position(&SpectralIndex::Sphere { degree: 1, order: 0 }).unwrap()] = 1.0;
        let grad = p.surface_gradient(&c).unwrap();
        for ((gt, gp), (theta, _)) in grad.first.values.iter().zip(&grad.second.values).zip(p.grid_points()) {
            assert!((gt + (3.0 / (4.0 * PI)).sqrt() * theta.sin()).abs() < 1e-10);
            assert!(gp.abs() < 1e-12);
        }
        // Y(1,1) = -sqrt(3/(4π)) sinθ cosφ: (1/sinθ)∂φ = sqrt(3/(4π)) sinφ.
        let mut c = p.zero_coeffs();
        c[p.position(&SpectralIndex::Sphere { degree: 1, order: 1 }).unwrap()] = 1.0;
        let grad = p.surface_gradient(&c).unwrap();
        let k = (3.0 / (4.0 * PI)).sqrt();
        for ((gt, gp), (theta, phi)) in grad.first.values.iter().zip(&grad.second.values).zip(p.grid_points()) {
            assert!((gt + k * theta.cos() * phi.cos()).abs() < 1e-12);
            assert!((gp - k * phi.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn torus_single_mode_and_gradient() {
        let l = 2.0 * PI;
        let p = BasisPlan::new(Geometry::Torus { length: l }, 3).unwrap();
        let amp = 2f64.sqrt() / l;
        let mut c = p.zero_coeffs();
        c[p.position(&SpectralIndex::Torus { k1: 1, k2: 0 }).unwrap()] = 1.0;
        let g = p.synthesize(&c).unwrap();
        for (v, (x, _)) in g.values.iter().zip(p.grid_points()) {
            assert!((v - amp * x.cos()).abs() < 1e-14);
        }
        // ψ = sin(2πx/L) has coefficient L/√2 on the k=(-1,0) slot.
        let mut c = p.zero_coeffs();
        c[p.position(&SpectralIndex::Torus { k1: -1, k2: 0 }).unwrap()] = l / 2f64.sqrt();
        let g = p.synthesize(&c).unwrap();
        let grad = p.surface_gradient(&c).unwrap();
        for (i, (x, _)) in p.grid_points().into_iter().enumerate() {
            assert!((g.values[i] - x.sin()).abs() < 1e-13);
            assert!((grad.first.values[i] - x.cos()).abs() < 1e-13);
            assert!(grad.second.values[i].abs() < 1e-13);
        }
        // Oblique mode gradient.
        let mut c = p.zero_coeffs();
        c[p.position(&SpectralIndex::Torus { k1: 2, k2: -1 }).unwrap()] = 1.0;
        let grad = p.surface_gradient(&c).unwrap();
        for (i, (x, y)) in p.grid_points().into_iter().enumerate() {
            let s = (2.0 * x - y).sin();
            assert!((grad.first.values[i] + 2.0 * amp * s).abs() < 1e-13);
            assert!((grad.second.values[i] - amp * s).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_in_zero_out() {
        for p in plans() {
            let z = p.zero_coeffs();
            assert!(p.synthesize(&z).unwrap().values.iter().all(|&v| v == 0.0));
            assert!(p.analyze(&p.zero_grid()).unwrap().iter().all(|&v| v == 0.0));
            assert!(p.dealias(&z).iter().all(|&v| v == 0.0));
            let g = p.surface_gradient(&z).unwrap();
            assert!(g.first.values.iter().chain(&g.second.values).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn analysis_discards_mean_and_high_modes() {
        let p = BasisPlan::new(Geometry::Torus { length: 1.0 }, 2).unwrap();
        let mut g = p.zero_grid();
        for (v, (x, y)) in g.values.iter_mut().zip(p.grid_points()) {
            *v = 3.0 + (2.0 * PI * 3.0 * x).cos() + (2.0 * PI * y).sin();
        }
        let c = p.analyze(&g).unwrap();
        let slot = p.position(&SpectralIndex::Torus { k1: 0, k2: -1 }).unwrap();
        for (i, v) in c.iter().enumerate() {
            let want = if i == slot { 1.0 / 2f64.sqrt() } else { 0.0 };
            assert!((v - want).abs() < 1e-13, "slot {i}: {v}");
        }
    }

    #[test]
    fn dealias_mask() {
        let p = BasisPlan::new(Geometry::Torus { length: 1.0 }, 8).unwrap();
        let mut c = p.zero_coeffs();
        let hi = p.position(&SpectralIndex::Torus { k1: 7, k2: 0 }).unwrap();
        let lo = p.position(&SpectralIndex::Torus { k1: 5, k2: -5 }).unwrap();
        c[hi] = 1.0;
        c[lo] = 2.0;
        let d = p.dealias(&c);
        assert_eq!(d[hi], 0.0);
        assert_eq!(d[lo], 2.0);
        let s = BasisPlan::new(Geometry::Sphere, 8).unwrap();
        let c = random_coeffs(&s, 3);
        assert_eq!(s.dealias(&c), c);
    }

    #[test]
    fn sphere_eigenvalue_sums() {
        let p = BasisPlan::new(Geometry::Sphere, 21).unwrap();
        let mut sum = 0.0;
        for (i, l) in p.eigenvalues().iter().enumerate() {
            sum += l;
            let n = (i + 1) as f64;
            assert!(sum >= n * n / 2.0);
        }
    }

    #[test]
    fn shape_errors() {
        let p = BasisPlan::new(Geometry::Sphere, 3).unwrap();
        assert!(p.synthesize(&ScalarCoeffs::zeros(2)).is_err());
        assert!(p.analyze(&GridField::zeros(2, 2)).is_err());
    }
}
