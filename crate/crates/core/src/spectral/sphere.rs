//! Real orthonormal spherical harmonics on the unit sphere.
//!
//! Storage convention for a real field:
//!
//! ```text
//! Y(n, 0)  =      P̄(n, 0)(cos θ)
//! Y(n, m)  = √2 · P̄(n, m)(cos θ) · cos(m φ)     m > 0
//! Y(n, -m) = √2 · P̄(n, m)(cos θ) · sin(m φ)     m > 0
//! ```
//!
//! where `P̄` carries the Condon–Shortley phase and is normalised so that every
//! `Y` has unit L² norm on the sphere. Transforms use Gauss–Legendre latitudes
//! and an FFT in longitude.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::quadrature::gauss_legendre;

#[derive(Clone)]
pub(crate) struct SphereBasis {
    pub lmax: usize,
    pub nlat: usize,
    pub nlon: usize,
    /// cos θ at each latitude (descending).
    pub cos_theta: Vec<f64>,
    pub sin_theta: Vec<f64>,
    /// Gauss weights times 2π / nlon: the area element of each grid cell.
    pub cell_weight: Vec<f64>,
    /// `P̄(n, m)` at each latitude; layout `[lat][pair(n, m)]`.
    legendre: Vec<f64>,
    /// `dP̄(n, m)/dθ` with the same layout.
    legendre_dtheta: Vec<f64>,
    npairs: usize,
    /// Coefficient slot of `(n, m)`: `slot[n * (2 lmax + 1) + m + lmax]`.
    slot: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Which latitude table feeds a synthesis.
#[derive(Clone, Copy)]
pub(crate) enum LatTable {
    Value,
    DTheta,
}

impl SphereBasis {
    pub fn new(lmax: usize, nlat: usize, nlon: usize, slot: Vec<usize>) -> Self {
        let (cos_theta, gauss_w) = gauss_legendre(nlat);
        let sin_theta: Vec<f64> = cos_theta
            .iter()
            .map(|&x| ((1.0 - x) * (1.0 + x)).sqrt())
            .collect();
        let dphi = 2.0 * PI / nlon as f64;
        let cell_weight = gauss_w.iter().map(|w| w * dphi).collect();

        let npairs = (lmax + 1) * (lmax + 2) / 2;
        let mut legendre = vec![0.0; nlat * npairs];
        let mut legendre_dtheta = vec![0.0; nlat * npairs];
        for j in 0..nlat {
            let (x, s) = (cos_theta[j], sin_theta[j]);
            let row = &mut legendre[j * npairs..(j + 1) * npairs];
            fill_legendre(lmax, x, s, row);
            let drow = &mut legendre_dtheta[j * npairs..(j + 1) * npairs];
            for m in 0..=lmax {
                for n in m..=lmax {
                    let p = row[pair(lmax, n, m)];
                    let prev = if n > m { row[pair(lmax, n - 1, m)] } else { 0.0 };
                    let (nf, mf) = (n as f64, m as f64);
                    let e = if n > m {
                        ((2.0 * nf + 1.0) / (2.0 * nf - 1.0) * (nf * nf - mf * mf)).sqrt()
                    } else {
                        0.0
                    };
                    drow[pair(lmax, n, m)] = (nf * x * p - e * prev) / s;
                }
            }
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(nlon);
        let inverse = planner.plan_fft_inverse(nlon);
        SphereBasis {
            lmax,
            nlat,
            nlon,
            cos_theta,
            sin_theta,
            cell_weight,
            legendre,
            legendre_dtheta,
            npairs,
            slot,
            forward,
            inverse,
        }
    }

    #[inline]
    fn slot(&self, n: usize, m: isize) -> usize {
        self.slot[n * (2 * self.lmax + 1) + (m + self.lmax as isize) as usize]
    }

    #[inline]
    fn table(&self, kind: LatTable, j: usize) -> &[f64] {
        let t = match kind {
            LatTable::Value => &self.legendre,
            LatTable::DTheta => &self.legendre_dtheta,
        };
        &t[j * self.npairs..(j + 1) * self.npairs]
    }

    /// Grid samples of `Σ c · T(n, m) · trig(m φ)`, optionally differentiated
    /// in φ and divided by sin θ.
    pub fn synthesize(&self, coeffs: &[f64], kind: LatTable, dphi_over_sin: bool) -> Vec<f64> {
        let (l, nlon) = (self.lmax, self.nlon);
        let mut out = vec![0.0; self.nlat * nlon];
        let mut buf = vec![Complex64::new(0.0, 0.0); nlon];
        let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..self.nlat {
            let table = self.table(kind, j);
            buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for m in 0..=l {
                let mut z = Complex64::new(0.0, 0.0);
                for n in m.max(1)..=l {
                    let t = table[pair(l, n, m)];
                    if m == 0 {
                        z.re += coeffs[self.slot(n, 0)] * t;
                    } else {
                        z.re += coeffs[self.slot(n, m as isize)] * t;
                        z.im -= coeffs[self.slot(n, -(m as isize))] * t;
                    }
                }
                if m > 0 {
                    // √2 / 2 on each of the ±m entries.
                    z *= sqrt_half;
                }
                if dphi_over_sin {
                    z *= Complex64::new(0.0, m as f64);
                }
                buf[m] += z;
                if m > 0 {
                    buf[nlon - m] += z.conj();
                }
            }
            self.inverse.process(&mut buf);
            let scale = if dphi_over_sin { 1.0 / self.sin_theta[j] } else { 1.0 };
            for (o, z) in out[j * nlon..(j + 1) * nlon].iter_mut().zip(&buf) {
                *o = z.re * scale;
            }
        }
        out
    }

    /// Quadrature of `a·Y + b·∂θY + c·(1/sin θ)∂φY` against every basis function.
    pub fn analyze(&self, a: Option<&[f64]>, b: Option<&[f64]>, c: Option<&[f64]>, ncoef: usize) -> Vec<f64> {
        let (l, nlon) = (self.lmax, self.nlon);
        let mut out = vec![0.0; ncoef];
        let spectra = |field: Option<&[f64]>, j: usize| -> Option<Vec<Complex64>> {
            field.map(|f| {
                let mut buf: Vec<Complex64> = f[j * nlon..(j + 1) * nlon]
                    .iter()
                    .map(|&v| Complex64::new(v, 0.0))
                    .collect();
                self.forward.process(&mut buf);
                buf
            })
        };
        for j in 0..self.nlat {
            let fa = spectra(a, j);
            let fb = spectra(b, j);
            let fc = spectra(c, j);
            let p = self.table(LatTable::Value, j);
            let dp = self.table(LatTable::DTheta, j);
            let inv_sin = 1.0 / self.sin_theta[j];
            let wj = self.cell_weight[j];
            for m in 0..=l {
                let scale = if m == 0 { wj } else { wj * std::f64::consts::SQRT_2 };
                let mf = m as f64;
                // cos-projection = Re F, sin-projection = -Im F.
                let (ac, as_) = fa.as_ref().map_or((0.0, 0.0), |f| (f[m].re, -f[m].im));
                let (bc, bs) = fb.as_ref().map_or((0.0, 0.0), |f| (f[m].re, -f[m].im));
                let (cc, cs) = fc.as_ref().map_or((0.0, 0.0), |f| (f[m].re, -f[m].im));
                for n in m.max(1)..=l {
                    let pv = p[pair(l, n, m)];
                    let dv = dp[pair(l, n, m)];
                    let pos = pv * ac + dv * bc - mf * pv * inv_sin * cs;
                    out[self.slot(n, m as isize)] += scale * pos;
                    if m > 0 {
                        let neg = pv * as_ + dv * bs + mf * pv * inv_sin * cc;
                        out[self.slot(n, -(m as isize))] += scale * neg;
                    }
                }
            }
        }
        out
    }
}

#[inline]
fn pair(lmax: usize, n: usize, m: usize) -> usize {
    // m-major: offset(m) = Σ_{m' < m} (lmax + 1 - m')
    m * (lmax + 1) - m * m.saturating_sub(1) / 2 + (n - m)
}

/// Normalised associated Legendre functions with Condon–Shortley phase, for
/// all `0 ≤ m ≤ n ≤ lmax`, written into `row` using [`pair`] indexing.
fn fill_legendre(lmax: usize, x: f64, s: f64, row: &mut [f64]) {
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        row[pair(lmax, m, m)] = pmm;
        if m == lmax {
            break;
        }
        let mf = m as f64;
        let mut p_prev = pmm;
        let mut p_cur = (2.0 * mf + 3.0).sqrt() * x * pmm;
        row[pair(lmax, m + 1, m)] = p_cur;
        for n in (m + 2)..=lmax {
            let nf = n as f64;
            let denom = nf * nf - mf * mf;
            let a = ((4.0 * nf * nf - 1.0) / denom).sqrt();
            let b = ((2.0 * nf + 1.0) * (nf - 1.0 - mf) * (nf - 1.0 + mf) / ((2.0 * nf - 3.0) * denom)).sqrt();
            let p_next = a * x * p_cur - b * p_prev;
            row[pair(lmax, n, m)] = p_next;
            p_prev = p_cur;
            p_cur = p_next;
        }
    }
}
