//! Real Fourier basis on the square torus `[0, L]²`.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::SpectralIndex;

/// One cosine/sine pair sharing the wavevector `k` from the upper half plane.
#[derive(Clone, Copy)]
struct Pair {
    k1: i64,
    k2: i64,
    cos_slot: usize,
    sin_slot: usize,
}

#[derive(Clone)]
pub(crate) struct TorusBasis {
    pub length: f64,
    pub n: usize,
    pairs: Vec<Pair>,
    slots: HashMap<(i64, i64), usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn upper(k1: i64, k2: i64) -> bool {
    k1 > 0 || (k1 == 0 && k2 > 0)
}

impl TorusBasis {
    pub fn new(length: f64, n: usize, indices: &[SpectralIndex]) -> Self {
        let mut slots = HashMap::new();
        for (i, ix) in indices.iter().enumerate() {
            if let SpectralIndex::Torus { k1, k2 } = *ix {
                slots.insert((k1, k2), i);
            }
        }
        let mut pairs: Vec<Pair> = indices
            .iter()
            .filter_map(|ix| match *ix {
                SpectralIndex::Torus { k1, k2 } if upper(k1, k2) => Some(Pair {
                    k1,
                    k2,
                    cos_slot: slots[&(k1, k2)],
                    sin_slot: slots[&(-k1, -k2)],
                }),
                _ => None,
            })
            .collect();
        pairs.sort_by_key(|p| p.cos_slot);
        let mut planner = FftPlanner::new();
        TorusBasis {
            length,
            n,
            pairs,
            slots,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn position(&self, k1: i64, k2: i64) -> Option<usize> {
        self.slots.get(&(k1, k2)).copied()
    }

    pub fn cell_area(&self) -> f64 {
        (self.length / self.n as f64).powi(2)
    }

    #[inline]
    fn wrap(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    fn fft2(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        for row in data.chunks_exact_mut(n) {
            fft.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = data[r * n + c];
            }
            fft.process(&mut col);
            for r in 0..n {
                data[r * n + c] = col[r];
            }
        }
    }

    /// Grid samples of the field, or of its derivative along axis `d` (0 = x, 1 = y).
    pub fn synthesize(&self, coeffs: &[f64], derivative: Option<usize>) -> Vec<f64> {
        let n = self.n;
        let mut spec = vec![Complex64::new(0.0, 0.0); n * n];
        let amp = SQRT_2 / (2.0 * self.length);
        let kappa = 2.0 * PI / self.length;
        for p in &self.pairs {
            let mut z = Complex64::new(coeffs[p.cos_slot], -coeffs[p.sin_slot]) * amp;
            if let Some(d) = derivative {
                let k = if d == 0 { p.k1 } else { p.k2 };
                z *= Complex64::new(0.0, kappa * k as f64);
            }
            spec[self.wrap(p.k2) * n + self.wrap(p.k1)] = z;
            spec[self.wrap(-p.k2) * n + self.wrap(-p.k1)] = z.conj();
        }
        self.fft2(&mut spec, &self.inverse);
        spec.into_iter().map(|z| z.re).collect()
    }

    /// Quadrature of `a·φ + b·∂ₓφ + c·∂ᵧφ` against every basis function.
    pub fn analyze(&self, a: Option<&[f64]>, b: Option<&[f64]>, c: Option<&[f64]>, ncoef: usize) -> Vec<f64> {
        let n = self.n;
        let transform = |f: Option<&[f64]>| {
            f.map(|f| {
                let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                self.fft2(&mut buf, &self.forward);
                buf
            })
        };
        let (fa, fb, fc) = (transform(a), transform(b), transform(c));
        let kappa = 2.0 * PI / self.length;
        let scale = SQRT_2 * self.length / (n * n) as f64;
        let mut out = vec![0.0; ncoef];
        for p in &self.pairs {
            let at = self.wrap(p.k2) * n + self.wrap(p.k1);
            let mut s = Complex64::new(0.0, 0.0);
            if let Some(f) = &fa {
                s += f[at];
            }
            if let Some(f) = &fb {
                s -= Complex64::new(0.0, kappa * p.k1 as f64) * f[at];
            }
            if let Some(f) = &fc {
                s -= Complex64::new(0.0, kappa * p.k2 as f64) * f[at];
            }
            out[p.cos_slot] = scale * s.re;
            out[p.sin_slot] = -scale * s.im;
        }
        out
    }
}
