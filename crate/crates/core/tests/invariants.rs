use std::f64::consts::PI;
use std::path::Path;

use bardina::bounds::{self, BoundVariant, Physical};
use bardina::dynamics::ForcingNorms;
use bardina::harness::Snapshot;
use bardina::hodge::{inner_weighted, trilinear_b, VelocityState};
use bardina::lyapunov::orthonormalize;
use bardina::spectral::{BasisPlan, Geometry};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn plan(torus: bool, n: usize) -> BasisPlan {
    let g = if torus { Geometry::Torus { length: 2.0 * PI } } else { Geometry::Sphere };
    BasisPlan::new(g, n).unwrap()
}

fn random(plan: &BasisPlan, seed: u64) -> VelocityState {
    VelocityState::random(plan, &mut ChaCha8Rng::seed_from_u64(seed), 2.0, true)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthesis_then_analysis_is_identity(torus in any::<bool>(), n in 2usize..14, seed in any::<u64>()) {
        let p = plan(torus, n);
        let c = random(&p, seed).psi;
        let back = p.analyze(&p.synthesize(&c).unwrap()).unwrap();
        let scale = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in c.iter().zip(back.iter()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn trilinear_form_is_antisymmetric(torus in any::<bool>(), n in 3usize..12, seed in any::<u64>()) {
        let p = plan(torus, n);
        let (u, v, w) = (random(&p, seed), random(&p, seed ^ 1), random(&p, seed ^ 2));
        let a = trilinear_b(&p, &u, &v, &w).unwrap();
        let b = trilinear_b(&p, &u, &w, &v).unwrap();
        prop_assert!((a + b).abs() <= 1e-11 * (1.0 + a.abs()));
        prop_assert!(trilinear_b(&p, &u, &v, &v).unwrap().abs() <= 1e-11);
    }

    #[test]
    fn orthonormalized_ensemble_has_identity_gram(torus in any::<bool>(), k in 1usize..6, alpha in 0.1f64..2.0, seed in any::<u64>()) {
        let p = plan(torus, 6);
        let vs: Vec<VelocityState> = (0..k).map(|i| random(&p, seed.wrapping_add(i as u64))).collect();
        let (q, r) = orthonormalize(&p, &vs, alpha).unwrap();
        prop_assert_eq!(r.len(), k);
        for i in 0..k {
            for j in 0..k {
                let g = inner_weighted(&p, &q[i], &q[j], alpha).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - want).abs() <= 1e-10, "gram[{i}][{j}] = {g}");
            }
        }
    }

    #[test]
    fn snapshot_bytes_roundtrip(torus in any::<bool>(), n in 1usize..10, t in 0.0f64..1e3, seed in any::<u64>()) {
        let p = plan(torus, n);
        let s = random(&p, seed);
        let snap = Snapshot::new(&p, &s, t, 0.1, 0.2, 0.3).unwrap();
        let back = Snapshot::from_bytes(&snap.to_bytes(), Path::new("mem")).unwrap();
        prop_assert_eq!(back.state(&p).unwrap(), s);
        prop_assert_eq!(back.meta.t.to_bits(), t.to_bits());
    }

    #[test]
    fn closed_form_bounds_are_linear_in_forcing(nu in 0.01f64..2.0, alpha in 0.05f64..3.0, f in 0.01f64..10.0, k in 0.1f64..10.0) {
        let p = Physical { nu, alpha, sigma: 0.1 };
        let one = ForcingNorms { f1: f, ..Default::default() };
        let scaled = ForcingNorms { f1: k * f, ..Default::default() };
        for (g, v) in [(Geometry::Sphere, BoundVariant::Sphere), (Geometry::Torus { length: 3.0 }, BoundVariant::Torus)] {
            let a = bounds::attractor_bound(p, g, &one, v).unwrap();
            let b = bounds::attractor_bound(p, g, &scaled, v).unwrap();
            prop_assert!((b - k * a).abs() <= 1e-12 * b.abs());
        }
    }
}
