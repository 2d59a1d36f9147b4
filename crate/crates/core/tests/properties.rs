use std::sync::Arc;

use conformal_drift::bubbles::BubbleParams;
use conformal_drift::conformal::{blowup_rescale, transform_system, volumetric_momentum, GeneralCoefficients, UniformCoefficients};
use conformal_drift::diagnostics::{select_concentration_points, verify_selection};
use conformal_drift::driftsystem::{floor_at_point, reference_problem, scalar_residual, vector_residual, FloorSearch};
use conformal_drift::fieldcalc::ops::{arc, integrate, lame_symmetry_defect};
use conformal_drift::fieldcalc::random::{band_limited_positive, band_limited_scalar, band_limited_vector};
use conformal_drift::fieldcalc::{FieldSampler, Grid, PointEval, ScalarField, SobolevExponents, TorusGrid, VectorField, VectorFieldSampler, VectorPointEval};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn torus(n: usize, m: usize) -> Arc<Grid> {
    arc(Grid::Torus(TorusGrid::unit(n, m).unwrap()))
}

fn coeffs() -> impl Strategy<Value = UniformCoefficients> {
    (0.1..2.0f64, 0.1..2.0f64, 0.0..1.0f64, 0.0..0.5f64, -0.5..0.5f64, 0.0..1.0f64, -1.0..1.0f64)
        .prop_map(|(h, f, rho1, rho2, b, c, d)| UniformCoefficients { h, f, rho1, rho2, b, c, d })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn unit_factor_transform_is_identity(seed in any::<u64>(), k in coeffs(), n in 3usize..=4) {
        let g = torus(n, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = band_limited_positive(g.clone(), &mut rng, 2, 3, 0.5, 0.5);
        let w = band_limited_vector(g.clone(), &mut rng, 2, 3);
        let gc = GeneralCoefficients::uniform(g.clone(), k);
        let t = transform_system(&ScalarField::constant(g, 1.0), &gc, &u, &w).unwrap();
        prop_assert_eq!(t.v.data(), u.data());
        prop_assert_eq!(t.z.comps(), w.comps());
        for (a, b) in [(&t.coeffs.h, &gc.h), (&t.coeffs.f, &gc.f), (&t.coeffs.rho1, &gc.rho1), (&t.coeffs.b, &gc.b), (&t.coeffs.c, &gc.c), (&t.coeffs.d, &gc.d)] {
            prop_assert_eq!(a.data(), b.data());
        }
        prop_assert_eq!(t.coeffs.psi.comps(), gc.psi.comps());
        prop_assert_eq!(t.coeffs.y.comps(), gc.y.comps());
    }

    #[test]
    fn rescale_composition(
        seed in any::<u64>(),
        mu1 in 0.2..0.9f64,
        mu2 in 0.2..0.9f64,
        c in prop::array::uniform3(0.0..1.0f64),
        x in prop::array::uniform3(-0.4..0.4f64),
    ) {
        let g = torus(3, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Arc<dyn PointEval> = Arc::new(FieldSampler::new(&band_limited_positive(g.clone(), &mut rng, 2, 3, 1.0, 0.5)));
        let w: Arc<dyn VectorPointEval> = Arc::new(VectorFieldSampler::new(&band_limited_vector(g.clone(), &mut rng, 2, 3)));
        let r1 = blowup_rescale(u.clone(), w.clone(), &g, &c, mu1, 0.45, None).unwrap();
        let r2 = blowup_rescale(Arc::new(r1.v), Arc::new(r1.z), &g, &[0.0; 3], mu2, 0.45, None).unwrap();
        let r12 = blowup_rescale(u, w, &g, &c, mu1 * mu2, 0.45, None).unwrap();
        prop_assert!((r2.v.value(&x).unwrap() - r12.v.value(&x).unwrap()).abs() <= 1e-8);
        prop_assert!(max_diff(&r2.v.hessian(&x).unwrap(), &r12.v.hessian(&x).unwrap()) <= 1e-8);
        prop_assert!(max_diff(&r2.z.value(&x).unwrap(), &r12.z.value(&x).unwrap()) <= 1e-8);
        prop_assert!(max_diff(&r2.z.jacobian(&x).unwrap(), &r12.z.jacobian(&x).unwrap()) <= 1e-8);
    }

    #[test]
    fn volumetric_momentum_ignores_weighted_mean_zero_shifts(seed in any::<u64>(), s in -5.0..5.0f64) {
        let g = torus(3, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau = band_limited_scalar(g.clone(), &mut rng, 2, 4);
        let lapse = band_limited_positive(g.clone(), &mut rng, 2, 3, 0.5, 0.5);
        let vol = band_limited_positive(g.clone(), &mut rng, 2, 3, 0.5, 0.5);
        let r = band_limited_scalar(g, &mut rng, 3, 4);
        let nv = lapse.mul(&vol).unwrap();
        let mean = integrate(&nv.mul(&r).unwrap()) / integrate(&nv);
        let shift = r.map(|v| s * (v - mean));
        let t0 = volumetric_momentum(&tau, &lapse, &vol).unwrap();
        let t1 = volumetric_momentum(&tau.add(&shift).unwrap(), &lapse, &vol).unwrap();
        prop_assert!((t0 - t1).abs() <= 1e-12 * (1.0 + t0.abs()), "{} vs {}", t0, t1);
    }

    #[test]
    fn lame_form_is_symmetric(seed in any::<u64>(), n in 3usize..=4) {
        let g = torus(n, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = band_limited_vector(g.clone(), &mut rng, 3, 4);
        let y = band_limited_vector(g, &mut rng, 3, 4);
        prop_assert!(lame_symmetry_defect(&x, &y).unwrap() <= 1e-10);
    }

    #[test]
    fn floor_is_monotone_in_a(h in 0.1..10.0f64, f in 0.1..10.0f64, b in 0.0..1.0f64, a1 in 0.0..5.0f64, da in 0.0..5.0f64, n in 3usize..=5) {
        let q = SobolevExponents::new(n).unwrap().q();
        let s = FloorSearch::default();
        match (floor_at_point(q, h, f, a1, b, &s), floor_at_point(q, h, f, a1 + da, b, &s)) {
            (Some(e1), Some(e2)) => prop_assert!(e1 <= e2 * (1.0 + 1e-12), "{} > {}", e1, e2),
            (None, Some(_)) => prop_assert!(false, "larger a cannot become feasible"),
            _ => {}
        }
    }

    #[test]
    fn strong_ellipticity_symbol(n in 3usize..=5, xi in prop::collection::vec(-1.0..1.0f64, 5), eta in prop::collection::vec(-1.0..1.0f64, 5)) {
        let (xi, eta) = (&xi[..n], &eta[..n]);
        let nx: f64 = xi.iter().map(|v| v * v).sum();
        let ne: f64 = eta.iter().map(|v| v * v).sum();
        prop_assume!(nx > 1e-6 && ne > 1e-6);
        let dot: f64 = xi.iter().zip(eta).map(|(a, b)| a * b).sum::<f64>() / (nx * ne).sqrt();
        let symbol = 1.0 + (1.0 - 2.0 / n as f64) * dot * dot;
        prop_assert!(symbol >= 1.0);
    }

    #[test]
    fn bubble_peak_and_scaling(n in 3usize..=5, f0 in 0.5..4.0f64, mu in 0.01..1.0f64, r in 0.0..3.0f64) {
        let e = (n as f64 - 2.0) / 2.0;
        let b = BubbleParams::standard(n, f0).with_mu(mu).b_profile();
        let b1 = BubbleParams::standard(n, f0).with_mu(1.0).b_profile();
        let mut x = vec![0.0; n];
        prop_assert!((b.eval(&x) * mu.powf(e) - 1.0).abs() <= 1e-12);
        x[0] = r * mu;
        let mut y = vec![0.0; n];
        y[0] = r;
        // B_μ(μy) = μ^{-(n-2)/2} B_1(y)
        let lhs = b.eval(&x) * mu.powf(e);
        prop_assert!((lhs - b1.eval(&y)).abs() <= 1e-12 * b1.eval(&y).max(1e-300), "{} vs {}", lhs, b1.eval(&y));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn constant_shift_of_w_leaves_residuals(seed in any::<u64>(), shift in prop::array::uniform3(-1.0..1.0f64)) {
        let (sys, _, _) = reference_problem(3, 8).unwrap();
        let g = sys.general.grid().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = band_limited_positive(g.clone(), &mut rng, 2, 3, 0.8, 0.2);
        let w = band_limited_vector(g.clone(), &mut rng, 2, 3).scale(0.1);
        let ws = w.add(&VectorField::from_fn(g, |_| shift.to_vec())).unwrap();
        let s0 = scalar_residual(&u, &w, &sys.general).unwrap();
        let s1 = scalar_residual(&u, &ws, &sys.general).unwrap();
        prop_assert!(max_diff(s0.data(), s1.data()) <= 1e-12 * (1.0 + s0.sup()));
        let v0 = vector_residual(&u, &w, &sys.physical).unwrap();
        let v1 = vector_residual(&u, &ws, &sys.physical).unwrap();
        for (a, b) in v0.comps().iter().zip(v1.comps()) {
            prop_assert!(max_diff(a, b) <= 1e-12 * (1.0 + v0.sup()));
        }
    }

    #[test]
    fn selection_invariants_hold(seed in any::<u64>(), n in 3usize..=4) {
        let g = torus(n, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = band_limited_positive(g, &mut rng, 2, 4, 0.5, 2.0);
        let set = select_concentration_points(&u).unwrap();
        prop_assert!(!set.points.is_empty());
        let check = verify_selection(&set);
        prop_assert!(check.separation_ok && check.critical_ok, "{:?}", check);
    }
}
