//! Property tests of the operator and noise invariants on random fields.

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;
use scbf_core::noise::{NoiseConfig, OuStream};
use scbf_core::rds::{hausdorff_points, uniform_ball, SpaceTag};
use scbf_core::spectral::{
    convective_term, damping_term, inner_h, leray_project, norm_a, norm_h, norm_h2, norm_lp, norm_v, norm_v2,
    norm_v_dual, project_pm, project_qm, random_field, trilinear, SpectralField,
};
use scbf_core::Basis;

type Field = SpectralField<f64>;

fn basis(k: u32) -> Arc<Basis> {
    Basis::new(k).unwrap()
}

fn field(b: &Arc<Basis>, seed: u64, scale: f64) -> Field {
    let mut u = random_field(b, &mut Pcg64Mcg::seed_from_u64(seed), |l| 1.0 / (1.0 + l as f64));
    u.scale(scale / norm_h(&u));
    u
}

/// Gradient of a random potential plus a solenoidal field.
fn raw_field(b: &Arc<Basis>, seed: u64) -> Field {
    let u = field(b, seed, 1.0);
    let phi = field(b, seed ^ 0x5555, 1.0);
    let s = b.spectrum();
    let mut c = u.into_coeffs();
    for &i in s.upper() {
        let j = s.conj_index(i);
        let w = s.mode(i);
        let p = phi.mode_amplitude(i);
        for (d, k) in [(0, w.k1), (1, w.k2)] {
            let g = num_complex::Complex::new(0.0, k as f64) * p;
            c[i][d] += g;
            c[j][d] += g.conj();
        }
    }
    Field::from_coeffs(b, c).unwrap()
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn leray_is_idempotent(seed in any::<u64>(), k in 2u32..10) {
        let b = basis(k);
        let p = leray_project(&raw_field(&b, seed));
        let pp = leray_project(&p);
        prop_assert!((&pp - &p).max_abs() <= 1e-14 * p.max_abs());
    }

    #[test]
    fn poincare_inequalities(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let b = basis(8);
        let u = field(&b, seed, scale);
        let l1 = b.lambda1();
        prop_assert!(norm_v2(&u) >= l1 * norm_h2(&u) * (1.0 - 1e-15));
        prop_assert!(norm_a(&u).powi(2) >= l1 * norm_v2(&u) * (1.0 - 1e-15));
    }

    #[test]
    fn convection_is_skew(seed in any::<u64>()) {
        let b = basis(8);
        let (u, v, w) = (field(&b, seed, 1.0), field(&b, seed.wrapping_add(1), 1.0), field(&b, seed.wrapping_add(2), 1.0));
        let scale = norm_v(&u) * norm_v(&v) * norm_v(&w);
        prop_assert!(trilinear(&u, &v, &v).unwrap().abs() <= 1e-10 * norm_v(&u) * norm_v2(&v));
        let anti = trilinear(&u, &v, &w).unwrap() + trilinear(&u, &w, &v).unwrap();
        prop_assert!(anti.abs() <= 1e-10 * scale);
    }

    #[test]
    fn ladyzhenskaya(seed in any::<u64>(), k in 1u32..12) {
        let b = basis(k);
        let u = field(&b, seed, 1.0);
        let bound = 2f64.powf(0.25) * (norm_h(&u) * norm_v(&u)).sqrt();
        prop_assert!(norm_lp(&u, 4.0).unwrap() <= bound);
    }

    #[test]
    fn damping_is_monotone(seed in any::<u64>(), r in 1.0f64..5.0, a in -1.0f64..1.0, c in -1.0f64..1.0) {
        let b = basis(6);
        let u = field(&b, seed, 10f64.powf(a));
        let v = field(&b, seed.wrapping_add(7), 10f64.powf(c));
        let dc = &damping_term(&u, r).unwrap() - &damping_term(&v, r).unwrap();
        let du = &u - &v;
        prop_assert!(inner_h(&dc, &du).unwrap() >= -1e-10 * norm_h(&dc) * norm_h(&du));
    }

    #[test]
    fn convective_dual_norm_bound(seed in any::<u64>(), scale in 1e-2f64..1e2) {
        let b = basis(8);
        let u = field(&b, seed, scale);
        let bu = convective_term(&u, &u).unwrap();
        prop_assert!(norm_v_dual(&bu) <= 2f64.sqrt() * norm_h(&u) * norm_v(&u));
    }

    #[test]
    fn projections_split_orthogonally(seed in any::<u64>(), frac in 0.0f64..1.0) {
        let b = basis(8);
        let u = field(&b, seed, 1.0);
        let m = (frac * b.len() as f64) as usize;
        let (p, q) = (project_pm(&u, m).unwrap(), project_qm(&u, m).unwrap());
        prop_assert_eq!((&(&p + &q) - &u).max_abs(), 0.0);
        prop_assert!(inner_h(&p, &q).unwrap().abs() <= 1e-15);
        prop_assert!((norm_v2(&p) + norm_v2(&q) - norm_v2(&u)).abs() <= 1e-13 * norm_v2(&u));
    }

    #[test]
    fn hausdorff_triangle_inequality(seed in any::<u64>(), na in 1usize..6, nb in 1usize..6, nc in 1usize..6) {
        let b = basis(4);
        let mut rng = Pcg64Mcg::seed_from_u64(seed);
        let a = uniform_ball(&b, 1.0, na, &mut rng);
        let bb = uniform_ball(&b, 2.0, nb, &mut rng);
        let c = uniform_ball(&b, 1.5, nc, &mut rng);
        for tag in [SpaceTag::H, SpaceTag::V] {
            let ac = hausdorff_points(&a, &c, tag).unwrap();
            let ab = hausdorff_points(&a, &bb, tag).unwrap();
            let bc = hausdorff_points(&bb, &c, tag).unwrap();
            prop_assert!(ac <= (ab + bc) * (1.0 + 1e-14));
            prop_assert_eq!(hausdorff_points(&a, &a, tag).unwrap(), 0.0);
        }
    }

    #[test]
    fn ball_samples_stay_inside(seed in any::<u64>(), radius in 0.1f64..100.0) {
        let b = basis(5);
        for u in uniform_ball(&b, radius, 8, &mut Pcg64Mcg::seed_from_u64(seed)) {
            prop_assert!(norm_h(&u) <= radius * (1.0 + 1e-14));
        }
    }
}

proptest! {
    #![proptest_config(cases(16))]

    /// Streams started at different times trace the same two-sided path.
    #[test]
    fn noise_path_is_independent_of_start(seed in any::<u64>(), lag in 1i64..50) {
        let b = basis(4);
        let cfg = NoiseConfig::new(0.5, 2.0, 1.0, seed);
        let dt = 0.01;
        let mut early = OuStream::<f64>::new(&b, &cfg, -(lag as f64) * dt, dt).unwrap();
        for _ in 0..lag {
            early.advance();
        }
        let late = OuStream::<f64>::new(&b, &cfg, 0.0, dt).unwrap();
        let (x, y) = (early.current(), late.current());
        prop_assert!((&x - &y).max_abs() <= 1e-13 * x.max_abs().max(1e-300));
    }
}

/// Empirical Gagliardo-Nirenberg constants
/// `C_p = max ||u||_{L^p} / (||u||_H^{1-2/p} ||u||_V^{2/p})` barely move when the
/// truncation doubles. The fields are resolved at both truncations, with an
/// envelope that is below 1e-7 past `|k|^2 = 64`.
#[test]
fn gagliardo_nirenberg_constants_are_resolution_stable() {
    let estimate = |k: u32, p: f64| {
        let b = basis(k);
        (0..200u64)
            .map(|s| {
                let u = random_field(&b, &mut Pcg64Mcg::seed_from_u64(s), |l| (-(l as f64) / 4.0).exp());
                norm_lp(&u, p).unwrap() / (norm_h(&u).powf(1.0 - 2.0 / p) * norm_v(&u).powf(2.0 / p))
            })
            .fold(0.0, f64::max)
    };
    for p in [4.0, 6.0, 8.0] {
        let (coarse, fine) = (estimate(8, p), estimate(16, p));
        assert!(coarse.is_finite() && coarse > 0.0);
        assert!((fine / coarse - 1.0).abs() < 0.25, "p = {p}: C_p {coarse} at K = 8, {fine} at K = 16");
    }
}
