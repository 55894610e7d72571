//! Randomized invariants across modules.

use proptest::prelude::*;
use tht_core::discretization::{uniform_matrix, GridShift, OperatorMatrix, UniformParams};
use tht_core::geometry::{bracket_limit, MaximalV, Side, Unit};
use tht_core::hilbert::{hilbert_indicator, pv_hilbert_fn};
use tht_core::quadrature::QuadratureOptions;
use tht_core::spectrum::{compute_svd, transition_profile, zero_count};
use tht_core::sturm::{frobenius_coefficients, match_log_basis};
use tht_core::verify::log_singularity_fit;
use tht_core::{Configuration, SampledFunction};

fn configuration() -> impl Strategy<Value = Configuration> {
    (-3.0..1.0f64, 0.3..3.0f64, 0.3..3.0f64, 0.3..3.0f64)
        .prop_map(|(a1, g1, g2, g3)| Configuration::new(a1, a1 + g1, a1 + g1 + g2, a1 + g1 + g2 + g3).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_of_u_and_v_is_one_at_every_endpoint(cfg in configuration()) {
        for (i, &a) in cfg.endpoints().iter().enumerate() {
            let side = if i == 3 { Side::Left } else { Side::Right };
            let b = bracket_limit(&Unit, &MaximalV(&cfg), &cfg, a, side);
            prop_assert!((b - 1.0).abs() < 1e-6, "endpoint {i}: {b}");
        }
    }

    #[test]
    fn bounded_series_is_side_independent(cfg in configuration(), lambda in -200.0..200.0f64, anchor in 1usize..=3) {
        let l = frobenius_coefficients(&cfg, lambda, anchor, Side::Left, 20).unwrap();
        let r = frobenius_coefficients(&cfg, lambda, anchor, Side::Right, 20).unwrap();
        prop_assert_eq!(&l.b, &r.b);
        let a = cfg.endpoints()[anchor];
        let s = a - cfg.sigma();
        let b1 = (lambda - 2.0 * s * s) / cfg.eval_dp(a);
        prop_assert!((l.b[1] - b1).abs() <= 1e-12 * b1.abs().max(1.0));
        prop_assert!(l.k != 0.0);
    }

    #[test]
    fn log_basis_recovers_its_own_elements(cfg in configuration(), lambda in -100.0..100.0f64, anchor in 1usize..=3) {
        let side = if anchor == 3 { Side::Left } else { Side::Right };
        let e = frobenius_coefficients(&cfg, lambda, anchor, side, 40).unwrap();
        let x = cfg.endpoints()[anchor] + side.sign() * cfg.min_gap() / 10.0;
        let (c1, c2) = match_log_basis(&e, x, e.psi1(x), 1e8).unwrap();
        prop_assert!((c1 - 1.0).abs() < 1e-9 && c2.abs() < 1e-9);
        let (c1, c2) = match_log_basis(&e, x, e.psi2(x), 1e8).unwrap();
        prop_assert!(c1.abs() < 1e-9 && (c2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn transform_of_constant_is_the_indicator_formula(a in -2.0..2.0f64, len in 0.5..4.0f64, s in 0.02..0.98f64) {
        let b = a + len;
        let x = a + s * len;
        let got = pv_hilbert_fn(|_| 1.0, &[a, b], x, &QuadratureOptions::default()).unwrap();
        let want = hilbert_indicator(a, b, x).unwrap();
        prop_assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn uniform_spectra_lie_in_the_unit_interval(
        k in (2usize..20, 2usize..20, 2usize..20),
        step in 0.05..0.3f64,
        a1 in -2.0..2.0f64,
    ) {
        // endpoints on the step lattice, so the shifted grids interleave
        let (k1, k2, k3) = k;
        let a = |j: usize| a1 + step * j as f64;
        let cfg = Configuration::new(a1, a(k1), a(k1 + k2), a(k1 + k2 + k3)).unwrap();
        let n = (k1 + k2).max(k2 + k3) + 1;
        let m = uniform_matrix(&cfg, &UniformParams { n, step, shift: GridShift::Interleaved }).unwrap();
        let s = compute_svd(&m).unwrap();
        prop_assert!(s.sigmas.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.sigmas.iter().all(|&v| (0.0..=1.0 + 5e-3).contains(&v)), "{:?}", &s.sigmas[..3]);
        let (dl, dr) = s.orthonormality_defect();
        prop_assert!(dl < 1e-8 && dr < 1e-8);
        let neg = OperatorMatrix { entries: -&m.entries, ..m.clone() };
        let t = compute_svd(&neg).unwrap();
        for (a, b) in s.sigmas.iter().zip(&t.sigmas) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let p = transition_profile(&s.sigmas, 0.1, 0.9).unwrap();
        prop_assert_eq!(p.near_one + p.transition + p.near_zero, n);
    }

    #[test]
    fn constant_sign_vectors_have_no_zeros(v in proptest::collection::vec(0.01..5.0f64, 3..50), neg in any::<bool>()) {
        let x: Vec<f64> = (0..v.len()).map(|i| i as f64).collect();
        let v: Vec<f64> = v.iter().map(|a| if neg { -a } else { *a }).collect();
        prop_assert_eq!(zero_count(&x, &v, (-1.0, v.len() as f64), 1e-6), 0);
    }

    #[test]
    fn log_fit_recovers_exact_coefficients(c1 in -3.0..3.0f64, c2 in -3.0..3.0f64, anchor in -1.0..1.0f64) {
        let x: Vec<f64> = (1..120).map(|i| anchor + 0.007 * i as f64).collect();
        let v: Vec<f64> = x.iter().map(|x| c1 + c2 * (x - anchor).ln()).collect();
        prop_assume!(v.iter().any(|a| a.abs() > 1e-3));
        let fit = log_singularity_fit(&x, &v, anchor, Side::Right, (0.005, 0.9)).unwrap();
        prop_assert!((fit.c1 - c1).abs() < 1e-10 && (fit.c2 - c2).abs() < 1e-10);
    }
}

#[test]
fn matrix_and_samples_survive_a_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Configuration::default();
    let m = uniform_matrix(
        &cfg,
        &UniformParams {
            n: 31,
            step: 0.2,
            shift: GridShift::Interleaved,
        },
    )
    .unwrap();
    let path = dir.path().join("m.bin");
    m.save(&path).unwrap();
    assert_eq!(OperatorMatrix::load(&path).unwrap(), m);

    let rule = tht_core::quadrature::CompositeRule::graded(&[1.5, 6.0, 7.5], &QuadratureOptions::default());
    let f = SampledFunction::from_rule(&rule, |x| (x - 6.0f64).abs().ln());
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    let g = SampledFunction::read_csv(std::io::BufReader::new(&buf[..])).unwrap();
    assert_eq!(f.nodes, g.nodes);
    assert_eq!(f.values, g.values);
}
