use ctmark_core::garch2d::*;
use ctmark_core::rng::SplitMix64;
use ctmark_core::special::chi2_sf;
use ctmark_core::Grid2D;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn unit(alpha0: f64, a: [f64; 3], b: [f64; 3]) -> Garch2DParams {
    Garch2DParams::new(Garch2DOrder::unit(), alpha0, a.to_vec(), b.to_vec()).unwrap()
}

fn reference_params() -> Garch2DParams {
    // alpha_{0,1} = alpha_{1,0} = 0.2, beta_{0,1} = beta_{1,0} = 0.2
    unit(0.1, [0.2, 0.2, 0.0], [0.2, 0.2, 0.0])
}

fn iid(rows: usize, cols: usize, sigma: f64, seed: u64) -> Grid2D {
    let mut g = SplitMix64::new(seed);
    Grid2D::from_fn(rows, cols, |_, _| sigma * g.next_gaussian())
}

#[test]
fn lag_sets_exclude_origin() {
    let o = Garch2DOrder::unit();
    assert_eq!(o.omega1(), vec![(0, 1), (1, 0), (1, 1)]);
    assert_eq!(o.omega2(), vec![(0, 1), (1, 0), (1, 1)]);
    assert_eq!(Garch2DOrder::new(0, 0, 0, 2).omega1(), vec![(0, 1), (0, 2)]);
    assert!(!Garch2DOrder::new(0, 0, 0, 0).is_valid());
    assert_eq!(Garch2DOrder::default(), o);
}

#[test]
fn params_reject_invalid_values() {
    let o = Garch2DOrder::unit();
    assert!(Garch2DParams::new(o, 0.0, vec![0.1; 3], vec![0.1; 3]).is_err());
    assert!(Garch2DParams::new(o, 1.0, vec![-0.1, 0.1, 0.1], vec![0.1; 3]).is_err());
    assert!(Garch2DParams::new(o, 1.0, vec![0.2; 3], vec![0.2; 3]).is_err());
    assert!(Garch2DParams::new(o, 1.0, vec![0.1; 2], vec![0.1; 3]).is_err());
    assert!(Garch2DParams::new(Garch2DOrder::new(0, 0, 0, 0), 1.0, vec![], vec![]).is_err());
}

#[test]
fn constant_recursion() {
    let f = iid(5, 7, 1.0, 1);
    let h = cond_variance_field(&f, &unit(1.0, [0.0; 3], [0.0; 3])).unwrap();
    assert!(h.data().iter().all(|&v| v == 1.0));
}

#[test]
fn hand_recursion_two_by_two() {
    let f = Grid2D::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(f.variance(), 1.25);
    let p = unit(0.1, [0.5, 0.0, 0.0], [0.0; 3]);
    let h = cond_variance_field(&f, &p).unwrap();
    let want = [0.725, 0.6, 0.725, 4.6];
    for (a, b) in h.data().iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn hand_recursion_with_variance_lag() {
    let f = Grid2D::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let p = unit(0.1, [0.0; 3], [0.0, 0.0, 0.5]);
    let h = cond_variance_field(&f, &p).unwrap();
    // only h[1][1] sees an in-range diagonal lag
    let b = 0.1 + 0.5 * 1.25;
    let want = [b, b, b, 0.1 + 0.5 * b];
    for (a, w) in h.data().iter().zip(want) {
        assert!((a - w).abs() < 1e-12);
    }
}

#[test]
fn loglik_of_zero_field() {
    let f = Grid2D::zeros(2, 2);
    let ll = loglik_given_variance(&f, &Grid2D::filled(2, 2, 1.0));
    assert!((ll + 3.675754).abs() < 1e-6);
    let f = iid(3, 3, 1.0, 2).map(|_| 0.0);
    let ll = log_likelihood(&f, &unit(1.0, [0.0; 3], [0.0; 3])).unwrap();
    assert!((ll - 9.0 * -0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
}

#[test]
fn loglik_change_of_variable() {
    let f = iid(16, 16, 1.3, 3);
    let c = 2.5f64;
    let p = unit(0.7, [0.0; 3], [0.0; 3]);
    let pc = unit(0.7 * c * c, [0.0; 3], [0.0; 3]);
    let l1 = log_likelihood(&f, &p).unwrap();
    let l2 = log_likelihood(&f.map(|v| c * v), &pc).unwrap();
    assert!((l2 - (l1 - 256.0 * c.ln())).abs() < 1e-9);
}

#[test]
fn true_params_beat_perturbed_on_average() {
    let truth = reference_params();
    let worse = unit(0.15, [0.1, 0.3, 0.05], [0.3, 0.1, 0.05]);
    let mut diff = 0.0;
    for seed in 0..50 {
        let f = simulate(&truth, 48, 48, seed).unwrap();
        diff += log_likelihood(&f, &truth).unwrap() - log_likelihood(&f, &worse).unwrap();
    }
    assert!(diff > 0.0);
}

#[test]
fn simulate_iid_variance_and_determinism() {
    let p = unit(2.0, [0.0; 3], [0.0; 3]);
    let f = simulate(&p, 256, 256, 11).unwrap();
    assert!((f.variance() / 2.0 - 1.0).abs() < 0.05);
    assert_eq!(f, simulate(&p, 256, 256, 11).unwrap());
    assert_ne!(f, simulate(&p, 256, 256, 12).unwrap());
}

#[test]
fn simulated_field_has_unconditional_variance() {
    let p = reference_params();
    let f = simulate(&p, 256, 256, 4).unwrap();
    let v = p.unconditional_variance();
    assert!((f.mean_power() / v - 1.0).abs() < 0.15, "{} vs {v}", f.mean_power());
}

#[test]
fn fit_recovers_simulated_params() {
    let truth = reference_params();
    let f = simulate(&truth, 256, 256, 21).unwrap();
    let fit = fit_mle(&f, Garch2DOrder::unit()).unwrap();
    assert!(fit.converged);
    fit.params.validate().unwrap();
    let lt = log_likelihood(&f, &truth).unwrap();
    assert!(fit.loglik >= lt - 1e-3 * f.len() as f64);
    assert!((fit.loglik - log_likelihood(&f, &fit.params).unwrap()).abs() < 1e-6 * fit.loglik.abs());
    let est = fit.params.to_vec();
    for (e, t) in est.iter().zip(truth.to_vec()) {
        assert!((e - t).abs() < 0.05, "{est:?}");
    }
}

#[test]
fn fit_on_iid_data_is_near_white() {
    for seed in 0..3 {
        let f = iid(256, 256, 1.5, 100 + seed);
        let fit = fit_mle(&f, Garch2DOrder::unit()).unwrap();
        let s2 = 1.5 * 1.5;
        assert!((fit.params.alpha0 / s2 - 1.0).abs() < 0.1, "{:?}", fit.params);
        assert!(fit.params.alpha.iter().chain(&fit.params.beta).all(|&c| c < 0.1), "{:?}", fit.params);
    }
}

#[test]
fn fit_is_deterministic_and_handles_tiny_grids() {
    let f = iid(8, 8, 1.0, 7);
    let a = fit_mle(&f, Garch2DOrder::unit()).unwrap();
    let b = fit_mle(&f, Garch2DOrder::unit()).unwrap();
    assert_eq!(a, b);
    a.params.validate().unwrap();
    assert!(a.loglik.is_finite());
}

#[test]
fn fit_rejects_degenerate_input() {
    assert!(fit_mle(&Grid2D::zeros(16, 16), Garch2DOrder::unit()).is_err());
    assert!(fit_mle(&iid(16, 16, 1.0, 1), Garch2DOrder::new(0, 0, 0, 0)).is_err());
}

#[test]
fn params_json_shape() {
    let mut p = reference_params();
    p.loglik = -12.5;
    let j = serde_json::to_value(&p).unwrap();
    assert_eq!(j["order"], serde_json::json!([1, 1, 1, 1]));
    assert_eq!(j["alpha"][0], serde_json::json!([0, 1, 0.2]));
    assert_eq!(j["beta"][1], serde_json::json!([1, 0, 0.2]));
    assert_eq!(j["loglik"], serde_json::json!(-12.5));
    let back: Garch2DParams = serde_json::from_value(j).unwrap();
    assert_eq!(back, p);
    let bad = serde_json::json!({"order":[1,1,1,1],"alpha0":1.0,"alpha":[[0,1,0.6],[1,0,0.6],[1,1,0.0]],"beta":[[0,1,0.0],[1,0,0.0],[1,1,0.0]],"loglik":null});
    assert!(serde_json::from_value::<Garch2DParams>(bad).is_err());
}

#[test]
fn scan_orders() {
    let g = Grid2D::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(scan_series(&g, ScanDir::Horizontal), vec![1.0, 2.0, 3.0, 4.0]);
    assert_eq!(scan_series(&g, ScanDir::Vertical), vec![1.0, 3.0, 2.0, 4.0]);
    assert_eq!(scan_series(&g, ScanDir::Diagonal), vec![1.0, 2.0, 3.0, 4.0]);
    let g = Grid2D::from_fn(2, 3, |i, j| (10 * i + j) as f64);
    assert_eq!(scan_series(&g, ScanDir::Diagonal), vec![0.0, 1.0, 10.0, 2.0, 11.0, 12.0]);
}

#[test]
fn chi2_sf_matches_statrs() {
    for dof in [1usize, 3, 4, 7] {
        let d = ChiSquared::new(dof as f64).unwrap();
        for x in [0.1, 1.0, 3.0, 9.5, 20.0, 60.0] {
            let want = d.sf(x);
            assert!((chi2_sf(x, dof) - want).abs() <= 1e-12 + 1e-9 * want, "dof {dof} x {x}");
        }
    }
}

#[test]
fn engle_test_size_on_iid_series() {
    let mut rejections = 0;
    for seed in 0..100 {
        let mut g = SplitMix64::new(5000 + seed);
        let x: Vec<f64> = (0..10_000).map(|_| g.next_gaussian()).collect();
        let r = lm_test_engle(&x, 4, 0.05).unwrap();
        assert_eq!(r.dof, 4);
        assert!(r.stat >= 0.0 && (0.0..=1.0).contains(&r.p_value));
        rejections += r.h as usize;
    }
    assert!((1..=10).contains(&rejections), "{rejections}");
}

#[test]
fn engle_test_power_on_garch_series() {
    // 1D GARCH(1,1): h_t = 0.1 + 0.2 x_{t-1}^2 + 0.7 h_{t-1}
    let mut g = SplitMix64::new(77);
    let mut h = 1.0;
    let mut prev = 0.0f64;
    let x: Vec<f64> = (0..10_000)
        .map(|_| {
            h = 0.1 + 0.2 * prev * prev + 0.7 * h;
            prev = h.sqrt() * g.next_gaussian();
            prev
        })
        .collect();
    let r = lm_test_engle(&x, 4, 0.05).unwrap();
    assert!(r.h && r.p_value < 1e-6, "{r:?}");
}

#[test]
fn engle_test_rejects_bad_input() {
    assert!(lm_test_engle(&[1.0; 30], 4, 0.05).is_err());
    assert!(lm_test_engle(&[1.0; 100], 4, 0.05).is_err());
}

#[test]
fn lm_2d_size_and_power() {
    let o = Garch2DOrder::unit();
    let mut null_rej = 0;
    let mut power = 0;
    for seed in 0..40 {
        let r = lm_test_2d(&iid(128, 128, 1.0, 900 + seed), o, 0.05).unwrap();
        assert_eq!(r.dof, 3);
        null_rej += r.h as usize;
        let f = simulate(&reference_params(), 128, 128, 300 + seed).unwrap();
        power += lm_test_2d(&f, o, 0.05).unwrap().h as usize;
    }
    assert!(null_rej <= 7, "{null_rej}");
    assert_eq!(power, 40);
    let f = simulate(&reference_params(), 256, 256, 1).unwrap();
    let r = lm_test_2d(&f, o, 0.05).unwrap();
    assert!(r.p_value < 1e-12);
    assert!(lm_test_2d(&Grid2D::zeros(4, 4), o, 0.05).is_err());
}

#[test]
fn lm_result_json_names() {
    let r = lm_test_2d(&iid(32, 32, 1.0, 3), Garch2DOrder::unit(), 0.05).unwrap();
    let j = serde_json::to_value(r).unwrap();
    assert!(j.get("H").is_some() && j.get("pValue").is_some() && j.get("stat").is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn variance_never_below_alpha0(
        seed in any::<u64>(),
        a0 in 0.01f64..5.0,
        w in proptest::collection::vec(0.0f64..1.0, 6),
        total in 0.0f64..0.99,
        rows in 1usize..12,
        cols in 1usize..12,
    ) {
        let s: f64 = w.iter().sum::<f64>().max(1e-9);
        let c: Vec<f64> = w.iter().map(|v| v / s * total).collect();
        let p = Garch2DParams::new(Garch2DOrder::unit(), a0, c[..3].to_vec(), c[3..].to_vec()).unwrap();
        let f = iid(rows, cols, 3.0, seed);
        let h = cond_variance_field(&f, &p).unwrap();
        prop_assert!(h.data().iter().all(|&v| v >= a0));
    }

    #[test]
    fn scans_are_permutations(rows in 1usize..9, cols in 1usize..9) {
        let g = Grid2D::from_fn(rows, cols, |i, j| (i * cols + j) as f64);
        for d in [ScanDir::Horizontal, ScanDir::Vertical, ScanDir::Diagonal] {
            let mut s = scan_series(&g, d);
            prop_assert_eq!(s.len(), rows * cols);
            s.sort_by(f64::total_cmp);
            prop_assert!(s.iter().enumerate().all(|(k, &v)| v == k as f64));
        }
    }
}
