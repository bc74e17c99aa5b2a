use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use locband_core::band::cell_index;
use locband_core::calibration::{
    band_halfwidth_quantile, derive_plan, gumbel_quantile, normalizers, optimal_bandwidth, PlanParams,
};
use locband_core::estimator::kde_sorted;
use locband_core::{
    build_band, build_kde_table, kde_at, select_profile, split_sample, AnalyticDensity, Half, Kernel,
    WeierstrassSpec,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gumbel_quantile_inverts_the_cdf(p in 1e-6f64..(1.0 - 1e-6)) {
        let s = gumbel_quantile(p).unwrap();
        prop_assert!(((-(-s).exp()).exp() - p).abs() < 1e-12);
    }

    #[test]
    fn normalizer_scale_follows_total_variation(delta in 1e-6f64..0.1, tv in 0.1f64..10.0) {
        let (a1, b1) = normalizers(delta, 1.0).unwrap();
        let (a, b) = normalizers(delta, tv).unwrap();
        prop_assert!((a * tv - a1).abs() < 1e-12 * a1);
        prop_assert!((b - b1 * tv).abs() < 1e-12 * b1.abs().max(1.0) * tv);
    }

    #[test]
    fn split_keeps_every_point(data in prop::collection::vec(-10.0f64..10.0, 4..200)) {
        let s = split_sample(&data).unwrap();
        let m = data.len() / 2;
        prop_assert_eq!(s.chi1().len(), m);
        prop_assert_eq!(s.chi2().len(), m);
        let mut got: Vec<f64> = s.chi1().iter().chain(s.chi2()).copied().collect();
        let mut want = data[..2 * m].to_vec();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn windowed_sum_matches_direct_sum(
        mut data in prop::collection::vec(0.0f64..1.0, 1..300),
        t in 0.0f64..1.0,
        h in 1e-3f64..0.5,
        epan in any::<bool>(),
    ) {
        let k = if epan { Kernel::epanechnikov() } else { Kernel::rectangular() };
        data.sort_by(f64::total_cmp);
        let direct = kde_at(&data, t, h, &k).unwrap();
        let fast = kde_sorted(&data, t, h, &k);
        prop_assert!((direct - fast).abs() <= 1e-12 * direct.abs().max(1.0));
        if !epan {
            prop_assert_eq!(direct, fast);
        }
    }

    #[test]
    fn weierstrass_is_even_periodic_and_peaks_at_zero(beta in 0.05f64..0.999, i in -(20i64 << 20)..(20i64 << 20)) {
        // dyadic points, so that x + 2 and -x are exact
        let x = i as f64 / (1u64 << 20) as f64;
        let w = WeierstrassSpec::with_default_tol(beta).unwrap();
        let v = w.value(x);
        prop_assert!((w.value(x + 2.0) - v).abs() < 1e-9);
        prop_assert!((w.value(-x) - v).abs() < 1e-9);
        prop_assert!(v.abs() <= w.at_zero() + 1e-12);
    }

    #[test]
    fn integral_is_additive(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0, beta in 0.2f64..0.9) {
        let p = AnalyticDensity::weierstrass_composite(0.5, beta).unwrap();
        let f = p.function();
        let mut v = [a, b, c];
        v.sort_by(f64::total_cmp);
        let [a, b, c] = v;
        let whole = f.integral(a, c);
        let parts = f.integral(a, b) + f.integral(b, c);
        prop_assert!((whole - parts).abs() < 1e-12);
    }

    #[test]
    fn smoother_targets_use_wider_bandwidths(n in 1000u64..1_000_000, b1 in 0.1f64..3.0, b2 in 0.1f64..3.0) {
        let k = Kernel::rectangular();
        let plan = derive_plan(&PlanParams::practical(n, &k), &k).unwrap();
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        prop_assert!(optimal_bandwidth(&plan, lo).unwrap() <= optimal_bandwidth(&plan, hi).unwrap());
        prop_assert!(optimal_bandwidth(&plan, hi).unwrap() <= optimal_bandwidth(&plan, f64::INFINITY).unwrap());
    }

    #[test]
    fn critical_value_falls_with_alpha(n in 1000u64..1_000_000, a1 in 0.001f64..0.999, a2 in 0.001f64..0.999) {
        let k = Kernel::rectangular();
        let plan = derive_plan(&PlanParams::practical(n, &k), &k).unwrap();
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        prop_assert!(band_halfwidth_quantile(&plan, lo).unwrap() >= band_halfwidth_quantile(&plan, hi).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn band_cells_tile_and_follow_the_width_law(seed in any::<u64>(), n in 512u64..3000, t in 0.0f64..=1.0) {
        let k = Kernel::rectangular();
        let plan = derive_plan(&PlanParams::practical(n, &k), &k).unwrap();
        let data = AnalyticDensity::peak_triangular().sample(n as usize, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let s = split_sample(&data).unwrap();
        let table = build_kde_table(&s, &plan, &k, Half::Second).unwrap();
        let prof = select_profile(&table, &plan).unwrap();
        let band = build_band(&s, &prof, &plan, &k, 0.05).unwrap();
        for w in band.cells.windows(2) {
            prop_assert_eq!(w[0].t_hi, w[1].t_lo);
        }
        prop_assert_eq!(band.cells.last().unwrap().t_hi, 1.0);
        for c in &band.cells {
            prop_assert!((2.0 * c.halfwidth - band.width_law(c.h_loc)).abs() < 1e-12 * c.halfwidth);
        }
        let i = cell_index(&band, t).unwrap();
        let c = &band.cells[i];
        prop_assert!(c.t_lo <= t && (t < c.t_hi || (t == 1.0 && c.t_hi == 1.0)));
    }
}
