use proptest::prelude::*;

use locband::brownian::{time_points, tilde_w_second_moment};

fn config() -> impl Strategy<Value = (f64, f64, i64, i64, f64, f64)> {
    (4u64..64, 0.01f64..1.0, 0.01f64..1.0, 0.0f64..=1.0).prop_flat_map(|(m, hk, hl, z)| {
        let delta = 1.0 / m as f64;
        // keep every time point nonnegative
        let kmin = (z * hk / delta).ceil() as i64;
        let lmin = (z * hl / delta).ceil() as i64;
        (Just(hk), Just(hl), kmin..kmin + 64, lmin..lmin + 64, Just(delta), Just(z))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn moment_lies_in_zero_to_four((hk, hl, k, l, delta, z) in config()) {
        let v = tilde_w_second_moment(hk, hl, k, l, delta, z).unwrap();
        prop_assert!((-1e-12..=4.0 + 1e-12).contains(&v), "{v}");
    }

    #[test]
    fn moment_matches_interval_overlap((hk, hl, k, l, delta, z) in config()) {
        let v = tilde_w_second_moment(hk, hl, k, l, delta, z).unwrap();
        let t = time_points(hk, hl, k, l, delta, z);
        let overlap = (t[1].min(t[3]) - t[0].max(t[2])).max(0.0);
        let want = 4.0 * z - 2.0 * overlap / (hk * hl).sqrt();
        prop_assert!((v - want).abs() < 1e-9 * (1.0 + v.abs().max(want.abs())), "{v} vs {want}");
    }

    #[test]
    fn moment_is_symmetric_in_the_two_points((hk, hl, k, l, delta, z) in config()) {
        let a = tilde_w_second_moment(hk, hl, k, l, delta, z).unwrap();
        let b = tilde_w_second_moment(hl, hk, l, k, delta, z).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
    }
}
