use proptest::prelude::*;
use spherint::asymptote::rank_one_limit;
use spherint::measure::AtomicMeasure;
use spherint::ratefn::t_rate;
use spherint::transform::{domain, hilbert, k_transform, r_transform};

fn measure() -> impl Strategy<Value = AtomicMeasure> {
    (
        prop::collection::vec((-3.0f64..3.0, 0.05f64..1.0), 2..7),
        0.0f64..0.6,
        0.0f64..0.6,
    )
        .prop_map(|(atoms, below, above)| {
            let xs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
            let ws: Vec<f64> = atoms.iter().map(|a| a.1).collect();
            let mu = AtomicMeasure::from_atoms(&xs, &ws).unwrap();
            let (lo, hi) = mu.support();
            mu.with_support(lo - below, hi + above).unwrap()
        })
        .prop_filter("needs two distinct atoms", |m| !m.is_dirac())
}

/// Maps `f ∈ (-1, 1)` onto the unsaturated γ range, capped at ±4.
fn gamma_at(mu: &AtomicMeasure, f: f64) -> f64 {
    let d = domain(mu);
    if f >= 0.0 {
        f * d.h_max.min(4.0)
    } else {
        -f * d.h_min.max(-4.0)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn k_inverts_hilbert(mu in measure(), f in prop_oneof![-0.99f64..-0.01, 0.01f64..0.99]) {
        let g = gamma_at(&mu, f);
        let k = k_transform(&mu, g).unwrap();
        let (lo, hi) = mu.support();
        prop_assert!(k > hi || k < lo);
        prop_assert!((hilbert(&mu, k).unwrap() - g).abs() <= 1e-9 * g.abs().max(1.0));
    }

    #[test]
    fn r_is_increasing_and_inside_the_hull(mu in measure(), f in -0.98f64..0.97) {
        let (g1, g2) = (gamma_at(&mu, f), gamma_at(&mu, f + 0.01));
        let (r1, r2) = (r_transform(&mu, g1).unwrap(), r_transform(&mu, g2).unwrap());
        let (lo, hi) = mu.support();
        prop_assert!(r1 <= r2 + 1e-12);
        prop_assert!(r1 >= lo && r1 <= hi);
    }

    #[test]
    fn limit_is_convex_and_bounded(mu in measure(), theta in -3.0f64..3.0, beta in 1u8..=2) {
        let h = 1e-3;
        let i = |t: f64| rank_one_limit(&mu, t, beta).unwrap().value;
        let (a, b, c) = (i(theta - h), i(theta), i(theta + h));
        prop_assert!(a - 2.0 * b + c >= -1e-9, "second difference {}", a - 2.0 * b + c);
        let (lo, hi) = mu.support();
        // Jensen below, the support bound above
        prop_assert!(b >= theta * mu.mean() - 1e-12);
        prop_assert!(b <= (theta * lo).max(theta * hi) + 1e-12);
    }

    #[test]
    fn rate_is_nonnegative_and_vanishes_at_the_mean(mu in measure(), f in 0.0f64..1.0) {
        let (lo, hi) = mu.support();
        let alpha = lo + f * (hi - lo);
        prop_assert!(t_rate(&mu, alpha).t_value >= -1e-12);
        prop_assert!(t_rate(&mu, mu.mean()).t_value.abs() <= 1e-12);
    }

    #[test]
    fn json_round_trip(mu in measure()) {
        let back = AtomicMeasure::from_json(&mu.to_json()).unwrap();
        prop_assert_eq!(back, mu);
    }
}
