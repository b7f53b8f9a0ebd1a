use esjs::bootstrap::{iid_resample, interval_from_replicates, IntervalMethod};
use esjs::divergence::{esjs, esjs_distance, esjs_spacings};
use esjs::survival::{empirical_survival, km_binned_survival, mixture_survival, survival_entropy, SortedSample};
use proptest::prelude::*;

fn sample_strategy(max_len: usize) -> impl Strategy<Value = SortedSample> {
    // Coarse values make ties common.
    prop::collection::vec(
        prop_oneof![(-50i32..50).prop_map(|v| v as f64 * 0.25), -100.0f64..100.0],
        1..max_len,
    )
    .prop_map(|v| SortedSample::new(v).unwrap())
}

fn equal_pair(max_len: usize) -> impl Strategy<Value = (SortedSample, SortedSample)> {
    (1..max_len).prop_flat_map(|n| {
        let one = prop::collection::vec(-100.0f64..100.0, n);
        (one.clone(), one).prop_map(|(a, b)| (SortedSample::new(a).unwrap(), SortedSample::new(b).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn esjs_is_nonnegative_and_symmetric(p in sample_strategy(60), q in sample_strategy(60)) {
        let (sp, sq) = (empirical_survival(&p), empirical_survival(&q));
        let d = esjs(&sp, &sq);
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d, esjs(&sq, &sp));
        prop_assert_eq!(esjs(&sp, &sp), 0.0);
    }

    #[test]
    fn triangle_inequality(a in sample_strategy(40), b in sample_strategy(40), c in sample_strategy(40)) {
        let (a, b, c) = (empirical_survival(&a), empirical_survival(&b), empirical_survival(&c));
        prop_assert!(esjs_distance(&a, &c) <= esjs_distance(&a, &b) + esjs_distance(&b, &c) + 1e-12);
    }

    #[test]
    fn spacings_form_matches_integral((p, q) in equal_pair(120)) {
        let exact = esjs(&empirical_survival(&p), &empirical_survival(&q));
        let spacings = esjs_spacings(&p, &q).unwrap();
        prop_assert!((exact - spacings).abs() <= 1e-10 * exact.max(1e-300), "{} vs {}", exact, spacings);
    }

    #[test]
    fn entropy_identity((p, q) in equal_pair(120)) {
        let exact = esjs(&empirical_survival(&p), &empirical_survival(&q));
        let via_entropy =
            survival_entropy(&p.pooled(&q)) - 0.5 * survival_entropy(&p) - 0.5 * survival_entropy(&q);
        prop_assert!((exact - via_entropy).abs() <= 1e-10 * exact.max(1e-300) + 1e-13);
    }

    #[test]
    fn entropy_matches_integral(s in sample_strategy(200)) {
        let a = survival_entropy(&s);
        let b = empirical_survival(&s).cumulative_entropy();
        prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn mixture_is_pooled_survival((p, q) in equal_pair(50), x in -120.0f64..120.0) {
        let m = mixture_survival(&empirical_survival(&p), &empirical_survival(&q));
        let pooled = empirical_survival(&p.pooled(&q));
        prop_assert!((m.eval(x) - pooled.eval(x)).abs() < 1e-15);
    }

    #[test]
    fn survival_is_monotone(s in sample_strategy(80), xs in prop::collection::vec(-120.0f64..120.0, 2..20)) {
        let f = empirical_survival(&s);
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        for w in xs.windows(2) {
            prop_assert!(f.eval(w[0]) >= f.eval(w[1]));
        }
        prop_assert_eq!(f.eval(s.min() - 1.0), 1.0);
        prop_assert_eq!(f.eval(s.max()), 0.0);
    }

    #[test]
    fn binned_survival_agrees_at_edges(s in sample_strategy(80), bins in 1usize..50) {
        let (lo, hi) = (s.min() - 1.0, s.max() + 1.0);
        let binned = km_binned_survival(&s, bins, (lo, hi)).unwrap();
        let exact = empirical_survival(&s);
        for k in 0..=bins {
            let edge = if k == bins { hi } else { lo + (hi - lo) * (k as f64 / bins as f64) };
            prop_assert!((binned.eval(edge) - exact.eval(edge)).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_scales_esjs(p in sample_strategy(40), q in sample_strategy(40), c in prop_oneof![Just(0.5), Just(2.0), Just(10.0)]) {
        let base = esjs(&empirical_survival(&p), &empirical_survival(&q));
        let scaled = esjs(
            &empirical_survival(&p.affine(c, 0.0).unwrap()),
            &empirical_survival(&q.affine(c, 0.0).unwrap()),
        );
        prop_assert!((scaled - c * base).abs() <= 1e-12 * c * base + 1e-300);
    }

    #[test]
    fn iid_resample_draws_from_sample(s in sample_strategy(100), seed in any::<u64>()) {
        let r = iid_resample(&s, seed);
        prop_assert_eq!(r.len(), s.len());
        prop_assert!(r.values().iter().all(|v| s.values().contains(v)));
        prop_assert_eq!(r, iid_resample(&s, seed));
    }

    #[test]
    fn percentile_endpoints_are_replicates(reps in prop::collection::vec(-10.0f64..10.0, 1..300), level in 0.5f64..0.99) {
        let ci = interval_from_replicates(0.0, reps.clone(), level, IntervalMethod::Percentile).unwrap();
        prop_assert!(reps.contains(&ci.lb) && reps.contains(&ci.ub));
        prop_assert!(ci.lb <= ci.ub);
    }
}
