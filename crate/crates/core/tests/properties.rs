use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spheredpp::harness::{empirical_cumulants, ks_distance, ks_two_sample, standard_normal_cdf};
use spheredpp::kernel::KernelSpec;
use spheredpp::partitions::{cumulants_from_moments, moments_from_cumulants};
use spheredpp::special::legendre;
use spheredpp::sphere::{uniform_sample, SpherePoint};
use spheredpp::stats::{evaluate_l, TestFunction};

fn points(d: usize, count: usize, seed: u64) -> Vec<SpherePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| uniform_sample(&mut rng, d).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moments_and_cumulants_invert(q in prop::collection::vec(-3.0f64..3.0, 1..7)) {
        let back = cumulants_from_moments(&moments_from_cumulants(&q).unwrap()).unwrap();
        for (a, b) in q.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn kernel_is_symmetric_and_dominated_by_diagonal(d in 2usize..5, n in 0usize..12, seed in any::<u64>()) {
        let spec = KernelSpec::new(d, n).unwrap();
        let p = points(d, 2, seed);
        let (x, y) = (&p[0], &p[1]);
        prop_assert!((spec.eval(x, y) - spec.eval(y, x)).abs() < 1e-12 * spec.intensity());
        prop_assert!(spec.eval(x, y).abs() <= spec.eval(x, x) * (1.0 + 1e-12));
        prop_assert!((spec.eval(x, x) - spec.intensity()).abs() < 1e-12 * spec.intensity());
    }

    #[test]
    fn legendre_is_bounded(d in 2usize..6, n in 0usize..60, t in -1.0f64..1.0) {
        prop_assert!(legendre(d, n, t).unwrap().abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn cumulants_shift_and_scale(xs in prop::collection::vec(-5.0f64..5.0, 10..60), c in -3.0f64..3.0, s in 0.5f64..2.0) {
        prop_assume!(xs.iter().any(|&x| x != xs[0]));
        let base = empirical_cumulants(&xs, 4).unwrap();
        let moved: Vec<f64> = xs.iter().map(|x| s * x + c).collect();
        let after = empirical_cumulants(&moved, 4).unwrap();
        prop_assert!((after[0].value - (s * base[0].value + c)).abs() < 1e-9);
        for r in 1..4 {
            let want = s.powi(r as i32 + 1) * base[r].value;
            prop_assert!((after[r].value - want).abs() < 1e-7 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn ks_distances_lie_in_unit_interval(a in prop::collection::vec(-4.0f64..4.0, 1..50), b in prop::collection::vec(-4.0f64..4.0, 1..50)) {
        let one = ks_distance(&a, standard_normal_cdf);
        let two = ks_two_sample(&a, &b);
        prop_assert!((0.0..=1.0).contains(&one));
        prop_assert!((0.0..=1.0).contains(&two));
        prop_assert!(ks_two_sample(&a, &a) == 0.0);
        prop_assert!((two - ks_two_sample(&b, &a)).abs() < 1e-15);
    }

    #[test]
    fn statistic_is_linear_in_the_constant(count in 2usize..9, c in -2.0f64..2.0, seed in any::<u64>()) {
        let p = points(2, count, seed);
        let one = evaluate_l(&p, &TestFunction::constant(2, 2, 1.0).unwrap());
        let scaled = evaluate_l(&p, &TestFunction::constant(2, 2, c).unwrap());
        prop_assert_eq!(one, (count * (count - 1)) as f64);
        prop_assert!((scaled - c * one).abs() < 1e-12 * (1.0 + one));
    }

    #[test]
    fn pair_statistic_counts_close_pairs(count in 2usize..12, delta in 0.1f64..3.0, seed in any::<u64>()) {
        let p = points(2, count, seed);
        let f = TestFunction::pair_indicator(2, delta).unwrap();
        let mut close = 0;
        for i in 0..count {
            for j in 0..count {
                if i != j && p[i].distance(&p[j]) < delta {
                    close += 1;
                }
            }
        }
        prop_assert_eq!(evaluate_l(&p, &f), close as f64);
    }
}
