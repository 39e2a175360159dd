use proptest::prelude::*;
use surdual::metrics::{gap_closed, shifted_geomean, target_bound};

#[test]
fn gap_closed_examples() {
    assert_eq!(gap_closed(-1.25, -4.0, -4.0), 0.0);
    assert_eq!(gap_closed(0.0, -1.0, -3.0), 2.0 / 3.0);
    assert_eq!(gap_closed(0.0, -3.0, -1.0), -2.0 / 3.0);
}

#[test]
fn shifted_geomean_examples() {
    assert_eq!(shifted_geomean(&[4.0, 4.0, 4.0], 0.0), 4.0);
    assert!((shifted_geomean(&[0.0, 10.0], 10.0f64) - 4.142).abs() < 1e-3);
    assert!((shifted_geomean(&[0.0, 10.0], 10.0) - (200f64.sqrt() - 10.0)).abs() < 1e-12);
    assert_eq!(shifted_geomean(&[17.5], 1.0), 17.5);
}

#[test]
fn target_bound_examples() {
    assert_eq!(target_bound(0.0, 10.0), 2.0);
    assert_eq!(target_bound(-3.25, -3.25), -3.25);
    assert!((target_bound(-5246.0f64, -4318.1) + 5060.4).abs() < 0.05);
}

fn below(p: f64) -> impl Strategy<Value = f64> {
    (p - 100.0)..p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gap_closed_is_antisymmetric((p, d1, d2) in (-50.0f64..50.0).prop_flat_map(|p| (Just(p), below(p), below(p)))) {
        prop_assert_eq!(gap_closed(p, d1, d2), -gap_closed(p, d2, d1));
        let gc = gap_closed(p, d1, d2);
        prop_assert_eq!(gc > 0.0, d1 > d2);
        prop_assert!((-1.0..=1.0).contains(&gc));
    }

    #[test]
    fn unshifted_mean_is_geometric(v in prop::collection::vec(0.1f64..100.0, 1..8)) {
        let direct = v.iter().product::<f64>().powf(1.0 / v.len() as f64);
        prop_assert!((shifted_geomean(&v, 0.0) - direct).abs() <= 1e-9 * direct);
    }

    #[test]
    fn shifted_mean_is_monotone(v in prop::collection::vec(0.0f64..100.0, 1..8), i in 0usize..8, bump in 0.0f64..10.0, s in 0.0f64..10.0) {
        let mut w = v.clone();
        let i = i % v.len();
        w[i] += bump;
        prop_assert!(shifted_geomean(&w, s) >= shifted_geomean(&v, s) - 1e-9);
    }
}
