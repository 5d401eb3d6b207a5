use proptest::prelude::*;

use bistream::analysis::pearson;
use bistream::exact::{brute_force_count, count_butterflies_anchored, enumerate_butterflies};
use bistream::harness::mape;
use bistream::stream::{BipartiteSnapshot, Side};

fn graph() -> impl Strategy<Value = BipartiteSnapshot> {
    prop::collection::vec((0u32..12, 0u32..12), 0..90).prop_map(BipartiteSnapshot::from_edges)
}

proptest! {
    #[test]
    fn both_anchors_agree_with_brute_force(g in graph()) {
        let want = brute_force_count(&g).unwrap();
        prop_assert_eq!(count_butterflies_anchored(&g, Side::I), want);
        prop_assert_eq!(count_butterflies_anchored(&g, Side::J), want);
        prop_assert_eq!(enumerate_butterflies(&g).len() as u64, want);
    }

    #[test]
    fn mape_ignores_common_scaling(
        pairs in prop::collection::vec((1u64..10_000, 0.0f64..20_000.0), 1..20),
        scale in 1u64..50,
    ) {
        let (t, e): (Vec<u64>, Vec<f64>) = pairs.into_iter().unzip();
        let base = mape(&t, &e).unwrap().mape;
        let ts: Vec<u64> = t.iter().map(|x| x * scale).collect();
        let es: Vec<f64> = e.iter().map(|x| x * scale as f64).collect();
        let scaled = mape(&ts, &es).unwrap().mape;
        prop_assert!((base - scaled).abs() <= 1e-9 * base.max(1.0));
        prop_assert_eq!(mape(&t, &t.iter().map(|&x| x as f64).collect::<Vec<_>>()).unwrap().mape, 0.0);
    }

    #[test]
    fn pearson_is_bounded_and_affine_invariant(
        pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
        a in 0.1f64..10.0,
        b in -50.0f64..50.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        if let Some(r) = pearson(&x, &y) {
            prop_assert!((-1.0..=1.0).contains(&r));
            let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let flipped: Vec<f64> = y.iter().map(|v| -a * v + b).collect();
            prop_assert!((pearson(&xs, &y).unwrap() - r).abs() < 1e-9);
            prop_assert!((pearson(&x, &flipped).unwrap() + r).abs() < 1e-9);
        }
    }
}
