use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bistream::analysis::{densification_series, fit_densification, fit_power_law, young_old_hubs};
use bistream::baselines::{FleetConfig, FleetState, FleetVariant};
use bistream::exact::count_butterflies;
use bistream::harness::{ground_truth_series, run_stream, Algorithm, TruthLimit};
use bistream::stream::BipartiteSnapshot;
use bistream::synth::{generate_stream, BaConfig, StampMode};
use bistream::windowing::{split_windows, WindowConfig};

#[test]
fn random_stamp_ba_streams_have_no_young_hubs() {
    for seed in 0..3 {
        let src = generate_stream(&BaConfig::new(2000, 40, seed), &StampMode::Random { lo: 0, hi: 10_000, seed: seed + 100 }).unwrap();
        let windows = split_windows(src.records(), WindowConfig::landmark(1000).unwrap()).unwrap();
        assert!(windows.len() >= 10);
        let mut upto = 0;
        for w in &windows {
            upto += w.record_count;
            let stamps: Vec<u64> = src.records()[..upto].iter().map(|r| r.tau).collect();
            let ages = young_old_hubs(&w.snapshot, &stamps);
            assert_eq!((ages.young_i, ages.young_j), (0, 0), "seed {seed} window {}", w.k);
            assert!(ages.old_i + ages.old_j > 0);
        }
    }
}

#[test]
fn ba_densification_is_superlinear() {
    let src = generate_stream(&BaConfig::new(1500, 10, 4), &StampMode::Random { lo: 0, hi: 5000, seed: 5 }).unwrap();
    let series = densification_series(src.records(), 5000);
    assert_eq!(series.len(), 5000);
    let g = BipartiteSnapshot::from_edges(src.records()[..5000].iter().map(|r| (r.i, r.j)));
    assert_eq!(series.last(), Some(count_butterflies(&g)));
    let fit = fit_densification(&series).unwrap();
    let best = fit.best().expect("growing series has a non-decreasing fit");
    assert!(best.non_decreasing);
    assert!(fit.fits.iter().filter(|f| f.non_decreasing).all(|f| f.rmse >= best.rmse));
    // cubic and above track the curve closely even when they dip below zero early
    assert!(fit.fits.iter().filter(|f| f.degree >= 3).all(|f| f.r_squared > 0.99));
    let eta = fit_power_law(&series).unwrap().eta;
    assert!(eta > 1.0, "eta {eta}");
}

#[test]
fn fleet_stays_unbiased_through_subsampling() {
    // 120-edge graph, reservoir of 40: several sub-sampling rounds per run
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut g = BipartiteSnapshot::new();
    let mut order = Vec::new();
    while g.edge_count() < 120 {
        let (i, j) = (rng.gen_range(0..15), rng.gen_range(0..15));
        if g.insert_edge(i, j, 0) {
            order.push((i, j));
        }
    }
    let truth = count_butterflies(&g) as f64;
    for variant in [FleetVariant::Fleet1, FleetVariant::Fleet2, FleetVariant::Fleet3] {
        let runs = 3000;
        let mut rounds = 0;
        let estimates: Vec<f64> = (0..runs)
            .map(|seed| {
                let mut s = FleetState::new(FleetConfig::new(variant, 40).with_seed(seed)).unwrap();
                for &(i, j) in &order {
                    s.process(i, j);
                }
                rounds += s.subsample_rounds();
                s.estimate()
            })
            .collect();
        let mean = estimates.iter().sum::<f64>() / runs as f64;
        let sd = (estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt();
        let se = sd / (runs as f64).sqrt();
        assert!(rounds > runs as usize, "{variant:?} never sub-sampled");
        assert!((mean - truth).abs() < 4.0 * se, "{variant:?}: mean {mean} truth {truth} se {se}");
    }
}

#[test]
fn fleet_windows_report_running_estimate() {
    let src = generate_stream(&BaConfig::new(200, 5, 1), &StampMode::Random { lo: 0, hi: 99, seed: 2 }).unwrap();
    let cfg = WindowConfig::new(10).unwrap();
    let truth = ground_truth_series(src.records(), cfg, TruthLimit::default()).unwrap();
    let big = FleetConfig::new(FleetVariant::Fleet3, src.len() + 1);
    let r = run_stream(src.records(), Algorithm::Fleet(big), cfg, Some(&truth)).unwrap();
    // an exact reservoir tracks the growing-graph count window by window
    let est: Vec<u64> = r.estimates().iter().map(|&x| x as u64).collect();
    assert_eq!(est, truth);
    assert_eq!(r.summary.mape, Some(0.0));
}

#[test]
fn supervision_moves_exponent_toward_truth() {
    let src = generate_stream(&BaConfig::new(300, 60, 0), &StampMode::Random { lo: 0, hi: 599, seed: 10 }).unwrap();
    let cfg = WindowConfig::new(30).unwrap();
    let truth = ground_truth_series(src.records(), cfg, TruthLimit::default()).unwrap();
    let plain = run_stream(src.records(), Algorithm::Sgrapp { alpha: 1.5 }, cfg, Some(&truth)).unwrap();
    let sup = run_stream(src.records(), Algorithm::sgrapp_x(1.5, 1.0), cfg, Some(&truth)).unwrap();
    // early windows overshoot, so the exponent must come down
    let final_alpha = sup.metrics.last().unwrap().alpha.unwrap();
    assert!(final_alpha < 1.5);
    assert!(sup.summary.mape.unwrap() < plain.summary.mape.unwrap());
}
