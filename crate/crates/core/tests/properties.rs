//! Structural property tests over randomized inputs.

use chrono::{TimeZone, Utc};
use proptest::prelude::*;

use windcast_core::dataset::{self, Dataset, StationMeta};
use windcast_core::design::{self, BlockLayout};
use windcast_core::metrics;
use windcast_core::solver::{bomp, exhaustive_oracle, SolverConfig};

fn dataset_from(series: Vec<Vec<f64>>) -> Dataset {
    let stations = (0..series.len())
        .map(|i| StationMeta::named(format!("s{i}")))
        .collect();
    let masks = series.iter().map(|s| vec![false; s.len()]).collect();
    Dataset::new(
        stations,
        Utc.with_ymd_and_hms(2014, 1, 6, 0, 0, 0).unwrap(),
        series,
        masks,
    )
    .unwrap()
}

prop_compose! {
    fn arb_dataset(max_stations: usize, min_len: usize, max_len: usize)
        (p in 1..=max_stations, t in min_len..=max_len)
        (series in prop::collection::vec(
            prop::collection::vec(0.0f64..25.0, t..=t), p..=p))
        -> Vec<Vec<f64>>
    {
        series
    }
}

prop_compose! {
    fn arb_layout(stations: usize, max_order: usize)
        (orders in prop::collection::vec(1..=max_order, stations..=stations))
        -> BlockLayout
    {
        let n_max = *orders.iter().max().unwrap();
        BlockLayout::new(orders, n_max).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn blocks_slide_one_hour_per_row(series in arb_dataset(4, 12, 30)) {
        let ds = dataset_from(series);
        let layout = BlockLayout::uniform(ds.station_count(), 3).unwrap();
        let sys = design::build_nonuniform(&ds, 0, &layout, None).unwrap();
        let a = sys.a();
        for p in 0..ds.station_count() {
            let range = layout.block_range(p);
            for m in 0..sys.rows() - 1 {
                for j in range.start + 1..range.end {
                    prop_assert_eq!(a[(m + 1, j)], a[(m, j - 1)]);
                }
            }
        }
        // uniform builds: the target block's lag-1 column continues b
        for m in 0..sys.rows() - 1 {
            prop_assert_eq!(a[(m + 1, layout.offset(0))], sys.b()[m]);
        }
    }

    #[test]
    fn uniform_equals_nonuniform_with_equal_orders(series in arb_dataset(4, 10, 40)) {
        let ds = dataset_from(series);
        let n = 2;
        let layout = BlockLayout::uniform(ds.station_count(), n).unwrap();
        for target in 0..ds.station_count() {
            let uni = design::build_uniform(&ds, target, n, None).unwrap();
            let non = design::build_nonuniform(&ds, target, &layout, None).unwrap();
            prop_assert_eq!(uni, non);
        }
    }

    #[test]
    fn nonuniform_columns_read_the_lagged_series(
        series in arb_dataset(3, 15, 30),
        seed in 0u64..1000,
    ) {
        let ds = dataset_from(series);
        let mut rng = seed;
        let mut next = move || { rng = rng.wrapping_mul(48271) % 0x7fffffff; rng };
        let orders: Vec<usize> = (0..ds.station_count()).map(|_| 1 + (next() % 4) as usize).collect();
        let n_max = *orders.iter().max().unwrap();
        let layout = BlockLayout::new(orders, n_max).unwrap();
        if ds.len() <= n_max { return Ok(()); }
        let sys = design::build_nonuniform(&ds, 0, &layout, None).unwrap();
        for m in 0..sys.rows() {
            let hour = sys.origin_hour() + m;
            prop_assert_eq!(sys.b()[m], ds.value(0, hour));
            for p in 0..ds.station_count() {
                for j in 0..layout.order(p) {
                    prop_assert_eq!(sys.a()[(m, layout.offset(p) + j)], ds.value(p, hour - j - 1));
                }
            }
        }
    }

    #[test]
    fn slice_composes(series in arb_dataset(3, 8, 30), a in 0usize..5, c in 0usize..5) {
        let ds = dataset_from(series);
        let len = ds.len();
        let b = len.min(a + 4);
        if a >= b { return Ok(()); }
        let outer = ds.slice(a, b).unwrap();
        let d = (b - a).min(c + 2);
        if c >= d { return Ok(()); }
        let inner = outer.slice(c, d).unwrap();
        prop_assert_eq!(inner, ds.slice(a + c, a + d).unwrap());
    }

    #[test]
    fn csv_round_trip_reproduces_the_dataset(series in arb_dataset(4, 2, 20)) {
        let ds = dataset_from(series);
        let mut buf = Vec::new();
        dataset::write_csv(&ds, &mut buf).unwrap();
        let back = dataset::ingest_csv_reader(buf.as_slice(), 0).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn rmse_dominates_mae(
        pair in prop::collection::vec((0.0f64..30.0, 0.0f64..30.0), 1..50)
    ) {
        let actual: Vec<f64> = pair.iter().map(|&(a, _)| a).collect();
        let predicted: Vec<f64> = pair.iter().map(|&(_, p)| p).collect();
        let mae = metrics::mae(&actual, &predicted).unwrap();
        let rmse = metrics::rmse(&actual, &predicted).unwrap();
        prop_assert!(rmse >= mae - 1e-12);
    }

    #[test]
    fn mae_and_rmse_scale_linearly(
        pair in prop::collection::vec((0.0f64..30.0, 0.0f64..30.0), 2..40),
        alpha in 0.1f64..10.0,
    ) {
        let actual: Vec<f64> = pair.iter().map(|&(a, _)| a).collect();
        let predicted: Vec<f64> = pair.iter().map(|&(_, p)| p).collect();
        let scaled_a: Vec<f64> = actual.iter().map(|v| alpha * v).collect();
        let scaled_p: Vec<f64> = predicted.iter().map(|v| alpha * v).collect();
        let mae = metrics::mae(&actual, &predicted).unwrap();
        let rmse = metrics::rmse(&actual, &predicted).unwrap();
        prop_assert!((metrics::mae(&scaled_a, &scaled_p).unwrap() - alpha * mae).abs() < 1e-9);
        prop_assert!((metrics::rmse(&scaled_a, &scaled_p).unwrap() - alpha * rmse).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bomp_support_respects_the_budget_and_oracle_dominates(
        entries in prop::collection::vec(-3.0f64..3.0, 60..=60),
        rhs in prop::collection::vec(-5.0f64..5.0, 12..=12),
        k in 1usize..3,
    ) {
        let a = nalgebra::DMatrix::from_vec(12, 5, entries);
        let b = nalgebra::DVector::from_vec(rhs);
        let layout = BlockLayout::uniform(5, 1).unwrap();
        let sys = design::DesignSystem::new(a, b, layout, 0, 0).unwrap();
        let cfg = SolverConfig {
            k_max: k,
            residual_tol: 0.0,
            min_gain: 0.0,
            normalize_columns: false,
            ..SolverConfig::default()
        };
        let greedy = bomp(&sys, &cfg).unwrap();
        prop_assert!(greedy.support().len() <= k);
        let oracle = exhaustive_oracle(&sys, k).unwrap();
        prop_assert!(oracle.residual_norm(&sys) <= greedy.residual_norm(&sys));
    }
}
