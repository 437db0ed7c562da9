use bmcurve_core::oracle::DEFAULT_CELL_BUDGET;
use bmcurve_core::simulator::{compare_curves, linear_scan, CurveOrder, OrderedIndex, QueryMode};
use bmcurve_core::workload::{gen_dataset, gen_queries, DataKind, QueryShape};
use bmcurve_core::{BmcSpec, Grid, GridPoint};
use bmcurve_core::{Dataset, RangeQuery};
use proptest::prelude::*;

fn orders(g: Grid) -> Vec<(String, CurveOrder)> {
    vec![
        ("zc".into(), CurveOrder::Bmc(BmcSpec::z_order(g))),
        ("lc".into(), CurveOrder::Bmc(BmcSpec::lexicographic(g, 0))),
        ("hc".into(), CurveOrder::Hilbert(g)),
    ]
}

fn arb_instance() -> impl Strategy<Value = (Dataset, RangeQuery, usize)> {
    let g = Grid::new(2, 4).unwrap();
    (
        prop::collection::vec((0u64..16, 0u64..16), 1..120),
        (0u64..16, 0u64..16, 0u64..16, 0u64..16),
        1usize..9,
    )
        .prop_map(move |(pts, (a, b, c, d), block)| {
            let data = Dataset::new(g, pts.into_iter().map(|(x, y)| GridPoint::new(vec![x, y])).collect()).unwrap();
            let q = RangeQuery::new(&g, vec![a.min(b), c.min(d)], vec![a.max(b), c.max(d)]).unwrap();
            (data, q, block)
        })
}

proptest! {
    #[test]
    fn both_modes_match_linear_scan((data, q, block) in arb_instance()) {
        let expected = linear_scan(&data, &q);
        for (_, order) in orders(data.grid()) {
            let idx = OrderedIndex::build(&data, order, block).unwrap();
            let full = idx.run_query(&q, QueryMode::FullRange, DEFAULT_CELL_BUDGET).unwrap();
            let per = idx.run_query(&q, QueryMode::PerSection, DEFAULT_CELL_BUDGET).unwrap();
            prop_assert_eq!(&full.results, &expected);
            prop_assert_eq!(&per.results, &expected);
            prop_assert!(per.blocks <= full.blocks);
            prop_assert!(per.blocks >= expected.len().div_ceil(block));
            prop_assert!(per.retrieved >= expected.len());
        }
    }
}

#[test]
fn reports_agree_across_curves() {
    let g = Grid::new(2, 8).unwrap();
    let data = gen_dataset(DataKind::Skewed, 5000, g, 1).unwrap();
    let w = gen_queries(&data, 100, &QueryShape::Aspect { area: 1024, ratio: (16, 1) }, 2).unwrap();
    for mode in [QueryMode::FullRange, QueryMode::PerSection] {
        let reports = compare_curves(&data, &w, &orders(g), 32, mode, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(reports.len(), 3);
        for r in &reports {
            assert_eq!(r.per_query.len(), 100);
            for (s, q) in r.per_query.iter().zip(w.queries()) {
                assert_eq!(s.result_size, linear_scan(&data, q).len());
                assert!((0.0..=1.0).contains(&s.precision));
            }
        }
    }
}

#[test]
fn accesses_grow_with_cardinality() {
    let g = Grid::new(2, 10).unwrap();
    let full = gen_dataset(DataKind::Uniform, 40_000, g, 4).unwrap();
    let w = gen_queries(&full, 200, &QueryShape::Aspect { area: 4096, ratio: (1, 1) }, 5).unwrap();
    for (name, order) in orders(g) {
        let mut prev = 0.0;
        for n in [1_000, 5_000, 40_000] {
            let r = compare_curves(&full.prefix(n), &w, &[(name.clone(), order.clone())], 64, QueryMode::PerSection, DEFAULT_CELL_BUDGET)
                .unwrap()
                .remove(0);
            assert!(r.mean_blocks() >= prev, "{name} at {n}: {} < {prev}", r.mean_blocks());
            prev = r.mean_blocks();
        }
    }
}
