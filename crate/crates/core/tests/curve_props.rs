use bmcurve_core::curve::{all_curves, curve_count};
use bmcurve_core::oracle::curve_value_by_merge;
use bmcurve_core::{BmcSpec, Grid, GridPoint};
use proptest::prelude::*;

fn arb_curve(dims: usize, bits: u32) -> impl Strategy<Value = BmcSpec> {
    let slots: Vec<u8> = (0..dims as u8).flat_map(|d| std::iter::repeat_n(d, bits as usize)).collect();
    Just(slots).prop_shuffle().prop_map(move |s| {
        BmcSpec::from_slots_lsb(Grid::new(dims, bits).unwrap(), s).unwrap()
    })
}

fn arb_case() -> impl Strategy<Value = (BmcSpec, Vec<u64>, Vec<u64>)> {
    (1usize..=4, 1u32..=6).prop_flat_map(|(d, l)| {
        let max = (1u64 << l) - 1;
        (
            arb_curve(d, l),
            prop::collection::vec(0..=max, d),
            prop::collection::vec(0..=max, d),
        )
    })
}

proptest! {
    #[test]
    fn monotone_under_dominance((curve, a, b) in arb_case()) {
        let lo: Vec<u64> = a.iter().zip(&b).map(|(x, y)| *x.min(y)).collect();
        let hi: Vec<u64> = a.iter().zip(&b).map(|(x, y)| *x.max(y)).collect();
        prop_assert!(curve.value_of(&lo) <= curve.value_of(&hi));
    }

    #[test]
    fn encoder_agrees_with_bit_merge((curve, a, _b) in arb_case()) {
        prop_assert_eq!(curve.value_of(&a), curve_value_by_merge(&curve, &a));
        prop_assert_eq!(curve.value(&GridPoint::new(a.clone())).unwrap(), curve.value_of(&a));
    }

    #[test]
    fn decode_inverts_encode((curve, a, _b) in arb_case()) {
        let v = curve.value_of(&a);
        prop_assert_eq!(curve.decode(v).unwrap().into_coords(), a);
    }

    #[test]
    fn text_round_trip((curve, _a, _b) in arb_case()) {
        let g = curve.grid();
        prop_assert_eq!(BmcSpec::parse(&curve.render(), g.dims(), g.bits()).unwrap(), curve);
    }

    #[test]
    fn ranks_cover_every_position((curve, _a, _b) in arb_case()) {
        let g = curve.grid();
        let total: u128 = (0..g.dims())
            .flat_map(|d| (0..g.bits()).map(move |j| (d, j)))
            .map(|(d, j)| 1u128 << curve.rank(d, j))
            .sum();
        prop_assert_eq!(total, (1u128 << g.total_bits()) - 1);
        for d in 0..g.dims() {
            for j in 1..g.bits() {
                prop_assert!(curve.rank(d, j - 1) < curve.rank(d, j));
            }
        }
    }
}

#[test]
fn exhaustive_monotone_and_bijective_small_grids() {
    for l in 1..=3 {
        let g = Grid::new(2, l).unwrap();
        let side = 1u64 << l;
        let cells: Vec<[u64; 2]> = (0..side).flat_map(|x| (0..side).map(move |y| [x, y])).collect();
        for c in all_curves(g) {
            let mut seen = vec![false; 1 << (2 * l)];
            for p in &cells {
                let v = c.value_of(p) as usize;
                assert!(!seen[v]);
                seen[v] = true;
                for q in &cells {
                    if p[0] <= q[0] && p[1] <= q[1] {
                        assert!(c.value_of(p) <= c.value_of(q), "{c} {p:?} {q:?}");
                    }
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }
}

#[test]
fn enumeration_size_matches_multinomial() {
    for (d, l, expected) in [(1, 4, 1u128), (2, 1, 2), (2, 3, 20), (3, 2, 90), (2, 4, 70)] {
        let g = Grid::new(d, l).unwrap();
        assert_eq!(curve_count(g), Some(expected));
        let all: Vec<BmcSpec> = all_curves(g).collect();
        assert_eq!(all.len() as u128, expected);
        let mut rendered: Vec<String> = all.iter().map(|c| c.render()).collect();
        rendered.dedup();
        assert_eq!(rendered.len() as u128, expected);
    }
}

#[test]
fn figure_value_example() {
    let c = BmcSpec::parse("XYZXYZXYZ", 3, 3).unwrap();
    // x=010, y=001, z=111 merged from the most significant slot.
    let expected = 0b001_101_011;
    assert_eq!(c.value_of(&[2, 1, 7]), expected);
    assert_eq!(curve_value_by_merge(&c, &[2, 1, 7]), expected);
}
