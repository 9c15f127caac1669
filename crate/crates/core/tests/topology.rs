use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topofp::filtration::{binary_slice, build_filtration, threshold_grid, Direction, FiltrationField};
use topofp::image_io::{extract_channel, Channel, ChannelMatrix, RgbImage, SCALED_MAX};
use topofp::persistence::{bars_alive_at, compute_pd, Bar, PersistenceDiagram};
use topofp::vectorize::{betti_vector, topo_feature_vector, FeatureLayout};
use topofp::verification::{betti_by_counting, euler_characteristic, reduce_boundary_matrix};

fn field(rows: usize, cols: usize, values: Vec<u16>) -> FiltrationField {
    FiltrationField::from_activations(rows, cols, values).unwrap()
}

fn random_field(rng: &mut ChaCha8Rng, n: usize, levels: Option<u16>) -> FiltrationField {
    let values = (0..n * n)
        .map(|_| match levels {
            Some(k) => rng.random_range(0..k) * (SCALED_MAX / (k - 1)),
            None => rng.random_range(0..=SCALED_MAX),
        })
        .collect();
    field(n, n, values)
}

fn arb_field(max_side: usize) -> impl Strategy<Value = FiltrationField> {
    (
        1..=max_side,
        1..=max_side,
        prop_oneof![Just(766u16), Just(4u16), Just(2u16)],
    )
        .prop_flat_map(|(r, c, levels)| {
            proptest::collection::vec(0..levels, r * c).prop_map(move |v| {
                let step = if levels == 766 { 1 } else { SCALED_MAX / (levels - 1) };
                field(r, c, v.into_iter().map(|x| x * step).collect())
            })
        })
}

/// A 5x5 field whose diagrams are the hand-worked example:
/// four components born at 1 (three dying at 2, 2 and 3) and holes
/// (2,4), (3,5), (4,5).
const WORKED: [u16; 25] = [
    5, 1, 1, 3, 5, 1, 4, 2, 3, 1, 2, 4, 1, 5, 3, 1, 2, 5, 2, 3, 2, 5, 4, 4, 2,
];

#[test]
fn worked_example_field() {
    let f = field(5, 5, WORKED.to_vec());
    let (pd0, pd1) = compute_pd(&f);
    let want0 = PersistenceDiagram::new(
        0,
        [
            Bar::essential(1),
            Bar::finite(1, 2),
            Bar::finite(1, 2),
            Bar::finite(1, 3),
        ],
    );
    let want1 = PersistenceDiagram::new(1, [Bar::finite(2, 4), Bar::finite(3, 5), Bar::finite(4, 5)]);
    assert_eq!(pd0, want0);
    assert_eq!(pd1, want1);
    assert_eq!(reduce_boundary_matrix(&f).unwrap(), (want0, want1));
    let grid = [1, 2, 3, 4, 5];
    assert_eq!(betti_vector(&pd0, &grid).values, [4, 2, 1, 1, 1]);
    assert_eq!(betti_vector(&pd1, &grid).values, [0, 1, 2, 2, 0]);
}

#[test]
fn oracle_agrees_on_seeded_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in [2, 3, 4, 8, 16] {
        for levels in [None, Some(3), Some(6)] {
            for _ in 0..40 {
                let f = random_field(&mut rng, n, levels);
                assert_eq!(
                    compute_pd(&f),
                    reduce_boundary_matrix(&f).unwrap(),
                    "{n}x{n}: {:?}",
                    f.activation()
                );
            }
        }
    }
}

#[test]
fn feature_vector_matches_oracle_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let img = RgbImage::from_fn(8, 8, |_, _| rng.random()).unwrap();
    let v = topo_feature_vector(&img);
    let layout = FeatureLayout::standard();
    for ch in Channel::ALL {
        let f = build_filtration(&extract_channel(&img, ch), Direction::Sublevel, Some(ch));
        let (o0, o1) = reduce_boundary_matrix(&f).unwrap();
        assert_eq!(
            v.block(&layout, Direction::Sublevel, ch, 0).unwrap(),
            betti_vector(&o0, layout.grid()).values
        );
        assert_eq!(
            v.block(&layout, Direction::Sublevel, ch, 1).unwrap(),
            betti_vector(&o1, layout.grid()).values
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn oracle_equivalence(f in arb_field(12)) {
        prop_assert_eq!(compute_pd(&f), reduce_boundary_matrix(&f).unwrap());
    }

    #[test]
    fn betti_numbers_match_counting(f in arb_field(12)) {
        let (pd0, pd1) = compute_pd(&f);
        for t in threshold_grid(50).unwrap() {
            let slice = binary_slice(&f, t as u32).unwrap();
            let (b0, b1) = betti_by_counting(&slice);
            prop_assert_eq!(bars_alive_at(&pd0, t as u32), b0);
            prop_assert_eq!(bars_alive_at(&pd1, t as u32), b1);
            prop_assert_eq!(b0 as i64 - b1 as i64, euler_characteristic(&slice));
        }
    }

    #[test]
    fn one_essential_component(f in arb_field(12)) {
        let (pd0, pd1) = compute_pd(&f);
        let min = *f.activation().iter().min().unwrap();
        let essential: Vec<&Bar> = pd0.bars().iter().filter(|b| b.is_essential()).collect();
        prop_assert_eq!(essential.len(), 1);
        prop_assert_eq!(essential[0].birth, min);
        prop_assert_eq!(pd1.essential_count(), 0);
    }

    #[test]
    fn shifting_values_shifts_bars(f in arb_field(10), shift in 0u16..100) {
        let max = *f.activation().iter().max().unwrap();
        let shift = shift.min(SCALED_MAX - max);
        let shifted = field(f.rows(), f.cols(), f.activation().iter().map(|v| v + shift).collect());
        let (a0, a1) = compute_pd(&f);
        let (b0, b1) = compute_pd(&shifted);
        prop_assert_eq!(a0.map_values(|v| v + shift), b0);
        prop_assert_eq!(a1.map_values(|v| v + shift), b1);
    }

    /// Superlevel bars, read in value coordinates, count the features of
    /// `{value >= s}` and equal the sublevel bars of the inverted channel.
    #[test]
    fn superlevel_duality(f in arb_field(10)) {
        let ch = ChannelMatrix::from_scaled(f.rows(), f.cols(), f.activation().to_vec()).unwrap();
        let inverted = ChannelMatrix::from_scaled(f.rows(), f.cols(), f.activation().iter().map(|v| SCALED_MAX - v).collect()).unwrap();
        let sup = build_filtration(&ch, Direction::Superlevel, None);
        let (s0, s1) = compute_pd(&sup);
        let (i0, i1) = compute_pd(&build_filtration(&inverted, Direction::Sublevel, None));
        prop_assert_eq!(&s0, &i0);
        prop_assert_eq!(&s1, &i1);
        prop_assert_eq!(compute_pd(&f.inverted()), (s0.clone(), s1.clone()));

        for s in threshold_grid(20).unwrap() {
            let active: Vec<bool> = f.activation().iter().map(|&v| v >= s).collect();
            let slice = topofp::filtration::BinaryImage::new(f.rows(), f.cols(), active);
            let (b0, b1) = betti_by_counting(&slice);
            // In value coordinates a superlevel bar (b, d) with b >= d is
            // alive at s when d < s <= b.
            let alive = |pd: &PersistenceDiagram| pd
                .bars()
                .iter()
                .filter(|bar| {
                    let birth = SCALED_MAX - bar.birth;
                    let death = bar.death.map(|d| SCALED_MAX - d);
                    s <= birth && death.is_none_or(|d| d < s)
                })
                .count();
            prop_assert_eq!(alive(&s0), b0);
            prop_assert_eq!(alive(&s1), b1);
        }
    }
}
