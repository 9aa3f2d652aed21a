use dimers::graph::{honeycomb_cells, honeycomb_hexagon, square_cells, square_rectangle, BipartiteGraph, TriCell};
use dimers::kasteleyn::{count, edge_probabilities, macmahon_count, partition_function, rectangle_z_product, to_f64, KasteleynMatrix};
use dimers::oracle::{brute_edge_probabilities, brute_partition, graph_matchings};
use dimers::phasing::kasteleyn_phasing;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::time::Instant;

#[test]
fn eight_by_eight_is_fast_and_exact() {
    let t = Instant::now();
    let z = count(&square_rectangle(8, 8).unwrap()).unwrap();
    assert_eq!(z, BigRational::from_integer(12_988_816.into()));
    assert!(t.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn rectangles_match_the_cosine_product() {
    for m in 1..=12usize {
        for n in 1..=12usize {
            if m * n % 2 == 1 {
                continue;
            }
            let z = to_f64(&count(&square_rectangle(m, n).unwrap()).unwrap());
            let p = rectangle_z_product(m, n);
            assert!((z - p).abs() <= 1e-9 * z, "{m}x{n}: {z} vs {p}");
        }
    }
}

#[test]
fn hexagons_match_the_boxed_plane_partition_product() {
    for a in 1..=4 {
        for b in 1..=4 {
            for c in 1..=4 {
                let z = count(&honeycomb_hexagon(a, b, c).unwrap()).unwrap();
                assert_eq!(z, BigRational::from_integer(macmahon_count(a, b, c)), "{a},{b},{c}");
            }
        }
    }
    assert_eq!(graph_matchings(&honeycomb_hexagon(2, 2, 2).unwrap()).len(), 20);
    assert_eq!(macmahon_count(2, 2, 2), BigInt::from(20));
}

fn square_neighbors(c: (i64, i64)) -> [(i64, i64); 4] {
    [(c.0 + 1, c.1), (c.0 - 1, c.1), (c.0, c.1 + 1), (c.0, c.1 - 1)]
}

/// Up triangle `(i, j, 0)` touches downs `(i, j)`, `(i - 1, j)`, `(i, j - 1)`.
fn tri_neighbors(c: TriCell) -> [TriCell; 3] {
    if c.2 == 0 {
        [(c.0, c.1, 1), (c.0 - 1, c.1, 1), (c.0, c.1 - 1, 1)]
    } else {
        [(c.0, c.1, 0), (c.0 + 1, c.1, 0), (c.0, c.1 + 1, 0)]
    }
}

/// A connected cell set grown by tiles (so often tileable) with an
/// occasional stray cell.
fn grow<T: Copy + Ord, const K: usize>(rng: &mut ChaCha8Rng, start: T, nb: impl Fn(T) -> [T; K], max: usize) -> Vec<T> {
    let mut set = BTreeSet::from([start, nb(start)[0]]);
    let target = rng.random_range(2..=max);
    let mut guard = 0;
    while set.len() + 1 < target && guard < 200 {
        guard += 1;
        let cells: Vec<T> = set.iter().copied().collect();
        let from = *cells.choose(rng).unwrap();
        let a = *nb(from).choose(rng).unwrap();
        if set.contains(&a) {
            continue;
        }
        let b = *nb(a).choose(rng).unwrap();
        if set.contains(&b) {
            continue;
        }
        set.insert(a);
        set.insert(b);
    }
    if rng.random_bool(0.15) && set.len() < max {
        let cells: Vec<T> = set.iter().copied().collect();
        let from = *cells.choose(rng).unwrap();
        set.insert(*nb(from).choose(rng).unwrap());
    }
    set.into_iter().collect()
}

fn random_weights(g: &BipartiteGraph, rng: &mut ChaCha8Rng) -> Vec<BigRational> {
    g.edges
        .iter()
        .map(|_| BigRational::new(rng.random_range(1..=9i64).into(), rng.random_range(1..=7i64).into()))
        .collect()
}

#[test]
fn kasteleyn_agrees_with_enumeration_on_random_regions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut tileable = 0;
    for trial in 0..200 {
        let g = if trial % 2 == 0 {
            square_cells(&grow(&mut rng, (0i64, 0i64), square_neighbors, 20)).unwrap()
        } else {
            honeycomb_cells(&grow(&mut rng, (0i64, 0i64, 0u8), tri_neighbors, 20)).unwrap()
        };
        let g = g.with_weights(&random_weights(&g, &mut rng)).unwrap();
        let ph = kasteleyn_phasing(&g);
        let brute = brute_partition(&g);
        let z = if g.is_balanced() { partition_function(&g, &ph).unwrap() } else { BigRational::zero() };
        assert_eq!(z, brute, "trial {trial}");
        if brute.is_zero() {
            assert!(brute_edge_probabilities(&g).is_none());
            continue;
        }
        tileable += 1;
        let k = KasteleynMatrix::new(&g, &ph);
        assert_eq!(Some(edge_probabilities(&g, &k).unwrap()), brute_edge_probabilities(&g), "trial {trial}");
    }
    assert!(tileable >= 150, "only {tileable} tileable regions");
}
