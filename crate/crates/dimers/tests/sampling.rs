use dimers::graph::{honeycomb_hexagon, square_cells, BipartiteGraph};
use dimers::kasteleyn::{edge_probabilities, to_f64, KasteleynMatrix};
use dimers::oracle::graph_matchings;
use dimers::phasing::kasteleyn_phasing;
use dimers::sampler::{chi_square_uniform, collect_stats, exact_batch, glauber_batch, ChainConfig, StatsQuery};
use num_rational::BigRational;
use std::collections::HashMap;

fn check_marginals(g: &BipartiteGraph, samples: usize, seed: u64) {
    let ph = kasteleyn_phasing(g);
    let exact: Vec<f64> = edge_probabilities(g, &KasteleynMatrix::new(g, &ph)).unwrap().iter().map(to_f64).collect();
    let batch = exact_batch(g, &ph, samples, seed).unwrap();
    let st = collect_stats(g, &batch, &StatsQuery::default()).unwrap();
    for (e, &p) in exact.iter().enumerate() {
        let z = st.edge_z(e, p);
        assert!(z.abs() < 4.0, "edge {e}: freq {} vs {p}, z = {z}", st.edge_freq[e]);
    }
}

#[test]
fn exact_sampler_marginals_on_thirty_cells() {
    // a 5 x 6 block with its two white bottom corners moved to the sides
    let mut cells: Vec<(i64, i64)> = (0..5).flat_map(|x| (0..6).map(move |y| (x, y))).collect();
    cells.retain(|&c| c != (0, 0) && c != (4, 0));
    cells.extend([(5, 1), (-1, 1)]);
    assert_eq!(cells.len(), 30);
    let g = square_cells(&cells).unwrap();
    check_marginals(&g, 100_000, 1);

    // 30 triangles with non-uniform weights
    let g = honeycomb_hexagon(1, 3, 3).unwrap();
    assert_eq!(g.nw() + g.nb(), 30);
    let w: Vec<BigRational> = (0..g.edges.len()).map(|i| BigRational::new((1 + i as i64 % 4).into(), 2.into())).collect();
    check_marginals(&g.with_weights(&w).unwrap(), 100_000, 2);
}

#[test]
fn covers_of_the_small_hexagon_are_uniform() {
    let g = honeycomb_hexagon(2, 2, 2).unwrap();
    let all = graph_matchings(&g);
    assert_eq!(all.len(), 20);
    let index: HashMap<Vec<usize>, usize> = all
        .into_iter()
        .enumerate()
        .map(|(i, mut m)| {
            m.sort_unstable();
            (m, i)
        })
        .collect();
    let tally = |ms: &[dimers::height::Matching]| {
        let mut counts = vec![0usize; 20];
        for m in ms {
            let mut e = m.edges();
            e.sort_unstable();
            counts[index[&e]] += 1;
        }
        counts
    };
    let ph = kasteleyn_phasing(&g);
    let (_, p) = chi_square_uniform(&tally(&exact_batch(&g, &ph, 20_000, 9).unwrap().matchings));
    assert!(p > 0.01, "exact sampler p = {p}");
    let cfg = ChainConfig { chains: 8, burn_in: None, thin: 50, per_chain: 1000 };
    let (_, p) = chi_square_uniform(&tally(&glauber_batch(&g, cfg, 9).unwrap().matchings));
    assert!(p > 0.01, "glauber p = {p}");
}
