mod common;

use proptest::prelude::*;

use common::*;
use stcar::{AreaGraph, EdgeGraph, EdgeSet};

/// Endpoints of the unit segment separating two rook neighbours.
fn segment(a: usize, b: usize, ncol: usize) -> [(usize, usize); 2] {
    let (r, c) = (a / ncol, a % ncol);
    if b == a + 1 && b % ncol != 0 {
        [(r, c + 1), (r + 1, c + 1)]
    } else {
        [(r + 1, c), (r + 1, c + 1)]
    }
}

proptest! {
    #[test]
    fn edge_set_is_canonical_and_complete(seed in any::<u64>(), n in 2usize..30) {
        let g = random_graph(&mut rng(seed), n, 0.2);
        let es = EdgeSet::from_graph(&g);
        prop_assert_eq!(2 * es.len(), g.degrees().iter().sum::<usize>());
        for (e, &(i, k)) in es.edges().iter().enumerate() {
            prop_assert!(i < k && g.is_adjacent(i, k));
            prop_assert_eq!(es.index_of(k, i), Some(e));
        }
        prop_assert!(es.edges().windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(AreaGraph::from_dense(&g.to_dense()).unwrap(), g);
    }

    #[test]
    fn shared_endpoint_rule_matches_brute_force(seed in any::<u64>(), n in 2usize..20) {
        let g = random_graph(&mut rng(seed), n, 0.3);
        let es = EdgeSet::from_graph(&g);
        let eg = EdgeGraph::shared_endpoint(&es);
        let pairs = brute_edge_pairs(es.edges());
        prop_assert_eq!(eg.n_pairs(), pairs.len());
        for (a, b) in pairs {
            prop_assert!(eg.is_adjacent(a, b) && eg.is_adjacent(b, a));
        }
    }

    #[test]
    fn corner_rule_matches_segment_geometry(nrow in 1usize..7, ncol in 1usize..7) {
        prop_assume!(nrow * ncol >= 2);
        let g = AreaGraph::lattice(nrow, ncol).unwrap();
        let es = EdgeSet::from_graph(&g);
        let eg = EdgeGraph::lattice_corners(nrow, ncol, &es).unwrap();
        let mut count = 0;
        for a in 0..es.len() {
            prop_assert!(!eg.is_adjacent(a, a));
            for b in a + 1..es.len() {
                let (sa, sb) = (segment(es.edges()[a].0, es.edges()[a].1, ncol), segment(es.edges()[b].0, es.edges()[b].1, ncol));
                let touch = sa.iter().any(|p| sb.contains(p));
                prop_assert_eq!(eg.is_adjacent(a, b), touch);
                count += touch as usize;
            }
        }
        prop_assert_eq!(eg.n_pairs(), count);
    }
}

#[test]
fn lattice_sizes() {
    let g = AreaGraph::lattice(10, 10).unwrap();
    assert_eq!(EdgeSet::from_graph(&g).len(), 180);
    assert_eq!(g.n_components(), 1);
    assert_eq!(g.degree(0), 2);
    assert_eq!(g.degree(11), 4);
}

#[test]
fn invalid_graphs_are_rejected() {
    assert!(AreaGraph::from_pairs(3, &[(0, 0), (1, 2)]).is_err());
    assert!(AreaGraph::from_pairs(3, &[(0, 1)]).is_err());
    assert!(AreaGraph::from_pairs(2, &[(0, 2)]).is_err());
    assert!(AreaGraph::from_dense(&[vec![0, 1], vec![0, 0]]).is_err());
}
