use num_bigint::BigUint;
use num_traits::ToPrimitive;
use tracegap_core::graphlab::{
    closed_walk_counts, irreducible_loop_counts, mc_expected_irreducible, random_regular, spectrum, Closure,
    RegularGraph,
};

#[test]
fn traces_match_power_sums_of_the_spectrum() {
    for seed in 0..5 {
        let g = random_regular(30, 3, seed).unwrap();
        let ev = spectrum(&g).eigenvalues;
        let counts = closed_walk_counts(&g, 8);
        for (ell, c) in counts.iter().enumerate() {
            let s: f64 = ev.iter().map(|l| l.powi(ell as i32)).sum();
            let c = c.to_f64().unwrap();
            assert!((s - c).abs() <= 1e-8 * c.max(1.0), "ell={ell}: {s} vs {c}");
        }
    }
}

#[test]
fn edge_lists_round_trip() {
    let g = random_regular(40, 5, 9).unwrap();
    let again = RegularGraph::from_edge_list(&g.to_edge_list()).unwrap();
    assert_eq!(g.edges(), again.edges());
    assert_eq!(closed_walk_counts(&g, 6), closed_walk_counts(&again, 6));
}

#[test]
fn irreducible_counts_on_the_petersen_graph() {
    // girth 5: no closed non-backtracking walks below length 5, and 12
    // pentagons, each traversed from 5 starts in 2 directions
    let outer: Vec<(usize, usize)> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
    let spokes: Vec<(usize, usize)> = (0..5).map(|i| (i, i + 5)).collect();
    let inner: Vec<(usize, usize)> = (0..5).map(|i| (5 + i, 5 + (i + 2) % 5)).collect();
    let edges: Vec<_> = outer.into_iter().chain(spokes).chain(inner).collect();
    let g = RegularGraph::from_edges(10, 3, &edges).unwrap();
    let cyc = irreducible_loop_counts(&g, 5, Closure::Cyclic);
    assert!(cyc[1..5].iter().all(|c| *c == BigUint::from(0u32)));
    assert_eq!(cyc[5], BigUint::from(120u32));
}

#[test]
fn monte_carlo_is_reproducible_and_seed_sensitive() {
    let a = mc_expected_irreducible(120, 3, 8, 5, 1).unwrap();
    let b = mc_expected_irreducible(120, 3, 8, 5, 1).unwrap();
    let c = mc_expected_irreducible(120, 3, 8, 5, 2).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_ne!(a.to_csv(), c.to_csv());
}
