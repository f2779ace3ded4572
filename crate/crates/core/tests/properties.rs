use std::collections::BTreeSet;

use anderson_saw::saw::{classify_walks, enumerate_saws, script_w, w_prime_counts_at};
use anderson_saw::spectral::{baseline_distances, poisson_cdf, unfold_and_space, wigner_cdf, ks_distance};
use anderson_saw::{AndersonOperator, Complex64, ComplexEnergy, Graph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Connected graphs on 2..=8 vertices: a random spanning tree plus chords.
fn connected_graph() -> impl Strategy<Value = Graph> {
    (2usize..=8)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
            (Just(n), parents, prop::collection::vec((0..n, 0..n), 0..8))
        })
        .prop_map(|(n, parents, extra)| {
            let mut edges = BTreeSet::new();
            for (i, p) in parents.into_iter().enumerate() {
                edges.insert((p, i + 1));
            }
            for (u, v) in extra {
                if u != v {
                    edges.insert((u.min(v), u.max(v)));
                }
            }
            Graph::from_edges(n, &edges.into_iter().collect::<Vec<_>>()).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn walk_classes_partition_the_walks(graph in connected_graph()) {
        let n = graph.vertex_count();
        for x in 0..n {
            for y in (0..n).filter(|&y| y != x) {
                let c = classify_walks(&graph, x, y).unwrap();
                let total = enumerate_saws(&graph, x, c.d).len();
                prop_assert_eq!(c.y_count + c.x_count + c.xbar_count, total);
                prop_assert!(c.y_count >= 1);
                prop_assert_eq!(c.w_prime_count, c.y_count + c.x_count);
            }
        }
    }

    #[test]
    fn script_w_is_the_max_over_pairs(graph in connected_graph()) {
        let n = graph.vertex_count();
        for d in 1..=graph.diameter() {
            let mut best = 0;
            for x in 0..n {
                let batched = w_prime_counts_at(&graph, x, d, usize::MAX).unwrap();
                for y in graph.sphere(x, d) {
                    let direct = classify_walks(&graph, x, y).unwrap().w_prime_count;
                    prop_assert_eq!(batched[y], direct);
                    best = best.max(direct);
                }
            }
            prop_assert_eq!(script_w(&graph, d).unwrap(), best);
        }
    }

    #[test]
    fn walk_count_respects_degree_bound(graph in connected_graph(), length in 1usize..6) {
        let bound = graph.degree_bound();
        let cap = bound * bound.saturating_sub(1).pow(length as u32 - 1);
        for x in 0..graph.vertex_count() {
            let walks = enumerate_saws(&graph, x, length);
            prop_assert!(walks.len() <= cap);
            for w in &walks {
                let distinct: BTreeSet<_> = w.vertices().iter().collect();
                prop_assert_eq!(distinct.len(), length + 1);
                prop_assert!(w.vertices().windows(2).all(|e| graph.has_edge(e[0], e[1])));
            }
        }
    }

    #[test]
    fn spheres_partition_the_vertices(graph in connected_graph()) {
        let n = graph.vertex_count();
        for x in 0..n {
            let total: usize = (0..=graph.eccentricity(x)).map(|d| graph.sphere(x, d).len()).sum();
            prop_assert_eq!(total, n);
            prop_assert!((0..=graph.diameter()).all(|d| graph.sphere(x, d).len() <= graph.script_s(d)));
        }
    }

    #[test]
    fn walk_expansion_equals_the_resolvent(
        graph in connected_graph(),
        seed in any::<u64>(),
        energy in -3.0f64..3.0,
        eta in prop_oneof![Just(0.05), Just(0.5), Just(1.0)],
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let potential: Vec<f64> = (0..graph.vertex_count()).map(|_| 4.0 * rng.random::<f64>()).collect();
        let op = AndersonOperator::with_potential(&graph, potential).unwrap();
        let z = ComplexEnergy::new(energy, eta).unwrap();
        let direct = op.resolvent(z).unwrap().inverse().unwrap();
        for x in 0..graph.vertex_count() {
            let walks = op.saw_representation_from(x, z).unwrap();
            for (y, w) in walks.iter().enumerate().filter(|&(y, _)| y != x) {
                let g = direct[(x, y)];
                prop_assert!((w - g).norm() <= 1e-9 * g.norm(), "({x},{y}): {w} vs {g}");
            }
        }
    }

    #[test]
    fn fractional_power_is_subadditive(
        parts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..10),
        s in 0.01f64..0.99,
    ) {
        let terms: Vec<Complex64> = parts.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let lhs = terms.iter().sum::<Complex64>().norm().powf(s);
        let rhs: f64 = terms.iter().map(|t| t.norm().powf(s)).sum();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ks_prefers_the_generating_law(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poisson: Vec<f64> = (0..2000).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let wigner: Vec<f64> = (0..2000)
            .map(|_| (-4.0 * (1.0 - rng.random::<f64>()).ln() / std::f64::consts::PI).sqrt())
            .collect();
        prop_assert!(ks_distance(&poisson, poisson_cdf) < ks_distance(&poisson, wigner_cdf));
        prop_assert!(ks_distance(&wigner, wigner_cdf) < ks_distance(&wigner, poisson_cdf));
        let p = baseline_distances(&poisson).unwrap();
        let w = baseline_distances(&wigner).unwrap();
        prop_assert!(p.ks_poisson < p.ks_goe && w.ks_goe < w.ks_poisson);
    }

    #[test]
    fn unfolded_mean_is_one(seed in any::<u64>(), scale in 0.1f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spectra: Vec<Vec<f64>> = (0..10)
            .map(|_| {
                let mut v: Vec<f64> = (0..400).map(|_| scale * rng.random::<f64>()).collect();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        let ensemble = unfold_and_space(&spectra, 0.5).unwrap();
        prop_assert!((ensemble.mean() - 1.0).abs() <= 0.02, "mean {}", ensemble.mean());
    }
}
