use bethe_core::bethe_analysis::{random_interior_point, verify_bethe_zeta};
use bethe_core::exact_oracle::ising_log_z;
use bethe_core::fixtures::{random_connected, random_tree};
use bethe_core::graph_core::Graph;
use bethe_core::graph_poly::{
    omega, omega_from_theta, omega_subdivision_check, omega_subgraph_sum, theta, theta_enumerate,
};
use bethe_core::lbp_engine::{run_lbp, LbpConfig};
use bethe_core::loop_series::{loop_series_marginal, loop_series_z};
use bethe_core::models::BinaryPairwiseModel;
use bethe_core::zeta::{
    det_m_closed_form_graph, relation_matrix, scalar_ihara_bass, zeta_first_determinant_graph, zeta_ihara_bass_graph,
    GraphWeights,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph(seed: u64, n: usize, extra: usize) -> Graph {
    random_connected(n, extra, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn ising(g: Graph, seed: u64, coupling: f64, field: f64) -> BinaryPairwiseModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let j = (0..g.num_edges()).map(|_| rng.random_range(-coupling..coupling)).collect();
    let h = (0..g.num_vertices()).map(|_| rng.random_range(-field..field)).collect();
    BinaryPairwiseModel::new(g, j, h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn theta_deletion_contraction_matches_enumeration(seed in any::<u64>(), n in 2usize..7, extra in 0usize..4) {
        let g = graph(seed, n, extra);
        prop_assert_eq!(theta(&g).unwrap(), theta_enumerate(&g).unwrap());
    }

    #[test]
    fn omega_routes_agree(seed in any::<u64>(), n in 2usize..7, extra in 0usize..4) {
        let g = graph(seed, n, extra);
        let w = omega(&g).unwrap();
        prop_assert_eq!(&w, &omega_from_theta(&g).unwrap());
        prop_assert_eq!(&w, &omega_subgraph_sum(&g).unwrap());
    }

    #[test]
    fn omega_subdivision_law(seed in any::<u64>(), n in 3usize..6, extra in 1usize..3, m in 2usize..4) {
        prop_assert!(omega_subdivision_check(&graph(seed, n, extra), m).unwrap());
    }

    #[test]
    fn relation_matrix_determinant_closed_form(seed in any::<u64>(), n in 2usize..7, extra in 0usize..4) {
        let g = graph(seed, n, extra);
        let det = relation_matrix(&g.directed_relation()).determinant();
        let closed = det_m_closed_form_graph(&g) as f64;
        prop_assert!((det - closed).abs() <= 1e-8 * closed.abs().max(1.0), "{det} vs {closed}");
    }

    #[test]
    fn ihara_bass_with_edge_weights(seed in any::<u64>(), n in 3usize..7, extra in 0usize..4) {
        let g = graph(seed, n, extra);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..g.num_directed()).map(|_| rng.random_range(-0.6..0.6)).collect();
        let w = GraphWeights::scalar(&g, |e| u[e]);
        let r = zeta_ihara_bass_graph(&g, &w).unwrap();
        prop_assert!(r.residual < 1e-9, "residual {}", r.residual);
        prop_assert!((r.first_determinant - zeta_first_determinant_graph(&g, &w).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn scalar_ihara_bass_matches_directed_determinant(seed in any::<u64>(), n in 3usize..7, extra in 0usize..4, u in -0.9f64..0.9) {
        let g = graph(seed, n, extra);
        let first = zeta_first_determinant_graph(&g, &GraphWeights::uniform(&g, u)).unwrap();
        let ib = scalar_ihara_bass(&g, u);
        prop_assert!((first - ib).abs() <= 1e-9 * first.abs().max(1.0), "{first} vs {ib}");
    }

    #[test]
    fn lbp_is_exact_on_trees(seed in any::<u64>(), n in 1usize..9) {
        let g = random_tree(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let m = ising(g, seed, 1.5, 1.0);
        let run = run_lbp(&m.to_discrete(), &LbpConfig::default(), None).unwrap();
        prop_assert!(run.converged);
        prop_assert!((run.log_z_b - ising_log_z(&m).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn loop_series_recovers_partition_function(seed in any::<u64>(), n in 3usize..6, extra in 1usize..3) {
        let m = ising(graph(seed, n, extra), seed, 0.4, 0.5).to_discrete();
        let run = run_lbp(&m, &LbpConfig::default(), None).unwrap();
        prop_assume!(run.converged);
        let z = loop_series_z(&m, &run).unwrap();
        prop_assert!(z.discrepancy.unwrap() < 1e-6, "{:?}", z.discrepancy);
        let v = loop_series_marginal(&m, &run, (seed as usize) % n).unwrap();
        prop_assert!(v.discrepancy.unwrap() < 1e-6, "{:?}", v.discrepancy);
    }

    #[test]
    fn bethe_hessian_matches_zeta(seed in any::<u64>(), n in 3usize..6, extra in 0usize..3) {
        let m = ising(graph(seed, n, extra), seed, 1.0, 1.0);
        let b = random_interior_point(m.graph(), 0.05, &mut ChaCha8Rng::seed_from_u64(seed));
        let r = verify_bethe_zeta(&m, &b).unwrap();
        prop_assert!(r.ill_conditioned || r.residual < 1e-7, "residual {}", r.residual);
    }
}
