mod common;

use bpe_core::geometry::{bearing_laplacian, null_space_analysis, Configuration, DEFAULT_SEPARATION_FLOOR};
use bpe_core::graphs::{incidence_matrix, OrientedGraph};
use bpe_core::pe::{is_bpe, is_pe_bearing_laplacian, min_pe_edges_2d, BpeReport, PeSettings};
use bpe_core::scenario::{
    Overrides, Scenario, PYRAMID_3D, SKEW_CYCLE_ONE_PE, SQUARE_2D, STATIC_SQUARE, TRIANGLE_ONE_PE,
};
use bpe_core::trajectories::{check_similarity_validity, Motion};
use bpe_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::random_tree_motion;

fn analyze(text: &str) -> (Scenario, BpeReport) {
    let s = Scenario::from_toml_str(text, &Overrides::default()).unwrap();
    let report = is_bpe(&s.motion, &s.graph, &s.pe_settings()).unwrap();
    (s, report)
}

#[test]
fn square2d_is_bpe_with_every_tree_edge_excited() {
    let (_, r) = analyze(SQUARE_2D);
    assert!(r.is_bpe);
    assert_eq!(r.pe_edge_count(), 3);
    assert_eq!(r.min_pe_bound, Some(3));
    assert!(r.structural.consistent());
    assert_eq!(r.structural.acyclic_rule, Some(true));
    // A tree is never bearing rigid in the plane.
    assert!(!r.rank_always_maximal());
}

#[test]
fn pyramid3d_is_bpe_and_rigid() {
    let (s, r) = analyze(PYRAMID_3D);
    assert!(r.is_bpe);
    assert!(r.rank_always_maximal());
    assert_eq!(r.maximal_rank, 8);
    assert!(r.structural.consistent());
    assert!(check_similarity_validity(&s.motion, 30.0, 0.1).passed());
}

#[test]
fn static_square_is_not_bpe() {
    let (_, r) = analyze(STATIC_SQUARE);
    assert!(!r.is_bpe);
    assert_eq!(r.pe_edge_count(), 0);
    assert!(r.witness.mu.abs() < 1e-9);
    // Still infinitesimally rigid at every instant.
    assert!(r.rank_always_maximal());
    assert_eq!(r.structural.rigid_rule, Some(true));
}

#[test]
fn one_excited_edge_suffices_on_rigid_cycles() {
    for text in [TRIANGLE_ONE_PE, SKEW_CYCLE_ONE_PE] {
        let (_, r) = analyze(text);
        assert!(r.rank_always_maximal());
        assert_eq!(r.pe_edge_count(), 1);
        assert!(r.is_bpe, "μ = {}", r.witness.mu);
        assert!(!r.projector_witness.verdict.is_pe());
        assert_eq!(r.structural.rigid_rule, Some(true));
    }
}

#[test]
fn triangle_excites_only_the_sliding_edge() {
    let (s, r) = analyze(TRIANGLE_ONE_PE);
    let excited: Vec<bool> = r.per_edge.iter().map(|w| w.verdict.is_pe()).collect();
    let edges = s.graph.edges();
    let k = edges.iter().position(|&e| e == (1, 2)).unwrap();
    assert!(excited[k]);
    assert_eq!(r.min_pe_bound, Some(1));
}

#[test]
fn relative_test_agrees_with_full_report() {
    let (s, r) = analyze(SQUARE_2D);
    let w = is_pe_bearing_laplacian(&s.motion, &s.graph, &s.pe_settings()).unwrap();
    assert_eq!(w.mu, r.witness.mu);
    assert_eq!(w.window_minima.len(), r.witness.window_minima.len());
}

#[test]
fn random_trees_need_every_edge() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let settings = PeSettings::new(12.0, 36.0, 0.05);
    for n in 2..=6 {
        for d in [2, 3] {
            let (motion, graph, labels) = random_tree_motion(&mut rng, n, d, 0.6);
            let r = is_bpe(&motion, &graph, &settings).unwrap();
            assert_eq!(r.is_bpe, labels.iter().all(|&b| b));
            assert_eq!(r.structural.acyclic_rule, Some(true));
            assert!(r.structural.consistent());
        }
    }
}

#[test]
fn counting_bound_table() {
    assert_eq!(min_pe_edges_2d(4, 3).unwrap(), 3);
    assert_eq!(min_pe_edges_2d(4, 4).unwrap(), 2);
    assert_eq!(min_pe_edges_2d(4, 5).unwrap(), 1);
    assert_eq!(min_pe_edges_2d(4, 6).unwrap(), 1);
    assert_eq!(min_pe_edges_2d(3, 3).unwrap(), 1);
    assert!(matches!(min_pe_edges_2d(4, 2), Err(Error::InvalidCount { n: 4, m: 2 })));
    assert!(matches!(min_pe_edges_2d(4, 7), Err(Error::InvalidCount { .. })));
}

#[test]
fn analysis_rejects_short_horizons_and_coarse_steps() {
    let s = Scenario::from_toml_str(SQUARE_2D, &Overrides::default()).unwrap();
    let short = PeSettings::new(12.0, 20.0, 0.01);
    assert!(matches!(
        is_bpe(&s.motion, &s.graph, &short),
        Err(Error::HorizonTooShort { .. })
    ));
    let coarse = PeSettings::new(1.0, 20.0, 0.05);
    assert!(matches!(
        is_bpe(&s.motion, &s.graph, &coarse),
        Err(Error::StepTooCoarse { .. })
    ));
    let disconnected = OrientedGraph::new(4, vec![(0, 1), (2, 3)]).unwrap();
    assert!(matches!(
        is_bpe(&s.motion, &disconnected, &PeSettings::new(12.0, 48.0, 0.1)),
        Err(Error::DisconnectedGraph)
    ));
}

#[test]
fn null_space_of_the_desired_pyramid() {
    let s = Scenario::from_toml_str(PYRAMID_3D, &Overrides::default()).unwrap();
    for t in [0.0, 1.7, 5.0] {
        let p = s.motion.state(t).unwrap().p;
        let cfg = Configuration::new(3, p).unwrap();
        let l_b = bearing_laplacian(&cfg, &incidence_matrix(&s.graph, 3), DEFAULT_SEPARATION_FLOOR).unwrap();
        let report = null_space_analysis(&l_b, &cfg);
        assert_eq!(report.rank, 8);
        assert_eq!(report.matches_expected(), Some(true));
    }
}
