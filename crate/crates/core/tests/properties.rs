mod common;

use std::f64::consts::PI;

use bpe_core::geometry::{bearing_laplacian, projector, Configuration, EdgeGeometry, DEFAULT_SEPARATION_FLOOR};
use bpe_core::graphs::{graph_laplacian, incidence_matrix, OrientedGraph};
use bpe_core::linalg;
use bpe_core::pe::{is_pe_direction, min_pe_edges_2d, DEFAULT_MU_FLOOR};
use bpe_core::simulation::integrate;
use bpe_core::trajectories::{Center, Deformation, DesiredMotion, Motion, Rotation};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_configuration, random_connected_graph, random_unit};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Arbitrary simple graph (possibly disconnected) from an edge mask.
fn graph_from_mask(n: usize, mask: u64) -> Option<OrientedGraph> {
    let mut edges = Vec::new();
    let mut bit = 0;
    for i in 0..n {
        for j in i + 1..n {
            if mask >> bit & 1 == 1 {
                edges.push(if mask >> (bit + 32) & 1 == 1 { (i, j) } else { (j, i) });
            }
            bit += 1;
        }
    }
    OrientedGraph::new(n, edges).ok()
}

fn l_b(p: &DVector<f64>, d: usize, g: &OrientedGraph) -> DMatrix<f64> {
    bearing_laplacian(
        &Configuration::new(d, p.clone()).unwrap(),
        &incidence_matrix(g, d),
        DEFAULT_SEPARATION_FLOOR,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projector_is_symmetric_idempotent_with_trace_d_minus_one(seed in any::<u64>(), d in 2usize..6) {
        let y = random_unit(&mut rng(seed), d);
        let p = projector(&y).unwrap();
        prop_assert!((&p - p.transpose()).norm() < 1e-15);
        prop_assert!((&p * &p - &p).norm() < 1e-14);
        prop_assert!((p.trace() - (d as f64 - 1.0)).abs() < 1e-14);
        prop_assert!((&p * &y).norm() < 1e-15);
    }

    #[test]
    fn projector_rejects_non_unit(scale in 0.5f64..0.999) {
        let y = DVector::from_vec(vec![scale, 0.0]);
        prop_assert!(projector(&y).is_err());
    }

    #[test]
    fn incidence_rank_detects_spanning_tree(n in 2usize..8, mask in any::<u64>()) {
        if let Some(g) = graph_from_mask(n, mask) {
            let inc = incidence_matrix(&g, 1);
            prop_assert!((&inc.h * DVector::from_element(n, 1.0)).norm() == 0.0);
            prop_assert_eq!(inc.rank() == n - 1, g.has_spanning_tree());
            for row in inc.h.row_iter() {
                prop_assert_eq!(row.iter().filter(|&&x| x == 1.0).count(), 1);
                prop_assert_eq!(row.iter().filter(|&&x| x == -1.0).count(), 1);
            }
        }
    }

    #[test]
    fn graph_laplacian_kernel_is_translations(seed in any::<u64>(), n in 2usize..8, d in 2usize..4) {
        let g = random_connected_graph(&mut rng(seed), n, n / 2);
        let l = graph_laplacian(&incidence_matrix(&g, d));
        let kernel = linalg::null_basis(&l, linalg::RANK_RTOL);
        prop_assert!(linalg::subspace_gap(&kernel, &linalg::translation_basis(n, d)) < 1e-8);
    }

    #[test]
    fn bearing_laplacian_invariances(
        seed in any::<u64>(),
        n in 2usize..7,
        d in 2usize..4,
        scale in 0.05f64..20.0,
        shift in prop::collection::vec(-50.0f64..50.0, 3),
    ) {
        let mut r = rng(seed);
        let g = random_connected_graph(&mut r, n, n);
        let p = random_configuration(&mut r, n, d, 1e-2);
        let base = l_b(&p, d, &g);
        let shift = DVector::from_column_slice(&shift[..d]);
        prop_assert!((l_b(&linalg::shift_blocks(&p, &shift), d, &g) - &base).norm() < 1e-11);
        prop_assert!((l_b(&(&p * scale), d, &g) - &base).norm() < 1e-12);
        for k in 0..g.edge_count() {
            prop_assert!((l_b(&p, d, &g.flipped(k)) - &base).norm() < 1e-14);
        }
        prop_assert!((&base * &p).norm() < 1e-12 * p.norm());
        prop_assert!((&base * linalg::translation_basis(n, d)).norm() < 1e-12);
        prop_assert!(linalg::min_eigenvalue(&base) > -1e-12);
    }

    #[test]
    fn energy_form_matches_edge_sum(seed in any::<u64>(), n in 2usize..7, d in 2usize..4) {
        let mut r = rng(seed);
        let g = random_connected_graph(&mut r, n, n);
        let p = random_configuration(&mut r, n, d, 1e-2);
        let x = random_configuration(&mut r, n, d, 0.0);
        let cfg = Configuration::new(d, p.clone()).unwrap();
        let geo = EdgeGeometry::new(&cfg, &g, DEFAULT_SEPARATION_FLOOR).unwrap();
        let quad = x.dot(&(l_b(&p, d, &g) * &x));
        let sum: f64 = g
            .edges()
            .iter()
            .zip(&geo.projectors)
            .map(|(&(i, j), pk)| (pk * (x.rows(j * d, d) - x.rows(i * d, d))).norm_squared())
            .sum();
        prop_assert!((quad - sum).abs() < 1e-11 * (1.0 + sum));
        prop_assert!((geo.apply_laplacian(&g, &x) - l_b(&p, d, &g) * &x).norm() < 1e-12 * (1.0 + x.norm()));
    }

    #[test]
    fn integrator_is_deterministic(seed in any::<u64>(), dt in 0.005f64..0.1, horizon in 0.0f64..3.0) {
        let a = DMatrix::from_fn(3, 3, |i, j| ((seed >> (i * 3 + j)) & 7) as f64 / 7.0 - 0.5);
        let run = || integrate(|t, x| Ok(&a * x + DVector::from_element(3, t.sin())), DVector::from_element(3, 1.0), horizon, dt);
        let (x, y) = (run().unwrap(), run().unwrap());
        prop_assert_eq!(&x.times, &y.times);
        prop_assert_eq!(&x.states, &y.states);
        prop_assert_eq!(*x.times.last().unwrap(), horizon);
    }

    #[test]
    fn larger_windows_never_lower_mu(omega in 0.05f64..1.0, amp in 0.0f64..1.5, t1 in 2.0f64..6.0, extra in 0.5f64..4.0) {
        let dt = 0.02;
        let horizon = 30.0;
        let steps = (horizon / dt) as usize;
        let ys: Vec<_> = (0..=steps)
            .map(|k| {
                let theta = amp * (omega * k as f64 * dt).sin();
                DVector::from_vec(vec![theta.cos(), theta.sin()])
            })
            .collect();
        let mu1 = is_pe_direction(&ys, dt, t1, DEFAULT_MU_FLOOR).unwrap().mu;
        let mu2 = is_pe_direction(&ys, dt, t1 + extra, DEFAULT_MU_FLOOR).unwrap().mu;
        prop_assert!(mu2 >= mu1 - 1e-12, "{} < {}", mu2, mu1);
    }

    #[test]
    fn desired_velocity_matches_finite_difference(
        omega in -1.0f64..1.0,
        scale in 0.5f64..2.0,
        freq in 0.1f64..2.0,
        seed in any::<u64>(),
        t in 0.0f64..20.0,
        center_agent in 0usize..4,
    ) {
        let mut r = rng(seed);
        let p0 = random_configuration(&mut r, 4, 3, 0.5);
        let motion = DesiredMotion::new(3, p0)
            .unwrap()
            .with_rotation(Rotation::Planar { axes: (2, 0), omega })
            .unwrap()
            .with_center(Center::Agent(center_agent))
            .unwrap()
            .with_scale(scale)
            .unwrap()
            .with_drift(random_unit(&mut r, 3) * 0.3)
            .unwrap()
            .with_deformation(Deformation {
                freq,
                sin_amp: random_configuration(&mut r, 4, 3, 0.0) * 0.05,
                cos_amp: random_configuration(&mut r, 4, 3, 0.0) * 0.05,
            })
            .unwrap();
        let h = 1e-5;
        let fd = (motion.eval_unchecked(t + h).p - motion.eval_unchecked(t - h).p) / (2.0 * h);
        prop_assert!((fd - motion.eval_unchecked(t).v).norm() < 1e-7);
    }

    #[test]
    fn counting_bound_is_non_increasing_in_edges(n in 2usize..12) {
        let max_m = n * (n - 1) / 2;
        let mut prev = usize::MAX;
        for m in n - 1..=max_m {
            let b = min_pe_edges_2d(n, m).unwrap();
            prop_assert!(b >= 1 && b <= prev);
            prev = b;
        }
        prop_assert_eq!(min_pe_edges_2d(n, n - 1).unwrap(), n - 1);
        prop_assert!(min_pe_edges_2d(n, max_m + 1).is_err());
        if n > 2 {
            prop_assert!(min_pe_edges_2d(n, n - 2).is_err());
        }
    }

    #[test]
    fn rotation_preserves_bearings_up_to_rotation(seed in any::<u64>(), t in 0.0f64..12.0) {
        let mut r = rng(seed);
        let p0 = random_configuration(&mut r, 3, 2, 0.2);
        let motion = DesiredMotion::new(2, p0.clone())
            .unwrap()
            .with_rotation(Rotation::Planar { axes: (0, 1), omega: PI / 6.0 })
            .unwrap();
        let p = motion.state(t).unwrap().p;
        // Pairwise distances are unchanged by a rigid rotation.
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let before = (p0.rows(2 * j, 2) - p0.rows(2 * i, 2)).norm();
            let after = (p.rows(2 * j, 2) - p.rows(2 * i, 2)).norm();
            prop_assert!((before - after).abs() < 1e-12);
        }
    }
}
