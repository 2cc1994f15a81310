//! Test-only motions and random instance generators.

#![allow(dead_code)]

use bpe_core::graphs::OrientedGraph;
use bpe_core::trajectories::{DesiredState, Motion};
use bpe_core::Result;
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A motion frozen at one position and velocity.
pub struct Frozen {
    pub d: usize,
    pub p: DVector<f64>,
    pub v: DVector<f64>,
}

impl Motion for Frozen {
    fn dim(&self) -> usize {
        self.d
    }

    fn agent_count(&self) -> usize {
        self.p.len() / self.d
    }

    fn state(&self, _t: f64) -> Result<DesiredState> {
        Ok(DesiredState {
            p: self.p.clone(),
            v: self.v.clone(),
        })
    }
}

/// One link of a [`TreeMotion`]: `p_child = p_parent + len·g(t)` with `g`
/// turning at rate `omega` in the plane spanned by the orthonormal pair
/// `(u, w)`.
#[derive(Debug, Clone)]
pub struct Link {
    pub parent: usize,
    pub child: usize,
    pub len: f64,
    pub u: DVector<f64>,
    pub w: DVector<f64>,
    pub omega: f64,
    pub phase: f64,
}

impl Link {
    fn bearing(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        let (s, c) = (self.omega * t + self.phase).sin_cos();
        let g = &self.u * c + &self.w * s;
        let g_dot = (&self.w * c - &self.u * s) * self.omega;
        (g, g_dot)
    }
}

/// Tree formation where every edge bearing is driven independently.
/// Links must be listed parent-first.
pub struct TreeMotion {
    pub d: usize,
    pub n: usize,
    pub links: Vec<Link>,
}

impl Motion for TreeMotion {
    fn dim(&self) -> usize {
        self.d
    }

    fn agent_count(&self) -> usize {
        self.n
    }

    fn state(&self, t: f64) -> Result<DesiredState> {
        let d = self.d;
        let mut p = DVector::zeros(d * self.n);
        let mut v = DVector::zeros(d * self.n);
        for link in &self.links {
            let (g, g_dot) = link.bearing(t);
            let pp = p.rows(link.parent * d, d) + g * link.len;
            let vp = v.rows(link.parent * d, d) + g_dot * link.len;
            p.rows_mut(link.child * d, d).copy_from(&pp);
            v.rows_mut(link.child * d, d).copy_from(&vp);
        }
        Ok(DesiredState { p, v })
    }
}

pub fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    loop {
        let x = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let r = x.norm();
        if r > 0.1 && r <= 1.0 {
            return x / r;
        }
    }
}

/// Random unit vector orthogonal to `u`.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, u: &DVector<f64>) -> DVector<f64> {
    loop {
        let x = random_unit(rng, u.len());
        let y = &x - u * u.dot(&x);
        if y.norm() > 0.1 {
            return y.normalize();
        }
    }
}

/// Random tree on `n` vertices as `(parent, child)` pairs with
/// `parent < child`.
pub fn random_tree_pairs(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|c| (rng.random_range(0..c), c)).collect()
}

/// Orients each pair at random.
pub fn orient_randomly(rng: &mut ChaCha8Rng, pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    pairs
        .iter()
        .map(|&(a, b)| if rng.random_bool(0.5) { (a, b) } else { (b, a) })
        .collect()
}

/// Random connected graph: a random tree plus up to `extra` further edges.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> OrientedGraph {
    let mut pairs = random_tree_pairs(rng, n);
    for _ in 0..extra {
        if pairs.len() == n * (n - 1) / 2 {
            break;
        }
        loop {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let (a, b) = (a.min(b), a.max(b));
            if a != b && !pairs.contains(&(a, b)) {
                pairs.push((a, b));
                break;
            }
        }
    }
    let edges = orient_randomly(rng, &pairs);
    OrientedGraph::new(n, edges).expect("valid random graph")
}

/// Random configuration in `[-2, 2]^{dn}` with all agents at least
/// `min_sep` apart.
pub fn random_configuration(rng: &mut ChaCha8Rng, n: usize, d: usize, min_sep: f64) -> DVector<f64> {
    'retry: loop {
        let p = DVector::from_fn(d * n, |_, _| rng.random_range(-2.0..2.0));
        for i in 0..n {
            for j in i + 1..n {
                if (p.rows(i * d, d) - p.rows(j * d, d)).norm() < min_sep {
                    continue 'retry;
                }
            }
        }
        return p;
    }
}

/// Random tree motion where each link turns with probability `p_turn`.
/// Returns the motion, a randomly oriented graph of its links, and the
/// ground-truth excitation label of every graph edge.
pub fn random_tree_motion(
    rng: &mut ChaCha8Rng,
    n: usize,
    d: usize,
    p_turn: f64,
) -> (TreeMotion, OrientedGraph, Vec<bool>) {
    let pairs = random_tree_pairs(rng, n);
    let links: Vec<Link> = pairs
        .iter()
        .map(|&(parent, child)| {
            let u = random_unit(rng, d);
            let w = random_orthogonal(rng, &u);
            let omega = if rng.random_bool(p_turn) {
                rng.random_range(0.3..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }
            } else {
                0.0
            };
            Link {
                parent,
                child,
                len: rng.random_range(0.5..2.0),
                u,
                w,
                omega,
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            }
        })
        .collect();
    let labels = links.iter().map(|l| l.omega != 0.0).collect();
    let graph = OrientedGraph::new(n, orient_randomly(rng, &pairs)).expect("valid tree");
    (TreeMotion { d, n, links }, graph, labels)
}
