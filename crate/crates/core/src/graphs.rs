//! Oriented interaction graphs, incidence matrices and the graph Laplacian.
//!
//! Vertices are 0-based here. File formats use 1-based indices and go through
//! [`OrientedGraph::from_one_based_pairs`].

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// An undirected graph with a fixed orientation on each edge.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl OrientedGraph {
    /// Builds a graph from `(tail, head)` pairs.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGraph(format!("need at least 2 vertices, got {n}")));
        }
        let mut seen = std::collections::HashSet::new();
        let mut neighbors = vec![Vec::new(); n];
        for (k, &(tail, head)) in edges.iter().enumerate() {
            if tail >= n || head >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {} = ({}, {}) references a vertex outside 1..={n}",
                    k + 1,
                    tail + 1,
                    head + 1
                )));
            }
            if tail == head {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {}", tail + 1)));
            }
            if !seen.insert((tail.min(head), tail.max(head))) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge {{{}, {}}}",
                    tail + 1,
                    head + 1
                )));
            }
            neighbors[tail].push(head);
            neighbors[head].push(tail);
        }
        Ok(Self { n, edges, neighbors })
    }

    /// Builds a graph from 1-based undirected pairs, orienting each edge from
    /// the smaller index to the larger one.
    pub fn from_one_based_pairs(n: usize, pairs: &[[usize; 2]]) -> Result<Self> {
        let mut edges = Vec::with_capacity(pairs.len());
        for &[a, b] in pairs {
            if a == 0 || b == 0 {
                return Err(Error::InvalidGraph("vertex indices are 1-based".into()));
            }
            edges.push(((a.min(b)) - 1, (a.max(b)) - 1));
        }
        Self::new(n, edges)
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)).collect())
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Self::new(n, edges)
    }

    pub fn star(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (0, i)).collect())
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Self::new(n, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(tail, head)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbor set `N_i`, in edge order.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Same graph with the orientation of edge `k` reversed.
    pub fn flipped(&self, k: usize) -> Self {
        let mut edges = self.edges.clone();
        let (t, h) = edges[k];
        edges[k] = (h, t);
        Self {
            n: self.n,
            edges,
            neighbors: self.neighbors.clone(),
        }
    }

    fn component_count(&self) -> (usize, bool) {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.n;
        let mut has_cycle = false;
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                has_cycle = true;
            } else {
                parent[ra] = rb;
                components -= 1;
            }
        }
        (components, has_cycle)
    }

    /// True iff the underlying undirected graph is connected.
    pub fn has_spanning_tree(&self) -> bool {
        self.component_count().0 == 1
    }

    /// True iff the underlying undirected graph has no cycle.
    pub fn is_acyclic(&self) -> bool {
        !self.component_count().1
    }
}

/// Incidence matrix `H` together with its lifted form `H ⊗ I_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    pub h: DMatrix<f64>,
    pub h_bar: DMatrix<f64>,
    pub d: usize,
}

impl IncidenceMatrix {
    pub fn rank(&self) -> usize {
        linalg::numerical_rank(&self.h, linalg::RANK_RTOL)
    }
}

/// Row `k` holds `+1` at the head of edge `k` and `-1` at its tail.
pub fn incidence_matrix(g: &OrientedGraph, d: usize) -> IncidenceMatrix {
    let mut h = DMatrix::zeros(g.edge_count(), g.vertex_count());
    for (k, &(tail, head)) in g.edges().iter().enumerate() {
        h[(k, tail)] = -1.0;
        h[(k, head)] = 1.0;
    }
    let h_bar = h.kronecker(&DMatrix::<f64>::identity(d, d));
    IncidenceMatrix { h, h_bar, d }
}

/// `L = H̄ᵀ H̄`.
pub fn graph_laplacian(inc: &IncidenceMatrix) -> DMatrix<f64> {
    inc.h_bar.transpose() * &inc.h_bar
}

/// Smallest eigenvalue of `l` above `tol * λ_max`, or `None` if there is none.
pub fn smallest_positive_eigenvalue(l: &DMatrix<f64>, tol: f64) -> Option<f64> {
    let eig = l.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b));
    eig.eigenvalues
        .iter()
        .copied()
        .filter(|&v| v > tol * max)
        .min_by(|a, b| a.total_cmp(b))
}
