//! Small named graphs used throughout tests, examples and the CLI.

use rand::Rng;

use crate::graph_core::{FactorGraph, Graph};

pub fn path(n: usize) -> Graph {
    Graph::new(n, (1..n).map(|i| (i - 1, i)).collect()).expect("valid")
}

pub fn star(n: usize) -> Graph {
    Graph::new(n, (1..n).map(|i| (0, i)).collect()).expect("valid")
}

pub fn cycle(n: usize) -> Graph {
    assert!(n >= 1);
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect()).expect("valid")
}

pub fn complete(n: usize) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j));
        }
    }
    Graph::new(n, edges).expect("valid")
}

/// `B_n`: one vertex carrying `n` loops.
pub fn bouquet(n: usize) -> Graph {
    Graph::new(1, vec![(0, 0); n]).expect("valid")
}

/// Two vertices joined by three parallel edges (`X₁`).
pub fn theta() -> Graph {
    Graph::new(2, vec![(0, 1); 3]).expect("valid")
}

/// Two vertices, each with a loop, joined by one edge (`X₂`).
pub fn dumbbell() -> Graph {
    Graph::new(2, vec![(0, 0), (0, 1), (1, 1)]).expect("valid")
}

/// K₄ minus one edge: edges 01, 02, 03, 12, 23. Nullity two.
pub fn fig53() -> Graph {
    Graph::new(4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)]).expect("valid")
}

/// Complete bipartite `K_{a,b}`; left side `0..a`.
pub fn complete_bipartite(a: usize, b: usize) -> Graph {
    let mut edges = Vec::new();
    for i in 0..a {
        for j in 0..b {
            edges.push((i, a + j));
        }
    }
    Graph::new(a + b, edges).expect("valid")
}

/// Simple theta graph: two branch vertices joined by paths of 2, 2 and 1 edges.
pub fn simple_theta() -> Graph {
    Graph::new(4, vec![(0, 2), (2, 1), (0, 3), (3, 1), (0, 1)]).expect("valid")
}

/// Simple dumbbell: two triangles joined by a bridge.
pub fn simple_dumbbell() -> Graph {
    Graph::new(6, vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)]).expect("valid")
}

/// Simple bouquet: two triangles sharing vertex 0.
pub fn simple_bouquet() -> Graph {
    Graph::new(5, vec![(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]).expect("valid")
}

/// Uniform random labelled tree on `n` vertices (random attachment).
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Graph {
    let edges = (1..n).map(|i| (rng.random_range(0..i), i)).collect();
    Graph::new(n, edges).expect("valid")
}

/// Random connected simple graph: a random tree plus `extra` distinct chords.
pub fn random_connected<R: Rng>(n: usize, extra: usize, rng: &mut R) -> Graph {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (rng.random_range(0..i), i)).collect();
    let mut tries = 0;
    while edges.len() < n - 1 + extra && tries < 10_000 {
        tries += 1;
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let (a, b) = (a.min(b), a.max(b));
        if a != b && !edges.iter().any(|&(x, y)| (x.min(y), x.max(y)) == (a, b)) {
            edges.push((a, b));
        }
    }
    Graph::new(n, edges).expect("valid")
}

/// A hypergraph whose bipartite form is a subdivided theta graph: its
/// sub-coregraphs are the empty set, three cycles and the whole core.
pub fn hyper_theta() -> FactorGraph {
    FactorGraph::new(3, vec![vec![0, 1, 2], vec![0, 1], vec![1, 2]]).expect("valid")
}

/// A hypergraph with a cycle through factors 0 and 1 and a dangling factor
/// 2 = {2, 3}; the core drops factor 2 and vertex 3.
pub fn hyper_with_dangling_factor() -> FactorGraph {
    FactorGraph::new(4, vec![vec![0, 1, 2], vec![0, 1, 2], vec![2, 3]]).expect("valid")
}
