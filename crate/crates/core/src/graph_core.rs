//! Graphs and hypergraphs (factor graphs) with the structural operations the
//! rest of the crate relies on: directed edges, the non-backtracking relation,
//! core extraction, nullity, bipartite form, deletion/contraction,
//! subdivision and spanning-tree counts.
//!
//! Ids are dense `usize` indices. All operations return new values.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Undirected multigraph. Loops and parallel edges are allowed.
///
/// Edge `k` joining `(a, b)` yields directed edges `2k` (a→b) and `2k+1` (b→a).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// Which half of [`Graph::delete_contract`] to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeOp {
    Delete,
    Contract,
}

/// Result of a core extraction on a [`Graph`], with maps back to the input.
#[derive(Debug, Clone)]
pub struct GraphCore {
    pub graph: Graph,
    /// `vertices[new] = old`.
    pub vertices: Vec<usize>,
    /// `edges[new] = old`.
    pub edges: Vec<usize>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for (k, &(a, b)) in edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge {k} ({a},{b}) references a vertex outside 0..{n}")));
            }
        }
        Ok(Self { n, edges })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, k: usize) -> (usize, usize) {
        self.edges[k]
    }

    pub fn is_loop(&self, k: usize) -> bool {
        let (a, b) = self.edges[k];
        a == b
    }

    /// Degree with loops counted twice.
    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().map(|&(a, b)| usize::from(a == i) + usize::from(b == i)).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    /// Incident edge ids of `i`; a loop appears once.
    pub fn incident(&self, i: usize) -> Vec<usize> {
        (0..self.edges.len()).filter(|&k| self.edges[k].0 == i || self.edges[k].1 == i).collect()
    }

    /// Adjacency matrix with multiplicities; a loop contributes 2 on the diagonal.
    pub fn adjacency(&self) -> Vec<Vec<i64>> {
        let mut a = vec![vec![0i64; self.n]; self.n];
        for &(x, y) in &self.edges {
            a[x][y] += 1;
            a[y][x] += 1;
        }
        a
    }

    pub fn num_components(&self) -> usize {
        component_labels(self.n, &self.edges).1
    }

    /// Connected components, each relabelled in increasing vertex order.
    pub fn components(&self) -> Vec<Graph> {
        let (label, count) = component_labels(self.n, &self.edges);
        let mut new_id = vec![0; self.n];
        let mut sizes = vec![0; count];
        for i in 0..self.n {
            new_id[i] = sizes[label[i]];
            sizes[label[i]] += 1;
        }
        let mut out: Vec<Graph> = sizes.iter().map(|&n| Graph::empty(n)).collect();
        for &(a, b) in &self.edges {
            out[label[a]].edges.push((new_id[a], new_id[b]));
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.num_components() == 1
    }

    /// `|E| - |V| + k(G)`.
    pub fn nullity(&self) -> usize {
        self.edges.len() + self.num_components() - self.n
    }

    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.nullity() == 0
    }

    // Directed edges.

    pub fn num_directed(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn origin(&self, e: usize) -> usize {
        let (a, b) = self.edges[e / 2];
        if e.is_multiple_of(2) {
            a
        } else {
            b
        }
    }

    pub fn terminus(&self, e: usize) -> usize {
        let (a, b) = self.edges[e / 2];
        if e.is_multiple_of(2) {
            b
        } else {
            a
        }
    }

    pub fn reverse(e: usize) -> usize {
        e ^ 1
    }

    /// The non-backtracking relation: `(e, e')` is listed iff `e' ⇀ e`,
    /// i.e. `t(e') = o(e)` and `e' ≠ ē`.
    pub fn directed_relation(&self) -> DirectedEdgeRelation {
        let m = self.num_directed();
        let mut pairs = Vec::new();
        for e in 0..m {
            for ep in 0..m {
                if self.terminus(ep) == self.origin(e) && ep != Self::reverse(e) {
                    pairs.push((e, ep));
                }
            }
        }
        DirectedEdgeRelation { size: m, pairs }
    }

    // Structural operations.

    pub fn delete_contract(&self, k: usize, op: EdgeOp) -> Result<Graph> {
        if k >= self.edges.len() {
            return Err(Error::UnknownEdge(k));
        }
        let mut edges = self.edges.clone();
        let (a, b) = edges.remove(k);
        if op == EdgeOp::Delete || a == b {
            return Ok(Graph { n: self.n, edges });
        }
        let (keep, gone) = (a.min(b), a.max(b));
        let relabel = |v: usize| {
            let v = if v == gone { keep } else { v };
            if v > gone {
                v - 1
            } else {
                v
            }
        };
        let edges = edges.into_iter().map(|(x, y)| (relabel(x), relabel(y))).collect();
        Ok(Graph { n: self.n - 1, edges })
    }

    pub fn delete_edge(&self, k: usize) -> Result<Graph> {
        self.delete_contract(k, EdgeOp::Delete)
    }

    pub fn contract_edge(&self, k: usize) -> Result<Graph> {
        self.delete_contract(k, EdgeOp::Contract)
    }

    /// Replace every edge by a path of `m` edges. New vertices are appended
    /// edge by edge.
    pub fn subdivide(&self, m: usize) -> Result<Graph> {
        if m < 1 {
            return Err(Error::InvalidArgument("subdivision factor must be >= 1".into()));
        }
        let mut n = self.n;
        let mut edges = Vec::with_capacity(self.edges.len() * m);
        for &(a, b) in &self.edges {
            let mut prev = a;
            for _ in 1..m {
                edges.push((prev, n));
                prev = n;
                n += 1;
            }
            edges.push((prev, b));
        }
        Ok(Graph { n, edges })
    }

    /// Disjoint union; vertices of `other` are shifted by `self.num_vertices()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let s = self.n;
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|&(a, b)| (a + s, b + s)));
        Graph { n: self.n + other.n, edges }
    }

    /// Repeatedly strip vertices of degree at most one.
    pub fn core(&self) -> GraphCore {
        let mut alive_v = vec![true; self.n];
        let mut alive_e = vec![true; self.edges.len()];
        let mut deg = self.degrees();
        let mut queue: VecDeque<usize> = (0..self.n).filter(|&i| deg[i] <= 1).collect();
        while let Some(i) = queue.pop_front() {
            if !alive_v[i] {
                continue;
            }
            alive_v[i] = false;
            for k in 0..self.edges.len() {
                let (a, b) = self.edges[k];
                if alive_e[k] && (a == i || b == i) {
                    alive_e[k] = false;
                    let other = if a == i { b } else { a };
                    deg[other] -= 1;
                    deg[i] -= 1;
                    if alive_v[other] && deg[other] <= 1 {
                        queue.push_back(other);
                    }
                }
            }
        }
        let vertices: Vec<usize> = (0..self.n).filter(|&i| alive_v[i]).collect();
        let mut new_id = vec![usize::MAX; self.n];
        for (new, &old) in vertices.iter().enumerate() {
            new_id[old] = new;
        }
        let edges: Vec<usize> = (0..self.edges.len()).filter(|&k| alive_e[k]).collect();
        let graph = Graph {
            n: vertices.len(),
            edges: edges.iter().map(|&k| (new_id[self.edges[k].0], new_id[self.edges[k].1])).collect(),
        };
        GraphCore { graph, vertices, edges }
    }

    /// Laplacian with loops ignored and parallel edges counted.
    pub fn laplacian(&self) -> Vec<Vec<i64>> {
        let mut l = vec![vec![0i64; self.n]; self.n];
        for &(a, b) in &self.edges {
            if a != b {
                l[a][a] += 1;
                l[b][b] += 1;
                l[a][b] -= 1;
                l[b][a] -= 1;
            }
        }
        l
    }

    /// Number of spanning trees via the matrix-tree theorem, in exact integers.
    pub fn spanning_tree_count(&self) -> Result<BigInt> {
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        if self.n == 1 {
            return Ok(BigInt::one());
        }
        let l = self.laplacian();
        let minor: Vec<Vec<BigInt>> =
            l[1..].iter().map(|row| row[1..].iter().map(|&x| BigInt::from(x)).collect()).collect();
        Ok(bareiss_determinant(minor))
    }
}

/// Fraction-free Gaussian elimination; exact determinant of an integer matrix.
pub fn bareiss_determinant(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

fn component_labels(n: usize, edges: &[(usize, usize)]) -> (Vec<usize>, usize) {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    for i in 0..n {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = count;
            count += 1;
        }
        label[i] = label[r];
    }
    (label, count)
}

/// The relation `e' ⇀ e` as a list of `(e, e')` pairs, i.e. the support of
/// the directed edge matrix by (row, column).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedEdgeRelation {
    pub size: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl DirectedEdgeRelation {
    pub fn contains(&self, e: usize, ep: usize) -> bool {
        self.pairs.contains(&(e, ep))
    }

    /// 0/1 matrix `M` with `M[e][e'] = 1` iff `e' ⇀ e`.
    pub fn to_matrix(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0i64; self.size]; self.size];
        for &(e, ep) in &self.pairs {
            m[e][ep] = 1;
        }
        m
    }

    /// `k_e = |{e' : e' ⇀ e}|`, the row sums of `M`.
    pub fn in_counts(&self) -> Vec<usize> {
        let mut k = vec![0; self.size];
        for &(e, _) in &self.pairs {
            k[e] += 1;
        }
        k
    }
}

/// A hypergraph `H = (V, F)`: each factor is an ordered list of distinct
/// member vertices. Directed edges `(α→i)` are indexed by factor order and
/// then member order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorGraph {
    n: usize,
    factors: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    vertex_factors: Vec<Vec<usize>>,
}

/// Result of a core extraction on a [`FactorGraph`].
#[derive(Debug, Clone)]
pub struct FactorGraphCore {
    pub graph: FactorGraph,
    pub vertices: Vec<usize>,
    pub factors: Vec<usize>,
}

impl FactorGraph {
    pub fn new(n: usize, factors: Vec<Vec<usize>>) -> Result<Self> {
        let mut vertex_factors = vec![Vec::new(); n];
        let mut offsets = Vec::with_capacity(factors.len() + 1);
        let mut acc = 0;
        for (a, f) in factors.iter().enumerate() {
            if f.is_empty() {
                return Err(Error::InvalidGraph(format!("factor {a} is empty")));
            }
            for (p, &i) in f.iter().enumerate() {
                if i >= n {
                    return Err(Error::InvalidGraph(format!("factor {a} references vertex {i} outside 0..{n}")));
                }
                if f[..p].contains(&i) {
                    return Err(Error::InvalidGraph(format!("factor {a} lists vertex {i} more than once")));
                }
                vertex_factors[i].push(a);
            }
            offsets.push(acc);
            acc += f.len();
        }
        offsets.push(acc);
        Ok(Self { n, factors, offsets, vertex_factors })
    }

    /// Pairwise factor graph of a loopless multigraph, one factor per edge.
    pub fn from_graph(g: &Graph) -> Result<Self> {
        if let Some(k) = (0..g.num_edges()).find(|&k| g.is_loop(k)) {
            return Err(Error::InvalidGraph(format!("edge {k} is a loop and cannot become a factor")));
        }
        Self::new(g.num_vertices(), g.edges().iter().map(|&(a, b)| vec![a, b]).collect())
    }

    /// Inverse of [`FactorGraph::from_graph`]; every factor must have two members.
    pub fn to_graph(&self) -> Result<Graph> {
        let mut edges = Vec::with_capacity(self.factors.len());
        for (a, f) in self.factors.iter().enumerate() {
            if f.len() != 2 {
                return Err(Error::InvalidGraph(format!("factor {a} has {} members", f.len())));
            }
            edges.push((f[0], f[1]));
        }
        Graph::new(self.n, edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, a: usize) -> &[usize] {
        &self.factors[a]
    }

    pub fn factors(&self) -> &[Vec<usize>] {
        &self.factors
    }

    /// Factors containing `i`, ascending.
    pub fn vertex_factors(&self, i: usize) -> &[usize] {
        &self.vertex_factors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.vertex_factors[i].len()
    }

    pub fn factor_degree(&self, a: usize) -> usize {
        self.factors[a].len()
    }

    pub fn num_directed(&self) -> usize {
        self.offsets[self.factors.len()]
    }

    /// Index of the directed edge `(a → factor(a)[pos])`.
    pub fn edge_index(&self, a: usize, pos: usize) -> usize {
        self.offsets[a] + pos
    }

    /// Position of `i` inside factor `a`.
    pub fn position(&self, a: usize, i: usize) -> Option<usize> {
        self.factors[a].iter().position(|&x| x == i)
    }

    /// `(factor, vertex)` of directed edge `e`.
    pub fn directed_edge(&self, e: usize) -> (usize, usize) {
        let a = self.offsets.partition_point(|&o| o <= e) - 1;
        (a, self.factors[a][e - self.offsets[a]])
    }

    /// `(e, e')` pairs with `e' = (β→j) ⇀ e = (α→i)`: `j ∈ α`, `j ≠ i`,
    /// `β ∋ j` and `β ≠ α`.
    pub fn directed_relation(&self) -> DirectedEdgeRelation {
        let mut pairs = Vec::new();
        for (a, f) in self.factors.iter().enumerate() {
            for (pi, &i) in f.iter().enumerate() {
                let e = self.offsets[a] + pi;
                let mut cols = Vec::new();
                for &j in f {
                    if j == i {
                        continue;
                    }
                    for &b in &self.vertex_factors[j] {
                        if b != a {
                            let pj = self.position(b, j).expect("incidence");
                            cols.push(self.offsets[b] + pj);
                        }
                    }
                }
                cols.sort_unstable();
                pairs.extend(cols.into_iter().map(|ep| (e, ep)));
            }
        }
        DirectedEdgeRelation { size: self.num_directed(), pairs }
    }

    /// Bipartite graph `B_H`: vertices `0..|V|`, then factors `|V|..|V|+|F|`;
    /// edge `e` of `B_H` is directed edge `e` of `H`.
    pub fn bipartite(&self) -> Graph {
        let mut edges = Vec::with_capacity(self.num_directed());
        for (a, f) in self.factors.iter().enumerate() {
            for &i in f {
                edges.push((i, self.n + a));
            }
        }
        Graph { n: self.n + self.factors.len(), edges }
    }

    pub fn num_components(&self) -> usize {
        self.bipartite().num_components()
    }

    /// Nullity of the bipartite form: `|E⃗| - |V| - |F| + k`.
    pub fn nullity(&self) -> usize {
        self.bipartite().nullity()
    }

    pub fn is_tree(&self) -> bool {
        self.bipartite().is_tree()
    }

    /// Repeatedly strip vertices and factors of degree at most one.
    pub fn core(&self) -> FactorGraphCore {
        let b = self.bipartite().core();
        let vertices: Vec<usize> = b.vertices.iter().copied().filter(|&x| x < self.n).collect();
        let factors: Vec<usize> = b.vertices.iter().copied().filter(|&x| x >= self.n).map(|x| x - self.n).collect();
        let mut new_v = vec![usize::MAX; self.n];
        for (k, &i) in vertices.iter().enumerate() {
            new_v[i] = k;
        }
        let facs = factors
            .iter()
            .map(|&a| self.factors[a].iter().filter(|&&i| new_v[i] != usize::MAX).map(|&i| new_v[i]).collect())
            .collect();
        let graph = FactorGraph::new(vertices.len(), facs).expect("core is a valid hypergraph");
        FactorGraphCore { graph, vertices, factors }
    }
}
