//! Graph zeta functions with matrix weights: the directed edge matrix
//! `M(u)`, `ζ⁻¹ = det(I - M(u))`, the Ihara-Bass type factorization, the
//! closed form of `det M`, Perron-Frobenius bounds, the Hashimoto limit and a
//! power-trace prime-cycle oracle.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph_core::{DirectedEdgeRelation, FactorGraph, Graph};
use crate::linalg::{self, det, identity};
use crate::poly::Poly;

/// Matrix weights `u^α_{j→i}` (shape `r_i × r_j`) for every factor `α` and
/// ordered pair of distinct members.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorWeights {
    dims: Vec<usize>,
    /// `blocks[α][pi * d_α + pj] = u^α_{j→i}`; diagonal slots are unused.
    blocks: Vec<Vec<DMatrix<f64>>>,
}

impl FactorWeights {
    pub fn zeros(g: &FactorGraph, dims: Vec<usize>) -> Self {
        let blocks = g
            .factors()
            .iter()
            .map(|f| {
                let d = f.len();
                (0..d * d).map(|s| DMatrix::zeros(dims[f[s / d]], dims[f[s % d]])).collect()
            })
            .collect();
        Self { dims, blocks }
    }

    /// Scalar weights (`r ≡ 1`) from `f(α, pi, pj) = u^α_{j→i}`.
    pub fn scalar(g: &FactorGraph, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut w = Self::zeros(g, vec![1; g.num_vertices()]);
        for a in 0..g.num_factors() {
            let d = g.factor_degree(a);
            for pi in 0..d {
                for pj in 0..d {
                    if pi != pj {
                        w.blocks[a][pi * d + pj][(0, 0)] = f(a, pi, pj);
                    }
                }
            }
        }
        w
    }

    pub fn uniform(g: &FactorGraph, u: f64) -> Self {
        Self::scalar(g, |_, _, _| u)
    }

    /// Entries i.i.d. uniform on `(-scale, scale)`.
    pub fn random<R: Rng>(g: &FactorGraph, dims: Vec<usize>, scale: f64, rng: &mut R) -> Self {
        let mut w = Self::zeros(g, dims);
        for blocks in &mut w.blocks {
            for b in blocks.iter_mut() {
                for x in b.iter_mut() {
                    *x = rng.random_range(-scale..scale);
                }
            }
        }
        w
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// `u^α_{j→i}` with `i = α[pi]`, `j = α[pj]`.
    pub fn get(&self, a: usize, pi: usize, pj: usize) -> &DMatrix<f64> {
        let d = (self.blocks[a].len() as f64).sqrt() as usize;
        &self.blocks[a][pi * d + pj]
    }

    pub fn set(&mut self, a: usize, pi: usize, pj: usize, m: DMatrix<f64>) -> Result<()> {
        let d = (self.blocks[a].len() as f64).sqrt() as usize;
        let slot = &mut self.blocks[a][pi * d + pj];
        if slot.shape() != m.shape() {
            return Err(Error::Shape(format!(
                "u for factor {a} ({pj}→{pi}) must be {:?}, got {:?}",
                slot.shape(),
                m.shape()
            )));
        }
        *slot = m;
        Ok(())
    }

    fn check(&self, g: &FactorGraph) -> Result<()> {
        if self.dims.len() != g.num_vertices() || self.blocks.len() != g.num_factors() {
            return Err(Error::Shape("weights do not match the factor graph".into()));
        }
        for a in 0..g.num_factors() {
            let d = g.factor_degree(a);
            if self.blocks[a].len() != d * d {
                return Err(Error::Shape(format!("factor {a} has the wrong number of blocks")));
            }
        }
        Ok(())
    }
}

/// Matrix weight `u_e` of shape `r_{t(e)} × r_{o(e)}` for every directed edge
/// of a [`Graph`].
#[derive(Debug, Clone, PartialEq)]
pub struct GraphWeights {
    pub dims: Vec<usize>,
    pub u: Vec<DMatrix<f64>>,
}

impl GraphWeights {
    pub fn scalar(g: &Graph, f: impl Fn(usize) -> f64) -> Self {
        Self {
            dims: vec![1; g.num_vertices()],
            u: (0..g.num_directed()).map(|e| DMatrix::from_element(1, 1, f(e))).collect(),
        }
    }

    pub fn uniform(g: &Graph, u: f64) -> Self {
        Self::scalar(g, |_| u)
    }

    pub fn random<R: Rng>(g: &Graph, dims: Vec<usize>, scale: f64, rng: &mut R) -> Self {
        let u = (0..g.num_directed())
            .map(|e| DMatrix::from_fn(dims[g.terminus(e)], dims[g.origin(e)], |_, _| rng.random_range(-scale..scale)))
            .collect();
        Self { dims, u }
    }

    fn check(&self, g: &Graph) -> Result<()> {
        if self.dims.len() != g.num_vertices() || self.u.len() != g.num_directed() {
            return Err(Error::Shape("weights do not match the graph".into()));
        }
        for e in 0..g.num_directed() {
            let want = (self.dims[g.terminus(e)], self.dims[g.origin(e)]);
            if self.u[e].shape() != want {
                return Err(Error::Shape(format!("u_{e} must be {want:?}")));
            }
        }
        Ok(())
    }
}

fn offsets(sizes: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut out = vec![0];
    for s in sizes {
        out.push(out.last().expect("non-empty") + s);
    }
    out
}

/// `M(u)` over directed edges `(α→i)`: block `(e, e')` is `u^α_{j→i}` when
/// `e' = (β→j) ⇀ e = (α→i)`.
pub fn directed_edge_matrix(g: &FactorGraph, w: &FactorWeights) -> Result<DMatrix<f64>> {
    w.check(g)?;
    let block = |e: usize| w.dims[g.directed_edge(e).1];
    let off = offsets((0..g.num_directed()).map(block));
    let n = *off.last().expect("non-empty");
    let mut m = DMatrix::zeros(n, n);
    for (e, ep) in g.directed_relation().pairs {
        let (a, i) = g.directed_edge(e);
        let (_, j) = g.directed_edge(ep);
        let u = w.get(a, g.position(a, i).expect("member"), g.position(a, j).expect("member"));
        m.view_mut((off[e], off[ep]), u.shape()).copy_from(u);
    }
    Ok(m)
}

/// `M(u)` for a graph: block `(e, e')` is `u_e` when `t(e') = o(e)`, `e' ≠ ē`.
pub fn directed_edge_matrix_graph(g: &Graph, w: &GraphWeights) -> Result<DMatrix<f64>> {
    w.check(g)?;
    let off = offsets((0..g.num_directed()).map(|e| w.dims[g.terminus(e)]));
    let n = *off.last().expect("non-empty");
    let mut m = DMatrix::zeros(n, n);
    for (e, ep) in g.directed_relation().pairs {
        m.view_mut((off[e], off[ep]), w.u[e].shape()).copy_from(&w.u[e]);
    }
    Ok(m)
}

/// `ζ⁻¹ = det(I - M(u))`.
pub fn zeta_first_determinant(g: &FactorGraph, w: &FactorWeights) -> Result<f64> {
    let m = directed_edge_matrix(g, w)?;
    Ok(det(&(identity(m.nrows()) - m)))
}

pub fn zeta_first_determinant_graph(g: &Graph, w: &GraphWeights) -> Result<f64> {
    let m = directed_edge_matrix_graph(g, w)?;
    Ok(det(&(identity(m.nrows()) - m)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZetaReport {
    /// `det(I - M(u))`.
    pub first_determinant: f64,
    /// Vertex-indexed determinant (`det(I - D + W)` or `det(I + D̂ - Â)`).
    pub vertex_determinant: f64,
    /// `det U_α` per factor, or `det(I - u_e u_ē)` per undirected edge.
    pub local_determinants: Vec<f64>,
    /// Product of the vertex and local determinants.
    pub ihara_bass: f64,
    /// `|first - ihara_bass| / max(1, |first|)`.
    pub residual: f64,
}

fn report(first: f64, vertex: f64, local: Vec<f64>) -> ZetaReport {
    let ib = vertex * local.iter().product::<f64>();
    ZetaReport {
        first_determinant: first,
        vertex_determinant: vertex,
        local_determinants: local,
        ihara_bass: ib,
        residual: (first - ib).abs() / first.abs().max(1.0),
    }
}

/// Ihara-Bass type formula `ζ⁻¹ = det(I - D + W) ∏ det U_α` where `U_α` has
/// identity diagonal blocks and `u^α_{j→i}` at `(i, j)`, and `W_α = U_α⁻¹`.
pub fn zeta_ihara_bass(g: &FactorGraph, w: &FactorWeights) -> Result<ZetaReport> {
    let first = zeta_first_determinant(g, w)?;
    let off = offsets(w.dims.iter().copied());
    let n = *off.last().expect("non-empty");
    let mut k = identity(n);
    for i in 0..g.num_vertices() {
        let d = g.degree(i) as f64;
        for r in off[i]..off[i + 1] {
            k[(r, r)] -= d;
        }
    }
    let mut local = Vec::with_capacity(g.num_factors());
    for a in 0..g.num_factors() {
        let f = g.factor(a);
        let loff = offsets(f.iter().map(|&i| w.dims[i]));
        let size = *loff.last().expect("non-empty");
        let mut u = identity(size);
        for pi in 0..f.len() {
            for pj in 0..f.len() {
                if pi != pj {
                    let b = w.get(a, pi, pj);
                    u.view_mut((loff[pi], loff[pj]), b.shape()).copy_from(b);
                }
            }
        }
        let du = det(&u);
        let inv = u.try_inverse().filter(|_| du.abs() > 1e-300).ok_or(Error::SingularFactor(a))?;
        local.push(du);
        for (pi, &i) in f.iter().enumerate() {
            for (pj, &j) in f.iter().enumerate() {
                let blk = inv.view((loff[pi], loff[pj]), (w.dims[i], w.dims[j]));
                let mut target = k.view_mut((off[i], off[j]), (w.dims[i], w.dims[j]));
                target += blk;
            }
        }
    }
    Ok(report(first, det(&k), local))
}

/// Graph form: `ζ⁻¹ = det(I + D̂ - Â) ∏_{[e]} det(I - u_e u_ē)`.
pub fn zeta_ihara_bass_graph(g: &Graph, w: &GraphWeights) -> Result<ZetaReport> {
    let first = zeta_first_determinant_graph(g, w)?;
    let off = offsets(w.dims.iter().copied());
    let n = *off.last().expect("non-empty");
    let mut k = identity(n);
    let mut local = Vec::with_capacity(g.num_edges());
    for e in 0..g.num_directed() {
        let (t, o) = (g.terminus(e), g.origin(e));
        let rt = w.dims[t];
        let uu = &w.u[e] * &w.u[Graph::reverse(e)];
        let inner = identity(rt) - &uu;
        if e % 2 == 0 {
            local.push(det(&inner));
        }
        let inv = inner.try_inverse().ok_or(Error::SingularFactor(e / 2))?;
        let mut diag = k.view_mut((off[t], off[t]), (rt, rt));
        diag += &inv * &uu;
        let mut adj = k.view_mut((off[t], off[o]), (rt, w.dims[o]));
        adj -= &inv * &w.u[e];
    }
    Ok(report(first, det(&k), local))
}

/// Scalar Ihara-Bass: `(1 - u²)^{|E|-|V|} det(I - uA + u²(D - I))`.
pub fn scalar_ihara_bass(g: &Graph, u: f64) -> f64 {
    let n = g.num_vertices();
    let a = g.adjacency();
    let d = g.degrees();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { 1.0 + u * u * (d[i] as f64 - 1.0) } else { 0.0 };
        diag - u * a[i][j] as f64
    });
    let exp = g.num_edges() as i32 - n as i32;
    (1.0 - u * u).powi(exp) * det(&m)
}

/// `det M(1) = ∏_i (1 - d_i) ∏_α (1 - d_α)`.
pub fn det_m_closed_form(g: &FactorGraph) -> i64 {
    let v: i64 = (0..g.num_vertices()).map(|i| 1 - g.degree(i) as i64).product();
    let f: i64 = (0..g.num_factors()).map(|a| 1 - g.factor_degree(a) as i64).product();
    v * f
}

/// Graph version of [`det_m_closed_form`] (every edge has two ends).
pub fn det_m_closed_form_graph(g: &Graph) -> i64 {
    let v: i64 = g.degrees().iter().map(|&d| 1 - d as i64).product();
    v * if g.num_edges().is_multiple_of(2) { 1 } else { -1 }
}

/// `(k_m, k_M)`: extreme row sums of the 0/1 matrix `M`.
pub fn perron_frobenius_bounds(rel: &DirectedEdgeRelation) -> (usize, usize) {
    let k = rel.in_counts();
    (k.iter().copied().min().unwrap_or(0), k.iter().copied().max().unwrap_or(0))
}

pub fn relation_matrix(rel: &DirectedEdgeRelation) -> DMatrix<f64> {
    linalg::from_rows(&rel.to_matrix())
}

/// `ζ⁻¹ ≈ exp(-Σ_{k≤K} tr(Mᵏ)/k)` with a bound on the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimeCycleEstimate {
    pub value: f64,
    /// Bound on `|Σ_{k>K} tr(Mᵏ)/k|`; infinite when `‖M‖_∞ ≥ 1`.
    pub log_tail_bound: f64,
}

pub fn zeta_inverse_prime_cycles(m: &DMatrix<f64>, terms: usize) -> PrimeCycleEstimate {
    let n = m.nrows();
    let mut p = identity(n);
    let mut s = 0.0;
    for k in 1..=terms {
        p = &p * m;
        s += p.trace() / k as f64;
    }
    let r = (0..n).map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let tail =
        if r < 1.0 { n as f64 * r.powi(terms as i32 + 1) / ((terms + 1) as f64 * (1.0 - r)) } else { f64::INFINITY };
    PrimeCycleEstimate { value: (-s).exp(), log_tail_bound: tail }
}

/// Exact `det(I - uM)` as an integer polynomial in `u` (graph relation).
pub fn zeta_inverse_polynomial_graph(g: &Graph) -> Poly {
    linalg::det_i_minus_u_m(&g.directed_relation().to_matrix())
}

/// Exact `det(I - uM)` for a hypergraph.
pub fn zeta_inverse_polynomial(g: &FactorGraph) -> Poly {
    linalg::det_i_minus_u_m(&g.directed_relation().to_matrix())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashimotoCheck {
    pub zeta_inverse: Poly,
    pub nullity: usize,
    pub spanning_trees: BigInt,
    /// `[det(I - uM) / (1 - u)^{n}]` evaluated at `u = 1`.
    pub lhs: BigInt,
    /// `-2^{n} (n - 1) κ(G)`.
    pub rhs: BigInt,
    pub residual: BigInt,
}

/// Exact check of `lim_{u→1} ζ⁻¹(u) (1-u)^{-(|E|-|V|+1)} = -2^{|E|-|V|+1}(|E|-|V|) κ(G)`.
pub fn hashimoto_limit_check(g: &Graph) -> Result<HashimotoCheck> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.nullity();
    if n < 2 {
        return Err(Error::Nullity { expected: 2, found: n });
    }
    let zeta_inverse = zeta_inverse_polynomial_graph(g);
    let q = zeta_inverse
        .div_one_minus_x_pow(n)
        .ok_or_else(|| Error::Numeric("ζ⁻¹ lacks the expected zero at u = 1".into()))?;
    let lhs: BigInt = q.coeffs().iter().fold(BigInt::zero(), |acc, c| acc + c);
    let kappa = g.spanning_tree_count()?;
    let rhs = -(BigInt::one() << n) * BigInt::from(n - 1) * &kappa;
    Ok(HashimotoCheck { residual: &lhs - &rhs, zeta_inverse, nullity: n, spanning_trees: kappa, lhs, rhs })
}
