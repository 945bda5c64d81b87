//! Brute-force ground truth: partition function, marginals, Gibbs free
//! energy, tree covariance chains and matching enumeration.
//!
//! Joint configurations are enumerated row-major over vertex ids (vertex 0 is
//! the most significant digit).

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph_core::Graph;
use crate::models::{BinaryPairwiseModel, DiscreteModel};

pub const DEFAULT_STATE_CAP: u128 = 1 << 24;
pub const DEFAULT_EDGE_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSummary {
    pub z: f64,
    pub log_z: f64,
    pub vertex_marginals: Vec<Vec<f64>>,
    pub factor_marginals: Vec<Vec<f64>>,
}

/// Calls `f` on every configuration in row-major order.
pub fn for_each_configuration(card: &[usize], mut f: impl FnMut(&[usize])) {
    let n = card.len();
    let mut x = vec![0usize; n];
    loop {
        f(&x);
        let mut p = n;
        loop {
            if p == 0 {
                return;
            }
            p -= 1;
            x[p] += 1;
            if x[p] < card[p] {
                break;
            }
            x[p] = 0;
        }
    }
}

fn log_weight(model: &DiscreteModel, x: &[usize]) -> f64 {
    (0..model.graph().num_factors()).map(|a| model.table(a)[model.index_of(a, x)].ln()).sum()
}

fn check_cap(model: &DiscreteModel, cap: u128) -> Result<()> {
    let size = model.state_space_size();
    if size > cap {
        return Err(Error::CapExceeded { what: "state space", size, cap });
    }
    Ok(())
}

pub fn brute_force(model: &DiscreteModel) -> Result<ExactSummary> {
    brute_force_with_cap(model, DEFAULT_STATE_CAP)
}

/// Exact `Z` and marginals by exhaustive summation, accumulated with a
/// max-shift in the log domain.
pub fn brute_force_with_cap(model: &DiscreteModel, cap: u128) -> Result<ExactSummary> {
    check_cap(model, cap)?;
    let g = model.graph();
    let mut shift = f64::NEG_INFINITY;
    for_each_configuration(model.cards(), |x| shift = shift.max(log_weight(model, x)));
    if !shift.is_finite() {
        return Err(Error::InvalidModel("every configuration has zero weight".into()));
    }
    let mut total = 0.0;
    let mut vm: Vec<Vec<f64>> = model.cards().iter().map(|&q| vec![0.0; q]).collect();
    let mut fm: Vec<Vec<f64>> = (0..g.num_factors()).map(|a| vec![0.0; model.table(a).len()]).collect();
    for_each_configuration(model.cards(), |x| {
        let w = (log_weight(model, x) - shift).exp();
        if w == 0.0 {
            return;
        }
        total += w;
        for (i, &s) in x.iter().enumerate() {
            vm[i][s] += w;
        }
        for (a, t) in fm.iter_mut().enumerate() {
            t[model.index_of(a, x)] += w;
        }
    });
    for t in vm.iter_mut().chain(fm.iter_mut()) {
        for v in t.iter_mut() {
            *v /= total;
        }
    }
    let log_z = shift + total.ln();
    Ok(ExactSummary { z: log_z.exp(), log_z, vertex_marginals: vm, factor_marginals: fm })
}

/// Normalized joint distribution in row-major order.
pub fn joint_distribution(model: &DiscreteModel) -> Result<Vec<f64>> {
    check_cap(model, DEFAULT_STATE_CAP)?;
    let mut lw = Vec::with_capacity(model.state_space_size() as usize);
    for_each_configuration(model.cards(), |x| lw.push(log_weight(model, x)));
    let shift = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|&l| (l - shift).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

/// `log Z` of an Ising model by direct summation of `exp(Σ J x x + Σ h x)`.
pub fn ising_log_z(m: &BinaryPairwiseModel) -> Result<f64> {
    let n = m.graph().num_vertices();
    if n >= 25 {
        return Err(Error::CapExceeded { what: "state space", size: 1u128 << n, cap: DEFAULT_STATE_CAP });
    }
    let mut lw = Vec::with_capacity(1 << n);
    for mask in 0u64..(1 << n) {
        let s: Vec<usize> = (0..n).map(|i| (mask >> i & 1) as usize).collect();
        lw.push(m.log_weight(&s));
    }
    let shift = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(shift + lw.iter().map(|&l| (l - shift).exp()).sum::<f64>().ln())
}

/// `F_Gibbs(q) = Σ_x q(x) log(q(x) / ∏Ψ(x))`, with `q` a joint table in
/// row-major order.
pub fn gibbs_free_energy(model: &DiscreteModel, q: &[f64]) -> Result<f64> {
    check_cap(model, DEFAULT_STATE_CAP)?;
    if q.len() as u128 != model.state_space_size() {
        return Err(Error::Shape("joint table size".into()));
    }
    if q.iter().any(|&v| !(v >= 0.0)) || (q.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("q is not a normalized distribution".into()));
    }
    let mut f = 0.0;
    let mut k = 0;
    for_each_configuration(model.cards(), |x| {
        let p = q[k];
        k += 1;
        if p > 0.0 {
            f += p * (p.ln() - log_weight(model, x));
        }
    });
    Ok(f)
}

/// Indicator sufficient statistic: `φ(s)_k = 1[s = k]` for `k < q - 1`.
pub fn indicator(q: usize, s: usize) -> Vec<f64> {
    (0..q - 1).map(|k| if s == k { 1.0 } else { 0.0 }).collect()
}

/// `Var_b(φ)` of a vertex belief table.
pub fn vertex_variance(b: &[f64]) -> DMatrix<f64> {
    let r = b.len() - 1;
    DMatrix::from_fn(r, r, |k, l| if k == l { b[k] - b[k] * b[k] } else { -b[k] * b[l] })
}

/// `Cov_{b_α}(φ_i, φ_j)` for members at positions `pi`, `pj` of factor `a`.
pub fn factor_covariance(model: &DiscreteModel, a: usize, ba: &[f64], pi: usize, pj: usize) -> DMatrix<f64> {
    let f = model.graph().factor(a);
    let (qi, qj) = (model.card(f[pi]), model.card(f[pj]));
    let mut joint = DMatrix::zeros(qi, qj);
    for (idx, &p) in ba.iter().enumerate() {
        let s = model.decode(a, idx);
        joint[(s[pi], s[pj])] += p;
    }
    pair_covariance(&joint)
}

/// Covariance of indicator statistics from a pairwise joint table.
pub fn pair_covariance(joint: &DMatrix<f64>) -> DMatrix<f64> {
    let (qi, qj) = joint.shape();
    let mi: Vec<f64> = (0..qi).map(|s| joint.row(s).sum()).collect();
    let mj: Vec<f64> = (0..qj).map(|t| joint.column(t).sum()).collect();
    DMatrix::from_fn(qi - 1, qj - 1, |k, l| joint[(k, l)] - mi[k] * mj[l])
}

/// Exact `Cov_p(φ_i, φ_j)` from the brute-force pairwise marginal.
pub fn exact_covariance(model: &DiscreteModel, i: usize, j: usize) -> Result<DMatrix<f64>> {
    let p = joint_distribution(model)?;
    let (qi, qj) = (model.card(i), model.card(j));
    let mut joint = DMatrix::zeros(qi, qj);
    let mut k = 0;
    for_each_configuration(model.cards(), |x| {
        joint[(x[i], x[j])] += p[k];
        k += 1;
    });
    if i == j {
        let diag: Vec<f64> = (0..qi).map(|s| joint[(s, s)]).collect();
        return Ok(vertex_variance(&diag));
    }
    Ok(pair_covariance(&joint))
}

/// `Cov_p(φ_i, φ_j)` on a tree as the alternating product of neighbour
/// covariances and inverted variances along the unique walk from `i` to `j`.
pub fn tree_covariance_chain(model: &DiscreteModel, i: usize, j: usize) -> Result<DMatrix<f64>> {
    let g = model.graph();
    if !g.is_tree() {
        return Err(Error::NotTree);
    }
    let exact = brute_force(model)?;
    if i == j {
        return Ok(vertex_variance(&exact.vertex_marginals[i]));
    }
    // BFS over the bipartite form; factor nodes are offset by |V|.
    let n = g.num_vertices();
    let b = g.bipartite();
    let mut prev = vec![usize::MAX; b.num_vertices()];
    let mut queue = VecDeque::from([i]);
    prev[i] = i;
    while let Some(u) = queue.pop_front() {
        for k in b.incident(u) {
            let (x, y) = b.edge(k);
            let v = if x == u { y } else { x };
            if prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    if prev[j] == usize::MAX {
        return Err(Error::Disconnected);
    }
    let mut walk = vec![j];
    while *walk.last().expect("non-empty") != i {
        walk.push(prev[*walk.last().expect("non-empty")]);
    }
    walk.reverse();
    // walk = i, α1+n, i2, α2+n, ..., j. Accumulate C = Cov(φ_i, φ_{current}).
    let mut acc: Option<DMatrix<f64>> = None;
    for step in (0..walk.len() - 1).step_by(2) {
        let (u, a, v) = (walk[step], walk[step + 1] - n, walk[step + 2]);
        let (pu, pv) = (g.position(a, u).expect("member"), g.position(a, v).expect("member"));
        let cov = factor_covariance(model, a, &exact.factor_marginals[a], pu, pv);
        acc = Some(match acc {
            None => cov,
            Some(c) => {
                let var_inv = vertex_variance(&exact.vertex_marginals[u])
                    .try_inverse()
                    .ok_or_else(|| Error::Numeric("singular variance".into()))?;
                c * var_inv * cov
            }
        });
    }
    Ok(acc.expect("walk has at least one factor"))
}

/// Calls `f` with the edge ids of every matching of `g` (loops excluded).
pub fn for_each_matching(g: &Graph, mut f: impl FnMut(&[usize])) {
    fn rec(g: &Graph, k: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if k == g.num_edges() {
            f(cur);
            return;
        }
        rec(g, k + 1, used, cur, f);
        let (a, b) = g.edge(k);
        if a != b && !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            cur.push(k);
            rec(g, k + 1, used, cur, f);
            cur.pop();
            used[a] = false;
            used[b] = false;
        }
    }
    let mut used = vec![false; g.num_vertices()];
    rec(g, 0, &mut used, &mut Vec::new(), &mut f);
}

/// Calls `f` with the edge ids of every perfect matching of `g`.
pub fn for_each_perfect_matching(g: &Graph, mut f: impl FnMut(&[usize])) {
    fn rec(g: &Graph, inc: &[Vec<usize>], used: &mut Vec<bool>, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        let Some(v) = used.iter().position(|&u| !u) else {
            f(cur);
            return;
        };
        used[v] = true;
        for &k in &inc[v] {
            let (a, b) = g.edge(k);
            let w = if a == v { b } else { a };
            if w != v && !used[w] {
                used[w] = true;
                cur.push(k);
                rec(g, inc, used, cur, f);
                cur.pop();
                used[w] = false;
            }
        }
        used[v] = false;
    }
    let inc: Vec<Vec<usize>> = (0..g.num_vertices()).map(|v| g.incident(v)).collect();
    let mut used = vec![false; g.num_vertices()];
    rec(g, &inc, &mut used, &mut Vec::new(), &mut f);
}

/// `Σ_{perfect matchings D} ∏_{e∈D} w_e`.
pub fn enumerate_perfect_matchings(g: &Graph, w: &[f64]) -> Result<f64> {
    if g.num_edges() > DEFAULT_EDGE_CAP {
        return Err(Error::CapExceeded {
            what: "edge count",
            size: g.num_edges() as u128,
            cap: DEFAULT_EDGE_CAP as u128,
        });
    }
    if w.len() != g.num_edges() {
        return Err(Error::Shape("one weight per edge".into()));
    }
    let mut z = 0.0;
    for_each_perfect_matching(g, |d| z += d.iter().map(|&k| w[k]).product::<f64>());
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph_core::FactorGraph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ising(g: Graph, j: Vec<f64>, h: Vec<f64>) -> BinaryPairwiseModel {
        BinaryPairwiseModel::new(g, j, h).unwrap()
    }

    /// Independent summation: vertex ids in reverse significance, no shift.
    fn reverse_order_z(model: &DiscreteModel) -> f64 {
        let rev: Vec<usize> = model.cards().iter().rev().copied().collect();
        let mut z = 0.0;
        for_each_configuration(&rev, |y| {
            let x: Vec<usize> = y.iter().rev().copied().collect();
            z += model.weight(&x);
        });
        z
    }

    #[test]
    fn single_edge_examples() {
        let m = ising(fixtures::path(2), vec![0.0], vec![0.0, 0.0]).to_discrete();
        let s = brute_force(&m).unwrap();
        assert!((s.z - 4.0).abs() < 1e-12);
        assert!(s.vertex_marginals.iter().flatten().all(|&p| (p - 0.5).abs() < 1e-15));
        let j = 0.7;
        let m = ising(fixtures::path(2), vec![j], vec![0.0, 0.0]).to_discrete();
        let z = brute_force(&m).unwrap().z;
        assert!((z - (2.0 * j.exp() + 2.0 * (-j).exp())).abs() < 1e-12);
    }

    #[test]
    fn c3_fixture_matches_reverse_summation() {
        let m = ising(fixtures::cycle(3), vec![0.3, -0.2, 0.5], vec![0.0; 3]);
        let d = m.to_discrete();
        let s = brute_force(&d).unwrap();
        assert!((s.z - reverse_order_z(&d)).abs() / s.z < 1e-12);
        assert!((s.log_z - ising_log_z(&m).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn marginals_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fg = FactorGraph::new(3, vec![vec![0, 1, 2], vec![1, 2]]).unwrap();
        let cards = vec![2, 3, 2];
        let tables = vec![
            (0..12).map(|_| rng.random_range(0.1..2.0)).collect(),
            (0..6).map(|_| rng.random_range(0.1..2.0)).collect(),
        ];
        let m = DiscreteModel::new(fg, cards, tables).unwrap();
        let s = brute_force(&m).unwrap();
        for t in s.vertex_marginals.iter().chain(&s.factor_marginals) {
            assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for a in 0..2 {
            for (p, &i) in m.graph().factor(a).iter().enumerate() {
                let mut marg = vec![0.0; m.card(i)];
                for (idx, &v) in s.factor_marginals[a].iter().enumerate() {
                    marg[m.decode(a, idx)[p]] += v;
                }
                for (x, y) in marg.iter().zip(&s.vertex_marginals[i]) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
        assert!((s.z - reverse_order_z(&m)).abs() / s.z < 1e-12);
    }

    #[test]
    fn large_couplings_do_not_overflow() {
        let m = ising(fixtures::complete(4), vec![20.0; 6], vec![0.0; 4]);
        let s = brute_force(&m.to_discrete()).unwrap();
        assert!(s.log_z.is_finite());
        assert!((s.log_z - ising_log_z(&m).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn state_cap_enforced() {
        let m = ising(fixtures::path(5), vec![0.1; 4], vec![0.0; 5]).to_discrete();
        assert!(matches!(brute_force_with_cap(&m, 16), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn gibbs_free_energy_examples() {
        let m = ising(fixtures::cycle(3), vec![0.3, -0.2, 0.5], vec![0.1, 0.0, -0.3]).to_discrete();
        let s = brute_force(&m).unwrap();
        let p = joint_distribution(&m).unwrap();
        assert!((gibbs_free_energy(&m, &p).unwrap() + s.log_z).abs() < 1e-12);
        let mut q = Vec::new();
        for_each_configuration(m.cards(), |x| {
            q.push(x.iter().enumerate().map(|(i, &v)| s.vertex_marginals[i][v]).product::<f64>())
        });
        assert!(gibbs_free_energy(&m, &q).unwrap() >= -s.log_z);
        let free = ising(fixtures::path(2), vec![0.0], vec![0.0, 0.0]).to_discrete();
        let f = gibbs_free_energy(&free, &[0.25; 4]).unwrap();
        assert!((f + 4f64.ln()).abs() < 1e-15);
        assert!(gibbs_free_energy(&free, &[0.3; 4]).is_err());
    }

    #[test]
    fn covariance_chain_examples() {
        let free = ising(fixtures::path(3), vec![0.0, 0.0], vec![0.0; 3]).to_discrete();
        assert!(tree_covariance_chain(&free, 0, 2).unwrap().abs().max() < 1e-15);
        let m = ising(fixtures::path(3), vec![0.4, 0.4], vec![0.0; 3]).to_discrete();
        let var = tree_covariance_chain(&m, 1, 1).unwrap();
        assert!((var[(0, 0)] - 0.25).abs() < 1e-12);
        let chain = tree_covariance_chain(&m, 0, 2).unwrap();
        // Cov(x_0, x_2) over 8 states; φ = 1[s=0] = (1 - x)/2.
        let mut e = 0.0;
        let mut z = 0.0;
        for mask in 0..8usize {
            let x: Vec<f64> = (0..3).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let w = (0.4 * x[0] * x[1] + 0.4 * x[1] * x[2]).exp();
            e += w * x[0] * x[2];
            z += w;
        }
        assert!((chain[(0, 0)] - e / z / 4.0).abs() < 1e-12);
        assert!(matches!(
            tree_covariance_chain(&ising(fixtures::cycle(3), vec![0.1; 3], vec![0.0; 3]).to_discrete(), 0, 1),
            Err(Error::NotTree)
        ));
    }

    #[test]
    fn perfect_matching_counts() {
        assert_eq!(enumerate_perfect_matchings(&fixtures::cycle(4), &[1.0; 4]).unwrap(), 2.0);
        assert_eq!(enumerate_perfect_matchings(&fixtures::complete(4), &[1.0; 6]).unwrap(), 3.0);
        assert_eq!(enumerate_perfect_matchings(&fixtures::cycle(5), &[1.0; 5]).unwrap(), 0.0);
        assert_eq!(enumerate_perfect_matchings(&fixtures::complete_bipartite(3, 3), &[1.0; 9]).unwrap(), 6.0);
        let mut all = 0;
        for_each_matching(&fixtures::cycle(4), |_| all += 1);
        assert_eq!(all, 7);
    }
}
