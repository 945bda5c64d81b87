//! Loop series: sub-coregraph enumeration, the `f_n`/`g_n` polynomials, the
//! expansion of `Z/Z_B` and of single-vertex marginals around an LBP fixed
//! point, and the perfect-matching specialization with its Bethe solver.

use std::fmt::Write as _;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact_oracle::{self, brute_force, DEFAULT_EDGE_CAP};
use crate::graph_core::{FactorGraph, Graph};
use crate::lbp_engine::LbpRunReport;
use crate::linalg::det_complex;
use crate::models::DiscreteModel;
use crate::poly::Poly;
use crate::zeta::{directed_edge_matrix_graph, GraphWeights};

/// `f_0 = 1`, `f_1 = 0`, `f_{n+1} = x f_n + f_{n-1}`.
pub fn f_poly(n: usize) -> Poly {
    recurrence_poly(Poly::one(), Poly::zero(), n)
}

/// `g_0 = x`, `g_1 = -2`, `g_{n+1} = x g_n + g_{n-1}`.
pub fn g_poly(n: usize) -> Poly {
    recurrence_poly(Poly::x(), Poly::from_i64(&[-2]), n)
}

fn recurrence_poly(p0: Poly, p1: Poly, n: usize) -> Poly {
    let (mut a, mut b) = (p0, p1);
    for _ in 0..n {
        let next = &(&Poly::x() * &b) + &a;
        a = b;
        b = next;
    }
    a
}

pub fn f_value(n: usize, x: f64) -> f64 {
    recurrence_value(1.0, 0.0, n, x)
}

pub fn g_value(n: usize, x: f64) -> f64 {
    recurrence_value(x, -2.0, n, x)
}

fn recurrence_value(p0: f64, p1: f64, n: usize, x: f64) -> f64 {
    let (mut a, mut b) = (p0, p1);
    for _ in 0..n {
        let next = x * b + a;
        a = b;
        b = next;
    }
    a
}

/// Edge subset with no vertex of degree one (except an optional free vertex).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubCoregraph {
    pub edges: Vec<usize>,
}

impl SubCoregraph {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn degrees(&self, g: &Graph) -> Vec<usize> {
        let mut d = vec![0; g.num_vertices()];
        for &k in &self.edges {
            let (a, b) = g.edge(k);
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    /// Edge mask as a 0/1 string, edge 0 first.
    pub fn mask_string(&self, num_edges: usize) -> String {
        let mut s = vec![b'0'; num_edges];
        for &k in &self.edges {
            s[k] = b'1';
        }
        String::from_utf8(s).expect("ascii")
    }
}

/// All sub-coregraphs of `g`, including `∅`. `free`, if set, is a vertex
/// allowed to have degree one. Backtracking over edges prunes any branch in
/// which a vertex is stuck at degree one.
pub fn enumerate_sub_coregraphs_with(g: &Graph, free: Option<usize>, cap: usize) -> Result<Vec<SubCoregraph>> {
    let m = g.num_edges();
    if m > cap {
        return Err(Error::CapExceeded {
            what: "edges for sub-coregraph enumeration",
            size: m as u128,
            cap: cap as u128,
        });
    }
    let mut remaining = g.degrees();
    let mut deg = vec![0usize; g.num_vertices()];
    let mut chosen = Vec::new();
    let mut out = Vec::new();
    fn rec(
        g: &Graph,
        k: usize,
        free: Option<usize>,
        deg: &mut Vec<usize>,
        remaining: &mut Vec<usize>,
        chosen: &mut Vec<usize>,
        out: &mut Vec<SubCoregraph>,
    ) {
        if k == g.num_edges() {
            out.push(SubCoregraph { edges: chosen.clone() });
            return;
        }
        let (a, b) = g.edge(k);
        let stuck = |v: usize, deg: &[usize], rem: &[usize]| Some(v) != free && deg[v] == 1 && rem[v] == 0;
        remaining[a] -= 1;
        remaining[b] -= 1;
        // Exclude edge k.
        if !stuck(a, deg, remaining) && !stuck(b, deg, remaining) {
            rec(g, k + 1, free, deg, remaining, chosen, out);
        }
        // Include edge k.
        deg[a] += 1;
        deg[b] += 1;
        chosen.push(k);
        if !stuck(a, deg, remaining) && !stuck(b, deg, remaining) {
            rec(g, k + 1, free, deg, remaining, chosen, out);
        }
        chosen.pop();
        deg[a] -= 1;
        deg[b] -= 1;
        remaining[a] += 1;
        remaining[b] += 1;
    }
    rec(g, 0, free, &mut deg, &mut remaining, &mut chosen, &mut out);
    // A vertex with degree one whose incident edges were all decided before it
    // reached degree one is caught by the final check.
    out.retain(|s| s.degrees(g).iter().enumerate().all(|(v, &d)| d != 1 || Some(v) == free));
    out.sort();
    Ok(out)
}

pub fn enumerate_sub_coregraphs(g: &Graph) -> Result<Vec<SubCoregraph>> {
    enumerate_sub_coregraphs_with(g, None, DEFAULT_EDGE_CAP)
}

/// Sub-coregraphs of a hypergraph: subsets of directed edges `(α, i)` of its
/// bipartite form with no vertex or factor of degree one.
pub fn enumerate_sub_coregraphs_factor(h: &FactorGraph) -> Result<Vec<SubCoregraph>> {
    enumerate_sub_coregraphs(&h.bipartite())
}

/// Fixed-point quantities used by the binary loop series.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopCoefficients {
    pub m: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `beta[α][mask] = E_{b_α}[∏_{p∈mask} (x_p - m_p)/√(1 - m_p²)]`.
    pub beta: Vec<Vec<f64>>,
}

pub fn loop_coefficients(model: &DiscreteModel, report: &LbpRunReport) -> Result<LoopCoefficients> {
    if !model.is_binary() {
        return Err(Error::NotBinary);
    }
    if !report.converged {
        return Err(Error::NotConverged(format!("LBP residual {:e}", report.residual)));
    }
    let g = model.graph();
    let b = &report.beliefs;
    let m: Vec<f64> = b.vertex.iter().map(|v| v[1] - v[0]).collect();
    if m.iter().any(|x| !(x.abs() < 1.0)) {
        return Err(Error::Boundary("a vertex belief is deterministic".into()));
    }
    let gamma = m.iter().map(|&x| 2.0 * x / (1.0 - x * x).sqrt()).collect();
    let beta = (0..g.num_factors())
        .map(|a| {
            let f = g.factor(a);
            if f.len() > 16 {
                return Err(Error::CapExceeded { what: "factor arity", size: f.len() as u128, cap: 16 });
            }
            Ok((0u32..1 << f.len())
                .map(|mask| {
                    if mask == 0 {
                        return 1.0;
                    }
                    b.factor[a]
                        .iter()
                        .enumerate()
                        .map(|(idx, &p)| {
                            let x = model.decode(a, idx);
                            p * (0..f.len())
                                .filter(|q| mask >> q & 1 == 1)
                                .map(|q| {
                                    let mi = m[f[q]];
                                    (2.0 * x[q] as f64 - 1.0 - mi) / (1.0 - mi * mi).sqrt()
                                })
                                .product::<f64>()
                        })
                        .sum()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(LoopCoefficients { m, gamma, beta })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopTerm {
    pub subgraph: SubCoregraph,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopSeriesReport {
    pub z_b: f64,
    pub log_z_b: f64,
    /// Terms in descending `|r(s)|`.
    pub terms: Vec<LoopTerm>,
    pub partial_sums: Vec<f64>,
    pub total: f64,
    /// Brute-force target (`Z/Z_B` or the marginal left-hand side).
    pub exact: Option<f64>,
    /// `|total - exact| / |exact|`.
    pub discrepancy: Option<f64>,
    /// Number of edges of the enumerated graph, for the CSV mask.
    pub num_edges: usize,
}

impl LoopSeriesReport {
    fn finish(log_z_b: f64, mut terms: Vec<LoopTerm>, exact: Option<f64>, num_edges: usize) -> Self {
        terms.sort_by(|a, b| b.r.abs().total_cmp(&a.r.abs()).then_with(|| a.subgraph.cmp(&b.subgraph)));
        // Neumaier compensated summation.
        let (mut s, mut c) = (0.0f64, 0.0f64);
        let mut partial_sums = Vec::with_capacity(terms.len());
        for t in &terms {
            let y = s + t.r;
            c += if s.abs() >= t.r.abs() { (s - y) + t.r } else { (t.r - y) + s };
            s = y;
            partial_sums.push(s + c);
        }
        let total = s + c;
        let discrepancy = exact.map(|e| (total - e).abs() / e.abs().max(f64::MIN_POSITIVE));
        Self { z_b: log_z_b.exp(), log_z_b, terms, partial_sums, total, exact, discrepancy, num_edges }
    }

    /// Rows `edge-mask,|s|,r(s)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge-mask,|s|,r(s)\n");
        for t in &self.terms {
            let _ = writeln!(out, "{},{},{:e}", t.subgraph.mask_string(self.num_edges), t.subgraph.len(), t.r);
        }
        out
    }
}

fn term_value(model: &DiscreteModel, c: &LoopCoefficients, s: &SubCoregraph, distinguished: Option<usize>) -> f64 {
    let g = model.graph();
    let n = g.num_vertices();
    let mut vdeg = vec![0usize; n];
    let mut masks = vec![0u32; g.num_factors()];
    for &e in &s.edges {
        let (a, i) = g.directed_edge(e);
        vdeg[i] += 1;
        masks[a] |= 1 << g.position(a, i).expect("member");
    }
    let sign = if s.len().is_multiple_of(2) { 1.0 } else { -1.0 };
    let fac: f64 = masks.iter().enumerate().map(|(a, &mk)| c.beta[a][mk as usize]).product();
    let ver: f64 = (0..n)
        .map(|i| if Some(i) == distinguished { g_value(vdeg[i], c.gamma[i]) } else { f_value(vdeg[i], c.gamma[i]) })
        .product();
    sign * fac * ver
}

/// `Z/Z_B = Σ_s r(s)` with
/// `r(s) = (-1)^{|s|} ∏_α β^α_{I_α(s)} ∏_i f_{d_i(s)}(γ_i)` over sub-coregraphs
/// of the bipartite form.
pub fn loop_series_z(model: &DiscreteModel, report: &LbpRunReport) -> Result<LoopSeriesReport> {
    let c = loop_coefficients(model, report)?;
    let b = model.graph().bipartite();
    let terms = enumerate_sub_coregraphs(&b)?
        .into_iter()
        .map(|s| LoopTerm { r: term_value(model, &c, &s, None), subgraph: s })
        .collect();
    let exact = brute_force(model).ok().map(|e| (e.log_z - report.log_z_b).exp());
    Ok(LoopSeriesReport::finish(report.log_z_b, terms, exact, b.num_edges()))
}

/// Expansion of `(Z/Z_B)(p_v(+1) - p_v(-1))/√(b_v(+1) b_v(-1))`, where `g_d`
/// replaces `f_d` at `v` and `v` may have degree one.
pub fn loop_series_marginal(model: &DiscreteModel, report: &LbpRunReport, vertex: usize) -> Result<LoopSeriesReport> {
    let c = loop_coefficients(model, report)?;
    if vertex >= model.graph().num_vertices() {
        return Err(Error::InvalidArgument(format!("vertex {vertex} out of range")));
    }
    let b = model.graph().bipartite();
    let terms = enumerate_sub_coregraphs_with(&b, Some(vertex), DEFAULT_EDGE_CAP)?
        .into_iter()
        .map(|s| LoopTerm { r: term_value(model, &c, &s, Some(vertex)), subgraph: s })
        .collect();
    let exact = brute_force(model).ok().map(|e| {
        let p = &e.vertex_marginals[vertex];
        let bv = &report.beliefs.vertex[vertex];
        (e.log_z - report.log_z_b).exp() * (p[1] - p[0]) / (bv[0] * bv[1]).sqrt()
    });
    Ok(LoopSeriesReport::finish(report.log_z_b, terms, exact, b.num_edges()))
}

/// Signs of the exact and belief MPM margins `p(+1) - p(-1)`, `b(+1) - b(-1)`.
pub fn mpm_signs(model: &DiscreteModel, report: &LbpRunReport, vertex: usize) -> Result<(f64, f64)> {
    let e = brute_force(model)?;
    let p = &e.vertex_marginals[vertex];
    let b = &report.beliefs.vertex[vertex];
    Ok(((p[1] - p[0]).signum(), (b[1] - b[0]).signum()))
}

// ---------------------------------------------------------------------------
// Perfect matchings.

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingBethe {
    /// Edge beliefs `v_e`.
    pub v: Vec<f64>,
    /// Lagrange multipliers with `v(1 - v) = w e^{μ_i + μ_j}`.
    pub mu: Vec<f64>,
    pub z_b: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn matching_residual(g: &Graph, w: &[f64], v: &[f64], mu: &[f64]) -> f64 {
    let mut r: f64 = 0.0;
    let mut rows = vec![0.0; g.num_vertices()];
    for (k, &(a, b)) in g.edges().iter().enumerate() {
        rows[a] += v[k];
        rows[b] += v[k];
        r = r.max((v[k] * (1.0 - v[k]) - w[k] * (mu[a] + mu[b]).exp()).abs());
    }
    rows.iter().fold(r, |acc, s| acc.max((s - 1.0).abs()))
}

/// Bethe stationary point for the perfect-matching model with weights `w`:
/// damped multiplier iteration (smaller quadratic root) followed by a
/// Gauss-Newton polish of the joint `(v, μ)` system.
pub fn matching_bethe_solve(g: &Graph, w: &[f64], tol: f64) -> Result<MatchingBethe> {
    let (n, m) = (g.num_vertices(), g.num_edges());
    if w.len() != m || w.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidArgument("matching weights must be positive, one per edge".into()));
    }
    if (0..m).any(|k| g.is_loop(k)) {
        return Err(Error::InvalidGraph("loops cannot be matched".into()));
    }
    if exact_oracle::enumerate_perfect_matchings(g, &vec![1.0; m])? == 0.0 {
        return Err(Error::InvalidGraph("graph has no perfect matching".into()));
    }
    let incident: Vec<Vec<usize>> = (0..n).map(|i| g.incident(i)).collect();
    // Damped BP in log space. ln_msg[2k] is the message from the first
    // endpoint of edge k, ln_msg[2k + 1] from the second; each is the log
    // ratio P(e used)/P(e unused).
    let slot = |k: usize, i: usize| if g.edge(k).0 == i { 2 * k } else { 2 * k + 1 };
    let mut ln_msg = vec![0.0f64; 2 * m];
    let mut iterations = 0;
    for _ in 0..5_000 {
        iterations += 1;
        let mut delta = 0.0f64;
        for i in 0..n {
            // Incoming log terms ln w_e' + ln n_{j'→e'}.
            let inc: Vec<f64> = incident[i].iter().map(|&k| w[k].ln() + ln_msg[slot(k, i) ^ 1]).collect();
            for (a, &k) in incident[i].iter().enumerate() {
                let rest: Vec<f64> = inc.iter().enumerate().filter(|&(b, _)| b != a).map(|(_, &x)| x).collect();
                let target = -log_sum_exp(&rest);
                let s = slot(k, i);
                let next = 0.5 * target + 0.5 * ln_msg[s];
                delta = delta.max((next - ln_msg[s]).abs());
                ln_msg[s] = next;
            }
        }
        if delta < 1e-13 {
            break;
        }
    }
    let mut v: Vec<f64> = (0..m)
        .map(|k| {
            let lp = w[k].ln() + ln_msg[2 * k] + ln_msg[2 * k + 1];
            1.0 / (1.0 + (-lp).exp())
        })
        .collect();
    if v.iter().any(|&x| !(x > 1e-12 && x < 1.0 - 1e-12)) {
        return Err(Error::NotConverged("no interior matching Bethe point: BP drifts to the boundary".into()));
    }
    // At a fixed point 1 + p_e = n_{i→e} T_i with T_i the full incoming sum,
    // so e^{μ_i} = 1/T_i.
    let mut mu: Vec<f64> = (0..n)
        .map(|i| {
            let inc: Vec<f64> = incident[i].iter().map(|&k| w[k].ln() + ln_msg[slot(k, i) ^ 1]).collect();
            -log_sum_exp(&inc)
        })
        .collect();
    // Newton polish of log(v(1 - v)) - log w - μ_i - μ_j = 0, Σ_j v_ij = 1.
    // Bipartite graphs carry a gauge direction in μ, so steps use the SVD
    // pseudo-inverse.
    let log_res = |v: &[f64], mu: &[f64]| -> DVector<f64> {
        let mut r = DVector::zeros(m + n);
        for (k, &(a, b)) in g.edges().iter().enumerate() {
            r[k] = (v[k] * (1.0 - v[k])).ln() - w[k].ln() - mu[a] - mu[b];
            r[m + a] += v[k];
            r[m + b] += v[k];
        }
        for i in 0..n {
            r[m + i] -= 1.0;
        }
        r
    };
    for _ in 0..200 {
        if matching_residual(g, w, &v, &mu) < tol {
            break;
        }
        iterations += 1;
        let rhs = -log_res(&v, &mu);
        let mut jac = DMatrix::zeros(m + n, m + n);
        for (k, &(a, b)) in g.edges().iter().enumerate() {
            jac[(k, k)] = (1.0 - 2.0 * v[k]) / (v[k] * (1.0 - v[k]));
            jac[(k, m + a)] -= 1.0;
            jac[(k, m + b)] -= 1.0;
            jac[(m + a, k)] += 1.0;
            jac[(m + b, k)] += 1.0;
        }
        let step =
            jac.svd(true, true).solve(&rhs, 1e-12).map_err(|e| Error::Numeric(format!("matching Newton step: {e}")))?;
        let norm0 = rhs.norm();
        let mut t = 1.0;
        loop {
            let nv: Vec<f64> = (0..m).map(|k| v[k] + t * step[k]).collect();
            let nmu: Vec<f64> = (0..n).map(|i| mu[i] + t * step[m + i]).collect();
            if nv.iter().all(|&x| x > 0.0 && x < 1.0) && log_res(&nv, &nmu).norm() < norm0 * (1.0 - 1e-4 * t) {
                v = nv;
                mu = nmu;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NotConverged(format!(
                    "matching Bethe solver stalled at residual {:e}",
                    matching_residual(g, w, &v, &mu)
                )));
            }
        }
    }
    let residual = matching_residual(g, w, &v, &mu);
    if !(residual < tol) || v.iter().any(|&x| !(x > 1e-10 && x < 1.0 - 1e-10)) {
        return Err(Error::NotConverged(format!("matching Bethe residual {residual:e}")));
    }
    let log_zb: f64 = v.iter().map(|x| (1.0 - x).ln()).sum::<f64>() - mu.iter().sum::<f64>();
    Ok(MatchingBethe { v, mu, z_b: log_zb.exp(), residual, iterations })
}

fn log_sum_exp(x: &[f64]) -> f64 {
    let top = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + x.iter().map(|&y| (y - top).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingLoopReport {
    pub series: LoopSeriesReport,
    /// Perfect-matching partition function by enumeration.
    pub z_exact: f64,
    /// `Z(v(1 - v)) / ∏(1 - v)`.
    pub ratio_lemma: f64,
    /// `E_x det(I - i𝒱M)` over all sign vectors.
    pub determinant_average: f64,
}

/// `r(s) = ∏_i (1 - d_i(s)) ∏_{e∈s} v_e/(1 - v_e)`, with the ratio lemma and
/// the exact determinant average as cross-checks.
pub fn matching_loop_series(g: &Graph, w: &[f64], sol: &MatchingBethe) -> Result<MatchingLoopReport> {
    let terms: Vec<LoopTerm> = enumerate_sub_coregraphs(g)?
        .into_iter()
        .map(|s| {
            let vert: f64 = s.degrees(g).iter().map(|&d| 1.0 - d as f64).product();
            let edge: f64 = s.edges.iter().map(|&k| sol.v[k] / (1.0 - sol.v[k])).product();
            LoopTerm { r: vert * edge, subgraph: s }
        })
        .collect();
    let z_exact = exact_oracle::enumerate_perfect_matchings(g, w)?;
    let series = LoopSeriesReport::finish(sol.z_b.ln(), terms, Some(z_exact / sol.z_b), g.num_edges());
    let vv: Vec<f64> = sol.v.iter().map(|x| x * (1.0 - x)).collect();
    let ratio_lemma =
        exact_oracle::enumerate_perfect_matchings(g, &vv)? / sol.v.iter().map(|x| 1.0 - x).product::<f64>();
    let determinant_average = determinant_average_exact(g, &sol.v)?;
    Ok(MatchingLoopReport { series, z_exact, ratio_lemma, determinant_average })
}

/// `det(I - i𝒱M)` for one sign vector `x ∈ {±1}^E`; `M` is the unweighted
/// directed-edge matrix, whose rows `2k`, `2k+1` belong to edge `k`.
pub fn signed_determinant(m: &DMatrix<f64>, v: &[f64], x: &[f64]) -> Complex<f64> {
    let n = m.nrows();
    let i = Complex::new(0.0, 1.0);
    let a = DMatrix::from_fn(n, n, |r, c| {
        let k = r / 2;
        let scale = (v[k] / (1.0 - v[k])).sqrt() * x[k];
        let id = if r == c { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) };
        id - i * scale * m[(r, c)]
    });
    det_complex(&a)
}

fn unit_matrix(g: &Graph) -> Result<DMatrix<f64>> {
    directed_edge_matrix_graph(g, &GraphWeights::uniform(g, 1.0))
}

/// Exact average of `det(I - i𝒱M)` over all `2^{|E|}` sign vectors.
pub fn determinant_average_exact(g: &Graph, v: &[f64]) -> Result<f64> {
    let ne = g.num_edges();
    if ne > 20 {
        return Err(Error::CapExceeded { what: "edges for sign enumeration", size: ne as u128, cap: 20 });
    }
    let m = unit_matrix(g)?;
    let mut s = Complex::new(0.0, 0.0);
    for bits in 0u32..(1 << ne) {
        let x: Vec<f64> = (0..ne).map(|k| if bits >> k & 1 == 1 { -1.0 } else { 1.0 }).collect();
        s += signed_determinant(&m, v, &x);
    }
    Ok(s.re / (1u64 << ne) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte-Carlo estimate of `E_x det(I - i𝒱M)` with uniform random signs.
pub fn determinant_average_mc(g: &Graph, v: &[f64], samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if samples < 2 {
        return Err(Error::InvalidArgument("at least two samples are required".into()));
    }
    let m = unit_matrix(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..samples {
        let x: Vec<f64> = (0..g.num_edges()).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let d = signed_determinant(&m, v, &x).re;
        sum += d;
        sq += d * d;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(MonteCarloEstimate { mean, std_error: (var / n).sqrt(), samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::lbp_engine::{run_lbp, LbpConfig};
    use crate::models::BinaryPairwiseModel;

    #[test]
    fn f_and_g_examples() {
        assert_eq!(f_poly(2), Poly::from_i64(&[1]));
        assert_eq!(f_poly(3), Poly::from_i64(&[0, 1]));
        assert_eq!(g_poly(2), Poly::from_i64(&[0, -1]));
        assert_eq!(g_poly(3), Poly::from_i64(&[-2, 0, -1]));
        for n in 0..=12 {
            let p = f_poly(n);
            let neg = Poly::new(
                p.coeffs().iter().enumerate().map(|(k, c)| if k % 2 == 1 { -c } else { c.clone() }).collect(),
            );
            let want = if n % 2 == 0 { p.clone() } else { -&p };
            assert_eq!(neg, want);
            assert!((p.eval_f64(0.7) - f_value(n, 0.7)).abs() < 1e-9);
            assert!((g_poly(n).eval_f64(-1.3) - g_value(n, -1.3)).abs() < 1e-9);
        }
    }

    #[test]
    fn sub_coregraph_counts() {
        assert_eq!(enumerate_sub_coregraphs(&fixtures::complete(4)).unwrap().len(), 15);
        assert_eq!(enumerate_sub_coregraphs(&fixtures::bouquet(3)).unwrap().len(), 8);
        assert_eq!(enumerate_sub_coregraphs(&fixtures::cycle(5)).unwrap().len(), 2);
        assert_eq!(enumerate_sub_coregraphs(&fixtures::star(6)).unwrap().len(), 1);
        assert_eq!(enumerate_sub_coregraphs_factor(&fixtures::hyper_theta()).unwrap().len(), 5);
        let big = fixtures::complete(8);
        assert!(matches!(enumerate_sub_coregraphs(&big), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn enumeration_matches_brute_force_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let g = fixtures::random_connected(6, 4, &mut rng);
            let fast = enumerate_sub_coregraphs(&g).unwrap();
            let mut slow = Vec::new();
            for bits in 0u32..(1 << g.num_edges()) {
                let s = SubCoregraph { edges: (0..g.num_edges()).filter(|k| bits >> k & 1 == 1).collect() };
                if s.degrees(&g).iter().all(|&d| d != 1) {
                    slow.push(s);
                }
            }
            slow.sort();
            assert_eq!(fast, slow);
        }
    }

    fn random_model(g: Graph, seed: u64) -> DiscreteModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = (0..g.num_edges()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = (0..g.num_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect();
        BinaryPairwiseModel::new(g, j, h).unwrap().to_discrete()
    }

    #[test]
    fn loop_series_reproduces_z_on_small_graphs() {
        for (seed, g) in [fixtures::cycle(4), fixtures::complete(4), fixtures::fig53()].into_iter().enumerate() {
            let model = random_model(g, seed as u64);
            let rep = run_lbp(&model, &LbpConfig::default(), None).unwrap();
            let ls = loop_series_z(&model, &rep).unwrap();
            assert!(ls.discrepancy.unwrap() < 1e-6, "{:?}", ls.discrepancy);
            assert_eq!(ls.terms.iter().filter(|t| t.subgraph.is_empty()).count(), 1);
        }
    }

    #[test]
    fn loop_series_on_tree_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = random_model(fixtures::random_tree(7, &mut rng), 2);
        let rep = run_lbp(&model, &LbpConfig::default(), None).unwrap();
        let ls = loop_series_z(&model, &rep).unwrap();
        assert_eq!(ls.terms.len(), 1);
        assert_eq!(ls.total, 1.0);
        let mg = loop_series_marginal(&model, &rep, 3).unwrap();
        assert_eq!(mg.terms.len(), 1);
        assert!(mg.discrepancy.unwrap() < 1e-8);
    }

    #[test]
    fn marginal_series_on_cycle() {
        let model = random_model(fixtures::cycle(4), 11);
        let rep = run_lbp(&model, &LbpConfig::default(), None).unwrap();
        for v in 0..4 {
            let mg = loop_series_marginal(&model, &rep, v).unwrap();
            assert!(mg.discrepancy.unwrap() < 1e-6);
        }
    }

    #[test]
    fn hypergraph_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = fixtures::hyper_theta();
        let tables =
            g.factors().iter().map(|f| (0..1 << f.len()).map(|_| rng.random_range(0.3..2.0)).collect()).collect();
        let model = DiscreteModel::new(g, vec![2; 3], tables).unwrap();
        let rep = run_lbp(&model, &LbpConfig::default(), None).unwrap();
        let ls = loop_series_z(&model, &rep).unwrap();
        assert_eq!(ls.terms.len(), 5);
        assert!(ls.discrepancy.unwrap() < 1e-6);
    }

    #[test]
    fn csv_dump() {
        let model = random_model(fixtures::cycle(3), 0);
        let rep = run_lbp(&model, &LbpConfig::default(), None).unwrap();
        let csv = loop_series_z(&model, &rep).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "edge-mask,|s|,r(s)");
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().any(|l| l.starts_with("000000,0,")));
    }

    #[test]
    fn non_binary_and_unconverged_are_rejected() {
        let g = FactorGraph::new(2, vec![vec![0, 1]]).unwrap();
        let model = DiscreteModel::new(g, vec![3, 2], vec![vec![1.0; 6]]).unwrap();
        let rep = run_lbp(&model, &LbpConfig::default(), None).unwrap();
        assert_eq!(loop_series_z(&model, &rep), Err(Error::NotBinary));
        let model = random_model(fixtures::cycle(4), 0);
        let mut rep = run_lbp(&model, &LbpConfig::default(), None).unwrap();
        rep.converged = false;
        assert!(matches!(loop_series_z(&model, &rep), Err(Error::NotConverged(_))));
    }

    #[test]
    fn matching_symmetric_solutions() {
        let c4 = fixtures::cycle(4);
        let s = matching_bethe_solve(&c4, &[1.0; 4], 1e-12).unwrap();
        assert!(s.v.iter().all(|x| (x - 0.5).abs() < 1e-9));
        let r = matching_loop_series(&c4, &[1.0; 4], &s).unwrap();
        assert!((r.z_exact - 2.0).abs() < 1e-12);
        assert!((s.z_b * r.series.total - 2.0).abs() < 1e-9);
        let k4 = fixtures::complete(4);
        let s = matching_bethe_solve(&k4, &[1.0; 6], 1e-12).unwrap();
        assert!(s.v.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-9));
        let r = matching_loop_series(&k4, &[1.0; 6], &s).unwrap();
        assert!((r.z_exact - 3.0).abs() < 1e-12);
        assert!((s.z_b * r.series.total - 3.0).abs() < 1e-9);
        assert!((r.ratio_lemma - r.series.total).abs() < 1e-9);
    }

    #[test]
    fn matching_random_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Interior solutions need the weights to be fairly even: on K4 every
        // perfect-matching weight within a factor 4 of the others.
        for (g, lo, hi) in [
            (fixtures::complete(4), 0.7, 1.4),
            (fixtures::complete(4), 0.7, 1.4),
            (fixtures::complete_bipartite(3, 3), 0.7, 1.4),
        ] {
            let w: Vec<f64> = (0..g.num_edges()).map(|_| rng.random_range(lo..hi)).collect();
            let s = matching_bethe_solve(&g, &w, 1e-12).unwrap();
            let r = matching_loop_series(&g, &w, &s).unwrap();
            assert!((s.z_b * r.series.total - r.z_exact).abs() / r.z_exact < 1e-8);
            assert!((r.ratio_lemma - r.series.total).abs() / r.series.total < 1e-8);
            assert!((r.determinant_average - r.series.total).abs() / r.series.total < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn matching_rejects_infeasible_graphs() {
        let p3 = fixtures::path(3);
        assert!(matches!(matching_bethe_solve(&p3, &[1.0; 2], 1e-10), Err(Error::InvalidGraph(_))));
        assert!(matching_bethe_solve(&fixtures::cycle(4), &[1.0, -1.0, 1.0, 1.0], 1e-10).is_err());
        // On a 4-cycle the stationarity equations force w1 w3 = w2 w4.
        assert!(matches!(
            matching_bethe_solve(&fixtures::cycle(4), &[1.0, 2.0, 1.0, 1.0], 1e-10),
            Err(Error::NotConverged(_))
        ));
        assert!(matching_bethe_solve(&fixtures::cycle(4), &[1.0, 2.0, 3.0, 1.5], 1e-10).is_ok());
        // Uneven K33 weights whose Bethe free energy is minimised at a vertex
        // of the Birkhoff polytope, with no interior stationary point.
        let w = [0.462, 0.589, 2.969, 0.843, 1.192, 2.649, 2.713, 0.454, 1.323];
        assert!(matches!(
            matching_bethe_solve(&fixtures::complete_bipartite(3, 3), &w, 1e-10),
            Err(Error::NotConverged(_))
        ));
    }
}
