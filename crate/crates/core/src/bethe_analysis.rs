//! Executable checks on the Bethe free energy: its Hessian in binary and
//! multinomial coordinates, the Bethe-zeta determinant identity, convexity
//! and stability certificates, the index-sum audit of LBP fixed points, and
//! uniqueness certificates.

use std::collections::HashMap;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact_oracle::vertex_variance;
use crate::graph_core::{FactorGraph, Graph};
use crate::lbp_engine::{self, belief_edge_weights, LbpConfig, Messages, Schedule};
use crate::linalg::{self, det};
use crate::models::{
    frustrated_nullity2_class, spin, Beliefs, BinaryPairwiseModel, BinaryPseudomarginals, DiscreteModel, Nullity2Class,
    Nullity2Reduction, Nullity2Shape,
};
use crate::zeta::{
    directed_edge_matrix, zeta_first_determinant, zeta_first_determinant_graph, FactorWeights, GraphWeights,
};

/// Determinants at or below this magnitude make an index undecidable.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;
/// Radius (max-norm in `(m, χ)`) under which two fixed points are merged.
pub const DEDUP_RADIUS: f64 = 1e-6;
/// Unit-modulus band for the `Marginal` stability class.
pub const MARGINAL_BAND: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct HessianReport {
    pub hessian: DMatrix<f64>,
    pub det: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Smallest eigenvalue magnitude.
    pub min_abs_eigenvalue: f64,
    pub positive_definite: bool,
}

impl HessianReport {
    fn from_matrix(hessian: DMatrix<f64>) -> Self {
        let eig = linalg::symmetric_eigenvalues(&hessian);
        let min = eig.first().copied().unwrap_or(f64::INFINITY);
        let max = eig.last().copied().unwrap_or(f64::NEG_INFINITY);
        let min_abs = eig.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        Self {
            det: det(&hessian),
            min_eigenvalue: min,
            max_eigenvalue: max,
            min_abs_eigenvalue: min_abs,
            positive_definite: min > 0.0,
            hessian,
        }
    }

    /// `sgn det ∇²F`, or `None` when degenerate.
    pub fn index(&self) -> Option<i8> {
        if self.det.abs() <= DEGENERACY_THRESHOLD {
            None
        } else if self.det > 0.0 {
            Some(1)
        } else {
            Some(-1)
        }
    }
}

// ---------------------------------------------------------------------------
// Binary coordinates {m_i, χ_ij}; m first, then χ in edge order.

/// Rows `∂b_ij(x)/∂(m_a, m_b, χ)` for the four configurations.
fn pair_rows(k: usize, g: &Graph, n: usize) -> [(usize, usize, usize, [f64; 3]); 4] {
    let (a, b) = g.edge(k);
    let mut out = [(0, 0, 0, [0.0; 3]); 4];
    for sa in 0..2 {
        for sb in 0..2 {
            let (xa, xb) = (spin(sa), spin(sb));
            out[sa * 2 + sb] = (a, b, n + k, [xa / 4.0, xb / 4.0, xa * xb / 4.0]);
        }
    }
    out
}

/// Binary Bethe free energy
/// `Σ_ij Σ b_ij log b_ij + Σ_i (1 - d_i) Σ b_i log b_i - Σ J χ - Σ h m`.
pub fn bethe_free_energy_binary(model: &BinaryPairwiseModel, b: &BinaryPseudomarginals) -> Result<f64> {
    let g = model.graph();
    b.check_interior(g)?;
    let mut f = 0.0;
    for k in 0..g.num_edges() {
        f += b.pair_belief(g, k).iter().map(|p| p * p.ln()).sum::<f64>();
        f -= model.couplings()[k] * b.chi[k];
    }
    for i in 0..g.num_vertices() {
        let h: f64 = b.vertex_belief(i).iter().map(|p| p * p.ln()).sum();
        f += (1.0 - g.degree(i) as f64) * h - model.fields()[i] * b.m[i];
    }
    Ok(f)
}

pub fn bethe_gradient_binary(model: &BinaryPairwiseModel, b: &BinaryPseudomarginals) -> Result<DVector<f64>> {
    let g = model.graph();
    b.check_interior(g)?;
    let n = g.num_vertices();
    let mut grad = DVector::zeros(n + g.num_edges());
    for k in 0..g.num_edges() {
        let p = b.pair_belief(g, k);
        for (idx, (a, bb, c, d)) in pair_rows(k, g, n).into_iter().enumerate() {
            let l = p[idx].ln();
            grad[a] += d[0] * l;
            grad[bb] += d[1] * l;
            grad[c] += d[2] * l;
        }
        grad[n + k] -= model.couplings()[k];
    }
    for i in 0..n {
        let w = 1.0 - g.degree(i) as f64;
        let [pm, pp] = b.vertex_belief(i);
        grad[i] += w * 0.5 * (pp.ln() - pm.ln()) - model.fields()[i];
    }
    Ok(grad)
}

/// Analytic `∇²F` in `{m, χ}`; it depends on the graph only.
pub fn bethe_hessian(model: &BinaryPairwiseModel, b: &BinaryPseudomarginals) -> Result<HessianReport> {
    let g = model.graph();
    b.check_interior(g)?;
    let n = g.num_vertices();
    let mut h = DMatrix::zeros(n + g.num_edges(), n + g.num_edges());
    for k in 0..g.num_edges() {
        let p = b.pair_belief(g, k);
        for (idx, (a, bb, c, d)) in pair_rows(k, g, n).into_iter().enumerate() {
            let ids = [a, bb, c];
            for r in 0..3 {
                for s in 0..3 {
                    h[(ids[r], ids[s])] += d[r] * d[s] / p[idx];
                }
            }
        }
    }
    for i in 0..n {
        h[(i, i)] += (1.0 - g.degree(i) as f64) / (1.0 - b.m[i] * b.m[i]);
    }
    Ok(HessianReport::from_matrix(h))
}

/// Scalar weights `u_{j→i} = (χ_ij - m_i m_j) / (1 - m_i²)` on the factor
/// graph of `g` (factor `k` = edge `k`).
pub fn binary_edge_weights(g: &Graph, b: &BinaryPseudomarginals) -> Result<(FactorGraph, FactorWeights)> {
    let fg = FactorGraph::from_graph(g)?;
    let w = FactorWeights::scalar(&fg, |k, pi, pj| {
        let f = fg.factor(k);
        let (i, j) = (f[pi], f[pj]);
        (b.chi[k] - b.m[i] * b.m[j]) / (1.0 - b.m[i] * b.m[i])
    });
    Ok((fg, w))
}

/// `det Var_b(x_i, x_j, x_i x_j)` for an edge belief.
fn pair_statistic_variance_det(g: &Graph, b: &BinaryPseudomarginals, k: usize) -> f64 {
    let p = b.pair_belief(g, k);
    let feats: Vec<[f64; 3]> = (0..4)
        .map(|idx| {
            let (xa, xb) = (spin(idx / 2), spin(idx % 2));
            [xa, xb, xa * xb]
        })
        .collect();
    let mean: Vec<f64> = (0..3).map(|r| (0..4).map(|x| p[x] * feats[x][r]).sum()).collect();
    let cov = DMatrix::from_fn(3, 3, |r, s| {
        (0..4).map(|x| p[x] * feats[x][r] * feats[x][s]).sum::<f64>() - mean[r] * mean[s]
    });
    det(&cov)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetheZetaReport {
    /// `ζ⁻¹ = det(I - M(u))` with `u` built from the pseudomarginals.
    pub zeta_inverse: f64,
    pub hessian_det: f64,
    /// `∏_α det Var_{b_α}(φ_α) ∏_i det Var_{b_i}(φ_i)^{1 - d_i}`.
    pub variance_factor: f64,
    pub residual: f64,
    /// Hessian condition number above `1e8`; such points are reported, not failed.
    pub ill_conditioned: bool,
}

fn bethe_zeta_report(zeta_inverse: f64, hess: &HessianReport, variance_factor: f64) -> BetheZetaReport {
    let rhs = hess.det * variance_factor;
    let scale = zeta_inverse.abs().max(rhs.abs());
    let residual = if scale == 0.0 { 0.0 } else { (zeta_inverse - rhs).abs() / scale };
    let cond = hess.max_eigenvalue.abs().max(hess.min_eigenvalue.abs()) / hess.min_abs_eigenvalue;
    BetheZetaReport { zeta_inverse, hessian_det: hess.det, variance_factor, residual, ill_conditioned: !(cond < 1e8) }
}

/// Compares `ζ⁻¹` against `det ∇²F · ∏ det Var` at a binary point.
pub fn verify_bethe_zeta(model: &BinaryPairwiseModel, b: &BinaryPseudomarginals) -> Result<BetheZetaReport> {
    let g = model.graph();
    let hess = bethe_hessian(model, b)?;
    let (fg, w) = binary_edge_weights(g, b)?;
    let zeta = zeta_first_determinant(&fg, &w)?;
    let mut var = 1.0;
    for k in 0..g.num_edges() {
        var *= pair_statistic_variance_det(g, b, k);
    }
    for i in 0..g.num_vertices() {
        var *= (1.0 - b.m[i] * b.m[i]).powi(1 - g.degree(i) as i32);
    }
    Ok(bethe_zeta_report(zeta, &hess, var))
}

/// Uniform sample from the interior of the binary local polytope, kept
/// `margin` away from the boundary in every pair-belief entry.
pub fn random_interior_point<R: Rng>(g: &Graph, margin: f64, rng: &mut R) -> BinaryPseudomarginals {
    let lim = 1.0 - 4.0 * margin;
    let m: Vec<f64> = (0..g.num_vertices()).map(|_| rng.random_range(-lim..lim) * 0.95).collect();
    let chi = g
        .edges()
        .iter()
        .map(|&(a, b)| {
            let lo = -1.0 + (m[a] + m[b]).abs() + 4.0 * margin;
            let hi = 1.0 - (m[a] - m[b]).abs() - 4.0 * margin;
            if lo < hi {
                rng.random_range(lo..hi)
            } else {
                0.5 * (lo + hi)
            }
        })
        .collect();
    BinaryPseudomarginals { m, chi }
}

// ---------------------------------------------------------------------------
// Multinomial coordinates η: indicator marginals of each vertex and, per
// factor, joint indicators of every member subset of size ≥ 2 restricted to
// non-last states. Beliefs are affine in η.

/// Affine map from η to belief tables.
#[derive(Debug, Clone)]
pub struct EtaCoordinates {
    pub dim: usize,
    vertex_offset: Vec<usize>,
    /// Per factor: `b_α = c + B η`, stored sparsely per configuration.
    factor_maps: Vec<Vec<(f64, Vec<(usize, f64)>)>>,
    /// Per factor: `(mask, assignment code) → coordinate`.
    factor_index: Vec<HashMap<(u32, usize), usize>>,
}

fn non_last_assignments(qs: &[usize]) -> usize {
    qs.iter().map(|q| q - 1).product()
}

impl EtaCoordinates {
    pub fn new(model: &DiscreteModel) -> Result<Self> {
        let g = model.graph();
        let mut dim = 0;
        let mut vertex_offset = Vec::with_capacity(g.num_vertices());
        for i in 0..g.num_vertices() {
            vertex_offset.push(dim);
            dim += model.card(i) - 1;
        }
        let mut factor_index = Vec::with_capacity(g.num_factors());
        for a in 0..g.num_factors() {
            let f = g.factor(a);
            if f.len() > 20 {
                return Err(Error::CapExceeded { what: "factor arity", size: f.len() as u128, cap: 20 });
            }
            let mut idx = HashMap::new();
            for mask in 1u32..(1 << f.len()) {
                if mask.count_ones() < 2 {
                    continue;
                }
                let qs: Vec<usize> = (0..f.len()).filter(|p| mask >> p & 1 == 1).map(|p| model.card(f[p])).collect();
                for code in 0..non_last_assignments(&qs) {
                    idx.insert((mask, code), dim);
                    dim += 1;
                }
            }
            factor_index.push(idx);
        }
        let mut out = Self { dim, vertex_offset, factor_maps: Vec::new(), factor_index };
        out.factor_maps = (0..g.num_factors()).map(|a| out.build_factor_map(model, a)).collect();
        Ok(out)
    }

    /// Coordinate of `E[∏_{p∈S} 1[x_p = s_p]]`, or `None` for `S = ∅`.
    fn coord(&self, model: &DiscreteModel, a: usize, mask: u32, states: &[usize]) -> Option<usize> {
        let f = model.graph().factor(a);
        let members: Vec<usize> = (0..f.len()).filter(|p| mask >> p & 1 == 1).collect();
        match members.len() {
            0 => None,
            1 => Some(self.vertex_offset[f[members[0]]] + states[members[0]]),
            _ => {
                let mut code = 0;
                for &p in &members {
                    code = code * (model.card(f[p]) - 1) + states[p];
                }
                Some(self.factor_index[a][&(mask, code)])
            }
        }
    }

    fn build_factor_map(&self, model: &DiscreteModel, a: usize) -> Vec<(f64, Vec<(usize, f64)>)> {
        let f = model.graph().factor(a);
        let d = f.len();
        (0..model.table(a).len())
            .map(|idx| {
                let x = model.decode(a, idx);
                let last: Vec<usize> = (0..d).filter(|&p| x[p] == model.card(f[p]) - 1).collect();
                let base_mask: u32 = (0..d).filter(|p| !last.contains(p)).fold(0, |m, p| m | 1 << p);
                let mut c = 0.0;
                let mut terms: HashMap<usize, f64> = HashMap::new();
                // Last-state indicators are 1 - Σ_s 1[x = s]; expand the product.
                for tmask in 0u32..(1 << last.len()) {
                    let t: Vec<usize> = (0..last.len()).filter(|k| tmask >> k & 1 == 1).map(|k| last[k]).collect();
                    let sign = if t.len().is_multiple_of(2) { 1.0 } else { -1.0 };
                    let mask = t.iter().fold(base_mask, |m, &p| m | 1 << p);
                    let qs: Vec<usize> = t.iter().map(|&p| model.card(f[p]) - 1).collect();
                    let total: usize = qs.iter().product();
                    for code in 0..total {
                        let mut states = x.clone();
                        let mut rem = code;
                        for (k, &p) in t.iter().enumerate().rev() {
                            states[p] = rem % qs[k];
                            rem /= qs[k];
                        }
                        match self.coord(model, a, mask, &states) {
                            None => c += sign,
                            Some(col) => *terms.entry(col).or_insert(0.0) += sign,
                        }
                    }
                }
                let mut terms: Vec<(usize, f64)> = terms.into_iter().filter(|(_, v)| *v != 0.0).collect();
                terms.sort_by_key(|t| t.0);
                (c, terms)
            })
            .collect()
    }

    pub fn eta_of(&self, model: &DiscreteModel, b: &Beliefs) -> Vec<f64> {
        let g = model.graph();
        let mut eta = vec![0.0; self.dim];
        for i in 0..g.num_vertices() {
            for s in 0..model.card(i) - 1 {
                eta[self.vertex_offset[i] + s] = b.vertex[i][s];
            }
        }
        for a in 0..g.num_factors() {
            let f = g.factor(a);
            for (&(mask, code), &col) in &self.factor_index[a] {
                let members: Vec<usize> = (0..f.len()).filter(|p| mask >> p & 1 == 1).collect();
                let mut want = vec![0; f.len()];
                let mut rem = code;
                for &p in members.iter().rev() {
                    let r = model.card(f[p]) - 1;
                    want[p] = rem % r;
                    rem /= r;
                }
                eta[col] = b.factor[a]
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| {
                        let x = model.decode(a, *idx);
                        members.iter().all(|&p| x[p] == want[p])
                    })
                    .map(|(_, v)| v)
                    .sum();
            }
        }
        eta
    }

    pub fn beliefs_of(&self, model: &DiscreteModel, eta: &[f64]) -> Beliefs {
        let g = model.graph();
        let vertex = (0..g.num_vertices())
            .map(|i| {
                let r = model.card(i) - 1;
                let mut v: Vec<f64> = eta[self.vertex_offset[i]..self.vertex_offset[i] + r].to_vec();
                v.push(1.0 - v.iter().sum::<f64>());
                v
            })
            .collect();
        let factor = self
            .factor_maps
            .iter()
            .map(|rows| rows.iter().map(|(c, t)| c + t.iter().map(|&(k, w)| w * eta[k]).sum::<f64>()).collect())
            .collect();
        Beliefs { vertex, factor }
    }
}

fn check_positive(b: &Beliefs) -> Result<()> {
    if b.vertex.iter().chain(&b.factor).flatten().any(|&p| !(p > 0.0)) {
        return Err(Error::Boundary("belief entry is not positive".into()));
    }
    Ok(())
}

/// `∇²F` in η coordinates: `Σ_α B_αᵀ diag(1/b_α) B_α + Σ_i (1 - d_i) B_iᵀ diag(1/b_i) B_i`.
pub fn bethe_hessian_multinomial(model: &DiscreteModel, b: &Beliefs) -> Result<HessianReport> {
    check_positive(b)?;
    let coords = EtaCoordinates::new(model)?;
    let g = model.graph();
    let mut h = DMatrix::zeros(coords.dim, coords.dim);
    for a in 0..g.num_factors() {
        for ((_, row), &p) in coords.factor_maps[a].iter().zip(&b.factor[a]) {
            for &(r, wr) in row {
                for &(s, ws) in row {
                    h[(r, s)] += wr * ws / p;
                }
            }
        }
    }
    for i in 0..g.num_vertices() {
        let w = 1.0 - g.degree(i) as f64;
        let off = coords.vertex_offset[i];
        let q = model.card(i);
        let last = b.vertex[i][q - 1];
        for s in 0..q - 1 {
            h[(off + s, off + s)] += w / b.vertex[i][s];
            for t in 0..q - 1 {
                h[(off + s, off + t)] += w / last;
            }
        }
    }
    Ok(HessianReport::from_matrix(h))
}

/// `∇F` in η coordinates.
pub fn bethe_gradient_multinomial(model: &DiscreteModel, b: &Beliefs) -> Result<DVector<f64>> {
    check_positive(b)?;
    let coords = EtaCoordinates::new(model)?;
    let g = model.graph();
    let mut grad = DVector::zeros(coords.dim);
    for a in 0..g.num_factors() {
        for (((_, row), &p), &psi) in coords.factor_maps[a].iter().zip(&b.factor[a]).zip(model.table(a)) {
            let l = p.ln() - psi.ln();
            for &(r, w) in row {
                grad[r] += w * l;
            }
        }
    }
    for i in 0..g.num_vertices() {
        let w = 1.0 - g.degree(i) as f64;
        let q = model.card(i);
        let last = b.vertex[i][q - 1].ln();
        for s in 0..q - 1 {
            grad[coords.vertex_offset[i] + s] += w * (b.vertex[i][s].ln() - last);
        }
    }
    Ok(grad)
}

/// Covariance of the joint-indicator statistic of a factor (all non-empty
/// member subsets, non-last states) under `b_α`.
fn factor_statistic_variance(model: &DiscreteModel, a: usize, ba: &[f64]) -> DMatrix<f64> {
    let f = model.graph().factor(a);
    let mut feats: Vec<(u32, Vec<usize>)> = Vec::new();
    for mask in 1u32..(1 << f.len()) {
        let members: Vec<usize> = (0..f.len()).filter(|p| mask >> p & 1 == 1).collect();
        let qs: Vec<usize> = members.iter().map(|&p| model.card(f[p]) - 1).collect();
        for code in 0..non_last_assignments(&members.iter().map(|&p| model.card(f[p])).collect::<Vec<_>>()) {
            let mut want = vec![usize::MAX; f.len()];
            let mut rem = code;
            for (k, &p) in members.iter().enumerate().rev() {
                want[p] = rem % qs[k];
                rem /= qs[k];
            }
            feats.push((mask, want));
        }
    }
    let values: Vec<Vec<f64>> = (0..ba.len())
        .map(|idx| {
            let x = model.decode(a, idx);
            feats
                .iter()
                .map(|(_, want)| if want.iter().zip(&x).all(|(w, s)| *w == usize::MAX || w == s) { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let d = feats.len();
    let mean: Vec<f64> = (0..d).map(|r| (0..ba.len()).map(|x| ba[x] * values[x][r]).sum()).collect();
    DMatrix::from_fn(d, d, |r, s| {
        (0..ba.len()).map(|x| ba[x] * values[x][r] * values[x][s]).sum::<f64>() - mean[r] * mean[s]
    })
}

/// Bethe-zeta identity for a general discrete model at beliefs `b`.
pub fn verify_bethe_zeta_multinomial(model: &DiscreteModel, b: &Beliefs) -> Result<BetheZetaReport> {
    let hess = bethe_hessian_multinomial(model, b)?;
    let g = model.graph();
    let w = belief_edge_weights(model, b)?;
    let zeta = zeta_first_determinant(g, &w)?;
    let mut var = 1.0;
    for a in 0..g.num_factors() {
        var *= det(&factor_statistic_variance(model, a, &b.factor[a]));
    }
    for i in 0..g.num_vertices() {
        var *= det(&vertex_variance(&b.vertex[i])).powi(1 - g.degree(i) as i32);
    }
    Ok(bethe_zeta_report(zeta, &hess, var))
}

/// Random positive locally consistent beliefs: a random joint law on each
/// factor is blended with the product of random vertex marginals, and the
/// mixture weight is chosen so the vertex marginals agree.
pub fn random_beliefs<R: Rng>(model: &DiscreteModel, rng: &mut R) -> Beliefs {
    let g = model.graph();
    let vertex: Vec<Vec<f64>> = (0..g.num_vertices())
        .map(|i| {
            let mut v: Vec<f64> = (0..model.card(i)).map(|_| rng.random_range(0.2..1.0)).collect();
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s);
            v
        })
        .collect();
    // Perturb the product law by a zero-marginal interaction term.
    let factor = (0..g.num_factors())
        .map(|a| {
            let f = g.factor(a);
            let size = model.table(a).len();
            let prod: Vec<f64> = (0..size)
                .map(|idx| model.decode(a, idx).iter().zip(f).map(|(&s, &i)| vertex[i][s]).product())
                .collect();
            let mut noise: Vec<f64> = (0..size).map(|_| rng.random_range(-1.0..1.0)).collect();
            // Project onto tables whose one-member marginals vanish.
            for (p, &i) in f.iter().enumerate() {
                let q = model.card(i);
                for _ in 0..3 {
                    let mut marg = vec![0.0; q];
                    let mut cnt = vec![0.0; q];
                    for idx in 0..size {
                        let s = model.decode(a, idx)[p];
                        marg[s] += noise[idx];
                        cnt[s] += 1.0;
                    }
                    for idx in 0..size {
                        let s = model.decode(a, idx)[p];
                        noise[idx] -= marg[s] / cnt[s];
                    }
                }
            }
            let mut scale = f64::INFINITY;
            for idx in 0..size {
                if noise[idx] < 0.0 {
                    scale = scale.min(prod[idx] / -noise[idx]);
                }
            }
            let t = rng.random_range(0.0..0.9) * scale.min(1e6);
            (0..size).map(|idx| prod[idx] + t * noise[idx]).collect()
        })
        .collect();
    Beliefs { vertex, factor }
}

// ---------------------------------------------------------------------------
// Certificates.

#[derive(Debug, Clone, PartialEq)]
pub struct PdCertificate {
    /// `max_k |β_k| < 1/ρ(M)` with the unweighted directed-edge matrix.
    pub norm_bound: bool,
    /// `spec(M(u)) ∩ [1, ∞) = ∅`.
    pub spectral: bool,
    pub rho_m: f64,
    pub max_correlation: f64,
    pub certified: bool,
}

pub fn pd_region_certificate(model: &BinaryPairwiseModel, b: &BinaryPseudomarginals) -> Result<PdCertificate> {
    let g = model.graph();
    b.check_interior(g)?;
    let fg = FactorGraph::from_graph(g)?;
    let rho_m = linalg::spectral_radius(&crate::zeta::relation_matrix(&fg.directed_relation()));
    let max_correlation = g
        .edges()
        .iter()
        .zip(&b.chi)
        .map(|(&(i, j), &chi)| {
            ((chi - b.m[i] * b.m[j]) / ((1.0 - b.m[i] * b.m[i]) * (1.0 - b.m[j] * b.m[j])).sqrt()).abs()
        })
        .fold(0.0, f64::max);
    let norm_bound = max_correlation * rho_m < 1.0;
    let (_, w) = binary_edge_weights(g, b)?;
    let mu = directed_edge_matrix(&fg, &w)?;
    let spectral = linalg::eigenvalues(&mu).iter().all(|z| !(z.im.abs() < 1e-12 && z.re >= 1.0 - 1e-12));
    Ok(PdCertificate { norm_bound, spectral, rho_m, max_correlation, certified: norm_bound || spectral })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    /// `ρ(T') < 1`.
    Stable,
    /// Every eigenvalue has real part `< 1`; stable under enough damping.
    DampedStable,
    Unstable,
    /// Some eigenvalue within [`MARGINAL_BAND`] of the unit circle.
    Marginal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub class: Stability,
    pub spectral_radius: f64,
    pub spectrum: Vec<Complex<f64>>,
}

pub fn classify_spectrum(spectrum: Vec<Complex<f64>>) -> StabilityReport {
    let rho = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let class = if spectrum.iter().any(|z| (z.norm() - 1.0).abs() <= MARGINAL_BAND) {
        Stability::Marginal
    } else if rho < 1.0 {
        Stability::Stable
    } else if spectrum.iter().all(|z| z.re < 1.0) {
        Stability::DampedStable
    } else {
        Stability::Unstable
    };
    StabilityReport { class, spectral_radius: rho, spectrum }
}

/// Classifies a fixed point from `spec(T')`.
pub fn stability_classify(model: &DiscreteModel, msgs: &Messages, tol: f64) -> Result<StabilityReport> {
    let t = lbp_engine::lbp_linearization(model, msgs, tol)?;
    Ok(classify_spectrum(linalg::eigenvalues(&t)))
}

/// Perturb-and-reconverge: every trial must return to the fixed point under
/// undamped parallel LBP.
pub fn empirical_stability(
    model: &DiscreteModel,
    msgs: &Messages,
    trials: usize,
    perturbation: f64,
    seed: u64,
) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = msgs.natural();
    let cfg = LbpConfig { tol: 1e-12, max_iter: 20_000, ..Default::default() };
    for _ in 0..trials {
        let p: Vec<f64> = mu.iter().map(|x| x + rng.random_range(-perturbation..perturbation)).collect();
        let rep = lbp_engine::run_lbp(model, &cfg, Some(Messages::from_natural_vec(model, &p)?))?;
        let back = rep.messages.natural();
        let dist = back.iter().zip(&mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !rep.converged || dist > 1e-6 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MooijCertificate {
    pub spectral_radius: f64,
    pub unique: bool,
}

/// `ρ(M(tanh|J|)) < 1` certifies a unique LBP fixed point.
pub fn mooij_uniqueness(model: &BinaryPairwiseModel) -> Result<MooijCertificate> {
    let g = model.graph();
    let w = GraphWeights::scalar(g, |e| model.couplings()[e / 2].abs().tanh());
    let m = crate::zeta::directed_edge_matrix_graph(g, &w)?;
    let rho = linalg::spectral_radius(&m);
    Ok(MooijCertificate { spectral_radius: rho, unique: rho < 1.0 })
}

/// Closed forms of `det(I - M(b))` on the reduced nullity-two graphs with
/// path weights `b` (dumbbell order: loop, bridge, loop).
pub fn nullity2_closed_form(shape: Nullity2Shape, b: &[f64]) -> f64 {
    match shape {
        Nullity2Shape::Theta => {
            let (b1, b2, b3) = (b[0], b[1], b[2]);
            let s = 1.0 - b1 * b2 - b1 * b3 - b2 * b3;
            (s - 2.0 * b1 * b2 * b3) * (s + 2.0 * b1 * b2 * b3)
        }
        Nullity2Shape::Dumbbell => {
            let (b1, b2, b3) = (b[0], b[1], b[2]);
            (1.0 - b1) * (1.0 - b3) * (1.0 - b1 - b3 + b1 * b3 - 4.0 * b1 * b2 * b2 * b3)
        }
        Nullity2Shape::Bouquet => {
            let (b1, b2) = (b[0], b[1]);
            (1.0 - b1) * (1.0 - b2) * (1.0 - b1 - b2 - 3.0 * b1 * b2)
        }
    }
}

fn reduced_graph(shape: Nullity2Shape) -> Graph {
    match shape {
        Nullity2Shape::Theta => Graph::new(2, vec![(0, 1); 3]),
        Nullity2Shape::Dumbbell => Graph::new(2, vec![(0, 0), (0, 1), (1, 1)]),
        Nullity2Shape::Bouquet => Graph::new(1, vec![(0, 0); 2]),
    }
    .expect("valid reduced graph")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nullity2Certificate {
    pub reduction: Nullity2Reduction,
    /// The couplings are frustrated, so the uniqueness result applies.
    pub applicable: bool,
    /// Smallest `det(I - M(b))` seen on the sign-constrained grid.
    pub grid_minimum: f64,
    pub grid_points: usize,
    /// Largest gap between the closed form and the determinant on the grid.
    pub closed_form_gap: f64,
    pub unique: bool,
}

/// Uniqueness for frustrated nullity-two models, re-verified by evaluating
/// `det(I - M(b))` on a grid of path weights with the admissible signs.
pub fn nullity2_uniqueness(model: &BinaryPairwiseModel, grid: usize) -> Result<Nullity2Certificate> {
    let reduction = frustrated_nullity2_class(model)?;
    let applicable = matches!(reduction.class, Nullity2Class::Case(_));
    let rg = reduced_graph(reduction.shape);
    let axes: Vec<Vec<f64>> = reduction
        .paths
        .iter()
        .map(|p| match p.sign {
            0 => vec![0.0],
            s => (0..grid).map(|k| s as f64 * k as f64 / grid as f64).collect(),
        })
        .collect();
    let mut grid_minimum = f64::INFINITY;
    let mut closed_form_gap: f64 = 0.0;
    let mut grid_points = 0;
    let mut idx = vec![0usize; axes.len()];
    loop {
        let b: Vec<f64> = idx.iter().zip(&axes).map(|(&k, ax)| ax[k]).collect();
        let w = GraphWeights::scalar(&rg, |e| b[e / 2]);
        let d = zeta_first_determinant_graph(&rg, &w)?;
        closed_form_gap = closed_form_gap.max((d - nullity2_closed_form(reduction.shape, &b)).abs());
        grid_minimum = grid_minimum.min(d);
        grid_points += 1;
        let mut k = 0;
        loop {
            if k == idx.len() {
                let unique = applicable && grid_minimum > 0.0;
                return Ok(Nullity2Certificate {
                    reduction,
                    applicable,
                    grid_minimum,
                    grid_points,
                    closed_form_gap,
                    unique,
                });
            }
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// `‖∇F‖` along the segment from a boundary point `to` towards `from`, at
/// distances `10^{-k}`, `k = 1..=8` (decreasing distance).
pub fn gradient_divergence_probe(
    model: &BinaryPairwiseModel,
    from: &BinaryPseudomarginals,
    to: &BinaryPseudomarginals,
) -> Result<Vec<(f64, f64)>> {
    (1..=8)
        .map(|k| {
            let t = 10f64.powi(-k);
            let p = BinaryPseudomarginals {
                m: to.m.iter().zip(&from.m).map(|(a, b)| a + t * (b - a)).collect(),
                chi: to.chi.iter().zip(&from.chi).map(|(a, b)| a + t * (b - a)).collect(),
            };
            Ok((t, bethe_gradient_binary(model, &p)?.norm()))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Index-sum audit.

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub point: BinaryPseudomarginals,
    pub index: Option<i8>,
    pub hessian_det: f64,
    /// `ρ(T')` computed from the pseudomarginals.
    pub stability_radius: f64,
    pub discoveries: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditStatus {
    Pass,
    /// Index sum differs from one: some fixed point was missed.
    MissedFixedPoint,
    /// A degenerate fixed point was found.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointCatalog {
    pub entries: Vec<CatalogEntry>,
    pub index_sum: i64,
    pub status: AuditStatus,
    pub restarts: usize,
    pub dedup_radius: f64,
}

const DAMPING_GRID: [f64; 4] = [0.0, 0.3, 0.6, 0.9];

fn flatten(b: &BinaryPseudomarginals) -> Vec<f64> {
    b.m.iter().chain(&b.chi).copied().collect()
}

fn unflatten(g: &Graph, x: &[f64]) -> BinaryPseudomarginals {
    let n = g.num_vertices();
    BinaryPseudomarginals { m: x[..n].to_vec(), chi: x[n..].to_vec() }
}

/// Newton's method on `∇F = 0` with backtracking on `‖∇F‖` and the interior.
pub fn newton_stationary(
    model: &BinaryPairwiseModel,
    start: &BinaryPseudomarginals,
    max_iter: usize,
) -> Option<BinaryPseudomarginals> {
    let g = model.graph();
    let mut x = start.clone();
    let mut grad = bethe_gradient_binary(model, &x).ok()?;
    for _ in 0..max_iter {
        if grad.amax() < 1e-12 {
            return Some(x);
        }
        let h = bethe_hessian(model, &x).ok()?.hessian;
        let step = h.lu().solve(&(-&grad))?;
        let mut t = 1.0;
        let flat = flatten(&x);
        loop {
            let cand: Vec<f64> = flat.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            let cand = unflatten(g, &cand);
            if let Ok(gn) = bethe_gradient_binary(model, &cand) {
                if gn.norm() < grad.norm() * (1.0 - 1e-4 * t) || gn.amax() < 1e-12 {
                    x = cand;
                    grad = gn;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return (grad.amax() < 1e-9).then_some(x);
            }
        }
    }
    (grad.amax() < 1e-9).then_some(x)
}

fn discover(
    model: &BinaryPairwiseModel,
    discrete: &DiscreteModel,
    restart: usize,
    seed: u64,
) -> Vec<BinaryPseudomarginals> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let g = model.graph();
    let mut found = Vec::new();
    let cfg = LbpConfig {
        schedule: if restart % 8 < 4 { Schedule::Parallel } else { Schedule::Sequential },
        damping: DAMPING_GRID[restart % 4],
        tol: 1e-10,
        max_iter: 3_000,
    };
    let init = Messages::random(discrete, 3.0, &mut rng);
    if let Ok(rep) = lbp_engine::run_lbp(discrete, &cfg, Some(init)) {
        let b = BinaryPseudomarginals::from_beliefs(g, &rep.beliefs);
        if b.check_interior(g).is_ok() {
            if let Some(p) = newton_stationary(model, &b, 50) {
                found.push(p);
            }
        }
    }
    let seed_point = if restart == 0 {
        BinaryPseudomarginals { m: vec![0.0; g.num_vertices()], chi: vec![0.0; g.num_edges()] }
    } else {
        random_interior_point(g, 0.02, &mut rng)
    };
    if let Some(p) = newton_stationary(model, &seed_point, 200) {
        found.push(p);
    }
    found
}

/// Multi-start search for LBP fixed points of a binary pairwise model and the
/// audit `Σ sgn det ∇²F = 1`. Restarts run in parallel; the merged catalog
/// does not depend on scheduling.
pub fn index_sum_audit(model: &BinaryPairwiseModel, restarts: usize, seed: u64) -> Result<FixedPointCatalog> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    let g = model.graph();
    let discrete = model.to_discrete();
    let found: Vec<Vec<BinaryPseudomarginals>> =
        (0..restarts).into_par_iter().map(|r| discover(model, &discrete, r, seed)).collect();
    let mut reps: Vec<(Vec<f64>, usize)> = Vec::new();
    for p in found.into_iter().flatten() {
        let x = flatten(&p);
        match reps.iter_mut().find(|(y, _)| y.iter().zip(&x).all(|(a, b)| (a - b).abs() <= DEDUP_RADIUS)) {
            Some(slot) => slot.1 += 1,
            None => reps.push((x, 1)),
        }
    }
    reps.sort_by(|a, b| {
        a.0.iter().zip(&b.0).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut entries = Vec::with_capacity(reps.len());
    for (x, discoveries) in reps {
        let point = unflatten(g, &x);
        let hess = bethe_hessian(model, &point)?;
        let (fg, w) = binary_edge_weights(g, &point)?;
        let stability_radius = linalg::spectral_radius(&directed_edge_matrix(&fg, &w)?);
        entries.push(CatalogEntry { index: hess.index(), hessian_det: hess.det, point, stability_radius, discoveries });
    }
    let index_sum = entries.iter().map(|e| e.index.unwrap_or(0) as i64).sum();
    let status = if entries.iter().any(|e| e.index.is_none()) {
        AuditStatus::Inconclusive
    } else if index_sum == 1 {
        AuditStatus::Pass
    } else {
        AuditStatus::MissedFixedPoint
    };
    Ok(FixedPointCatalog { entries, index_sum, status, restarts, dedup_radius: DEDUP_RADIUS })
}
