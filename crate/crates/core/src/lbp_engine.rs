//! Loopy belief propagation on factor graphs: message passing with damping
//! and schedules, beliefs, the Bethe free energy and the linearized update
//! map at a fixed point.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::exact_oracle::{factor_covariance, vertex_variance};
use crate::models::{Beliefs, DiscreteModel};
use crate::zeta::{directed_edge_matrix, FactorWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    #[default]
    Parallel,
    /// Directed edges updated one at a time in ascending index order.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbpConfig {
    pub schedule: Schedule,
    /// Weight `ε` of the previous message: `μ ← (1 - ε) T(μ) + ε μ`.
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LbpConfig {
    fn default() -> Self {
        Self { schedule: Schedule::Parallel, damping: 0.0, tol: 1e-10, max_iter: 10_000 }
    }
}

impl LbpConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidArgument(format!("damping {} not in [0, 1)", self.damping)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Normalized messages `m_{α→i}`, one table per directed edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Messages {
    pub m: Vec<Vec<f64>>,
}

impl Messages {
    pub fn uniform(model: &DiscreteModel) -> Self {
        let g = model.graph();
        let m = (0..g.num_directed())
            .map(|e| {
                let q = model.card(g.directed_edge(e).1);
                vec![1.0 / q as f64; q]
            })
            .collect();
        Self { m }
    }

    /// Natural parameters drawn uniformly from `(-scale, scale)`.
    pub fn random<R: Rng>(model: &DiscreteModel, scale: f64, rng: &mut R) -> Self {
        let g = model.graph();
        let m = (0..g.num_directed())
            .map(|e| {
                let q = model.card(g.directed_edge(e).1);
                let mu: Vec<f64> = (0..q - 1).map(|_| rng.random_range(-scale..scale)).collect();
                from_natural(&mu)
            })
            .collect();
        Self { m }
    }

    /// Concatenated natural parameters; edge `e` holds `q_{t(e)} - 1` entries.
    pub fn natural(&self) -> Vec<f64> {
        self.m.iter().flat_map(|t| to_natural(t)).collect()
    }

    pub fn from_natural_vec(model: &DiscreteModel, mu: &[f64]) -> Result<Self> {
        let g = model.graph();
        let mut m = Vec::with_capacity(g.num_directed());
        let mut k = 0;
        for e in 0..g.num_directed() {
            let r = model.card(g.directed_edge(e).1) - 1;
            if k + r > mu.len() {
                return Err(Error::Shape("natural parameter vector too short".into()));
            }
            m.push(from_natural(&mu[k..k + r]));
            k += r;
        }
        if k != mu.len() {
            return Err(Error::Shape("natural parameter vector too long".into()));
        }
        Ok(Self { m })
    }
}

/// `log(m_s / m_{q-1})` for `s < q - 1`.
pub fn to_natural(m: &[f64]) -> Vec<f64> {
    let last = m[m.len() - 1].ln();
    m[..m.len() - 1].iter().map(|x| x.ln() - last).collect()
}

pub fn from_natural(mu: &[f64]) -> Vec<f64> {
    let top = mu.iter().copied().fold(0.0, f64::max);
    let mut m: Vec<f64> = mu.iter().map(|x| (x - top).exp()).collect();
    m.push((-top).exp());
    let s: f64 = m.iter().sum();
    m.iter_mut().for_each(|x| *x /= s);
    m
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let s: f64 = v.iter().sum();
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Numeric("message normalizer vanished".into()));
    }
    v.iter_mut().for_each(|x| *x /= s);
    Ok(())
}

/// Unnormalized `n_{j→α}(x_j) = ∏_{β∋j, β≠α} m_{β→j}(x_j)`.
fn cavity(model: &DiscreteModel, msgs: &Messages, j: usize, a: usize) -> Vec<f64> {
    let g = model.graph();
    let mut out = vec![1.0; model.card(j)];
    for &b in g.vertex_factors(j) {
        if b != a {
            let e = g.edge_index(b, g.position(b, j).expect("member"));
            out.iter_mut().zip(&msgs.m[e]).for_each(|(o, x)| *o *= x);
        }
    }
    out
}

/// New unnormalized messages out of factor `a` to every member.
fn factor_outgoing(model: &DiscreteModel, msgs: &Messages, a: usize) -> Vec<Vec<f64>> {
    let f = model.graph().factor(a);
    let cav: Vec<Vec<f64>> = f.iter().map(|&j| cavity(model, msgs, j, a)).collect();
    let mut out: Vec<Vec<f64>> = f.iter().map(|&i| vec![0.0; model.card(i)]).collect();
    for (idx, &psi) in model.table(a).iter().enumerate() {
        if psi == 0.0 {
            continue;
        }
        let x = model.decode(a, idx);
        for p in 0..f.len() {
            let w: f64 = (0..f.len()).filter(|&q| q != p).map(|q| cav[q][x[q]]).product();
            out[p][x[p]] += psi * w;
        }
    }
    out
}

fn damp(old: &[f64], new: &[f64], eps: f64) -> Vec<f64> {
    if eps == 0.0 {
        return new.to_vec();
    }
    let (a, b) = (to_natural(old), to_natural(new));
    let mix: Vec<f64> = a.iter().zip(&b).map(|(o, n)| (1.0 - eps) * n + eps * o).collect();
    from_natural(&mix)
}

fn natural_change(old: &[f64], new: &[f64]) -> f64 {
    to_natural(old).iter().zip(to_natural(new)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// One undamped parallel sweep `T(m)`.
pub fn lbp_update(model: &DiscreteModel, msgs: &Messages) -> Result<Messages> {
    let g = model.graph();
    let mut m = vec![Vec::new(); g.num_directed()];
    for a in 0..g.num_factors() {
        for (p, mut t) in factor_outgoing(model, msgs, a).into_iter().enumerate() {
            normalize(&mut t)?;
            m[g.edge_index(a, p)] = t;
        }
    }
    Ok(Messages { m })
}

/// The parallel update in natural coordinates, `μ ↦ μ(T(m(μ)))`.
pub fn natural_update(model: &DiscreteModel, mu: &[f64]) -> Result<Vec<f64>> {
    Ok(lbp_update(model, &Messages::from_natural_vec(model, mu)?)?.natural())
}

/// Max natural-parameter change under one parallel sweep.
pub fn fixed_point_residual(model: &DiscreteModel, msgs: &Messages) -> Result<f64> {
    let t = lbp_update(model, msgs)?;
    Ok(msgs.m.iter().zip(&t.m).map(|(a, b)| natural_change(a, b)).fold(0.0, f64::max))
}

fn sweep(model: &DiscreteModel, msgs: &mut Messages, cfg: &LbpConfig) -> Result<f64> {
    let g = model.graph();
    let mut res: f64 = 0.0;
    match cfg.schedule {
        Schedule::Parallel => {
            let t = lbp_update(model, msgs)?;
            for (old, new) in msgs.m.iter_mut().zip(t.m) {
                let d = damp(old, &new, cfg.damping);
                res = res.max(natural_change(old, &d));
                *old = d;
            }
        }
        Schedule::Sequential => {
            for e in 0..g.num_directed() {
                let (a, i) = g.directed_edge(e);
                let f = g.factor(a);
                let p = g.position(a, i).expect("member");
                let cav: Vec<Vec<f64>> = f.iter().map(|&j| cavity(model, msgs, j, a)).collect();
                let mut t = vec![0.0; model.card(i)];
                for (idx, &psi) in model.table(a).iter().enumerate() {
                    if psi != 0.0 {
                        let x = model.decode(a, idx);
                        let w: f64 = (0..f.len()).filter(|&q| q != p).map(|q| cav[q][x[q]]).product();
                        t[x[p]] += psi * w;
                    }
                }
                normalize(&mut t)?;
                let d = damp(&msgs.m[e], &t, cfg.damping);
                res = res.max(natural_change(&msgs.m[e], &d));
                msgs.m[e] = d;
            }
        }
    }
    if !res.is_finite() {
        return Err(Error::Numeric("messages left the interior".into()));
    }
    Ok(res)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbpRunReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub schedule: Schedule,
    pub damping: f64,
    pub messages: Messages,
    pub beliefs: Beliefs,
    /// `log Z_B` from the message normalizers.
    pub log_z_b: f64,
}

pub fn run_lbp(model: &DiscreteModel, cfg: &LbpConfig, init: Option<Messages>) -> Result<LbpRunReport> {
    cfg.validate()?;
    let mut msgs = match init {
        Some(m) => {
            if m.m.len() != model.graph().num_directed() {
                return Err(Error::Shape("initial messages do not match the model".into()));
            }
            m
        }
        None => Messages::uniform(model),
    };
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        residual = sweep(model, &mut msgs, cfg)?;
        iterations += 1;
        if residual < cfg.tol {
            break;
        }
    }
    let beliefs = beliefs(model, &msgs)?;
    let log_z_b = log_bethe_partition(model, &msgs)?;
    Ok(LbpRunReport {
        converged: residual < cfg.tol,
        iterations,
        residual,
        schedule: cfg.schedule,
        damping: cfg.damping,
        messages: msgs,
        beliefs,
        log_z_b,
    })
}

/// `b_i ∝ ∏_α m_{α→i}` and `b_α ∝ Ψ_α ∏_j n_{j→α}`.
pub fn beliefs(model: &DiscreteModel, msgs: &Messages) -> Result<Beliefs> {
    let g = model.graph();
    let mut vertex = Vec::with_capacity(g.num_vertices());
    for i in 0..g.num_vertices() {
        let mut b = cavity(model, msgs, i, usize::MAX);
        normalize(&mut b)?;
        vertex.push(b);
    }
    let mut factor = Vec::with_capacity(g.num_factors());
    for a in 0..g.num_factors() {
        let f = g.factor(a);
        let cav: Vec<Vec<f64>> = f.iter().map(|&j| cavity(model, msgs, j, a)).collect();
        let mut b: Vec<f64> = model
            .table(a)
            .iter()
            .enumerate()
            .map(|(idx, &psi)| {
                let x = model.decode(a, idx);
                psi * (0..f.len()).map(|q| cav[q][x[q]]).product::<f64>()
            })
            .collect();
        normalize(&mut b)?;
        factor.push(b);
    }
    Ok(Beliefs { vertex, factor })
}

/// `log Z_B = Σ_α log Z_α + Σ_i log Z_i - Σ_{(α,i)} log Z_{αi}`, exact at a
/// fixed point and independent of the Bethe free energy routine.
pub fn log_bethe_partition(model: &DiscreteModel, msgs: &Messages) -> Result<f64> {
    let g = model.graph();
    let mut s = 0.0;
    for a in 0..g.num_factors() {
        let f = g.factor(a);
        let cav: Vec<Vec<f64>> = f.iter().map(|&j| cavity(model, msgs, j, a)).collect();
        let za: f64 = model
            .table(a)
            .iter()
            .enumerate()
            .map(|(idx, &psi)| {
                let x = model.decode(a, idx);
                psi * (0..f.len()).map(|q| cav[q][x[q]]).product::<f64>()
            })
            .sum();
        s += za.ln();
        for p in 0..f.len() {
            let m = &msgs.m[g.edge_index(a, p)];
            let zai: f64 = m.iter().zip(&cav[p]).map(|(x, y)| x * y).sum();
            s -= zai.ln();
        }
    }
    for i in 0..g.num_vertices() {
        let zi: f64 = cavity(model, msgs, i, usize::MAX).iter().sum();
        s += zi.ln();
    }
    if !s.is_finite() {
        return Err(Error::Numeric("Bethe partition function is not finite".into()));
    }
    Ok(s)
}

/// `F_B(b) = Σ_α Σ b_α log(b_α/Ψ_α) + Σ_i (1 - d_i) Σ b_i log b_i`.
/// Entries of `b_α` where `Ψ_α = 0` must vanish.
pub fn bethe_free_energy(model: &DiscreteModel, b: &Beliefs) -> Result<f64> {
    let g = model.graph();
    if b.vertex.len() != g.num_vertices() || b.factor.len() != g.num_factors() {
        return Err(Error::Shape("beliefs do not match the model".into()));
    }
    let mut f = 0.0;
    for a in 0..g.num_factors() {
        let t = model.table(a);
        if b.factor[a].len() != t.len() {
            return Err(Error::Shape(format!("factor belief {a} has the wrong size")));
        }
        for (&p, &psi) in b.factor[a].iter().zip(t) {
            if psi == 0.0 {
                if p != 0.0 {
                    return Err(Error::Boundary(format!("factor {a} puts mass on a zero of Ψ")));
                }
                continue;
            }
            if !(p > 0.0) {
                return Err(Error::Boundary(format!("factor belief {a} has a zero entry")));
            }
            f += p * (p.ln() - psi.ln());
        }
    }
    for i in 0..g.num_vertices() {
        if b.vertex[i].iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Boundary(format!("vertex belief {i} has a zero entry")));
        }
        let h: f64 = b.vertex[i].iter().map(|p| p * p.ln()).sum();
        f += (1.0 - g.degree(i) as f64) * h;
    }
    Ok(f)
}

/// `u^α_{j→i} = Var_{b_i}(φ_i)⁻¹ Cov_{b_α}(φ_i, φ_j)` from beliefs.
pub fn belief_edge_weights(model: &DiscreteModel, b: &Beliefs) -> Result<FactorWeights> {
    let g = model.graph();
    let dims: Vec<usize> = model.cards().iter().map(|q| q - 1).collect();
    let mut w = FactorWeights::zeros(g, dims);
    let mut inv: Vec<DMatrix<f64>> = Vec::with_capacity(g.num_vertices());
    for i in 0..g.num_vertices() {
        inv.push(
            vertex_variance(&b.vertex[i])
                .try_inverse()
                .ok_or_else(|| Error::Boundary(format!("variance of vertex {i} is singular")))?,
        );
    }
    for a in 0..g.num_factors() {
        let f = g.factor(a);
        for pi in 0..f.len() {
            for pj in 0..f.len() {
                if pi != pj {
                    let cov = factor_covariance(model, a, &b.factor[a], pi, pj);
                    w.set(a, pi, pj, &inv[f[pi]] * cov)?;
                }
            }
        }
    }
    Ok(w)
}

/// `T'` at a fixed point: the matrix `M(u)` with weights from the beliefs.
/// Fails with [`Error::NotFixedPoint`] when the parallel residual exceeds `tol`.
pub fn lbp_linearization(model: &DiscreteModel, msgs: &Messages, tol: f64) -> Result<DMatrix<f64>> {
    let r = fixed_point_residual(model, msgs)?;
    if r > tol {
        return Err(Error::NotFixedPoint(r));
    }
    let b = beliefs(model, msgs)?;
    directed_edge_matrix(model.graph(), &belief_edge_weights(model, &b)?)
}

/// Central finite-difference Jacobian of [`natural_update`].
pub fn update_jacobian_fd(model: &DiscreteModel, msgs: &Messages, h: f64) -> Result<DMatrix<f64>> {
    let mu = msgs.natural();
    let n = mu.len();
    let mut jac = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut p = mu.clone();
        p[k] += h;
        let fp = natural_update(model, &p)?;
        p[k] -= 2.0 * h;
        let fm = natural_update(model, &p)?;
        for r in 0..n {
            jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    Ok(jac)
}
