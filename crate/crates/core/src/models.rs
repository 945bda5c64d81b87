//! Discrete graphical models, the binary pairwise (Ising) specialization,
//! points of the local polytope, and the nullity-two interaction classifier.

use crate::error::{Error, Result};
use crate::graph_core::{FactorGraph, Graph};

/// Compatibility tables over finite state spaces on a factor graph.
///
/// The table of factor `α` is dense and row-major in the declared member
/// order: the first member is the most significant index.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    graph: FactorGraph,
    card: Vec<usize>,
    tables: Vec<Vec<f64>>,
}

impl DiscreteModel {
    /// Builds a model, rejecting any table slice (one member state fixed)
    /// that is identically zero.
    pub fn new(graph: FactorGraph, card: Vec<usize>, tables: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self::new_with_zeros(graph, card, tables)?;
        for a in 0..m.graph.num_factors() {
            for (p, &i) in m.graph.factor(a).iter().enumerate() {
                for s in 0..m.card[i] {
                    let any = (0..m.tables[a].len()).any(|idx| m.decode(a, idx)[p] == s && m.tables[a][idx] > 0.0);
                    if !any {
                        return Err(Error::InvalidModel(format!(
                            "factor {a} vanishes whenever vertex {i} is in state {s}"
                        )));
                    }
                }
            }
        }
        Ok(m)
    }

    /// Builds a model allowing zero entries (hard constraints). Each table
    /// still needs one positive entry.
    pub fn new_with_zeros(graph: FactorGraph, card: Vec<usize>, tables: Vec<Vec<f64>>) -> Result<Self> {
        if card.len() != graph.num_vertices() {
            return Err(Error::InvalidModel(format!(
                "{} cardinalities for {} vertices",
                card.len(),
                graph.num_vertices()
            )));
        }
        if let Some(i) = card.iter().position(|&q| q < 2) {
            return Err(Error::InvalidModel(format!("vertex {i} has fewer than 2 states")));
        }
        if tables.len() != graph.num_factors() {
            return Err(Error::InvalidModel(format!("{} tables for {} factors", tables.len(), graph.num_factors())));
        }
        for (a, t) in tables.iter().enumerate() {
            let size: usize = graph.factor(a).iter().map(|&i| card[i]).product();
            if t.len() != size {
                return Err(Error::InvalidModel(format!("factor {a} table has {} entries, expected {size}", t.len())));
            }
            if let Some(x) = t.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(Error::InvalidModel(format!("factor {a} has invalid entry {x}")));
            }
            if !t.iter().any(|&x| x > 0.0) {
                return Err(Error::InvalidModel(format!("factor {a} is identically zero")));
            }
        }
        Ok(Self { graph, card, tables })
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn card(&self, i: usize) -> usize {
        self.card[i]
    }

    pub fn cards(&self) -> &[usize] {
        &self.card
    }

    pub fn table(&self, a: usize) -> &[f64] {
        &self.tables[a]
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    pub fn is_binary(&self) -> bool {
        self.card.iter().all(|&q| q == 2)
    }

    /// Row-major index of member states `states` in factor `a`.
    pub fn encode(&self, a: usize, states: &[usize]) -> usize {
        self.graph.factor(a).iter().zip(states).fold(0, |acc, (&i, &s)| acc * self.card[i] + s)
    }

    /// Member states of table entry `idx` of factor `a`.
    pub fn decode(&self, a: usize, mut idx: usize) -> Vec<usize> {
        let f = self.graph.factor(a);
        let mut out = vec![0; f.len()];
        for p in (0..f.len()).rev() {
            let q = self.card[f[p]];
            out[p] = idx % q;
            idx /= q;
        }
        out
    }

    /// Table index of factor `a` under a full configuration `x`.
    pub fn index_of(&self, a: usize, x: &[usize]) -> usize {
        self.graph.factor(a).iter().fold(0, |acc, &i| acc * self.card[i] + x[i])
    }

    /// `∏_α Ψ_α(x_α)`.
    pub fn weight(&self, x: &[usize]) -> f64 {
        (0..self.graph.num_factors()).map(|a| self.tables[a][self.index_of(a, x)]).product()
    }

    /// Total number of joint configurations, saturating.
    pub fn state_space_size(&self) -> u128 {
        self.card.iter().fold(1u128, |acc, &q| acc.saturating_mul(q as u128))
    }
}

/// Where vertex fields go when an Ising model is written in factor form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldFold {
    /// Lexicographically smallest incident edge `(min, max, id)`.
    #[default]
    Smallest,
    /// Lexicographically largest incident edge; used to test fold invariance.
    Largest,
}

/// Binary pairwise model `p(x) ∝ exp(Σ J_ij x_i x_j + Σ h_i x_i)`, `x ∈ {±1}`.
///
/// State index `s` corresponds to spin `x = 2s - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryPairwiseModel {
    graph: Graph,
    j: Vec<f64>,
    h: Vec<f64>,
}

pub fn spin(s: usize) -> f64 {
    if s == 1 {
        1.0
    } else {
        -1.0
    }
}

impl BinaryPairwiseModel {
    pub fn new(graph: Graph, j: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if let Some(k) = (0..graph.num_edges()).find(|&k| graph.is_loop(k)) {
            return Err(Error::InvalidModel(format!("edge {k} is a loop")));
        }
        if j.len() != graph.num_edges() || h.len() != graph.num_vertices() {
            return Err(Error::InvalidModel("coupling or field vector has the wrong length".into()));
        }
        if j.iter().chain(&h).any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("non-finite coupling or field".into()));
        }
        Ok(Self { graph, j, h })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn couplings(&self) -> &[f64] {
        &self.j
    }

    pub fn fields(&self) -> &[f64] {
        &self.h
    }

    /// True iff every `J_ij ≥ 0`.
    pub fn attractive(&self) -> bool {
        self.j.iter().all(|&x| x >= 0.0)
    }

    /// `Σ J x_i x_j + Σ h x_i` for a spin configuration given as states.
    pub fn log_weight(&self, s: &[usize]) -> f64 {
        let pair: f64 = self.graph.edges().iter().zip(&self.j).map(|(&(a, b), &j)| j * spin(s[a]) * spin(s[b])).sum();
        let field: f64 = self.h.iter().enumerate().map(|(i, &h)| h * spin(s[i])).sum();
        pair + field
    }

    /// Gauge transform `x_i → g_i x_i`.
    pub fn gauge(&self, g: &[i8]) -> Self {
        let j = self.graph.edges().iter().zip(&self.j).map(|(&(a, b), &j)| j * f64::from(g[a] * g[b])).collect();
        let h = self.h.iter().zip(g).map(|(&h, &s)| h * f64::from(s)).collect();
        Self { graph: self.graph.clone(), j, h }
    }

    pub fn to_discrete(&self) -> DiscreteModel {
        self.to_discrete_with(FieldFold::Smallest)
    }

    /// Factor form: one factor per edge with `exp(J x_i x_j)`, fields folded
    /// into an incident edge, and a unary factor for every isolated vertex.
    pub fn to_discrete_with(&self, fold: FieldFold) -> DiscreteModel {
        let n = self.graph.num_vertices();
        let edges = self.graph.edges();
        let mut target = vec![None; n];
        for i in 0..n {
            let key = |k: usize| {
                let (a, b) = edges[k];
                (a.min(b), a.max(b), k)
            };
            let inc = self.graph.incident(i);
            target[i] = match fold {
                FieldFold::Smallest => inc.into_iter().min_by_key(|&k| key(k)),
                FieldFold::Largest => inc.into_iter().max_by_key(|&k| key(k)),
            };
        }
        let mut factors: Vec<Vec<usize>> = Vec::new();
        let mut tables = Vec::new();
        for (k, &(a, b)) in edges.iter().enumerate() {
            let mut t = vec![0.0; 4];
            for sa in 0..2 {
                for sb in 0..2 {
                    let mut e = self.j[k] * spin(sa) * spin(sb);
                    if target[a] == Some(k) {
                        e += self.h[a] * spin(sa);
                    }
                    if target[b] == Some(k) {
                        e += self.h[b] * spin(sb);
                    }
                    t[sa * 2 + sb] = e.exp();
                }
            }
            factors.push(vec![a, b]);
            tables.push(t);
        }
        for i in 0..n {
            if target[i].is_none() {
                factors.push(vec![i]);
                tables.push(vec![(-self.h[i]).exp(), self.h[i].exp()]);
            }
        }
        let fg = FactorGraph::new(n, factors).expect("edges reference valid vertices");
        DiscreteModel::new(fg, vec![2; n], tables).expect("exponential tables are positive")
    }
}

/// Point of the binary local polytope in `{m_i, χ_ij}` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryPseudomarginals {
    pub m: Vec<f64>,
    pub chi: Vec<f64>,
}

impl BinaryPseudomarginals {
    /// Validates `1 + m_i x_i + m_j x_j + χ_ij x_i x_j > 0` for all signs.
    pub fn new(g: &Graph, m: Vec<f64>, chi: Vec<f64>) -> Result<Self> {
        if m.len() != g.num_vertices() || chi.len() != g.num_edges() {
            return Err(Error::Shape("pseudomarginal vector lengths".into()));
        }
        let b = Self { m, chi };
        b.check_interior(g)?;
        Ok(b)
    }

    pub fn check_interior(&self, g: &Graph) -> Result<()> {
        for (i, &mi) in self.m.iter().enumerate() {
            if !(mi.abs() < 1.0) {
                return Err(Error::Boundary(format!("|m_{i}| = {} not < 1", mi.abs())));
            }
        }
        for k in 0..g.num_edges() {
            if self.pair_belief(g, k).iter().any(|&p| !(p > 0.0)) {
                return Err(Error::Boundary(format!("pair belief of edge {k} not positive")));
            }
        }
        Ok(())
    }

    /// `b_ij` indexed `[s_i * 2 + s_j]` with `x = 2s - 1`.
    pub fn pair_belief(&self, g: &Graph, k: usize) -> [f64; 4] {
        let (a, b) = g.edge(k);
        let mut out = [0.0; 4];
        for sa in 0..2 {
            for sb in 0..2 {
                let (xa, xb) = (spin(sa), spin(sb));
                out[sa * 2 + sb] = (1.0 + self.m[a] * xa + self.m[b] * xb + self.chi[k] * xa * xb) / 4.0;
            }
        }
        out
    }

    /// `b_i` indexed by state.
    pub fn vertex_belief(&self, i: usize) -> [f64; 2] {
        [(1.0 - self.m[i]) / 2.0, (1.0 + self.m[i]) / 2.0]
    }

    /// Reads `m` and `χ` off multinomial beliefs of [`BinaryPairwiseModel::to_discrete`].
    /// Edge `k` of the graph is factor `k` of the discrete model.
    pub fn from_beliefs(g: &Graph, b: &Beliefs) -> Self {
        let m = (0..g.num_vertices()).map(|i| b.vertex[i][1] - b.vertex[i][0]).collect();
        let chi = (0..g.num_edges())
            .map(|k| (0..4).map(|idx| spin(idx / 2) * spin(idx % 2) * b.factor[k][idx]).sum::<f64>())
            .collect();
        Self { m, chi }
    }
}

/// Multinomial pseudomarginals `{b_α, b_i}`; tables use the model's layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Beliefs {
    pub vertex: Vec<Vec<f64>>,
    pub factor: Vec<Vec<f64>>,
}

impl Beliefs {
    /// Largest violation of `Σ_{x_α∖i} b_α = b_i` over factors and members.
    pub fn consistency_gap(&self, model: &DiscreteModel) -> f64 {
        let g = model.graph();
        let mut worst: f64 = 0.0;
        for a in 0..g.num_factors() {
            for (p, &i) in g.factor(a).iter().enumerate() {
                let mut marg = vec![0.0; model.card(i)];
                for (idx, &v) in self.factor[a].iter().enumerate() {
                    marg[model.decode(a, idx)[p]] += v;
                }
                for s in 0..model.card(i) {
                    worst = worst.max((marg[s] - self.vertex[i][s]).abs());
                }
            }
        }
        worst
    }

    /// Positive, normalized and locally consistent within `tol`.
    pub fn validate(&self, model: &DiscreteModel, tol: f64) -> Result<()> {
        for t in self.vertex.iter().chain(&self.factor) {
            if t.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::Boundary("belief entry is not positive".into()));
            }
            if (t.iter().sum::<f64>() - 1.0).abs() > tol {
                return Err(Error::InvalidArgument("belief table is not normalized".into()));
            }
        }
        let gap = self.consistency_gap(model);
        if gap > tol {
            return Err(Error::InvalidArgument(format!("local consistency violated by {gap:e}")));
        }
        Ok(())
    }
}

/// Per-edge correlation coefficients `β_ij` and per-vertex scaled biases `γ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationData {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

pub fn correlation_data(b: &BinaryPseudomarginals, g: &Graph) -> Result<CorrelationData> {
    b.check_interior(g)?;
    let beta = g
        .edges()
        .iter()
        .zip(&b.chi)
        .map(|(&(i, j), &chi)| (chi - b.m[i] * b.m[j]) / ((1.0 - b.m[i] * b.m[i]) * (1.0 - b.m[j] * b.m[j])).sqrt())
        .collect();
    let gamma = b.m.iter().map(|&m| 2.0 * m / (1.0 - m * m).sqrt()).collect();
    Ok(CorrelationData { beta, gamma })
}

/// Shape of a connected nullity-two core after removing degree-two vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nullity2Shape {
    /// Two branch vertices joined by three paths.
    Theta,
    /// Two loops joined by a bridge path.
    Dumbbell,
    /// Two loops at one branch vertex.
    Bouquet,
}

/// A path of the reduced graph: product of coupling signs along it and the
/// core edges (ids in the original graph) it consists of.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedPath {
    pub sign: i8,
    pub edges: Vec<usize>,
}

/// Interaction classes for nullity-two graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nullity2Class {
    EquivalentToAttractive,
    /// Frustrated case `1..=5`.
    Case(u8),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nullity2Reduction {
    pub shape: Nullity2Shape,
    /// Theta: the three paths. Dumbbell: `[loop, bridge, loop]`.
    /// Bouquet: the two loops.
    pub paths: Vec<ReducedPath>,
    pub class: Nullity2Class,
}

/// Series-reduce the core of `m`'s graph and classify the sign pattern up to
/// gauge. Couplings equal to zero are wildcards compatible with either sign.
pub fn frustrated_nullity2_class(m: &BinaryPairwiseModel) -> Result<Nullity2Reduction> {
    let g = m.graph();
    let core = g.core();
    let cg = &core.graph;
    if cg.nullity() != 2 {
        return Err(Error::Nullity { expected: 2, found: cg.nullity() });
    }
    if !cg.is_connected() {
        return Err(Error::Disconnected);
    }
    let sign = |k: usize| -> i8 {
        let j = m.couplings()[core.edges[k]];
        if j > 0.0 {
            1
        } else if j < 0.0 {
            -1
        } else {
            0
        }
    };
    let deg = cg.degrees();
    let branch: Vec<usize> = (0..cg.num_vertices()).filter(|&v| deg[v] >= 3).collect();
    // Walk maximal paths between branch vertices through degree-two vertices.
    let mut used = vec![false; cg.num_edges()];
    let mut paths: Vec<(usize, usize, ReducedPath)> = Vec::new();
    for &start in &branch {
        for k0 in cg.incident(start) {
            if used[k0] {
                continue;
            }
            let mut k = k0;
            let mut at = start;
            let mut s: i8 = 1;
            let mut edges = Vec::new();
            loop {
                used[k] = true;
                s *= sign(k);
                edges.push(core.edges[k]);
                let (a, b) = cg.edge(k);
                let next = if a == at { b } else { a };
                if deg[next] >= 3 {
                    paths.push((start, next, ReducedPath { sign: s, edges }));
                    break;
                }
                at = next;
                k = cg.incident(at).into_iter().find(|&x| !used[x]).expect("degree-two vertex");
            }
        }
    }
    let compatible = |a: i8, b: i8| a == 0 || b == 0 || a == b;
    let (shape, ordered) = match branch.len() {
        1 => (Nullity2Shape::Bouquet, paths.into_iter().map(|p| p.2).collect::<Vec<_>>()),
        2 => {
            let loops: Vec<_> = paths.iter().filter(|p| p.0 == p.1).cloned().collect();
            if loops.is_empty() {
                (Nullity2Shape::Theta, paths.into_iter().map(|p| p.2).collect())
            } else {
                let bridge = paths.iter().find(|p| p.0 != p.1).expect("bridge").2.clone();
                (Nullity2Shape::Dumbbell, vec![loops[0].2.clone(), bridge, loops[1].2.clone()])
            }
        }
        _ => unreachable!("a connected nullity-two core has one or two branch vertices"),
    };
    let class = match shape {
        Nullity2Shape::Theta => {
            let s: Vec<i8> = ordered.iter().map(|p| p.sign).collect();
            let all_compatible = compatible(s[0], s[1]) && compatible(s[0], s[2]) && compatible(s[1], s[2]);
            if all_compatible {
                Nullity2Class::EquivalentToAttractive
            } else {
                Nullity2Class::Case(1)
            }
        }
        Nullity2Shape::Dumbbell => {
            let neg = [ordered[0].sign, ordered[2].sign].iter().filter(|&&x| x < 0).count();
            match neg {
                0 => Nullity2Class::EquivalentToAttractive,
                1 => Nullity2Class::Case(2),
                _ => Nullity2Class::Case(3),
            }
        }
        Nullity2Shape::Bouquet => {
            let neg = ordered.iter().filter(|p| p.sign < 0).count();
            match neg {
                0 => Nullity2Class::EquivalentToAttractive,
                1 => Nullity2Class::Case(4),
                _ => Nullity2Class::Case(5),
            }
        }
    };
    Ok(Nullity2Reduction { shape, paths: ordered, class })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn ising(g: Graph, j: Vec<f64>) -> BinaryPairwiseModel {
        let n = g.num_vertices();
        BinaryPairwiseModel::new(g, j, vec![0.0; n]).unwrap()
    }

    /// Oracle: a gauge making every nonzero coupling positive exists.
    fn gauge_attractive(m: &BinaryPairwiseModel) -> bool {
        let n = m.graph().num_vertices();
        (0..1u32 << n).any(|mask| {
            let g: Vec<i8> = (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
            m.gauge(&g).attractive()
        })
    }

    #[test]
    fn attractive_examples() {
        let g = fixtures::cycle(4);
        assert!(ising(g.clone(), vec![0.5; 4]).attractive());
        assert!(!ising(g.clone(), vec![0.5, -0.1, 0.5, 0.5]).attractive());
        assert!(ising(g, vec![0.0; 4]).attractive());
    }

    #[test]
    fn encode_decode_roundtrip() {
        let fg = FactorGraph::new(3, vec![vec![2, 0, 1]]).unwrap();
        let m = DiscreteModel::new(fg, vec![2, 3, 4], vec![vec![1.0; 24]]).unwrap();
        for idx in 0..24 {
            assert_eq!(m.encode(0, &m.decode(0, idx)), idx);
        }
        // first member (vertex 2, card 4) is most significant
        assert_eq!(m.encode(0, &[1, 0, 0]), 6);
    }

    #[test]
    fn model_validation() {
        let fg = FactorGraph::new(2, vec![vec![0, 1]]).unwrap();
        assert!(DiscreteModel::new(fg.clone(), vec![2, 2], vec![vec![1.0; 3]]).is_err());
        assert!(DiscreteModel::new(fg.clone(), vec![2, 1], vec![vec![1.0; 2]]).is_err());
        assert!(DiscreteModel::new(fg.clone(), vec![2, 2], vec![vec![1.0, -1.0, 1.0, 1.0]]).is_err());
        assert!(DiscreteModel::new(fg.clone(), vec![2, 2], vec![vec![0.0, 0.0, 1.0, 1.0]]).is_err());
        assert!(DiscreteModel::new_with_zeros(fg, vec![2, 2], vec![vec![0.0, 0.0, 1.0, 1.0]]).is_ok());
    }

    #[test]
    fn ising_conversion_folds_fields_once() {
        let g = fixtures::path(3);
        let m = BinaryPairwiseModel::new(g, vec![0.3, -0.4], vec![0.1, 0.2, -0.5]).unwrap();
        for fold in [FieldFold::Smallest, FieldFold::Largest] {
            let d = m.to_discrete_with(fold);
            for x in 0..8usize {
                let s: Vec<usize> = (0..3).map(|i| x >> i & 1).collect();
                assert!((d.weight(&s).ln() - m.log_weight(&s)).abs() < 1e-12);
            }
        }
        let iso = BinaryPairwiseModel::new(Graph::empty(2), vec![], vec![0.7, 0.0]).unwrap();
        let d = iso.to_discrete();
        assert_eq!(d.graph().num_factors(), 2);
        assert!((d.weight(&[1, 0]).ln() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn loops_rejected_in_ising() {
        assert!(BinaryPairwiseModel::new(fixtures::bouquet(1), vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn pseudomarginal_domain() {
        let g = fixtures::path(2);
        assert!(BinaryPseudomarginals::new(&g, vec![0.0, 0.0], vec![0.5]).is_ok());
        assert!(BinaryPseudomarginals::new(&g, vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(BinaryPseudomarginals::new(&g, vec![0.9, -0.9], vec![0.5]).is_err());
        let b = BinaryPseudomarginals::new(&g, vec![0.2, -0.1], vec![0.3]).unwrap();
        let p = b.pair_belief(&g, 0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[2] + p[3] - b.vertex_belief(0)[1]).abs() < 1e-15);
    }

    #[test]
    fn correlation_examples() {
        let g = fixtures::path(2);
        let b = BinaryPseudomarginals::new(&g, vec![0.0, 0.0], vec![0.0]).unwrap();
        let c = correlation_data(&b, &g).unwrap();
        assert_eq!((c.beta[0], c.gamma[0]), (0.0, 0.0));
        let b = BinaryPseudomarginals::new(&g, vec![0.0, 0.0], vec![0.5]).unwrap();
        let c = correlation_data(&b, &g).unwrap();
        assert_eq!((c.beta[0], c.gamma[1]), (0.5, 0.0));
        let b = BinaryPseudomarginals { m: vec![0.0, 0.0], chi: vec![1.0] };
        assert!(correlation_data(&b, &g).is_err());
    }

    #[test]
    fn nullity2_fig53_one_negative_edge_is_case1() {
        let m = ising(fixtures::fig53(), vec![-0.5, 0.5, 0.5, 0.5, 0.5]);
        let r = frustrated_nullity2_class(&m).unwrap();
        assert_eq!(r.shape, Nullity2Shape::Theta);
        assert_eq!(r.class, Nullity2Class::Case(1));
        let all_pos = ising(fixtures::fig53(), vec![0.5; 5]);
        assert_eq!(frustrated_nullity2_class(&all_pos).unwrap().class, Nullity2Class::EquivalentToAttractive);
    }

    #[test]
    fn nullity2_multigraph_theta() {
        let m = ising(fixtures::theta(), vec![0.5, -0.5, 0.5]);
        let r = frustrated_nullity2_class(&m).unwrap();
        assert_eq!(r.shape, Nullity2Shape::Theta);
        assert_eq!(r.class, Nullity2Class::Case(1));
    }

    #[test]
    fn nullity2_shapes_and_cases() {
        let db = fixtures::simple_dumbbell();
        let m = ising(db.clone(), vec![0.5, 0.5, -0.5, -0.5, 0.5, 0.5, 0.5]);
        let r = frustrated_nullity2_class(&m).unwrap();
        assert_eq!(r.shape, Nullity2Shape::Dumbbell);
        assert_eq!(r.class, Nullity2Class::Case(2));
        let m = ising(db, vec![0.5, 0.5, -0.5, -0.5, 0.5, 0.5, -0.5]);
        assert_eq!(frustrated_nullity2_class(&m).unwrap().class, Nullity2Class::Case(3));
        let bq = fixtures::simple_bouquet();
        let m = ising(bq.clone(), vec![-0.5, 0.5, 0.5, 0.5, 0.5, 0.5]);
        let r = frustrated_nullity2_class(&m).unwrap();
        assert_eq!(r.shape, Nullity2Shape::Bouquet);
        assert_eq!(r.class, Nullity2Class::Case(4));
        let m = ising(bq, vec![-0.5, 0.5, 0.5, -0.5, 0.5, 0.5]);
        assert_eq!(frustrated_nullity2_class(&m).unwrap().class, Nullity2Class::Case(5));
        assert!(frustrated_nullity2_class(&ising(fixtures::cycle(4), vec![1.0; 4])).is_err());
    }

    #[test]
    fn nullity2_class_matches_gauge_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for g in [fixtures::fig53(), fixtures::simple_theta(), fixtures::simple_dumbbell(), fixtures::simple_bouquet()]
        {
            for _ in 0..40 {
                let j: Vec<f64> =
                    (0..g.num_edges()).map(|_| [-1.0, 1.0, 1.0, 0.0][rng.random_range(0..4usize)]).collect();
                let m = ising(g.clone(), j);
                let r = frustrated_nullity2_class(&m).unwrap();
                assert_eq!(
                    r.class == Nullity2Class::EquivalentToAttractive,
                    gauge_attractive(&m),
                    "{:?}",
                    m.couplings()
                );
            }
        }
    }
}
