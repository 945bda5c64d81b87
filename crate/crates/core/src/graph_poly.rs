//! Graph polynomials from the loop series: the multivariate `Θ_G`, the
//! bivariate `θ_G(β, γ)` and the univariate `ω_G(β)`.
//!
//! θ and ω each have a subgraph-enumeration evaluator and a memoised
//! deletion-contraction evaluator; the checks below compare them with the
//! Tutte polynomial, monomer-dimer and matching polynomials, a determinant
//! sum and a matching census.

use std::collections::HashMap;

use nalgebra::{Complex, DMatrix};
use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::exact_oracle;
use crate::graph_core::Graph;
use crate::linalg::{det_rational, eigenvalues};
use crate::loop_series::{enumerate_sub_coregraphs, f_poly};
use crate::poly::{Poly, Poly2};
use crate::{Error, Result};

/// Largest edge count for the `2^{|E|}` subset evaluators.
pub const ENUMERATION_CAP: usize = 24;

/// Largest vertex count for the `2^{|V|}` spin-sum identity.
pub const SPIN_CAP: usize = 16;

/// Largest edge count of `G^{(2)}` for the `ω(1)` matching census.
pub const CENSUS_CAP: usize = 40;

fn check_cap(what: &'static str, size: usize, cap: usize) -> Result<()> {
    if size > cap {
        return Err(Error::CapExceeded { what, size: size as u128, cap: cap as u128 });
    }
    Ok(())
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn one_minus_beta() -> Poly {
    Poly::from_i64(&[1, -1])
}

// ---------------------------------------------------------------------------
// Multivariate Θ.

/// A graph with edge weights `β_e` and vertex weights `γ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    pub graph: Graph,
    pub beta: Vec<BigRational>,
    pub gamma: Vec<BigRational>,
}

impl WeightedGraph {
    pub fn new(graph: Graph, beta: Vec<BigRational>, gamma: Vec<BigRational>) -> Result<Self> {
        if beta.len() != graph.num_edges() || gamma.len() != graph.num_vertices() {
            return Err(Error::Shape(format!(
                "expected {} edge and {} vertex weights, got {} and {}",
                graph.num_edges(),
                graph.num_vertices(),
                beta.len(),
                gamma.len()
            )));
        }
        Ok(Self { graph, beta, gamma })
    }

    pub fn uniform(graph: Graph, beta: BigRational, gamma: BigRational) -> Self {
        let (m, n) = (graph.num_edges(), graph.num_vertices());
        Self { graph, beta: vec![beta; m], gamma: vec![gamma; n] }
    }

    fn remove(&self, k: usize, contract: bool) -> Result<Self> {
        let (a, b) = self.graph.edge(k);
        let mut beta = self.beta.clone();
        beta.remove(k);
        let mut gamma = self.gamma.clone();
        let graph = if contract && a != b {
            gamma.remove(a.max(b));
            self.graph.contract_edge(k)?
        } else {
            self.graph.delete_edge(k)?
        };
        Ok(Self { graph, beta, gamma })
    }
}

/// `f_n(x)` at a rational point.
pub fn f_rational(n: usize, x: &BigRational) -> BigRational {
    let (mut a, mut b) = (BigRational::one(), BigRational::zero());
    for _ in 0..n {
        let next = x * &b + &a;
        a = b;
        b = next;
    }
    a
}

/// `Θ_G(β, γ) = Σ_{s⊆E} ∏_{e∈s} β_e ∏_i f_{d_i(s)}(γ_i)` by enumeration.
pub fn theta_multivariate(w: &WeightedGraph) -> Result<BigRational> {
    let g = &w.graph;
    let m = g.num_edges();
    check_cap("edges for Θ enumeration", m, ENUMERATION_CAP)?;
    let mut total = BigRational::zero();
    let mut deg = vec![0usize; g.num_vertices()];
    for mask in 0u64..(1 << m) {
        deg.iter_mut().for_each(|d| *d = 0);
        let mut prod = BigRational::one();
        for k in 0..m {
            if mask >> k & 1 == 1 {
                let (a, b) = g.edge(k);
                deg[a] += 1;
                deg[b] += 1;
                prod *= &w.beta[k];
            }
        }
        if deg.contains(&1) {
            continue;
        }
        for (i, &d) in deg.iter().enumerate() {
            prod *= f_rational(d, &w.gamma[i]);
        }
        total += prod;
    }
    Ok(total)
}

/// Deletion-contraction evaluation of `Θ_G`. Every contracted edge must have
/// equal vertex weights at its ends; loops are resolved at the bouquets.
pub fn theta_multivariate_dc(w: &WeightedGraph) -> Result<BigRational> {
    check_cap("edges for Θ deletion-contraction", w.graph.num_edges(), ENUMERATION_CAP)?;
    theta_multivariate_dc_rec(w)
}

fn theta_multivariate_dc_rec(w: &WeightedGraph) -> Result<BigRational> {
    let g = &w.graph;
    let non_loop: Vec<usize> = (0..g.num_edges()).filter(|&k| !g.is_loop(k)).collect();
    if non_loop.is_empty() {
        // Disjoint bouquets: Σ over loop subsets s at v of ∏β f_{2|s|}(γ_v).
        let mut total = BigRational::one();
        for v in 0..g.num_vertices() {
            let loops: Vec<usize> = g.incident(v);
            let mut by_size = vec![BigRational::zero(); loops.len() + 1];
            by_size[0] = BigRational::one();
            for &k in &loops {
                for s in (1..by_size.len()).rev() {
                    let add = &by_size[s - 1] * &w.beta[k];
                    by_size[s] += add;
                }
            }
            let local = by_size
                .iter()
                .enumerate()
                .fold(BigRational::zero(), |acc, (s, c)| acc + c * f_rational(2 * s, &w.gamma[v]));
            total *= local;
        }
        return Ok(total);
    }
    let k = non_loop
        .into_iter()
        .find(|&k| {
            let (a, b) = g.edge(k);
            w.gamma[a] == w.gamma[b]
        })
        .ok_or_else(|| Error::InvalidArgument("contraction needs equal vertex weights at both ends".into()))?;
    let del = theta_multivariate_dc_rec(&w.remove(k, false)?)?;
    let con = theta_multivariate_dc_rec(&w.remove(k, true)?)?;
    Ok((BigRational::one() - &w.beta[k]) * del + &w.beta[k] * con)
}

/// Spin-sum form of `Θ_G(β, (ξ_i - ξ_i⁻¹))`:
/// `Σ_x ∏_{ij} (1 + x_i x_j β_ij ξ_i^{-x_i} ξ_j^{-x_j}) ∏_i ξ_i^{x_i}/(ξ_i + ξ_i⁻¹)`.
pub fn theta_spin_sum(g: &Graph, beta: &[BigRational], xi: &[BigRational]) -> Result<BigRational> {
    let n = g.num_vertices();
    check_cap("vertices for the spin sum", n, SPIN_CAP)?;
    if beta.len() != g.num_edges() || xi.len() != n {
        return Err(Error::Shape("one β per edge and one ξ per vertex".into()));
    }
    if xi.iter().any(|x| x.is_zero()) {
        return Err(Error::InvalidArgument("ξ must be nonzero".into()));
    }
    let pow = |x: &BigRational, s: i32| if s > 0 { x.clone() } else { x.recip() };
    let mut total = BigRational::zero();
    for mask in 0u32..(1 << n) {
        let x: Vec<i32> = (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
        let mut term = BigRational::one();
        for (k, &(a, b)) in g.edges().iter().enumerate() {
            let sign = rat(i64::from(x[a] * x[b]));
            term *= BigRational::one() + sign * &beta[k] * pow(&xi[a], -x[a]) * pow(&xi[b], -x[b]);
        }
        for i in 0..n {
            term *= pow(&xi[i], x[i]) / (&xi[i] + xi[i].recip());
        }
        total += term;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Deletion-contraction with memoisation.

type CanonKey = (usize, Vec<(usize, usize)>);

/// Relabel vertices by colour refinement (degree, then neighbour colours),
/// ties broken by index. Equal forms imply isomorphic graphs, which is all
/// the memo needs; isomorphic graphs with different forms only miss the memo.
pub fn canonical_form(g: &Graph) -> Graph {
    let n = g.num_vertices();
    let mut nbrs = vec![Vec::new(); n];
    for &(a, b) in g.edges() {
        nbrs[a].push(b);
        if a != b {
            nbrs[b].push(a);
        }
    }
    let loops: Vec<usize> = (0..n).map(|i| g.edges().iter().filter(|&&(a, b)| a == i && b == i).count()).collect();
    let mut color: Vec<usize> = rank(&(0..n).map(|i| vec![g.degree(i), loops[i]]).collect::<Vec<_>>());
    let mut classes = distinct(&color);
    for _ in 0..n {
        let sigs: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut s: Vec<usize> = nbrs[i].iter().map(|&j| color[j]).collect();
                s.sort_unstable();
                s.insert(0, color[i]);
                s
            })
            .collect();
        color = rank(&sigs);
        let c = distinct(&color);
        if c == classes {
            break;
        }
        classes = c;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (color[i], i));
    let mut pos = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        pos[old] = new;
    }
    let mut edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (pos[a], pos[b]);
            (x.min(y), x.max(y))
        })
        .collect();
    edges.sort_unstable();
    Graph::new(n, edges).expect("relabelled graph is valid")
}

fn rank<T: Ord + Clone>(items: &[T]) -> Vec<usize> {
    let mut sorted: Vec<T> = items.to_vec();
    sorted.sort();
    sorted.dedup();
    items.iter().map(|x| sorted.binary_search(x).expect("present")).collect()
}

fn distinct(c: &[usize]) -> usize {
    c.iter().copied().max().map_or(0, |m| m + 1)
}

/// A graph invariant fixed by its value on trees and bouquets, a
/// deletion-contraction rule and multiplicativity over components; it must
/// also be unchanged by taking the core of a component that is not a tree.
struct DeletionContraction<T> {
    memo: HashMap<CanonKey, T>,
    one: T,
    tree: T,
    bouquet: fn(usize) -> T,
    combine: fn(&T, &T) -> T,
    mul: fn(&T, &T) -> T,
}

impl<T: Clone> DeletionContraction<T> {
    fn eval(&mut self, g: &Graph) -> Result<T> {
        let mut acc = self.one.clone();
        for c in g.components() {
            let v = if c.nullity() == 0 { self.tree.clone() } else { self.eval_core(&c.core().graph)? };
            acc = (self.mul)(&acc, &v);
        }
        Ok(acc)
    }

    fn eval_core(&mut self, g: &Graph) -> Result<T> {
        let c = canonical_form(g);
        let key = (c.num_vertices(), c.edges().to_vec());
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let v = if c.num_vertices() == 1 {
            (self.bouquet)(c.num_edges())
        } else {
            let k = (0..c.num_edges()).find(|&k| !c.is_loop(k)).expect("connected core with two vertices");
            let del = self.eval(&c.delete_edge(k)?)?;
            let con = self.eval(&c.contract_edge(k)?)?;
            (self.combine)(&del, &con)
        };
        self.memo.insert(key, v.clone());
        Ok(v)
    }
}

/// `θ_{B_n}(β, γ) = Σ_k C(n, k) f_{2k}(γ) βᵏ`.
pub fn theta_bouquet(n: usize) -> Poly2 {
    (0..=n).fold(Poly2::zero(), |acc, k| {
        let c = Poly2::monomial(binomial(BigInt::from(n), BigInt::from(k)), 0, 0);
        acc + c * Poly2::from_gamma(&f_poly(2 * k)).shift_beta(k)
    })
}

/// `ω_{B_n}(β) = 1 + (2n - 1)β`.
pub fn omega_bouquet(n: usize) -> Poly {
    Poly::from_i64(&[1, 2 * n as i64 - 1])
}

/// `θ_G(β, γ)` by deletion-contraction down to bouquets.
pub fn theta(g: &Graph) -> Result<Poly2> {
    let mut dc = DeletionContraction {
        memo: HashMap::new(),
        one: Poly2::one(),
        tree: Poly2::one(),
        bouquet: theta_bouquet,
        combine: |d: &Poly2, c: &Poly2| {
            let beta = Poly2::monomial(BigInt::one(), 1, 0);
            (Poly2::one() - beta.clone()) * d.clone() + beta * c.clone()
        },
        mul: |a: &Poly2, b: &Poly2| a * b,
    };
    dc.eval(g)
}

/// `θ_G(β, γ) = Σ_{s⊆E} β^{|s|} ∏_i f_{d_i(s)}(γ)` by enumeration over all
/// subsets, grouped by `|s|` and the degrees above two (`f_0 = f_2 = 1`).
pub fn theta_enumerate(g: &Graph) -> Result<Poly2> {
    let m = g.num_edges();
    check_cap("edges for θ enumeration", m, ENUMERATION_CAP)?;
    let n = g.num_vertices();
    let mut deg = vec![0usize; n];
    let mut ones = 0usize;
    let mut size = 0usize;
    let mut groups: HashMap<(usize, Vec<usize>), u64> = HashMap::new();
    let mut record = |deg: &[usize], size: usize| {
        let mut high: Vec<usize> = deg.iter().copied().filter(|&d| d > 2).collect();
        high.sort_unstable();
        *groups.entry((size, high)).or_insert(0) += 1;
    };
    // `ones` counts vertices of degree one.
    record(&deg, 0);
    // Gray code: step t flips edge trailing_zeros(t).
    let mut included = vec![false; m];
    for t in 1u64..(1u64 << m) {
        let k = t.trailing_zeros() as usize;
        let (a, b) = g.edge(k);
        let delta: isize = if included[k] { -1 } else { 1 };
        included[k] = !included[k];
        size = (size as isize + delta) as usize;
        for v in [a, b] {
            if deg[v] == 1 {
                ones -= 1;
            }
            deg[v] = (deg[v] as isize + delta) as usize;
            if deg[v] == 1 {
                ones += 1;
            }
        }
        if ones == 0 {
            record(&deg, size);
        }
    }
    let mut f_cache: HashMap<usize, Poly2> = HashMap::new();
    let mut total = Poly2::zero();
    for ((size, high), count) in groups {
        let mut term = Poly2::monomial(BigInt::from(count), size, 0);
        for d in high {
            let f = f_cache.entry(d).or_insert_with(|| Poly2::from_gamma(&f_poly(d)));
            term = term * f.clone();
        }
        total = total + term;
    }
    Ok(total)
}

/// `ω_G(β)` by deletion-contraction: `ω_G = ω_{G∖e} + β ω_{G/e}`,
/// `ω_{B_n} = 1 + (2n - 1)β`, `ω_T = 1 - β` on trees.
pub fn omega(g: &Graph) -> Result<Poly> {
    let mut dc = DeletionContraction {
        memo: HashMap::new(),
        one: Poly::one(),
        tree: one_minus_beta(),
        bouquet: omega_bouquet,
        combine: |d: &Poly, c: &Poly| d + &(&Poly::x() * c),
        mul: |a: &Poly, b: &Poly| a * b,
    };
    dc.eval(g)
}

/// `ω_G` from its definition `θ_G(β, 2√-1) / (1 - β)^{|E|-|V|}`; `θ` only
/// carries even powers of `γ`, so the substitution is `γ² = -4`.
pub fn omega_from_theta(g: &Graph) -> Result<Poly> {
    let t = theta(g)?.at_gamma_squared(-4).ok_or_else(|| Error::Numeric("θ has an odd power of γ".into()))?;
    let k = g.num_edges() as isize - g.num_vertices() as isize;
    if k >= 0 {
        t.div_one_minus_x_pow(k as usize)
            .ok_or_else(|| Error::Numeric("θ(β, 2i) is not divisible by (1 - β)^{|E|-|V|}".into()))
    } else {
        Ok(&t * &one_minus_beta().pow((-k) as usize))
    }
}

/// `ω_G(β) = Σ_{s⊆E} β^{|s|} ∏ h_{n(C)}(β)` over the components `C` of
/// `(V, s)`, with `h_0 = 1 - β`, `h_1 = 2` and `h_n = 0` otherwise.
pub fn omega_subgraph_sum(g: &Graph) -> Result<Poly> {
    let m = g.num_edges();
    check_cap("edges for the ω subgraph sum", m, ENUMERATION_CAP)?;
    // counts[size][trees][unicyclic]
    let mut counts: HashMap<(usize, usize, usize), u64> = HashMap::new();
    for mask in 0u64..(1 << m) {
        let edges: Vec<(usize, usize)> = (0..m).filter(|&k| mask >> k & 1 == 1).map(|k| g.edge(k)).collect();
        let size = edges.len();
        let sub = Graph::new(g.num_vertices(), edges)?;
        let (mut trees, mut uni, mut dead) = (0, 0, false);
        for c in sub.components() {
            match c.nullity() {
                0 => trees += 1,
                1 => uni += 1,
                _ => {
                    dead = true;
                    break;
                }
            }
        }
        if !dead {
            *counts.entry((size, trees, uni)).or_insert(0) += 1;
        }
    }
    let mut total = Poly::zero();
    for ((size, trees, uni), c) in counts {
        let coeff = BigInt::from(c) << uni;
        let term = &Poly::monomial(coeff, size) * &one_minus_beta().pow(trees);
        total = &total + &term;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Tutte polynomial oracle.

/// `T_G(x, y)` at a rational point by the bridge/loop deletion-contraction
/// rules, memoised on the canonical form.
pub fn tutte_eval(g: &Graph, x: &BigRational, y: &BigRational) -> BigRational {
    fn rec(g: &Graph, x: &BigRational, y: &BigRational, memo: &mut HashMap<CanonKey, BigRational>) -> BigRational {
        if g.num_edges() == 0 {
            return BigRational::one();
        }
        let c = canonical_form(g);
        let key = (c.num_vertices(), c.edges().to_vec());
        if let Some(v) = memo.get(&key) {
            return v.clone();
        }
        let v = if c.is_loop(0) {
            y * rec(&c.delete_edge(0).expect("edge"), x, y, memo)
        } else {
            let del = c.delete_edge(0).expect("edge");
            let con = c.contract_edge(0).expect("edge");
            if del.num_components() > c.num_components() {
                x * rec(&con, x, y, memo)
            } else {
                rec(&del, x, y, memo) + rec(&con, x, y, memo)
            }
        };
        memo.insert(key, v.clone());
        v
    }
    rec(g, x, y, &mut HashMap::new())
}

/// One side-by-side evaluation of an identity at a rational point.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentitySample {
    pub point: BigRational,
    pub lhs: BigRational,
    pub rhs: BigRational,
}

impl IdentitySample {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

pub fn all_hold(samples: &[IdentitySample]) -> bool {
    samples.iter().all(IdentitySample::holds)
}

/// `θ_G(β, 0) = (1 - β)^{n(G)} β^{r(G)} T_G(1/β, (1 + β)/(1 - β))`, with
/// `r(G) = |V| - k(G)`.
pub fn theta_gamma0_tutte_check(g: &Graph, betas: &[BigRational]) -> Result<Vec<IdentitySample>> {
    let t = theta(g)?;
    let nullity = g.nullity();
    let r = g.num_vertices() - g.num_components();
    betas
        .iter()
        .map(|b| {
            if b.is_zero() || b.is_one() {
                return Err(Error::InvalidArgument("β = 0 and β = 1 are poles of the Tutte transform".into()));
            }
            let one = BigRational::one();
            let lhs = t.eval_rational(b, &BigRational::zero());
            let x = b.recip();
            let y = (&one + b) / (&one - b);
            let rhs = num_traits::pow(&one - b, nullity) * num_traits::pow(b.clone(), r) * tutte_eval(g, &x, &y);
            Ok(IdentitySample { point: b.clone(), lhs, rhs })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Counting sub-coregraphs.

/// `((5 - √5)/2)^{n-1} + ((5 + √5)/2)^{n-1}`, which is an integer; `1` for
/// `n = 0`.
pub fn upper_count_bound(n: usize) -> BigInt {
    if n == 0 {
        return BigInt::one();
    }
    let (mut a, mut b) = (BigInt::from(2), BigInt::from(5));
    for _ in 0..n - 1 {
        let next = BigInt::from(5) * &b - BigInt::from(5) * &a;
        a = b;
        b = next;
    }
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoregraphCount {
    pub nullity: usize,
    /// Number of sub-coregraphs found by enumeration.
    pub count: u64,
    /// `2^{n(G)}`.
    pub lower: BigInt,
    pub upper: BigInt,
    pub theta_one_zero: BigInt,
    pub theta_one_one: BigInt,
    /// The core is a subdivided bouquet, so the lower bound should be tight.
    pub lower_tight_expected: bool,
    /// The core has maximum degree at most three (or `G` is a tree), so the
    /// upper bound should be tight.
    pub upper_tight_expected: bool,
}

impl CoregraphCount {
    pub fn within_bounds(&self) -> bool {
        let c = BigInt::from(self.count);
        self.lower <= c && c <= self.upper
    }

    pub fn tightness_consistent(&self) -> bool {
        let c = BigInt::from(self.count);
        (c == self.lower) == self.lower_tight_expected && (c == self.upper) == self.upper_tight_expected
    }
}

/// Sub-coregraph count of a connected graph with the bounds from `θ(1, 0)`
/// and `θ(1, 1)`.
pub fn count_sub_coregraphs_via_theta(g: &Graph) -> Result<CoregraphCount> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let count = enumerate_sub_coregraphs(g)?.len() as u64;
    let t = theta(g)?;
    let core = g.core().graph;
    let high = core.degrees().iter().filter(|&&d| d > 2).count();
    let max_deg = core.degrees().into_iter().max().unwrap_or(0);
    let nullity = g.nullity();
    Ok(CoregraphCount {
        nullity,
        count,
        lower: BigInt::one() << nullity,
        upper: upper_count_bound(nullity),
        theta_one_zero: t.at_beta(1).coeff(0),
        theta_one_one: t.at_beta(1).coeffs().iter().sum(),
        lower_tight_expected: high <= 1,
        upper_tight_expected: max_deg <= 3,
    })
}

/// `C_{n,0} = 2ⁿ`, `C_{n,l} = Σ_{k=l+1}^{n} C(n,k) C(k+l-1, 2l)`.
pub fn c_nl(n: usize, l: usize) -> BigInt {
    if l == 0 {
        return BigInt::one() << n;
    }
    (l + 1..=n).fold(BigInt::zero(), |acc, k| {
        acc + binomial(BigInt::from(n), BigInt::from(k)) * binomial(BigInt::from(k + l - 1), BigInt::from(2 * l))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeThreeCensus {
    pub nullity: usize,
    /// `census[l]`: sub-coregraphs with exactly `2l` vertices of degree three.
    pub census: Vec<u64>,
    /// `C_{n,l}` for `l = 0..n`.
    pub closed_form: Vec<BigInt>,
}

impl DegreeThreeCensus {
    pub fn matches(&self) -> bool {
        self.census.len() == self.closed_form.len()
            && self.census.iter().zip(&self.closed_form).all(|(&a, b)| BigInt::from(a) == *b)
    }
}

/// Census of sub-coregraphs by number of degree-three vertices, for
/// connected graphs whose core has maximum degree at most three.
pub fn c_nl_coefficients(g: &Graph) -> Result<DegreeThreeCensus> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.nullity();
    if n == 0 {
        return Err(Error::InvalidGraph("trees have no C_{n,l} table".into()));
    }
    if g.core().graph.degrees().iter().any(|&d| d > 3) {
        return Err(Error::InvalidGraph("core has a vertex of degree above three".into()));
    }
    let mut census = vec![0u64; n];
    for s in enumerate_sub_coregraphs(g)? {
        let threes = s.degrees(g).iter().filter(|&&d| d == 3).count();
        let l = threes / 2;
        if threes % 2 == 1 || l >= n {
            return Err(Error::Numeric(format!("sub-coregraph with {threes} degree-three vertices")));
        }
        census[l] += 1;
    }
    Ok(DegreeThreeCensus { nullity: n, census, closed_form: (0..n).map(|l| c_nl(n, l)).collect() })
}

// ---------------------------------------------------------------------------
// Monomer-dimer and matching polynomials.

/// `Ξ_G(μ, λ) = Σ_D ∏_{e∈D} μ_e ∏_{i∉[D]} λ_i` over all matchings.
pub fn monomer_dimer(g: &Graph, mu: &[BigRational], lambda: &[BigRational]) -> Result<BigRational> {
    if mu.len() != g.num_edges() || lambda.len() != g.num_vertices() {
        return Err(Error::Shape("one μ per edge and one λ per vertex".into()));
    }
    let mut total = BigRational::zero();
    let mut covered = vec![false; g.num_vertices()];
    exact_oracle::for_each_matching(g, |d| {
        covered.iter_mut().for_each(|c| *c = false);
        let mut term = BigRational::one();
        for &k in d {
            let (a, b) = g.edge(k);
            covered[a] = true;
            covered[b] = true;
            term *= &mu[k];
        }
        for (i, c) in covered.iter().enumerate() {
            if !c {
                term *= &lambda[i];
            }
        }
        total += term;
    });
    Ok(total)
}

/// `Ξ_G(-β, λ)` with `λ_i = 1 + (d_i - 1)β`, as a polynomial in `β`.
pub fn omega_monomer_dimer(g: &Graph) -> Poly {
    let deg = g.degrees();
    let mut total = Poly::zero();
    let mut covered = vec![false; g.num_vertices()];
    exact_oracle::for_each_matching(g, |d| {
        covered.iter_mut().for_each(|c| *c = false);
        for &k in d {
            let (a, b) = g.edge(k);
            covered[a] = true;
            covered[b] = true;
        }
        let sign = if d.len() % 2 == 0 { 1 } else { -1 };
        let mut term = Poly::monomial(BigInt::from(sign), d.len());
        for (i, c) in covered.iter().enumerate() {
            if !c {
                term = &term * &Poly::from_i64(&[1, deg[i] as i64 - 1]);
            }
        }
        total = &total + &term;
    });
    total
}

/// `ω_G(β)` against `Ξ_G(-β, 1 + (d - 1)β)` at rational points.
pub fn omega_monomer_dimer_check(g: &Graph, betas: &[BigRational]) -> Result<Vec<IdentitySample>> {
    let w = omega(g)?;
    let deg = g.degrees();
    betas
        .iter()
        .map(|b| {
            let mu = vec![-b.clone(); g.num_edges()];
            let lambda: Vec<BigRational> = deg.iter().map(|&d| BigRational::one() + rat(d as i64 - 1) * b).collect();
            Ok(IdentitySample { point: b.clone(), lhs: w.eval_rational(b), rhs: monomer_dimer(g, &mu, &lambda)? })
        })
        .collect()
}

/// `α_G(x) = Σ_k (-1)ᵏ p_G(k) x^{|V|-2k}`.
pub fn matching_polynomial(g: &Graph) -> Poly {
    let n = g.num_vertices();
    let mut p = vec![0i64; n / 2 + 1];
    exact_oracle::for_each_matching(g, |d| p[d.len()] += 1);
    let mut coeffs = vec![BigInt::zero(); n + 1];
    for (k, &c) in p.iter().enumerate() {
        coeffs[n - 2 * k] = BigInt::from(if k % 2 == 0 { c } else { -c });
    }
    Poly::new(coeffs)
}

/// Common degree of a regular graph.
pub fn regular_degree(g: &Graph) -> Option<usize> {
    let d = g.degrees();
    let first = *d.first()?;
    d.iter().all(|&x| x == first).then_some(first)
}

/// For a `(q+1)`-regular graph, `ω_G(u²) = α_G(1/u + qu) u^{|V|}`.
pub fn omega_matching_check(g: &Graph, us: &[BigRational]) -> Result<Vec<IdentitySample>> {
    let d = regular_degree(g).ok_or_else(|| Error::InvalidGraph("graph is not regular".into()))?;
    if d < 2 {
        return Err(Error::InvalidGraph("needs degree at least two".into()));
    }
    let q = rat(d as i64 - 1);
    let w = omega(g)?;
    let alpha = matching_polynomial(g);
    us.iter()
        .map(|u| {
            if u.is_zero() {
                return Err(Error::InvalidArgument("u must be nonzero".into()));
            }
            let lhs = w.eval_rational(&(u * u));
            let rhs = alpha.eval_rational(&(u.recip() + &q * u)) * num_traits::pow(u.clone(), g.num_vertices());
            Ok(IdentitySample { point: u.clone(), lhs, rhs })
        })
        .collect()
}

/// For a `(q+1)`-regular graph on `N` vertices, `w_{N-k} = w_k q^{N-2k}`,
/// checked as `w_{N-k} q^{max(0, 2k-N)} = w_k q^{max(0, N-2k)}`.
pub fn omega_coefficient_symmetry(g: &Graph) -> Result<bool> {
    let d = regular_degree(g).ok_or_else(|| Error::InvalidGraph("graph is not regular".into()))?;
    if d < 2 {
        return Err(Error::InvalidGraph("needs degree at least two".into()));
    }
    let q = BigInt::from(d - 1);
    let w = omega(g)?;
    let n = g.num_vertices();
    Ok((0..=n).all(|k| {
        let lhs = w.coeff(n - k) * num_traits::pow(q.clone(), (2 * k).saturating_sub(n));
        let rhs = w.coeff(k) * num_traits::pow(q.clone(), n.saturating_sub(2 * k));
        lhs == rhs
    }))
}

// ---------------------------------------------------------------------------
// Determinant sum.

/// Edge sets in which every vertex has degree 0 or 2: unions of
/// vertex-disjoint cycles, including the empty set.
pub fn disjoint_cycle_unions(g: &Graph) -> Result<Vec<Vec<usize>>> {
    let m = g.num_edges();
    check_cap("edges for cycle-union enumeration", m, ENUMERATION_CAP)?;
    let mut out = Vec::new();
    let mut deg = vec![0usize; g.num_vertices()];
    for mask in 0u64..(1 << m) {
        deg.iter_mut().for_each(|d| *d = 0);
        let edges: Vec<usize> = (0..m).filter(|&k| mask >> k & 1 == 1).collect();
        for &k in &edges {
            let (a, b) = g.edge(k);
            deg[a] += 1;
            deg[b] += 1;
        }
        if deg.iter().all(|&d| d == 0 || d == 2) {
            out.push(edges);
        }
    }
    Ok(out)
}

/// `Σ_{C} 2^{k(C)} det([I - uA + u²(D - I)]|_{G∖C}) u^{|C|}` over unions of
/// vertex-disjoint cycles.
pub fn omega_determinant_sum(g: &Graph, u: &BigRational) -> Result<BigRational> {
    let n = g.num_vertices();
    let a = g.adjacency();
    let d = g.degrees();
    let one = BigRational::one();
    let u2 = u * u;
    let full: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let diag = if i == j { &one + &u2 * rat(d[i] as i64 - 1) } else { BigRational::zero() };
                    diag - u * rat(a[i][j])
                })
                .collect()
        })
        .collect();
    let mut total = BigRational::zero();
    for c in disjoint_cycle_unions(g)? {
        let mut in_c = vec![false; n];
        for &k in &c {
            let (x, y) = g.edge(k);
            in_c[x] = true;
            in_c[y] = true;
        }
        let rest: Vec<usize> = (0..n).filter(|&i| !in_c[i]).collect();
        let minor: Vec<Vec<BigRational>> =
            rest.iter().map(|&i| rest.iter().map(|&j| full[i][j].clone()).collect()).collect();
        let cycles = Graph::new(n, c.iter().map(|&k| g.edge(k)).collect())?
            .components()
            .iter()
            .filter(|h| h.num_edges() > 0)
            .count();
        let det = if minor.is_empty() { BigRational::one() } else { det_rational(minor) };
        total += rat(1i64 << cycles) * det * num_traits::pow(u.clone(), c.len());
    }
    Ok(total)
}

/// `ω_G(u²)` against the determinant sum at rational points.
pub fn omega_determinant_sum_check(g: &Graph, us: &[BigRational]) -> Result<Vec<IdentitySample>> {
    let w = omega(g)?;
    us.iter()
        .map(|u| {
            Ok(IdentitySample { point: u.clone(), lhs: w.eval_rational(&(u * u)), rhs: omega_determinant_sum(g, u)? })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Roots and the value at one.

#[derive(Debug, Clone, PartialEq)]
pub struct RootAnnulus {
    pub roots: Vec<Complex<f64>>,
    /// Radius of a disc around each root estimate that contains a true root.
    pub enclosure: Vec<f64>,
    /// `1/(d_M - 1)`.
    pub inner: f64,
    /// `1/(d_m - 1)`.
    pub outer: f64,
    /// Every enclosure lies in the annulus, up to `slack`.
    pub contained: bool,
    pub slack: f64,
}

fn horner(p: &[f64], z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
    let mut v = Complex::new(0.0, 0.0);
    let mut dv = Complex::new(0.0, 0.0);
    for &c in p.iter().rev() {
        dv = dv * z + v;
        v = v * z + c;
    }
    (v, dv)
}

/// Roots of an integer polynomial: companion-matrix eigenvalues polished by
/// Newton steps, each with the enclosure radius `deg·|p(z)/p'(z)|`.
pub fn polynomial_roots(p: &Poly) -> Result<(Vec<Complex<f64>>, Vec<f64>)> {
    let Some(deg) = p.degree() else {
        return Err(Error::InvalidArgument("zero polynomial".into()));
    };
    if deg == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let c: Vec<f64> = p.coeffs().iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    let lead = c[deg];
    let mut comp = DMatrix::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let mut roots = eigenvalues(&comp);
    let mut radii = Vec::with_capacity(deg);
    for z in roots.iter_mut() {
        for _ in 0..50 {
            let (v, dv) = horner(&c, *z);
            if dv.norm() == 0.0 {
                break;
            }
            let step = v / dv;
            *z -= step;
            if step.norm() <= 1e-17 * z.norm().max(1.0) {
                break;
            }
        }
        let (v, dv) = horner(&c, *z);
        radii.push(if dv.norm() == 0.0 { f64::INFINITY } else { deg as f64 * (v / dv).norm() });
    }
    Ok((roots, radii))
}

/// Roots of `ω_G` against `1/(d_M - 1) ≤ |β| ≤ 1/(d_m - 1)`, with `d_m`,
/// `d_M` the extreme degrees of the core.
pub fn omega_root_annulus(g: &Graph, slack: f64) -> Result<RootAnnulus> {
    let core = g.core().graph;
    let deg = core.degrees();
    let (Some(&dm), Some(&dmax)) = (deg.iter().min(), deg.iter().max()) else {
        return Err(Error::InvalidGraph("a forest places no constraint on the roots".into()));
    };
    if dm < 2 {
        return Err(Error::InvalidGraph("core has a vertex of degree below two".into()));
    }
    let inner = 1.0 / (dmax as f64 - 1.0);
    let outer = 1.0 / (dm as f64 - 1.0);
    let (roots, enclosure) = polynomial_roots(&omega(g)?)?;
    let contained =
        roots.iter().zip(&enclosure).all(|(z, r)| z.norm() - r >= inner - slack && z.norm() + r <= outer + slack);
    Ok(RootAnnulus { roots, enclosure, inner, outer, contained, slack })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaAtOne {
    pub value: BigInt,
    /// Matchings of `G^{(2)}` covering every original vertex.
    pub census: u64,
}

/// `ω_G(1)` against the number of matchings of the subdivision `G^{(2)}`
/// that cover all original vertices.
pub fn omega_at_one_counting(g: &Graph) -> Result<OmegaAtOne> {
    let g2 = g.subdivide(2)?;
    check_cap("edges of G^(2) for the matching census", g2.num_edges(), CENSUS_CAP)?;
    let n = g.num_vertices();
    let mut census = 0u64;
    let mut covered = vec![false; g2.num_vertices()];
    exact_oracle::for_each_matching(&g2, |d| {
        covered.iter_mut().for_each(|c| *c = false);
        for &k in d {
            let (a, b) = g2.edge(k);
            covered[a] = true;
            covered[b] = true;
        }
        if covered[..n].iter().all(|&c| c) {
            census += 1;
        }
    });
    let value = omega(g)?.coeffs().iter().sum();
    Ok(OmegaAtOne { value, census })
}

/// `ω_{G^{(m)}}(β) = (1 + β + … + β^{m-1})^{|E|-|V|} ω_G(βᵐ)`, with the
/// factor moved to the left when `|E| < |V|`.
pub fn omega_subdivision_check(g: &Graph, m: usize) -> Result<bool> {
    let lhs = omega(&g.subdivide(m)?)?;
    let geo = Poly::new(vec![BigInt::one(); m]);
    let base = omega(g)?.compose_power(m);
    let k = g.num_edges() as isize - g.num_vertices() as isize;
    Ok(if k >= 0 { lhs == &geo.pow(k as usize) * &base } else { &lhs * &geo.pow((-k) as usize) == base })
}

/// Evaluate `θ_G` at `(β, γ)`.
pub fn theta_at(t: &Poly2, beta: &BigRational, gamma: &BigRational) -> BigRational {
    t.eval_rational(beta, gamma)
}

/// Whether `x` is a nonnegative integer polynomial.
pub fn has_nonnegative_coefficients(p: &Poly) -> bool {
    p.coeffs().iter().all(|c| !c.is_negative())
}
