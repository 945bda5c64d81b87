//! Exact integer polynomials in one variable (`Poly`) and two variables
//! (`Poly2`), with a canonical text form: ascending degree, integer
//! coefficients, unit coefficients elided.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Univariate polynomial with integer coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    coeffs: Vec<BigInt>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(BigInt::one())
    }

    pub fn constant(c: BigInt) -> Self {
        Self::new(vec![c])
    }

    /// `c·xᵏ`.
    pub fn monomial(c: BigInt, k: usize) -> Self {
        let mut v = vec![BigInt::zero(); k + 1];
        v[k] = c;
        Self::new(v)
    }

    pub fn x() -> Self {
        Self::monomial(BigInt::one(), 1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> BigInt {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Poly::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval_rational(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + BigRational::from_integer(c.clone());
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    /// `p(xᵐ)`.
    pub fn compose_power(&self, m: usize) -> Self {
        let mut v = vec![BigInt::zero(); self.coeffs.len().saturating_sub(1) * m + 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            v[k * m] = c.clone();
        }
        Self::new(v)
    }

    /// Exact division by `(1 - x)`; `None` if there is a remainder.
    pub fn div_one_minus_x(&self) -> Option<Self> {
        // p(x) = (1 - x) q(x)  ⇒  q_k = Σ_{j≤k} p_j.
        if self.is_zero() {
            return Some(Self::zero());
        }
        let mut q = Vec::with_capacity(self.coeffs.len());
        let mut acc = BigInt::zero();
        for c in &self.coeffs {
            acc += c;
            q.push(acc.clone());
        }
        if !q.pop().expect("non-empty").is_zero() {
            return None;
        }
        Some(Self::new(q))
    }

    /// Exact division by `(1 - x)ᵏ`.
    pub fn div_one_minus_x_pow(&self, k: usize) -> Option<Self> {
        let mut p = self.clone();
        for _ in 0..k {
            p = p.div_one_minus_x()?;
        }
        Some(p)
    }

    /// Canonical text form in the variable `var`.
    pub fn to_text(&self, var: &str) -> String {
        let terms: Vec<(BigInt, Vec<(&str, usize)>)> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (c.clone(), vec![(var, k)]))
            .collect();
        render_terms(&terms)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text("β"))
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut v = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Poly::new(v)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

macro_rules! forward_owned {
    ($t:ty, $tr:ident, $m:ident) => {
        impl $tr for $t {
            type Output = $t;
            fn $m(self, rhs: $t) -> $t {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Poly, Add, add);
forward_owned!(Poly, Sub, sub);
forward_owned!(Poly, Mul, mul);

/// Bivariate polynomial in `(β, γ)` stored sparsely by exponent pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly2 {
    terms: BTreeMap<(usize, usize), BigInt>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(BigInt::one(), 0, 0)
    }

    pub fn monomial(c: BigInt, b: usize, g: usize) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((b, g), c);
        }
        Self { terms }
    }

    /// Lift a polynomial in `γ` alone.
    pub fn from_gamma(p: &Poly) -> Self {
        let mut out = Self::zero();
        for (k, c) in p.coeffs().iter().enumerate() {
            out.add_term(c.clone(), 0, k);
        }
        out
    }

    pub fn terms(&self) -> &BTreeMap<(usize, usize), BigInt> {
        &self.terms
    }

    pub fn coeff(&self, b: usize, g: usize) -> BigInt {
        self.terms.get(&(b, g)).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, c: BigInt, b: usize, g: usize) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry((b, g)).or_insert_with(BigInt::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&(b, g));
        }
    }

    /// Multiply by `βᵏ`.
    pub fn shift_beta(&self, k: usize) -> Self {
        Self { terms: self.terms.iter().map(|(&(b, g), c)| ((b + k, g), c.clone())).collect() }
    }

    pub fn eval_rational(&self, beta: &BigRational, gamma: &BigRational) -> BigRational {
        self.terms.iter().fold(BigRational::zero(), |acc, (&(b, g), c)| {
            acc + BigRational::from_integer(c.clone())
                * num_traits::pow(beta.clone(), b)
                * num_traits::pow(gamma.clone(), g)
        })
    }

    pub fn eval_f64(&self, beta: f64, gamma: f64) -> f64 {
        self.terms.iter().fold(0.0, |acc, (&(b, g), c)| {
            acc + c.to_f64().unwrap_or(f64::NAN) * beta.powi(b as i32) * gamma.powi(g as i32)
        })
    }

    /// Restrict to `γ` fixed at an integer value, giving a polynomial in `β`.
    pub fn at_gamma(&self, gamma: i64) -> Poly {
        let mut v: Vec<BigInt> = Vec::new();
        for (&(b, g), c) in &self.terms {
            if v.len() <= b {
                v.resize(b + 1, BigInt::zero());
            }
            v[b] += c * num_traits::pow(BigInt::from(gamma), g);
        }
        Poly::new(v)
    }

    /// Substitute `γ² = s`, requiring that only even powers of `γ` occur.
    pub fn at_gamma_squared(&self, s: i64) -> Option<Poly> {
        let mut v: Vec<BigInt> = Vec::new();
        for (&(b, g), c) in &self.terms {
            if g % 2 == 1 {
                return None;
            }
            if v.len() <= b {
                v.resize(b + 1, BigInt::zero());
            }
            v[b] += c * num_traits::pow(BigInt::from(s), g / 2);
        }
        Some(Poly::new(v))
    }

    /// Restrict to `β` fixed at an integer value, giving a polynomial in `γ`.
    pub fn at_beta(&self, beta: i64) -> Poly {
        let mut v: Vec<BigInt> = Vec::new();
        for (&(b, g), c) in &self.terms {
            if v.len() <= g {
                v.resize(g + 1, BigInt::zero());
            }
            v[g] += c * num_traits::pow(BigInt::from(beta), b);
        }
        Poly::new(v)
    }

    pub fn to_text(&self) -> String {
        let terms: Vec<(BigInt, Vec<(&str, usize)>)> =
            self.terms.iter().map(|(&(b, g), c)| (c.clone(), vec![("β", b), ("γ", g)])).collect();
        render_terms(&terms)
    }
}

impl fmt::Display for Poly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl Add for &Poly2 {
    type Output = Poly2;
    fn add(self, rhs: &Poly2) -> Poly2 {
        let mut out = self.clone();
        for (&(b, g), c) in &rhs.terms {
            out.add_term(c.clone(), b, g);
        }
        out
    }
}

impl Sub for &Poly2 {
    type Output = Poly2;
    fn sub(self, rhs: &Poly2) -> Poly2 {
        let mut out = self.clone();
        for (&(b, g), c) in &rhs.terms {
            out.add_term(-c, b, g);
        }
        out
    }
}

impl Mul for &Poly2 {
    type Output = Poly2;
    fn mul(self, rhs: &Poly2) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(b1, g1), c1) in &self.terms {
            for (&(b2, g2), c2) in &rhs.terms {
                out.add_term(c1 * c2, b1 + b2, g1 + g2);
            }
        }
        out
    }
}

forward_owned!(Poly2, Add, add);
forward_owned!(Poly2, Sub, sub);
forward_owned!(Poly2, Mul, mul);

fn superscript(k: usize) -> String {
    const DIGITS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    k.to_string().chars().map(|d| DIGITS[d.to_digit(10).expect("digit") as usize]).collect()
}

fn render_terms(terms: &[(BigInt, Vec<(&str, usize)>)]) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (idx, (c, vars)) in terms.iter().enumerate() {
        let mono: String = vars
            .iter()
            .filter(|(_, k)| *k > 0)
            .map(|(v, k)| if *k == 1 { v.to_string() } else { format!("{v}{}", superscript(*k)) })
            .collect();
        let mag = c.abs();
        if c.is_negative() {
            out.push('-');
        } else if idx > 0 {
            out.push('+');
        }
        if mono.is_empty() || !mag.is_one() {
            out.push_str(&mag.to_string());
        }
        out.push_str(&mono);
    }
    out
}

/// Exact rational value `p/q`.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}
