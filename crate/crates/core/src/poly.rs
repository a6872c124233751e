//! Multivariate polynomials with `f64` coefficients over a fixed number of
//! variables, plus vector-valued polynomial maps.
//!
//! Monomials are dense exponent vectors ordered graded-lexicographically:
//! total degree first, then the exponent of the first variable, and so on.
//! Terms whose coefficient falls below [`PRUNE_TOL`] in magnitude are never
//! stored, so two polynomials compare equal exactly when their surviving
//! terms agree.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Coefficients with absolute value below this are dropped.
pub const PRUNE_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Self { exps }
    }

    pub fn one(nvars: usize) -> Self {
        Self {
            exps: vec![0; nvars],
        }
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        let mut exps = vec![0; nvars];
        exps[index] = 1;
        Self { exps }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn nvars(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.nvars(), other.nvars());
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// All monomials of exactly `degree` in `nvars` variables, ascending.
    pub fn all_of_degree(nvars: usize, degree: u32) -> Vec<Monomial> {
        fn rec(prefix: &mut Vec<u32>, left: usize, rem: u32, out: &mut Vec<Monomial>) {
            if left == 1 {
                prefix.push(rem);
                out.push(Monomial::new(prefix.clone()));
                prefix.pop();
                return;
            }
            for e in 0..=rem {
                prefix.push(e);
                rec(prefix, left - 1, rem - e, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if nvars == 0 {
            if degree == 0 {
                out.push(Monomial::new(Vec::new()));
            }
            return out;
        }
        rec(&mut Vec::with_capacity(nvars), nvars, degree, &mut out);
        out.sort();
        out
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.exps.cmp(&other.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Parity of the total degrees appearing in a polynomial (or map).
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Neither,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(nvars), c);
        p
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        assert!(
            index < nvars,
            "variable index {index} out of range for {nvars} variables"
        );
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::var(nvars, index), 1.0);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// monomials accumulate.
    pub fn from_terms<I, E>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (E, f64)>,
        E: Into<Vec<u32>>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            let e = e.into();
            assert_eq!(e.len(), nvars, "exponent vector length must equal nvars");
            p.accumulate(Monomial::new(e), c);
        }
        p.prune();
        p
    }

    /// `sum_j row[j] * x_j`.
    pub fn linear(coeffs: &[f64]) -> Self {
        let n = coeffs.len();
        Self::from_terms(
            n,
            coeffs.iter().enumerate().map(|(j, &c)| {
                let mut e = vec![0; n];
                e[j] = 1;
                (e, c)
            }),
        )
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, exps: &[u32]) -> f64 {
        self.terms
            .get(&Monomial::new(exps.to_vec()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().next().map(Monomial::degree)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn accumulate(&mut self, m: Monomial, c: f64) {
        *self.terms.entry(m).or_insert(0.0) += c;
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        let slot = self.terms.entry(m.clone()).or_insert(0.0);
        *slot += c;
        if slot.abs() < PRUNE_TOL {
            self.terms.remove(&m);
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() >= PRUNE_TOL);
    }

    fn check_dims(&self, other: &Polynomial) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::DimensionMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.accumulate(m.clone(), c);
        }
        out.prune();
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.accumulate(m.clone(), -c);
        }
        out.prune();
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dims(other)?;
        Ok(self.mul_truncated(other, None))
    }

    /// Product keeping only terms of total degree `<= max_degree`.
    pub fn mul_truncated(&self, other: &Polynomial, max_degree: Option<u32>) -> Polynomial {
        assert_eq!(self.nvars, other.nvars, "poly: dimension mismatch");
        let mut out = Polynomial::zero(self.nvars);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                if let Some(d) = max_degree {
                    if ma.degree() + mb.degree() > d {
                        continue;
                    }
                }
                out.accumulate(ma.mul(mb), ca * cb);
            }
        }
        out.prune();
        out
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (m, &c) in &self.terms {
            out.accumulate(m.clone(), c * s);
        }
        out.prune();
        out
    }

    pub fn pow(&self, k: u32, max_degree: Option<u32>) -> Polynomial {
        let mut acc = Polynomial::constant(self.nvars, 1.0);
        for _ in 0..k {
            acc = acc.mul_truncated(self, max_degree);
        }
        acc
    }

    /// Drops every term of total degree above `max_degree`.
    pub fn truncate(&self, max_degree: u32) -> Polynomial {
        self.filter_degree(|d| d <= max_degree)
    }

    /// The homogeneous component of total degree `degree`.
    pub fn homogeneous(&self, degree: u32) -> Polynomial {
        self.filter_degree(|d| d == degree)
    }

    pub fn filter_degree(&self, keep: impl Fn(u32) -> bool) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m.degree()))
                .map(|(m, &c)| (m.clone(), c))
                .collect(),
        }
    }

    pub fn partial(&self, var: usize) -> Polynomial {
        assert!(
            var < self.nvars,
            "poly: partial w.r.t. variable {var} of {}",
            self.nvars
        );
        let mut out = Polynomial::zero(self.nvars);
        for (m, &c) in &self.terms {
            let e = m.exps[var];
            if e == 0 {
                continue;
            }
            let mut exps = m.exps.clone();
            exps[var] -= 1;
            out.accumulate(Monomial::new(exps), c * e as f64);
        }
        out.prune();
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(m, &c)| {
                m.exps
                    .iter()
                    .zip(x)
                    .fold(c, |acc, (&e, &xi)| acc * xi.powi(e as i32))
            })
            .sum()
    }

    /// Replaces variable `i` by `subs[i]` for every `i`. All substitutes must
    /// share a common variable count, which becomes the result's. Terms above
    /// `max_degree` are discarded as they are formed.
    pub fn compose(&self, subs: &[Polynomial], max_degree: Option<u32>) -> Result<Polynomial> {
        if subs.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                left: self.nvars,
                right: subs.len(),
            });
        }
        let target = match subs.first() {
            Some(p) => p.nvars,
            None => 0,
        };
        if let Some(bad) = subs.iter().find(|p| p.nvars != target) {
            return Err(Error::DimensionMismatch {
                left: target,
                right: bad.nvars,
            });
        }
        // powers[i][k] = subs[i]^k, built lazily up to the largest exponent used
        let mut max_exp = vec![0u32; self.nvars];
        for m in self.terms.keys() {
            for (slot, &e) in max_exp.iter_mut().zip(&m.exps) {
                *slot = (*slot).max(e);
            }
        }
        let powers: Vec<Vec<Polynomial>> = subs
            .iter()
            .zip(&max_exp)
            .map(|(s, &k)| {
                let mut v = vec![Polynomial::constant(target, 1.0)];
                for j in 1..=k as usize {
                    let next = v[j - 1].mul_truncated(s, max_degree);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Polynomial::zero(target);
        for (m, &c) in &self.terms {
            let mut term = Polynomial::constant(target, c);
            for (i, &e) in m.exps.iter().enumerate() {
                if e > 0 {
                    term = term.mul_truncated(&powers[i][e as usize], max_degree);
                }
            }
            for (tm, tc) in term.terms {
                out.accumulate(tm, tc);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Substitutes the listed variables; variables without an entry are kept
    /// as themselves, which requires the substitutes to live in this
    /// polynomial's own variable space.
    pub fn substitute(&self, subs: &BTreeMap<usize, Polynomial>) -> Result<Polynomial> {
        let target = match subs.values().next() {
            Some(p) => p.nvars,
            None => return Ok(self.clone()),
        };
        if let Some(p) = subs.values().find(|p| p.nvars != target) {
            return Err(Error::DimensionMismatch {
                left: target,
                right: p.nvars,
            });
        }
        if let Some(&i) = subs.keys().find(|&&i| i >= self.nvars) {
            return Err(Error::DimensionMismatch {
                left: self.nvars,
                right: i + 1,
            });
        }
        let full = subs.len() == self.nvars;
        if !full && target != self.nvars {
            return Err(Error::DimensionMismatch {
                left: self.nvars,
                right: target,
            });
        }
        let all: Vec<Polynomial> = (0..self.nvars)
            .map(|i| {
                subs.get(&i)
                    .cloned()
                    .unwrap_or_else(|| Polynomial::var(target, i))
            })
            .collect();
        self.compose(&all, None)
    }

    /// Evaluates `p(M u)`: variable `i` becomes `sum_j M[i,j] u_j`.
    pub fn compose_linear(&self, m: &DMatrix<f64>) -> Result<Polynomial> {
        if m.nrows() != self.nvars {
            return Err(Error::DimensionMismatch {
                left: self.nvars,
                right: m.nrows(),
            });
        }
        let subs = linear_substitutes(m);
        self.compose(&subs, None)
    }

    /// Even/odd classification by total degree of every stored monomial. The
    /// zero polynomial counts as even.
    pub fn parity(&self) -> Parity {
        let mut even = false;
        let mut odd = false;
        for m in self.terms.keys() {
            if m.degree() % 2 == 0 {
                even = true;
            } else {
                odd = true;
            }
        }
        match (even, odd) {
            (_, false) => Parity::Even,
            (false, true) => Parity::Odd,
            (true, true) => Parity::Neither,
        }
    }

    /// Maximum coefficient magnitude among terms whose degree satisfies `pred`.
    pub fn max_abs_where(&self, pred: impl Fn(u32) -> bool) -> f64 {
        self.terms
            .iter()
            .filter(|(m, _)| pred(m.degree()))
            .fold(0.0, |acc, (_, c)| acc.max(c.abs()))
    }

    /// Largest coefficient difference against `other` over the union of terms.
    pub fn max_abs_diff(&self, other: &Polynomial) -> f64 {
        assert_eq!(self.nvars, other.nvars);
        let mut worst: f64 = 0.0;
        for (m, &c) in &self.terms {
            worst = worst.max((c - other.terms.get(m).copied().unwrap_or(0.0)).abs());
        }
        for (m, &c) in &other.terms {
            if !self.terms.contains_key(m) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }

    /// Canonical text: terms in descending graded-lex order, `*` between
    /// factors, `^` for powers, shortest round-trip decimal coefficients.
    pub fn display<'a, S: AsRef<str>>(&'a self, names: &'a [S]) -> PolyDisplay<'a, S> {
        PolyDisplay { poly: self, names }
    }
}

fn linear_substitutes(m: &DMatrix<f64>) -> Vec<Polynomial> {
    (0..m.nrows())
        .map(|i| {
            let row: Vec<f64> = m.row(i).iter().copied().collect();
            Polynomial::linear(&row)
        })
        .collect()
}

pub struct PolyDisplay<'a, S> {
    poly: &'a Polynomial,
    names: &'a [S],
}

impl<S: AsRef<str>> fmt::Display for PolyDisplay<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.poly.terms().rev().enumerate() {
            let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
            match (k, sign) {
                (0, "-") => f.write_str("-")?,
                (0, _) => {}
                (_, s) => write!(f, " {s} ")?,
            }
            let mut factors: Vec<String> = Vec::new();
            for (i, &e) in m.exponents().iter().enumerate() {
                let name = self
                    .names
                    .get(i)
                    .map(|s| s.as_ref().to_string())
                    .unwrap_or_else(|| format!("x{i}"));
                match e {
                    0 => {}
                    1 => factors.push(name),
                    _ => factors.push(format!("{name}^{e}")),
                }
            }
            if factors.is_empty() {
                write!(f, "{mag}")?;
            } else {
                if mag != 1.0 {
                    write!(f, "{mag}*")?;
                }
                f.write_str(&factors.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs)
            .expect("poly: dimension mismatch in +")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs)
            .expect("poly: dimension mismatch in -")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs)
            .expect("poly: dimension mismatch in *")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

/// An ordered list of polynomials sharing one variable space; the component
/// count need not match the variable count.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMap {
    nvars: usize,
    components: Vec<Polynomial>,
}

impl PolyMap {
    pub fn new(nvars: usize, components: Vec<Polynomial>) -> Result<Self> {
        if let Some(p) = components.iter().find(|p| p.nvars != nvars) {
            return Err(Error::DimensionMismatch {
                left: nvars,
                right: p.nvars,
            });
        }
        Ok(Self { nvars, components })
    }

    pub fn zero(ncomponents: usize, nvars: usize) -> Self {
        Self {
            nvars,
            components: vec![Polynomial::zero(nvars); ncomponents],
        }
    }

    /// The linear map `x -> M x` as a polynomial map.
    pub fn linear(m: &DMatrix<f64>) -> Self {
        Self {
            nvars: m.ncols(),
            components: linear_substitutes(m),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<Polynomial> {
        self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval(x)).collect()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.components) {
            *o = p.eval(x);
        }
    }

    pub fn map(&self, f: impl Fn(&Polynomial) -> Polynomial) -> PolyMap {
        let components: Vec<Polynomial> = self.components.iter().map(f).collect();
        let nvars = components.first().map_or(self.nvars, Polynomial::nvars);
        PolyMap { nvars, components }
    }

    pub fn try_map(&self, f: impl Fn(&Polynomial) -> Result<Polynomial>) -> Result<PolyMap> {
        let components = self.components.iter().map(f).collect::<Result<Vec<_>>>()?;
        let nvars = components.first().map_or(self.nvars, Polynomial::nvars);
        PolyMap::new(nvars, components)
    }

    pub fn truncate(&self, max_degree: u32) -> PolyMap {
        self.map(|p| p.truncate(max_degree))
    }

    pub fn homogeneous(&self, degree: u32) -> PolyMap {
        self.map(|p| p.homogeneous(degree))
    }

    pub fn filter_degree(&self, keep: impl Fn(u32) -> bool + Copy) -> PolyMap {
        self.map(|p| p.filter_degree(keep))
    }

    pub fn compose(&self, subs: &[Polynomial], max_degree: Option<u32>) -> Result<PolyMap> {
        let target = subs.first().map_or(0, Polynomial::nvars);
        let components = self
            .components
            .iter()
            .map(|p| p.compose(subs, max_degree))
            .collect::<Result<Vec<_>>>()?;
        PolyMap::new(target, components)
    }

    pub fn compose_linear(&self, m: &DMatrix<f64>) -> Result<PolyMap> {
        if m.nrows() != self.nvars {
            return Err(Error::DimensionMismatch {
                left: self.nvars,
                right: m.nrows(),
            });
        }
        self.compose(&linear_substitutes(m), None)
    }

    /// `M * self`, mixing components.
    pub fn left_mul(&self, m: &DMatrix<f64>) -> Result<PolyMap> {
        if m.ncols() != self.components.len() {
            return Err(Error::DimensionMismatch {
                left: self.components.len(),
                right: m.ncols(),
            });
        }
        let components = (0..m.nrows())
            .map(|i| {
                let mut acc = Polynomial::zero(self.nvars);
                for (j, p) in self.components.iter().enumerate() {
                    let c = m[(i, j)];
                    if c != 0.0 {
                        acc = &acc + &p.scale(c);
                    }
                }
                acc
            })
            .collect();
        Ok(PolyMap {
            nvars: self.nvars,
            components,
        })
    }

    pub fn checked_add(&self, other: &PolyMap) -> Result<PolyMap> {
        if self.components.len() != other.components.len() {
            return Err(Error::DimensionMismatch {
                left: self.components.len(),
                right: other.components.len(),
            });
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.checked_add(b))
            .collect::<Result<Vec<_>>>()?;
        PolyMap::new(self.nvars, components)
    }

    /// Degree-1 coefficients: entry `(i, j)` is the coefficient of `x_j` in
    /// component `i`.
    pub fn linear_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.components.len(), self.nvars, |i, j| {
            self.components[i].coeff(Monomial::var(self.nvars, j).exponents())
        })
    }

    pub fn constants(&self) -> Vec<f64> {
        let one = vec![0; self.nvars];
        self.components.iter().map(|p| p.coeff(&one)).collect()
    }

    pub fn parity(&self) -> Parity {
        let mut even = false;
        let mut odd = false;
        for p in &self.components {
            match p.parity() {
                Parity::Even if !p.is_zero() => even = true,
                Parity::Even => {}
                Parity::Odd => odd = true,
                Parity::Neither => return Parity::Neither,
            }
        }
        match (even, odd) {
            (_, false) => Parity::Even,
            (false, true) => Parity::Odd,
            (true, true) => Parity::Neither,
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.components
            .iter()
            .fold(0.0, |m, p| m.max(p.max_abs_coeff()))
    }

    pub fn max_abs_where(&self, pred: impl Fn(u32) -> bool + Copy) -> f64 {
        self.components
            .iter()
            .fold(0.0, |m, p| m.max(p.max_abs_where(pred)))
    }

    pub fn max_abs_diff(&self, other: &PolyMap) -> f64 {
        assert_eq!(self.components.len(), other.components.len());
        self.components
            .iter()
            .zip(&other.components)
            .fold(0.0, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }

    pub fn degree(&self) -> Option<u32> {
        self.components.iter().filter_map(Polynomial::degree).max()
    }
}
