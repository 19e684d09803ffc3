//! Sparse multivariate polynomials with real coefficients.
//!
//! A [`Polynomial`] maps [`Monomial`]s to nonzero `f64` coefficients. Monomials
//! are ordered graded-lexicographically: by total degree first, then by
//! exponent vector, where a larger exponent on an earlier variable sorts
//! first. With variables `x1, x2` the basis of degree two reads
//! `1, x1, x2, x1^2, x1x2, x2^2`.
//!
//! Variables are plain [`Var`] handles. Names and measure membership live in
//! the model context, so formatting takes a naming closure.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Handle to a declared variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    pub const fn new(id: u32) -> Self {
        Var(id)
    }

    pub const fn id(self) -> u32 {
        self.0
    }

    pub fn poly(self) -> Polynomial {
        Polynomial::var(self)
    }

    pub fn pow(self, k: u32) -> Polynomial {
        Polynomial::monomial(Monomial::var_pow(self, k), 1.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Power product of variables. Exponents are stored sorted by variable and
/// never zero, so the empty product is the constant monomial `1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn var_pow(v: Var, k: u32) -> Self {
        if k == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(v, k)])
        }
    }

    /// Builds a monomial from (variable, exponent) pairs in any order;
    /// repeated variables accumulate.
    pub fn from_pairs<I: IntoIterator<Item = (Var, u32)>>(pairs: I) -> Self {
        let mut map: BTreeMap<Var, u32> = BTreeMap::new();
        for (v, e) in pairs {
            *map.entry(v).or_insert(0) += e;
        }
        Monomial(map.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    /// Builds a monomial from a dense exponent vector over `vars`.
    pub fn from_exponents(vars: &[Var], exps: &[u32]) -> Self {
        Monomial::from_pairs(vars.iter().copied().zip(exps.iter().copied()))
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0
            .binary_search_by_key(&v, |&(w, _)| w)
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn factors(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, ea) = self.0[i];
            let (b, eb) = other.0[j];
            match a.cmp(&b) {
                Ordering::Less => {
                    out.push((a, ea));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((b, eb));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a, ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// True when `self` divides `other`.
    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().all(|&(v, e)| other.exponent(v) >= e)
    }

    /// Exact quotient `other / self`, if `self` divides `other`.
    pub fn quotient_of(&self, other: &Monomial) -> Option<Monomial> {
        if !self.divides(other) {
            return None;
        }
        let out = other
            .0
            .iter()
            .filter_map(|&(v, e)| {
                let r = e - self.exponent(v);
                (r > 0).then_some((v, r))
            })
            .collect();
        Some(Monomial(out))
    }

    pub fn eval<F: Fn(Var) -> Option<f64>>(&self, value: &F) -> Option<f64> {
        let mut acc = 1.0;
        for &(v, e) in &self.0 {
            acc *= value(v)?.powi(e as i32);
        }
        Some(acc)
    }

    /// Writes the monomial as `x1^2x2`; the constant monomial writes `1`.
    pub fn fmt_with<N: Fn(Var) -> String>(&self, names: &N) -> String {
        if self.0.is_empty() {
            return "1".to_string();
        }
        let mut s = String::new();
        for &(v, e) in &self.0 {
            s.push_str(&names(v));
            if e > 1 {
                let _ = write!(s, "^{e}");
            }
        }
        s
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (mut i, mut j) = (0, 0);
        loop {
            let a = self.0.get(i);
            let b = other.0.get(j);
            match (a, b) {
                (None, None) => return Ordering::Equal,
                // equal degree: the shorter side cannot run out first without a difference
                (Some(_), None) => return Ordering::Less,
                (None, Some(_)) => return Ordering::Greater,
                (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                    Ordering::Less => return Ordering::Less,
                    Ordering::Greater => return Ordering::Greater,
                    Ordering::Equal => {
                        if ea != eb {
                            return eb.cmp(&ea);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials in `vars` of total degree at most `d`, in graded
/// lexicographic order. The result has `C(n + d, n)` entries.
pub fn monomial_basis(vars: &[Var], d: u32) -> Vec<Monomial> {
    let mut sorted: Vec<Var> = vars.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut out = Vec::new();
    let mut exps = vec![0u32; sorted.len()];
    for k in 0..=d {
        push_degree(&sorted, &mut exps, 0, k, &mut out);
    }
    out
}

// Exponent vectors of total degree `rest` over vars[pos..], largest first.
fn push_degree(vars: &[Var], exps: &mut [u32], pos: usize, rest: u32, out: &mut Vec<Monomial>) {
    if pos == vars.len() {
        if rest == 0 {
            out.push(Monomial::from_exponents(vars, exps));
        }
        return;
    }
    if pos + 1 == vars.len() {
        exps[pos] = rest;
        out.push(Monomial::from_exponents(vars, exps));
        exps[pos] = 0;
        return;
    }
    for e in (0..=rest).rev() {
        exps[pos] = e;
        push_degree(vars, exps, pos + 1, rest - e, out);
    }
    exps[pos] = 0;
}

/// Sparse real polynomial in canonical form: no zero coefficients, each
/// monomial at most once.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn one() -> Self {
        Polynomial::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::monomial(Monomial::one(), c)
    }

    pub fn var(v: Var) -> Self {
        Polynomial::monomial(Monomial::var(v), 1.0)
    }

    pub fn monomial(m: Monomial, c: f64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(m, c);
        }
        Polynomial { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, f64)>>(terms: I) -> Self {
        let mut p = Polynomial::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Adds `c * m`, dropping the term if it cancels to exactly zero.
    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = *e.get() + c;
                if s == 0.0 {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(&Monomial::one())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    /// The monomial `m` if this polynomial is exactly `1 * m`.
    pub fn as_monic_monomial(&self) -> Option<&Monomial> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, &c) = self.terms.iter().next()?;
        (c == 1.0).then_some(m)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        if s == 0.0 {
            return Polynomial::zero();
        }
        Polynomial::from_terms(self.terms.iter().map(|(m, &c)| (m.clone(), c * s)))
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(t, &c)| (t.mul(m), c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Partial derivative with respect to `v`.
    pub fn diff(&self, v: Var) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, &c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let rest = Monomial::from_pairs(
                m.factors()
                    .iter()
                    .map(|&(w, f)| if w == v { (w, f - 1) } else { (w, f) }),
            );
            out.add_term(rest, c * e as f64);
        }
        out
    }

    /// Evaluates with a partial assignment; fails on the first missing variable.
    pub fn eval_with<F: Fn(Var) -> Option<f64>>(&self, value: F) -> Result<f64> {
        let mut acc = 0.0;
        for (m, &c) in &self.terms {
            match m.eval(&value) {
                Some(x) => acc += c * x,
                None => {
                    let missing = m.vars().find(|&v| value(v).is_none()).unwrap_or(Var(0));
                    return Err(Error::UnassignedVariable(missing.to_string()));
                }
            }
        }
        Ok(acc)
    }

    pub fn eval(&self, point: &BTreeMap<Var, f64>) -> Result<f64> {
        self.eval_with(|v| point.get(&v).copied())
    }

    pub fn fmt_with<N: Fn(Var) -> String>(&self, names: &N) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (k, (m, &c)) in self.terms.iter().enumerate() {
            let neg = c < 0.0;
            let a = c.abs();
            if neg {
                s.push('-');
            } else if k > 0 {
                s.push('+');
            }
            if m.is_one() {
                s.push_str(&format_coeff(a));
            } else {
                if a != 1.0 {
                    s.push_str(&format_coeff(a));
                }
                s.push_str(&m.fmt_with(names));
            }
        }
        s
    }
}

/// Five significant digits, trailing zeros trimmed.
pub fn format_coeff(c: f64) -> String {
    if c == 0.0 {
        return "0".to_string();
    }
    let exp = c.abs().log10().floor() as i32;
    if !(-5..10).contains(&exp) {
        return format!("{c:.4e}");
    }
    let decimals = (4 - exp).max(0) as usize;
    let s = format!("{c:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_with(&|v: Var| v.to_string()))
    }
}

impl From<Var> for Polynomial {
    fn from(v: Var) -> Self {
        Polynomial::var(v)
    }
}

impl From<f64> for Polynomial {
    fn from(c: f64) -> Self {
        Polynomial::constant(c)
    }
}

impl From<Monomial> for Polynomial {
    fn from(m: Monomial) -> Self {
        Polynomial::monomial(m, 1.0)
    }
}

impl AddAssign<&Polynomial> for Polynomial {
    fn add_assign(&mut self, rhs: &Polynomial) {
        for (m, &c) in &rhs.terms {
            self.add_term(m.clone(), c);
        }
    }
}

impl SubAssign<&Polynomial> for Polynomial {
    fn sub_assign(&mut self, rhs: &Polynomial) {
        for (m, &c) in &rhs.terms {
            self.add_term(m.clone(), -c);
        }
    }
}

impl Add<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &rhs.terms {
                out.add_term(a.mul(b), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $f:ident) => {
        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: &Polynomial) -> Polynomial {
                (&self).$f(rhs)
            }
        }
        impl $tr<Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                self.$f(&rhs)
            }
        }
        impl $tr<f64> for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: f64) -> Polynomial {
                (&self).$f(&Polynomial::constant(rhs))
            }
        }
        impl $tr<f64> for &Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: f64) -> Polynomial {
                self.$f(&Polynomial::constant(rhs))
            }
        }
        impl $tr<Polynomial> for f64 {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                (&Polynomial::constant(self)).$f(&rhs)
            }
        }
        impl $tr<&Polynomial> for f64 {
            type Output = Polynomial;
            fn $f(self, rhs: &Polynomial) -> Polynomial {
                (&Polynomial::constant(self)).$f(rhs)
            }
        }
        impl $tr<Var> for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Var) -> Polynomial {
                (&self).$f(&Polynomial::var(rhs))
            }
        }
        impl $tr<Var> for f64 {
            type Output = Polynomial;
            fn $f(self, rhs: Var) -> Polynomial {
                (&Polynomial::constant(self)).$f(&Polynomial::var(rhs))
            }
        }
        impl $tr<Polynomial> for Var {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                (&Polynomial::var(self)).$f(&rhs)
            }
        }
        impl $tr<Var> for Var {
            type Output = Polynomial;
            fn $f(self, rhs: Var) -> Polynomial {
                (&Polynomial::var(self)).$f(&Polynomial::var(rhs))
            }
        }
        impl $tr<f64> for Var {
            type Output = Polynomial;
            fn $f(self, rhs: f64) -> Polynomial {
                (&Polynomial::var(self)).$f(&Polynomial::constant(rhs))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Div<f64> for Polynomial {
    type Output = Polynomial;
    fn div(self, rhs: f64) -> Polynomial {
        self.scale(1.0 / rhs)
    }
}

impl Div<f64> for &Polynomial {
    type Output = Polynomial;
    fn div(self, rhs: f64) -> Polynomial {
        self.scale(1.0 / rhs)
    }
}

impl Neg for Var {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::monomial(Monomial::var(self), -1.0)
    }
}

/// Dense rectangular matrix of polynomials, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Polynomial>,
}

impl PolyMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Polynomial>) -> Self {
        assert_eq!(data.len(), rows * cols, "PolyMatrix data length");
        PolyMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        PolyMatrix::new(rows, cols, vec![Polynomial::zero(); rows * cols])
    }

    pub fn column(entries: Vec<Polynomial>) -> Self {
        let n = entries.len();
        PolyMatrix::new(n, 1, entries)
    }

    pub fn row(entries: Vec<Polynomial>) -> Self {
        let n = entries.len();
        PolyMatrix::new(1, n, entries)
    }

    pub fn from_vars(vars: &[Var]) -> Self {
        PolyMatrix::column(vars.iter().map(|&v| Polynomial::var(v)).collect())
    }

    /// Column of monomials in `vars` of degree at most `d`, graded lex order.
    pub fn monomials(vars: &[Var], d: u32) -> Self {
        PolyMatrix::column(monomial_basis(vars, d).into_iter().map(Polynomial::from).collect())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Polynomial {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: Polynomial) {
        self.data[i * self.cols + j] = p;
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> &[Polynomial] {
        &self.data
    }

    pub fn into_entries(self) -> Vec<Polynomial> {
        self.data
    }

    pub fn transpose(&self) -> PolyMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        PolyMatrix::new(self.cols, self.rows, data)
    }

    pub fn map<F: FnMut(&Polynomial) -> Polynomial>(&self, f: F) -> PolyMatrix {
        PolyMatrix::new(self.rows, self.cols, self.data.iter().map(f).collect())
    }

    pub fn scale(&self, s: f64) -> PolyMatrix {
        self.map(|p| p.scale(s))
    }

    /// Entrywise power (`.^` in array languages).
    pub fn pow_elementwise(&self, k: u32) -> PolyMatrix {
        self.map(|p| p.pow(k))
    }

    pub fn matmul(&self, rhs: &PolyMatrix) -> Result<PolyMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = PolyMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = Polynomial::zero();
                for k in 0..self.cols {
                    acc += &(self.get(i, k) * rhs.get(k, j));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn zip_with<F: Fn(&Polynomial, &Polynomial) -> Polynomial>(
        &self,
        rhs: &PolyMatrix,
        f: F,
    ) -> Result<PolyMatrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(PolyMatrix::new(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| f(a, b)).collect(),
        ))
    }

    pub fn add(&self, rhs: &PolyMatrix) -> Result<PolyMatrix> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &PolyMatrix) -> Result<PolyMatrix> {
        self.zip_with(rhs, |a, b| a - b)
    }

    /// Jacobian of the entries (read row-major) with respect to `vars`:
    /// one row per entry, one column per variable.
    pub fn jacobian(&self, vars: &[Var]) -> PolyMatrix {
        let mut data = Vec::with_capacity(self.data.len() * vars.len());
        for p in &self.data {
            for &v in vars {
                data.push(p.diff(v));
            }
        }
        PolyMatrix::new(self.data.len(), vars.len(), data)
    }

    /// Entrywise evaluation, row-major.
    pub fn eval_with<F: Fn(Var) -> Option<f64> + Copy>(&self, value: F) -> Result<Vec<f64>> {
        self.data.iter().map(|p| p.eval_with(value)).collect()
    }
}

/// Jacobian of a scalar polynomial: a `1 x vars.len()` matrix.
pub fn poly_diff(p: &Polynomial, vars: &[Var]) -> PolyMatrix {
    PolyMatrix::row(vars.iter().map(|&v| p.diff(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: u32) -> Var {
        Var::new(i)
    }

    fn names(v: Var) -> String {
        format!("x{}", v.id() + 1)
    }

    #[test]
    fn cancellation_removes_terms() {
        let p = (x(0) + 1.0) + (x(0) - 1.0);
        assert_eq!(p, 2.0 * x(0));
        assert_eq!(p.len(), 1);
        let z = &p - &p;
        assert!(z.is_zero());
    }

    #[test]
    fn camel_polynomial_has_six_terms() {
        let (x1, x2) = (x(0), x(1));
        let a = 4.0 * x1.pow(2) + x1 * x2;
        let b = -4.0 * x2.pow(2) - 2.1 * x1.pow(4) + 4.0 * x2.pow(4) + (1.0 / 3.0) * x1.pow(6);
        let g0 = a + b;
        assert_eq!(g0.len(), 6);
        assert_eq!(g0.fmt_with(&names), "4x1^2+x1x2-4x2^2-2.1x1^4+4x2^4+0.33333x1^6");
    }

    #[test]
    fn one_plus_x_prints_constant_first() {
        assert_eq!((1.0 + x(0)).fmt_with(&names), "1+x1");
    }

    #[test]
    fn cubic_product() {
        let p = (x(0) - 1.0) * (x(0) + 1.0) * (x(0) + 2.0);
        let expected = x(0).pow(3) + 2.0 * x(0).pow(2) - x(0) - 2.0;
        assert_eq!(p, expected);
        assert_eq!(p.degree(), 3);
        assert!((&p * &Polynomial::zero()).is_zero());
    }

    #[test]
    fn outer_product_of_vector() {
        let y = PolyMatrix::from_vars(&[x(1), x(2)]);
        let yy = y.matmul(&y.transpose()).unwrap();
        assert_eq!(yy.shape(), (2, 2));
        assert_eq!(*yy.get(0, 0), x(1).pow(2));
        assert_eq!(*yy.get(0, 1), x(1) * x(2));
        assert_eq!(*yy.get(1, 1), x(2).pow(2));
    }

    #[test]
    fn powers() {
        assert_eq!(x(0).poly().pow(3), x(0).pow(3));
        assert_eq!((x(0) + 1.0).pow(2), x(0).pow(2) + 2.0 * x(0) + 1.0);
        assert_eq!((x(0) * x(1) - 3.0).pow(0), Polynomial::one());
    }

    #[test]
    fn derivatives() {
        assert_eq!(x(0).pow(3).diff(x(0)), 3.0 * x(0).pow(2));
        assert!(Polynomial::one().diff(x(0)).is_zero());
        let j = poly_diff(&(x(0) * x(1)), &[x(0), x(1)]);
        assert_eq!(*j.get(0, 0), x(1).poly());
        assert_eq!(*j.get(0, 1), x(0).poly());
    }

    #[test]
    fn basis_order_and_size() {
        let b = monomial_basis(&[x(0), x(1)], 2);
        let shown: Vec<String> = b.iter().map(|m| m.fmt_with(&names)).collect();
        assert_eq!(shown, ["1", "x1", "x2", "x1^2", "x1x2", "x2^2"]);
        assert_eq!(monomial_basis(&[x(0), x(1), x(2)], 2).len(), 10);
        let nine: Vec<Var> = (0..9).map(x).collect();
        assert_eq!(monomial_basis(&nine, 6).len(), 5005);
        // the basis is sorted with respect to the monomial order
        let b3 = monomial_basis(&[x(0), x(1), x(2)], 4);
        assert!(b3.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn evaluation() {
        let p = 1.0 - 2.0 * x(0) + 3.0 * x(0).pow(2);
        let pt = BTreeMap::from([(x(0), 2.0)]);
        assert_eq!(p.eval(&pt).unwrap(), 9.0);
        let q = x(0) * x(1);
        assert!(matches!(q.eval(&pt), Err(Error::UnassignedVariable(_))));
        let g = 7.5 + x(0) * x(1) - x(1).pow(3);
        let zero = BTreeMap::from([(x(0), 0.0), (x(1), 0.0)]);
        assert_eq!(g.eval(&zero).unwrap(), 7.5);
    }

    #[test]
    fn camel_value_at_minimizer() {
        let (x1, x2) = (x(0), x(1));
        let g0 = 4.0 * x1.pow(2) + x1 * x2 - 4.0 * x2.pow(2) - 2.1 * x1.pow(4)
            + 4.0 * x2.pow(4)
            + (1.0 / 3.0) * x1.pow(6);
        let pt = BTreeMap::from([(x1, 0.0898), (x2, -0.7127)]);
        assert!((g0.eval(&pt).unwrap() + 1.0316).abs() < 1e-3);
    }

    #[test]
    fn coefficient_display() {
        assert_eq!(format_coeff(1.0 / 3.0), "0.33333");
        assert_eq!(format_coeff(2.1), "2.1");
        assert_eq!(format_coeff(4.0), "4");
        assert_eq!(format_coeff(123456.0), "123456");
    }

    #[test]
    fn monic_monomial_detection() {
        assert!(x(0).pow(2).as_monic_monomial().is_some());
        assert!((x(0).pow(2) - 1.0).as_monic_monomial().is_none());
        assert!((2.0 * x(0)).as_monic_monomial().is_none());
        assert_eq!(Polynomial::one().as_monic_monomial(), Some(&Monomial::one()));
    }

    #[test]
    fn monomial_division() {
        let a = Monomial::from_pairs([(x(0), 3), (x(1), 1)]);
        let b = Monomial::var_pow(x(0), 2);
        assert!(b.divides(&a));
        assert_eq!(b.quotient_of(&a).unwrap(), Monomial::from_pairs([(x(0), 1), (x(1), 1)]));
        assert!(!a.divides(&b));
    }
}
