//! Exact small-matrix algebra: characteristic polynomials, spectral radii,
//! joint spectral radius brackets, the tridiagonal family `A_k`, and Moran equations.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{format_rational, parse_rational, rat};
use crate::error::{domain, Error, Result};

/// Square matrix with exact rational entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    dim: usize,
    entries: Vec<BigRational>,
}

pub const MAX_DIM: usize = 64;

impl RationalMatrix {
    pub fn zero(dim: usize) -> Self {
        Self { dim, entries: vec![BigRational::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = BigRational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || dim > MAX_DIM {
            return domain(format!("matrix size {dim} outside 1..={MAX_DIM}"));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != dim) {
            return domain(format!("row {r} has {} entries, expected {dim}", rows[r].len()));
        }
        Ok(Self { dim, entries: rows.into_iter().flatten().collect() })
    }

    /// Integer entries, row-major.
    pub fn from_i64<const D: usize>(rows: [[i64; D]; D]) -> Self {
        Self {
            dim: D,
            entries: rows.iter().flatten().map(|&v| BigRational::from_integer(v.into())).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|e| !e.is_negative())
    }

    /// `Σ |m_ij|`.
    pub fn entry_sum_norm(&self) -> BigRational {
        self.entries.iter().map(|e| e.abs()).fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|e| e * s).collect() }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::identity(self.dim);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    /// Deletes the last row and column.
    pub fn truncate_last(&self) -> Result<Self> {
        if self.dim < 2 {
            return domain("cannot truncate a 1x1 matrix");
        }
        let d = self.dim - 1;
        let rows = (0..d).map(|i| (0..d).map(|j| self.get(i, j).clone()).collect()).collect();
        Self::from_rows(rows)
    }

    pub fn apply(&self, v: &[BigRational]) -> Vec<BigRational> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * &v[j]).fold(BigRational::zero(), |a, b| a + b))
            .collect()
    }

    pub fn apply_u64(&self, v: &[u64]) -> Vec<BigRational> {
        let v: Vec<BigRational> = v.iter().map(|&x| BigRational::from_integer(x.into())).collect();
        self.apply(&v)
    }

    /// `1 M` as a row vector.
    pub fn row_of_ones_times(&self) -> Vec<BigRational> {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j).clone()).fold(BigRational::zero(), |a, b| a + b))
            .collect()
    }

    /// `M 1ᵗ` as a column vector.
    pub fn times_column_of_ones(&self) -> Vec<BigRational> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).clone()).fold(BigRational::zero(), |a, b| a + b))
            .collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// First entry (row-major) where `self` and `other` differ.
    pub fn first_difference(&self, other: &Self) -> Option<(usize, usize)> {
        if self.dim != other.dim {
            return Some((0, 0));
        }
        (0..self.dim * self.dim)
            .find(|&i| self.entries[i] != other.entries[i])
            .map(|i| (i / self.dim, i % self.dim))
    }

    /// Rows of whitespace-separated rationals, one row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim).map(|j| format_rational(self.get(i, j))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

impl<'a> Mul<&'a RationalMatrix> for &'a RationalMatrix {
    type Output = RationalMatrix;
    fn mul(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let d = self.dim;
        let mut out = RationalMatrix::zero(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let b = rhs.get(k, j);
                    if !b.is_zero() {
                        out.entries[i * d + j] += a * b;
                    }
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a RationalMatrix> for &'a RationalMatrix {
    type Output = RationalMatrix;
    fn add(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        RationalMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a RationalMatrix> for &'a RationalMatrix {
    type Output = RationalMatrix;
    fn sub(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        RationalMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_text().trim_end())
    }
}

impl FromStr for RationalMatrix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let rows = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.split_whitespace().map(parse_rational).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }
}

/// Parses blank-line separated matrices. A block may start with a `Name:` line;
/// unnamed blocks are labelled `A`, `B`, ... in order.
pub fn parse_matrix_set(text: &str) -> Result<Vec<(String, RationalMatrix)>> {
    let mut out = Vec::new();
    let mut block: Vec<&str> = Vec::new();
    let flush = |block: &mut Vec<&str>, out: &mut Vec<(String, RationalMatrix)>| -> Result<()> {
        if block.is_empty() {
            return Ok(());
        }
        let (name, rows) = match block[0].strip_suffix(':') {
            Some(name) => (name.trim().to_string(), &block[1..]),
            None => (((b'A' + out.len() as u8) as char).to_string(), &block[..]),
        };
        let m: RationalMatrix = rows.join("\n").parse().map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("matrix {name}: {msg}")),
            Error::Domain(msg) => Error::Parse(format!("matrix {name}: {msg}")),
            other => other,
        })?;
        out.push((name, m));
        block.clear();
        Ok(())
    };
    for line in text.lines() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            flush(&mut block, &mut out)?;
        } else {
            block.push(line);
        }
    }
    flush(&mut block, &mut out)?;
    if out.is_empty() {
        return Err(Error::Parse("no matrices found".into()));
    }
    if let Some(w) = out.windows(2).find(|w| w[0].1.dim() != w[1].1.dim()) {
        return domain(format!("matrices {} and {} differ in size", w[0].0, w[1].0));
    }
    Ok(out)
}

/// Polynomial with exact rational coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<BigRational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect())
    }

    pub fn from_rationals(coeffs: &[(i64, i64)]) -> Self {
        Self::new(coeffs.iter().map(|&(n, d)| rat(n, d)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// `λ`.
    pub fn x() -> Self {
        Self::from_i64(&[0, 1])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => self.scale(&(BigRational::one() / l)),
            None => Self::zero(),
        }
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer((i as i64).into()))
                .collect(),
        )
    }

    /// Quotient and remainder.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by zero polynomial");
        let lead = d.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigRational::zero(); rem.len().saturating_sub(dd)];
        while rem.len() > dd && !rem.is_empty() {
            let shift = rem.len() - 1 - dd;
            let q = rem.last().unwrap() / &lead;
            for (i, c) in d.coeffs.iter().enumerate() {
                rem[shift + i] -= &q * c;
            }
            quot[shift] = q;
            rem.pop();
            while rem.last().is_some_and(|c| c.is_zero()) {
                rem.pop();
            }
        }
        (Self::new(quot), Self::new(rem))
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Same roots, each with multiplicity one.
    pub fn squarefree(&self) -> Self {
        let g = self.gcd(&self.derivative());
        if g.degree().unwrap_or(0) == 0 {
            self.clone()
        } else {
            self.div_rem(&g).0
        }
    }

    /// `1 + max |a_i / a_n|` bounds every root in absolute value.
    pub fn cauchy_bound(&self) -> BigRational {
        let lead = self.leading().expect("nonzero polynomial").abs();
        let n = self.coeffs.len() - 1;
        let m = self.coeffs[..n]
            .iter()
            .map(|c| c.abs() / &lead)
            .max()
            .unwrap_or_else(BigRational::zero);
        m + BigRational::one()
    }

    /// Sturm chain of the square-free part.
    pub fn sturm_chain(&self) -> SturmChain {
        let p = self.squarefree();
        let mut chain = vec![p.clone(), p.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(-r);
        }
        SturmChain { chain }
    }

    /// Largest real root within `tol`, or `None` when there is no real root.
    pub fn largest_real_root(&self, tol: f64) -> Option<RootBracket> {
        let deg = self.degree()?;
        if deg == 0 {
            return None;
        }
        let chain = self.sturm_chain();
        let bound = self.cauchy_bound();
        let mut lo = -&bound - BigRational::one();
        let mut hi = bound.clone();
        if chain.count_roots(&lo, &bound) == 0 {
            return None;
        }
        let two = BigRational::from_integer(2.into());
        let tol = BigRational::from_float(tol).unwrap_or_else(|| rat(1, 1 << 40));
        while &hi - &lo > tol {
            let mid = (&lo + &hi) / &two;
            if chain.count_roots(&mid, &bound) >= 1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(RootBracket { lower: lo, upper: hi })
    }
}

/// Half-open interval `(lower, upper]` holding a root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootBracket {
    pub lower: BigRational,
    pub upper: BigRational,
}

impl RootBracket {
    pub fn midpoint(&self) -> f64 {
        ((&self.lower + &self.upper) / BigRational::from_integer(2.into()))
            .to_f64()
            .unwrap_or(f64::NAN)
    }
}

pub struct SturmChain {
    chain: Vec<Polynomial>,
}

impl SturmChain {
    fn sign_changes(&self, x: &BigRational) -> usize {
        let mut last = 0i8;
        let mut changes = 0;
        for p in &self.chain {
            let v = p.eval(x);
            let s = if v.is_positive() {
                1
            } else if v.is_negative() {
                -1
            } else {
                0
            };
            if s != 0 {
                if last != 0 && s != last {
                    changes += 1;
                }
                last = s;
            }
        }
        changes
    }

    /// Distinct real roots in `(a, b]`.
    pub fn count_roots(&self, a: &BigRational, b: &BigRational) -> usize {
        self.sign_changes(a).saturating_sub(self.sign_changes(b))
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.into_iter().map(|c| -c).collect())
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = BigRational::zero();
        Polynomial::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&zero) + rhs.coeffs.get(i).unwrap_or(&zero))
                .collect(),
        )
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs.clone())
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let coef = format_rational(&mag);
            match (i, mag.is_one()) {
                (0, _) => f.write_str(&coef)?,
                (_, true) => {}
                (_, false) => write!(f, "{coef}")?,
            }
            match i {
                0 => {}
                1 => f.write_str("λ")?,
                _ => write!(f, "λ^{i}")?,
            }
        }
        Ok(())
    }
}

/// `det(M - λI)`, computed with Berkowitz's division-free recursion.
pub fn char_poly(m: &RationalMatrix) -> Polynomial {
    let d = m.dim();
    // coefficients of det(λI - A_r), highest degree first
    let mut poly = vec![BigRational::one(), -m.get(0, 0).clone()];
    for r in 1..d {
        let mut toeplitz = Vec::with_capacity(r + 2);
        toeplitz.push(BigRational::one());
        toeplitz.push(-m.get(r, r).clone());
        // column above the diagonal and row left of it
        let mut col: Vec<BigRational> = (0..r).map(|i| m.get(i, r).clone()).collect();
        for _ in 0..r {
            let t = (0..r).map(|j| m.get(r, j) * &col[j]).fold(BigRational::zero(), |a, b| a + b);
            toeplitz.push(-t);
            col = (0..r)
                .map(|i| (0..r).map(|j| m.get(i, j) * &col[j]).fold(BigRational::zero(), |a, b| a + b))
                .collect();
        }
        let next: Vec<BigRational> = (0..r + 2)
            .map(|i| {
                (0..=i.min(r))
                    .map(|j| &toeplitz[i - j] * &poly[j])
                    .fold(BigRational::zero(), |a, b| a + b)
            })
            .collect();
        poly = next;
    }
    let sign = if d % 2 == 0 { BigRational::one() } else { -BigRational::one() };
    Polynomial::new(poly.into_iter().rev().map(|c| c * &sign).collect())
}

/// `det(λI - M)`.
pub fn char_poly_monic(m: &RationalMatrix) -> Polynomial {
    char_poly(m).monic()
}

fn f64_radius_bracket(entries: &[f64], d: usize, iters: usize) -> (f64, f64) {
    // Collatz-Wielandt bracket from power iteration on M + I (stays positive).
    let mut x = vec![1.0; d];
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    for _ in 0..iters {
        let mx: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| entries[i * d + j] * x[j]).sum())
            .collect();
        let ratios = mx.iter().zip(&x).map(|(a, b)| a / b);
        let (rlo, rhi) = ratios.fold((f64::INFINITY, 0.0f64), |(l, h), r| (l.min(r), h.max(r)));
        lo = f64::max(lo, rlo);
        hi = f64::min(hi, rhi);
        let next: Vec<f64> = mx.iter().zip(&x).map(|(a, b)| a + b).collect();
        let norm = next.iter().cloned().fold(0.0, f64::max);
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        x = next.iter().map(|v| v / norm).collect();
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    (lo, hi)
}

/// Spectral radius of a nonnegative matrix: largest real root of the characteristic
/// polynomial, checked against a Collatz-Wielandt bracket from power iteration.
pub fn spectral_radius(m: &RationalMatrix, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    if !m.is_nonnegative() {
        return domain("spectral radius needs a nonnegative matrix");
    }
    let root = char_poly(m)
        .largest_real_root(tol)
        .ok_or_else(|| Error::Numeric("characteristic polynomial has no real root".into()))?;
    let rho = root.midpoint().max(0.0);
    let (lo, hi) = f64_radius_bracket(&m.to_f64(), m.dim(), 10_000);
    let slack = 1e-9 * rho.max(1.0) + tol;
    if rho < lo - slack || rho > hi + slack {
        return Err(Error::Numeric(format!(
            "root {rho} outside power-iteration bracket [{lo}, {hi}]"
        )));
    }
    Ok(rho)
}

/// The matrices named in the counting arguments.
pub mod named {
    use super::RationalMatrix;

    /// Transition bound when the level moves by half a strip or a full strip.
    pub fn e() -> RationalMatrix {
        RationalMatrix::from_i64([[2, 0, 1], [2, 0, 2], [2, 0, 1]])
    }

    /// Transition bound when the level stays put.
    pub fn f() -> RationalMatrix {
        RationalMatrix::from_i64([[2, 1, 0], [2, 1, 0], [2, 0, 1]])
    }

    /// `FE`.
    pub fn g() -> RationalMatrix {
        &f() * &e()
    }

    /// `F²E - 3FE`.
    pub fn d() -> RationalMatrix {
        RationalMatrix::from_i64([[0, 0, 0], [0, 0, 0], [0, 0, 2]])
    }

    /// Type transitions of the extremal construction at even stages.
    pub fn a() -> RationalMatrix {
        RationalMatrix::from_i64([[2, 1, 0], [2, 1, 0], [0, 1, 0]])
    }

    /// Type transitions at odd stages.
    pub fn b() -> RationalMatrix {
        RationalMatrix::from_i64([[2, 1, 1], [2, 1, 0], [0, 0, 1]])
    }

    /// `BA`.
    pub fn m() -> RationalMatrix {
        &b() * &a()
    }

    /// Two-type reduction of `BA`.
    pub fn m_hat() -> RationalMatrix {
        RationalMatrix::from_i64([[6, 4], [6, 3]])
    }

    /// `(9 + √105) / 2`.
    pub fn alpha() -> f64 {
        (9.0 + 105f64.sqrt()) / 2.0
    }

    /// `log α / log 16`.
    pub fn flexible_dimension() -> f64 {
        alpha().ln() / 16f64.ln()
    }

    /// `log((1+√5)/2) / log 4`.
    pub fn zero_set_dimension() -> f64 {
        golden().ln() / 4f64.ln()
    }

    pub fn golden() -> f64 {
        (1.0 + 5f64.sqrt()) / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsrBracket {
    pub lower: f64,
    /// Smallest per-length bound, so nonincreasing in `length`.
    pub upper: f64,
    /// Word whose spectral radius gives `lower`.
    pub witness: String,
    pub length: usize,
    /// `max ‖P‖^{1/l}` over words of each length `l = 1..=length`.
    pub upper_by_length: Vec<f64>,
    /// Best `ρ(P)^{1/l}` over words of length at most `l`.
    pub lower_by_length: Vec<f64>,
}

pub const JSR_WORD_GUARD: f64 = 1e7;

fn is_max_rotation(word: &[usize]) -> bool {
    let n = word.len();
    (1..n).all(|r| {
        let rotated = word[r..].iter().chain(&word[..r]);
        rotated.cmp(word.iter()) != std::cmp::Ordering::Greater
    })
}

struct WordStats {
    max_norm: Vec<BigRational>,
    /// Per length: (estimated ρ(P)^{1/l}, word) of the best cyclic class.
    best_radius: Vec<Vec<(f64, Vec<usize>)>>,
}

fn explore(
    set: &[RationalMatrix],
    prefix: Vec<usize>,
    product: RationalMatrix,
    max_len: usize,
    stats: &mut WordStats,
) {
    let l = prefix.len();
    let norm = product.entry_sum_norm();
    if norm > stats.max_norm[l - 1] {
        stats.max_norm[l - 1] = norm;
    }
    if is_max_rotation(&prefix) {
        let (lo, hi) = f64_radius_bracket(&product.to_f64(), product.dim(), 400);
        let est = ((lo + hi) / 2.0).max(0.0).powf(1.0 / l as f64);
        let bucket = &mut stats.best_radius[l - 1];
        let best = bucket.first().map(|b| b.0).unwrap_or(-1.0);
        if est > best * (1.0 + 1e-9) {
            bucket.clear();
            bucket.push((est, prefix.clone()));
        } else if est >= best * (1.0 - 1e-9) && bucket.len() < 8 {
            bucket.push((est, prefix.clone()));
        }
    }
    if l == max_len {
        return;
    }
    for (i, m) in set.iter().enumerate() {
        let mut next = prefix.clone();
        next.push(i);
        explore(set, next, &product * m, max_len, stats);
    }
}

/// Bracket on the joint spectral radius from all products of length at most `max_len`.
pub fn jsr_bracket(set: &[(String, RationalMatrix)], max_len: usize) -> Result<JsrBracket> {
    if set.is_empty() || max_len == 0 {
        return domain("need at least one matrix and max_len >= 1");
    }
    if let Some((name, _)) = set.iter().find(|(_, m)| !m.is_nonnegative()) {
        return domain(format!("matrix {name} has a negative entry"));
    }
    if (set.len() as f64).powi(max_len as i32) > JSR_WORD_GUARD {
        return Err(Error::Resource(format!(
            "{}^{max_len} products exceed the enumeration guard",
            set.len()
        )));
    }
    let mats: Vec<RationalMatrix> = set.iter().map(|(_, m)| m.clone()).collect();
    let per_root: Vec<WordStats> = (0..mats.len())
        .into_par_iter()
        .map(|i| {
            let mut stats = WordStats {
                max_norm: vec![BigRational::zero(); max_len],
                best_radius: vec![Vec::new(); max_len],
            };
            explore(&mats, vec![i], mats[i].clone(), max_len, &mut stats);
            stats
        })
        .collect();

    let mut upper_by_length = Vec::with_capacity(max_len);
    for l in 0..max_len {
        let norm = per_root.iter().map(|s| s.max_norm[l].clone()).max().unwrap();
        let v = norm.to_f64().unwrap_or(f64::INFINITY).powf(1.0 / (l + 1) as f64);
        upper_by_length.push(v * (1.0 + 4.0 * f64::EPSILON));
    }

    // exact verification of the best candidates of each length
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut lower_by_length = Vec::with_capacity(max_len);
    for l in 0..max_len {
        let mut cands: Vec<(f64, Vec<usize>)> =
            per_root.iter().flat_map(|s| s.best_radius[l].iter().cloned()).collect();
        cands.sort_by(|a, b| b.0.total_cmp(&a.0));
        let top = cands.first().map(|c| c.0).unwrap_or(0.0);
        for (_, word) in cands.into_iter().take_while(|c| c.0 >= top * (1.0 - 1e-9)) {
            let product = word.iter().skip(1).fold(mats[word[0]].clone(), |acc, &i| &acc * &mats[i]);
            let rho = spectral_radius(&product, 1e-14)?;
            let v = rho.powf(1.0 / word.len() as f64);
            if best.as_ref().map_or(true, |(b, _)| v > b * (1.0 + 1e-12)) {
                best = Some((v, word));
            }
        }
        lower_by_length.push(best.as_ref().map(|b| b.0).unwrap_or(0.0));
    }
    let (lower, word) = best.unwrap_or((0.0, vec![0]));
    let witness: String = word.iter().map(|&i| set[i].0.as_str()).collect();
    Ok(JsrBracket {
        lower,
        upper: upper_by_length.iter().copied().fold(f64::INFINITY, f64::min),
        witness,
        length: max_len,
        upper_by_length,
        lower_by_length,
    })
}

/// Every product of length `0..=max_len` over `set`.
pub fn all_products(set: &[RationalMatrix], max_len: usize) -> Vec<RationalMatrix> {
    let mut out = vec![RationalMatrix::identity(set[0].dim())];
    let mut layer = out.clone();
    for _ in 0..max_len {
        layer = layer.iter().flat_map(|p| set.iter().map(move |m| p * m)).collect();
        out.extend(layer.iter().cloned());
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(IdentityCheck { name: name.into(), passed, detail: detail.into() });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Assertion error naming the first failing check.
    pub fn ensure(&self) -> Result<()> {
        match self.checks.iter().find(|c| !c.passed) {
            None => Ok(()),
            Some(c) => Err(Error::Assertion(format!("{}: {}", c.name, c.detail))),
        }
    }

    pub fn extend(&mut self, other: IdentityReport) {
        self.checks.extend(other.checks);
    }
}

fn describe_diff(name: &str, got: &RationalMatrix, want: &RationalMatrix) -> String {
    match got.first_difference(want) {
        None => format!("{name} matches"),
        Some((i, j)) => format!(
            "{name} entry ({i},{j}) is {}, expected {}",
            format_rational(got.get(i, j)),
            format_rational(want.get(i, j))
        ),
    }
}

/// Compares `got` with the pinned `want`.
pub fn check_transcription(report: &mut IdentityReport, name: &str, got: &RationalMatrix, want: &RationalMatrix) {
    report.push(format!("transcription {name}"), got == want, describe_diff(name, got, want));
}

/// The products displayed alongside the counting argument, pinned entry by entry.
pub fn verify_transcriptions(e: &RationalMatrix, f: &RationalMatrix) -> IdentityReport {
    let mut r = IdentityReport::default();
    check_transcription(&mut r, "E", e, &named::e());
    check_transcription(&mut r, "F", f, &named::f());
    let fe = f * e;
    let f2e = &(f * f) * e;
    let f3e = f * &f2e;
    let fe2 = &fe * &fe;
    let pins: [(&str, RationalMatrix, [[i64; 3]; 3]); 7] = [
        ("E^2", e * e, [[6, 0, 3], [8, 0, 4], [6, 0, 3]]),
        ("EF", e * f, [[6, 2, 1], [8, 2, 2], [6, 2, 1]]),
        ("FE", fe.clone(), [[6, 0, 4], [6, 0, 4], [6, 0, 3]]),
        ("F^2E", f2e.clone(), [[18, 0, 12], [18, 0, 12], [18, 0, 11]]),
        ("F^3E", f3e.clone(), [[54, 0, 36], [54, 0, 36], [54, 0, 35]]),
        ("(FE)^2", fe2.clone(), [[60, 0, 36], [60, 0, 36], [54, 0, 33]]),
        ("(FE)^2-F^3E", &fe2 - &f3e, [[6, 0, 0], [6, 0, 0], [0, 0, -2]]),
    ];
    for (name, got, want) in pins {
        check_transcription(&mut r, name, &got, &RationalMatrix::from_i64(want));
    }
    let a = named::a();
    let b = named::b();
    check_transcription(&mut r, "BA", &(&b * &a), &RationalMatrix::from_i64([[6, 4, 0], [6, 3, 0], [0, 1, 0]]));
    let m = &b * &a;
    let reduced = m.truncate_last().unwrap();
    check_transcription(&mut r, "M-hat", &reduced, &named::m_hat());
    let cp = char_poly(&named::m_hat());
    let want = Polynomial::from_i64(&[-6, -9, 1]);
    r.push("char poly of M-hat", cp == want, format!("{cp}"));
    r
}

/// The exact identities behind the joint spectral radius of `{E, F}`.
pub fn verify_jsr_identities() -> IdentityReport {
    verify_jsr_identities_for(&named::e(), &named::f())
}

pub fn verify_jsr_identities_for(e: &RationalMatrix, f: &RationalMatrix) -> IdentityReport {
    let mut r = verify_transcriptions(e, f);
    let g = f * e;
    let g2 = &g * &g;
    let g3 = &g2 * &g;
    let nine = BigRational::from_integer(9.into());
    let six = BigRational::from_integer(6.into());
    let three = BigRational::from_integer(3.into());
    let rhs = &g2.scale(&nine) + &g.scale(&six);
    r.push("G^3 = 9G^2 + 6G", g3 == rhs, describe_diff("G^3", &g3, &rhs));
    let cp = char_poly_monic(&g);
    r.push(
        "char poly of G",
        cp == Polynomial::from_i64(&[0, -6, -9, 1]),
        format!("{cp}"),
    );

    let f2e = &(f * f) * e;
    let d = &f2e - &g.scale(&three);
    r.push("F^2E = 3FE + D", d == named::d(), describe_diff("F^2E - 3FE", &d, &named::d()));

    let id = RationalMatrix::identity(3);
    for k in 0..=10u32 {
        let gk = g.pow(k);
        let gk1 = &gk * &g;
        let s = &g.pow(k + 3) - &(&(&f2e * &gk) * &f2e);
        let zero = BigRational::zero();
        let a = s.get(0, 0).clone();
        let b = -s.get(2, 2).clone();
        let pattern = s.get(1, 0) == &a
            && [(0, 1), (0, 2), (1, 1), (1, 2), (2, 0), (2, 1)].iter().all(|&(i, j)| s.get(i, j) == &zero);
        let delta_k = if k == 0 { id.get(2, 2).clone() } else { gk.get(2, 2).clone() };
        let closed_a = &six * gk1.get(0, 0);
        let closed_b = &six * gk1.get(2, 2) + BigRational::from_integer(4.into()) * &delta_k;
        let expanded = {
            let dd = named::d();
            let t1 = gk1.scale(&six);
            let t2 = (&gk1 * &dd).scale(&three);
            let t3 = (&dd * &gk1).scale(&three);
            let t4 = &(&dd * &gk) * &dd;
            &(&(&t1 - &t2) - &t3) - &t4
        };
        let ok = pattern && a >= b && b >= zero && a == closed_a && b == closed_b && expanded == s;
        r.push(
            format!("S_{k} sparse pattern"),
            ok,
            format!("a = {}, b = {}", format_rational(&a), format_rational(&b)),
        );
    }

    let e2 = e * e;
    let ef = e * f;
    let set = [e.clone(), f.clone()];
    let short = all_products(&set, 6);
    let mut bad = None;
    for (idx, m) in short.iter().enumerate() {
        let lhs = (&e2 * m).times_column_of_ones();
        let rhs = (&ef * m).times_column_of_ones();
        if lhs.iter().zip(&rhs).any(|(a, b)| a > b) {
            bad = Some(idx);
            break;
        }
    }
    r.push(
        "E^2 M 1 <= EF M 1 (length <= 6)",
        bad.is_none(),
        match bad {
            None => format!("{} products", short.len()),
            Some(i) => format!("fails at product #{i}"),
        },
    );

    let long = all_products(&set, 8);
    let mut left_ok = true;
    let mut right_ok = true;
    for m in &long {
        let v = m.row_of_ones_times();
        let w = m.times_column_of_ones();
        left_ok &= v[0] >= v[1] && v[0] >= v[2];
        right_ok &= w[0] >= w[2] && w[1] >= w[2];
    }
    r.push("1M has largest first entry (length <= 8)", left_ok, format!("{} products", long.len()));
    r.push("M1 has smallest last entry (length <= 8)", right_ok, format!("{} products", long.len()));
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AkVariant {
    Full,
    Truncated,
}

/// The tridiagonal bound on the expected zero-set counts, of size `k + 1`
/// (or `k` when truncated).
pub fn a_k_family(k: usize, which: AkVariant) -> Result<RationalMatrix> {
    if k < 1 {
        return domain("A_k needs k >= 1");
    }
    let mut m = RationalMatrix::zero(k + 1);
    let q = rat(1, 4);
    m.set(0, 0, rat(1, 1));
    m.set(0, 1, q.clone());
    if k == 1 {
        m.set(1, 0, rat(2, 1));
        m.set(1, 1, rat(1, 1));
    } else {
        m.set(1, 0, rat(2, 1));
        m.set(1, 1, rat(3, 4));
        m.set(1, 2, q.clone());
        for i in 2..k {
            m.set(i, i - 1, q.clone());
            m.set(i, i, rat(1, 2));
            m.set(i, i + 1, q.clone());
        }
        m.set(k, k - 1, q.clone());
        m.set(k, k, rat(1, 1));
    }
    match which {
        AkVariant::Full => Ok(m),
        AkVariant::Truncated => m.truncate_last(),
    }
}

/// `(ζ_k, ξ_k)` from the three-term recursion; `ξ_k` is defined for `k >= 2`.
pub fn zeta_xi(k: usize) -> Result<(Polynomial, Option<Polynomial>)> {
    if k < 1 {
        return domain("zeta needs k >= 1");
    }
    let zeta1 = Polynomial::from_i64(&[1, -1]);
    let zeta2 = Polynomial::from_rationals(&[(1, 4), (-7, 4), (1, 1)]);
    let step = Polynomial::from_rationals(&[(1, 2), (-1, 1)]);
    let sixteenth = rat(1, 16);
    let mut prev = zeta1.clone();
    let mut cur = zeta2.clone();
    if k == 1 {
        return Ok((zeta1, None));
    }
    for _ in 3..=k {
        let next = &(&step * &cur) - &prev.scale(&sixteenth);
        prev = cur;
        cur = next;
    }
    let one_minus = Polynomial::from_i64(&[1, -1]);
    let xi = &(&one_minus * &cur) - &prev.scale(&sixteenth);
    Ok((cur, Some(xi)))
}

/// Largest eigenvalue of a tridiagonal matrix whose off-diagonal products are
/// positive, by bisection on the negative-pivot count of `T - λI`.
pub fn tridiagonal_largest_eigenvalue(diag: &[f64], offprod: &[f64], tol: f64) -> f64 {
    let n = diag.len();
    let below = |lambda: f64| -> usize {
        let mut q = 1.0f64;
        let mut count = 0;
        for i in 0..n {
            let e = if i == 0 { 0.0 } else { offprod[i - 1] };
            q = diag[i] - lambda - if i == 0 { 0.0 } else { e / q };
            if q == 0.0 {
                q = -f64::EPSILON * (diag[i].abs() + lambda.abs()).max(1e-300);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    // Gershgorin on the symmetrized matrix
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for i in 0..n {
        let r = (if i > 0 { offprod[i - 1].sqrt() } else { 0.0 })
            + (if i + 1 < n { offprod[i].sqrt() } else { 0.0 });
        hi = hi.max(diag[i] + r);
        lo = lo.min(diag[i] - r);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if below(mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Spectral radius of `A_k` in floating point.
pub fn rho_k(k: usize) -> Result<f64> {
    if k < 1 {
        return domain("A_k needs k >= 1");
    }
    let mut diag = vec![1.0];
    let mut off = Vec::new();
    if k == 1 {
        diag.push(1.0);
        off.push(0.5);
    } else {
        diag.push(0.75);
        off.push(0.5);
        for _ in 2..k {
            diag.push(0.5);
            off.push(1.0 / 16.0);
        }
        diag.push(1.0);
        off.push(1.0 / 16.0);
    }
    Ok(tridiagonal_largest_eigenvalue(&diag, &off, 1e-14))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoScan {
    pub rhos: Vec<(usize, f64)>,
    pub min_rho: f64,
    pub argmin: usize,
    /// `min_rho - (1+√5)/2`.
    pub gap_to_golden: f64,
}

pub fn rho_k_limit_scan(k_max: usize) -> Result<RhoScan> {
    if k_max < 3 {
        return domain("scan needs k_max >= 3");
    }
    let rhos: Vec<(usize, f64)> = (3..=k_max).map(|k| Ok((k, rho_k(k)?))).collect::<Result<_>>()?;
    let (argmin, min_rho) = rhos
        .iter()
        .cloned()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    Ok(RhoScan { rhos, min_rho, argmin, gap_to_golden: min_rho - named::golden() })
}

/// Exact root bracket of `ξ_k` around its largest root.
pub fn xi_root_bracket(k: usize, tol: f64) -> Result<RootBracket> {
    let (_, xi) = zeta_xi(k)?;
    let xi = xi.ok_or_else(|| Error::Domain("xi needs k >= 2".into()))?;
    xi.largest_real_root(tol)
        .ok_or_else(|| Error::Numeric(format!("xi_{k} has no real root")))
}

pub const MORAN_TOL: f64 = 1e-12;

fn bisect_decreasing(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The `s >= 0` with `Σ count_i ratio_i^s = 1`.
pub fn moran_dimension(pieces: &[(u64, BigRational)]) -> Result<f64> {
    if pieces.is_empty() {
        return domain("Moran equation needs at least one piece");
    }
    let mut rs = Vec::with_capacity(pieces.len());
    for (c, r) in pieces {
        if *c == 0 || !r.is_positive() || r >= &BigRational::one() {
            return domain(format!("piece ({c}, {r}) needs count >= 1 and ratio in (0,1)"));
        }
        rs.push((*c as f64, r.to_f64().unwrap()));
    }
    let g = |s: f64| rs.iter().map(|(c, r)| c * r.powf(s)).sum::<f64>() - 1.0;
    if g(0.0) < 0.0 || g(10.0) > 0.0 {
        return domain("Moran equation has no root in [0, 10]");
    }
    if g(0.0) == 0.0 {
        return Ok(0.0);
    }
    Ok(bisect_decreasing(g, 0.0, 10.0, MORAN_TOL))
}

/// Moran equation for the countable family with `count` pieces of each ratio
/// `first * step^(m-1)`, `m >= 1`: `count first^s / (1 - step^s) = 1`.
pub fn moran_dimension_geometric(count: u64, first: &BigRational, step: &BigRational) -> Result<f64> {
    let (r, q) = (first.to_f64().unwrap_or(f64::NAN), step.to_f64().unwrap_or(f64::NAN));
    if !(r > 0.0 && r < 1.0 && q > 0.0 && q < 1.0) || count == 0 {
        return domain("ratios must lie in (0,1)");
    }
    let g = |s: f64| count as f64 * r.powf(s) - (1.0 - q.powf(s));
    // g(0+) > 0 since 1 - q^s -> 0
    if g(10.0) > 0.0 {
        return domain("Moran equation has no root in (0, 10]");
    }
    Ok(bisect_decreasing(g, 0.0, 10.0, MORAN_TOL))
}

/// Generating function `E x^τ₁` of the first hitting time of level 1 by a symmetric walk.
pub fn psi1(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    // (1 - sqrt(1 - x²)) / x written without cancellation
    x / (1.0 + (1.0 - x * x).sqrt())
}

/// Generating function of the first hitting time of level 2.
pub fn psi2(x: f64) -> f64 {
    psi1(x).powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomMoran {
    pub r: f64,
    pub dimension: f64,
}

/// Root of `2 r ψ₁(r) + ψ₁(r)² = 1` on `(0, 1)` and `s = -log₂ r`.
pub fn random_moran_dimension() -> RandomMoran {
    let h = |r: f64| 1.0 - (2.0 * r * psi1(r) + psi1(r).powi(2));
    let r = bisect_decreasing(h, 0.0, 1.0, 1e-15);
    RandomMoran { r, dimension: -r.log2() }
}

/// `a_0 + a_1 λ + ...` with integer coefficients, for literal tests.
pub fn poly_from_bigints(coeffs: &[BigInt]) -> Polynomial {
    Polynomial::new(coeffs.iter().map(|c| BigRational::from_integer(c.clone())).collect())
}
