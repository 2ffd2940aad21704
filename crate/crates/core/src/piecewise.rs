//! Exact partial sums `f_n` on the dyadic grid.
//!
//! At depth `n` values are stored as integers `v_j = 2^n f_n(j / 2^n)`, so every
//! comparison against a dyadic level is an integer comparison.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::dyadic::{pow2, DyadicValue};
use crate::error::{contract, domain, Error, Result};
use crate::signs::SignProvider;

/// Largest depth for which dense arrays are built.
pub const MAX_DENSE_DEPTH: u32 = 26;

/// Largest depth for sparse fronts and single-point evaluation (cell indices are `u64`).
pub const MAX_SPARSE_DEPTH: u32 = 60;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridFunction {
    depth: u32,
    values: Vec<i64>,
    slopes: Vec<i32>,
}

impl GridFunction {
    /// `f_0 = 0`.
    pub fn zero() -> Self {
        Self { depth: 0, values: vec![0, 0], slopes: vec![0] }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// `v_j = 2^n f_n(j / 2^n)` for `j = 0..=2^n`.
    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn slopes(&self) -> &[i32] {
        &self.slopes
    }

    pub fn cells(&self) -> usize {
        self.slopes.len()
    }

    pub fn value_at(&self, j: usize) -> DyadicValue {
        DyadicValue::new(self.values[j], self.depth)
    }

    /// Depth `n + 1` from depth `n`.
    pub fn refine(&self, provider: &SignProvider) -> Result<Self> {
        self.check_shape()?;
        let n = self.depth;
        if n + 1 > MAX_DENSE_DEPTH {
            return Err(Error::Resource(format!(
                "dense depth {} exceeds {MAX_DENSE_DEPTH}",
                n + 1
            )));
        }
        let cells = self.cells();
        let omegas: Vec<i64> = (0..cells as u64)
            .into_par_iter()
            .map(|j| provider.sign(n, j).value())
            .collect();
        let mut values = vec![0i64; 2 * cells + 1];
        let mut slopes = vec![0i32; 2 * cells];
        values
            .par_chunks_mut(2)
            .zip(slopes.par_chunks_mut(2))
            .enumerate()
            .for_each(|(j, (v, s))| {
                if j == cells {
                    v[0] = 2 * self.values[cells];
                    return;
                }
                let w = omegas[j];
                v[0] = 2 * self.values[j];
                v[1] = self.values[j] + self.values[j + 1] + w;
                s[0] = self.slopes[j] + w as i32;
                s[1] = self.slopes[j] - w as i32;
            });
        Ok(Self { depth: n + 1, values, slopes })
    }

    /// Iterated refinement from depth 0.
    pub fn build(provider: &SignProvider, depth: u32) -> Result<Self> {
        if depth > MAX_DENSE_DEPTH {
            return Err(Error::Resource(format!("dense depth {depth} exceeds {MAX_DENSE_DEPTH}")));
        }
        let mut gf = Self::zero();
        for _ in 0..depth {
            gf = gf.refine(provider)?;
        }
        Ok(gf)
    }

    fn check_shape(&self) -> Result<()> {
        let cells = 1usize << self.depth;
        if self.values.len() != cells + 1 || self.slopes.len() != cells {
            return contract(format!("grid arrays do not match depth {}", self.depth));
        }
        Ok(())
    }

    /// Checks the structural invariants; returns the first violation found.
    pub fn check_invariants(&self) -> Result<()> {
        self.check_shape()?;
        let n = self.depth as i64;
        if self.values[0] != 0 || self.values[self.cells()] != 0 {
            return Err(Error::Assertion("nonzero endpoint value".into()));
        }
        for (j, &s) in self.slopes.iter().enumerate() {
            if self.values[j + 1] - self.values[j] != s as i64 {
                return Err(Error::Assertion(format!("cell {j}: slope does not match values")));
            }
            if (s as i64 - n).rem_euclid(2) != 0 || (s as i64).abs() > n {
                return Err(Error::Assertion(format!("cell {j}: slope {s} at depth {n}")));
            }
        }
        if self.depth % 2 == 0 && self.values.iter().any(|v| v % 2 != 0) {
            return Err(Error::Assertion("odd value at even depth".into()));
        }
        Ok(())
    }

    /// Closed enclosure of `f` on cell `j` from the tail bound.
    pub fn envelope(&self, j: usize) -> Result<(DyadicValue, DyadicValue)> {
        if j >= self.cells() {
            return domain(format!("cell {j} out of range at depth {}", self.depth));
        }
        let (lo, hi) = self.cell_range(j);
        Ok((DyadicValue::new(lo - 1, self.depth), DyadicValue::new(hi + 1, self.depth)))
    }

    /// `(min, max)` of the scaled values at the ends of cell `j`.
    #[inline]
    pub fn cell_range(&self, j: usize) -> (i64, i64) {
        let (a, b) = (self.values[j], self.values[j + 1]);
        (a.min(b), a.max(b))
    }

    /// Sparse front holding every cell.
    pub fn to_front(&self) -> CellFront {
        let cells = (0..self.cells())
            .map(|j| Cell { index: j as u64, left: self.values[j], right: self.values[j + 1] })
            .collect();
        CellFront { depth: self.depth, cells }
    }

    /// `x,f` rows at full grid resolution.
    pub fn to_csv(&self) -> String {
        let scale = (1u64 << self.depth) as f64;
        let mut out = String::with_capacity(self.values.len() * 24);
        out.push_str("x,f\n");
        for (j, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", j as f64 / scale, *v as f64 / scale);
        }
        out
    }

    /// Static SVG polyline over `[0,1] x [min f_n, max f_n]`.
    pub fn to_svg(&self, comment: Option<&str>) -> String {
        const W: f64 = 800.0;
        const H: f64 = 400.0;
        const PAD: f64 = 40.0;
        let scale = (1u64 << self.depth) as f64;
        let lo = *self.values.iter().min().unwrap() as f64 / scale;
        let hi = *self.values.iter().max().unwrap() as f64 / scale;
        let span = if hi > lo { hi - lo } else { 1.0 };
        let sx = |x: f64| PAD + x * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - lo) / span * (H - 2.0 * PAD);
        let stride = (self.values.len() / 16384).max(1);
        let mut points = String::new();
        for (j, v) in self.values.iter().enumerate() {
            if j % stride == 0 || j + 1 == self.values.len() {
                let _ = write!(points, "{:.3},{:.3} ", sx(j as f64 / scale), sy(*v as f64 / scale));
            }
        }
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        if let Some(c) = comment {
            let _ = writeln!(out, "<!--\n{}\n-->", c.replace("--", "- -"));
        }
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let axis_y = if lo <= 0.0 && hi >= 0.0 { sy(0.0) } else { H - PAD };
        let _ = writeln!(
            out,
            r#"<line x1="{PAD}" y1="{axis_y:.3}" x2="{}" y2="{axis_y:.3}" stroke="gray"/>"#,
            W - PAD
        );
        let _ = writeln!(
            out,
            r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="gray"/>"#,
            H - PAD
        );
        for t in 0..=4 {
            let x = t as f64 / 4.0;
            let _ = writeln!(
                out,
                r#"<line x1="{0:.3}" y1="{1:.3}" x2="{0:.3}" y2="{2:.3}" stroke="gray"/><text x="{0:.3}" y="{3:.3}" font-size="11" text-anchor="middle">{4}</text>"#,
                sx(x),
                axis_y - 4.0,
                axis_y + 4.0,
                H - PAD / 2.0,
                x
            );
        }
        for (label, y) in [(lo, sy(lo)), (hi, sy(hi))] {
            let _ = writeln!(
                out,
                r#"<text x="{:.3}" y="{:.3}" font-size="11" text-anchor="end">{:.4}</text>"#,
                PAD - 4.0,
                y + 4.0,
                label
            );
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="black" stroke-width="1" points="{}"/>"#,
            points.trim_end()
        );
        out.push_str("</svg>\n");
        out
    }
}

/// One surviving cell of a sparse front: index and the scaled endpoint values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub index: u64,
    pub left: i64,
    pub right: i64,
}

impl Cell {
    #[inline]
    pub fn min(&self) -> i64 {
        self.left.min(self.right)
    }

    #[inline]
    pub fn max(&self) -> i64 {
        self.left.max(self.right)
    }

    #[inline]
    pub fn slope(&self) -> i64 {
        self.right - self.left
    }

    /// The two children at the next depth, given `ω` on this cell.
    #[inline]
    pub fn children(&self, omega: i64) -> [Cell; 2] {
        let mid = self.left + self.right + omega;
        [
            Cell { index: 2 * self.index, left: 2 * self.left, right: mid },
            Cell { index: 2 * self.index + 1, left: mid, right: 2 * self.right },
        ]
    }
}

/// A subset of the cells at one depth, in increasing index order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellFront {
    pub depth: u32,
    pub cells: Vec<Cell>,
}

impl CellFront {
    pub fn root() -> Self {
        Self { depth: 0, cells: vec![Cell { index: 0, left: 0, right: 0 }] }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Refines every cell and keeps the children accepted by `keep`.
    pub fn refine<K>(&self, provider: &SignProvider, keep: K) -> Result<Self>
    where
        K: Fn(&Cell) -> bool + Sync,
    {
        if self.depth + 1 > MAX_SPARSE_DEPTH {
            return Err(Error::Resource(format!(
                "sparse depth {} exceeds {MAX_SPARSE_DEPTH}",
                self.depth + 1
            )));
        }
        let n = self.depth;
        let expand = |c: &Cell| {
            let w = provider.sign(n, c.index).value();
            c.children(w).into_iter().filter(|ch| keep(ch))
        };
        let cells: Vec<Cell> = if self.cells.len() >= 4096 {
            self.cells.par_iter().flat_map_iter(expand).collect()
        } else {
            self.cells.iter().flat_map(expand).collect()
        };
        Ok(Self { depth: n + 1, cells })
    }
}

/// `φ(t) = dist(t, Z)`.
fn tent(t: &BigRational) -> BigRational {
    let frac = t - t.floor();
    let other = BigRational::from_integer(1.into()) - &frac;
    if frac < other {
        frac
    } else {
        other
    }
}

/// Exact `f_m(x)` at a rational point of `[0, 1]`.
pub fn partial_sum(provider: &SignProvider, x: &BigRational, m: u32) -> Result<BigRational> {
    let zero = BigRational::zero();
    let one = BigRational::from_integer(1.into());
    if x < &zero || x > &one {
        return domain(format!("x = {x} outside [0,1]"));
    }
    if m > MAX_SPARSE_DEPTH {
        return Err(Error::Resource(format!("precision {m} exceeds {MAX_SPARSE_DEPTH}")));
    }
    let mut sum = BigRational::zero();
    for k in 0..m {
        let t = x * BigRational::from_integer(pow2(k));
        let cell = t.floor().to_integer().to_u64().unwrap_or(0).min((1u64 << k) - 1);
        let w = provider.sign(k, cell).value();
        let term = tent(&t) / BigRational::from_integer(pow2(k));
        if w > 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(sum)
}

/// Enclosure `[f_m(x) - 2^-m, f_m(x) + 2^-m]` of `f(x)` at a dyadic point.
pub fn eval_enclosure(
    provider: &SignProvider,
    x: &DyadicValue,
    m: u32,
) -> Result<(DyadicValue, DyadicValue)> {
    let fm = partial_sum(provider, &x.to_rational(), m)?;
    // f_m(x) has denominator dividing 2^max(m, exponent(x))
    let e = m.max(x.exponent());
    let scaled = &fm * BigRational::from_integer(pow2(e));
    debug_assert!(scaled.is_integer());
    let v: BigInt = scaled.to_integer();
    let tail: BigInt = pow2(e - m);
    Ok((DyadicValue::new(&v - &tail, e), DyadicValue::new(&v + &tail, e)))
}

/// Enclosure of `f(x)` at an arbitrary rational point.
pub fn eval_enclosure_rational(
    provider: &SignProvider,
    x: &BigRational,
    m: u32,
) -> Result<(BigRational, BigRational)> {
    let fm = partial_sum(provider, x, m)?;
    let tail = BigRational::new(1.into(), pow2(m));
    Ok((&fm - &tail, &fm + &tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::rat;
    use crate::rng::Probability;
    use crate::signs::Sign;

    #[test]
    fn refine_examples() {
        let d1 = GridFunction::zero().refine(&SignProvider::AllPlus).unwrap();
        assert_eq!(d1.values(), &[0, 1, 0]);
        assert_eq!(d1.slopes(), &[1, -1]);
        let d2 = d1.refine(&SignProvider::AllPlus).unwrap();
        assert_eq!(d2.values(), &[0, 2, 2, 2, 0]);
        assert_eq!(d2.slopes(), &[2, 0, 0, -2]);
        let g2 = d1.refine(&SignProvider::Rademacher).unwrap();
        assert_eq!(g2.values(), &[0, 2, 2, 0, 0]);
        assert_eq!(g2.slopes(), &[2, 0, -2, 0]);
    }

    #[test]
    fn build_depth_zero() {
        let gf = GridFunction::build(&SignProvider::Rademacher, 0).unwrap();
        assert_eq!(gf.values(), &[0, 0]);
        assert_eq!(gf.slopes(), &[0]);
    }

    #[test]
    fn gray_left_slope() {
        let mut gf = GridFunction::zero();
        for n in 1..=16 {
            gf = gf.refine(&SignProvider::Rademacher).unwrap();
            assert_eq!(gf.slopes()[0], n);
        }
    }

    #[test]
    fn envelopes() {
        let gf = GridFunction::build(&SignProvider::AllPlus, 2).unwrap();
        let (lo, hi) = gf.envelope(0).unwrap();
        assert_eq!(lo, DyadicValue::new(-1, 2));
        assert_eq!(hi, DyadicValue::new(3, 2));
        let (lo, hi) = GridFunction::zero().envelope(0).unwrap();
        assert_eq!((lo, hi), (DyadicValue::new(-1, 0), DyadicValue::new(1, 0)));
        assert!(gf.envelope(4).is_err());
        for j in 0..4 {
            let (lo, hi) = gf.envelope(j).unwrap();
            let width = hi.to_rational() - lo.to_rational();
            let expect = rat(gf.slopes()[j].abs() as i64 + 2, 4);
            assert_eq!(width, expect);
        }
    }

    #[test]
    fn enclosure_examples() {
        let half = DyadicValue::new(1, 1);
        let (lo, hi) = eval_enclosure(&SignProvider::AllPlus, &half, 1).unwrap();
        assert_eq!((lo.to_rational(), hi.to_rational()), (rat(0, 1), rat(1, 1)));
        let (lo, hi) = eval_enclosure(&SignProvider::AllPlus, &half, 10).unwrap();
        assert!(lo.to_rational() <= rat(1, 2) && rat(1, 2) <= hi.to_rational());
        let z = DyadicValue::zero();
        let p = SignProvider::model2(5, Probability::half());
        let (lo, hi) = eval_enclosure(&p, &z, 7).unwrap();
        assert_eq!((lo, hi), (DyadicValue::new(-1, 7), DyadicValue::new(1, 7)));
        assert!(eval_enclosure(&p, &DyadicValue::new(3, 1), 4).is_err());
    }

    #[test]
    fn right_endpoint_uses_last_cell() {
        let one = DyadicValue::new(1, 0);
        let (lo, hi) = eval_enclosure(&SignProvider::Rademacher, &one, 12).unwrap();
        assert_eq!(lo.to_rational() + hi.to_rational(), rat(0, 1));
    }

    #[test]
    fn front_matches_dense() {
        let p = SignProvider::model2(21, Probability::new(2, 3).unwrap());
        let mut front = CellFront::root();
        for _ in 0..10 {
            front = front.refine(&p, |_| true).unwrap();
        }
        let dense = GridFunction::build(&p, 10).unwrap().to_front();
        assert_eq!(front, dense);
    }

    #[test]
    fn explicit_tree_default_below_depth() {
        let tree = crate::signs::ExplicitTree::new(1, Sign::Minus);
        let p = SignProvider::ExplicitTree(tree);
        let gf = GridFunction::build(&p, 2).unwrap();
        // level 0 is +1, level 1 default -1
        assert_eq!(gf.values(), &[0, 0, 2, 0, 0]);
    }
}
