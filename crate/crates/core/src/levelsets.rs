//! Strip counts, level-set covers, shape detection and box-dimension fits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::dyadic::scaled_floor_ceil;
use crate::error::{contract, Error, Result};
use crate::piecewise::{Cell, CellFront, GridFunction};
use crate::signs::SignProvider;
use crate::spectra::RationalMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripCounts {
    /// Stage: the grid has depth `2n`.
    pub n: u32,
    pub k: i64,
    pub n0: u64,
    pub n1: u64,
}

/// `(n0, n1)` for strip `[2k, 2k+2]` over segments given by scaled endpoint values.
fn count_strip(segments: impl Iterator<Item = (i64, i64)>, k: i64) -> (u64, u64) {
    let (lo, hi) = (2 * k, 2 * k + 2);
    let mut n0 = 0;
    let mut n1 = 0;
    for (a, b) in segments {
        if a == b {
            if a == lo {
                n0 += 1;
            }
            continue;
        }
        if a.min(b) < hi && a.max(b) > lo {
            n1 += 1;
        }
    }
    (n0, n1)
}

fn require_even(depth: u32) -> Result<u32> {
    if depth % 2 != 0 {
        return contract(format!("strip counting needs even depth, got {depth}"));
    }
    Ok(depth / 2)
}

fn segments(gf: &GridFunction) -> impl Iterator<Item = (i64, i64)> + Clone + '_ {
    gf.values().windows(2).map(|w| (w[0], w[1]))
}

pub fn strip_counts(gf: &GridFunction, k: i64) -> Result<StripCounts> {
    let n = require_even(gf.depth())?;
    let (n0, n1) = count_strip(segments(gf), k);
    Ok(StripCounts { n, k, n0, n1 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxCounts {
    pub m0: u64,
    pub m1: u64,
    /// `2 m0 + 3 m1`, the cover bound on the busiest strip.
    pub bound: u64,
}

/// Maxima over all strips of `n0` and `n1`.
pub fn max_counts(gf: &GridFunction) -> Result<MaxCounts> {
    require_even(gf.depth())?;
    let mut flat: BTreeMap<i64, u64> = BTreeMap::new();
    // difference array over strip indices for n1
    let mut delta: BTreeMap<i64, i64> = BTreeMap::new();
    for (a, b) in segments(gf) {
        if a == b {
            *flat.entry(a.div_euclid(2)).or_default() += 1;
        } else {
            // even endpoints: strips k in [min/2, max/2 - 1]
            let (lo, hi) = (a.min(b).div_euclid(2), a.max(b).div_euclid(2));
            *delta.entry(lo).or_default() += 1;
            *delta.entry(hi).or_default() -= 1;
        }
    }
    let m0 = flat.values().copied().max().unwrap_or(0);
    let mut run = 0i64;
    let mut m1 = 0i64;
    for d in delta.values() {
        run += d;
        m1 = m1.max(run);
    }
    let m1 = m1 as u64;
    Ok(MaxCounts { m0, m1, bound: 2 * m0 + 3 * m1 })
}

/// Counts of a cover, one entry per depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub depths: Vec<u32>,
    pub counts: Vec<u64>,
    pub fitted_dimension: f64,
    pub residual: f64,
}

impl CoverReport {
    /// Fits all depths after the first `skip` entries.
    pub fn new(depths: Vec<u32>, counts: Vec<u64>, skip: usize) -> Result<Self> {
        let fit = fit_dimension(&depths[skip.min(depths.len())..], &counts[skip.min(counts.len())..])?;
        Ok(Self { depths, counts, fitted_dimension: fit.slope, residual: fit.residual })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("depth,count\n");
        for (d, c) in self.depths.iter().zip(&self.counts) {
            let _ = writeln!(out, "{d},{c}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `n,j` rows naming the surviving cells of a front.
pub fn front_dump(front: &CellFront) -> String {
    let mut out = String::from("n,j\n");
    for c in &front.cells {
        let _ = writeln!(out, "{},{}", front.depth, c.index);
    }
    out
}

/// Level-by-level pruned cover of a level set.
#[derive(Clone, Debug)]
pub struct LevelCover {
    /// `counts[i]` is the number of surviving cells at depth `i + 1`.
    pub counts: Vec<u64>,
    pub front: CellFront,
    /// Survivors at every depth when requested.
    pub history: Vec<CellFront>,
}

impl LevelCover {
    pub fn depths(&self) -> Vec<u32> {
        (1..=self.counts.len() as u32).collect()
    }

    /// First depth whose cover is empty.
    pub fn first_empty(&self) -> Option<u32> {
        self.counts.iter().position(|&c| c == 0).map(|i| i as u32 + 1)
    }

    pub fn report(&self, skip: usize) -> Result<CoverReport> {
        CoverReport::new(self.depths(), self.counts.clone(), skip)
    }
}

/// Cells whose closed envelope `[min - 1, max + 1] / 2^n` contains `y`, for depths `1..=depth`.
pub fn cover_level(provider: &SignProvider, y: &BigRational, depth: u32) -> Result<LevelCover> {
    cover_level_inner(provider, y, depth, false)
}

/// As [`cover_level`], keeping the survivors of every depth.
pub fn cover_level_with_history(
    provider: &SignProvider,
    y: &BigRational,
    depth: u32,
) -> Result<LevelCover> {
    cover_level_inner(provider, y, depth, true)
}

fn level_bounds(y: &BigRational, n: u32) -> Result<(i64, i64)> {
    let (fl, ce) = scaled_floor_ceil(y, n);
    match (fl.to_i64(), ce.to_i64()) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::Domain(format!("level {y} too large"))),
    }
}

fn cover_level_inner(
    provider: &SignProvider,
    y: &BigRational,
    depth: u32,
    keep_history: bool,
) -> Result<LevelCover> {
    if depth < 1 {
        return contract("cover depth must be at least 1");
    }
    let mut front = CellFront::root();
    let (fl, ce) = level_bounds(y, 0)?;
    front.cells.retain(|c| c.min() - 1 <= fl && ce <= c.max() + 1);
    let mut counts = Vec::with_capacity(depth as usize);
    let mut history = Vec::new();
    for n in 1..=depth {
        let (fl, ce) = level_bounds(y, n)?;
        let next = front.refine(provider, |c| c.min() - 1 <= fl && ce <= c.max() + 1)?;
        debug_assert!(next.cells.iter().all(|c| front
            .cells
            .binary_search_by_key(&(c.index / 2), |p| p.index)
            .is_ok()));
        front = next;
        counts.push(front.len() as u64);
        if keep_history {
            history.push(front.clone());
        }
    }
    Ok(LevelCover { counts, front, history })
}

/// `k_n = floor(y 4^n / 2 + 1/2)`: the strip pair `J_{n,k-1} ∪ J_{n,k}` centred on `2k/4^n`.
pub fn strip_index(y: &BigRational, n: u32) -> Result<i64> {
    let half = BigRational::new(1.into(), 2.into());
    let t = y * BigRational::from_integer(crate::dyadic::pow2(2 * n)) / BigRational::from_integer(2.into()) + half;
    t.floor()
        .to_integer()
        .to_i64()
        .ok_or_else(|| Error::Domain(format!("level {y} too large at stage {n}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleState {
    pub n: u32,
    pub k: i64,
    pub c: u64,
    pub l: u64,
    pub u: u64,
    pub sigma: u64,
    pub m: u64,
}

impl TripleState {
    pub fn vector(&self) -> [u64; 3] {
        [self.c, self.sigma, self.m]
    }

    fn from_segments(segs: impl Iterator<Item = (i64, i64)> + Clone, n: u32, k: i64) -> Self {
        let (c, _) = count_strip(segs.clone(), k);
        let (_, l) = count_strip(segs.clone(), k - 1);
        let (_, u) = count_strip(segs, k);
        TripleState { n, k, c, l, u, sigma: l + u, m: l.max(u) }
    }
}

/// `(c_n, σ_n, m_n)` of `f_{2n}` relative to `y`.
pub fn triple_at(gf: &GridFunction, y: &BigRational) -> Result<TripleState> {
    let n = require_even(gf.depth())?;
    let k = strip_index(y, n)?;
    Ok(TripleState::from_segments(segments(gf), n, k))
}

/// The next triple from the grid at depth `2(n+1)`.
pub fn triple_step(state: &TripleState, next: &GridFunction, y: &BigRational) -> Result<TripleState> {
    let t = triple_at(next, y)?;
    if t.n != state.n + 1 {
        return contract(format!("expected stage {}, got {}", state.n + 1, t.n));
    }
    if (t.k - 4 * state.k).abs() > 2 {
        return Err(Error::Assertion(format!(
            "strip index jumped from {} to {}",
            state.k, t.k
        )));
    }
    Ok(t)
}

/// `x ≤ M x_prev` componentwise.
pub fn dominated(next: &TripleState, matrix: &RationalMatrix, prev: &TripleState) -> bool {
    let bound = matrix.apply_u64(&prev.vector());
    next.vector()
        .iter()
        .zip(&bound)
        .all(|(a, b)| BigRational::from_integer((*a).into()) <= *b)
}

/// Follows the triple along stages, keeping only the cells that can reach the strips around `y`.
pub struct TripleTracker<'a> {
    provider: &'a SignProvider,
    y: BigRational,
    front: CellFront,
    state: TripleState,
}

impl<'a> TripleTracker<'a> {
    pub fn new(provider: &'a SignProvider, y: &BigRational) -> Result<Self> {
        let front = CellFront::root();
        let k = strip_index(y, 0)?;
        let state = TripleState::from_segments(front.cells.iter().map(|c| (c.left, c.right)), 0, k);
        Ok(Self { provider, y: y.clone(), front, state })
    }

    pub fn state(&self) -> &TripleState {
        &self.state
    }

    pub fn front(&self) -> &CellFront {
        &self.front
    }

    pub fn step(&mut self) -> Result<TripleState> {
        let n = self.state.n + 1;
        let k = strip_index(&self.y, n)?;
        if (k - 4 * self.state.k).abs() > 2 {
            return Err(Error::Assertion(format!("strip index jumped from {} to {k}", self.state.k)));
        }
        // Later windows stay within 2k ± 1.5 at this scale and f moves by less than 1.
        let (lo, hi) = (2 * k - 3, 2 * k + 3);
        let mid = self.front.refine(self.provider, |_| true)?;
        // at odd depth the scale is half as fine: values are half the next even-depth values
        let front = mid.refine(self.provider, |c: &Cell| c.min() <= hi && c.max() >= lo)?;
        self.state = TripleState::from_segments(front.cells.iter().map(|c| (c.left, c.right)), n, k);
        self.front = front;
        Ok(self.state)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeCounts {
    pub z_count: u64,
    pub cup_count: u64,
    /// Cells on which `f_{2n}` vanishes somewhere.
    pub gamma: u64,
}

fn shapes_in(cells: &[Cell]) -> ShapeCounts {
    let gamma: Vec<&Cell> = cells.iter().filter(|c| c.min() <= 0 && c.max() >= 0).collect();
    let mut out = ShapeCounts { gamma: gamma.len() as u64, ..Default::default() };
    for w in gamma.windows(3) {
        if w[1].index != w[0].index + 1 || w[2].index != w[1].index + 1 {
            continue;
        }
        match (w[0].slope(), w[1].slope(), w[2].slope()) {
            (2, 0, 2) | (-2, 0, -2) => out.z_count += 1,
            (-2, 0, 2) => out.cup_count += 1,
            _ => {}
        }
    }
    out
}

/// Z-shapes and cup-shapes among the zero-touching cells of an even-depth grid.
pub fn detect_shapes(gf: &GridFunction) -> Result<ShapeCounts> {
    require_even(gf.depth())?;
    Ok(shapes_in(&gf.to_front().cells))
}

/// Same as [`detect_shapes`] on a front holding every zero-touching cell.
pub fn detect_shapes_front(front: &CellFront) -> Result<ShapeCounts> {
    require_even(front.depth)?;
    Ok(shapes_in(&front.cells))
}

/// Refines a front keeping cells on which `f_n` vanishes (the zero criterion).
pub fn zero_front_step(front: &CellFront, provider: &SignProvider) -> Result<CellFront> {
    front.refine(provider, |c| c.min() <= 0 && c.max() >= 0)
}

/// Largest maximum-set front [`max_set_trace`] will hold.
pub const MAX_TRACE_CELLS: usize = 1 << 22;

/// Cover of the maximum set.
///
/// A cell survives when its larger endpoint value is within `slack` grid units
/// of the largest grid value `M_n`. `slack = 0` is already sound: `f` equals
/// `f_n` at grid points so the maximum is at least `M_n / 2^n`, while on a cell
/// whose values are at most `M_n - 1` the tail bound keeps `f` strictly below it.
pub fn max_set_cover(provider: &SignProvider, depth: u32, slack: i64) -> Result<LevelCover> {
    max_set_trace(provider, depth, slack).map(|(cover, _)| cover)
}

/// [`max_set_cover`] together with the grid maximum `M_n` (in units of `2^-n`) at each depth.
pub fn max_set_trace(provider: &SignProvider, depth: u32, slack: i64) -> Result<(LevelCover, Vec<i64>)> {
    if depth < 1 {
        return contract("cover depth must be at least 1");
    }
    let mut front = CellFront::root();
    let mut counts = Vec::with_capacity(depth as usize);
    let mut tops = Vec::with_capacity(depth as usize);
    for _ in 1..=depth {
        let all = front.refine(provider, |_| true)?;
        let top = all.cells.iter().map(Cell::max).max().unwrap_or(0);
        front = CellFront {
            depth: all.depth,
            cells: all.cells.into_iter().filter(|c| c.max() >= top - slack).collect(),
        };
        if front.len() > MAX_TRACE_CELLS {
            return Err(Error::Resource(format!(
                "maximum-set front has {} cells at depth {}",
                front.len(),
                front.depth
            )));
        }
        counts.push(front.len() as u64);
        tops.push(top);
    }
    Ok((LevelCover { counts, front, history: Vec::new() }, tops))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square deviation of `log2 count` from the fitted line.
    pub residual: f64,
}

/// Least-squares slope of `log2 count` against `depth` (cells of width `2^-depth`).
pub fn fit_dimension(depths: &[u32], counts: &[u64]) -> Result<DimensionFit> {
    if depths.len() != counts.len() {
        return contract("depths and counts differ in length");
    }
    if depths.len() < 4 {
        return contract(format!("dimension fit needs at least 4 depths, got {}", depths.len()));
    }
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyLevelSet(depths[i]));
    }
    let xs: Vec<f64> = depths.iter().map(|&d| d as f64).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).log2()).collect();
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / len)
        .sqrt();
    Ok(DimensionFit { slope, intercept, residual })
}

/// Mean of `log2(count[i + lag] / count[i]) / (depth[i + lag] - depth[i])`.
///
/// Less sensitive than the least-squares slope to a constant prefactor with a
/// periodic correction, such as counts driven by a two-stage matrix.
pub fn ratio_dimension(depths: &[u32], counts: &[u64], lag: usize) -> Result<f64> {
    if depths.len() != counts.len() || lag == 0 || depths.len() <= lag {
        return contract("ratio fit needs more depths than the lag");
    }
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyLevelSet(depths[i]));
    }
    let terms: Vec<f64> = (0..depths.len() - lag)
        .map(|i| {
            (counts[i + lag] as f64 / counts[i] as f64).log2()
                / (depths[i + lag] as f64 - depths[i] as f64)
        })
        .collect();
    Ok(terms.iter().sum::<f64>() / terms.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::rat;
    use crate::rng::Probability;
    use crate::signs::Sign;

    fn all_plus(n: u32) -> GridFunction {
        GridFunction::build(&SignProvider::AllPlus, n).unwrap()
    }

    #[test]
    fn strip_examples() {
        let gf = all_plus(2);
        let s = strip_counts(&gf, 1).unwrap();
        assert_eq!((s.n0, s.n1), (2, 0));
        let s = strip_counts(&gf, 0).unwrap();
        assert_eq!((s.n0, s.n1), (0, 2));
        let s = strip_counts(&gf, 5).unwrap();
        assert_eq!((s.n0, s.n1), (0, 0));
        assert!(strip_counts(&all_plus(3), 0).is_err());
    }

    #[test]
    fn max_count_examples() {
        let m = max_counts(&all_plus(2)).unwrap();
        assert_eq!((m.m0, m.m1, m.bound), (2, 2, 10));
        let m = max_counts(&GridFunction::zero()).unwrap();
        assert_eq!((m.m0, m.m1, m.bound), (1, 0, 2));
    }

    #[test]
    fn max_counts_agree_with_strip_scan() {
        for seed in 0..20 {
            let p = SignProvider::model2(seed, Probability::half());
            let gf = GridFunction::build(&p, 8).unwrap();
            let m = max_counts(&gf).unwrap();
            let (mut m0, mut m1) = (0, 0);
            for k in -200..200 {
                let s = strip_counts(&gf, k).unwrap();
                m0 = m0.max(s.n0);
                m1 = m1.max(s.n1);
            }
            assert_eq!((m.m0, m.m1), (m0, m1));
        }
    }

    #[test]
    fn cover_above_range_is_empty() {
        let c = cover_level(&SignProvider::AllPlus, &rat(3, 2), 1).unwrap();
        assert_eq!(c.counts, vec![0]);
        // the tail bound still allows 3/4 at depth 1 but not at depth 4
        let c = cover_level(&SignProvider::AllPlus, &rat(3, 4), 6).unwrap();
        assert_eq!(c.counts[0], 2);
        assert!(c.first_empty().is_some_and(|d| d <= 4));
    }

    #[test]
    fn takagi_two_thirds() {
        let c = cover_level(&SignProvider::AllPlus, &rat(2, 3), 20).unwrap();
        let fit = fit_dimension(&(8..=20).collect::<Vec<_>>(), &c.counts[7..]).unwrap();
        assert!((fit.slope - 0.5).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn triple_at_zero_level() {
        let gf = all_plus(2);
        let t = triple_at(&gf, &rat(0, 1)).unwrap();
        // segments: (0,2) (2,2) (2,2) (2,0); strip index 0
        assert_eq!((t.k, t.c, t.l, t.u), (0, 0, 0, 2));
        assert_eq!(t.vector(), [0, 2, 2]);
    }

    #[test]
    fn tracker_matches_dense() {
        for seed in 0..10 {
            let p = SignProvider::model2(seed, Probability::half());
            let gf = GridFunction::build(&p, 14).unwrap();
            let y = rat(gf.values()[37 * 16] + 1, 1 << 14);
            let mut tr = TripleTracker::new(&p, &y).unwrap();
            for n in 1..=7u32 {
                let s = tr.step().unwrap();
                let dense = triple_at(&GridFunction::build(&p, 2 * n).unwrap(), &y).unwrap();
                assert_eq!(s, dense);
            }
        }
    }

    #[test]
    fn shape_counts() {
        assert_eq!(detect_shapes(&all_plus(6)).unwrap().z_count, 0);
        // slopes (2,0,2) across three cells touching the axis: f_2 with signs (+, -) at level 1
        let p = SignProvider::ConstantLevels { levels: vec![Sign::Minus, Sign::Plus], repeat: false };
        let gf = GridFunction::build(&p, 2).unwrap();
        assert_eq!(gf.slopes(), &[0, -2, 2, 0]);
        let s = detect_shapes(&gf).unwrap();
        assert_eq!(s.cup_count, 0);
        assert_eq!(s.gamma, 4);
    }

    #[test]
    fn fits() {
        let depths: Vec<u32> = (1..=8).map(|n| 2 * n).collect();
        let counts: Vec<u64> = (1..=8).map(|n| 1u64 << n).collect();
        assert!((fit_dimension(&depths, &counts).unwrap().slope - 0.5).abs() < 1e-12);
        let fit = fit_dimension(&depths, &[5; 8]).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert!(matches!(
            fit_dimension(&[1, 2, 3, 4], &[1, 0, 1, 1]),
            Err(Error::EmptyLevelSet(2))
        ));
        assert!(fit_dimension(&[1, 2, 3], &[1, 1, 1]).is_err());
        assert!((ratio_dimension(&depths, &counts, 2).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn max_cover_depth_one() {
        let c = max_set_cover(&SignProvider::AllPlus, 1, 0).unwrap();
        // f_1 peaks at 1/2, shared by both cells
        assert_eq!(c.front.cells.len(), 2);
    }
}
