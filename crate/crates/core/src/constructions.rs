//! Explicit members of the family with large or structured level sets.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{pow2, rat, scaled_floor_ceil};
use crate::error::{contract, domain, Error, Result};
use crate::levelsets::{cover_level, max_counts, strip_counts};
use crate::piecewise::{partial_sum, Cell, CellFront, GridFunction, MAX_SPARSE_DEPTH};
use crate::signs::{ExplicitTree, Sign, SignProvider};
use crate::spectra::{moran_dimension_geometric, named, RationalMatrix};

pub const MAX_EXTREMAL_STAGES: u32 = 13;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Baseline {
    pub n: u32,
    /// Numerator over `4^n`.
    pub scaled: i64,
}

impl Baseline {
    pub fn value(&self) -> BigRational {
        BigRational::new(self.scaled.into(), pow2(2 * self.n))
    }
}

/// Cell types within the kept set: 1 flat on the baseline, 2 sloped on the side the
/// baseline is about to move towards, 3 sloped on the other side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedCellSet {
    pub n: u32,
    pub cells: Vec<(u64, u8)>,
}

impl TypedCellSet {
    pub fn type_counts(&self) -> [u64; 3] {
        let mut t = [0u64; 3];
        for &(_, ty) in &self.cells {
            t[ty as usize - 1] += 1;
        }
        t
    }
}

pub struct ExtremalConstruction {
    pub provider: SignProvider,
    pub baselines: Vec<Baseline>,
    pub stages: Vec<TypedCellSet>,
}

impl ExtremalConstruction {
    pub fn type_counts(&self) -> Vec<[u64; 3]> {
        self.stages.iter().map(TypedCellSet::type_counts).collect()
    }

    pub fn total_counts(&self) -> Vec<u64> {
        self.stages.iter().map(|s| s.cells.len() as u64).collect()
    }

    /// Types 1 and 2 at even stages.
    pub fn two_stage_counts(&self) -> Vec<[u64; 2]> {
        self.type_counts().iter().step_by(2).map(|t| [t[0], t[1]]).collect()
    }

    /// Baseline table `n,y_num,y_den,y`.
    pub fn baselines_csv(&self) -> String {
        let mut out = String::from("n,y_num,y_den,y\n");
        for b in &self.baselines {
            let den = pow2(2 * b.n);
            out.push_str(&format!("{},{},{},{:.12}\n", b.n, b.scaled, den, b.value().to_f64().unwrap_or(f64::NAN)));
        }
        out
    }

    /// Cell table `n,j,type`.
    pub fn cells_csv(&self) -> String {
        let mut out = String::from("n,j,type\n");
        for s in &self.stages {
            for &(j, t) in &s.cells {
                out.push_str(&format!("{},{},{}\n", s.n, j, t));
            }
        }
        out
    }
}

/// Direction in which the baseline moves after stage `n`.
fn baseline_step(n: u32) -> i64 {
    match n % 4 {
        0 => 1,
        2 => -1,
        _ => 0,
    }
}

/// Signs `(ω_{2n,j}, ω_{2n+1,2j}, ω_{2n+1,2j+1})` on a kept cell.
fn extremal_signs(n: u32, cell: &Cell, base: i64) -> Result<[i64; 3]> {
    let s = cell.slope();
    let on_base = (cell.left == base) as u8 + (cell.right == base) as u8;
    match s {
        0 if on_base != 2 => {
            return Err(Error::Assertion(format!("flat cell {} off the baseline", cell.index)));
        }
        2 | -2 if on_base != 1 => {
            return Err(Error::Assertion(format!(
                "sloped cell {} touches the baseline at {on_base} endpoints",
                cell.index
            )));
        }
        0 | 2 | -2 => {}
        _ => return Err(Error::Assertion(format!("cell {} has slope {s}", cell.index))),
    }
    let below = cell.left <= base && cell.right <= base;
    let hold = if below { [1, 1, 1] } else { [-1, -1, -1] };
    Ok(match (n % 4, s) {
        (0, 0) => [1, 1, 1],
        (0, 2) => [-1, 1, -1],
        (0, _) => [-1, -1, 1],
        (1, 0) => [-1, 1, 1],
        (2, 0) => [-1, -1, -1],
        // point reflection of the first case: a rising cell below the baseline
        // mirrors a rising cell above it
        (2, 2) => [1, 1, -1],
        (2, _) => [1, -1, 1],
        (3, 0) => [1, -1, -1],
        _ => hold,
    })
}

fn cell_type(cell: &Cell, base: i64, direction: i64) -> u8 {
    if cell.slope() == 0 {
        return 1;
    }
    let other = if cell.left == base { cell.right } else { cell.left };
    if (other - base).signum() == direction {
        2
    } else {
        3
    }
}

/// Builds `f_{2n}` stage by stage so that the flat pieces on a moving baseline
/// multiply as fast as possible. Returns the signs, the baselines `y_0..y_depth`
/// and the typed kept cells of every stage.
pub fn extremal_flexible(depth: u32) -> Result<ExtremalConstruction> {
    if depth > MAX_EXTREMAL_STAGES {
        return Err(Error::Resource(format!("extremal construction limited to {MAX_EXTREMAL_STAGES} stages")));
    }
    let mut scaled = vec![0i64];
    for n in 0..depth + 2 {
        scaled.push(4 * scaled[n as usize] + 2 * baseline_step(n));
    }
    let baselines: Vec<Baseline> =
        (0..=depth).map(|n| Baseline { n, scaled: scaled[n as usize] }).collect();

    let mut tree = ExplicitTree::new(2 * depth, Sign::Plus);
    let mut kept = vec![Cell { index: 0, left: 0, right: 0 }];
    let mut stages = Vec::with_capacity(depth as usize + 1);
    for n in 0..=depth {
        let base = scaled[n as usize];
        // y_{n+2} - y_n has the sign of the next nonzero step
        let direction = if baseline_step(n) != 0 { baseline_step(n) } else { baseline_step(n + 1) };
        let cells: Vec<(u64, u8)> = kept.iter().map(|c| (c.index, cell_type(c, base, direction))).collect();
        stages.push(TypedCellSet { n, cells });
        if n == depth {
            break;
        }
        let next_base = scaled[n as usize + 1];
        let expanded: Vec<Result<([i64; 3], Vec<Cell>)>> = kept
            .par_iter()
            .map(|c| {
                let w = extremal_signs(n, c, base)?;
                let [a, b] = c.children(w[0]);
                let subcells: Vec<Cell> = a
                    .children(w[1])
                    .into_iter()
                    .chain(b.children(w[2]))
                    .filter(|g| g.min() <= next_base && next_base <= g.max())
                    .collect();
                Ok((w, subcells))
            })
            .collect();
        let mut next = Vec::new();
        for (c, res) in kept.iter().zip(expanded) {
            let (w, subcells) = res?;
            tree.set(2 * n, c.index, Sign::from_value(w[0])?);
            tree.set(2 * n + 1, 2 * c.index, Sign::from_value(w[1])?);
            tree.set(2 * n + 1, 2 * c.index + 1, Sign::from_value(w[2])?);
            next.extend(subcells);
        }
        kept = next;
    }
    Ok(ExtremalConstruction { provider: SignProvider::ExplicitTree(tree), baselines, stages })
}

/// `8/17`, the limit of the extremal baselines.
pub fn extremal_level() -> BigRational {
    rat(8, 17)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RigidLevel {
    pub y: BigRational,
    /// `k_0 = 0, k_1, ...`: the flat pieces of `f_{2n}` sit at `2k_n / 4^n`.
    pub k_path: Vec<i64>,
}

/// The level `Σ (ω_{2n} + ω_{2n+1}) / 4^{n+1}` hit by every flat piece, for level-constant signs.
pub fn rigid_extremal_level(levels: &[Sign]) -> Result<RigidLevel> {
    if levels.len() % 2 != 0 {
        return domain(format!("need an even number of level signs, got {}", levels.len()));
    }
    let mut k_path = vec![0i64];
    let mut y = BigRational::zero();
    for (n, pair) in levels.chunks(2).enumerate() {
        let sum = pair[0].value() + pair[1].value();
        y += BigRational::new(sum.into(), pow2(2 * (n as u32 + 1)));
        let k = k_path[n];
        k_path.push(4 * k + sum / 2);
    }
    Ok(RigidLevel { y, k_path })
}

/// Checks `M⁰_n <= 2^n`, `M¹_n <= 2(2^n - 1)` and `N⁰_{n,k_n} = 2^n` for the
/// level-constant function with the given signs.
pub fn verify_rigid_bounds(levels: &[Sign]) -> Result<()> {
    let rigid = rigid_extremal_level(levels)?;
    let provider = SignProvider::constant_levels(levels.to_vec());
    let mut gf = GridFunction::zero();
    for n in 0..=(levels.len() / 2) as u32 {
        if n > 0 {
            gf = gf.refine(&provider)?.refine(&provider)?;
        }
        let m = max_counts(&gf)?;
        let cap = 1u64 << n;
        if m.m0 > cap || m.m1 > 2 * (cap - 1) {
            return Err(Error::Assertion(format!(
                "stage {n}: max counts ({}, {}) exceed ({cap}, {})",
                m.m0,
                m.m1,
                2 * (cap - 1)
            )));
        }
        let s = strip_counts(&gf, rigid.k_path[n as usize])?;
        if s.n0 != cap {
            return Err(Error::Assertion(format!("stage {n}: {} flat cells on the level path, expected {cap}", s.n0)));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfSimilarSample {
    pub m: u32,
    pub x: BigRational,
    pub residual: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrayZeroPoints {
    /// `x_0 = 1, x_1, ..., x_{m_max}`.
    pub x_list: Vec<BigRational>,
    pub x_star: BigRational,
    pub samples: Vec<SelfSimilarSample>,
    pub dimension: f64,
}

/// The accumulation points `x_m = 1 - Σ_{i<=m} 4^{-(2i-1)}` of the Gray-Takagi zero set,
/// with the reflection `f(x) = -4^{-(2m-1)} f(4^{2m-1}(x_{m-1} - x))` checked on
/// dyadic samples of each `[x_m, x_{m-1}]`.
pub fn gray_zero_points(m_max: u32) -> Result<GrayZeroPoints> {
    if m_max < 1 {
        return domain("m_max must be at least 1");
    }
    if 2 * m_max + 6 > MAX_SPARSE_DEPTH {
        return Err(Error::Resource(format!("m_max {m_max} too large")));
    }
    let gray = SignProvider::Rademacher;
    let mut x_list = vec![BigRational::one()];
    for i in 1..=m_max {
        let prev = x_list.last().unwrap().clone();
        x_list.push(prev - BigRational::new(1.into(), pow2(2 * (2 * i - 1))));
    }
    let mut samples = Vec::new();
    for m in 1..=m_max {
        let (hi, lo) = (&x_list[m as usize - 1], &x_list[m as usize]);
        let scale = BigRational::from_integer(pow2(2 * (2 * m - 1)));
        for i in 0..=16u32 {
            let x = lo + (hi - lo) * rat(i as i64, 16);
            let t = &scale * (hi - &x);
            // both points are dyadic with exponent below `exact`, so f equals f_exact there
            let exact = 2 * (2 * m - 1) + 4;
            let fx = partial_sum(&gray, &x, exact)?;
            let ft = partial_sum(&gray, &t, exact)?;
            let residual = (fx + ft / &scale).abs().to_f64().unwrap_or(f64::INFINITY);
            let slack = 2f64.powi(-(exact as i32)) * (1.0 + 1.0 / scale.to_f64().unwrap());
            samples.push(SelfSimilarSample { m, x, residual, slack });
        }
    }
    let dimension = moran_dimension_geometric(1, &rat(1, 4), &rat(1, 16))?;
    Ok(GrayZeroPoints { x_list, x_star: rat(11, 15), samples, dimension })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Slopes `(2, 0)`.
    Upright,
    /// Slopes `(0, 2)`.
    Rotated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrayStage {
    pub n: u32,
    /// Numerator over `4^n`.
    pub baseline: i64,
    /// First cell index (depth `2n`) of each copy; a copy spans two cells.
    pub copies: Vec<u64>,
    pub orientation: Orientation,
}

impl GrayStage {
    pub fn y(&self) -> BigRational {
        BigRational::new(self.baseline.into(), pow2(2 * self.n))
    }

    /// Cells of depth `2n` covering the copies.
    pub fn cells(&self) -> Vec<u64> {
        self.copies.iter().flat_map(|&j| [j, j + 1]).collect()
    }
}

fn find_copies(
    provider: &SignProvider,
    depth: u32,
    pair: [Cell; 2],
    want: Orientation,
    base: i64,
) -> Vec<u64> {
    let refine = |c: &Cell, d: u32| {
        let [a, b] = c.children(provider.sign(d, c.index).value());
        let [a0, a1] = a.children(provider.sign(d + 1, a.index).value());
        let [b0, b1] = b.children(provider.sign(d + 1, b.index).value());
        [a0, a1, b0, b1]
    };
    let sub: Vec<Cell> = refine(&pair[0], depth).into_iter().chain(refine(&pair[1], depth)).collect();
    let pattern = match want {
        Orientation::Upright => (2, 0),
        Orientation::Rotated => (0, 2),
    };
    (0..7)
        .filter(|&i| (sub[i].slope(), sub[i + 1].slope()) == pattern)
        .filter(|&i| {
            let flat = if pattern.0 == 0 { &sub[i] } else { &sub[i + 1] };
            flat.left == base
        })
        .map(|i| sub[i].index)
        .collect()
}

/// Tracks the similar copies of the two-segment figure `X` in the Gray-Takagi
/// graph whose flat parts sit on the baselines converging to `2/5`.
pub fn gray_level_two_fifths(depth: u32) -> Result<Vec<GrayStage>> {
    if depth < 1 {
        return domain("depth must be at least 1");
    }
    if 2 * depth > MAX_SPARSE_DEPTH || depth > 24 {
        return Err(Error::Resource(format!("depth {depth} too large")));
    }
    let gray = SignProvider::Rademacher;
    let gf2 = GridFunction::build(&gray, 2)?;
    let first = GrayStage { n: 1, baseline: 2, copies: vec![0], orientation: Orientation::Upright };
    if gf2.slopes()[..2] != [2, 0] || gf2.values()[1] != 2 {
        return Err(Error::Assertion("f_2 does not start with slopes (2, 0) at height 1/2".into()));
    }
    let mut stages = vec![first];
    let mut front: Vec<[Cell; 2]> = vec![[
        Cell { index: 0, left: gf2.values()[0], right: gf2.values()[1] },
        Cell { index: 1, left: gf2.values()[1], right: gf2.values()[2] },
    ]];
    for n in 1..depth {
        let prev = stages.last().unwrap();
        let want = match prev.orientation {
            Orientation::Upright => Orientation::Rotated,
            Orientation::Rotated => Orientation::Upright,
        };
        // y_{n+1} = y_n + (1/2)(-1/4)^n, scaled by 4^{n+1}
        let base = 4 * prev.baseline + if n % 2 == 0 { 2 } else { -2 };
        let found: Vec<Result<Vec<[Cell; 2]>>> = front
            .par_iter()
            .map(|pair| {
                let copies = find_copies(&gray, 2 * n, pair.clone(), want, base);
                if copies.len() != 2 {
                    return Err(Error::Assertion(format!(
                        "copy at cell {} has {} children copies",
                        pair[0].index,
                        copies.len()
                    )));
                }
                Ok(copies
                    .into_iter()
                    .map(|j| {
                        let grand = expand_two(&gray, 2 * n, pair, j);
                        [grand[0], grand[1]]
                    })
                    .collect())
            })
            .collect();
        let mut next = Vec::new();
        for r in found {
            next.extend(r?);
        }
        stages.push(GrayStage {
            n: n + 1,
            baseline: base,
            copies: next.iter().map(|p| p[0].index).collect(),
            orientation: want,
        });
        front = next;
    }
    Ok(stages)
}

fn expand_two(provider: &SignProvider, depth: u32, pair: &[Cell; 2], j: u64) -> [Cell; 2] {
    let mut sub = Vec::with_capacity(8);
    for c in pair {
        let [a, b] = c.children(provider.sign(depth, c.index).value());
        sub.extend(a.children(provider.sign(depth + 1, a.index).value()));
        sub.extend(b.children(provider.sign(depth + 1, b.index).value()));
    }
    let i = sub.iter().position(|c| c.index == j).expect("copy inside parent");
    [sub[i], sub[i + 1]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlopeCell {
    pub n: u32,
    pub j: u64,
}

impl SlopeCell {
    pub fn interval(&self) -> (BigRational, BigRational) {
        let den = pow2(self.n);
        (
            BigRational::new(BigInt::from(self.j), den.clone()),
            BigRational::new(BigInt::from(self.j + 1), den),
        )
    }
}

/// The unique cell of depth `|m|` on which `f_{|m|}` has slope `m`.
pub fn slope_interval(provider: &SignProvider, m: i64) -> Result<SlopeCell> {
    let n = m.unsigned_abs();
    if n >= 64 {
        return domain(format!("slope {m} needs more than 63 levels"));
    }
    let n = n as u32;
    let target = m.signum();
    let (mut j, mut s) = (0u64, 0i64);
    for level in 0..n {
        let w = provider.sign(level, j).value();
        if w == target {
            j = 2 * j;
            s += w;
        } else {
            j = 2 * j + 1;
            s -= w;
        }
    }
    debug_assert_eq!(s, m);
    if n <= 16 {
        let gf = GridFunction::build(provider, n)?;
        let hits: Vec<usize> = gf
            .slopes()
            .iter()
            .enumerate()
            .filter(|(_, &sl)| sl as i64 == m)
            .map(|(i, _)| i)
            .collect();
        if hits != [j as usize] {
            return Err(Error::Assertion(format!("slope {m} found on cells {hits:?}, expected [{j}]")));
        }
    }
    Ok(SlopeCell { n, j })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineReduction {
    pub provider: SignProvider,
    pub level: BigRational,
}

/// `g(x) = -Σ_{k<m} 2^{-k} φ(2^k x) + 2^{-m} f(2^m x)`: on `[0, 2^{-m}]` the line
/// `y = m x + b` through the graph of `f` becomes the level `b / 2^m` of `g`.
pub fn line_reduction(provider: &SignProvider, m: i64, b: &BigRational) -> Result<LineReduction> {
    if m < 0 {
        let neg = SignProvider::Negated(Box::new(provider.clone()));
        return line_reduction(&neg, -m, &-b.clone());
    }
    if m == 0 {
        return Ok(LineReduction { provider: provider.clone(), level: b.clone() });
    }
    if m >= MAX_SPARSE_DEPTH as i64 {
        return domain(format!("slope {m} too steep"));
    }
    let shift = m as u32;
    Ok(LineReduction {
        provider: SignProvider::Rescaled { shift, prefix: Sign::Minus, inner: Box::new(provider.clone()) },
        level: b / BigRational::from_integer(pow2(shift)),
    })
}

/// Cells of depth `1..=depth` whose envelope meets the line `y = m x + b`.
pub fn line_cover(provider: &SignProvider, m: i64, b: &BigRational, depth: u32) -> Result<Vec<u64>> {
    if depth < 1 {
        return contract("cover depth must be at least 1");
    }
    if depth > 40 || m.unsigned_abs() > 1 << 20 {
        return Err(Error::Resource("line cover limited to depth 40 and |slope| <= 2^20".into()));
    }
    let keep = |c: &Cell, d: u32| -> bool {
        let (fl, ce) = scaled_floor_ceil(b, d);
        let (fl, ce) = (fl.to_i128().unwrap_or(i128::MAX), ce.to_i128().unwrap_or(i128::MIN));
        let gl = c.left as i128 - m as i128 * c.index as i128;
        let gr = c.right as i128 - m as i128 * (c.index as i128 + 1);
        gl.min(gr) - 1 <= fl && ce <= gl.max(gr) + 1
    };
    let mut front = CellFront::root();
    front.cells.retain(|c| keep(c, 0));
    let mut counts = Vec::with_capacity(depth as usize);
    for d in 1..=depth {
        front = front.refine(provider, |c| keep(c, d))?;
        counts.push(front.len() as u64);
    }
    Ok(counts)
}

/// `g(x) = Σ_{k<m} 2^{-k} φ(2^k x) + 2^{-m} h(2^m x)` with `h` the extremal function:
/// the line of slope `m` and intercept `(8/17) 2^{-m}` meets the graph of `g` in a
/// scaled copy of the extremal level set.
pub fn extremal_line_function(m: u32, stages: u32) -> Result<(SignProvider, BigRational)> {
    let h = extremal_flexible(stages)?.provider;
    let g = SignProvider::Rescaled { shift: m, prefix: Sign::Plus, inner: Box::new(h) };
    Ok((g, extremal_level() / BigRational::from_integer(pow2(m))))
}

/// `A` at even stages, `B` at odd stages.
pub fn stage_matrix(n: u32) -> RationalMatrix {
    if n % 2 == 0 {
        named::a()
    } else {
        named::b()
    }
}

/// Counts at level `y` restricted to `[0, 2^{-shift}]`.
pub fn cover_counts_left(provider: &SignProvider, y: &BigRational, depth: u32, shift: u32) -> Result<Vec<u64>> {
    let cover = crate::levelsets::cover_level_with_history(provider, y, depth)?;
    Ok(cover
        .history
        .iter()
        .map(|f| {
            let limit = if f.depth >= shift { 1u64 << (f.depth - shift) } else { 1 };
            f.cells.iter().filter(|c| c.index < limit).count() as u64
        })
        .collect())
}

/// Cover counts of the Gray-Takagi level `2/5`.
pub fn gray_two_fifths_cover(depth: u32) -> Result<Vec<u64>> {
    Ok(cover_level(&SignProvider::Rademacher, &rat(2, 5), depth)?.counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelsets::ratio_dimension;
    use crate::spectra::named;

    fn signs(s: &str) -> Vec<Sign> {
        s.chars().map(|c| if c == '+' { Sign::Plus } else { Sign::Minus }).collect()
    }

    #[test]
    fn extremal_baselines_and_counts() {
        let e = extremal_flexible(6).unwrap();
        let ys: Vec<BigRational> = e.baselines.iter().map(Baseline::value).collect();
        assert_eq!(ys[1..4], [rat(1, 2), rat(1, 2), rat(15, 32)]);
        assert_eq!(e.total_counts(), vec![1, 4, 12, 42, 120, 402, 1152]);
        let t = e.type_counts();
        for n in 0..6 {
            let want = stage_matrix(n as u32).apply_u64(&t[n]);
            let got: Vec<BigRational> = t[n + 1].iter().map(|&v| BigRational::from_integer(v.into())).collect();
            assert_eq!(got, want, "stage {n}");
        }
        let mhat = named::m_hat();
        let mut v = vec![rat(1, 1), rat(0, 1)];
        for pair in e.two_stage_counts() {
            let got = vec![BigRational::from_integer(pair[0].into()), BigRational::from_integer(pair[1].into())];
            assert_eq!(got, v);
            v = mhat.apply(&v);
        }
    }

    #[test]
    fn extremal_cells_stay_on_baseline() {
        let e = extremal_flexible(5).unwrap();
        for n in 0..=5u32 {
            let gf = GridFunction::build(&e.provider, 2 * n).unwrap();
            let base = e.baselines[n as usize].scaled;
            for &(j, _) in &e.stages[n as usize].cells {
                let (lo, hi) = gf.cell_range(j as usize);
                assert!(lo <= base && base <= hi);
                assert!([-2, 0, 2].contains(&gf.slopes()[j as usize]));
            }
            if n > 0 {
                let parents: Vec<u64> = e.stages[n as usize - 1].cells.iter().map(|c| c.0).collect();
                assert!(e.stages[n as usize].cells.iter().all(|c| parents.contains(&(c.0 / 4))));
            }
        }
    }

    #[test]
    fn extremal_dimension_estimate() {
        let e = extremal_flexible(11).unwrap();
        let counts = e.total_counts();
        let depths: Vec<u32> = (0..=11).map(|n| 2 * n).collect();
        let d = ratio_dimension(&depths[6..], &counts[6..], 2).unwrap();
        assert!((d - named::flexible_dimension()).abs() < 2e-3, "{d}");
    }

    #[test]
    fn rigid_levels() {
        let all = rigid_extremal_level(&signs("++++++++++")).unwrap();
        assert_eq!(all.y, rat(2, 3) * (rat(1, 1) - rat(1, 1024)));
        assert_eq!(all.k_path[..3], [0, 1, 5]);
        let alt = rigid_extremal_level(&signs("+-+-+-+-")).unwrap();
        assert_eq!(alt.y, rat(0, 1));
        assert!(alt.k_path.iter().all(|&k| k == 0));
        let per = rigid_extremal_level(&signs("++--++--++--++--++--")).unwrap();
        assert!((per.y.to_f64().unwrap() - 0.4).abs() < 1e-6);
        assert!(rigid_extremal_level(&signs("+++")).is_err());
        for n in 0..per.k_path.len() {
            assert_eq!(BigRational::new((2 * per.k_path[n]).into(), pow2(2 * n as u32)),
                rigid_extremal_level(&signs(&"++--++--++--++--++--"[..2 * n])).unwrap().y);
        }
        verify_rigid_bounds(&signs("+-++--+-")).unwrap();
    }

    #[test]
    fn gray_points() {
        let g = gray_zero_points(4).unwrap();
        assert_eq!(g.x_list[1], rat(3, 4));
        assert_eq!(g.x_star, rat(11, 15));
        let tail = &g.x_list[4] - &g.x_star;
        assert!(tail.is_positive() && tail < rat(1, 1 << 12));
        for s in &g.samples {
            assert!(s.residual <= s.slack, "{s:?}");
        }
        assert!((g.dimension - named::zero_set_dimension()).abs() < 1e-12);
    }

    #[test]
    fn gray_two_fifths_copies() {
        let stages = gray_level_two_fifths(8).unwrap();
        assert_eq!(stages[0].y(), rat(1, 2));
        assert_eq!(stages[1].y(), rat(3, 8));
        assert_eq!(stages[2].y(), rat(13, 32));
        assert_eq!(stages[1].cells(), vec![2, 3, 6, 7]);
        let cover = gray_two_fifths_cover(16).unwrap();
        for s in &stages {
            assert_eq!(s.copies.len() as u64, 1 << (s.n - 1));
            let depth = 2 * s.n;
            let front = crate::levelsets::cover_level_with_history(&SignProvider::Rademacher, &rat(2, 5), depth)
                .unwrap();
            let idx: Vec<u64> = front.front.cells.iter().map(|c| c.index).collect();
            assert!(s.cells().iter().all(|j| idx.binary_search(j).is_ok()), "stage {}", s.n);
            assert!(cover[depth as usize - 1] >= s.cells().len() as u64);
        }
    }

    #[test]
    fn slope_cells() {
        assert_eq!(slope_interval(&SignProvider::AllPlus, 2).unwrap(), SlopeCell { n: 2, j: 0 });
        assert_eq!(slope_interval(&SignProvider::AllPlus, -2).unwrap(), SlopeCell { n: 2, j: 3 });
        assert_eq!(slope_interval(&SignProvider::AllPlus, 0).unwrap(), SlopeCell { n: 0, j: 0 });
        for n in 1..=16 {
            assert_eq!(slope_interval(&SignProvider::Rademacher, n).unwrap().j, 0);
        }
        let p = SignProvider::model2(9, crate::rng::Probability::half());
        for m in -12..=12 {
            slope_interval(&p, m).unwrap();
        }
    }

    #[test]
    fn line_reduction_matches_direct_line_cover() {
        for (m, b) in [(1i64, rat(1, 8)), (2, rat(-1, 3)), (-1, rat(3, 5)), (3, rat(-2, 1))] {
            let red = line_reduction(&SignProvider::AllPlus, m, &b).unwrap();
            let direct = line_cover(&SignProvider::AllPlus, m, &b, 10).unwrap();
            let shift = m.unsigned_abs() as u32;
            let via = cover_counts_left(&red.provider, &red.level, 10 + shift, shift).unwrap();
            assert_eq!(direct[..], via[shift as usize..], "m={m} b={b}");
        }
        let same = line_reduction(&SignProvider::Rademacher, 0, &rat(1, 3)).unwrap();
        assert_eq!(same.provider, SignProvider::Rademacher);
        assert_eq!(same.level, rat(1, 3));
    }

    #[test]
    fn line_cover_brute_force() {
        // exact rational scan of f_d - (x + b) on the grid
        let b = rat(1, 8);
        let counts = line_cover(&SignProvider::AllPlus, 1, &b, 8).unwrap();
        for d in 1..=8u32 {
            let den = BigRational::from_integer(pow2(d));
            let h = |j: u64| {
                let x = BigRational::new(BigInt::from(j), pow2(d));
                partial_sum(&SignProvider::AllPlus, &x, d).unwrap() - &x - &b
            };
            let tol = BigRational::one() / &den;
            let brute = (0..1u64 << d)
                .filter(|&j| {
                    let (a, c) = (h(j), h(j + 1));
                    let lo = if a < c { a.clone() } else { c.clone() };
                    let hi = if a < c { c } else { a };
                    &lo - &tol <= BigRational::zero() && BigRational::zero() <= &hi + &tol
                })
                .count() as u64;
            assert_eq!(counts[d as usize - 1], brute, "depth {d}");
        }
    }

    #[test]
    fn extremal_line_growth() {
        let (g, c) = extremal_line_function(2, 8).unwrap();
        let counts = line_cover(&g, 2, &c, 16).unwrap();
        let direct = cover_level(&extremal_flexible(8).unwrap().provider, &extremal_level(), 14).unwrap().counts;
        // the slope-2 line sees the extremal level set in the left quarter
        for d in 4..=14usize {
            assert!(counts[d + 1] >= direct[d - 1], "depth {d}");
        }
    }
}
