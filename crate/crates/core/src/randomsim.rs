//! Seeded Monte Carlo for the random models: zero sets, maximum sets, the
//! embedded branching process and simple random walk hitting times.
//!
//! Every trial is keyed by its seed alone, so results do not depend on the
//! number of worker threads or on scheduling.

use std::collections::BTreeMap;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{contract, domain, Error, Result};
use crate::levelsets::{detect_shapes_front, fit_dimension, max_set_trace, zero_front_step};
use crate::piecewise::{Cell, CellFront, MAX_SPARSE_DEPTH};
use crate::rng::{self, Probability, Stream};
use crate::signs::{Sign, SignProvider};
use crate::spectra::{a_k_family, psi1, AkVariant, IdentityReport};

/// Fronts larger than this stop a trace early.
pub const FRONT_CAP: usize = 1 << 20;

/// Branching populations this large are treated as surviving.
const GW_CAP: u64 = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl Estimate {
    /// Sample mean with standard error `sd / sqrt(n)` (sample sd, `n - 1` denominator).
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return contract(format!("an estimate needs at least 2 samples, got {}", xs.len()));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Self { mean, std_error: (var / n).sqrt(), trials: xs.len() as u64 })
    }

    /// Proportion of successes, with the same error convention as [`Estimate::from_samples`].
    pub fn from_successes(successes: u64, trials: u64) -> Result<Self> {
        if trials < 2 || successes > trials {
            return contract(format!("invalid proportion {successes}/{trials}"));
        }
        let n = trials as f64;
        let k = successes as f64;
        let var = k * (n - k) / (n * (n - 1.0));
        Ok(Self { mean: k / n, std_error: (var / n).sqrt(), trials })
    }

    pub fn z_score(&self, target: f64) -> f64 {
        let d = self.mean - target;
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }

    /// `|mean - target| <= sigmas * std_error`.
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.std_error
    }
}

fn model_provider(model: u8, seed: u64, p: &Probability) -> Result<SignProvider> {
    match model {
        1 => Ok(SignProvider::model1(seed, p.clone())),
        2 => Ok(SignProvider::model2(seed, p.clone())),
        _ => domain(format!("model must be 1 or 2, got {model}")),
    }
}

fn check_depth(depth: u32) -> Result<()> {
    if depth > MAX_SPARSE_DEPTH {
        return Err(Error::Resource(format!("depth {depth} exceeds {MAX_SPARSE_DEPTH}")));
    }
    Ok(())
}

/// The Model-1 slope walk `S_1, ..., S_len` with `S_n = ω_0 + ... + ω_{n-1}`.
pub fn slope_walk(seed: u64, p: &Probability, len: u32) -> Vec<i64> {
    let provider = SignProvider::model1(seed, p.clone());
    let mut s = 0;
    (0..len)
        .map(|n| {
            s += provider.sign(n, 0).value();
            s
        })
        .collect()
}

/// First `n` with `S_{2n-1} = -1, S_{2n} = 0, S_{2n+1} = 1` and `2n + 1 <= horizon`.
///
/// `flip` reverses every step, which trades `p` for `q`.
fn z_pattern_stage(seed: u64, p: &Probability, horizon: u64, flip: bool) -> Option<u64> {
    let mut hist = [0i64; 3];
    let mut s = 0i64;
    for t in 1..=horizon {
        let up = p.accepts(rng::bits(seed, Stream::LevelSign, t - 1, 0));
        s += if up != flip { 1 } else { -1 };
        hist = [hist[1], hist[2], s];
        if t >= 3 && t % 2 == 1 && hist == [-1, 0, 1] {
            return Some((t - 1) / 2);
        }
    }
    None
}

/// Fraction of Model-1 seeds whose slope walk shows the Z pattern by `depth` levels.
///
/// For `p < 1/2` the walk is reflected, so the estimate targets `min(p/q, q/p)`.
pub fn mc_z_shape_probability(p: &Probability, trials: u64, depth: u64, seed_base: u64) -> Result<Estimate> {
    if p.is_zero() || p.value() >= 1.0 {
        return domain(format!("p = {p} must lie strictly between 0 and 1"));
    }
    if depth < 3 {
        return contract("pattern search needs at least 3 levels");
    }
    let flip = p.value() < 0.5;
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&i| z_pattern_stage(seed_base.wrapping_add(i), p, depth, flip).is_some())
        .count() as u64;
    Estimate::from_successes(hits, trials)
}

/// Estimated probability that the zero set is finite: the complement of the Z pattern.
pub fn mc_finiteness_probability(p: &Probability, trials: u64, depth: u64, seed_base: u64) -> Result<Estimate> {
    let z = mc_z_shape_probability(p, trials, depth, seed_base)?;
    Ok(Estimate { mean: 1.0 - z.mean, ..z })
}

/// `min(p/q, q/p)`.
pub fn z_shape_limit(p: f64) -> f64 {
    let q = 1.0 - p;
    (p / q).min(q / p)
}

/// Per-stage record of the cells on which `f_{2n}` vanishes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaTrace {
    /// `z_counts[n]` is the number of Z-shapes at stage `n` (depth `2n`), from stage 0.
    pub z_counts: Vec<u64>,
    /// Number of zero-touching cells per stage, from stage 0.
    pub gamma_counts: Vec<u64>,
    /// Stage at which the front exceeded [`FRONT_CAP`], if it did.
    pub truncated_at: Option<u32>,
}

impl GammaTrace {
    pub fn first_z_stage(&self) -> Option<u32> {
        self.z_counts.iter().position(|&z| z > 0).map(|i| i as u32)
    }

    pub fn last_stage(&self) -> u32 {
        self.z_counts.len() as u32 - 1
    }
}

/// Follows the zero-touching cells of `f_{2n}` for `n = 0..=stages`.
pub fn gamma_trace(provider: &SignProvider, stages: u32) -> Result<GammaTrace> {
    check_depth(2 * stages)?;
    let mut front = CellFront::root();
    let mut trace = GammaTrace { z_counts: vec![0], gamma_counts: vec![1], truncated_at: None };
    for n in 1..=stages {
        front = zero_front_step(&zero_front_step(&front, provider)?, provider)?;
        let shapes = detect_shapes_front(&front)?;
        trace.z_counts.push(shapes.z_count);
        trace.gamma_counts.push(shapes.gamma);
        if front.len() > FRONT_CAP {
            trace.truncated_at = Some(n);
            break;
        }
    }
    Ok(trace)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZGrowth {
    /// Mean of `ln(N_last / N_first) / (last - first)` over seeds with an early Z-shape.
    pub rate: Estimate,
    /// Seeds whose first Z-shape came before the final stage.
    pub conditioned: u64,
    /// Stage pairs `(n, n + 2)` with `N_n > 0` and level signs `(+,-,-)` or `(-,+,+)` from level `2n`.
    pub triple_events: u64,
    /// Among those, how often `N_{n+2} >= 3 N_n`.
    pub tripled: u64,
}

/// `pq ln 3 / 2`.
pub fn z_growth_bound(p: f64) -> f64 {
    p * (1.0 - p) * 3f64.ln() / 2.0
}

/// Growth of the Z-shape count along Model-1 seeds.
///
/// Fails with an assertion error if `N_{n+1} < N_n` ever happens.
pub fn mc_z_growth_rate(p: &Probability, trials: u64, depth: u32, seed_base: u64) -> Result<ZGrowth> {
    if depth % 2 != 0 {
        return contract(format!("depth {depth} must be even"));
    }
    let stages = depth / 2;
    let per_trial: Vec<(Option<f64>, u64, u64)> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<(Option<f64>, u64, u64)> {
            let seed = seed_base.wrapping_add(i);
            let provider = SignProvider::model1(seed, p.clone());
            let trace = gamma_trace(&provider, stages)?;
            let z = &trace.z_counts;
            if let Some(n) = z.windows(2).position(|w| w[1] < w[0]) {
                return Err(Error::Assertion(format!(
                    "Z-shape count dropped from {} to {} at stage {} (model 1, seed {seed}, p {p})",
                    z[n],
                    z[n + 1],
                    n + 1
                )));
            }
            let (mut events, mut tripled) = (0, 0);
            for n in 0..z.len().saturating_sub(2) {
                let w: Vec<i64> = (0..3).map(|d| provider.sign(2 * n as u32 + d, 0).value()).collect();
                if z[n] > 0 && (w == [1, -1, -1] || w == [-1, 1, 1]) {
                    events += 1;
                    tripled += u64::from(z[n + 2] >= 3 * z[n]);
                }
            }
            let last = trace.last_stage();
            let rate = match trace.first_z_stage() {
                Some(first) if first < last => {
                    Some((z[last as usize] as f64 / z[first as usize] as f64).ln() / (last - first) as f64)
                }
                _ => None,
            };
            Ok((rate, events, tripled))
        })
        .collect::<Result<_>>()?;
    let rates: Vec<f64> = per_trial.iter().filter_map(|t| t.0).collect();
    if rates.len() < 2 {
        return Err(Error::EmptyLevelSet(depth));
    }
    Ok(ZGrowth {
        rate: Estimate::from_samples(&rates)?,
        conditioned: rates.len() as u64,
        triple_events: per_trial.iter().map(|t| t.1).sum(),
        tripled: per_trial.iter().map(|t| t.2).sum(),
    })
}

/// Zero-level cover (the envelope rule at `y = 0`) with a size cap.
fn zero_cover_counts(provider: &SignProvider, depth: u32) -> Result<(Vec<u64>, bool)> {
    let mut front = CellFront::root();
    let mut counts = Vec::with_capacity(depth as usize);
    for _ in 1..=depth {
        front = front.refine(provider, |c| c.min() <= 1 && c.max() >= -1)?;
        counts.push(front.len() as u64);
        if front.len() > FRONT_CAP {
            return Ok((counts, true));
        }
    }
    Ok((counts, false))
}

/// Least-squares dimension over the upper half of the depths `1..=counts.len()`.
fn upper_half_fit(counts: &[u64]) -> Option<f64> {
    let from = counts.len() / 2;
    let depths: Vec<u32> = (from as u32 + 1..=counts.len() as u32).collect();
    fit_dimension(&depths, &counts[from..]).ok().map(|f| f.slope)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroDimension {
    pub fit: Estimate,
    /// Seeds that entered the mean.
    pub conditioned: u64,
}

/// Mean box-dimension fit of the zero-level cover.
///
/// Model 2 keeps the seeds whose cover is non-empty at full depth; Model 1
/// additionally requires a Z-shape by the last stage.
pub fn mc_zero_dimension(
    model: u8,
    p: &Probability,
    trials: u64,
    depth: u32,
    seed_base: u64,
) -> Result<ZeroDimension> {
    check_depth(depth)?;
    if depth < 8 {
        return contract("zero dimension fit needs depth at least 8");
    }
    let fits: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<Option<f64>> {
            let provider = model_provider(model, seed_base.wrapping_add(i), p)?;
            let (counts, truncated) = zero_cover_counts(&provider, depth)?;
            if truncated || counts.last() == Some(&0) {
                return Ok(None);
            }
            if model == 1 {
                let trace = gamma_trace(&provider, depth / 2)?;
                if trace.z_counts.last() == Some(&0) {
                    return Ok(None);
                }
            }
            Ok(upper_half_fit(&counts))
        })
        .collect::<Result<_>>()?;
    let kept: Vec<f64> = fits.into_iter().flatten().collect();
    if kept.len() < 2 {
        return Err(Error::EmptyLevelSet(depth));
    }
    Ok(ZeroDimension { fit: Estimate::from_samples(&kept)?, conditioned: kept.len() as u64 })
}

/// Zero-set counting state at an even depth: `c` flat zero cells, `up[i-1]`
/// (`low[i-1]`) cells touching zero from above (below) with `|slope| = 2i`,
/// the last class collecting `|slope| >= 2k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroState {
    pub c: u64,
    pub up: Vec<u64>,
    pub low: Vec<u64>,
    /// Cells on which `f_{2n}` changes sign inside; the table assumes there are none.
    pub crossing: u64,
}

impl ZeroState {
    pub fn from_front(front: &CellFront, k: usize) -> Result<Self> {
        if front.depth % 2 != 0 {
            return contract(format!("zero state needs an even depth, got {}", front.depth));
        }
        let mut s = ZeroState { c: 0, up: vec![0; k], low: vec![0; k], crossing: 0 };
        for cell in &front.cells {
            let slope = cell.slope().unsigned_abs() as usize;
            if slope == 0 {
                if cell.left == 0 {
                    s.c += 1;
                }
                continue;
            }
            let class = (slope / 2).clamp(1, k) - 1;
            if cell.min() == 0 {
                s.up[class] += 1;
            } else if cell.max() == 0 {
                s.low[class] += 1;
            } else if cell.min() < 0 && cell.max() > 0 {
                s.crossing += 1;
            }
        }
        Ok(s)
    }

    /// `(c, σ_1, ..., σ_k)` with `σ_i = up_i + low_i`.
    pub fn vector(&self) -> Vec<u64> {
        std::iter::once(self.c).chain(self.up.iter().zip(&self.low).map(|(u, l)| u + l)).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourCaseReport {
    pub states: u64,
    pub rows_checked: u64,
    /// States with at least one zero-touching cell.
    pub nontrivial: u64,
    pub violations: Vec<String>,
}

impl FourCaseReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Assertion error carrying the first violation.
    pub fn ensure(&self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::Assertion(format!("four-case table: {v}"))),
        }
    }
}

struct RowCheck<'a> {
    report: &'a mut FourCaseReport,
    context: String,
}

impl RowCheck<'_> {
    fn eq(&mut self, name: &str, lhs: u64, rhs: u64) {
        self.report.rows_checked += 1;
        if lhs != rhs {
            self.report.violations.push(format!("{}: {name}: {lhs} != {rhs}", self.context));
        }
    }

    fn le(&mut self, name: &str, lhs: u64, rhs: u64) {
        self.report.rows_checked += 1;
        if lhs > rhs {
            self.report.violations.push(format!("{}: {name}: {lhs} > {rhs}", self.context));
        }
    }
}

/// Table rows for the case where the two new level signs agree (`plus = true`
/// for `(+,+)`). The `(-,-)` case is the same with the roles of `up` and `low` swapped.
fn check_equal_signs(chk: &mut RowCheck, c: u64, grow: (&[u64], &[u64]), shrink: (&[u64], &[u64]), next_c: u64) {
    let k = grow.0.len();
    let (g, g2) = grow;
    let (h, h2) = shrink;
    chk.eq("c' = l1", next_c, h[0]);
    chk.eq("u1' = 2c", g2[0], 2 * c);
    for i in 1..k - 1 {
        chk.eq(&format!("u{}' = u{}", i + 1, i), g2[i], g[i - 1]);
    }
    chk.eq(&format!("u{k}' = u{} + u{k}", k - 1), g2[k - 1], g[k - 2] + g[k - 1]);
    chk.eq("l1' = l1 + l2", h2[0], h[0] + h[1]);
    for i in 1..k - 2 {
        chk.eq(&format!("l{}' = l{}", i + 1, i + 2), h2[i], h[i + 1]);
    }
    chk.le(&format!("l{}' <= l{k}", k - 1), h2[k - 2], h[k - 1]);
    chk.eq(&format!("l{}' + l{k}' = l{k}", k - 1), h2[k - 2] + h2[k - 1], h[k - 1]);
    chk.le(&format!("l{k}' <= l{k}"), h2[k - 1], h[k - 1]);
}

fn check_mixed_signs(chk: &mut RowCheck, c: u64, grow: (&[u64], &[u64]), keep: (&[u64], &[u64]), next_c: u64) {
    let k = grow.0.len();
    chk.eq("c' = 2c", next_c, 2 * c);
    chk.eq("u1' = 2c + u1", grow.1[0], 2 * c + grow.0[0]);
    for i in 1..k {
        chk.eq(&format!("u{}' = u{}", i + 1, i + 1), grow.1[i], grow.0[i]);
    }
    for i in 0..k {
        chk.eq(&format!("l{}' = l{}", i + 1, i + 1), keep.1[i], keep.0[i]);
    }
}

fn prefix_front(prefix: &[Sign]) -> Result<CellFront> {
    let provider = SignProvider::constant_levels(prefix.to_vec());
    let mut front = CellFront::root();
    for _ in 0..prefix.len() {
        front = zero_front_step(&front, &provider)?;
    }
    Ok(front)
}

/// Checks every table row from the state reached by the level-sign `prefix`
/// (even length), and the averaged transition against `A_k x`.
pub fn four_case_from_prefix(prefix: &[Sign], k: usize, report: &mut FourCaseReport) -> Result<()> {
    if k < 3 {
        return contract(format!("truncation k = {k} must be at least 3"));
    }
    if prefix.len() % 2 != 0 {
        return contract("prefix length must be even");
    }
    let front = prefix_front(prefix)?;
    let state = ZeroState::from_front(&front, k)?;
    let text: String = prefix.iter().map(|s| s.symbol()).collect();
    report.states += 1;
    report.nontrivial += u64::from(!front.is_empty());
    let x = state.vector();
    let mut sum = vec![0u64; k + 1];
    for (a, b) in [(Sign::Plus, Sign::Plus), (Sign::Minus, Sign::Minus), (Sign::Plus, Sign::Minus), (Sign::Minus, Sign::Plus)] {
        let mut levels = prefix.to_vec();
        levels.extend([a, b]);
        let provider = SignProvider::constant_levels(levels);
        let next_front = zero_front_step(&zero_front_step(&front, &provider)?, &provider)?;
        let next = ZeroState::from_front(&next_front, k)?;
        let mut chk = RowCheck {
            report: &mut *report,
            context: format!("prefix {text} case ({}{})", a.symbol(), b.symbol()),
        };
        chk.eq("no sign-changing cells", next.crossing + state.crossing, 0);
        let (s, t) = (&state, &next);
        match (a, b) {
            (Sign::Plus, Sign::Plus) => check_equal_signs(&mut chk, s.c, (&s.up, &t.up), (&s.low, &t.low), t.c),
            (Sign::Minus, Sign::Minus) => check_equal_signs(&mut chk, s.c, (&s.low, &t.low), (&s.up, &t.up), t.c),
            (Sign::Plus, Sign::Minus) => check_mixed_signs(&mut chk, s.c, (&s.up, &t.up), (&s.low, &t.low), t.c),
            (Sign::Minus, Sign::Plus) => check_mixed_signs(&mut chk, s.c, (&s.low, &t.low), (&s.up, &t.up), t.c),
        }
        for (acc, v) in sum.iter_mut().zip(next.vector()) {
            *acc += v;
        }
    }
    let a = a_k_family(k, AkVariant::Full)?;
    let bound = a.apply_u64(&x);
    let quarter = |v: u64| BigRational::new(v.into(), 4.into());
    let mut chk = RowCheck { report, context: format!("prefix {text} average") };
    for (i, (s, b)) in sum.iter().zip(&bound).enumerate() {
        chk.report.rows_checked += 1;
        if &quarter(*s) > b {
            chk.report.violations.push(format!("{}: component {i}: {} > {b}", chk.context, quarter(*s)));
        }
    }
    chk.eq("4 E c' = 4c + σ1", sum[0], 4 * x[0] + x[1]);
    Ok(())
}

/// Runs [`four_case_from_prefix`] on `samples` random Model-1 prefixes of
/// `2..=2 * max_stage` levels (with `p = 1/2`), plus every prefix of length 2 and 4.
pub fn four_case_table_check(k: usize, samples: u64, max_stage: u32, seed: u64) -> Result<FourCaseReport> {
    if max_stage < 1 || 2 * max_stage + 2 > MAX_SPARSE_DEPTH {
        return contract(format!("max stage {max_stage} out of range"));
    }
    let mut report = FourCaseReport::default();
    for len in [2usize, 4] {
        for mask in 0u32..1 << len {
            let prefix: Vec<Sign> = (0..len).map(|i| Sign::from_bool(mask >> i & 1 == 0)).collect();
            four_case_from_prefix(&prefix, k, &mut report)?;
        }
    }
    for s in 0..samples {
        let stage = 1 + rng::bits(seed, Stream::Sample, s, u64::MAX) % max_stage as u64;
        let prefix: Vec<Sign> = (0..2 * stage)
            .map(|n| Sign::from_bool(rng::bits(seed, Stream::Sample, s, n) & 1 == 0))
            .collect();
        four_case_from_prefix(&prefix, k, &mut report)?;
    }
    Ok(report)
}

/// Offspring counts `(0, 1, 2)` of flat cells at the running maximum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffspringTally {
    pub counts: [u64; 3],
}

impl OffspringTally {
    pub fn observations(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn estimates(&self) -> Result<[Estimate; 3]> {
        let n = self.observations();
        Ok([
            Estimate::from_successes(self.counts[0], n)?,
            Estimate::from_successes(self.counts[1], n)?,
            Estimate::from_successes(self.counts[2], n)?,
        ])
    }

    fn add(&mut self, other: &OffspringTally) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }
}

/// `(1 - 2p²q - p³, 2p²q, p³)`.
pub fn offspring_law(p: f64) -> [f64; 3] {
    let q = 1.0 - p;
    let two = p.powi(3);
    let one = 2.0 * p * p * q;
    [1.0 - one - two, one, two]
}

/// `max((2p² - 1) / p³, 0)`.
pub fn two_thirds_probability(p: f64) -> f64 {
    ((2.0 * p * p - 1.0) / p.powi(3)).max(0.0)
}

/// `log(2p²) / log 4`.
pub fn max_set_dimension(p: f64) -> f64 {
    (2.0 * p * p).ln() / 4f64.ln()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GwPath {
    /// Population at stages `0, 1, ...` until extinction, the cap or the last stage.
    pub sizes: Vec<u64>,
    pub offspring: OffspringTally,
    pub survived: bool,
}

/// Flat cells of `f_{2n}` at height `Σ_{i<n} 4^-i / 2`, followed by refining
/// each such cell twice.
pub fn gw_path(provider: &SignProvider, stages: u32) -> Result<GwPath> {
    check_depth(2 * stages)?;
    let mut cells = vec![Cell { index: 0, left: 0, right: 0 }];
    let mut height = 0i64;
    let mut path = GwPath { sizes: vec![1], offspring: OffspringTally::default(), survived: true };
    for n in 0..stages {
        let next_height = 4 * height + 2;
        let mut next = Vec::new();
        for cell in &cells {
            let mut born = 0usize;
            for child in cell.children(provider.sign(2 * n, cell.index).value()) {
                for grand in child.children(provider.sign(2 * n + 1, child.index).value()) {
                    if grand.left == next_height && grand.right == next_height {
                        next.push(grand);
                        born += 1;
                    }
                }
            }
            if born > 2 {
                return Err(Error::Assertion(format!("flat maximum cell {} has {born} children", cell.index)));
            }
            path.offspring.counts[born] += 1;
        }
        cells = next;
        height = next_height;
        path.sizes.push(cells.len() as u64);
        if cells.is_empty() {
            path.survived = false;
            break;
        }
        if cells.len() as u64 >= GW_CAP {
            break;
        }
    }
    Ok(path)
}

/// `M_{2n}` (scaled by `4^n`) is twice a base-4 number with digits in `{0, 1}`.
fn digits_zero_one(scaled: i64) -> bool {
    if scaled < 0 || scaled % 2 != 0 {
        return false;
    }
    let mut v = scaled / 2;
    while v > 0 {
        if v % 4 > 1 {
            return false;
        }
        v /= 4;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GwMaximum {
    pub p: f64,
    /// Fraction of seeds whose branching process survives (`M_f = 2/3`).
    pub prob_two_thirds: Estimate,
    /// Mean maximum-set dimension over surviving seeds; `None` when `p <= 1/√2` or too few survive.
    pub dim_fit: Option<Estimate>,
    /// Every sampled `M_{2n}` has the digit form, and surviving seeds sit on the running maximum.
    pub support_check: bool,
    pub offspring: OffspringTally,
}

/// Model-2 maximum: survival of the branching process, dimension of the
/// maximum set and the digit form of the grid maxima. `depth` counts binary
/// levels; the branching process runs `depth / 2` stages and the covers use
/// at most 40 levels.
pub fn mc_gw_maximum(p: &Probability, trials: u64, depth: u32, seed_base: u64) -> Result<GwMaximum> {
    if depth % 2 != 0 || depth < 8 {
        return contract(format!("depth {depth} must be even and at least 8"));
    }
    check_depth(depth)?;
    let cover_depth = depth.min(40);
    let in_range = p.value() > std::f64::consts::FRAC_1_SQRT_2;
    let per_trial: Vec<(GwPath, Option<f64>, bool)> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<(GwPath, Option<f64>, bool)> {
            let provider = SignProvider::model2(seed_base.wrapping_add(i), p.clone());
            let path = gw_path(&provider, depth / 2)?;
            let (cover, tops) = max_set_trace(&provider, cover_depth, 0)?;
            let mut support = true;
            let mut running = 0i64;
            for n in 1..=(cover_depth / 2) as usize {
                let top = tops[2 * n - 1];
                running = 4 * running + 2;
                support &= digits_zero_one(top);
                if path.survived {
                    support &= top == running;
                }
            }
            let fit = if path.survived && in_range { upper_half_fit(&cover.counts) } else { None };
            Ok((path, fit, support))
        })
        .collect::<Result<_>>()?;
    let survived = per_trial.iter().filter(|t| t.0.survived).count() as u64;
    let mut offspring = OffspringTally::default();
    for t in &per_trial {
        offspring.add(&t.0.offspring);
    }
    let fits: Vec<f64> = per_trial.iter().filter_map(|t| t.1).collect();
    Ok(GwMaximum {
        p: p.value(),
        prob_two_thirds: Estimate::from_successes(survived, trials)?,
        dim_fit: if fits.len() >= 2 { Some(Estimate::from_samples(&fits)?) } else { None },
        support_check: per_trial.iter().all(|t| t.2),
        offspring,
    })
}

/// Offspring tally of the branching process alone, for checking the law.
pub fn gw_offspring(p: &Probability, trials: u64, stages: u32, seed_base: u64) -> Result<OffspringTally> {
    let paths: Vec<GwPath> = (0..trials)
        .into_par_iter()
        .map(|i| gw_path(&SignProvider::model2(seed_base.wrapping_add(i), p.clone()), stages))
        .collect::<Result<_>>()?;
    let mut tally = OffspringTally::default();
    for path in &paths {
        tally.add(&path.offspring);
    }
    Ok(tally)
}

/// Mean box-dimension fit of the maximum set over Model-1 seeds.
pub fn mc_model1_max_dimension(p: &Probability, trials: u64, depth: u32, seed_base: u64) -> Result<Estimate> {
    check_depth(depth)?;
    if depth < 8 {
        return contract("maximum dimension fit needs depth at least 8");
    }
    let fits: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let provider = SignProvider::model1(seed_base.wrapping_add(i), p.clone());
            let (cover, _) = max_set_trace(&provider, depth, 0)?;
            upper_half_fit(&cover.counts).ok_or(Error::EmptyLevelSet(depth))
        })
        .collect::<Result<_>>()?;
    Estimate::from_samples(&fits)
}

/// The radii at which hitting-time generating functions are sampled.
pub const PGF_RADII: [f64; 3] = [0.5, 0.7, 0.786151];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgfSample {
    pub r: f64,
    pub estimate: Estimate,
    /// `ψ_1(r)^m`.
    pub target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingReport {
    pub level: u32,
    pub horizon: u64,
    /// Fraction of walks that reached the level within the horizon.
    pub hit_fraction: f64,
    pub samples: Vec<PgfSample>,
}

/// First time a symmetric simple random walk reaches `level`, or `None` past `horizon`.
pub fn hitting_time(seed: u64, trial: u64, level: i64, horizon: u64) -> Option<u64> {
    let mut s = 0i64;
    for t in 1..=horizon {
        s += if rng::bits(seed, Stream::Walk, trial, t) & 1 == 1 { 1 } else { -1 };
        if s == level {
            return Some(t);
        }
    }
    None
}

/// Empirical `E r^τ` for the hitting time of `level ∈ {1, 2}`.
///
/// Walks that do not arrive within `horizon` contribute 0, which biases the
/// estimate down by at most `r^horizon`.
pub fn hitting_time_tools(level: u32, trials: u64, horizon: u64, seed: u64) -> Result<HittingReport> {
    if !(1..=2).contains(&level) {
        return domain(format!("hitting level must be 1 or 2, got {level}"));
    }
    let times: Vec<Option<u64>> =
        (0..trials).into_par_iter().map(|t| hitting_time(seed, t, level as i64, horizon)).collect();
    let hits = times.iter().filter(|t| t.is_some()).count();
    let samples = PGF_RADII
        .iter()
        .map(|&r| {
            let xs: Vec<f64> = times.iter().map(|t| t.map_or(0.0, |t| r.powf(t as f64))).collect();
            Ok(PgfSample { r, estimate: Estimate::from_samples(&xs)?, target: psi1(r).powi(level as i32) })
        })
        .collect::<Result<_>>()?;
    Ok(HittingReport { level, horizon, hit_fraction: hits as f64 / trials.max(1) as f64, samples })
}

/// One seeded trial of the simulation runner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub model: u8,
    pub seed: u64,
    pub p: Probability,
    pub depth: u32,
    pub observables: BTreeMap<String, Value>,
}

impl TrialRecord {
    fn get_f64(&self, key: &str) -> Option<f64> {
        self.observables.get(key).and_then(Value::as_f64)
    }

    fn get_bool(&self, key: &str) -> Option<bool> {
        self.observables.get(key).and_then(Value::as_bool)
    }
}

/// All observables of one model function up to `depth` binary levels.
pub fn run_trial(model: u8, seed: u64, p: &Probability, depth: u32) -> Result<TrialRecord> {
    if !(4..=MAX_SPARSE_DEPTH).contains(&depth) {
        return domain(format!("depth {depth} must lie in 4..={MAX_SPARSE_DEPTH}"));
    }
    let provider = model_provider(model, seed, p)?;
    let mut obs = BTreeMap::new();

    let (cover, truncated) = zero_cover_counts(&provider, depth)?;
    obs.insert("zero_dimension".into(), json!(if truncated { None } else { upper_half_fit(&cover) }));
    obs.insert("cover_truncated".into(), json!(truncated));
    obs.insert("cover_counts".into(), json!(cover));

    let trace = gamma_trace(&provider, depth / 2)?;
    obs.insert("z_count".into(), json!(trace.z_counts.last().copied().unwrap_or(0)));
    obs.insert("first_z_stage".into(), json!(trace.first_z_stage()));
    obs.insert("z_counts".into(), json!(trace.z_counts));
    obs.insert("gamma_counts".into(), json!(trace.gamma_counts));

    let (max_cover, tops) = max_set_trace(&provider, depth, 0)?;
    let top = *tops.last().unwrap_or(&0);
    obs.insert("max_value".into(), json!(top));
    obs.insert("max_value_real".into(), json!(top as f64 / 2f64.powi(depth as i32)));
    obs.insert("max_dimension".into(), json!(upper_half_fit(&max_cover.counts)));
    obs.insert("max_counts".into(), json!(max_cover.counts));

    let gw = gw_path(&provider, depth / 2)?;
    obs.insert("gw_extinct".into(), json!(!gw.survived));
    obs.insert("gw_sizes".into(), json!(gw.sizes));

    Ok(TrialRecord { model, seed, p: p.clone(), depth, observables: obs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: u8,
    pub p: Probability,
    pub trials: u64,
    pub depth: u32,
    pub seed_base: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        model_provider(self.model, 0, &self.p)?;
        if self.p.is_zero() || self.p.value() >= 1.0 {
            return domain(format!("p = {} must lie strictly between 0 and 1", self.p));
        }
        if self.trials == 0 {
            return domain("trials must be positive");
        }
        if !(4..=MAX_SPARSE_DEPTH).contains(&self.depth) {
            return domain(format!("depth {} must lie in 4..={MAX_SPARSE_DEPTH}", self.depth));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub config: SimConfig,
    /// Fraction of trials with a Z-shape by the last stage.
    pub z_present: Option<Estimate>,
    pub gw_survival: Option<Estimate>,
    pub zero_dimension: Option<Estimate>,
    pub max_dimension: Option<Estimate>,
}

fn summarize(config: &SimConfig, records: &[TrialRecord]) -> Result<SimSummary> {
    let n = records.len() as u64;
    let proportion = |hits: u64| if n >= 2 { Estimate::from_successes(hits, n).ok() } else { None };
    let mean_of = |key: &str| {
        let xs: Vec<f64> = records.iter().filter_map(|r| r.get_f64(key)).collect();
        Estimate::from_samples(&xs).ok()
    };
    let z_hits = records.iter().filter(|r| r.get_f64("z_count").is_some_and(|z| z > 0.0)).count() as u64;
    let alive = records.iter().filter(|r| r.get_bool("gw_extinct") == Some(false)).count() as u64;
    Ok(SimSummary {
        config: config.clone(),
        z_present: proportion(z_hits),
        gw_survival: proportion(alive),
        zero_dimension: mean_of("zero_dimension"),
        max_dimension: mean_of("max_dimension"),
    })
}

/// Runs `trials` seeds `seed_base, seed_base + 1, ...` on `jobs` worker threads.
///
/// Records come back in seed order whatever the thread count.
pub fn simulate(config: &SimConfig, jobs: usize) -> Result<(Vec<TrialRecord>, SimSummary)> {
    config.validate()?;
    if jobs == 0 {
        return domain("jobs must be positive");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    let records: Vec<TrialRecord> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|i| run_trial(config.model, config.seed_base.wrapping_add(i), &config.p, config.depth))
            .collect::<Result<_>>()
    })?;
    let summary = summarize(config, &records)?;
    Ok((records, summary))
}

/// One JSON object per line.
pub fn records_to_jsonl(records: &[TrialRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Parse(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

fn record(report: &mut IdentityReport, name: &str, passed: bool, detail: String) {
    report.push(name, passed, detail);
}

fn three_sigma(report: &mut IdentityReport, name: &str, e: &Estimate, target: f64, replay: &str) {
    let detail = format!(
        "mean {:.6} ± {:.6} ({} trials), target {target:.6}, z {:.2}; {replay}",
        e.mean,
        e.std_error,
        e.trials,
        e.z_score(target)
    );
    record(report, name, e.within(target, 3.0), detail);
}

fn absolute(report: &mut IdentityReport, name: &str, e: &Estimate, target: f64, tol: f64, replay: &str) {
    let detail = format!(
        "mean {:.4} ± {:.4} ({} seeds), target {target:.4} ± {tol}; {replay}",
        e.mean, e.std_error, e.trials
    );
    record(report, name, (e.mean - target).abs() <= tol, detail);
}

/// The fixed-seed statistical checks, each 3σ two-sided unless an absolute
/// tolerance is named. Details carry the replay parameters.
pub fn statistical_suite() -> Result<IdentityReport> {
    let mut r = IdentityReport::default();
    let prob = |n, d| Probability::new(n, d);

    let p = prob(3, 5)?;
    let e = mc_z_shape_probability(&p, 100_000, 200, 5000)?;
    three_sigma(&mut r, "Z pattern probability p=3/5", &e, z_shape_limit(0.6), "model 1, seeds 5000.., depth 200");

    for (n, d, trials, horizon) in [(1, 2, 4000, 400_000_000), (3, 5, 20_000, 400), (3, 4, 20_000, 400)] {
        let p = prob(n, d)?;
        let e = mc_finiteness_probability(&p, trials, horizon, 1000)?;
        let target = 1.0 - z_shape_limit(p.value());
        let replay = format!("model 1, seeds 1000.., horizon {horizon}");
        three_sigma(&mut r, &format!("finite zero set probability p={p}"), &e, target, &replay);
    }

    let g = mc_z_growth_rate(&Probability::half(), 200, 60, 77)?;
    let bound = z_growth_bound(0.5);
    record(
        &mut r,
        "Z-shape growth rate p=1/2",
        g.rate.mean >= bound - 3.0 * g.rate.std_error,
        format!(
            "rate {:.4} ± {:.4} over {} seeds, bound {bound:.4}; model 1, seeds 77.., depth 60",
            g.rate.mean, g.rate.std_error, g.conditioned
        ),
    );
    record(
        &mut r,
        "Z-shape tripling after (+,-,-) or (-,+,+)",
        g.triple_events > 0 && g.tripled == g.triple_events,
        format!("{} of {} events tripled", g.tripled, g.triple_events),
    );

    let z = mc_zero_dimension(2, &Probability::half(), 100, 24, 300)?;
    let d0 = crate::spectra::named::zero_set_dimension();
    absolute(&mut r, "model-2 zero set dimension", &z.fit, d0, 0.05, "seeds 300.., depth 24");

    let gw = mc_gw_maximum(&prob(4, 5)?, 10_000, 60, 9000)?;
    let replay = "model 2, seeds 9000.., depth 60";
    three_sigma(&mut r, "P(max = 2/3) p=4/5", &gw.prob_two_thirds, two_thirds_probability(0.8), replay);
    match &gw.dim_fit {
        Some(e) => absolute(&mut r, "maximum set dimension p=4/5", e, max_set_dimension(0.8), 0.05, replay),
        None => record(&mut r, "maximum set dimension p=4/5", false, "no surviving seeds".into()),
    }
    record(&mut r, "grid maxima digit form p=4/5", gw.support_check, replay.into());

    let e = mc_model1_max_dimension(&prob(3, 4)?, 200, 40, 55)?;
    absolute(&mut r, "model-1 maximum set dimension p=3/4", &e, 1.0 / 3.0, 0.07, "seeds 55.., depth 40");

    for (n, d) in [(3, 5), (3, 4), (9, 10)] {
        let p = prob(n, d)?;
        let tally = gw_offspring(&p, 10_000, 30, 123)?;
        let law = offspring_law(p.value());
        let est = tally.estimates()?;
        let enough = tally.observations() >= 10_000;
        for (i, e) in est.iter().enumerate() {
            let name = format!("offspring P({i}) p={p}");
            let replay = format!("model 2, seeds 123.., 30 stages, {} parents", tally.observations());
            three_sigma(&mut r, &name, e, law[i], &replay);
            if !enough {
                r.checks.last_mut().unwrap().passed = false;
            }
        }
    }

    for level in [1, 2] {
        let h = hitting_time_tools(level, 100_000, 10_000, 42)?;
        for s in &h.samples {
            let name = format!("hitting time pgf level {level} r={}", s.r);
            three_sigma(&mut r, &name, &s.estimate, s.target, "walk seed 42, horizon 10000");
        }
    }
    Ok(r)
}
