//! Acceptance suite: one PASS/FAIL line per criterion, tolerances and time
//! budgets pinned below. Run with `cargo test --test acceptance`; pass
//! criterion numbers as arguments to run a subset.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use takagi_levels::constructions::{
    extremal_flexible, extremal_level, gray_zero_points, verify_rigid_bounds,
};
use takagi_levels::levelsets::{
    cover_level, dominated, fit_dimension, ratio_dimension, triple_at, TripleTracker,
};
use takagi_levels::piecewise::eval_enclosure_rational;
use takagi_levels::randomsim::statistical_suite;
use takagi_levels::rng::{uniform, Stream};
use takagi_levels::spectra::{
    a_k_family, char_poly, jsr_bracket, named, random_moran_dimension, rho_k, rho_k_limit_scan,
    verify_jsr_identities, zeta_xi, AkVariant, Polynomial, RationalMatrix,
};
use takagi_levels::{GridFunction, Probability, Sign, SignProvider};

/// Criteria whose failure is understood and does not fail the run.
const KNOWN_FAILURES: &[u32] = &[7];

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn check(ok: bool, detail: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(detail.into())
    }
}

fn lib<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

fn d0() -> f64 {
    golden().ln() / 4f64.ln()
}

fn alpha() -> f64 {
    (9.0 + 105f64.sqrt()) / 2.0
}

// exact integer matrices for the independent identity checks
type M3 = [[i64; 3]; 3];

fn mul3(a: &M3, b: &M3) -> M3 {
    let mut c = [[0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn lin3(a: &M3, x: i64, b: &M3, y: i64) -> M3 {
    let mut c = [[0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = x * a[i][j] + y * b[i][j];
        }
    }
    c
}

fn as_i64(m: &RationalMatrix) -> Vec<Vec<i64>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m.get(i, j).to_integer().to_i64().unwrap()).collect())
        .collect()
}

const E: M3 = [[2, 0, 1], [2, 0, 2], [2, 0, 1]];
const F: M3 = [[2, 1, 0], [2, 1, 0], [2, 0, 1]];

/// `det(m)` by Gaussian elimination over the rationals.
fn det(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut acc = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return BigRational::zero();
        };
        if p != c {
            m.swap(p, c);
            acc = -acc;
        }
        let pivot = m[c][c].clone();
        acc *= &pivot;
        for r in c + 1..n {
            let factor = &m[r][c] / &pivot;
            for k in c..n {
                let t = &factor * &m[c][k];
                m[r][k] -= t;
            }
        }
    }
    acc
}

/// The tridiagonal bound matrix written out from its defining rows.
fn tridiagonal(k: usize) -> Vec<Vec<BigRational>> {
    let mut m = vec![vec![BigRational::zero(); k + 1]; k + 1];
    m[0][0] = int(1);
    m[0][1] = rat(1, 4);
    m[1][0] = int(2);
    if k == 1 {
        m[1][1] = int(1);
        return m;
    }
    m[1][1] = rat(3, 4);
    m[1][2] = rat(1, 4);
    for i in 2..k {
        m[i][i - 1] = rat(1, 4);
        m[i][i] = rat(1, 2);
        m[i][i + 1] = rat(1, 4);
    }
    m[k][k - 1] = rat(1, 4);
    m[k][k] = int(1);
    m
}

fn shifted(m: &[Vec<BigRational>], lambda: &BigRational) -> Vec<Vec<BigRational>> {
    let mut s = m.to_vec();
    for (i, row) in s.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    s
}

fn criterion_1() -> Outcome {
    let report = verify_jsr_identities();
    let failed: Vec<String> =
        report.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
    check(failed.is_empty(), failed.join("; "))?;
    for name in ["G^3 = 9G^2 + 6G", "F^2E = 3FE + D", "char poly of M-hat", "transcription E", "transcription M-hat"] {
        check(report.checks.iter().any(|c| c.name == name), format!("suite lacks {name}"))?;
    }
    let sk = (0..=10).filter(|k| report.checks.iter().any(|c| c.name == format!("S_{k} sparse pattern"))).count();
    check(sk == 11, format!("only {sk} S_k checks"))?;

    // independent integer arithmetic
    check(as_i64(&named::e()) == E.map(|r| r.to_vec()).to_vec(), "E differs from pinned rows")?;
    check(as_i64(&named::f()) == F.map(|r| r.to_vec()).to_vec(), "F differs from pinned rows")?;
    let g = mul3(&F, &E);
    let g2 = mul3(&g, &g);
    check(mul3(&g2, &g) == lin3(&g2, 9, &g, 6), "G^3 != 9G^2 + 6G")?;
    let d = lin3(&mul3(&mul3(&F, &F), &E), 1, &g, -3);
    check(as_i64(&named::d()) == d.map(|r| r.to_vec()).to_vec(), "D differs from F^2E - 3FE")?;
    let mut gk = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
    let f2e = mul3(&mul3(&F, &F), &E);
    for k in 0..=10 {
        let gk3 = mul3(&mul3(&gk, &g), &g2);
        let s = lin3(&gk3, 1, &mul3(&mul3(&f2e, &gk), &f2e), -1);
        let (a, b) = (s[0][0], -s[2][2]);
        let zeros = [(0, 1), (0, 2), (1, 1), (1, 2), (2, 0), (2, 1)].iter().all(|&(i, j)| s[i][j] == 0);
        check(zeros && s[1][0] == a && a >= b && b >= 0, format!("S_{k} = {s:?}"))?;
        gk = mul3(&gk, &g);
    }
    let mhat = as_i64(&named::m_hat());
    check(mhat == vec![vec![6, 4], vec![6, 3]], format!("M-hat {mhat:?}"))?;
    let trace = mhat[0][0] + mhat[1][1];
    let detm = mhat[0][0] * mhat[1][1] - mhat[0][1] * mhat[1][0];
    check((trace, detm) == (9, -6), format!("M-hat trace {trace}, det {detm}"))?;

    // recursions against determinants evaluated pointwise
    for k in 1..=8usize {
        let full = tridiagonal(k);
        let lib_full = a_k_family(k, AkVariant::Full).map_err(|e| e.to_string())?;
        let rows: Vec<Vec<BigRational>> =
            (0..=k).map(|i| (0..=k).map(|j| lib_full.get(i, j).clone()).collect()).collect();
        check(rows == full, format!("A_{k} rows differ"))?;
        let trunc: Vec<Vec<BigRational>> = full[..k].iter().map(|r| r[..k].to_vec()).collect();
        let (zeta, xi) = lib(zeta_xi(k))?;
        for t in 0..=(k as i64 + 2) {
            let lambda = rat(2 * t - 3, 3);
            check(zeta.eval(&lambda) == det(shifted(&trunc, &lambda)), format!("zeta_{k}({lambda})"))?;
            if let Some(xi) = &xi {
                check(xi.eval(&lambda) == det(shifted(&full, &lambda)), format!("xi_{k}({lambda})"))?;
            }
        }
        if let Some(xi) = &xi {
            check(*xi == char_poly(&lib_full), format!("xi_{k} != char poly"))?;
        }
    }
    check(
        char_poly(&named::m_hat()) == Polynomial::from_i64(&[-6, -9, 1]),
        "char poly of M-hat",
    )?;
    Ok(format!("{} exact checks", report.checks.len()))
}

fn criterion_2() -> Outcome {
    let set = vec![("E".to_string(), named::e()), ("F".to_string(), named::f())];
    let root = alpha().sqrt();
    // power iteration on FE as an independent value for sqrt(alpha)
    let g = mul3(&F, &E);
    let mut v = [1.0f64; 3];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w: Vec<f64> = (0..3).map(|i| (0..3).map(|j| g[i][j] as f64 * v[j]).sum()).collect();
        lambda = w.iter().sum::<f64>() / v.iter().sum::<f64>();
        let s: f64 = w.iter().sum();
        v = [w[0] / s, w[1] / s, w[2] / s];
    }
    check((lambda.sqrt() - root).abs() < 1e-12, format!("power iteration {lambda}"))?;

    let short = lib(jsr_bracket(&set, 2))?;
    check(
        (short.lower - root).abs() <= 1e-12 && short.witness == "FE",
        format!("L=2 lower {} witness {}", short.lower, short.witness),
    )?;
    let mut uppers = Vec::new();
    for l in 1..=12 {
        uppers.push(lib(jsr_bracket(&set, l))?.upper);
    }
    let monotone = uppers.windows(2).all(|w| w[1] <= w[0]);
    check(monotone, format!("upper bounds {uppers:?}"))?;
    // the raw per-length norm bounds are monotone here as well
    let per_length = lib(jsr_bracket(&set, 12))?.upper_by_length;
    check(per_length.windows(2).all(|w| w[1] <= w[0]), format!("per-length bounds {per_length:?}"))?;
    check(per_length[11] == uppers[11], "L=12 bound is not the length-12 norm bound")?;
    let gap = uppers[11] - root;
    check(gap >= 0.0 && gap < 0.35, format!("L=12 upper {} gap {gap}", uppers[11]))?;
    Ok(format!("lower {:.15} (FE), upper(12) {:.6}, gap {gap:.4}", short.lower, uppers[11]))
}

/// `2^d f_d(j/2^d)` straight from the tent-map series.
fn grid_value(levels: &[Sign], d: usize, j: i64) -> i64 {
    (0..d)
        .map(|i| {
            let period = 1i64 << (d - i);
            let r = j.rem_euclid(period);
            levels[i].value() * r.min(period - r)
        })
        .sum()
}

fn criterion_3() -> Outcome {
    let mut checked = 0;
    for mask in 0u32..1 << 10 {
        let levels: Vec<Sign> = (0..10).map(|i| Sign::from_bool(mask >> i & 1 == 0)).collect();
        lib(verify_rigid_bounds(&levels)).map_err(|e| format!("prefix {mask:010b}: {e}"))?;
        for n in 0..=5usize {
            let d = 2 * n;
            let v: Vec<i64> = (0..=(1i64 << d)).map(|j| grid_value(&levels, d, j)).collect();
            let (lo, hi) = (*v.iter().min().unwrap(), *v.iter().max().unwrap());
            let mut m0 = 0;
            let mut m1 = 0;
            let n0_at = |k: i64| v.windows(2).filter(|w| w[0] == w[1] && w[0] == 2 * k).count() as u64;
            for k in lo.div_euclid(2) - 1..=hi.div_euclid(2) + 1 {
                m0 = m0.max(n0_at(k));
                let sloped = v
                    .windows(2)
                    .filter(|w| w[0] != w[1] && w[0].min(w[1]) < 2 * k + 2 && w[0].max(w[1]) > 2 * k)
                    .count() as u64;
                m1 = m1.max(sloped);
            }
            let cap = 1u64 << n;
            check(m0 <= cap && m1 <= 2 * (cap - 1), format!("prefix {mask:010b} n={n}: M0 {m0}, M1 {m1}"))?;
            // flat pieces of the level path sit at 2 k_n
            let k: i64 = (0..n)
                .map(|m| (levels[2 * m].value() + levels[2 * m + 1].value()) * (1i64 << (2 * (n - m - 1))))
                .sum::<i64>()
                / 2;
            check(n0_at(k) == cap, format!("prefix {mask:010b} n={n}: N0 at k={k} is {}", n0_at(k)))?;
            checked += 1;
        }
    }
    Ok(format!("1024 prefixes, {checked} stages"))
}

fn criterion_4() -> Outcome {
    let ext = lib(extremal_flexible(13))?;
    let target = extremal_level();
    check(target == rat(8, 17), "limit is not 8/17")?;
    let mut last_gap = BigRational::one();
    for b in &ext.baselines {
        let y = b.value();
        // the baselines follow the base-4 expansion 0.(1320) of 8/17 to within one unit
        let gap = (&y - &target).abs();
        let unit = BigRational::new(BigInt::one(), BigInt::one() << (2 * b.n));
        check(gap < unit, format!("y_{} = {y} is {gap} from 8/17", b.n))?;
        if b.n >= 1 {
            check(gap <= last_gap, format!("y_{} moved away from 8/17", b.n))?;
        }
        last_gap = gap;
    }
    let mut v = [1i64, 0];
    for (n, got) in ext.two_stage_counts().iter().enumerate() {
        check(got[0] as i64 == v[0] && got[1] as i64 == v[1], format!("stage {n}: {got:?} vs {v:?}"))?;
        v = [6 * v[0] + 4 * v[1], 6 * v[0] + 3 * v[1]];
    }
    let totals = ext.total_counts();
    let depths: Vec<u32> = (8..=13).map(|n| 2 * n).collect();
    let dim = lib(ratio_dimension(&depths, &totals[8..=13], 2))?;
    let want = alpha().ln() / 16f64.ln();
    let ls = lib(fit_dimension(&depths, &totals[8..=13]))?.slope;
    check((dim - want).abs() <= 1e-3, format!("ratio fit {dim:.6} vs {want:.6} (least squares {ls:.6})"))?;
    Ok(format!(
        "|y_13 - 8/17| = {:.3e}, fit {dim:.6} vs {want:.6} (least squares {ls:.4})",
        last_gap.to_f64().unwrap()
    ))
}

fn criterion_5() -> Outcome {
    let gray = SignProvider::Rademacher;
    let mut gf = GridFunction::zero();
    for n in 1..=16u32 {
        gf = lib(gf.refine(&gray))?;
        for (j, &s) in gf.slopes().iter().enumerate() {
            check((s as i64 - n as i64 - 2 * j as i64).rem_euclid(4) == 0, format!("slope {s} at n={n}, j={j}"))?;
        }
        if n <= 12 {
            // slope from the sign and tent-derivative series
            for (j, &s) in gf.slopes().iter().enumerate() {
                let j = j as u64;
                let direct: i64 = (0..n)
                    .map(|i| {
                        let omega = if (j >> (n - i)) & 1 == 0 { 1 } else { -1 };
                        let rising = if (j >> (n - 1 - i)) & 1 == 0 { 1 } else { -1 };
                        omega * rising
                    })
                    .sum();
                check(direct == s as i64, format!("slope at n={n}, j={j}: {s} vs {direct}"))?;
            }
        }
    }
    let cover = lib(cover_level(&gray, &rat(2, 5), 20))?;
    let depths: Vec<u32> = (8..=20).collect();
    let fit = lib(fit_dimension(&depths, &cover.counts[7..20]))?;
    check((fit.slope - 0.5).abs() <= 0.05, format!("level 2/5 fit {:.4}", fit.slope))?;
    let zeros = lib(gray_zero_points(6))?;
    check((zeros.dimension - d0()).abs() <= 1e-12, format!("zero set dimension {}", zeros.dimension))?;
    let x_star = rat(11, 15);
    check(zeros.x_star == x_star, "accumulation point")?;
    let (lo, hi) = lib(eval_enclosure_rational(&gray, &x_star, 40))?;
    check(lo <= BigRational::zero() && hi >= BigRational::zero(), format!("enclosure [{lo}, {hi}]"))?;
    Ok(format!("level 2/5 fit {:.4}, zero set dimension {:.12}", fit.slope, zeros.dimension))
}

fn criterion_6() -> Outcome {
    let (e, f) = (named::e(), named::f());
    let probs = [Probability::half(), lib(Probability::new(2, 5))?, lib(Probability::new(3, 5))?];
    let mut nontrivial = 0;
    for case in 0..200u64 {
        let p = &probs[(case % 3) as usize];
        let provider = if case % 2 == 0 {
            SignProvider::model2(10_000 + case, p.clone())
        } else {
            SignProvider::model1(10_000 + case, p.clone())
        };
        let dense = lib(GridFunction::build(&provider, 20))?;
        let j = (uniform(case, Stream::Sample, 0, 0) * (1 << 20) as f64) as usize;
        let v = dense.values()[j];
        // half the levels sit exactly on grid values, half just off them
        let y = if case % 4 < 2 { rat(v, 1 << 20) } else { rat(2 * v + 1, 1 << 21) };
        let mut tracker = lib(TripleTracker::new(&provider, &y))?;
        let mut prev = *tracker.state();
        for n in 1..=10u32 {
            let next = lib(tracker.step())?;
            if !(dominated(&next, &e, &prev) || dominated(&next, &f, &prev)) {
                return Err(format!("case {case}, y = {y}, stage {n}: {:?} after {:?}", next.vector(), prev.vector()));
            }
            if prev.c + prev.sigma > 0 {
                nontrivial += 1;
            }
            prev = next;
        }
        let oracle = lib(triple_at(&dense, &y))?;
        check(oracle == prev, format!("case {case}: tracker {prev:?} vs dense {oracle:?}"))?;
    }
    check(nontrivial >= 1000, format!("only {nontrivial} nontrivial transitions"))?;
    Ok(format!("200 pairs, 2000 transitions ({nontrivial} nontrivial), 0 violations"))
}

fn criterion_7() -> Outcome {
    let y = rat(1, 3);
    let mut worst = (0u64, 0u64, 0u32);
    let mut over = 0;
    for seed in 0..100u64 {
        let provider = SignProvider::model2(seed, Probability::half());
        let cover = lib(cover_level(&provider, &y, 20))?;
        let (i, &m) = cover.counts.iter().enumerate().max_by_key(|(_, c)| **c).unwrap();
        if m > 8 {
            over += 1;
        }
        if m > worst.1 {
            worst = (seed, m, i as u32 + 1);
        }
    }
    let detail = format!(
        "{over} of 100 functions exceed 8 cells; worst seed {} with {} cells at depth {}",
        worst.0, worst.1, worst.2
    );
    check(over == 0, detail.clone())?;
    Ok(detail)
}

fn criterion_8() -> Outcome {
    let report = lib(statistical_suite())?;
    for c in &report.checks {
        println!("    {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    check(failed.is_empty(), failed.join("; "))?;
    Ok(format!("{} statistical checks", report.checks.len()))
}

fn criterion_9() -> Outcome {
    let rm = random_moran_dimension();
    let psi = |x: f64| (1.0 - (1.0 - x * x).sqrt()) / x;
    let residual = 2.0 * rm.r * psi(rm.r) + psi(rm.r).powi(2) - 1.0;
    check(residual.abs() < 1e-12, format!("equation residual {residual:e}"))?;
    let r2 = (5f64.sqrt() - 1.0) / 2.0;
    check((rm.r * rm.r - r2).abs() <= 1e-12, format!("r^2 = {}", rm.r * rm.r))?;
    check((rm.dimension - d0()).abs() <= 1e-12, format!("dimension {}", rm.dimension))?;
    Ok(format!("r^2 = {:.15}, dimension {:.12}", rm.r * rm.r, rm.dimension))
}

fn criterion_10() -> Outcome {
    let scan = lib(rho_k_limit_scan(200))?;
    check(scan.min_rho <= golden() + 1e-3, format!("min rho {} at k={}", scan.min_rho, scan.argmin))?;
    // power iteration on the same tridiagonal matrices
    for k in [3usize, 10, 50, 200] {
        let m: Vec<Vec<f64>> = tridiagonal(k).iter().map(|r| r.iter().map(|x| x.to_f64().unwrap()).collect()).collect();
        let mut v = vec![1.0; k + 1];
        let mut lambda = 0.0;
        for _ in 0..20_000 {
            let w: Vec<f64> = m.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
            lambda = w.iter().sum::<f64>() / v.iter().sum::<f64>();
            let s: f64 = w.iter().sum();
            v = w.iter().map(|x| x / s).collect();
        }
        let rho = lib(rho_k(k))?;
        check((rho - lambda).abs() < 1e-8, format!("rho_{k} {rho} vs power iteration {lambda}"))?;
    }
    let mut worst = 0.0f64;
    for k in 2..=20 {
        let (_, xi) = lib(zeta_xi(k))?;
        let rho = lib(rho_k(k))?;
        let r = xi.unwrap().eval_f64(rho).abs();
        worst = worst.max(r);
        check(r < 1e-9, format!("xi_{k}(rho_{k}) = {r:e}"))?;
    }
    Ok(format!("min rho {:.6} at k={}, golden {:.6}, worst residual {worst:.1e}", scan.min_rho, scan.argmin, golden()))
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_takagi");
    let mut bytes = 0;
    for (model, p, trials, depth) in [(1, "1/2", 60, 30), (2, "4/5", 60, 24), (2, "1/2", 40, 20)] {
        let mut outputs = Vec::new();
        for jobs in [1, 3, 8] {
            let out = dir.path().join(format!("m{model}-{jobs}.jsonl"));
            let status = Command::new(bin)
                .args(["--jobs", &jobs.to_string(), "simulate", "--model", &model.to_string(), "--p", p])
                .args(["--trials", &trials.to_string(), "--depth", &depth.to_string(), "--seed-base", "11"])
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            check(status.status.success(), String::from_utf8_lossy(&status.stderr).to_string())?;
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        check(outputs.windows(2).all(|w| w[0] == w[1]), format!("model {model} p={p}: outputs differ"))?;
        check(outputs[0].iter().filter(|&&b| b == b'\n').count() == trials, "one line per trial")?;
        bytes += outputs[0].len();
    }
    Ok(format!("3 configs x jobs {{1,3,8}} identical ({bytes} bytes)"))
}

fn criteria() -> Vec<Criterion> {
    let s = Duration::from_secs;
    vec![
        Criterion { id: 1, name: "exact identity suite", budget: s(5), run: criterion_1 },
        Criterion { id: 2, name: "JSR bracket", budget: s(60), run: criterion_2 },
        Criterion { id: 3, name: "level-constant count bounds", budget: s(120), run: criterion_3 },
        Criterion { id: 4, name: "extremal construction", budget: s(30), run: criterion_4 },
        Criterion { id: 5, name: "Gray-Takagi function", budget: s(60), run: criterion_5 },
        Criterion { id: 6, name: "E-or-F domination", budget: s(60), run: criterion_6 },
        Criterion { id: 7, name: "y = 1/3 covers stay small", budget: s(30), run: criterion_7 },
        Criterion { id: 8, name: "Monte Carlo suite", budget: s(900), run: criterion_8 },
        Criterion { id: 9, name: "random Moran solver", budget: s(1), run: criterion_9 },
        Criterion { id: 10, name: "rho_k scan", budget: s(30), run: criterion_10 },
        Criterion { id: 11, name: "simulate reproducibility", budget: s(60), run: criterion_11 },
    ]
}

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    let mut failed = Vec::new();
    for c in criteria().into_iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (passed, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; took {elapsed:.1?}, budget {:?}", c.budget)),
            Err(d) => (false, d),
        };
        println!(
            "{} {:>2} {} ({:.2?}): {detail}",
            if passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed
        );
        if !passed {
            failed.push(c.id);
            if !KNOWN_FAILURES.contains(&c.id) {
                unexpected.push(c.id);
            }
        }
    }
    println!("acceptance: {} failed {failed:?}, unexpected {unexpected:?}", failed.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
