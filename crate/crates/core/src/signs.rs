//! Sign sources `ω_{n,j}` defining members of the class of generalized Takagi functions.

use std::fmt::{self, Write as _};
use std::ops::Neg;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{self, Probability, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    #[inline]
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => domain(format!("sign must be ±1, got {v}")),
        }
    }

    #[inline]
    pub fn from_bool(plus: bool) -> Self {
        if plus {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn from_symbol(c: char) -> Result<Self> {
        match c {
            '+' => Ok(Sign::Plus),
            '-' => Ok(Sign::Minus),
            _ => Err(Error::Parse(format!("expected `+` or `-`, got `{c}`"))),
        }
    }
}

impl Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Signs stored for levels `0..depth`, one bit per cell; deeper levels use `default`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitTree {
    rows: Vec<Vec<u64>>,
    default: Sign,
}

impl ExplicitTree {
    /// All stored signs start at `+1`.
    pub fn new(depth: u32, default: Sign) -> Self {
        let rows = (0..depth)
            .map(|n| vec![0u64; ((1usize << n) + 63) / 64])
            .collect();
        Self { rows, default }
    }

    pub fn depth(&self) -> u32 {
        self.rows.len() as u32
    }

    pub fn default_sign(&self) -> Sign {
        self.default
    }

    pub fn set(&mut self, n: u32, j: u64, sign: Sign) {
        let row = &mut self.rows[n as usize];
        let (w, b) = ((j / 64) as usize, j % 64);
        match sign {
            Sign::Minus => row[w] |= 1 << b,
            Sign::Plus => row[w] &= !(1 << b),
        }
    }

    #[inline]
    pub fn get(&self, n: u32, j: u64) -> Sign {
        match self.rows.get(n as usize) {
            Some(row) => Sign::from_bool(row[(j / 64) as usize] >> (j % 64) & 1 == 0),
            None => self.default,
        }
    }
}

/// A total, deterministic assignment of `ω_{n,j}` for every level `n` and cell `0 <= j < 2^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SignProvider {
    /// Takagi's function.
    AllPlus,
    /// `ω_n = (-1)^n`.
    Alternating,
    /// `ω_{n,j} = (-1)^j`, the Gray Takagi function.
    Rademacher,
    /// `ω_n(x) = r_1(x) ⋯ r_n(x)`.
    RademacherProduct,
    /// One sign per level. Past the listed levels the list repeats if `repeat`, otherwise `+1`.
    ConstantLevels { levels: Vec<Sign>, repeat: bool },
    ExplicitTree(ExplicitTree),
    /// i.i.d. level signs with `P(+1) = p`.
    SeededModel1 { seed: u64, p: Probability },
    /// i.i.d. cell signs with `P(+1) = p`.
    SeededModel2 { seed: u64, p: Probability },
    /// Levels below `shift` carry `prefix`; level `shift + n`, cell `j` carries
    /// the inner sign at `(n, j mod 2^n)`. This is the sign pattern of
    /// `±Σ_{k<m} 2^-k φ(2^k x) + 2^-m f(2^m x)` for a 1-periodic `f`.
    Rescaled { shift: u32, prefix: Sign, inner: Box<SignProvider> },
    /// The signs of `-f`.
    Negated(Box<SignProvider>),
}

impl SignProvider {
    pub fn model1(seed: u64, p: Probability) -> Self {
        SignProvider::SeededModel1 { seed, p }
    }

    pub fn model2(seed: u64, p: Probability) -> Self {
        SignProvider::SeededModel2 { seed, p }
    }

    pub fn constant_levels(levels: Vec<Sign>) -> Self {
        SignProvider::ConstantLevels { levels, repeat: false }
    }

    /// `ω_{n,j}`; errors when `j` is outside `[0, 2^n)`.
    pub fn sign_at(&self, n: u32, j: u64) -> Result<Sign> {
        if n >= 64 || j >> n != 0 {
            return domain(format!("cell index {j} out of range at level {n}"));
        }
        Ok(self.sign(n, j))
    }

    /// Unchecked `ω_{n,j}`; the caller guarantees `j < 2^n`.
    #[inline]
    pub fn sign(&self, n: u32, j: u64) -> Sign {
        match self {
            SignProvider::AllPlus => Sign::Plus,
            SignProvider::Alternating => Sign::from_bool(n % 2 == 0),
            SignProvider::Rademacher => Sign::from_bool(j % 2 == 0),
            SignProvider::RademacherProduct => {
                // floor(2^i x) = j >> (n - i) on cell j of level n
                let parity = (0..n).fold(0u64, |acc, t| acc ^ (j >> t)) & 1;
                Sign::from_bool(parity == 0)
            }
            SignProvider::ConstantLevels { levels, repeat } => {
                if levels.is_empty() {
                    Sign::Plus
                } else if (n as usize) < levels.len() {
                    levels[n as usize]
                } else if *repeat {
                    levels[n as usize % levels.len()]
                } else {
                    Sign::Plus
                }
            }
            SignProvider::ExplicitTree(tree) => tree.get(n, j),
            SignProvider::SeededModel1 { seed, p } => {
                Sign::from_bool(p.accepts(rng::bits(*seed, Stream::LevelSign, n as u64, 0)))
            }
            SignProvider::SeededModel2 { seed, p } => {
                Sign::from_bool(p.accepts(rng::bits(*seed, Stream::CellSign, n as u64, j)))
            }
            SignProvider::Rescaled { shift, prefix, inner } => {
                if n < *shift {
                    *prefix
                } else {
                    let m = n - shift;
                    inner.sign(m, j & ((1u64 << m) - 1))
                }
            }
            SignProvider::Negated(inner) => -inner.sign(n, j),
        }
    }

    /// True when `ω_{n,j}` does not depend on `j` (the class of constant-level functions).
    pub fn is_constant_levels(&self) -> bool {
        match self {
            SignProvider::AllPlus
            | SignProvider::Alternating
            | SignProvider::ConstantLevels { .. }
            | SignProvider::SeededModel1 { .. } => true,
            SignProvider::Rescaled { inner, .. } | SignProvider::Negated(inner) => {
                inner.is_constant_levels()
            }
            _ => false,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_text(&mut out);
        out
    }

    fn write_text(&self, out: &mut String) {
        match self {
            SignProvider::AllPlus => out.push_str("all-plus\n"),
            SignProvider::Alternating => out.push_str("alternating\n"),
            SignProvider::Rademacher => out.push_str("rademacher\n"),
            SignProvider::RademacherProduct => out.push_str("rademacher-product\n"),
            SignProvider::ConstantLevels { levels, repeat } => {
                let signs: String = levels.iter().map(|s| s.symbol()).collect();
                let signs = if signs.is_empty() { "+".to_string() } else { signs };
                let _ = writeln!(out, "constant-levels {signs}{}", if *repeat { " repeat" } else { "" });
            }
            SignProvider::ExplicitTree(tree) => {
                let _ = writeln!(
                    out,
                    "explicit-tree depth={} default={}",
                    tree.depth(),
                    tree.default.symbol()
                );
                for n in 0..tree.depth() {
                    let row: String = (0..1u64 << n).map(|j| tree.get(n, j).symbol()).collect();
                    out.push_str(&row);
                    out.push('\n');
                }
            }
            SignProvider::SeededModel1 { seed, p } => {
                let _ = writeln!(out, "model1 seed={seed} p={p}");
            }
            SignProvider::SeededModel2 { seed, p } => {
                let _ = writeln!(out, "model2 seed={seed} p={p}");
            }
            SignProvider::Rescaled { shift, prefix, inner } => {
                let _ = writeln!(out, "rescaled shift={shift} prefix={}", prefix.symbol());
                inner.write_text(out);
            }
            SignProvider::Negated(inner) => {
                out.push_str("negated\n");
                inner.write_text(out);
            }
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let provider = Self::parse_lines(&mut lines)?;
        if let Some(extra) = lines.next() {
            return Err(Error::Parse(format!("trailing provider line `{extra}`")));
        }
        Ok(provider)
    }

    fn parse_lines<'a>(lines: &mut impl Iterator<Item = &'a str>) -> Result<Self> {
        let head = lines
            .next()
            .ok_or_else(|| Error::Parse("empty provider description".into()))?;
        let mut words = head.split_whitespace();
        let kind = words.next().unwrap_or_default();
        let params: Vec<(&str, &str)> = words
            .clone()
            .filter_map(|w| w.split_once('='))
            .collect();
        let param = |key: &str| -> Result<&str> {
            params
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Parse(format!("`{kind}` needs `{key}=`")))
        };
        let parse_u64 = |key: &str| -> Result<u64> {
            param(key)?
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer for `{key}`")))
        };
        let parse_sign = |key: &str| -> Result<Sign> {
            match param(key)? {
                "+" | "+1" | "1" => Ok(Sign::Plus),
                "-" | "-1" => Ok(Sign::Minus),
                other => Err(Error::Parse(format!("bad sign `{other}` for `{key}`"))),
            }
        };
        let parse_p = || -> Result<Probability> {
            Probability::from_rational(&crate::dyadic::parse_rational(param("p")?)?)
        };
        match kind {
            "all-plus" | "takagi" => Ok(SignProvider::AllPlus),
            "alternating" => Ok(SignProvider::Alternating),
            "rademacher" | "gray" => Ok(SignProvider::Rademacher),
            "rademacher-product" => Ok(SignProvider::RademacherProduct),
            "constant-levels" => {
                let rest: Vec<&str> = words.collect();
                let signs = rest
                    .first()
                    .ok_or_else(|| Error::Parse("`constant-levels` needs a sign string".into()))?;
                let levels = signs.chars().map(Sign::from_symbol).collect::<Result<_>>()?;
                let repeat = rest.get(1) == Some(&"repeat");
                Ok(SignProvider::ConstantLevels { levels, repeat })
            }
            "model1" => Ok(SignProvider::model1(parse_u64("seed")?, parse_p()?)),
            "model2" => Ok(SignProvider::model2(parse_u64("seed")?, parse_p()?)),
            "explicit-tree" => {
                let depth = parse_u64("depth")? as u32;
                if depth > 30 {
                    return Err(Error::Resource(format!("explicit tree depth {depth} > 30")));
                }
                let default = if params.iter().any(|(k, _)| *k == "default") {
                    parse_sign("default")?
                } else {
                    Sign::Plus
                };
                let mut tree = ExplicitTree::new(depth, default);
                for n in 0..depth {
                    let row = lines
                        .next()
                        .ok_or_else(|| Error::Parse(format!("missing explicit-tree row {n}")))?;
                    if row.len() != 1usize << n {
                        return Err(Error::Parse(format!(
                            "explicit-tree row {n} has {} signs, expected {}",
                            row.len(),
                            1usize << n
                        )));
                    }
                    for (j, c) in row.chars().enumerate() {
                        tree.set(n, j as u64, Sign::from_symbol(c)?);
                    }
                }
                Ok(SignProvider::ExplicitTree(tree))
            }
            "rescaled" => {
                let shift = parse_u64("shift")? as u32;
                let prefix = parse_sign("prefix")?;
                let inner = Box::new(Self::parse_lines(lines)?);
                Ok(SignProvider::Rescaled { shift, prefix, inner })
            }
            "negated" => Ok(SignProvider::Negated(Box::new(Self::parse_lines(lines)?))),
            other => Err(Error::Parse(format!("unknown provider kind `{other}`"))),
        }
    }
}

impl FromStr for SignProvider {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

impl fmt::Display for SignProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_text().trim_end())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn floor_rademacher(i: u32, x_num: u64, x_exp: u32) -> i64 {
        // r_i(x) = (-1)^floor(2^i x), x = x_num / 2^x_exp, i <= x_exp
        if (x_num >> (x_exp - i)) % 2 == 0 {
            1
        } else {
            -1
        }
    }

    #[test]
    fn named_examples() {
        assert_eq!(SignProvider::AllPlus.sign_at(5, 17).unwrap(), Sign::Plus);
        assert_eq!(SignProvider::Rademacher.sign_at(3, 5).unwrap(), Sign::Minus);
        assert_eq!(SignProvider::RademacherProduct.sign_at(2, 1).unwrap(), Sign::Minus);
        assert_eq!(SignProvider::Alternating.sign_at(3, 0).unwrap(), Sign::Minus);
    }

    #[test]
    fn out_of_range() {
        assert!(SignProvider::AllPlus.sign_at(3, 8).is_err());
        assert!(SignProvider::AllPlus.sign_at(0, 1).is_err());
        assert!(SignProvider::AllPlus.sign_at(0, 0).is_ok());
    }

    #[test]
    fn rademacher_product_matches_floor_products() {
        for n in 0..=12u32 {
            for j in 0..1u64 << n {
                // evaluate at the cell midpoint (2j+1)/2^(n+1)
                let x_num = 2 * j + 1;
                let expected: i64 = (1..=n).map(|i| floor_rademacher(i, x_num, n + 1)).product();
                assert_eq!(SignProvider::RademacherProduct.sign(n, j).value(), expected);
            }
        }
    }

    #[test]
    fn model1_ignores_cell() {
        let p = SignProvider::model1(99, Probability::half());
        for n in 0..12 {
            let s0 = p.sign(n, 0);
            assert!((0..1u64 << n).all(|j| p.sign(n, j) == s0));
        }
    }

    #[test]
    fn deterministic_queries() {
        let providers = [
            SignProvider::model2(3, Probability::half()),
            SignProvider::model1(3, Probability::new(3, 4).unwrap()),
            SignProvider::RademacherProduct,
        ];
        for p in &providers {
            for n in 0..=14 {
                let a: Vec<Sign> = (0..1u64 << n).map(|j| p.sign(n, j)).collect();
                let b: Vec<Sign> = (0..1u64 << n).map(|j| p.sign(n, j)).collect();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let mut tree = ExplicitTree::new(3, Sign::Minus);
        tree.set(1, 1, Sign::Minus);
        tree.set(2, 2, Sign::Minus);
        let providers = vec![
            SignProvider::AllPlus,
            SignProvider::Rademacher,
            SignProvider::ConstantLevels { levels: vec![Sign::Plus, Sign::Minus], repeat: true },
            SignProvider::model2(17, Probability::new(3, 5).unwrap()),
            SignProvider::ExplicitTree(tree),
            SignProvider::Rescaled {
                shift: 2,
                prefix: Sign::Minus,
                inner: Box::new(SignProvider::Negated(Box::new(SignProvider::Rademacher))),
            },
        ];
        for p in providers {
            let back = SignProvider::from_text(&p.to_text()).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn parse_errors() {
        assert!(SignProvider::from_text("banana").is_err());
        assert!(SignProvider::from_text("model2 seed=3").is_err());
        assert!(SignProvider::from_text("explicit-tree depth=2\n+\n+-+").is_err());
        assert!(SignProvider::from_text("").is_err());
    }

    #[test]
    fn rescaled_reads_inner_periodically() {
        let g = SignProvider::Rescaled {
            shift: 1,
            prefix: Sign::Minus,
            inner: Box::new(SignProvider::Rademacher),
        };
        assert_eq!(g.sign(0, 0), Sign::Minus);
        // level 1 + 1, cells 0..4 read inner level 1 cells 0,1,0,1
        let got: Vec<i64> = (0..4).map(|j| g.sign(2, j).value()).collect();
        assert_eq!(got, vec![1, -1, 1, -1]);
    }
}
