//! The `takagi` command line: argument parsing, config files and artifact output.
//!
//! Every artifact starts with the effective configuration (a `#` line for CSV,
//! a `config` object for JSON, a comment for SVG). Settings that only affect
//! execution (`jobs`, output paths) are left out so reruns compare equal.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::constructions::{
    extremal_flexible, extremal_level, gray_level_two_fifths, gray_zero_points, line_cover, line_reduction,
    rigid_extremal_level, verify_rigid_bounds, MAX_EXTREMAL_STAGES,
};
use crate::dyadic::{format_rational, parse_rational};
use crate::error::{Error, Result};
use crate::levelsets::{cover_level, max_set_cover, ratio_dimension, CoverReport};
use crate::piecewise::GridFunction;
use crate::randomsim::{records_to_jsonl, simulate, statistical_suite, four_case_table_check, SimConfig};
use crate::rng::Probability;
use crate::signs::{Sign, SignProvider};
use crate::spectra::{
    a_k_family, char_poly_monic, jsr_bracket, moran_dimension, named, parse_matrix_set, random_moran_dimension,
    spectral_radius, verify_jsr_identities_for, verify_transcriptions, AkVariant, IdentityReport,
    RationalMatrix,
};

const COMMANDS: [&str; 10] =
    ["render", "levelset", "dimension", "jsr", "extremal", "gray", "line", "simulate", "matrices", "selftest"];

#[derive(Parser, Debug)]
#[command(name = "takagi", version, about = "Level sets, maxima and spectral bounds for Takagi-type functions")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Flat `key = value` file of flag values; flags on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate or plot the partial sum f_n.
    Render(RenderArgs),
    /// Box counts of a level set.
    Levelset(LevelsetArgs),
    /// Dimension estimates: level, zero or maximum sets, and Moran equations.
    Dimension(DimensionArgs),
    /// Joint spectral radius bracket of a matrix set.
    Jsr(JsrArgs),
    /// The extremal construction, or a rigid level from a level-sign string.
    Extremal(ExtremalArgs),
    /// Gray Takagi zero set and the level 2/5.
    Gray(GrayArgs),
    /// Intersection of the graph with a line.
    Line(LineArgs),
    /// Seeded Monte Carlo trials written as JSON lines.
    Simulate(SimulateArgs),
    /// Named matrices with characteristic polynomials and spectral radii.
    Matrices(MatricesArgs),
    /// Exact identity suites, optionally with the statistical suite.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args, Debug, Serialize)]
pub struct FunctionArgs {
    /// Sign provider such as `all-plus`, `gray`, `alternating`, `model2 seed=7 p=1/2`;
    /// `;` separates lines of multi-line descriptions.
    #[arg(long, conflicts_with = "function_file")]
    pub function: Option<String>,
    /// File holding a sign provider description.
    #[arg(long)]
    pub function_file: Option<PathBuf>,
}

impl FunctionArgs {
    fn provider(&self) -> Result<SignProvider> {
        match (&self.function, &self.function_file) {
            (Some(text), _) => SignProvider::from_text(&text.replace(';', "\n")).map_err(|e| e.for_flag("--function")),
            (None, Some(path)) => {
                let text = read_file(path, "--function-file")?;
                SignProvider::from_text(&text).map_err(|e| e.for_flag("--function-file"))
            }
            (None, None) => Err(Error::Domain("--function: a sign provider is required".into())),
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct OutputArgs {
    /// Output file (default: standard output).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct RenderArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub function: FunctionArgs,
    #[arg(long, default_value_t = 12)]
    pub depth: u32,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct LevelsetArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub function: FunctionArgs,
    /// Level as `num/den`, `k/2^n` or an integer.
    #[arg(long)]
    pub y: String,
    #[arg(long, default_value_t = 20)]
    pub max_depth: u32,
    /// First depth used in the dimension fit.
    #[arg(long)]
    pub fit_from: Option<u32>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetKind {
    Level,
    Zero,
    Max,
    Moran,
    RandomMoran,
}

#[derive(Args, Debug, Serialize)]
pub struct DimensionArgs {
    #[arg(long, value_enum, default_value_t = SetKind::Level)]
    pub set: SetKind,
    #[command(flatten)]
    #[serde(flatten)]
    pub function: FunctionArgs,
    /// Level for `--set level`.
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub max_depth: u32,
    #[arg(long)]
    pub fit_from: Option<u32>,
    /// Extra grid units of tolerance for `--set max`.
    #[arg(long, default_value_t = 0)]
    pub slack: i64,
    /// Moran pieces as `count:ratio` pairs separated by commas, e.g. `2:1/4,1:1/16`.
    #[arg(long)]
    pub pieces: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct JsrArgs {
    /// Matrix set file (blank-line separated blocks, optional `Name:` headers); default {E, F}.
    #[arg(long)]
    pub matrices: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub max_len: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremalTable {
    Counts,
    Baselines,
    Cells,
}

#[derive(Args, Debug, Serialize)]
pub struct ExtremalArgs {
    /// Number of two-level stages.
    #[arg(long, default_value_t = 8)]
    pub depth: u32,
    /// Level signs such as `+-+-`; switches to the rigid level of that sign sequence.
    #[arg(long)]
    pub levels: Option<String>,
    /// CSV table to write.
    #[arg(long, value_enum, default_value_t = ExtremalTable::Counts)]
    pub table: ExtremalTable,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct GrayArgs {
    /// Depth of the cover at level 2/5 (the copies are followed to half this many stages).
    #[arg(long, default_value_t = 20)]
    pub depth: u32,
    /// Number of zero points x_1, ..., x_m listed.
    #[arg(long, default_value_t = 6)]
    pub m_max: u32,
    #[arg(long)]
    pub fit_from: Option<u32>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct LineArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub function: FunctionArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub slope: i64,
    #[arg(long, allow_hyphen_values = true)]
    pub intercept: String,
    #[arg(long, default_value_t = 20)]
    pub depth: u32,
    #[arg(long)]
    pub fit_from: Option<u32>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: u8,
    #[arg(long)]
    pub p: String,
    #[arg(long)]
    pub trials: u64,
    #[arg(long)]
    pub depth: u32,
    #[arg(long, default_value_t = 0)]
    pub seed_base: u64,
    /// JSON-lines file receiving one record per trial.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Summary JSON file (default: standard output).
    #[arg(long)]
    #[serde(skip)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct MatricesArgs {
    /// Matrix set file; default the named matrices.
    #[arg(long)]
    pub matrices: Option<PathBuf>,
    /// Also list the tridiagonal bound A_k of this size.
    #[arg(long)]
    pub ak: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SelftestArgs {
    /// Also run the fixed-seed statistical suite.
    #[arg(long)]
    pub mc: bool,
    /// File with blocks named E and F replacing the built-in matrices.
    #[arg(long)]
    pub matrices: Option<PathBuf>,
}

fn read_file(path: &Path, flag: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Domain(format!("{flag}: cannot read {}: {e}", path.display())))
}

/// Inserts the `key = value` pairs of the `--config` file right after the
/// subcommand, so that later command-line flags override them.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            path = Some(strs.get(i + 1).cloned().ok_or_else(|| Error::Domain("--config: missing file name".into()))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = read_file(Path::new(&path), "--config")?;
    let mut command = None;
    let mut extra: Vec<OsString> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--config: line {} is not `key = value`", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match (key.as_str(), value) {
            ("command", v) => command = Some(v.to_string()),
            (_, "false") => {}
            (k, "true") => extra.push(format!("--{k}").into()),
            (k, v) => {
                extra.push(format!("--{k}").into());
                extra.push(v.into());
            }
        }
    }
    let mut out = args;
    let at = match strs.iter().position(|a| COMMANDS.contains(&a.as_str())) {
        Some(i) => i + 1,
        None => {
            let cmd = command.ok_or_else(|| Error::Domain("--config: no command given".into()))?;
            out.insert(1.min(out.len()), cmd.into());
            2.min(out.len())
        }
    };
    for (k, a) in extra.into_iter().enumerate() {
        out.insert(at + k, a);
    }
    Ok(out)
}

fn echo<T: Serialize>(command: &str, args: &T) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert("command".into(), json!(command));
    if let Ok(Value::Object(fields)) = serde_json::to_value(args) {
        for (k, v) in fields {
            if !v.is_null() {
                map.insert(k.replace('_', "-"), v);
            }
        }
    }
    map
}

fn echo_line(config: &Map<String, Value>) -> String {
    let mut parts = vec!["takagi".to_string()];
    for (k, v) in config {
        let v = match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        parts.push(format!("{k}={v}"));
    }
    parts.join(" ")
}

fn csv_with_header(config: &Map<String, Value>, body: &str) -> String {
    format!("# {}\n{body}", echo_line(config))
}

fn json_with_config(config: Map<String, Value>, mut body: Value) -> String {
    let mut out = Map::new();
    out.insert("config".into(), Value::Object(config));
    if let Value::Object(fields) = body.take() {
        out.extend(fields);
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(out)).expect("json value");
    text.push('\n');
    text
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Domain(format!("--out: cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn rational_flag(text: &str, flag: &str) -> Result<BigRational> {
    parse_rational(text).map_err(|e| e.for_flag(flag))
}

/// Depths skipped before the fit. By default the first four, fewer when that
/// would leave under four depths.
fn fit_skip(fit_from: Option<u32>, depth: u32, flag: &str) -> Result<usize> {
    let fit_from = fit_from.unwrap_or_else(|| 5.min(depth.saturating_sub(3)).max(1));
    if fit_from < 1 || fit_from + 3 > depth {
        return Err(Error::Domain(format!("{flag}: fit must start in 1..={} for depth {depth}", depth.saturating_sub(3))));
    }
    Ok(fit_from as usize - 1)
}

fn no_svg(format: Format, command: &str) -> Result<()> {
    if format == Format::Svg {
        return Err(Error::Domain(format!("--format: svg is not available for {command}")));
    }
    Ok(())
}

fn cover_output(config: Map<String, Value>, report: &CoverReport, format: Format) -> String {
    match format {
        Format::Json => json_with_config(config, serde_json::to_value(report).expect("report")),
        _ => csv_with_header(
            &config,
            &format!(
                "{}# dimension={:.6} residual={:.6}\n",
                report.to_csv(),
                report.fitted_dimension,
                report.residual
            ),
        ),
    }
}

fn render(a: &RenderArgs) -> Result<()> {
    let config = echo("render", a);
    let gf = GridFunction::build(&a.function.provider()?, a.depth).map_err(|e| e.for_flag("--depth"))?;
    let text = match a.format {
        Format::Csv => csv_with_header(&config, &gf.to_csv()),
        Format::Svg => gf.to_svg(Some(&echo_line(&config))),
        Format::Json => {
            let values: Vec<i64> = gf.values().to_vec();
            json_with_config(config, json!({ "depth": a.depth, "scale": format!("2^{}", a.depth), "values": values }))
        }
    };
    emit(&a.output.out, &text)
}

fn levelset(a: &LevelsetArgs) -> Result<()> {
    no_svg(a.format, "levelset")?;
    let config = echo("levelset", a);
    let y = rational_flag(&a.y, "--y")?;
    let skip = fit_skip(a.fit_from, a.max_depth, "--fit-from")?;
    let cover = cover_level(&a.function.provider()?, &y, a.max_depth).map_err(|e| e.for_flag("--max-depth"))?;
    let report = cover.report(skip).map_err(|e| e.for_flag("--y"))?;
    emit(&a.output.out, &cover_output(config, &report, a.format))
}

fn parse_pieces(text: &str) -> Result<Vec<(u64, BigRational)>> {
    text.split(',')
        .map(|piece| {
            let (count, ratio) = piece
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("--pieces: `{piece}` is not count:ratio")))?;
            let count = count
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("--pieces: bad count `{count}`")))?;
            Ok((count, rational_flag(ratio.trim(), "--pieces")?))
        })
        .collect()
}

fn dimension(a: &DimensionArgs) -> Result<()> {
    let config = echo("dimension", a);
    let body = match a.set {
        SetKind::Moran => {
            let text = a.pieces.as_deref().ok_or_else(|| Error::Domain("--pieces: required for --set moran".into()))?;
            json!({ "dimension": moran_dimension(&parse_pieces(text)?).map_err(|e| e.for_flag("--pieces"))? })
        }
        SetKind::RandomMoran => {
            let r = random_moran_dimension();
            json!({ "r": r.r, "r_squared": r.r * r.r, "dimension": r.dimension })
        }
        SetKind::Level | SetKind::Zero | SetKind::Max => {
            let provider = a.function.provider()?;
            let skip = fit_skip(a.fit_from, a.max_depth, "--fit-from")?;
            let cover = match a.set {
                SetKind::Max => max_set_cover(&provider, a.max_depth, a.slack),
                SetKind::Zero => cover_level(&provider, &BigRational::from_integer(0.into()), a.max_depth),
                _ => {
                    let y = a.y.as_deref().ok_or_else(|| Error::Domain("--y: required for --set level".into()))?;
                    cover_level(&provider, &rational_flag(y, "--y")?, a.max_depth)
                }
            }
            .map_err(|e| e.for_flag("--max-depth"))?;
            serde_json::to_value(cover.report(skip)?).expect("report")
        }
    };
    emit(&a.output.out, &json_with_config(config, body))
}

fn load_matrices(path: &Option<PathBuf>, flag: &str, default: Vec<(String, RationalMatrix)>) -> Result<Vec<(String, RationalMatrix)>> {
    match path {
        Some(p) => parse_matrix_set(&read_file(p, flag)?).map_err(|e| e.for_flag(flag)),
        None => Ok(default),
    }
}

fn jsr(a: &JsrArgs) -> Result<()> {
    let config = echo("jsr", a);
    let set = load_matrices(&a.matrices, "--matrices", vec![("E".into(), named::e()), ("F".into(), named::f())])?;
    let b = jsr_bracket(&set, a.max_len).map_err(|e| e.for_flag("--max-len"))?;
    let body = json!({
        "lower": b.lower,
        "upper": b.upper,
        "witness": b.witness,
        "length": b.length,
        "upper_by_length": b.upper_by_length,
        "lower_by_length": b.lower_by_length,
    });
    emit(&a.output.out, &json_with_config(config, body))
}

fn parse_signs(text: &str, flag: &str) -> Result<Vec<Sign>> {
    text.chars().map(Sign::from_symbol).collect::<Result<_>>().map_err(|e| e.for_flag(flag))
}

fn extremal(a: &ExtremalArgs) -> Result<()> {
    no_svg(a.format, "extremal")?;
    let config = echo("extremal", a);
    if let Some(levels) = &a.levels {
        let levels = parse_signs(levels, "--levels")?;
        let rigid = rigid_extremal_level(&levels).map_err(|e| e.for_flag("--levels"))?;
        verify_rigid_bounds(&levels).map_err(|e| e.for_flag("--levels"))?;
        let body = json!({ "y": format_rational(&rigid.y), "y_real": f64_of(&rigid.y), "k_path": rigid.k_path });
        return emit(&a.output.out, &json_with_config(config, body));
    }
    if a.depth > MAX_EXTREMAL_STAGES {
        return Err(Error::Resource(format!("--depth: at most {MAX_EXTREMAL_STAGES} stages")));
    }
    let e = extremal_flexible(a.depth).map_err(|e| e.for_flag("--depth"))?;
    let text = match a.format {
        Format::Json => {
            let totals = e.total_counts();
            let from = (a.depth as usize).saturating_sub(5);
            let depths: Vec<u32> = (0..=a.depth).map(|n| 2 * n).collect();
            let dim = ratio_dimension(&depths[from..], &totals[from..], 2).ok();
            let baselines: Vec<Value> = e
                .baselines
                .iter()
                .map(|b| json!({ "n": b.n, "y": format_rational(&b.value()), "y_real": f64_of(&b.value()) }))
                .collect();
            let body = json!({
                "level": format_rational(&extremal_level()),
                "baselines": baselines,
                "type_counts": e.type_counts(),
                "two_stage_counts": e.two_stage_counts(),
                "totals": totals,
                "ratio_dimension": dim,
                "target_dimension": named::flexible_dimension(),
            });
            json_with_config(config, body)
        }
        _ => {
            let body = match a.table {
                ExtremalTable::Baselines => e.baselines_csv(),
                ExtremalTable::Cells => e.cells_csv(),
                ExtremalTable::Counts => {
                    let mut s = String::from("n,type1,type2,type3,total\n");
                    for (n, t) in e.type_counts().iter().enumerate() {
                        s.push_str(&format!("{n},{},{},{},{}\n", t[0], t[1], t[2], t[0] + t[1] + t[2]));
                    }
                    s
                }
            };
            csv_with_header(&config, &body)
        }
    };
    emit(&a.output.out, &text)
}

fn f64_of(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

fn gray(a: &GrayArgs) -> Result<()> {
    no_svg(a.format, "gray")?;
    let config = echo("gray", a);
    let skip = fit_skip(a.fit_from, a.depth, "--fit-from")?;
    let cover = cover_level(&SignProvider::Rademacher, &crate::dyadic::rat(2, 5), a.depth)
        .map_err(|e| e.for_flag("--depth"))?;
    let report = cover.report(skip)?;
    let text = match a.format {
        Format::Json => {
            let zeros = gray_zero_points(a.m_max).map_err(|e| e.for_flag("--m-max"))?;
            let stages = gray_level_two_fifths(a.depth / 2).map_err(|e| e.for_flag("--depth"))?;
            let stages: Vec<Value> = stages
                .iter()
                .map(|s| {
                    json!({
                        "n": s.n,
                        "y": format_rational(&s.y()),
                        "copies": s.copies.len(),
                        "orientation": format!("{:?}", s.orientation).to_lowercase(),
                    })
                })
                .collect();
            let samples: Vec<Value> = zeros
                .samples
                .iter()
                .map(|s| json!({ "m": s.m, "x": format_rational(&s.x), "residual": s.residual, "slack": s.slack }))
                .collect();
            let body = json!({
                "zero_points": zeros.x_list.iter().map(format_rational).collect::<Vec<_>>(),
                "x_star": format_rational(&zeros.x_star),
                "self_similarity": samples,
                "zero_set_dimension": zeros.dimension,
                "two_fifths_stages": stages,
                "two_fifths_cover": report,
            });
            json_with_config(config, body)
        }
        _ => cover_output(config, &report, a.format),
    };
    emit(&a.output.out, &text)
}

fn line(a: &LineArgs) -> Result<()> {
    no_svg(a.format, "line")?;
    let config = echo("line", a);
    let provider = a.function.provider()?;
    let b = rational_flag(&a.intercept, "--intercept")?;
    let skip = fit_skip(a.fit_from, a.depth, "--fit-from")?;
    let reduction = line_reduction(&provider, a.slope, &b).map_err(|e| e.for_flag("--slope"))?;
    let counts = line_cover(&provider, a.slope, &b, a.depth).map_err(|e| e.for_flag("--depth"))?;
    let report = CoverReport::new((1..=a.depth).collect(), counts, skip)?;
    let text = match a.format {
        Format::Json => {
            let body = json!({
                "reduced_function": reduction.provider.to_text().trim_end().replace('\n', ";"),
                "reduced_level": format_rational(&reduction.level),
                "cover": report,
            });
            json_with_config(config, body)
        }
        _ => cover_output(config, &report, a.format),
    };
    emit(&a.output.out, &text)
}

fn simulate_cmd(a: &SimulateArgs, jobs: usize) -> Result<()> {
    let p = Probability::from_rational(&rational_flag(&a.p, "--p")?).map_err(|e| e.for_flag("--p"))?;
    let config = SimConfig { model: a.model, p, trials: a.trials, depth: a.depth, seed_base: a.seed_base };
    let (records, summary) = simulate(&config, jobs)?;
    std::fs::write(&a.out, records_to_jsonl(&records)?)
        .map_err(|e| Error::Domain(format!("--out: cannot write {}: {e}", a.out.display())))?;
    let mut body = serde_json::to_value(&summary).expect("summary");
    if let Some(fields) = body.as_object_mut() {
        fields.remove("config");
    }
    let text = json_with_config(echo("simulate", a), body);
    match &a.summary {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Domain(format!("--summary: cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn matrix_entry(name: &str, m: &RationalMatrix) -> Value {
    let rows: Vec<Vec<String>> = (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| format_rational(m.get(i, j))).collect())
        .collect();
    json!({
        "name": name,
        "rows": rows,
        "char_poly": char_poly_monic(m).to_string(),
        "spectral_radius": spectral_radius(m, 1e-12).ok(),
    })
}

fn matrices(a: &MatricesArgs) -> Result<()> {
    let config = echo("matrices", a);
    let default = vec![
        ("E".to_string(), named::e()),
        ("F".to_string(), named::f()),
        ("G".to_string(), named::g()),
        ("D".to_string(), named::d()),
        ("A".to_string(), named::a()),
        ("B".to_string(), named::b()),
        ("M".to_string(), named::m()),
        ("M_hat".to_string(), named::m_hat()),
    ];
    let mut set = load_matrices(&a.matrices, "--matrices", default)?;
    if let Some(k) = a.ak {
        set.push((format!("A_{k}"), a_k_family(k, AkVariant::Full).map_err(|e| e.for_flag("--ak"))?));
    }
    let list: Vec<Value> = set.iter().map(|(n, m)| matrix_entry(n, m)).collect();
    emit(&a.output.out, &json_with_config(config, json!({ "matrices": list })))
}

fn exact_suite(e: &RationalMatrix, f: &RationalMatrix) -> Result<IdentityReport> {
    let mut r = verify_transcriptions(e, f);
    r.extend(verify_jsr_identities_for(e, f));

    let table = four_case_table_check(4, 100, 6, 1)?;
    let detail = match table.violations.first() {
        Some(v) => v.clone(),
        None => format!("{} states, {} rows", table.states, table.rows_checked),
    };
    r.push("zero-set four-case table (k = 4)", table.passed(), detail);

    for text in ["all-plus", "alternating", "gray", "rademacher-product", "model1 seed=1 p=1/2", "model2 seed=2 p=1/2"] {
        let provider = SignProvider::from_text(text)?;
        let checked = GridFunction::build(&provider, 14).and_then(|gf| gf.check_invariants());
        r.push(format!("grid invariants {text}"), checked.is_ok(), checked.err().map(|e| e.to_string()).unwrap_or_default());
    }

    let mut rigid_failure = None;
    for len in [2usize, 4, 6, 8] {
        for mask in 0u32..1 << len {
            let levels: Vec<Sign> = (0..len).map(|i| Sign::from_bool(mask >> i & 1 == 0)).collect();
            if let Err(e) = verify_rigid_bounds(&levels) {
                rigid_failure.get_or_insert(e.to_string());
            }
        }
    }
    r.push("rigid level bounds (n <= 4)", rigid_failure.is_none(), rigid_failure.unwrap_or_default());

    let ext = extremal_flexible(8)?;
    let m_hat = named::m_hat();
    let mut v = vec![1u64, 0];
    let mut ok = true;
    for (n, got) in ext.two_stage_counts().iter().enumerate() {
        ok &= got[..] == v[..];
        if n + 1 < ext.two_stage_counts().len() {
            let next = m_hat.apply_u64(&v);
            v = next.iter().map(|x| num_traits::ToPrimitive::to_u64(&x.to_integer()).unwrap_or(0)).collect();
        }
    }
    r.push("extremal two-stage counts follow M-hat", ok, format!("totals {:?}", ext.total_counts()));
    Ok(r)
}

fn selftest(a: &SelftestArgs) -> Result<()> {
    let (e, f) = match &a.matrices {
        None => (named::e(), named::f()),
        Some(path) => {
            let set = load_matrices(&Some(path.clone()), "--matrices", Vec::new())?;
            let find = |name: &str| {
                set.iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, m)| m.clone())
                    .ok_or_else(|| Error::Domain(format!("--matrices: no block named {name}")))
            };
            (find("E")?, find("F")?)
        }
    };
    let mut report = exact_suite(&e, &f)?;
    if a.mc {
        report.extend(statistical_suite()?);
    }
    // a closed pipe on stdout must not hide the verdict
    let mut out = std::io::stdout().lock();
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let _ = if c.detail.is_empty() {
            writeln!(out, "{status} {}", c.name)
        } else {
            writeln!(out, "{status} {}: {}", c.name, c.detail)
        };
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(out, "{} checks, {failed} failed", report.checks.len());
    report.ensure()
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let jobs = match cli.jobs {
        Some(0) => return Err(Error::Domain("--jobs: must be positive".into())),
        Some(j) => j,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Resource(format!("--jobs: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Render(a) => render(a),
        Command::Levelset(a) => levelset(a),
        Command::Dimension(a) => dimension(a),
        Command::Jsr(a) => jsr(a),
        Command::Extremal(a) => extremal(a),
        Command::Gray(a) => gray(a),
        Command::Line(a) => line(a),
        Command::Simulate(a) => simulate_cmd(a, jobs),
        Command::Matrices(a) => matrices(a),
        Command::Selftest(a) => selftest(a),
    })
}

/// Parses `args` (including the program name), runs, and returns the exit status.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("error: invalid arguments"));
            return 1;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
