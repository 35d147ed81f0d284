//! Command-line front end: `estimate`, `graph` and `simulate`.
//!
//! Input is a comma-separated file with a header row; empty cells are
//! missing. An optional manifest declares column kinds and run options:
//!
//! ```text
//! # column kinds
//! age      = continuous
//! severity = ordinal(3)
//! # options, overridden by command-line flags
//! @tau         = b
//! @lambda_path = 0.05, 0.1, 0.2
//! @hbic_cn     = 1.0
//! @seed        = 7
//! ```
//!
//! Columns missing from the manifest have their kind inferred.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::estimator::{
    estimate_with_config, infer_column_specs, project_psd, ColumnKind, ColumnSpec, EntryMethod, EstimatorConfig,
    LatentCorrelationMatrix, UnsupportedPolicy,
};
use crate::glasso::{default_lambda_path, partial_correlation, select_hbic, GlassoConfig, PrecisionEstimate};
use crate::kendall::TauVariant;
use crate::simulate::{concentration_check, scenario1, scenario2, ScenarioConfig};

#[derive(Debug, Parser)]
#[command(name = "mixcor", version, about = "Latent correlation and graph estimation for mixed ordinal/continuous data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the latent correlation matrix.
    Estimate(InputArgs),
    /// Estimate the latent correlation matrix, then a sparse precision matrix and its graph.
    Graph(GraphArgs),
    /// Run a simulation protocol.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TauFlag {
    A,
    B,
}

impl From<TauFlag> for TauVariant {
    fn from(t: TauFlag) -> Self {
        match t {
            TauFlag::A => TauVariant::TauA,
            TauFlag::B => TauVariant::TauB,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Column kinds and options.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Kendall statistic to invert.
    #[arg(long, value_enum)]
    pub tau: Option<TauFlag>,
    /// Accepted for symmetry with `simulate`; estimation is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Mark unsupported ordinal pairs as missing instead of aborting.
    #[arg(long)]
    pub allow_partial: bool,
    /// Estimate unsupported ordinal pairs with the continuous formula.
    #[arg(long, conflicts_with = "allow_partial")]
    pub fallback_unsupported: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated penalties replacing the default path.
    #[arg(long, value_delimiter = ',')]
    pub lambda_path: Option<Vec<f64>>,
    /// Multiplier on the HBIC complexity term.
    #[arg(long)]
    pub hbic_cn: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Concentration,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub scenario: Scenario,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Replicates per grid point (scenarios 1 and 2).
    #[arg(long, default_value_t = 80)]
    pub reps: usize,
    /// Sample size (scenarios 1 and 2).
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Dimension (concentration).
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    /// Levels of the discretized columns (concentration).
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    /// Seeds averaged per sample size (concentration).
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
}

/// Failure with the pipeline stage it came from.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct CliError {
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    fn new(stage: &'static str, message: impl ToString) -> Self {
        Self {
            stage,
            message: message.to_string(),
        }
    }

    /// Machine-readable summary printed on failure.
    pub fn to_json(&self) -> Value {
        json!({ "status": "error", "stage": self.stage, "message": self.message })
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parsed manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub columns: Vec<(String, ColumnKind)>,
    pub tau: Option<TauVariant>,
    pub lambda_path: Option<Vec<f64>>,
    pub hbic_cn: Option<f64>,
    pub seed: Option<u64>,
}

impl Manifest {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut m = Manifest::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CliError::new("manifest", format!("line {}: {msg}", i + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `name = kind`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(opt) = key.strip_prefix('@') {
                match opt {
                    "tau" => {
                        m.tau = Some(match value {
                            "a" => TauVariant::TauA,
                            "b" => TauVariant::TauB,
                            _ => return Err(err(format!("tau must be a or b, got `{value}`"))),
                        })
                    }
                    "lambda_path" => {
                        let path = value
                            .split(',')
                            .map(|v| v.trim().parse::<f64>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|e| err(format!("bad lambda path: {e}")))?;
                        m.lambda_path = Some(path);
                    }
                    "hbic_cn" => m.hbic_cn = Some(value.parse().map_err(|e| err(format!("bad hbic_cn: {e}")))?),
                    "seed" => m.seed = Some(value.parse().map_err(|e| err(format!("bad seed: {e}")))?),
                    _ => return Err(err(format!("unknown option `@{opt}`"))),
                }
                continue;
            }
            if key.is_empty() {
                return Err(err("empty column name".into()));
            }
            let kind = if value == "continuous" {
                ColumnKind::Continuous
            } else if let Some(p) = value.strip_prefix("ordinal(").and_then(|v| v.strip_suffix(')')) {
                let levels: usize = p.trim().parse().map_err(|e| err(format!("bad level count: {e}")))?;
                if levels < 2 {
                    return Err(err(format!("ordinal needs at least 2 levels, got {levels}")));
                }
                ColumnKind::Ordinal { levels }
            } else {
                return Err(err(format!("unknown kind `{value}`")));
            };
            if m.columns.iter().any(|(n, _)| n == key) {
                return Err(err(format!("column `{key}` declared twice")));
            }
            m.columns.push((key.to_string(), kind));
        }
        Ok(m)
    }
}

/// Header names and an `n × d` matrix with `NaN` for empty cells.
pub fn read_csv(path: &Path) -> CliResult<(Vec<String>, DMatrix<f64>)> {
    let stage = "read data";
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::new(stage, format!("{}: {e}", path.display())))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::new(stage, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(CliError::new(stage, format!("{}: empty file or missing header", path.display())));
    }
    let d = names.len();
    let mut cells = Vec::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::new(stage, e))?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, field) in record.iter().enumerate() {
            let v = if field.is_empty() {
                f64::NAN
            } else {
                field.parse::<f64>().map_err(|_| {
                    CliError::new(stage, format!("line {line}, column `{}`: cannot parse `{field}`", names[j]))
                })?
            };
            if v.is_infinite() {
                return Err(CliError::new(stage, format!("line {line}, column `{}`: infinite value", names[j])));
            }
            cells.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(CliError::new(stage, format!("{}: no data rows", path.display())));
    }
    Ok((names, DMatrix::from_row_slice(n, d, &cells)))
}

fn resolve_specs(names: &[String], data: &DMatrix<f64>, manifest: &Manifest) -> CliResult<Vec<ColumnSpec>> {
    for (name, _) in &manifest.columns {
        if !names.contains(name) {
            return Err(CliError::new("manifest", format!("column `{name}` is not in the data")));
        }
    }
    let inferred = infer_column_specs(data, names);
    Ok(names
        .iter()
        .zip(inferred)
        .map(|(name, guess)| match manifest.columns.iter().find(|(n, _)| n == name) {
            Some((_, kind)) => ColumnSpec {
                name: name.clone(),
                kind: *kind,
            },
            None => guess,
        })
        .collect())
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    let Some(t) = threads else { return Ok(()) };
    if t == 0 {
        return Err(CliError::new("configure", "--threads must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    {
        // A second configuration in the same process (tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

fn create_file(dir: &Path, name: &str) -> CliResult<BufWriter<fs::File>> {
    let path = dir.join(name);
    fs::File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::new("write output", format!("{}: {e}", path.display())))
}

fn write_all(dir: &Path, name: &str, text: &str) -> CliResult<PathBuf> {
    let mut f = create_file(dir, name)?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| CliError::new("write output", format!("{name}: {e}")))?;
    Ok(dir.join(name))
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.11e}")
    }
}

/// Tab-separated matrix with a header row and a leading name column.
pub fn format_matrix(names: &[String], m: &DMatrix<f64>) -> String {
    let mut out = String::from("name");
    for n in names {
        out.push('\t');
        out.push_str(n);
    }
    out.push('\n');
    for (i, n) in names.iter().enumerate() {
        out.push_str(n);
        for j in 0..m.ncols() {
            out.push('\t');
            out.push_str(&fmt_value(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

fn method_label(m: &EntryMethod) -> String {
    match m {
        EntryMethod::Diagonal => "diagonal".into(),
        EntryMethod::Bridge { kind, variant } => format!("{}:{}", kind_label(kind), variant_label(*variant)),
        EntryMethod::TauAFallback { kind } => format!("{}:tau_a_fallback", kind_label(kind)),
        EntryMethod::SineFallback { levels_j, levels_k } => format!("ordinal_{levels_j}x{levels_k}:sine_fallback"),
        EntryMethod::Missing { levels_j, levels_k } => format!("ordinal_{levels_j}x{levels_k}:missing"),
    }
}

fn kind_label(k: &crate::bridge::BridgeKind) -> String {
    use crate::bridge::BridgeKind::*;
    match k {
        ContinuousContinuous => "continuous_continuous".into(),
        OrdinalContinuous { levels } => format!("ordinal{levels}_continuous"),
        OrdinalOrdinal { levels_j, levels_k } => format!("ordinal{levels_j}_ordinal{levels_k}"),
    }
}

fn variant_label(v: TauVariant) -> &'static str {
    match v {
        TauVariant::TauA => "tau_a",
        TauVariant::TauB => "tau_b",
    }
}

fn format_entries(names: &[String], est: &LatentCorrelationMatrix) -> String {
    let mut out = String::from("j\tk\tname_j\tname_k\tmethod\tstatistic\testimate\tclamped\n");
    let d = names.len();
    for j in 0..d {
        for k in (j + 1)..d {
            let e = est.entry(j, k);
            let _ = writeln!(
                out,
                "{j}\t{k}\t{}\t{}\t{}\t{}\t{}\t{}",
                names[j],
                names[k],
                method_label(&e.method),
                fmt_value(e.statistic),
                fmt_value(est.matrix[(j, k)]),
                e.clamped
            );
        }
    }
    out
}

struct Estimated {
    names: Vec<String>,
    specs: Vec<ColumnSpec>,
    n: usize,
    est: LatentCorrelationMatrix,
    manifest: Manifest,
    variant: TauVariant,
}

fn run_estimate_stage(args: &InputArgs) -> CliResult<Estimated> {
    configure_threads(args.threads)?;
    let manifest = match &args.manifest {
        Some(p) => Manifest::parse(
            &fs::read_to_string(p).map_err(|e| CliError::new("manifest", format!("{}: {e}", p.display())))?,
        )?,
        None => Manifest::default(),
    };
    let (names, data) = read_csv(&args.data)?;
    let specs = resolve_specs(&names, &data, &manifest)?;
    let variant = args.tau.map(TauVariant::from).or(manifest.tau).unwrap_or_default();
    let unsupported = if args.allow_partial {
        UnsupportedPolicy::Missing
    } else if args.fallback_unsupported {
        UnsupportedPolicy::Fallback
    } else {
        UnsupportedPolicy::Error
    };
    let cfg = EstimatorConfig { variant, unsupported };
    let est = estimate_with_config(&data, &specs, &cfg).map_err(|e| {
        let message = match e {
            crate::Error::DegenerateColumn { column } => format!("{e} (`{}`)", names[column]),
            crate::Error::UnsupportedPair { j, k, .. } => {
                format!("{e} (`{}`, `{}`); rerun with --allow-partial or --fallback-unsupported", names[j], names[k])
            }
            _ => e.to_string(),
        };
        CliError::new("estimate", message)
    })?;
    Ok(Estimated {
        n: data.nrows(),
        names,
        specs,
        est,
        manifest,
        variant,
    })
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::new("write output", format!("{}: {e}", dir.display())))
}

fn estimate_outputs(out_dir: &Path, e: &Estimated) -> CliResult<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    Ok(vec![
        write_all(out_dir, "correlation.tsv", &format_matrix(&e.names, &e.est.matrix))?,
        write_all(out_dir, "entries.tsv", &format_entries(&e.names, &e.est))?,
    ])
}

fn base_report(e: &Estimated) -> Value {
    let d = e.names.len();
    let clamped = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
        .filter(|&(j, k)| e.est.entry(j, k).clamped)
        .count();
    let missing = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
        .filter(|&(j, k)| e.est.matrix[(j, k)].is_nan())
        .count();
    json!({
        "status": "ok",
        "n": e.n,
        "d": d,
        "tau": variant_label(e.variant),
        "columns": e.specs,
        "clamped_entries": clamped,
        "missing_entries": missing,
    })
}

fn finish(out_dir: &Path, mut report: Value, files: Vec<PathBuf>) -> CliResult<Value> {
    let mut listed: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
    listed.push(out_dir.join("report.json").display().to_string());
    report["files"] = json!(listed);
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::new("write output", e))?;
    write_all(out_dir, "report.json", &(text + "\n"))?;
    Ok(report)
}

fn cmd_estimate(args: &InputArgs) -> CliResult<Value> {
    let e = run_estimate_stage(args)?;
    let files = estimate_outputs(&args.out_dir, &e)?;
    let mut report = base_report(&e);
    report["command"] = json!("estimate");
    finish(&args.out_dir, report, files)
}

fn format_edges(names: &[String], p: &PrecisionEstimate) -> String {
    let mut out = String::from("source\ttarget\tprecision\tpartial_correlation\n");
    for &(j, k) in &p.edges {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            names[j],
            names[k],
            fmt_value(p.omega[(j, k)]),
            fmt_value(partial_correlation(&p.omega, j, k))
        );
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Undirected DOT graph with partial correlations as edge labels.
pub fn format_dot(names: &[String], p: &PrecisionEstimate) -> String {
    let mut out = String::from("graph mixcor {\n");
    for n in names {
        let _ = writeln!(out, "  \"{}\";", dot_escape(n));
    }
    for &(j, k) in &p.edges {
        let _ = writeln!(
            out,
            "  \"{}\" -- \"{}\" [label=\"{:.2}\"];",
            dot_escape(&names[j]),
            dot_escape(&names[k]),
            partial_correlation(&p.omega, j, k)
        );
    }
    out.push_str("}\n");
    out
}

fn format_trace(p: &PrecisionEstimate) -> String {
    let mut out = String::from("lambda\thbic\tedges\tchosen\n");
    for t in &p.hbic_trace {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            fmt_value(t.lambda),
            fmt_value(t.hbic),
            t.edges,
            t.lambda == p.chosen_lambda
        );
    }
    out
}

fn cmd_graph(args: &GraphArgs) -> CliResult<Value> {
    let e = run_estimate_stage(&args.input)?;
    let out_dir = &args.input.out_dir;
    let mut files = estimate_outputs(out_dir, &e)?;
    let mut r = e.est.matrix.clone();
    let zeroed = r.iter().filter(|v| v.is_nan()).count() / 2;
    r.iter_mut().filter(|v| v.is_nan()).for_each(|v| *v = 0.0);
    let projected = project_psd(&r, 1e-8);
    let cfg = GlassoConfig {
        lambda_path: args.lambda_path.clone().or_else(|| e.manifest.lambda_path.clone()),
        hbic_scale: args.hbic_cn.or(e.manifest.hbic_cn).unwrap_or(1.0),
        ..GlassoConfig::default()
    };
    let precision = select_hbic(&projected, e.n, &cfg).map_err(|err| CliError::new("glasso", err))?;
    files.push(write_all(out_dir, "projected_correlation.tsv", &format_matrix(&e.names, &projected))?);
    files.push(write_all(out_dir, "precision.tsv", &format_matrix(&e.names, &precision.omega))?);
    files.push(write_all(out_dir, "edges.tsv", &format_edges(&e.names, &precision))?);
    files.push(write_all(out_dir, "graph.dot", &format_dot(&e.names, &precision))?);
    files.push(write_all(out_dir, "hbic_trace.tsv", &format_trace(&precision))?);

    let mut report = base_report(&e);
    report["command"] = json!("graph");
    report["missing_entries_zeroed"] = json!(zeroed);
    report["lambda_path"] = json!(cfg.lambda_path.unwrap_or_else(|| default_lambda_path(&projected)));
    report["hbic_cn"] = json!(cfg.hbic_scale);
    report["chosen_lambda"] = json!(precision.chosen_lambda);
    report["edges"] = json!(precision.edges.len());
    finish(out_dir, report, files)
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<Value> {
    configure_threads(args.threads)?;
    ensure_dir(&args.out_dir)?;
    let stage = "simulate";
    let mut report = json!({ "status": "ok", "command": "simulate", "seed": args.seed });
    let files = match args.scenario {
        Scenario::One | Scenario::Two => {
            let cfg = ScenarioConfig {
                n: args.n,
                reps: args.reps,
                seed: args.seed,
                ..ScenarioConfig::default()
            };
            let (name, res) = if args.scenario == Scenario::One {
                ("scenario1.tsv", scenario1(&cfg))
            } else {
                ("scenario2.tsv", scenario2(&cfg))
            };
            let res = res.map_err(|e| CliError::new(stage, e))?;
            let mut buf = Vec::new();
            res.write_tsv(&mut buf).map_err(|e| CliError::new("write output", e))?;
            let text = String::from_utf8(buf).expect("tsv output is ASCII");
            report["scenario"] = json!(if args.scenario == Scenario::One { "1" } else { "2" });
            report["n"] = json!(cfg.n);
            report["reps"] = json!(cfg.reps);
            report["mean_mse"] = res
                .curves
                .iter()
                .map(|c| (c.p.unwrap_or(0).to_string(), json!(c.mean_mse())))
                .chain(std::iter::once(("continuous".to_string(), json!(res.baseline.mean_mse()))))
                .collect::<serde_json::Map<_, _>>()
                .into();
            vec![write_all(&args.out_dir, name, &text)?]
        }
        Scenario::Concentration => {
            let n_grid = [250, 500, 1000, 2000, 4000];
            let table = concentration_check(args.d, args.p, &n_grid, args.seeds, args.seed)
                .map_err(|e| CliError::new(stage, e))?;
            let mut text = String::from("n\tmean_sup_error\n");
            for row in &table.rows {
                let _ = writeln!(text, "{}\t{}", row.n, fmt_value(row.mean_sup_error));
            }
            report["scenario"] = json!("concentration");
            report["slope"] = json!(table.slope);
            vec![write_all(&args.out_dir, "concentration.tsv", &text)?]
        }
    };
    finish(&args.out_dir, report, files)
}

/// Runs a parsed command; the returned report is also written to
/// `report.json` in the output directory.
pub fn run(cli: &Cli) -> CliResult<Value> {
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Graph(a) => cmd_graph(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}
