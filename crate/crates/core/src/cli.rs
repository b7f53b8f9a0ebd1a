//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bootstrap::{BootstrapConfig, IntervalMethod, Resampling, DEFAULT_LEVEL, DEFAULT_RESAMPLES};
use crate::distributions::{fit_mle, Family, ParametricModel};
use crate::divergence::{esjs, esjs_distance};
use crate::gof::{
    compare, powerlaw_fit, scaling_experiment, score_model, simulate_experiment, ExperimentConfig,
    ExperimentReport, FitReport, ScalingRow, SurvivalEstimator,
};
use crate::survival::{empirical_survival, km_binned_survival, SortedSample, DEFAULT_KM_BINS};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "esjs", version, about = "Goodness-of-fit with the empirical survival Jensen-Shannon divergence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Fit one family to a CSV column and score the fit.
    Fit(FitArgs),
    /// Fit and rank several families against a CSV column.
    Compare(CompareArgs),
    /// Generate data from a given model and rank hypothesised families.
    Simulate(SimulateArgs),
    /// ESJS and distance between two CSV samples.
    Divergence(DivergenceArgs),
    /// Self-fit ESJS across data sizes, with a power-law fit.
    Scaling(ScalingArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// CSV file holding the data.
    #[arg(long)]
    pub input: PathBuf,
    /// Column to read, by zero-based index or header name.
    #[arg(long, default_value = "0")]
    pub column: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BootstrapArgs {
    /// Number of bootstrap resamples.
    #[arg(long = "bootstrap", default_value_t = DEFAULT_RESAMPLES)]
    pub resamples: usize,
    /// Confidence level of the interval.
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    pub level: f64,
    /// Interval construction.
    #[arg(long, value_enum, default_value_t = MethodArg::Percentile)]
    pub method: MethodArg,
    /// Resample the data in contiguous blocks of this many observations.
    #[arg(long)]
    pub block_length: Option<usize>,
    /// Size of the sample drawn from each fitted model (default: data size).
    #[arg(long)]
    pub model_sample_size: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Include wall-clock timing in the report (makes output non-reproducible).
    #[arg(long)]
    #[serde(skip)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub family: Family,
    /// Grid size for binned survival estimation; 0 uses the exact empirical survival.
    #[arg(long, default_value_t = DEFAULT_KM_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub bootstrap: BootstrapArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub families: Vec<Family>,
    /// Families never used as the challenger in the factor.
    #[arg(long, value_delimiter = ',')]
    pub exclude_from_factor: Vec<Family>,
    /// Grid size for binned survival estimation; 0 uses the exact empirical survival.
    #[arg(long, default_value_t = DEFAULT_KM_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub bootstrap: BootstrapArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Generating model, e.g. `normal:0,1`.
    #[arg(long, value_parser = parse_model)]
    pub given: ParametricModel,
    #[arg(long, value_delimiter = ',', required = true)]
    pub hypotheses: Vec<Family>,
    /// Size of the generated data set.
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_delimiter = ',')]
    pub exclude_from_factor: Vec<Family>,
    /// Grid size for binned survival estimation (default: exact empirical survival).
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub bootstrap: BootstrapArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DivergenceArgs {
    #[arg(long)]
    pub input_p: PathBuf,
    #[arg(long)]
    pub input_q: PathBuf,
    #[arg(long, default_value = "0")]
    pub column: String,
    /// Grid size for binned survival estimation (default: exact empirical survival).
    #[arg(long)]
    pub bins: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScalingArgs {
    #[arg(long, value_parser = parse_model)]
    pub given: ParametricModel,
    /// Data sizes to evaluate.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Percentile,
    Basic,
}

fn parse_model(s: &str) -> Result<ParametricModel, String> {
    ParametricModel::parse(s).map_err(|e| e.to_string())
}

/// Failure of a run, carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidBootstrap(_) | Error::InvalidBlockLength { .. } | Error::ZeroBins => {
                CliError::Usage(e.to_string())
            }
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

/// Which column of a CSV file to read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

impl ColumnSelector {
    pub fn parse(s: &str) -> Self {
        match s.trim().parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.trim().to_string()),
        }
    }
}

/// Reads one numeric column of a CSV file, in file order.
///
/// A first row whose selected field is not numeric is taken as a header;
/// selecting by name requires one.
pub fn read_csv_column(path: &Path, column: &ColumnSelector) -> Result<Vec<f64>, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Data(format!("{} is not valid UTF-8", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let where_ = |line: u64| format!("{} line {line}", path.display());

    let mut index = match column {
        ColumnSelector::Index(i) => Some(*i),
        ColumnSelector::Name(_) => None,
    };
    let mut values = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        if first {
            first = false;
            match column {
                ColumnSelector::Name(name) => {
                    let i = record.iter().position(|h| h.trim() == name).ok_or_else(|| {
                        CliError::Data(format!("{}: no column named '{name}' in the header", where_(line)))
                    })?;
                    index = Some(i);
                    continue;
                }
                ColumnSelector::Index(i) => {
                    let field = record.get(*i).map(str::trim).unwrap_or("");
                    if field.parse::<f64>().is_err() {
                        continue;
                    }
                }
            }
        }
        let i = index.expect("column index resolved");
        let field = record.get(i).map(str::trim).unwrap_or("");
        if field.is_empty() {
            return Err(CliError::Data(format!("{}: missing value in column {i}", where_(line))));
        }
        let value: f64 = field
            .parse()
            .map_err(|_| CliError::Data(format!("{}: '{field}' is not a number", where_(line))))?;
        if !value.is_finite() {
            let what = if value.is_nan() || field.to_ascii_lowercase().contains("inf") {
                "is not a finite real"
            } else {
                "overflows the range of finite reals"
            };
            return Err(CliError::Data(format!("{}: value '{field}' {what}", where_(line))));
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(CliError::Data(format!("{}: no numeric rows", path.display())));
    }
    Ok(values)
}

/// Reads a CSV column as a sorted sample.
pub fn ingest_csv(path: &Path, column: &ColumnSelector) -> Result<SortedSample, CliError> {
    Ok(SortedSample::new(read_csv_column(path, column)?)?)
}

fn bootstrap_config(args: &BootstrapArgs, seed: u64) -> Result<BootstrapConfig, CliError> {
    let resampling = match args.block_length {
        Some(block_length) => Resampling::MovingBlock { block_length },
        None => Resampling::Iid,
    };
    let interval = match args.method {
        MethodArg::Percentile => IntervalMethod::Percentile,
        MethodArg::Basic => IntervalMethod::Basic,
    };
    let config = BootstrapConfig::new(seed)
        .with_resamples(args.resamples)
        .with_level(args.level)
        .with_resampling(resampling)
        .with_interval(interval);
    config.validate()?;
    Ok(config)
}

fn experiment_config(
    args: &BootstrapArgs,
    seed: u64,
    estimator: SurvivalEstimator,
    exclude: &[Family],
) -> Result<ExperimentConfig, CliError> {
    if args.model_sample_size == Some(0) {
        return Err(CliError::Usage("--model-sample-size must be at least 1".into()));
    }
    Ok(ExperimentConfig {
        bootstrap: bootstrap_config(args, seed)?,
        model_sample_size: args.model_sample_size,
        estimator,
        exclude_from_factor: exclude.to_vec(),
    })
}

fn estimator(bins: Option<usize>) -> SurvivalEstimator {
    match bins {
        None | Some(0) => SurvivalEstimator::Empirical,
        Some(bins) => SurvivalEstimator::Binned { bins },
    }
}

fn check_block_length(args: &BootstrapArgs, n: usize) -> Result<(), CliError> {
    match args.block_length {
        Some(b) if b == 0 || b > n => Err(CliError::Usage(format!(
            "--block-length {b} must lie in [1, {n}]"
        ))),
        _ => Ok(()),
    }
}

/// Result of a run, ready to render.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Fit(FitReport),
    Experiment(ExperimentReport),
    Divergence { esjs: f64, distance: f64 },
    Scaling { rows: Vec<ScalingRow>, amplitude: f64, exponent: f64 },
}

/// Executes a parsed command.
pub fn run(command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Fit(args) => {
            let series = read_csv_column(&args.input.input, &ColumnSelector::parse(&args.input.column))?;
            check_block_length(&args.bootstrap, series.len())?;
            let data = SortedSample::new(series.clone())?;
            let config = experiment_config(&args.bootstrap, args.seed, estimator(Some(args.bins)), &[])?;
            let model = fit_mle(args.family, &data)?;
            Ok(Report::Fit(score_model(&model, &series, &data, &config)?))
        }
        Command::Compare(args) => {
            let series = read_csv_column(&args.input.input, &ColumnSelector::parse(&args.input.column))?;
            check_block_length(&args.bootstrap, series.len())?;
            let config = experiment_config(
                &args.bootstrap,
                args.seed,
                estimator(Some(args.bins)),
                &args.exclude_from_factor,
            )?;
            Ok(Report::Experiment(compare(&series, &args.families, &config)?))
        }
        Command::Simulate(args) => {
            if args.n < 2 {
                return Err(CliError::Usage("--n must be at least 2".into()));
            }
            check_block_length(&args.bootstrap, args.n)?;
            let config = experiment_config(
                &args.bootstrap,
                args.seed,
                estimator(args.bins),
                &args.exclude_from_factor,
            )?;
            Ok(Report::Experiment(simulate_experiment(
                &args.given,
                &args.hypotheses,
                args.n,
                &config,
            )?))
        }
        Command::Divergence(args) => {
            let column = ColumnSelector::parse(&args.column);
            let p = ingest_csv(&args.input_p, &column)?;
            let q = ingest_csv(&args.input_q, &column)?;
            let (sp, sq) = match estimator(args.bins) {
                SurvivalEstimator::Empirical => (empirical_survival(&p), empirical_survival(&q)),
                SurvivalEstimator::Binned { bins } => {
                    let lo = p.min().min(q.min());
                    let hi = p.max().max(q.max());
                    if lo == hi {
                        return Ok(Report::Divergence { esjs: 0.0, distance: 0.0 });
                    }
                    (
                        km_binned_survival(&p, bins, (lo, hi))?,
                        km_binned_survival(&q, bins, (lo, hi))?,
                    )
                }
            };
            Ok(Report::Divergence {
                esjs: esjs(&sp, &sq),
                distance: esjs_distance(&sp, &sq),
            })
        }
        Command::Scaling(args) => {
            let rows = scaling_experiment(&args.given, &args.sizes, args.seed, estimator(args.bins))?;
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.size as f64, r.esjs)).unzip();
            let (amplitude, exponent) = if rows.len() >= 2 {
                let fit = powerlaw_fit(&xs, &ys)?;
                (fit.amplitude, fit.exponent)
            } else {
                (f64::NAN, f64::NAN)
            };
            Ok(Report::Scaling { rows, amplitude, exponent })
        }
    }
}

fn output_args(command: &Command) -> &OutputArgs {
    match command {
        Command::Fit(a) => &a.output,
        Command::Compare(a) => &a.output,
        Command::Simulate(a) => &a.output,
        Command::Divergence(a) => &a.output,
        Command::Scaling(a) => &a.output,
    }
}

fn row_json(r: &FitReport) -> Value {
    json!({
        "family": r.family,
        "params": r.params,
        "esjs": r.esjs,
        "distance": r.distance,
        "ci": { "lb": r.ci.lb, "ub": r.ci.ub, "level": r.ci.level },
        "n": r.n,
        "model_sample_size": r.model_sample_size,
    })
}

/// JSON rendering of a report.
pub fn report_json(command: &Command, report: &Report, seconds: Option<f64>) -> Value {
    let timing = seconds.map_or(Value::Null, |s| json!({ "seconds": s }));
    let mut out = match report {
        Report::Fit(row) => json!({
            "rows": [row_json(row)],
            "best": row.family,
            "factor": Value::Null,
        }),
        Report::Experiment(r) => json!({
            "given": r.given,
            "rows": r.rows.iter().map(row_json).collect::<Vec<_>>(),
            "skipped": r.skipped,
            "best": r.best,
            "challenger": r.challenger,
            "factor": r.factor,
            "single_hypothesis": r.single_hypothesis,
        }),
        Report::Divergence { esjs, distance } => json!({ "esjs": esjs, "distance": distance }),
        Report::Scaling { rows, amplitude, exponent } => json!({
            "rows": rows,
            "powerlaw": { "amplitude": amplitude, "exponent": exponent },
        }),
    };
    let map = out.as_object_mut().expect("object");
    map.insert("spec".into(), serde_json::to_value(command).expect("serializable spec"));
    map.insert("timing".into(), timing);
    out
}

fn param(r: &[f64], i: usize) -> String {
    r.get(i).map(|p| p.to_string()).unwrap_or_default()
}

/// CSV rendering; values print with the same shortest round-trip digits as JSON.
pub fn report_csv(report: &Report) -> String {
    let mut s = String::new();
    match report {
        Report::Fit(_) | Report::Experiment(_) => {
            let rows: Vec<&FitReport> = match report {
                Report::Fit(r) => vec![r],
                Report::Experiment(e) => e.rows.iter().collect(),
                _ => unreachable!(),
            };
            s.push_str("family,param1,param2,esjs,distance,lb,ub,level\n");
            for r in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    r.family,
                    param(&r.params, 0),
                    param(&r.params, 1),
                    r.esjs,
                    r.distance,
                    r.ci.lb,
                    r.ci.ub,
                    r.ci.level
                );
            }
        }
        Report::Divergence { esjs, distance } => {
            let _ = write!(s, "esjs,distance\n{esjs},{distance}\n");
        }
        Report::Scaling { rows, amplitude, exponent } => {
            s.push_str("size,param1,param2,esjs\n");
            for r in rows {
                let _ = writeln!(s, "{},{},{},{}", r.size, param(&r.params, 0), param(&r.params, 1), r.esjs);
            }
            let _ = writeln!(s, "# powerlaw amplitude={amplitude} exponent={exponent}");
        }
    }
    s
}

/// Human-readable table.
pub fn report_table(report: &Report) -> String {
    let mut s = String::new();
    let header = ["family", "param1", "param2", "esjs", "distance", "lb", "ub"];
    let table = |rows: &[&FitReport]| -> String {
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|h| h.to_string()).collect()];
        for r in rows {
            cells.push(vec![
                r.family.to_string(),
                param(&r.params, 0),
                param(&r.params, 1),
                r.esjs.to_string(),
                r.distance.to_string(),
                r.ci.lb.to_string(),
                r.ci.ub.to_string(),
            ]);
        }
        render(&cells)
    };
    match report {
        Report::Fit(r) => {
            s.push_str(&table(&[r]));
            let _ = writeln!(s, "level: {}", r.ci.level);
        }
        Report::Experiment(e) => {
            s.push_str(&table(&e.rows.iter().collect::<Vec<_>>()));
            if let Some(r) = e.rows.first() {
                let _ = writeln!(s, "level: {}", r.ci.level);
            }
            let _ = writeln!(s, "best: {}", e.best);
            match e.challenger {
                Some(c) => {
                    let _ = writeln!(s, "challenger: {c}");
                }
                None => s.push_str("challenger: none (single hypothesis)\n"),
            }
            let _ = writeln!(s, "factor: {}", e.factor.ratio);
            for k in &e.skipped {
                let _ = writeln!(s, "skipped {}: {}", k.family, k.reason);
            }
        }
        Report::Divergence { esjs, distance } => {
            let _ = write!(s, "esjs: {esjs}\ndistance: {distance}\n");
        }
        Report::Scaling { rows, amplitude, exponent } => {
            let mut cells = vec![vec!["size".to_string(), "param1".into(), "param2".into(), "esjs".into()]];
            for r in rows {
                cells.push(vec![r.size.to_string(), param(&r.params, 0), param(&r.params, 1), r.esjs.to_string()]);
            }
            s.push_str(&render(&cells));
            let _ = writeln!(s, "powerlaw: {amplitude} * n^{exponent}");
        }
    }
    s
}

fn render(cells: &[Vec<String>]) -> String {
    let cols = cells[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for row in cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        s.push_str(line.join("  ").trim_end());
        s.push('\n');
    }
    s
}

/// Parses `args` (including the program name), runs, and writes the report.
/// Returns the process exit code.
pub fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(rendered.as_bytes());
            } else {
                let _ = err.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let started = Instant::now();
    let report = match run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            return e.exit_code();
        }
    };
    let output = output_args(&cli.command);
    let seconds = output.timing.then(|| started.elapsed().as_secs_f64());
    let text = match output.format {
        Format::Json => {
            let mut t = serde_json::to_string_pretty(&report_json(&cli.command, &report, seconds))
                .expect("serializable report");
            t.push('\n');
            t
        }
        Format::Csv => report_csv(&report),
        Format::Table => report_table(&report),
    };
    if out.write_all(text.as_bytes()).is_err() {
        return 2;
    }
    0
}
