//! `eewps`: fit, simulate and inspect EEWPS lifetime models.

mod config;
mod render;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use eewps::gof::GofReport;
use eewps::inference::{default_em_start, default_starts, direct_mle, em_fit, FitOptions, FitResult};
use eewps::{EewpsModel, Family, GeneratorKind, PowerSeries};

/// Seed used by `simulate` when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_140_929;

/// `--method both` flags log-likelihoods further apart than this.
const DISAGREEMENT_TOL: f64 = 1e-3;

const EXIT_USAGE: u8 = 1;
const EXIT_NO_CONVERGENCE: u8 = 2;
const EXIT_REPRODUCTION: u8 = 3;

#[derive(Parser)]
#[command(name = "eewps", version, about = "Exponentiated extended Weibull-power series lifetime models")]
struct Cli {
    /// Flat `key = value` file with defaults for long flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a family to a dataset by maximum likelihood.
    Fit(FitArgs),
    /// Draw a random sample, one value per line.
    Simulate(SimulateArgs),
    /// Raw moments by series and by quadrature.
    Moments(MomentsArgs),
    /// Tabulate pdf, cdf, hazard or mean residual life over a grid.
    Curve(CurveArgs),
    /// Recompute a published table and compare cell by cell.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct FamilyArgs {
    /// Generator: exponential, weibull, modified-weibull,
    /// linear-failure-rate, gompertz or chen.
    #[arg(long)]
    generator: Option<GeneratorKind>,
    /// Compounder: geometric, poisson, logarithmic or binomial:M.
    #[arg(long)]
    compounder: Option<PowerSeries>,
    /// Named sub-model: EWG, CWG, GEG, ECL or CCL.
    #[arg(long, conflicts_with_all = ["generator", "compounder"])]
    preset: Option<String>,
    /// Freeze a parameter, e.g. `--fix beta=1`. Repeatable.
    #[arg(long, value_name = "NAME=VALUE")]
    fix: Vec<String>,
}

impl FamilyArgs {
    fn family(&self) -> Result<Family> {
        let mut family = match (&self.preset, self.generator, self.compounder) {
            (Some(p), _, _) => Family::preset(p)?,
            (None, Some(g), Some(c)) => Family::new(g, c),
            _ => bail!("give either --preset or both --generator and --compounder"),
        };
        for spec in &self.fix {
            let (name, value) = spec
                .split_once('=')
                .ok_or_else(|| anyhow!("--fix expects NAME=VALUE, found {spec:?}"))?;
            let name = name.trim();
            let index = family
                .param_names()
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| anyhow!("{family} has no parameter {name:?}"))?;
            let value: f64 = value.trim().parse().with_context(|| format!("--fix {spec}"))?;
            family = family.with_fixed(index, value)?;
        }
        Ok(family)
    }

    /// A model from a full parameter vector; frozen entries must match.
    fn model(&self, params: &[f64]) -> Result<EewpsModel> {
        let family = self.family()?;
        if params.len() != family.len() {
            bail!(
                "{family} takes {} parameters ({}), got {}",
                family.len(),
                family.param_names().join(", "),
                params.len()
            );
        }
        for (i, (fixed, name)) in family.fixed.iter().zip(family.param_names()).enumerate() {
            if let Some(v) = fixed {
                if params[i] != *v {
                    bail!("parameter {name} is fixed at {v}");
                }
            }
        }
        Ok(family.model(params)?)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Em,
    Direct,
    Both,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Dataset: one positive value per line, `#` comments, optional header.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
    method: MethodArg,
    /// Add goodness-of-fit statistics and information criteria.
    #[arg(long)]
    report: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// EM stopping rule on the change in log-likelihood.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Starting values, comma-separated in parameter order. EM starts here;
    /// the direct method uses this single start instead of its default grid.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    start: Option<Vec<f64>>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Parameters, comma-separated: alpha, beta, lambda, then the generator's.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    params: Vec<f64>,
    /// Sample size.
    #[arg(short, long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    params: Vec<f64>,
    /// Moment orders, each between 1 and 8.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4",
          value_parser = clap::value_parser!(u32).range(1..=8))]
    orders: Vec<u32>,
    /// Truncation bound the series must certify.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Curve {
    Pdf,
    Cdf,
    Hazard,
    Mrl,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    params: Vec<f64>,
    #[arg(long, value_enum)]
    what: Curve,
    #[arg(long, allow_negative_numbers = true)]
    min: f64,
    #[arg(long, allow_negative_numbers = true)]
    max: f64,
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Table {
    Table1,
    Table2,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    table: Table,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

/// A failure carrying its exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let code = match error.downcast_ref::<eewps::Error>() {
            Some(eewps::Error::NoConvergence { .. }) => EXIT_NO_CONVERGENCE,
            _ => EXIT_USAGE,
        };
        Self { code, error }
    }
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn fit(args: &FitArgs) -> std::result::Result<(), Failure> {
    let family = args.family.family()?;
    let text = fs::read_to_string(&args.data).with_context(|| format!("reading {}", args.data.display()))?;
    let data = eewps::data::parse_dataset(&text)?;
    let options = FitOptions {
        max_iter: args.max_iter,
        tol: args.tol,
        ..FitOptions::default()
    };
    let mut fits: Vec<FitResult> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    if matches!(args.method, MethodArg::Direct | MethodArg::Both) {
        let starts = match &args.start {
            Some(s) => vec![s.clone()],
            None => default_starts(&family, &data),
        };
        match direct_mle(&family, &data, &starts, &options) {
            Ok(f) => fits.push(f),
            Err(e @ eewps::Error::NoConvergence { .. }) => failures.push(format!("direct: {e}")),
            Err(e) => return Err(e.into()),
        }
    }
    if matches!(args.method, MethodArg::Em | MethodArg::Both) {
        let start = args.start.clone().unwrap_or_else(|| default_em_start(&family, &data));
        match em_fit(&family, &data, &start, &options) {
            Ok(f) => fits.push(f),
            Err(eewps::Error::NoConvergence { iterations, history }) => failures.push(format!(
                "em: no convergence after {iterations} iterations (last log L {})",
                history.last().copied().unwrap_or(f64::NAN)
            )),
            Err(e) => return Err(e.into()),
        }
    }
    for f in &fits {
        if !f.converged {
            failures.push(format!("{}: optimizer stopped before convergence", f.method));
        }
    }
    let mut reports = Vec::new();
    for f in &fits {
        if args.report {
            reports.push(Some(GofReport::new(&f.model()?, &data, f.log_likelihood, f.n_free())?));
        } else {
            reports.push(None);
        }
    }
    let disagreement = (fits.len() == 2).then(|| {
        let d = (fits[0].log_likelihood - fits[1].log_likelihood).abs();
        render::Disagreement {
            log_likelihood_difference: d,
            flagged: d > DISAGREEMENT_TOL,
        }
    });
    let doc = render::FitDocument {
        family: render::FamilyInfo::new(&family),
        n: data.len(),
        fits: fits
            .iter()
            .zip(&reports)
            .map(|(f, r)| render::FitEntry { fit: f, gof: r.as_ref() })
            .collect(),
        disagreement,
        failures: failures.clone(),
    };
    let out = match args.format {
        Format::Text => render::fit_text(&doc),
        Format::Csv => render::fit_csv(&doc)?,
        Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
    };
    write_out(None, &out)?;
    if !failures.is_empty() {
        return Err(Failure {
            code: EXIT_NO_CONVERGENCE,
            error: anyhow!("no convergence: {}", failures.join("; ")),
        });
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let model = args.family.model(&args.params)?;
    let draws = model.sample(args.n as usize, args.seed);
    let mut text = String::with_capacity(draws.len() * 20);
    for x in draws {
        text.push_str(&format!("{x}\n"));
    }
    write_out(args.output.as_ref(), &text)
}

fn moments(args: &MomentsArgs) -> Result<()> {
    let model = args.family.model(&args.params)?;
    let mut rows = Vec::new();
    for &r in &args.orders {
        rows.push(render::MomentRow::compute(&model, r, args.tol)?);
    }
    let out = match args.format {
        Format::Text => render::moments_text(&model, &rows),
        Format::Csv => render::moments_csv(&rows)?,
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
    };
    write_out(None, &out)
}

fn curve(args: &CurveArgs) -> Result<()> {
    if !(args.min > 0.0 && args.min.is_finite()) {
        bail!("--min must be positive, got {}", args.min);
    }
    if !(args.max > args.min && args.max.is_finite()) {
        bail!("--max must exceed --min, got {}", args.max);
    }
    if args.count < 2 {
        bail!("--count must be at least 2");
    }
    let model = args.family.model(&args.params)?;
    let name = match args.what {
        Curve::Pdf => "pdf",
        Curve::Cdf => "cdf",
        Curve::Hazard => "hazard",
        Curve::Mrl => "mrl",
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", name])?;
    let step = (args.max - args.min) / (args.count - 1) as f64;
    for i in 0..args.count {
        let x = if i + 1 == args.count { args.max } else { args.min + step * i as f64 };
        let v = match args.what {
            Curve::Pdf => model.pdf(x)?,
            Curve::Cdf => model.cdf(x),
            Curve::Hazard => model.hazard(x)?,
            // Past the resolvable tail the residual life is reported as NaN.
            Curve::Mrl => eewps::properties::mean_residual_life(&model, x).unwrap_or(f64::NAN),
        };
        w.write_record([format!("{x}"), format!("{v}")])?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    write_out(args.output.as_ref(), &String::from_utf8(bytes)?)
}

fn reproduce(args: &ReproduceArgs) -> std::result::Result<(), Failure> {
    let (out, pass) = match args.table {
        Table::Table1 => {
            let rows = eewps::reproduce::table1()?;
            let pass = rows.iter().all(|r| r.pass());
            let out = match args.format {
                Format::Text => render::table1_text(&rows),
                Format::Csv => render::table1_csv(&rows)?,
                Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
            };
            (out, pass)
        }
        Table::Table2 => {
            let cols = eewps::reproduce::table2()?;
            let pass = cols.iter().all(|c| c.pass());
            let out = match args.format {
                Format::Text => render::table2_text(&cols),
                Format::Csv => render::table2_csv(&cols)?,
                Format::Json => serde_json::to_string_pretty(&cols)? + "\n",
            };
            (out, pass)
        }
    };
    write_out(None, &out)?;
    if !pass {
        return Err(Failure {
            code: EXIT_REPRODUCTION,
            error: anyhow!("some non-advisory cells differ from the published values"),
        });
    }
    Ok(())
}

fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    match &cli.command {
        Command::Fit(a) => fit(a),
        Command::Simulate(a) => Ok(simulate(a)?),
        Command::Moments(a) => Ok(moments(a)?),
        Command::Curve(a) => Ok(curve(a)?),
        Command::Reproduce(a) => reproduce(a),
    }
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
