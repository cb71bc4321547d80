use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use greedylab::constants::{CheckId, ConstantName};
use greedylab::lab::{self, ExperimentConfig, Report, RunConfig, REPRODUCTIONS};
use greedylab::{CoefVec, Error, NormModel, Weight};

#[derive(Parser)]
#[command(name = "greedylab", version, about = "Weighted greedy approximation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the norm of a vector.
    Norm {
        /// Space descriptor: a file, JSON, or shorthand such as `james(2)`.
        spec: String,
        /// Coefficients: a file or inline text, JSON array or separated numbers.
        vector: String,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Estimate constants.
    Estimate {
        /// Constant names such as `Ca`, `Cd`, `d(4)`.
        names: Vec<String>,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Run inequality checks.
    Check {
        /// Check ids such as `truncation-lemma`.
        ids: Vec<String>,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Run a named reproduction.
    Reproduce {
        name: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Re-run the config of a config file or of a previous report.
    Run {
        file: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// List reproductions, checks and constant names.
    List,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (JSON); flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    spec: Option<String>,
    /// Weight descriptor: JSON or `counting`, `power:0.4`, `geometric:0.5`, `explicit:1|3|2`.
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, env = "GREEDYLAB_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct OutputArgs {
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Directory for `report.json` and the CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Reads `arg` as a file when one exists at that path, else uses it verbatim.
fn file_or_inline(arg: &str) -> Result<String, Error> {
    let p = Path::new(arg);
    if p.is_file() {
        Ok(std::fs::read_to_string(p)?)
    } else {
        Ok(arg.to_string())
    }
}

fn parse_vector(text: &str) -> Result<Vec<f64>, Error> {
    let t = text.trim();
    if t.starts_with('[') {
        return Ok(serde_json::from_str(t).map_err(|e| Error::Parse(e.to_string()))?);
    }
    t.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad coefficient {s:?}"))))
        .collect()
}

fn cmd_norm(spec: &str, vector: &str, window: Option<usize>) -> Result<ExitCode, Error> {
    let spec = lab::parse_spec(&file_or_inline(spec)?)?;
    let coeffs = parse_vector(&file_or_inline(vector)?)?;
    let n = window.or(spec.intrinsic_dim()).unwrap_or(coeffs.len()).max(1);
    let model = NormModel::new(spec, n)?;
    let value = model.norm(&CoefVec::new(coeffs)?)?;
    println!("{value:.12}");
    Ok(ExitCode::SUCCESS)
}

fn experiment(exp: &ExperimentArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&exp.config, &exp.spec) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        }
        (None, Some(s)) => ExperimentConfig::new(lab::parse_spec(&file_or_inline(s)?)?, Weight::counting()),
        (None, None) => return Err(Error::InvalidArgument("pass --spec or --config".into())),
    };
    if let (Some(_), Some(s)) = (&exp.config, &exp.spec) {
        cfg.spec = lab::parse_spec(&file_or_inline(s)?)?;
    }
    if let Some(w) = &exp.weight {
        cfg.weight = lab::parse_weight(&file_or_inline(w)?)?;
    }
    if let Some(n) = exp.window {
        cfg.window = Some(n);
        cfg.family.window = n;
    }
    if let Some(s) = exp.seed {
        cfg.seed = Some(s);
    }
    if let Some(b) = exp.budget {
        cfg.family.budget = b;
    }
    if let Some(t) = exp.tol {
        cfg.family.tol = t;
    }
    Ok(cfg)
}

fn load_run_config(path: &Path) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(r) = serde_json::from_str::<Report>(&text) {
        return Ok(r.config);
    }
    if let Ok(c) = serde_json::from_str::<RunConfig>(&text) {
        return Ok(c);
    }
    serde_json::from_str::<ExperimentConfig>(&text)
        .map(RunConfig::Experiment)
        .map_err(|e| Error::Parse(format!("{}: not a report or config: {e}", path.display())))
}

fn emit(report: &Report, out: &OutputArgs, primary: &str) -> Result<ExitCode, Error> {
    if let Some(dir) = &out.out {
        report.write_dir(dir)?;
    }
    match out.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))?),
        Format::Csv => {
            let table = report.table(primary).or(report.tables.first());
            if let Some(t) = table {
                print!("{}", t.to_csv()?);
            }
        }
    }
    for c in &report.criteria {
        eprintln!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for f in &report.budget_flags {
        eprintln!("BUDGET {f}");
    }
    eprintln!("outcome: {}", serde_json::to_value(report.outcome).map_err(|e| Error::Io(e.to_string()))?);
    Ok(ExitCode::from(report.outcome.exit_code() as u8))
}

fn real_main(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Norm { spec, vector, window } => cmd_norm(&spec, &vector, window),
        Command::Estimate { names, exp } => {
            let mut cfg = experiment(&exp)?;
            for n in &names {
                cfg.estimates.push(n.parse::<ConstantName>()?);
            }
            if cfg.estimates.is_empty() {
                return Err(Error::InvalidArgument("no constants to estimate".into()));
            }
            let report = lab::run(&RunConfig::Experiment(cfg), exp.out.workers)?;
            emit(&report, &exp.out, "estimates")
        }
        Command::Check { ids, exp } => {
            let mut cfg = experiment(&exp)?;
            for id in &ids {
                cfg.checks.push(id.parse::<CheckId>()?);
            }
            if cfg.checks.is_empty() {
                return Err(Error::InvalidArgument("no checks to run".into()));
            }
            let report = lab::run(&RunConfig::Experiment(cfg), exp.out.workers)?;
            emit(&report, &exp.out, "checks")
        }
        Command::Reproduce { name, out } => {
            let report = lab::reproduce(&name, out.workers)?;
            emit(&report, &out, "")
        }
        Command::Run { file, out } => {
            let cfg = load_run_config(&file)?;
            let report = lab::run(&cfg, out.workers)?;
            emit(&report, &out, "")
        }
        Command::List => {
            println!("reproductions: {}", REPRODUCTIONS.join(", "));
            let ids: Vec<&str> = CheckId::ALL.iter().map(|c| c.as_str()).collect();
            println!("checks: {}", ids.join(", "));
            let names: Vec<String> = ConstantName::SCALARS.iter().map(|n| n.to_string()).collect();
            println!("constants: {}, D(m), d(m)", names.join(", "));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::BudgetExceeded { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
