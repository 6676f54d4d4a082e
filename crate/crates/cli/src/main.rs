//! `qprior`: metrics, priors, relative entropies and reports from the command line.
//!
//! Exit codes: 0 success, 2 domain or numerical error, 64 usage error.
//! Data goes to stdout, diagnostics to stderr.

mod commands;
mod config;
mod output;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qprior::{MeasurementSpec, PriorName};

use config::Config;

/// Malformed invocation or configuration.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

const EXIT_DOMAIN: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "qprior", version, about = "Quantum metric priors and comparative noninformativity")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

/// Overrides for the configuration file (`--config` or `$QPRIOR_CONFIG`).
#[derive(Args, Debug, Clone, Default)]
struct GlobalOpts {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    q_min: Option<f64>,
    #[arg(long, global = true)]
    q_max: Option<f64>,
    /// Density convention for p_B: `sqrt` or `printed`.
    #[arg(long, global = true)]
    pb_convention: Option<String>,
    /// Truncation `r ≤ 1 − delta` used with the printed convention.
    #[arg(long, global = true)]
    pb_delta: Option<f64>,
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    #[arg(long, global = true)]
    rel_tol_4d: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Metric tensors: evaluate, compare numeric with closed form, or scan determinants.
    Metric {
        #[arg(value_enum)]
        action: MetricAction,
        #[arg(long, value_enum)]
        family: Family,
        /// Comma-separated coordinates (see `--help` of each family).
        #[arg(long)]
        point: Option<String>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Use the numeric (finite-difference) tensor for `eval`.
        #[arg(long)]
        numeric: bool,
        /// Escort family: use the q-truncated tensor.
        #[arg(long)]
        truncated: bool,
    },
    /// Prior normalization constants and marginal curves.
    Prior {
        #[arg(value_enum)]
        action: PriorAction,
        #[arg(long)]
        name: PriorName,
        #[arg(long, default_value = "r")]
        var: qprior::MarginalVar,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Divide by the normalization constant, or integrate the raw volume element.
        #[arg(long, value_enum, default_value_t = Mode::Normalized)]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative entropy S(p‖q) in nats.
    Kl {
        #[arg(long)]
        p: PriorName,
        #[arg(long)]
        q: PriorName,
        /// Compare posteriors under the test likelihood raised to this power.
        #[arg(long)]
        posterior: Option<f64>,
    },
    /// Pairwise noninformativity verdicts and the induced order.
    Rank {
        #[arg(long, value_delimiter = ',', default_value = "p_B,p_Btrunc,p_F,p_Fq1")]
        priors: Vec<PriorName>,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
    /// Expected information gain of a measurement.
    Infogain {
        #[arg(long)]
        prior: PriorName,
        /// e.g. "x:1,1 y:1,1 z:1,1 pow:1".
        #[arg(long)]
        spec: MeasurementSpec,
        /// Integrate over q with the escort likelihood (4D prior).
        #[arg(long)]
        q_extended: bool,
    },
    /// Every table and figure dataset into a directory.
    Report {
        #[arg(long)]
        all: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum MetricAction {
    Eval,
    Check,
    Detnull,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Family {
    /// `r,θ1,θ2`
    Bloch,
    /// `q,r,θ1,θ2`
    Escort,
    /// `v,r,θ1,θ2`, or `q,v,r,θ1,θ2` for the escort-extended tensor
    Spin1,
    /// `b_q,σ_q²` at q = 1
    Aberaj,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum PriorAction {
    Normalize,
    Marginal,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Mode {
    Normalized,
    Raw,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Md,
    Csv,
}

fn resolve_config(g: &GlobalOpts) -> Result<Config, Usage> {
    let mut c = Config::load(g.config.as_deref())?;
    let pairs: [(&str, Option<String>); 7] = [
        ("q_min", g.q_min.map(|v| v.to_string())),
        ("q_max", g.q_max.map(|v| v.to_string())),
        ("pb_convention", g.pb_convention.clone()),
        ("pb_delta", g.pb_delta.map(|v| v.to_string())),
        ("rel_tol", g.rel_tol.map(|v| v.to_string())),
        ("rel_tol_4d", g.rel_tol_4d.map(|v| v.to_string())),
        ("seed", g.seed.map(|v| v.to_string())),
    ];
    for (k, v) in pairs {
        if let Some(v) = v {
            c.set(k, &v)?;
        }
    }
    c.prior_config()?;
    Ok(c)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve_config(&cli.global)?;
    match cli.command {
        Command::Metric { action, family, point, samples, numeric, truncated } => {
            commands::metric(&cfg, action, family, point.as_deref(), samples, numeric, truncated)
        }
        Command::Prior { action, name, var, points, mode, out } => {
            commands::prior(&cfg, action, name, var, points, mode, out.as_deref())
        }
        Command::Kl { p, q, posterior } => commands::kl(&cfg, p, q, posterior),
        Command::Rank { priors, format } => commands::rank(&cfg, &priors, format),
        Command::Infogain { prior, spec, q_extended } => commands::infogain(&cfg, prior, spec, q_extended),
        Command::Report { all, out } => {
            if !all {
                return Err(Usage("report currently supports only `--all`".into()).into());
            }
            let dir = out.or_else(|| cfg.out.clone()).ok_or_else(|| Usage("report needs `--out DIR` or `out` in the config".into()))?;
            report::run_all(&cfg, &dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qprior: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_DOMAIN)
            }
        }
    }
}
