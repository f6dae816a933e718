mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::Config;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "elastodamp", version, about = "Spectral laboratory for damped elastic waves")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// JSON config with `model`, `profile` and `experiment` sections; missing keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON artifacts and the error log.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Exit with status 4 when the command's acceptance check fails.
    #[arg(long, global = true)]
    check: bool,
    /// Worker threads (default: one per hardware thread).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for commands that sample at random.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print the effective config (defaults merged with --config) and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Error orders of the small- and large-frequency root expansions.
    ///
    /// CSV columns: zone,branch,regime,order,claimed,meets_claim.
    /// Check: every fit meets its claimed order within the tolerance.
    SymbolCheck,
    /// High-frequency spectral-gap exponent and Gevrey order.
    ///
    /// CSV columns: exponent,gevrey_order,expected_order.
    /// Check: |gevrey_order - expected_order| <= tolerance.
    Gevrey,
    /// Middle-zone Lyapunov functional on random modes (uses --seed).
    ///
    /// CSV columns: mode,xi_norm,c3,f0,max_violation,gronwall_ratio,holds.
    /// Check: every mode holds and has gronwall_ratio <= 1.
    Lyapunov,
    /// Log-log decay slope of a whole-space norm against the predicted exponent.
    ///
    /// CSV columns: t,value.
    /// Check: the verdict is consistent.
    DecayFit,
    /// Decay of the difference to the parabolic reference system.
    ///
    /// CSV columns: t,solution,reference,difference.
    /// Check: measured gap >= predicted gap - slack.
    DiffusionGap,
    /// Case classification and loss of decay for an exponent triple (JSON on stdout).
    ///
    /// CSV columns: component,p,g.
    /// Check: all rewrite identities hold.
    Exponents {
        /// Exponents p1 p2 p3.
        #[arg(long, num_args = 3, allow_negative_numbers = true)]
        p: Option<Vec<f64>>,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Semilinear run in a periodic box.
    ///
    /// CSV columns: t,l2_1,energy_1,l2_2,energy_2,l2_3,energy_3,wl2_1,wenergy_1,wl2_2,wenergy_2,wl2_3,wenergy_3.
    /// Check: the weighted norms stay bounded.
    Simulate,
    /// Picard-iteration contraction probe in a periodic box.
    ///
    /// CSV columns: n,difference,ratio.
    /// Check: contraction with ratio below picard_max_ratio.
    Picard,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SymbolCheck => "symbol-check",
            Command::Gevrey => "gevrey",
            Command::Lyapunov => "lyapunov",
            Command::DecayFit => "decay-fit",
            Command::DiffusionGap => "diffusion-gap",
            Command::Exponents { .. } => "exponents",
            Command::Simulate => "simulate",
            Command::Picard => "picard",
        }
    }
}

#[derive(thiserror::Error, Debug)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] elastodamp::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(elastodamp::Error::Validation(_)) => 2,
            CliError::Core(_) => 3,
            CliError::Io(_) => 1,
            CliError::Check(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(elastodamp::Error::Validation(_)) => "validation",
            CliError::Core(elastodamp::Error::NonFinite { .. }) => "non-finite",
            CliError::Core(_) => "numerical",
            CliError::Io(_) => "io",
            CliError::Check(_) => "check",
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn log_error(out: &Path, command: &str, err: &CliError) {
    let body = json!({
        "command": command,
        "kind": err.kind(),
        "exit_code": err.exit_code(),
        "message": err.to_string(),
    });
    let written = std::fs::create_dir_all(out)
        .and_then(|_| std::fs::write(out.join("error.json"), serde_json::to_string_pretty(&body).unwrap()));
    if let Err(e) = written {
        eprintln!("could not write error log: {e}");
    }
}

fn execute(cli: &Cli, command: &Command) -> Result<(), CliError> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Command::Exponents { p, m, s, theta } = command {
        let e = &mut cfg.experiment.exponents;
        if let Some(p) = p {
            e.p = [p[0], p[1], p[2]];
        }
        e.m = m.unwrap_or(e.m);
        e.s = s.unwrap_or(e.s);
        cfg.model.theta = theta.unwrap_or(cfg.model.theta);
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    let sink = commands::Sink::new(&cli.out, &cfg, cli.seed)?;
    let outcome = match command {
        Command::SymbolCheck => commands::symbol_check(&cfg, &sink),
        Command::Gevrey => commands::gevrey(&cfg, &sink),
        Command::Lyapunov => commands::lyapunov(&cfg, &sink, cli.seed),
        Command::DecayFit => commands::decay_fit(&cfg, &sink),
        Command::DiffusionGap => commands::diffusion_gap(&cfg, &sink),
        Command::Exponents { .. } => commands::exponents(&cfg, &sink),
        Command::Simulate => commands::simulate(&cfg, &sink),
        Command::Picard => commands::picard(&cfg, &sink),
    }?;
    eprintln!("{}: {}", command.name(), outcome.summary);
    if cli.check && !outcome.passed {
        return Err(CliError::Check(outcome.summary));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_config {
        return match load_config(cli.config.as_deref()) {
            Ok(cfg) => {
                println!("{}", serde_json::to_string_pretty(&cfg).unwrap());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                log_error(&cli.out, "print-config", &e);
                ExitCode::from(e.exit_code())
            }
        };
    }
    let Some(command) = cli.command.clone() else {
        eprintln!("error: a command is required\n\nRun `elastodamp --help` for usage.");
        return ExitCode::from(2);
    };
    match execute(&cli, &command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            log_error(&cli.out, command.name(), &e);
            ExitCode::from(e.exit_code())
        }
    }
}
