//! `gff4`: runs the sphere-average experiments and writes CSV/JSON reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use config::{CommandKind, ExperimentConfig};
use error::CliError;
use output::{Manifest, Versions, OUTPUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "gff4", version, about = "Sphere-average experiments for the 4D Gaussian free field")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config file and $GFF4_OUTPUT_DIR).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replications: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override any config key, e.g. `--set upper.k=4`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Table of I₀, I₁, I₂, K₀, K₁, the Turán difference, f₁, f₂ and G.
    SpecfunTable {
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        x_min: Option<f64>,
        #[arg(long)]
        x_max: Option<f64>,
    },
    /// Kernel table and factorization of a sphere configuration.
    CovTable,
    /// Lipschitz-type bound on variance differences over random configurations.
    KcCheck {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Hierarchical field draws on a lattice.
    Sample {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
    },
    /// Moments or level-to-level differences of the cutoff measures.
    Liouville {
        /// `moments` or `convergence`.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n_levels: Option<usize>,
    },
    /// Drift of the sphere average under the rooted measure.
    TiltCheck {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Thick-center counts and the box-count exponent.
    Dimension {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Perfect-thick-point measures, their energies and the correlation check.
    Energy {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
    },
    /// Every acceptance criterion, aggregated into one summary.
    VerifyAll {
        /// `full` or `quick`.
        #[arg(long)]
        profile: Option<String>,
    },
}

fn list<T: ToString>(v: &[T]) -> String {
    format!("[{}]", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
}

fn quoted(s: &str) -> String {
    format!("\"{s}\"")
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Command::SpecfunTable { .. } => CommandKind::SpecfunTable,
            Command::CovTable => CommandKind::CovTable,
            Command::KcCheck { .. } => CommandKind::KcCheck,
            Command::Sample { .. } => CommandKind::Sample,
            Command::Liouville { .. } => CommandKind::Liouville,
            Command::TiltCheck { .. } => CommandKind::TiltCheck,
            Command::Dimension { .. } => CommandKind::Dimension,
            Command::Energy { .. } => CommandKind::Energy,
            Command::VerifyAll { .. } => CommandKind::VerifyAll,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::SpecfunTable { .. } => "specfun-table",
            Command::CovTable => "cov-table",
            Command::KcCheck { .. } => "kc-check",
            Command::Sample { .. } => "sample",
            Command::Liouville { .. } => "liouville",
            Command::TiltCheck { .. } => "tilt-check",
            Command::Dimension { .. } => "dimension",
            Command::Energy { .. } => "energy",
            Command::VerifyAll { .. } => "verify-all",
        }
    }

    fn overrides(&self) -> Vec<(String, String)> {
        let mut o: Vec<(&str, Option<String>)> = Vec::new();
        match self {
            Command::SpecfunTable { points, x_min, x_max } => {
                o.push(("specfun.points", points.map(|v| v.to_string())));
                o.push(("specfun.x_min", x_min.map(|v| format!("{v:?}"))));
                o.push(("specfun.x_max", x_max.map(|v| format!("{v:?}"))));
            }
            Command::CovTable => {}
            Command::KcCheck { samples } => o.push(("kc.samples", samples.map(|v| v.to_string()))),
            Command::Sample { k, levels } => {
                o.push(("sample.k", k.map(|v| v.to_string())));
                o.push((
                    "sample.levels",
                    levels.as_ref().map(|v| list(&v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>())),
                ));
            }
            Command::Liouville { mode, gamma, k, n_levels } => {
                o.push(("liouville.mode", mode.as_deref().map(quoted)));
                o.push(("liouville.gamma", gamma.map(|v| format!("{v:?}"))));
                o.push(("liouville.k", k.map(|v| v.to_string())));
                o.push(("liouville.n_levels", n_levels.map(|v| v.to_string())));
            }
            Command::TiltCheck { gamma, draws } => {
                o.push(("tilt.gamma", gamma.map(|v| format!("{v:?}"))));
                o.push(("tilt.draws", draws.map(|v| v.to_string())));
            }
            Command::Dimension { a, k } => {
                o.push(("upper.a", a.map(|v| format!("{v:?}"))));
                o.push(("upper.k", k.map(|v| v.to_string())));
            }
            Command::Energy { a, n } => {
                o.push(("lower.a", a.map(|v| format!("{v:?}"))));
                o.push(("lower.n", n.as_ref().map(|v| list(v))));
            }
            Command::VerifyAll { profile } => o.push(("verify.profile", profile.as_deref().map(quoted))),
        }
        o.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))).collect()
    }
}

fn split_set(s: &str) -> Result<(String, String), CliError> {
    let (k, v) =
        s.split_once('=').ok_or_else(|| CliError::Config(format!("--set `{s}` must have the form KEY=VALUE")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// File < `--set` < `$GFF4_OUTPUT_DIR` < global flags < command flags.
fn effective_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let text = match &cli.config {
        Some(p) => {
            std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?
        }
        None => String::new(),
    };
    let mut overrides = cli.set.iter().map(|s| split_set(s)).collect::<Result<Vec<_>, _>>()?;
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            overrides.push(("output_dir".into(), quoted(&dir.replace('\\', "\\\\").replace('"', "\\\""))));
        }
    }
    let mut cfg = ExperimentConfig::parse(&text, &overrides)?;
    if let Some(d) = &cli.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.replications {
        cfg.replications = r;
    }
    let merged = ExperimentConfig::parse(&cfg.to_toml(), &cli.command.overrides())?;
    merged.validate(cli.command.kind())?;
    Ok(merged)
}

fn execute(cli: &Cli) -> Result<(ExperimentConfig, output::Outputs), CliError> {
    let cfg = effective_config(cli)?;
    let out = commands::run(cli.command.kind(), &cfg)?;
    out.write_all(&cfg.output_dir)?;
    Ok((cfg, out))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: cli::threads: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cli::threads: {e}");
            return ExitCode::from(2);
        }
    }
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let (cfg, outputs, code) = match execute(&cli) {
        Ok((cfg, out)) => (cfg, out.names(), 0),
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            match effective_config(&cli) {
                Ok(cfg) => (cfg, Vec::new(), code),
                Err(_) => return ExitCode::from(code as u8),
            }
        }
    };
    let manifest = Manifest {
        command: cli.command.name().into(),
        seed: cfg.seed,
        threads: rayon::current_num_threads(),
        versions: Versions { gff4: gff4::VERSION, gff4_cli: env!("CARGO_PKG_VERSION") },
        output_dir: cfg.output_dir.clone(),
        outputs,
        config: cfg.to_toml(),
        started_unix_seconds: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        exit_code: code,
    };
    let path = cfg.output_dir.join("manifest.json");
    let written = std::fs::create_dir_all(&cfg.output_dir)
        .and_then(|_| std::fs::write(&path, serde_json::to_vec_pretty(&manifest).expect("manifest serializes")));
    if let Err(e) = written {
        eprintln!("error: cli::output: {}: {e}", path.display());
        return ExitCode::from(if code == 0 { 2 } else { code as u8 });
    }
    ExitCode::from(code as u8)
}
