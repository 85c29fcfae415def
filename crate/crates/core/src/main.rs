use clap::{Args, Parser, Subcommand};
use collapse_bounds::cli::{self, CommonOptions, Outcome};
use collapse_bounds::config::{ModelName, Preset};
use collapse_bounds::{Error, Result};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Matter-wave interference under collapse models: patterns, exclusion maps
/// and localization bounds.
#[derive(Parser)]
#[command(name = "collapse-bounds", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// farfield-2012, kdtl-2013 or custom.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// qm, csl, ccsl, dcsl, dcsl-boosted, qmupl or dp.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Bare rate: lambda [1/s], or eta [1/(m^2 s)] for qmupl.
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Length: r_C [m], or R0 for dp.
    #[arg(long, global = true)]
    rc: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for the parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Interference pattern or Talbot-Lau signal for one model.
    Simulate,
    /// chi-square exclusion map over the model parameters.
    Scan {
        /// `position,count` CSV; seeded synthetic QM data when absent.
        #[arg(long, value_name = "FILE")]
        data: Option<PathBuf>,
    },
    /// Localization boundary for the graphene-disk scenario.
    Localize,
    /// Paraxial and model-regime margins; exit 1 if a check fails.
    Validate,
    /// Seeded synthetic counts for the configured experiment.
    GenSynthetic,
}

fn run(cli: Cli) -> Result<Outcome> {
    let c = cli.common;
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Usage(format!("--threads: {e}")))?;
    }
    let opts = CommonOptions {
        config: c.config,
        preset: c.preset.as_deref().map(Preset::parse).transpose()?,
        model: c.model.as_deref().map(ModelName::parse).transpose()?,
        lambda: c.lambda,
        rc: c.rc,
        seed: c.seed,
        out: c.out,
    };
    let cfg = cli::resolve(&opts)?;
    match cli.command {
        Command::Simulate => cli::simulate(&cfg),
        Command::Scan { data } => cli::scan(&cfg, data.as_deref()),
        Command::Localize => cli::localize(&cfg),
        Command::Validate => cli::validate(&cfg),
        Command::GenSynthetic => cli::gen_synthetic(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(out) => {
            // A closed pipe on stdout is not an error of the run.
            let mut stdout = std::io::stdout().lock();
            let _ = write!(stdout, "{}", out.report);
            for f in &out.files {
                let _ = writeln!(stdout, "wrote {}", f.display());
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
