use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use labcap_harness::artifacts::{resolve_out_dir, write_json};
use labcap_harness::error::exit;
use labcap_harness::presets::all_presets;
use labcap_harness::sweep::{parse_range, sweep};
use labcap_harness::{
    dispersion_dump, run_experiment, table1, ExperimentConfig, HarnessError, RunOptions,
};

#[derive(Parser)]
#[command(
    name = "labcap",
    version,
    about = "Labor/capital cross-diffusion experiments"
)]
struct Cli {
    /// Output directory (default: $LABCAP_OUT_DIR or ./labcap-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for multi-experiment commands (1 = sequential).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment end to end and write its artifacts.
    Run {
        /// Preset name (exp1..exp4) or path to a TOML config.
        target: String,
        /// Stop after the linear and weakly nonlinear analysis.
        #[arg(long)]
        no_fem: bool,
    },
    /// Reproduce the coefficient table for the presets or the given configs.
    Table1 {
        configs: Vec<String>,
        /// Skip the simulations (T_s and MSE columns stay empty).
        #[arg(long)]
        no_fem: bool,
    },
    /// Write dispersion curves det(A_k) for one experiment.
    Dispersion {
        target: String,
        /// Values of b (default: b_c and b_multiplier * b_c).
        #[arg(long = "b", num_args = 1..)]
        b: Vec<f64>,
    },
    /// Run an experiment for a range of one parameter.
    Sweep {
        config: String,
        #[arg(long)]
        param: String,
        /// `start:end:count`.
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        #[arg(long)]
        no_fem: bool,
    },
    /// Print a preset as a TOML config.
    Show { preset: String },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(exit::CONFIG as u8);
        }
    }
    let code = match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn execute(cli: Cli) -> Result<i32, HarnessError> {
    let out = resolve_out_dir(cli.out.as_deref());
    match cli.command {
        Command::Run { target, no_fem } => {
            let cfg = ExperimentConfig::resolve(&target)?;
            let opts = RunOptions {
                fem: !no_fem,
                out_dir: Some(out),
            };
            let run = run_experiment(&cfg, &opts)?;
            println!("{}", serde_json::to_string_pretty(&run.report)?);
            for p in &run.artifacts {
                log::info!("wrote {}", p.display());
            }
            Ok(exit::SUCCESS)
        }
        Command::Table1 { configs, no_fem } => {
            let cfgs = if configs.is_empty() {
                all_presets()
            } else {
                configs
                    .iter()
                    .map(|c| ExperimentConfig::resolve(c))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let table = table1(&cfgs, !no_fem);
            print!("{}", table.render());
            table.write(&out)?;
            Ok(if table.any_failed_row() {
                exit::STAGE
            } else if !table.all_match() {
                exit::COMPARISON
            } else {
                exit::SUCCESS
            })
        }
        Command::Dispersion { target, b } => {
            let cfg = ExperimentConfig::resolve(&target)?;
            let bs = (!b.is_empty()).then_some(b.as_slice());
            for p in dispersion_dump(&cfg, bs, &out)? {
                println!("{}", p.display());
            }
            Ok(exit::SUCCESS)
        }
        Command::Sweep {
            config,
            param,
            range,
            no_fem,
        } => {
            let cfg = ExperimentConfig::resolve(&config)?;
            let values = parse_range(&range)?;
            let (path, rows) = sweep(&cfg, &param, &values, !no_fem, &out)?;
            write_json(&path.with_extension("json"), &rows)?;
            println!("{}", path.display());
            Ok(if rows.iter().any(|r| r.error.is_some()) {
                exit::STAGE
            } else {
                exit::SUCCESS
            })
        }
        Command::Show { preset } => {
            let cfg = labcap_harness::presets::preset(&preset)
                .ok_or_else(|| HarnessError::config(format!("unknown preset `{preset}`")))?;
            print!("{}", cfg.to_toml()?);
            Ok(exit::SUCCESS)
        }
    }
}
