//! `hjblab` — scenario runner for the numerical laboratory.
//!
//! ```text
//! hjblab run <config.toml> [--plots] [--seed N] [--out DIR]
//! hjblab list
//! hjblab validate <config.toml>
//! ```
//!
//! Exit status: 0 when all scenario checks pass, 1 when a check fails or the
//! run aborts numerically (a diagnostic file is written), 2 on usage or
//! configuration errors.

mod config;
mod report;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ScenarioConfig;
use report::{write_summary, OutputDir};
use scenarios::{run_scenario, REGISTRY};

#[derive(Parser)]
#[command(
    name = "hjblab",
    about = "Scenario runner: Lyapunov audits of robustified policies and critic-convergence experiments",
    long_about = None,
    after_help = "Config defaults (TOML sections):\n\
      seed = 42, out_dir = \"out/<scenario>\"\n\
      [counterexample] g = 1.0, k = 3.0, a = 1.0\n\
      [scan]           x2_min = -5.0, x2_max = 5.0, step = 1e-3\n\
      [lq_stochastic]  a = -1.0, b = 1.0, q = 1.0, r = 1.0, gamma = 0.1, s = 0.1\n\
      [adaptive_plant] k = 1.0, g_min = 0.5, alpha_f = 2.0, alpha_g = 2.0, x0 = 1.0,\n\
                       theta_f0 = 0.0, theta_g0 = 0.6, dt = 1e-4, log_stride = 100\n\
      [critic]         alpha = 10.0, buffer = 20, pe_threshold = 1e-4, warmup = 1.0,\n\
                       sample_stride = 5, restart_period = 0.05, restart_radius = 1.0\n\
      [integrator]     dt = 1e-3, horizon = 10.0\n\
      [trials]         count = 200, log_stride = 10, x0 = [0.5]\n\
      [policy]         kind = \"optimal\" | \"zero\" | \"greedy_from_critic\" |\n\
                       \"optimal_plus_robustifier\" (k = 3.0, a = 1.0); omitted =\n\
                       scenario default (critic-deterministic: optimal, bound-check: zero)\n\
      [features]       kind = \"monomials\", degree = 2, constant = per-scenario"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a config file and write its artifacts.
    Run {
        /// Path to the TOML scenario config.
        config: PathBuf,
        /// Also write static SVG plots (decorative only).
        #[arg(long)]
        plots: bool,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the scenario registry with outputs.
    List,
    /// Parse and validate a config file without running it.
    Validate {
        /// Path to the TOML scenario config.
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for info in REGISTRY {
                println!("{:<24} {}", info.name, info.description);
                println!("{:<24} outputs: {}", "", info.outputs);
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config, None, None) {
            Ok(cfg) => {
                println!("ok: scenario '{}' (seed {})", cfg.scenario, cfg.seed);
                ExitCode::SUCCESS
            }
            Err(err) => {
                eprintln!("invalid config: {err:#}");
                ExitCode::from(2)
            }
        },
        Command::Run {
            config,
            plots,
            seed,
            out,
        } => {
            let cfg = match load(&config, seed, out) {
                Ok(cfg) => cfg,
                Err(err) => {
                    eprintln!("invalid config: {err:#}");
                    return ExitCode::from(2);
                }
            };
            run(&cfg, plots)
        }
    }
}

fn load(
    path: &std::path::Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::from_path(path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(out) = out {
        cfg.out_dir = Some(out);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cfg: &ScenarioConfig, plots: bool) -> ExitCode {
    let out = match OutputDir::create(cfg.out_dir()) {
        Ok(out) => out,
        Err(err) => {
            eprintln!("cannot prepare output directory: {err:#}");
            return ExitCode::from(1);
        }
    };
    println!("scenario {} (seed {})", cfg.scenario, cfg.seed);
    let checks = match run_scenario(cfg, &out, plots) {
        Ok(checks) => checks,
        Err(err) => {
            eprintln!("scenario aborted: {err:#}");
            let _ = out.write_diagnostic(&format!("scenario {} aborted: {err:#}", cfg.scenario));
            return ExitCode::from(1);
        }
    };
    if let Err(err) = write_summary(&out.path("summary.csv"), &cfg.scenario, &checks) {
        eprintln!("cannot write summary: {err:#}");
        return ExitCode::from(1);
    }
    let mut all_pass = true;
    for c in &checks {
        all_pass &= c.pass;
        println!(
            "  [{}] {}: {:.6e} {} {:.6e}",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.value,
            c.relation,
            c.threshold
        );
    }
    if all_pass {
        println!("all checks passed");
        ExitCode::SUCCESS
    } else {
        println!("checks failed");
        ExitCode::from(1)
    }
}
