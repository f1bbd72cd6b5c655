use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use shtk::harness::inspect::{constants_rows, corona_rows, dyadic_rows, space_rows, sparse_rows};
use shtk::harness::{
    emit_report, sparse_domination_probe_in, summarize, verify_theorem_1_in, verify_theorem_2_in,
    ExperimentConfig, Format, ReportRow, Workspace,
};
use shtk::Error;

/// Experiments on finite spaces of homogeneous type.
#[derive(Parser)]
#[command(name = "shtk", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv, table or plotdata.
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the space and report its structure constants.
    Space {
        #[command(subcommand)]
        action: BuildAction,
    },
    /// Build and validate the adjacent dyadic systems.
    Dyadic {
        #[command(subcommand)]
        action: BuildAction,
    },
    /// Weight characteristics of each configured pair.
    Constants,
    /// Norm estimates for each sparse family of the catalog.
    Sparse {
        #[command(subcommand)]
        action: NormAction,
    },
    /// Corona strata of the catalog families.
    Corona,
    /// Verify a theorem over the configured sweep.
    Verify {
        #[command(subcommand)]
        theorem: Theorem,
    },
    /// Compare a truncated singular kernel with sparse operators.
    Probe {
        #[command(subcommand)]
        kind: ProbeKind,
    },
}

#[derive(Subcommand)]
enum BuildAction {
    Build,
}

#[derive(Subcommand)]
enum NormAction {
    Norm,
}

#[derive(Subcommand)]
enum Theorem {
    Thm1,
    Thm2,
}

#[derive(Subcommand)]
enum ProbeKind {
    Domination,
}

enum Outcome {
    Clean,
    Violation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> shtk::Result<Outcome> {
    let path = cli
        .config
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output.dir = out;
    }
    if let Some(format) = cli.format {
        cfg.output.format = format;
    }
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("--jobs: {e}")))?;
    }
    let ws = Workspace::build(&cfg)?;
    match cli.command {
        Command::Space { .. } => {
            std::fs::create_dir_all(&cfg.output.dir)?;
            let doc = serde_json::to_string_pretty(&ws.space)?;
            std::fs::write(
                cfg.output
                    .dir
                    .join(format!("{}-space.json", cfg.output.stem)),
                doc,
            )?;
            write(&space_rows(&ws), &cfg, "space")?;
            Ok(Outcome::Clean)
        }
        Command::Dyadic { .. } => {
            let rows = dyadic_rows(&ws);
            write(&rows, &cfg, "dyadic")?;
            Ok(flag(rows.iter().any(|r| r.violations > 0)))
        }
        Command::Constants => {
            write(&constants_rows(&cfg, &ws)?, &cfg, "constants")?;
            Ok(Outcome::Clean)
        }
        Command::Sparse { .. } => {
            let rows = sparse_rows(&cfg, &ws)?;
            write(&rows, &cfg, "sparse")?;
            Ok(flag(rows.iter().any(|r| {
                r.norm_lo > r.norm_hi * (1.0 + 1e-9)
                    || (r.exact && r.t_sigma.max(r.t_w) > r.norm_hi * (1.0 + 1e-9))
            })))
        }
        Command::Corona => {
            write(&corona_rows(&cfg, &ws)?, &cfg, "corona")?;
            Ok(Outcome::Clean)
        }
        Command::Verify { theorem } => {
            let (rows, name) = match theorem {
                Theorem::Thm1 => (verify_theorem_1_in(&cfg, &ws)?, "thm1"),
                Theorem::Thm2 => (verify_theorem_2_in(&cfg, &ws)?, "thm2"),
            };
            write(&rows, &cfg, name)?;
            let summary = summarize(&rows);
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(flag(!summary.violations.is_empty()))
        }
        Command::Probe { .. } => {
            if ws.space.dimension() != 1 {
                return Err(Error::Unsupported(
                    "the truncated kernel probe needs a 1-D space".into(),
                ));
            }
            let rows = sparse_domination_probe_in(&cfg, &ws)?;
            write(&rows, &cfg, "domination")?;
            let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
            let max = ratios.iter().copied().fold(0.0, f64::max);
            let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            println!(
                "{}",
                json!({ "rows": rows.len(), "max_ratio": max, "min_ratio": min })
            );
            Ok(flag(ratios.iter().any(|r| !r.is_finite())))
        }
    }
}

fn flag(violated: bool) -> Outcome {
    if violated {
        Outcome::Violation
    } else {
        Outcome::Clean
    }
}

fn write<R: ReportRow>(rows: &[R], cfg: &ExperimentConfig, name: &str) -> shtk::Result<()> {
    let stem = format!("{}-{name}", cfg.output.stem);
    for file in emit_report(rows, cfg.output.format, &cfg.output.dir, &stem)? {
        eprintln!("wrote {}", file.display());
    }
    Ok(())
}
