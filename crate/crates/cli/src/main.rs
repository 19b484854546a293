use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dnls::evolution::Problem;
use dnls::hypotheses::check_hypotheses;
use dnls::identities::Verdict;
use dnls::runner::{self, exit_code_for, parse_config, RunConfig, EXIT_FAIL, EXIT_OK};
use dnls::Error;

#[derive(Parser, Debug)]
#[command(name = "dnls", version)]
#[command(about = "Pseudospectral simulator and diagnostics for damped defocusing NLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; defaults to `output.directory` from the config
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps
    #[arg(long, global = true, env = "DNLS_THREADS", default_value_t = 1)]
    threads: usize,

    /// Only report errors
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the hypothesis checkers only
    Check,
    /// Run one simulation with diagnostics
    Run,
    /// Run the cartesian product of the [sweep] axes
    Sweep,
    /// Recompute identity verdicts from a stored run directory
    Verify,
}

fn load(cli: &Cli) -> Result<(RunConfig, Option<PathBuf>), Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let config = parse_config(&text)?;
    Ok((config, path.parent().map(Path::to_path_buf)))
}

fn out_dir(cli: &Cli, config: &RunConfig) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| config.output.directory.clone())
}

fn execute(cli: &Cli) -> Result<i32, Error> {
    let (config, config_dir) = load(cli)?;
    let out = out_dir(cli, &config);
    match cli.command {
        Command::Check => {
            let problem = Problem::new(
                config.grid()?,
                config.exponents()?,
                &config.physics.a,
                &config.physics.v,
            )?;
            let report = check_hypotheses(&problem, config.overrides);
            let json = report.to_json()?;
            if cli.out.is_some() {
                std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
                let path = out.join("hypotheses.json");
                std::fs::write(&path, &json).map_err(|e| Error::io(&path, e))?;
            }
            if !cli.quiet {
                println!("{json}");
            }
            Ok(EXIT_OK)
        }
        Command::Run => {
            let outcome = runner::run(&config, &out, config_dir.as_deref())?;
            if !cli.quiet {
                for v in &outcome.verdicts.identities {
                    let order = v.measured_order.map(|o| format!(" order {o:.2}")).unwrap_or_default();
                    let note = v.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default();
                    println!(
                        "{:<8} {:<12} max rel residual {:.3e} (tol {:.3e}){order}{note}",
                        v.identity, v.verdict, v.max_rel_residual, v.tol
                    );
                }
                if let Some(b) = &outcome.verdicts.bounds {
                    for flag in &b.flags {
                        println!("monitor: {flag}");
                    }
                }
                if let Some(s) = &outcome.verdicts.scattering_verdict {
                    println!("scattering: {s}");
                }
                for w in &outcome.verdicts.warnings {
                    println!("warning: {w}");
                }
            }
            if let Some(msg) = &outcome.verdicts.aborted {
                eprintln!("aborted: {msg}");
            }
            Ok(outcome.exit_code)
        }
        Command::Sweep => {
            let rows = runner::sweep(&config, &out, cli.threads, config_dir.as_deref())?;
            if !cli.quiet {
                println!("{} cells, summary in {}", rows.len(), out.join("sweep.csv").display());
                for r in &rows {
                    if let Some(e) = &r.error {
                        println!("cell {}: {e}", r.cell);
                    }
                }
            }
            Ok(rows.iter().map(|r| r.exit_code).max().unwrap_or(EXIT_OK))
        }
        Command::Verify => {
            let verdicts = runner::verify(&config, &out)?;
            if !cli.quiet {
                println!("{}", format_verdicts(&verdicts));
            }
            Ok(if verdicts.iter().any(|v| v.verdict == Verdict::Fail) {
                EXIT_FAIL
            } else {
                EXIT_OK
            })
        }
    }
}

fn format_verdicts(v: &[dnls::identities::IdentityVerdict]) -> String {
    v.iter()
        .map(|x| {
            format!(
                "{} {} {:.3e} tol {:.3e}",
                x.identity, x.verdict, x.max_rel_residual, x.tol
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    ExitCode::from(code as u8)
}
