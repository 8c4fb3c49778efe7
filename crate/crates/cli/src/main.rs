use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use octokdv::algebra::{structure_constants, OCTONION_LEVEL};
use octokdv::config::{RunConfig, Tolerances};
use octokdv::runner;
use octokdv::verify::{verify, Suite, SuiteReport};
use octokdv::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "octokdv", version, about = "Octonionic KdV numerical laboratory")]
struct Cli {
    /// JSON run configuration (a meta.json from an earlier run also works).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `outputs.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and write snapshots, charges and meta.json.
    Run,
    /// Run the Gardner flow once per `sweep.epsilons`, in parallel.
    Sweep,
    /// Run a property suite and print a JSON report.
    Verify {
        #[arg(value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
    },
    /// Write the octonion multiplication table.
    Table,
    /// Dump the Gardner series terms of the initial condition.
    Series,
    /// Equivariance residuals for the symmetries listed in the config.
    Symmetry,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Algebra,
    Structures,
    Symmetry,
    Transforms,
}

impl SuiteArg {
    fn suites(self) -> Vec<Suite> {
        match self {
            SuiteArg::All => Suite::ALL.to_vec(),
            SuiteArg::Algebra => vec![Suite::Algebra],
            SuiteArg::Structures => vec![Suite::Structures],
            SuiteArg::Symmetry => vec![Suite::Symmetry],
            SuiteArg::Transforms => vec![Suite::Transforms],
        }
    }
}

/// Exit codes: 0 success, 1 error, 2 a verification check failed.
enum Outcome {
    Ok,
    ChecksFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_hint = cli.out.clone();
    match execute(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(2),
        Err(e) => {
            let record = runner::error_json(&e);
            eprintln!("{record}");
            if let Some(dir) = out_hint {
                if fs::create_dir_all(&dir).is_ok() {
                    let _ = fs::write(dir.join("error.json"), record.to_string());
                }
            }
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    match &cli.config {
        Some(p) => RunConfig::load(p),
        None => Err(Error::Config("--config PATH is required for this subcommand".into())),
    }
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.map(|c| PathBuf::from(&c.outputs.directory)))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn emit(cli: &Cli, value: &serde_json::Value) {
    if !cli.quiet {
        println!("{}", serde_json::to_string_pretty(value).expect("JSON values serialize"));
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))?;
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Run => {
            let cfg = load_config(cli)?;
            let summary = runner::run(&cfg, &out_dir(cli, Some(&cfg)))?;
            emit(cli, &serde_json::to_value(summary)?);
            Ok(Outcome::Ok)
        }
        Command::Sweep => {
            let cfg = load_config(cli)?;
            let results = runner::sweep(&cfg, &out_dir(cli, Some(&cfg)))?;
            let mut first_error = None;
            let report: Vec<serde_json::Value> = results
                .into_iter()
                .map(|r| match r {
                    Ok(s) => serde_json::to_value(s).expect("summaries serialize"),
                    Err(e) => {
                        let v = runner::error_json(&e);
                        first_error.get_or_insert(e);
                        v
                    }
                })
                .collect();
            emit(cli, &json!(report));
            match first_error {
                Some(e) => Err(e),
                None => Ok(Outcome::Ok),
            }
        }
        Command::Verify { suite } => {
            let tol = match &cli.config {
                Some(p) => RunConfig::load(p)?.tolerances,
                None => Tolerances::default(),
            };
            let reports = suite.suites().into_iter().map(|s| verify(s, &tol)).collect::<Result<Vec<SuiteReport>, _>>()?;
            let passed = reports.iter().all(|r| r.passed);
            let value = json!({ "passed": passed, "suites": reports });
            if let Some(dir) = &cli.out {
                write_json(&dir.join("verify.json"), &value)?;
            }
            emit(cli, &value);
            Ok(if passed { Outcome::Ok } else { Outcome::ChecksFailed })
        }
        Command::Table => {
            let table = structure_constants(OCTONION_LEVEL)?;
            let mut csv = String::from("row");
            for k in 0..8 {
                csv.push_str(&format!(",e{k}"));
            }
            csv.push('\n');
            for j in 0..8 {
                csv.push_str(&format!("e{j}"));
                for k in 0..8 {
                    let (m, s) = table.product(j, k);
                    csv.push_str(&format!(",{}e{m}", if s > 0.0 { '+' } else { '-' }));
                }
                csv.push('\n');
            }
            if let Some(dir) = &cli.out {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("multiplication_table.csv"), &csv)?;
            }
            if !cli.quiet {
                print!("{csv}");
            }
            Ok(Outcome::Ok)
        }
        Command::Series => {
            let cfg = load_config(cli)?;
            let dir = out_dir(cli, Some(&cfg));
            let terms = runner::write_series(&cfg, &dir)?;
            emit(cli, &json!({ "directory": dir, "terms": terms }));
            Ok(Outcome::Ok)
        }
        Command::Symmetry => {
            let cfg = load_config(cli)?;
            let results = runner::symmetry_runs(&cfg)?;
            let tol = cfg.tolerances.equivariance;
            let passed = results.iter().all(|r| r.residual.is_some_and(|x| x <= tol));
            let value = json!({ "passed": passed, "tolerance": tol, "results": results });
            if let Some(dir) = &cli.out {
                write_json(&dir.join("symmetry.json"), &value)?;
            }
            emit(cli, &value);
            Ok(if passed { Outcome::Ok } else { Outcome::ChecksFailed })
        }
    }
}
