use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use spot_core::engine::parse_instances;
use spot_core::report::rep_task;
use spot_core::{Project, SpotError, TaskKind};

/// Sequential parameter optimization: tune an algorithm's parameters with
/// designs, surrogate models and sequential improvement.
#[derive(Debug, Parser)]
#[command(name = "spot", version)]
struct Cli {
    /// Project configuration file (`<basename>.conf`).
    conf: PathBuf,
    /// One of init, run, seq, rep, auto, meta.
    #[arg(default_value = "auto", value_parser = parse_task)]
    task: TaskKind,
    /// Override a configuration key for this invocation.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Instance list for the meta task: one line of `;`-separated APD
    /// overrides per instance.
    #[arg(long, value_name = "FILE")]
    instances: Option<PathBuf>,
}

fn parse_task(s: &str) -> Result<TaskKind, String> {
    s.parse().map_err(|e: SpotError| e.to_string())
}

enum Failure {
    Usage(String),
    Runtime(SpotError),
}

impl From<SpotError> for Failure {
    fn from(e: SpotError) -> Self {
        Failure::Runtime(e)
    }
}

fn read_instances(path: &Path) -> Result<Vec<Vec<(String, spot_core::fileio::kv::Value)>>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|source| SpotError::Io { path: path.to_path_buf(), source })?;
    Ok(parse_instances(&text)?)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if cli.instances.is_some() && cli.task != TaskKind::Meta {
        return Err(Failure::Usage("--instances only applies to the meta task".into()));
    }
    if cli.task == TaskKind::Meta && cli.instances.is_none() {
        return Err(Failure::Usage("the meta task needs --instances <FILE>".into()));
    }
    let project = Project::open(&cli.conf, &cli.set)?;
    match cli.task {
        TaskKind::Init => {
            let des = project.init_task()?;
            log::info!("wrote {} design points to {}", des.rows.len(), project.paths.des().display());
        }
        TaskKind::Run => {
            let n = project.run_task()?;
            log::info!("performed {n} runs");
        }
        TaskKind::Seq => {
            let des = project.seq_task()?;
            log::info!("wrote {} design points to {}", des.rows.len(), project.paths.des().display());
        }
        TaskKind::Rep => print!("{}", rep_task(&project)?),
        TaskKind::Auto => {
            project.auto_task()?;
            print!("{}", rep_task(&project)?);
        }
        TaskKind::Meta => {
            let path = cli.instances.as_deref().expect("checked above");
            print!("{}", project.meta_task(&read_instances(path)?)?.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
