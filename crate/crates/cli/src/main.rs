mod args;
mod commands;

use std::ffi::OsString;
use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use args::{Cli, Command};

const THREADS_ENV: &str = "ANYSIZE_THREADS";
const SUBCOMMANDS: &[&str] = &["census", "audit", "make-toy", "train", "generate", "evaluate", "gradcheck"];

/// Failure classes, mapped to exit codes 1 (usage), 2 (data) and 3 (verification).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Data(e) => write!(f, "{e:#}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<anysize::Error> for CliError {
    fn from(e: anysize::Error) -> Self {
        match e {
            anysize::Error::InvalidArgument(m) => CliError::Usage(m),
            other => CliError::Data(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

/// Value of `--name X` or `--name=X` among the raw arguments.
fn flag_value(args: &[OsString], name: &str) -> Option<OsString> {
    let long = format!("--{name}");
    let prefix = format!("--{name}=");
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == long {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix(&prefix) {
            return Some(v.into());
        }
    }
    None
}

/// Reads `key=value` lines; blank lines and `#` comments are skipped.
fn read_config_file(path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .with_context(|| format!("{}:{}: expected key=value", path.display(), n + 1))?;
        pairs.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Splices config-file entries in as flags right after the subcommand,
/// skipping any the command line already sets.
fn inject_config(args: Vec<OsString>, pairs: &[(String, String)]) -> Vec<OsString> {
    let Some(pos) = args.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref())) else {
        return args;
    };
    let given = |key: &str| {
        let long = format!("--{key}");
        let prefix = format!("{long}=");
        args.iter().any(|a| {
            let s = a.to_string_lossy();
            s == long || s.starts_with(&prefix)
        })
    };
    let mut extra: Vec<OsString> = Vec::new();
    for (k, v) in pairs {
        if k == "config" || k == "threads" || given(k) {
            continue;
        }
        extra.push(format!("--{k}").into());
        if v != "true" {
            extra.push(v.into());
        }
    }
    let mut out = args[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos + 1..]);
    out
}

fn thread_count(cli: &Cli) -> Result<usize, CliError> {
    let n = match cli.threads {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| CliError::Usage(format!("{THREADS_ENV}={v} is not a count")))?),
            Err(_) => None,
        },
    };
    match n {
        Some(0) => Err(CliError::Usage("thread count must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let threads = thread_count(cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("starting thread pool")?;
    log::debug!("{} with {threads} threads", cli.command.name());
    match &cli.command {
        Command::Census(a) => commands::census(a, threads),
        Command::Audit(a) => commands::audit(a, threads),
        Command::MakeToy(a) => commands::make_toy(a, threads),
        Command::Train(a) => commands::train(a, threads),
        Command::Generate(a) => commands::generate(a, threads),
        Command::Evaluate(a) => commands::evaluate(a, threads),
        Command::Gradcheck(a) => commands::gradcheck(a, threads),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut raw: Vec<OsString> = std::env::args_os().collect();
    if let Some(path) = flag_value(&raw, "config") {
        match read_config_file(Path::new(&path)) {
            Ok(pairs) => raw = inject_config(raw, &pairs),
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
        }
    }
    let cli = match Cli::try_parse_from(raw) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_entries_land_after_subcommand_and_lose_to_flags() {
        let args = os(&["anysize", "--config", "c.txt", "train", "--epochs", "3"]);
        let pairs = vec![("epochs".to_string(), "9".to_string()), ("batch-size".to_string(), "4".to_string())];
        let out = inject_config(args, &pairs);
        assert_eq!(out, os(&["anysize", "--config", "c.txt", "train", "--batch-size", "4", "--epochs", "3"]));
    }

    #[test]
    fn flag_value_reads_both_forms() {
        assert_eq!(flag_value(&os(&["x", "--config=a"]), "config"), Some("a".into()));
        assert_eq!(flag_value(&os(&["x", "--config", "b"]), "config"), Some("b".into()));
        assert_eq!(flag_value(&os(&["x"]), "config"), None);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
