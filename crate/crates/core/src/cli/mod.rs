//! The `stochmodels` command line.
//!
//! Every subcommand writes one primary output (JSON for fits, CSV for series,
//! fields and point sets) to `--output` or standard output. When an output
//! file is named, a manifest recording the argument vector, input hashes,
//! seed and version is written beside it; `replay` re-runs a manifest.
//!
//! Subcommand flags may also come from `--config params.json`, a flat object
//! whose keys are flag names. Flags given on the command line win.
//!
//! Exit codes: 0 success, 1 data or fit error, 2 usage error. Errors go to
//! standard error as `error[<code>]: <message>`.

mod args;
mod commands;
mod manifest;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, FromArgMatches};

pub use args::*;
pub use manifest::{Clock, FixedClock, InputRecord, Manifest, SystemClock};

use crate::error::{Error, Result};

/// Runs with the system clock and the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &SystemClock, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`run`], with an explicit clock and output streams.
pub fn run_with<I, T>(argv: I, clock: &dyn Clock, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let expanded = match expand_config(&argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error[usage]: {e}");
            return 2;
        }
    };
    let cli = match parse(&expanded) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                let _ = write!(out, "{}", e.render());
            } else {
                let _ = write!(err, "{}", e.render());
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, recorded, clock, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.code());
            1
        }
    }
}

fn parse(argv: &[OsString]) -> std::result::Result<Cli, clap::Error> {
    let mut cmd = Cli::command().args_override_self(true);
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for n in names {
        cmd = cmd.mut_subcommand(n, |s| s.args_override_self(true));
    }
    let matches = cmd.try_get_matches_from(argv)?;
    Cli::from_arg_matches(&matches)
}

/// Splices `--config FILE` into flags placed right after the subcommand, so
/// that later command-line flags override them.
fn expand_config(argv: &[OsString]) -> Result<Vec<OsString>> {
    let Some(pos) = argv.iter().position(|a| a == "--config") else {
        return Ok(argv.to_vec());
    };
    let path = argv
        .get(pos + 1)
        .ok_or_else(|| Error::Parameter("--config needs a file".into()))?;
    let text = std::fs::read_to_string(path)?;
    let obj: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&text)?;
    let mut flags = Vec::new();
    for (k, v) in obj {
        let flag = OsString::from(format!("--{}", k.replace('_', "-")));
        match v {
            serde_json::Value::Bool(true) => flags.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                for item in items {
                    flags.push(flag.clone());
                    flags.push(json_scalar(&item)?.into());
                }
            }
            other => {
                flags.push(flag);
                flags.push(json_scalar(&other)?.into());
            }
        }
    }
    let mut rest: Vec<OsString> = argv[..pos].to_vec();
    rest.extend_from_slice(&argv[pos + 2..]);
    // first positional after the program name is the subcommand
    let sub = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|i| i + 2)
        .unwrap_or(rest.len());
    let mut out = rest[..sub.min(rest.len())].to_vec();
    out.extend(flags);
    out.extend_from_slice(&rest[sub.min(rest.len())..]);
    Ok(out)
}

fn json_scalar(v: &serde_json::Value) -> Result<String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        serde_json::Value::Bool(b) => Ok(b.to_string()),
        _ => Err(Error::Parameter(format!("unsupported config value {v}"))),
    }
}

fn execute(cli: Cli, recorded: Vec<String>, clock: &dyn Clock, out: &mut dyn Write) -> Result<()> {
    if let Command::Replay(r) = &cli.command {
        return replay(&r.manifest_file, cli.output.clone(), cli.workers, clock, out);
    }
    let bytes = with_workers(cli.workers, || commands::dispatch(&cli.command))?;
    emit(&cli, &bytes, out)?;
    if let Some(path) = manifest_path(&cli) {
        let m = Manifest::build(&cli, recorded, &bytes, clock)?;
        std::fs::write(path, serde_json::to_string_pretty(&m)? + "\n")?;
    }
    Ok(())
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(0) => Err(Error::Parameter("--workers must be ≥ 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Parameter(e.to_string()))?
            .install(f),
    }
}

fn emit(cli: &Cli, bytes: &[u8], out: &mut dyn Write) -> Result<()> {
    match &cli.output {
        Some(p) => std::fs::write(p, bytes)?,
        None => out.write_all(bytes)?,
    }
    Ok(())
}

fn manifest_path(cli: &Cli) -> Option<PathBuf> {
    cli.manifest.clone().or_else(|| {
        cli.output.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    })
}

/// Re-runs a manifest's argument vector after checking its input hashes.
/// `--output` and `--workers` given to `replay` replace the recorded ones.
fn replay(
    path: &Path,
    output: Option<PathBuf>,
    workers: Option<usize>,
    clock: &dyn Clock,
    out: &mut dyn Write,
) -> Result<()> {
    let m: Manifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    m.verify_inputs()?;
    let mut argv: Vec<OsString> = vec!["stochmodels".into()];
    argv.extend(m.argv.iter().map(OsString::from));
    let expanded = expand_config(&argv)?;
    let mut cli = parse(&expanded).map_err(|e| Error::Parameter(format!("manifest argv does not parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::Parameter("a manifest cannot replay another replay".into()));
    }
    if output.is_some() {
        cli.output = output;
        cli.manifest = None;
    }
    if workers.is_some() {
        cli.workers = workers;
    }
    execute(cli, m.argv.clone(), clock, out)
}
