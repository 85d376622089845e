use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Cli;
use crate::error::{Error, Result};

/// Source of the manifest timestamp; nothing else reads the clock.
pub trait Clock {
    /// Seconds since the Unix epoch.
    fn now(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    }
}

pub struct FixedClock(pub u64);

impl Clock for FixedClock {
    fn now(&self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Arguments after the program name, exactly as given.
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    /// Parsed subcommand parameters after config merging.
    pub params: serde_json::Value,
    pub inputs: Vec<InputRecord>,
    pub output: Option<PathBuf>,
    pub output_sha256: String,
    pub timestamp_unix: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn hash_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

impl Manifest {
    pub fn build(cli: &Cli, argv: Vec<String>, output: &[u8], clock: &dyn Clock) -> Result<Self> {
        let config = argv
            .iter()
            .position(|a| a == "--config")
            .and_then(|i| argv.get(i + 1))
            .map(PathBuf::from);
        let inputs = cli
            .command
            .inputs()
            .into_iter()
            .chain(config)
            .map(|p| {
                Ok(InputRecord {
                    sha256: hash_file(&p)?,
                    path: p,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: cli.command.name().into(),
            argv,
            seed: cli.command.seed(),
            workers: cli.workers,
            params: serde_json::to_value(&cli.command)?,
            inputs,
            output: cli.output.clone(),
            output_sha256: sha256_hex(output),
            timestamp_unix: clock.now(),
        })
    }

    /// Fails if any recorded input has changed on disk.
    pub fn verify_inputs(&self) -> Result<()> {
        for rec in &self.inputs {
            let now = hash_file(&rec.path)?;
            if now != rec.sha256 {
                return Err(Error::Data(format!(
                    "input {} changed since the manifest was written",
                    rec.path.display()
                )));
            }
        }
        Ok(())
    }
}
