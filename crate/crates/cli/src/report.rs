use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tarifflab::instance::Instance;
use tarifflab::rational::parse_rational;
use tarifflab::Rational;

use crate::Config;

pub enum Outcome {
    Pass,
    Fail,
    ScaleLimited,
}

/// Bad flags or input files.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<tarifflab::Error>() {
        Some(tarifflab::Error::Scale { .. }) => 3,
        _ => 2,
    }
}

pub fn require_seed(config: &Config) -> Result<u64> {
    config.seed.ok_or_else(|| usage("--seed (or TARIFFLAB_SEED) is required"))
}

pub fn epsilon(config: &Config) -> Result<Rational> {
    parse_rational(&config.epsilon).map_err(|e| usage(format!("--epsilon: {e}")))
}

pub fn read_instance(path: &Path) -> Result<(Instance, Vec<u8>)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| usage(format!("{}: not UTF-8", path.display())))?;
    let inst = Instance::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok((inst, bytes))
}

/// SHA-256 over the command, its settings and the bytes of every input.
pub fn config_hash<T: Serialize>(command: &str, settings: &T, inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(settings).expect("settings serialize"));
    for input in inputs {
        h.update([0]);
        h.update((input.len() as u64).to_le_bytes());
        h.update(input);
    }
    format!("{:x}", h.finalize())
}

/// Writes to `--out` or standard output.
pub fn emit(config: &Config, body: &str) -> Result<()> {
    match &config.out {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

pub fn to_csv<I, R>(rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn check_trials(config: &Config) -> Result<()> {
    if config.trials == 0 {
        bail!(UsageError("--trials must be positive".into()));
    }
    Ok(())
}
