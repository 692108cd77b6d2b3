//! Argument and config-file parsing shared by the subcommands.

use std::ops::RangeInclusive;
use std::path::Path;

use anyhow::{bail, Context, Result};
use insectbench_core::navigator::{PathSpec, SessionConfig};
use insectbench_core::sim::SimConfig;
use serde_json::Value;

/// Top-level keys that only a session config has.
const SESSION_KEYS: [&str; 9] = [
    "sim",
    "link",
    "policy",
    "amplitude_v",
    "stimulus_duration_s",
    "max_duration_s",
    "stop_on_completion",
    "completion_radius_mm",
    "completion_progress",
];

/// Parses `0..99` (both ends included), `3..=7`, `5` or `1,4,9`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let text = text.trim();
    let range = |a: &str, b: &str| -> Result<RangeInclusive<u64>, String> {
        let a: u64 = a.trim().parse().map_err(|e| format!("bad seed {a:?}: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("bad seed {b:?}: {e}"))?;
        if b < a {
            return Err(format!("empty seed range {text}"));
        }
        Ok(a..=b)
    };
    if let Some((a, b)) = text.split_once("..=") {
        return Ok(range(a, b)?.collect());
    }
    if let Some((a, b)) = text.split_once("..") {
        return Ok(range(a, b)?.collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|e| format!("bad seed {s:?}: {e}")))
        .collect()
}

/// A session config, or a bare simulator config that gets session defaults.
pub fn session_config_from_json(text: &str) -> Result<SessionConfig> {
    let value: Value = serde_json::from_str(text).context("config is not JSON")?;
    let Some(obj) = value.as_object() else {
        bail!("config must be a JSON object");
    };
    if obj.keys().any(|k| SESSION_KEYS.contains(&k.as_str())) {
        let cfg = SessionConfig::from_json(text)?;
        cfg.sim.validate()?;
        Ok(cfg)
    } else {
        Ok(SessionConfig {
            sim: SimConfig::from_json(text)?,
            ..SessionConfig::default()
        })
    }
}

pub fn load_session_config(path: Option<&Path>) -> Result<SessionConfig> {
    match path {
        Some(p) => session_config_from_json(&read(p)?).with_context(|| format!("in {}", p.display())),
        None => Ok(SessionConfig::default()),
    }
}

pub fn load_sim_config(path: Option<&Path>) -> Result<SimConfig> {
    match path {
        Some(p) => SimConfig::from_json(&read(p)?).with_context(|| format!("in {}", p.display())),
        None => Ok(SimConfig::default()),
    }
}

pub fn load_path(path: Option<&Path>) -> Result<PathSpec> {
    match path {
        Some(p) => PathSpec::from_json(&read(p)?).with_context(|| format!("in {}", p.display())),
        None => Ok(PathSpec::s_course()),
    }
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes to `path`, or stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}
