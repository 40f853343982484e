use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use super::config::{parse_config, serialize_config};
use crate::dynamics::{SimConfig, RNG_ALGORITHM};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";
const CONFIG_MARKER: &str = "[config]";

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// Numerical abort; the message names the failure.
    Aborted(String),
}

impl RunStatus {
    fn encode(&self) -> String {
        match self {
            RunStatus::Completed => "completed".into(),
            RunStatus::Aborted(msg) => format!("aborted: {msg}"),
        }
    }

    fn decode(s: &str) -> Self {
        match s.strip_prefix("aborted: ") {
            Some(msg) => RunStatus::Aborted(msg.to_string()),
            None => RunStatus::Completed,
        }
    }
}

/// Provenance record of one output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: SimConfig,
    pub version: String,
    pub seed: u64,
    pub rng: String,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub status: RunStatus,
    pub files: Vec<String>,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(config: &SimConfig, started: f64) -> Self {
        RunManifest {
            seed: config.seed,
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng: RNG_ALGORITHM.to_string(),
            started,
            finished: started,
            status: RunStatus::Completed,
            files: Vec::new(),
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "version = {}\nrng = {}\nseed = {}\nstarted_unix = {}\nfinished_unix = {}\nstatus = {}\nfiles = {}\n{CONFIG_MARKER}\n{}",
            self.version,
            self.rng,
            self.seed,
            self.started,
            self.finished,
            self.status.encode(),
            self.files.join(","),
            serialize_config(&self.config),
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (head, config) = text
            .split_once(&format!("{CONFIG_MARKER}\n"))
            .ok_or_else(|| Error::Format(format!("manifest has no {CONFIG_MARKER} section")))?;
        let config = parse_config(config)?;
        let mut m = RunManifest::new(&config, 0.0);
        for line in head.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| Error::Format(format!("bad manifest line {line:?}")))?;
            let num = |v: &str| v.parse::<f64>().map_err(|e| Error::Format(format!("{k}: {e}")));
            match k {
                "version" => m.version = v.to_string(),
                "rng" => m.rng = v.to_string(),
                "seed" => m.seed = v.parse().map_err(|e| Error::Format(format!("seed: {e}")))?,
                "started_unix" => m.started = num(v)?,
                "finished_unix" => m.finished = num(v)?,
                "status" => m.status = RunStatus::decode(v),
                "files" => m.files = v.split(',').filter(|s| !s.is_empty()).map(String::from).collect(),
                _ => return Err(Error::Format(format!("unknown manifest key {k:?}"))),
            }
        }
        Ok(m)
    }

    /// Writes `dir/manifest.txt`, refusing to replace an existing one.
    pub fn write_once(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        file.write_all(self.to_text().as_bytes())
            .map_err(|e| Error::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::parse(&text)
    }
}
