use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{set_key, CONFIG_KEYS};
use super::manifest::unix_now;
use super::rundir::{ensure_manifest, run_to_dir, RunReport};
use super::tables::{fmt_f64, write_table};
use crate::diagnostics::auto_decay_fit;
use crate::dynamics::SimConfig;
use crate::error::{Error, Result};
use crate::flocking::limit_candidate;

pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub run_dir: PathBuf,
    pub final_amplitude: f64,
    /// Alignment rate fitted to the amplitude series.
    pub fitted_delta: f64,
    pub cauchy_tail: f64,
    /// `flock_dist_inf` at the start of the last quarter of the run.
    pub flock_dist: f64,
    /// `ok`, `aborted: …` or `error: …`.
    pub exit_status: String,
}

impl SweepRow {
    fn failed(value: &str, run_dir: PathBuf, status: String) -> Self {
        SweepRow {
            value: value.to_string(),
            run_dir,
            final_amplitude: f64::NAN,
            fitted_delta: f64::NAN,
            cauchy_tail: f64::NAN,
            flock_dist: f64::NAN,
            exit_status: status,
        }
    }
}

fn dir_name(index: usize, key: &str, value: &str) -> String {
    let clean: String = format!("{key}={value}")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-=".contains(c) { c } else { '_' })
        .collect();
    format!("run_{index:03}_{clean}")
}

fn summarize(value: &str, report: &RunReport) -> SweepRow {
    let traj = &report.outcome.trajectory;
    let amp = traj.series(|r| r.amplitude);
    let t0 = traj.frames[0].t;
    let quarter = t0 + 0.75 * (traj.last().t - t0);
    let status = match &report.outcome.abort {
        None => "ok".to_string(),
        Some(e) => format!("aborted: {e}"),
    };
    SweepRow {
        value: value.to_string(),
        run_dir: report.dir.clone(),
        final_amplitude: traj.records.last().map_or(f64::NAN, |r| r.amplitude),
        fitted_delta: auto_decay_fit(&amp).map_or(f64::NAN, |f| f.rate),
        cauchy_tail: limit_candidate(&traj.frames).map_or(f64::NAN, |f| f.cauchy_tail),
        flock_dist: traj
            .records
            .iter()
            .find(|r| r.t >= quarter)
            .map_or(f64::NAN, |r| r.flock_dist_inf),
        exit_status: status,
    }
}

/// One run per value of `key`, each in its own directory under `out`, on a
/// pool of `threads` workers (rayon's default when `None`). Every value is
/// checked before the first run starts; failures of single runs are recorded
/// in their row.
pub fn sweep(template: &SimConfig, key: &str, values: &[String], threads: Option<usize>, out: &Path) -> Result<Vec<SweepRow>> {
    if !CONFIG_KEYS.contains(&key) {
        return Err(Error::Sweep(format!("unknown config key {key:?}")));
    }
    if values.is_empty() {
        return Err(Error::Sweep(format!("no values given for {key}")));
    }
    let configs = values
        .iter()
        .map(|v| {
            let mut cfg = template.clone();
            set_key(&mut cfg, key, v).map_err(|msg| Error::Sweep(format!("{key} = {v}: {msg}")))?;
            cfg.validate()
                .map_err(|e| Error::Sweep(format!("{key} = {v}: {e}")))?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let started = unix_now();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Sweep(format!("worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        configs
            .par_iter()
            .zip(values)
            .enumerate()
            .map(|(i, (cfg, v))| {
                let dir = out.join(dir_name(i, key, v));
                match run_to_dir(cfg, &dir) {
                    Ok(report) => summarize(v, &report),
                    Err(e) => SweepRow::failed(v, dir, format!("error: {e}")),
                }
            })
            .collect()
    });

    let header = [
        "value",
        "run_dir",
        "final_amplitude",
        "fitted_delta",
        "cauchy_tail",
        "flock_dist",
        "exit_status",
    ]
    .map(String::from);
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.value.clone(),
                r.run_dir.display().to_string(),
                fmt_f64(r.final_amplitude),
                fmt_f64(r.fitted_delta),
                fmt_f64(r.cauchy_tail),
                fmt_f64(r.flock_dist),
                r.exit_status.clone(),
            ]
        })
        .collect();
    write_table(&out.join(SWEEP_SUMMARY_FILE), &header, &table)?;
    ensure_manifest(out, template, started, &[SWEEP_SUMMARY_FILE])?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Preset;

    fn template() -> SimConfig {
        let mut cfg = SimConfig::new(1, 32, 1.0, 0.5, Preset::PerturbedFlock);
        cfg.init.k0 = 2;
        cfg
    }

    #[test]
    fn alpha_axis_gives_one_directory_per_value() {
        let dir = tempfile::tempdir().unwrap();
        let values: Vec<String> = ["0.5", "1.0", "1.5"].map(String::from).to_vec();
        let rows = sweep(&template(), "alpha", &values, Some(2), dir.path()).unwrap();
        assert_eq!(rows.len(), 3);
        for (r, v) in rows.iter().zip(&values) {
            assert_eq!(&r.value, v);
            assert_eq!(r.exit_status, "ok");
            assert!(r.run_dir.join("manifest.txt").exists());
        }
        let (_, table) = super::super::tables::read_table(&dir.path().join(SWEEP_SUMMARY_FILE)).unwrap();
        assert_eq!(table.len(), 3);
        assert!(dir.path().join("manifest.txt").exists());
    }

    #[test]
    fn rejected_before_any_run() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("s");
        assert!(matches!(sweep(&template(), "alpha", &[], None, &out), Err(Error::Sweep(_))));
        assert!(matches!(sweep(&template(), "colour", &["1".into()], None, &out), Err(Error::Sweep(_))));
        let bad = ["1.0".to_string(), "3.0".to_string()];
        assert!(matches!(sweep(&template(), "alpha", &bad, None, &out), Err(Error::Sweep(_))));
        assert!(!out.exists());
    }

    #[test]
    fn directory_names_are_sanitized() {
        assert_eq!(dir_name(4, "init.eps", "1e-3"), "run_004_init.eps=1e-3");
        assert_eq!(dir_name(0, "preset", "a/b c"), "run_000_preset=a_b_c");
    }
}
