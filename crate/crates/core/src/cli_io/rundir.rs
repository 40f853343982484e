use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use super::manifest::{unix_now, RunManifest, RunStatus, MANIFEST_FILE};
use super::tables::{fmt_f64, read_diagnostics_series, write_diagnostics, write_table, DIAGNOSTICS_FILE};
use crate::diagnostics::{auto_decay_fit, DecayFit};
use crate::dynamics::{initial_state, run_observed, RunOutcome, SimConfig, State};
use crate::error::{Error, Result};
use crate::flocking::{flock_limit, stability_experiment, FlockState, StabilityTable};
use crate::fractional_kernel::KernelSpec;
use crate::torus_fields::{format_blocks, parse_blocks, ScalarField, TorusGrid, VectorField};

pub const FINAL_STATE_FILE: &str = "final_state.dat";
pub const FLOCK_FILE: &str = "flock.dat";
pub const FLOCK_SUMMARY_FILE: &str = "flock_summary.csv";
pub const STABILITY_FILE: &str = "stability.csv";

pub fn checkpoint_name(t: f64) -> String {
    format!("field_{t:.6}.dat")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn component_names(dim: usize, prefix: &str) -> Vec<String> {
    (1..=dim).map(|a| format!("{prefix}{a}")).collect()
}

/// FLOCKFIELD dump with blocks `rho`, `u1`[, `u2`].
pub fn state_to_text(s: &State) -> String {
    let names = component_names(s.dim(), "u");
    let mut blocks = vec![("rho", s.t, &s.rho)];
    blocks.extend(names.iter().map(String::as_str).zip(s.u.components()).map(|(n, c)| (n, s.t, c)));
    format_blocks(blocks)
}

fn find_block<'a>(blocks: &'a [crate::torus_fields::FieldBlock], name: &str, path: &Path) -> Result<&'a crate::torus_fields::FieldBlock> {
    blocks
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::Format(format!("{}: no block named {name:?}", path.display())))
}

pub fn read_state(path: &Path) -> Result<State> {
    let blocks = parse_blocks(&read_text(path)?)?;
    let rho = find_block(&blocks, "rho", path)?;
    let dim = rho.field.grid().dim();
    let u = component_names(dim, "u")
        .iter()
        .map(|n| find_block(&blocks, n, path).map(|b| b.field.clone()))
        .collect::<Result<Vec<_>>>()?;
    State::new(rho.field.clone(), VectorField::new(u)?, rho.t)
}

/// Result of [`run_to_dir`].
#[derive(Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub outcome: RunOutcome,
}

fn refuse_second_manifest(dir: &Path) -> Result<()> {
    let path = dir.join(MANIFEST_FILE);
    if path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::AlreadyExists, "output directory already holds a run manifest"),
        ));
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs `cfg` and writes `diagnostics.csv`, `field_<t>.dat` checkpoints every
/// `checkpoint_every` frames (and for the last good frame), `final_state.dat`
/// on completion, and the manifest. A numerical abort is reported in the
/// manifest and in `outcome.abort`, not as an `Err`.
pub fn run_to_dir(cfg: &SimConfig, dir: &Path) -> Result<RunReport> {
    cfg.validate()?;
    create_dir(dir)?;
    refuse_second_manifest(dir)?;
    let started = unix_now();
    let mut files = BTreeSet::new();
    let mut frame = 0usize;
    let mut last_written = None;
    let outcome = run_observed(cfg, initial_state(cfg)?, |s, _| {
        if frame.is_multiple_of(cfg.checkpoint_every) {
            let name = checkpoint_name(s.t);
            write_text(&dir.join(&name), &state_to_text(s))?;
            files.insert(name);
            last_written = Some(frame);
        }
        frame += 1;
        Ok(())
    })?;
    let traj = &outcome.trajectory;
    let last = traj.last();
    if last_written != Some(traj.frames.len() - 1) {
        let name = checkpoint_name(last.t);
        write_text(&dir.join(&name), &state_to_text(last))?;
        files.insert(name);
    }
    if outcome.abort.is_none() {
        write_text(&dir.join(FINAL_STATE_FILE), &state_to_text(last))?;
        files.insert(FINAL_STATE_FILE.into());
    }
    write_diagnostics(&dir.join(DIAGNOSTICS_FILE), &traj.records)?;
    files.insert(DIAGNOSTICS_FILE.into());

    let mut manifest = RunManifest::new(cfg, started);
    manifest.finished = unix_now();
    manifest.status = match &outcome.abort {
        None => RunStatus::Completed,
        Some(e) => RunStatus::Aborted(e.to_string()),
    };
    manifest.files = files.into_iter().collect();
    manifest.write_once(dir)?;
    Ok(RunReport {
        dir: dir.to_path_buf(),
        manifest,
        outcome,
    })
}

/// Checkpoints of a run directory in time order, followed by the final state
/// when it is later than the last checkpoint.
pub fn load_run_frames(dir: &Path) -> Result<Vec<State>> {
    let manifest = RunManifest::read(dir)?;
    let mut frames = manifest
        .files
        .iter()
        .filter(|f| f.starts_with("field_"))
        .map(|f| read_state(&dir.join(f)))
        .collect::<Result<Vec<_>>>()?;
    frames.sort_by(|a, b| a.t.total_cmp(&b.t));
    if manifest.files.iter().any(|f| f == FINAL_STATE_FILE) {
        let fin = read_state(&dir.join(FINAL_STATE_FILE))?;
        if frames.last().is_none_or(|l| fin.t > l.t) {
            frames.push(fin);
        }
    }
    if frames.is_empty() {
        return Err(Error::Format(format!("{}: no checkpoints listed in the manifest", dir.display())));
    }
    Ok(frames)
}

/// Writes a manifest describing outputs derived from `cfg` unless `dir`
/// already has one.
pub(crate) fn ensure_manifest(dir: &Path, cfg: &SimConfig, started: f64, files: &[&str]) -> Result<()> {
    if dir.join(MANIFEST_FILE).exists() {
        return Ok(());
    }
    let mut m = RunManifest::new(cfg, started);
    m.finished = unix_now();
    m.files = files.iter().map(|s| s.to_string()).collect();
    m.write_once(dir)
}

#[derive(Debug, Clone)]
pub struct FlockSummary {
    pub flock: FlockState,
    /// Decay fit of the recorded amplitude, when one exists.
    pub delta: Option<DecayFit>,
}

/// FLOCKFIELD dump of a flock state: `rho_inf` and the constant velocity
/// components `ubar1`[, `ubar2`].
pub fn flock_to_text(f: &FlockState) -> String {
    let grid = f.rho_inf.grid();
    let ubar: Vec<ScalarField> = f.u_bar.iter().map(|&v| ScalarField::constant(grid.clone(), v)).collect();
    let names = component_names(f.u_bar.len(), "ubar");
    let mut blocks = vec![("rho_inf", f.extracted_at, &f.rho_inf)];
    blocks.extend(names.iter().map(String::as_str).zip(&ubar).map(|(n, c)| (n, f.extracted_at, c)));
    format_blocks(blocks)
}

pub fn read_flock(path: &Path) -> Result<FlockState> {
    let blocks = parse_blocks(&read_text(path)?)?;
    let rho = find_block(&blocks, "rho_inf", path)?;
    let dim = rho.field.grid().dim();
    let u_bar = component_names(dim, "ubar")
        .iter()
        .map(|n| find_block(&blocks, n, path).map(|b| b.field.mean()))
        .collect::<Result<Vec<_>>>()?;
    Ok(FlockState {
        rho_inf: rho.field.clone(),
        u_bar,
        extracted_at: rho.t,
        cauchy_tail: 0.0,
        tail: Vec::new(),
    })
}

/// Extracts the flock of the run in `run_dir`; writes `flock.dat` and
/// `flock_summary.csv` to `out`.
pub fn flock_to_dir(run_dir: &Path, out: &Path) -> Result<FlockSummary> {
    let started = unix_now();
    let cfg = RunManifest::read(run_dir)?.config;
    let frames = load_run_frames(run_dir)?;
    let flock = flock_limit(&frames)?;
    let delta = auto_decay_fit(&read_diagnostics_series(&run_dir.join(DIAGNOSTICS_FILE), "amplitude")?).ok();

    create_dir(out)?;
    write_text(&out.join(FLOCK_FILE), &flock_to_text(&flock))?;
    let mut header = component_names(flock.u_bar.len(), "ubar");
    header.extend(["cauchy_tail", "fitted_delta", "fit_t0", "fit_t1", "extracted_at"].map(String::from));
    let mut row: Vec<String> = flock.u_bar.iter().map(|&v| fmt_f64(v)).collect();
    row.push(fmt_f64(flock.cauchy_tail));
    match &delta {
        Some(d) => row.extend([d.rate, d.window.0, d.window.1].map(fmt_f64)),
        None => row.extend([f64::NAN; 3].map(fmt_f64)),
    }
    row.push(fmt_f64(flock.extracted_at));
    write_table(&out.join(FLOCK_SUMMARY_FILE), &header, &[row])?;
    ensure_manifest(out, &cfg, started, &[FLOCK_FILE, FLOCK_SUMMARY_FILE])?;
    Ok(FlockSummary { flock, delta })
}

/// Runs the stability experiment around the flock stored at `base` and
/// writes `stability.csv` to `out`.
pub fn stability_to_dir(base: &Path, eps: &[f64], cfg: &SimConfig, out: &Path) -> Result<StabilityTable> {
    let started = unix_now();
    let flock = read_flock(base)?;
    let table = stability_experiment(&flock, eps, cfg)?;
    create_dir(out)?;
    let header = ["eps", "dist_inf", "A0", "fitted_theta", "c_bound"].map(String::from);
    let theta = table.theta.unwrap_or(f64::NAN);
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| [r.eps, r.dist_inf, r.a0, theta, table.c].map(fmt_f64).to_vec())
        .collect();
    write_table(&out.join(STABILITY_FILE), &header, &rows)?;
    ensure_manifest(out, cfg, started, &[STABILITY_FILE])?;
    Ok(table)
}

/// Distinct `(|k|, λ(k))` pairs of the multiplier on an `N`-point grid,
/// ordered by `|k|`.
pub fn kernel_table(spec: &KernelSpec, n: usize) -> Result<Vec<(f64, f64)>> {
    let grid = TorusGrid::new(spec.dim(), n)?;
    let table = spec.multiplier_table(&grid)?;
    let mut pairs: Vec<(f64, f64)> = (0..grid.len()).map(|i| (grid.wavevector_norm(i), table[i])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.dedup_by(|a, b| a.0 == b.0);
    Ok(pairs)
}

pub fn write_kernel_table(path: &Path, pairs: &[(f64, f64)]) -> Result<()> {
    let rows: Vec<Vec<String>> = pairs.iter().map(|&(k, l)| vec![fmt_f64(k), fmt_f64(l)]).collect();
    write_table(path, &["k_norm".into(), "lambda".into()], &rows)
}
