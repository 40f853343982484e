//! Config files, run directories, verification and sweeps.

mod config;
mod manifest;
mod rundir;
mod sweep;
mod tables;
mod verify;

pub use config::{parse_config, serialize_config, set_key, CONFIG_KEYS, REQUIRED_KEYS};
pub use manifest::{unix_now, RunManifest, RunStatus, MANIFEST_FILE};
pub use rundir::{
    checkpoint_name, flock_to_dir, flock_to_text, kernel_table, load_run_frames, read_flock, read_state,
    run_to_dir, stability_to_dir, state_to_text, write_kernel_table, FlockSummary, RunReport, FINAL_STATE_FILE,
    FLOCK_FILE, FLOCK_SUMMARY_FILE, STABILITY_FILE,
};
pub use tables::{
    diagnostics_header, fmt_f64, read_column, read_diagnostics_series, read_table, write_diagnostics, write_table,
    DIAGNOSTICS_FILE,
};
pub use sweep::{sweep, SweepRow, SWEEP_SUMMARY_FILE};
pub use verify::{
    homogeneity_gap, lphi_oracle_gap, nmp_baselines, nmp_field, nmp_floor, observed_orders, rk4_self_convergence,
    spatial_self_convergence, trig_polynomial, verify, verify_with, Bound, Check, Fault, NmpBaseline, VerifyLevel,
    VerifyReport, NMP_BASELINE_FRACTION, NMP_SAMPLES,
};
