use super::{initial_state, Dynamics, SimConfig, State};
use crate::diagnostics::{DiagnosticsRecord, Monitor};
use crate::error::{Error, Result};
use crate::flocking;

/// Output frames and their diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SimConfig,
    pub frames: Vec<State>,
    pub records: Vec<DiagnosticsRecord>,
    pub steps: usize,
    /// Largest single-step increase of any `max u_i` or decrease of any
    /// `min u_i`.
    pub max_principle_excess: f64,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.frames.last().expect("a trajectory holds at least the initial frame")
    }

    /// `(t, f(record))` pairs.
    pub fn series(&self, f: impl Fn(&DiagnosticsRecord) -> f64) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, f(r))).collect()
    }
}

/// A finished or aborted run. `abort` holds the numerical failure, in which
/// case the trajectory ends at the last good frame.
#[derive(Debug)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub abort: Option<Error>,
}

pub fn run(cfg: &SimConfig) -> Result<RunOutcome> {
    run_from(cfg, initial_state(cfg)?)
}

fn frame_count(span: f64, cadence: f64) -> usize {
    let r = span / cadence;
    if (r - r.round()).abs() < 1e-9 {
        r.round() as usize
    } else {
        r.ceil() as usize
    }
}

fn component_extrema(s: &State) -> Vec<(f64, f64)> {
    s.u.components().iter().map(|c| (c.min(), c.max())).collect()
}

/// Integrates `initial` from its own time to `cfg.t_end`, recording every
/// `cfg.output_cadence`.
pub fn run_from(cfg: &SimConfig, initial: State) -> Result<RunOutcome> {
    run_observed(cfg, initial, |_, _| Ok(()))
}

/// [`run_from`], handing every output frame to `observer` as soon as it is
/// recorded (before flock distances are known).
pub fn run_observed(
    cfg: &SimConfig,
    initial: State,
    mut observer: impl FnMut(&State, &DiagnosticsRecord) -> Result<()>,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let model = Dynamics::from_config(cfg)?;
    if **initial.rho.grid() != **model.grid() {
        return Err(Error::GridMismatch("initial state does not match the configured grid".into()));
    }
    let monitor = Monitor::new(model.clone(), cfg.gamma);
    let t0 = initial.t;
    let outputs = frame_count((cfg.t_end - t0).max(0.0), cfg.output_cadence);

    let mut traj = Trajectory {
        config: cfg.clone(),
        records: vec![monitor.record(&initial)?],
        frames: vec![initial.clone()],
        steps: 0,
        max_principle_excess: 0.0,
    };
    observer(&initial, &traj.records[0])?;
    let mut s = initial;
    let mut abort = None;

    'frames: for j in 1..=outputs {
        let target = (t0 + j as f64 * cfg.output_cadence).min(cfg.t_end);
        while s.t < target {
            let remaining = target - s.t;
            let limit = model.cfl_dt(&s, cfg.cfl_advect, cfg.cfl_diffuse);
            let last = limit >= remaining;
            let dt = if last { remaining } else { limit };
            match model.step(&s, dt) {
                Ok(mut next) => {
                    if last {
                        next.t = target;
                    }
                    for ((lo0, hi0), (lo1, hi1)) in component_extrema(&s).into_iter().zip(component_extrema(&next)) {
                        let excess = (hi1 - hi0).max(lo0 - lo1);
                        traj.max_principle_excess = traj.max_principle_excess.max(excess);
                    }
                    s = next;
                    traj.steps += 1;
                }
                Err(e) if e.is_numerical_abort() => {
                    abort = Some(e);
                    break 'frames;
                }
                Err(e) => return Err(e),
            }
        }
        let record = monitor.record(&s)?;
        observer(&s, &record)?;
        traj.records.push(record);
        traj.frames.push(s.clone());
    }

    flocking::fill_flock_distances(&traj.frames, &mut traj.records)?;
    Ok(RunOutcome { trajectory: traj, abort })
}
