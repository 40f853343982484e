//! Traveling-wave analysis: the shifted density `ρ̃(x,t) = ρ(x + tū, t)`, the
//! limiting flock profile and distances to it, and the stability experiment.

mod stability;

pub use stability::{perturbation_fields, stability_experiment, StabilityRow, StabilityTable};

use crate::diagnostics::{amplitude, conserved, DiagnosticsRecord};
use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::torus_fields::{ScalarField, VectorField};

/// Relative growth tolerated between consecutive Cauchy-tail entries.
pub const TAIL_SLACK: f64 = 0.01;
/// Frame-to-frame changes of `ρ̃` below this fraction of `|ρ|_∞` count as
/// converged: they sit at the time integrator's transport accuracy.
pub const TAIL_FLOOR: f64 = 1e-10;
/// Required amplitude reduction `A(t_end)/A(0)` before a limit is accepted.
pub const FLOCK_AMPLITUDE_RATIO: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct FlockState {
    /// Limiting profile in shifted coordinates.
    pub rho_inf: ScalarField,
    pub u_bar: Vec<f64>,
    pub extracted_at: f64,
    /// Last entry of `tail`, or 0 when the tail is empty.
    pub cauchy_tail: f64,
    /// `(t_{j+1}, |ρ̃(t_{j+1}) − ρ̃(t_j)|_∞)` over the last quarter of the run.
    pub tail: Vec<(f64, f64)>,
}

pub fn shifted_density(s: &State, u_bar: &[f64]) -> ScalarField {
    let shift: Vec<f64> = u_bar.iter().map(|v| v * s.t).collect();
    s.rho.translate(&shift)
}

/// Sup-norm differences of `ρ̃` between consecutive frames.
pub fn cauchy_series(frames: &[State], u_bar: &[f64]) -> Result<Vec<(f64, f64)>> {
    let shifted: Vec<ScalarField> = frames.iter().map(|s| shifted_density(s, u_bar)).collect();
    shifted
        .windows(2)
        .zip(frames.iter().skip(1))
        .map(|(w, s)| Ok((s.t, w[1].sub(&w[0])?.max_abs())))
        .collect()
}

/// Final shifted frame with its tail, without any convergence checks.
pub fn limit_candidate(frames: &[State]) -> Result<FlockState> {
    let last = frames
        .last()
        .ok_or_else(|| Error::NotFlocked("empty trajectory".into()))?;
    let u_bar = conserved(last)?.mean_velocity;
    let t_first = frames[0].t;
    let quarter = t_first + 0.75 * (last.t - t_first);
    let start = frames.iter().position(|s| s.t >= quarter).unwrap_or(frames.len() - 1);
    let tail = cauchy_series(&frames[start..], &u_bar)?;
    Ok(FlockState {
        rho_inf: shifted_density(last, &u_bar),
        cauchy_tail: tail.last().map_or(0.0, |p| p.1),
        u_bar,
        extracted_at: last.t,
        tail,
    })
}

/// Extracts `ρ_∞` once the run has aligned: `A(t_end) < 10⁻⁶·A(0)` (or at
/// roundoff level) and the Cauchy tail over the last quarter decreasing up to
/// [`TAIL_SLACK`] and [`TAIL_FLOOR`].
pub fn flock_limit(frames: &[State]) -> Result<FlockState> {
    let candidate = limit_candidate(frames)?;
    let a0 = amplitude(&frames[0])?;
    let a_end = amplitude(frames.last().expect("non-empty"))?;
    let speed = candidate.u_bar.iter().map(|v| v * v).sum::<f64>().sqrt();
    let a_floor = 1e-12 * speed.max(1.0);
    if a_end > (FLOCK_AMPLITUDE_RATIO * a0).max(a_floor) {
        return Err(Error::NotFlocked(format!(
            "amplitude {a_end:e} at t = {} has not dropped below {:e} of A(0) = {a0:e}; run longer",
            candidate.extracted_at, FLOCK_AMPLITUDE_RATIO
        )));
    }
    let floor = TAIL_FLOOR * candidate.rho_inf.max_abs();
    for w in candidate.tail.windows(2) {
        if w[1].1 > w[0].1 * (1.0 + TAIL_SLACK) + floor {
            return Err(Error::NotFlocked(format!(
                "Cauchy tail grows from {:e} to {:e} at t = {}; run longer",
                w[0].1, w[1].1, w[1].0
            )));
        }
    }
    Ok(candidate)
}

fn gradient_sup(f: &ScalarField) -> Result<f64> {
    let dim = f.grid().dim();
    let grad = VectorField::new((0..dim).map(|a| f.derivative(a)).collect::<Result<Vec<_>>>()?)?;
    Ok(grad.max_norm())
}

/// `(|a − b|_∞, |a − b|_∞ + |∇a − ∇b|_∞)`.
pub fn field_distance(a: &ScalarField, b: &ScalarField) -> Result<(f64, f64)> {
    let diff = a.sub(b)?;
    let d_inf = diff.max_abs();
    Ok((d_inf, d_inf + gradient_sup(&diff)?))
}

/// Distance of `s.ρ` to the traveling wave `ρ_∞(x − tū)` at time `s.t`.
pub fn flock_distance(s: &State, f: &FlockState) -> Result<(f64, f64)> {
    let back: Vec<f64> = f.u_bar.iter().map(|v| -v * s.t).collect();
    field_distance(&s.rho, &f.rho_inf.translate(&back))
}

/// Writes flock distances into `records`, relative to the final frame.
pub(crate) fn fill_flock_distances(frames: &[State], records: &mut [DiagnosticsRecord]) -> Result<()> {
    let limit = limit_candidate(frames)?;
    for (s, r) in frames.iter().zip(records.iter_mut()) {
        let (d_inf, d_c1) = flock_distance(s, &limit)?;
        r.flock_dist_inf = d_inf;
        r.flock_dist_c1 = d_c1;
    }
    Ok(())
}

/// `∂_t ρ̃ = −(ũ − ū)·∇ρ̃ − ρ̃ ∇·ũ` evaluated from `s`, in shifted coordinates.
pub fn shifted_forcing(s: &State, u_bar: &[f64]) -> Result<ScalarField> {
    let shift: Vec<f64> = u_bar.iter().map(|v| v * s.t).collect();
    let rho = s.rho.translate(&shift);
    let u = s.u.translate(&shift);
    let mut out = rho.mul(&u.divergence()?)?;
    for (a, m) in u_bar.iter().enumerate() {
        let rel = u.component(a).map(|v| v - m);
        out = out.add(&rel.mul(&rho.derivative(a)?)?)?;
    }
    Ok(out.scale(-1.0))
}
