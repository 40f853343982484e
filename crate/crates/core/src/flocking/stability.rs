use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{cauchy_series, flock_limit, FlockState};
use crate::diagnostics::amplitude;
use crate::dynamics::{preset_wavevectors, run_from, SimConfig, State};
use crate::error::{Error, Result};
use crate::torus_fields::{ScalarField, TorusGrid, VectorField};

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub eps: f64,
    /// `|r_∞ − ρ_∞|_∞`.
    pub dist_inf: f64,
    /// Amplitude of the perturbed initial velocity.
    pub a0: f64,
    /// `(|r₀ − ρ_∞|_∞ + Σ_j |r̃(t_{j+1}) − r̃(t_j)|_∞)/ε`, a bound on `dist_inf/ε`;
    /// `NaN` for `ε = 0`.
    pub c_eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityTable {
    /// Ordered as the input `ε` list.
    pub rows: Vec<StabilityRow>,
    /// Largest finite `c_eps`.
    pub c: f64,
    /// Least-squares slope of `ln dist` against `ln ε` over rows with both
    /// positive; `None` with fewer than two such rows.
    pub theta: Option<f64>,
}

impl StabilityTable {
    /// True when `dist_inf` does not decrease as `ε` grows.
    pub fn is_monotone(&self) -> bool {
        let mut rows: Vec<&StabilityRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));
        rows.windows(2).all(|w| w[1].dist_inf >= w[0].dist_inf)
    }

    /// True when every row satisfies `dist_inf ≤ C·ε`.
    pub fn within_linear_bound(&self) -> bool {
        self.rows.iter().all(|r| r.dist_inf <= self.c * r.eps || (r.eps == 0.0 && r.dist_inf == 0.0))
    }
}

fn normalized(f: ScalarField) -> ScalarField {
    let mean = f.mean();
    let centered = f.map(|v| v - mean);
    let sup = centered.max_abs();
    centered.scale(1.0 / sup)
}

/// Seeded mean-free perturbations `(η_ρ, η_u)` with `|η|_∞ = 1` built from
/// wavevectors `0 < |k| ≤ k0`.
pub fn perturbation_fields(grid: &std::sync::Arc<TorusGrid>, k0: usize, seed: u64) -> Result<(ScalarField, VectorField)> {
    let dim = grid.dim();
    let ks = preset_wavevectors(dim, k0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_sum = |trig: fn(f64) -> f64| {
        let terms: Vec<([i64; 2], f64, f64)> = ks
            .iter()
            .map(|&k| (k, rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.5..1.0)))
            .collect();
        normalized(ScalarField::from_fn(grid.clone(), move |x| {
            terms
                .iter()
                .map(|(k, ph, w)| w * trig(k[0] as f64 * x[0] + k[1] as f64 * x[1] + ph))
                .sum()
        }))
    };
    let eta_rho = random_sum(f64::cos);
    let eta_u = VectorField::new((0..dim).map(|_| random_sum(f64::sin)).collect())?;
    Ok((eta_rho, eta_u))
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let xm = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn one_member(base: &FlockState, eta: &(ScalarField, VectorField), eps: f64, cfg: &SimConfig) -> Result<StabilityRow> {
    let r0 = base.rho_inf.axpy(0.5 * eps, &eta.0)?;
    if r0.min() <= 0.0 {
        return Err(Error::NotFlocked(format!("perturbation eps = {eps} makes the density non-positive")));
    }
    let u0 = VectorField::new(
        eta.1
            .components()
            .iter()
            .zip(&base.u_bar)
            .map(|(c, m)| c.scale(0.5 * eps).map(|v| v + m))
            .collect(),
    )?;
    let initial = State::new(r0.clone(), u0, 0.0)?;
    let a0 = amplitude(&initial)?;
    let out = run_from(cfg, initial)?;
    if let Some(e) = out.abort {
        return Err(e);
    }
    let frames = &out.trajectory.frames;
    let limit = flock_limit(frames).map_err(|e| Error::NotFlocked(format!("eps = {eps}: {e}")))?;
    let dist_inf = limit.rho_inf.sub(&base.rho_inf)?.max_abs();
    let travelled: f64 = cauchy_series(frames, &limit.u_bar)?.iter().map(|p| p.1).sum();
    let start = r0.sub(&base.rho_inf)?.max_abs();
    let c_eps = if eps > 0.0 { (start + travelled) / eps } else { f64::NAN };
    Ok(StabilityRow {
        eps,
        dist_inf,
        a0,
        c_eps,
    })
}

/// Perturbs the flock `(ū, ρ_∞)` by `ε/2·(η_u, η_ρ)` for each `ε`, runs each
/// member to `cfg.t_end` in parallel and records how far the new limit moved.
pub fn stability_experiment(base: &FlockState, eps_list: &[f64], cfg: &SimConfig) -> Result<StabilityTable> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    if **base.rho_inf.grid() != *grid {
        return Err(Error::GridMismatch("base flock does not match the configured grid".into()));
    }
    if let Some(e) = eps_list.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(Error::ConfigMissing(format!("perturbation size {e} must be finite and >= 0")));
    }
    let eta = perturbation_fields(&grid, cfg.init.k0, cfg.seed)?;
    let rows = eps_list
        .par_iter()
        .map(|&eps| one_member(base, &eta, eps, cfg))
        .collect::<Result<Vec<_>>>()?;
    let c = rows.iter().map(|r| r.c_eps).filter(|c| c.is_finite()).fold(0.0, f64::max);
    let logs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.eps > 0.0 && r.dist_inf > 0.0)
        .map(|r| (r.eps.ln(), r.dist_inf.ln()))
        .collect();
    Ok(StabilityTable {
        rows,
        c,
        theta: least_squares_slope(&logs),
    })
}
