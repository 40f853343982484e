use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::holder::{holder_seminorm, HolderOrder};
use crate::error::{Error, Result};
use crate::fractional_kernel::{DissipationQuadrature, KernelSpec, ShellRule};
use crate::torus_fields::{GridShift, ScalarField, VectorField};

/// Relative size below which `|δ³_h u(x)|` counts as degenerate.
pub const NMP_SKIP_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmpCertificate {
    /// Smallest ratio over the evaluated samples: an empirical `c₀`.
    pub min_ratio: f64,
    pub evaluated: usize,
    pub skipped: usize,
    /// `|δ³_h u(x)|` threshold used at `|h| = 1`, i.e. `NMP_SKIP_RATIO·[u]₂`.
    pub skip_threshold: f64,
}

/// `D_α(δ³_h u)(x)·[u]₂^α·|h|^{3α} / |δ³_h u(x)|^{2+α}` at node `idx`, or
/// `None` when `|δ³_h u(x)| < 10⁻⁸·[u]₂|h|²`.
pub fn nmp_ratio(
    quad: &DissipationQuadrature,
    alpha: f64,
    u: &VectorField,
    u2: f64,
    idx: usize,
    h: &GridShift,
) -> Result<Option<f64>> {
    let w: Vec<ScalarField> = u
        .components()
        .iter()
        .map(|c| c.finite_difference(h, 3))
        .collect::<Result<_>>()?;
    let len = h.as_length();
    let size = w.iter().map(|c| c.values()[idx].powi(2)).sum::<f64>().sqrt();
    if size == 0.0 || size < NMP_SKIP_RATIO * u2 * len * len {
        return Ok(None);
    }
    let dim = u.dim();
    let grads: Vec<Vec<ScalarField>> = w
        .iter()
        .map(|c| (0..dim).map(|a| c.derivative(a)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let refs: Vec<&ScalarField> = w.iter().collect();
    let d = quad.evaluate_with_gradients(&refs, &grads, idx);
    Ok(Some(d * u2.powf(alpha) * len.powf(3.0 * alpha) / size.powf(2.0 + alpha)))
}

/// Minimum of [`nmp_ratio`] over `sample_count` seeded random `(x, h)`
/// pairs with `0 < |h| ≤ π`.
pub fn nmp_certificate(u: &VectorField, spec: &KernelSpec, sample_count: usize, seed: u64) -> Result<NmpCertificate> {
    let grid = u.grid();
    let quad = DissipationQuadrature::new(spec, grid, ShellRule::TaylorProxy)?;
    let u2 = holder_seminorm(u, HolderOrder::Two);
    let n = grid.points_per_dim() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    let (mut evaluated, mut skipped) = (0, 0);
    for _ in 0..sample_count {
        let idx = rng.gen_range(0..grid.len());
        let shift = loop {
            let offsets: Vec<i64> = (0..grid.dim()).map(|_| rng.gen_range(-n / 2 + 1..=n / 2)).collect();
            if let Ok(h) = GridShift::new(grid, &offsets) {
                if h.as_length() <= PI {
                    break h;
                }
            }
        };
        match nmp_ratio(&quad, spec.alpha(), u, u2, idx, &shift)? {
            Some(r) => {
                evaluated += 1;
                min_ratio = min_ratio.min(r);
            }
            None => skipped += 1,
        }
    }
    if evaluated == 0 {
        return Err(Error::AllSamplesSkipped);
    }
    Ok(NmpCertificate {
        min_ratio,
        evaluated,
        skipped,
        skip_threshold: NMP_SKIP_RATIO * u2,
    })
}
