use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::nmp_certificate;
use crate::dynamics::{initial_state, preset_wavevectors, run, Dynamics, Preset, ProbeKind, SimConfig, State};
use crate::error::{Error, Result};
use crate::flocking::perturbation_fields;
use crate::fractional_kernel::{commutator, direct_lphi_at, KernelSpec};
use crate::torus_fields::{transform_backward, transform_forward, ScalarField, TorusGrid, VectorField, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyLevel {
    /// Kernel, multiplier and transform oracles.
    Fast,
    /// Adds the e-law, maximum-principle and convergence studies.
    Full,
}

/// Deliberate corruption used to check that `verify` can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Scales one entry of the multiplier table by `1 + 10⁻⁶`.
    CorruptMultiplierTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub bound: Bound,
}

impl Check {
    fn at_most(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Check {
            name,
            measured,
            tolerance,
            bound: Bound::AtMost,
        }
    }

    fn at_least(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Check {
            name,
            measured,
            tolerance,
            bound: Bound::AtLeast,
        }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.measured <= self.tolerance,
            Bound::AtLeast => self.measured >= self.tolerance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub level: VerifyLevel,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed()).collect()
    }

    /// One line per check: status, name, measured value and tolerance.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let op = match c.bound {
                Bound::AtMost => "<=",
                Bound::AtLeast => ">=",
            };
            let _ = writeln!(
                out,
                "{} {:<28} measured={:e} required {op} {:e}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance
            );
        }
        let _ = writeln!(
            out,
            "{} of {} checks passed",
            self.checks.len() - self.failures().len(),
            self.checks.len()
        );
        out
    }
}

/// `f(x) = Σ_k a_k cos(k·x + θ_k)` over `0 < |k| ≤ kmax` (half-plane set),
/// with seeded amplitudes in `[0.5, 1)` and phases.
pub fn trig_polynomial(dim: usize, kmax: usize, seed: u64) -> impl Fn([f64; MAX_DIM]) -> f64 + Clone {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<([f64; 2], f64, f64)> = preset_wavevectors(dim, kmax)
        .into_iter()
        .map(|k| ([k[0] as f64, k[1] as f64], rng.gen_range(0.5..1.0), rng.gen_range(0.0..2.0 * PI)))
        .collect();
    move |x| {
        terms
            .iter()
            .map(|(k, a, th)| a * (k[0] * x[0] + k[1] * x[1] + th).cos())
            .sum()
    }
}

/// `max |spectral − direct| / max |spectral|` over `nodes` evenly spaced
/// grid nodes, for a degree-5 trigonometric polynomial.
pub fn lphi_oracle_gap(dim: usize, n: usize, alpha: f64, nodes: usize) -> Result<f64> {
    let grid = TorusGrid::new(dim, n)?;
    let spec = KernelSpec::new(alpha, dim)?;
    let f = trig_polynomial(dim, 5, 7);
    let spectral = spec.operator(&grid)?.apply(&ScalarField::from_fn(grid.clone(), f.clone()))?;
    let stride = (grid.len() / nodes.max(1)).max(1);
    let mut gap = 0.0f64;
    for idx in (0..grid.len()).step_by(stride).take(nodes) {
        let direct = direct_lphi_at(f.clone(), grid.node(idx), &spec)?;
        gap = gap.max((spectral.values()[idx] - direct).abs());
    }
    Ok(gap / spectral.max_abs())
}

/// Worst `|λ(2k)/λ(k) − 2^α|` over wavevectors with `2k` inside the band.
pub fn homogeneity_gap(table: &[f64], grid: &TorusGrid, alpha: f64) -> f64 {
    let half = grid.points_per_dim() as i64 / 2;
    let target = 2f64.powf(alpha);
    let mut worst = 0.0f64;
    for idx in 1..grid.len() {
        let k = grid.wavevector(idx);
        if k.iter().any(|c| 2 * c.abs() >= half) {
            continue;
        }
        let mut multi = [0usize; MAX_DIM];
        for a in 0..grid.dim() {
            multi[a] = (2 * k[a]).rem_euclid(grid.points_per_dim() as i64) as usize;
        }
        let ratio = table[grid.flat_index(multi)] / table[idx];
        worst = worst.max((ratio - target).abs());
    }
    worst
}

fn max_state_gap(a: &State, b: &State) -> Result<f64> {
    let mut gap = a.rho.sub(&b.rho)?.max_abs();
    for (x, y) in a.u.components().iter().zip(b.u.components()) {
        gap = gap.max(x.sub(y)?.max_abs());
    }
    Ok(gap)
}

/// Errors at `t = 1` of fixed-step RK4 with `steps[i]` steps, measured
/// against a run with `8·max(steps)` steps.
pub fn rk4_self_convergence(cfg: &SimConfig, steps: &[usize]) -> Result<Vec<f64>> {
    let model = Dynamics::from_config(cfg)?;
    let s0 = initial_state(cfg)?;
    let fine = 8 * steps.iter().copied().max().unwrap_or(1);
    let reference = model.integrate_fixed(&s0, 1.0 / fine as f64, fine)?;
    steps
        .iter()
        .map(|&m| max_state_gap(&model.integrate_fixed(&s0, 1.0 / m as f64, m)?, &reference))
        .collect()
}

/// `max` node gap at `t = steps·dt` between the runs on `N = ns[i]` and
/// `ns[i+1]`, compared on the coarse nodes. `ns` must double at each entry.
pub fn spatial_self_convergence(cfg: &SimConfig, ns: &[usize], dt: f64, steps: usize) -> Result<Vec<f64>> {
    let finals = ns
        .iter()
        .map(|&n| {
            let mut c = cfg.clone();
            c.n = n;
            Dynamics::from_config(&c)?.integrate_fixed(&initial_state(&c)?, dt, steps)
        })
        .collect::<Result<Vec<_>>>()?;
    finals
        .windows(2)
        .map(|w| {
            let (coarse, fine) = (&w[0], &w[1]);
            let (gc, gf) = (coarse.rho.grid(), fine.rho.grid());
            if gf.points_per_dim() != 2 * gc.points_per_dim() {
                return Err(Error::InvalidGrid("resolutions must double".into()));
            }
            let mut gap = 0.0f64;
            for idx in 0..gc.len() {
                let m = gc.multi_index(idx);
                let j = gf.flat_index([2 * m[0], 2 * m[1]]);
                gap = gap.max((coarse.rho.values()[idx] - fine.rho.values()[j]).abs());
                for (a, b) in coarse.u.components().iter().zip(fine.u.components()) {
                    gap = gap.max((a.values()[idx] - b.values()[j]).abs());
                }
            }
            Ok(gap)
        })
        .collect()
}

/// `log₂` of successive error ratios.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Frozen maximum-principle floor of one seeded field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmpBaseline {
    pub dim: usize,
    pub n: usize,
    pub alpha: f64,
    pub seed: u64,
    pub min_ratio: f64,
}

/// Fraction of a frozen floor that a later measurement must keep.
pub const NMP_BASELINE_FRACTION: f64 = 0.5;
/// Samples per field in the baseline suite.
pub const NMP_SAMPLES: usize = 200;

const NMP_BASELINES: &str = include_str!("../../data/nmp_baselines.csv");

pub fn nmp_baselines() -> Vec<NmpBaseline> {
    NMP_BASELINES
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            NmpBaseline {
                dim: f[0].parse().expect("baseline dim"),
                n: f[1].parse().expect("baseline n"),
                alpha: f[2].parse().expect("baseline alpha"),
                seed: f[3].parse().expect("baseline seed"),
                min_ratio: f[4].parse().expect("baseline ratio"),
            }
        })
        .collect()
}

/// Velocity field number `seed` of the baseline suite.
pub fn nmp_field(dim: usize, n: usize, seed: u64) -> Result<VectorField> {
    let grid = TorusGrid::new(dim, n)?;
    Ok(perturbation_fields(&grid, 4, 1000 + seed)?.1)
}

/// Certificate floor of baseline field `seed`.
pub fn nmp_floor(dim: usize, n: usize, alpha: f64, seed: u64) -> Result<f64> {
    let spec = KernelSpec::new(alpha, dim)?;
    Ok(nmp_certificate(&nmp_field(dim, n, seed)?, &spec, NMP_SAMPLES, seed)?.min_ratio)
}

fn fast_checks(fault: Fault, checks: &mut Vec<Check>) -> Result<()> {
    let spec = KernelSpec::new(1.0, 1)?;
    checks.push(Check::at_most("phi_min_closed_form", (spec.phi_min() - 0.25).abs(), 1e-8));

    let direct = direct_lphi_at(|x| x[0].cos(), [0.0; MAX_DIM], &spec)?;
    checks.push(Check::at_most("multiplier_vs_quadrature", (spec.multiplier([1, 0]) - direct).abs(), 1e-8));
    checks.push(Check::at_most("multiplier_closed_form", (spec.multiplier([1, 0]) + PI).abs(), 1e-10));

    let mut homogeneity = 0.0f64;
    for dim in [1, 2] {
        let grid = TorusGrid::new(dim, 64)?;
        for alpha in [0.5, 1.0, 1.5] {
            let mut table = KernelSpec::new(alpha, dim)?.multiplier_table(&grid)?;
            if fault == Fault::CorruptMultiplierTable {
                table[3] *= 1.0 + 1e-6;
            }
            homogeneity = homogeneity.max(homogeneity_gap(&table, &grid, alpha));
        }
    }
    checks.push(Check::at_most("multiplier_homogeneity", homogeneity, 1e-10));

    let mut oracle = 0.0f64;
    for alpha in [0.5, 1.0, 1.5] {
        oracle = oracle.max(lphi_oracle_gap(1, 128, alpha, 8)?);
    }
    checks.push(Check::at_most("lphi_vs_direct_quadrature_1d", oracle, 1e-4));

    let grid = TorusGrid::new(2, 32)?;
    let spec2 = KernelSpec::new(1.3, 2)?;
    let unit = |seed| {
        let f = ScalarField::from_fn(grid.clone(), trig_polynomial(2, 4, seed));
        f.scale(1.0 / f.max_abs())
    };
    let rho = unit(3).map(|v| 1.0 + 0.2 * v);
    let u = VectorField::new(vec![unit(4), unit(5)])?;
    let with_const_u = commutator(&rho, &VectorField::constant(grid.clone(), &[0.7, -1.2]), &spec2)?.max_norm();
    let c = 2.5;
    let with_const_rho = commutator(&ScalarField::constant(grid.clone(), c), &u, &spec2)?;
    let op = spec2.operator(&grid)?;
    let mut gap = with_const_u;
    for (cm, ui) in with_const_rho.components().iter().zip(u.components()) {
        gap = gap.max(cm.sub(&op.apply(ui)?.scale(c))?.max_abs());
    }
    checks.push(Check::at_most("commutator_constants", gap, 1e-12));

    let f = ScalarField::from_fn(grid.clone(), trig_polynomial(2, 6, 11));
    let back = transform_backward(&grid, &transform_forward(&f))?;
    checks.push(Check::at_most("transform_round_trip", back.sub(&f)?.max_abs(), 1e-13));
    let g1 = TorusGrid::new(1, 64)?;
    let d = ScalarField::from_fn(g1.clone(), |x| (3.0 * x[0]).sin()).derivative(0)?;
    let exact = ScalarField::from_fn(g1, |x| 3.0 * (3.0 * x[0]).cos());
    checks.push(Check::at_most("spectral_derivative", d.sub(&exact)?.max_abs(), 1e-12));
    Ok(())
}

fn full_checks(checks: &mut Vec<Check>) -> Result<()> {
    checks.push(Check::at_most(
        "lphi_vs_direct_quadrature_2d",
        lphi_oracle_gap(2, 128, 1.0, 2)?,
        1e-4,
    ));

    let cfg = SimConfig::new(1, 128, 1.0, 10.0, Preset::PerturbedFlock);
    let model = Dynamics::from_config(&cfg)?;
    let traj = run(&cfg)?.trajectory;
    let mut residual = 0.0f64;
    for s in traj.frames.iter().skip(10).step_by(10) {
        residual = residual.max(model.e_law_residual(s, 1e-6, ProbeKind::Euler)?);
    }
    checks.push(Check::at_most("e_law_residual", residual, 1e-5));
    let s0 = &traj.frames[0];
    let r1 = model.e_law_residual(s0, 1e-2, ProbeKind::Rk4)?;
    let r2 = model.e_law_residual(s0, 5e-3, ProbeKind::Rk4)?;
    checks.push(Check::at_most("e_law_probe_halving", (r1 / r2 - 2.0).abs(), 0.1));

    let mut worst = f64::INFINITY;
    for b in nmp_baselines().iter().filter(|b| b.dim == 1) {
        worst = worst.min(nmp_floor(b.dim, b.n, b.alpha, b.seed)? / b.min_ratio);
    }
    checks.push(Check::at_least("nmp_floor_vs_baseline", worst, NMP_BASELINE_FRACTION));

    let orders = observed_orders(&rk4_self_convergence(&cfg, &[125, 250, 500])?);
    checks.push(Check::at_least("rk4_order", orders.iter().copied().fold(f64::INFINITY, f64::min), 3.7));

    let gaps = spatial_self_convergence(&cfg, &[16, 32, 64, 128], 0.002, 500)?;
    let ratio = gaps
        .windows(2)
        .filter(|w| w[1] > 1e-12)
        .map(|w| w[0] / w[1])
        .fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least("spatial_error_ratio", ratio, 16.0));
    Ok(())
}

pub fn verify(level: VerifyLevel) -> Result<VerifyReport> {
    verify_with(level, Fault::None)
}

pub fn verify_with(level: VerifyLevel, fault: Fault) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    fast_checks(fault, &mut checks)?;
    if level == VerifyLevel::Full {
        full_checks(&mut checks)?;
    }
    Ok(VerifyReport { level, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes() {
        let r = verify(VerifyLevel::Fast).unwrap();
        assert!(r.passed(), "{}", r.to_text());
        assert!(r.to_text().contains("PASS multiplier_homogeneity"));
    }

    #[test]
    fn corrupted_table_fails_homogeneity_only() {
        let r = verify_with(VerifyLevel::Fast, Fault::CorruptMultiplierTable).unwrap();
        let failed: Vec<&str> = r.failures().iter().map(|c| c.name).collect();
        assert_eq!(failed, ["multiplier_homogeneity"]);
        assert!(r.to_text().contains("FAIL multiplier_homogeneity"));
    }

    #[test]
    fn checks_reject_nan() {
        assert!(!Check::at_most("x", f64::NAN, 1.0).passed());
        assert!(!Check::at_least("x", f64::NAN, 1.0).passed());
    }

    #[test]
    fn baselines_cover_the_suite() {
        let b = nmp_baselines();
        assert_eq!(b.len(), 60);
        assert!(b.iter().all(|b| b.min_ratio > 0.0));
    }

    #[test]
    fn homogeneity_of_exact_power_law() {
        let g = TorusGrid::new(2, 16).unwrap();
        let table: Vec<f64> = (0..g.len()).map(|i| -g.wavevector_norm(i).powf(0.7)).collect();
        assert!(homogeneity_gap(&table, &g, 0.7) < 1e-14);
    }
}
