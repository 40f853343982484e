use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::State;
use crate::error::{Error, Result};
use crate::fractional_kernel::DEFAULT_IMAGES;
use crate::torus_fields::{ScalarField, TorusGrid, VectorField, MAX_DIM};

/// Name of the seeded generator used for presets, recorded in run manifests.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `ρ = ρ̄(1 + a·mean_k cos(k·x+θ_k))`, `u = ū + ε·mean_k sin(k·x+ψ_k)`.
    PerturbedFlock,
    /// Same density as `PerturbedFlock`, `u ≡ ū`.
    Flock,
    /// `ρ ≡ ρ̄`, `u ≡ ū`.
    Uniform,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::PerturbedFlock => "perturbed_flock",
            Preset::Flock => "flock",
            Preset::Uniform => "uniform",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "perturbed_flock" => Some(Preset::PerturbedFlock),
            "flock" => Some(Preset::Flock),
            "uniform" => Some(Preset::Uniform),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub preset: Preset,
    pub rho_bar: f64,
    /// Relative density oscillation; `ρ ∈ [ρ̄(1−a), ρ̄(1+a)]`.
    pub a: f64,
    /// Sup-size bound of the velocity perturbation.
    pub eps: f64,
    /// Largest wavevector norm in the random trigonometric sums.
    pub k0: usize,
    pub ubar: [f64; MAX_DIM],
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData {
            preset: Preset::PerturbedFlock,
            rho_bar: 1.0,
            a: 0.2,
            eps: 0.05,
            k0: 3,
            ubar: [1.0, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dim: usize,
    pub n: usize,
    pub alpha: f64,
    pub t_end: f64,
    pub cfl_advect: f64,
    pub cfl_diffuse: f64,
    pub dealias: bool,
    pub output_cadence: f64,
    /// Write a field checkpoint every this many output frames.
    pub checkpoint_every: usize,
    /// Hölder exponent γ of the `[u]_{2+γ}` monitor.
    pub gamma: f64,
    pub kernel_images: usize,
    pub seed: u64,
    pub init: InitialData,
}

impl SimConfig {
    /// Defaults for every key except the required ones.
    pub fn new(dim: usize, n: usize, alpha: f64, t_end: f64, preset: Preset) -> Self {
        SimConfig {
            dim,
            n,
            alpha,
            t_end,
            cfl_advect: 0.4,
            cfl_diffuse: 0.2,
            dealias: true,
            output_cadence: 0.1,
            checkpoint_every: 10,
            gamma: 0.25,
            kernel_images: DEFAULT_IMAGES,
            seed: 42,
            init: InitialData {
                preset,
                ..InitialData::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigMissing(msg));
        if !(1..=2).contains(&self.dim) {
            return bad("dim must be 1 or 2".into());
        }
        if self.n < 16 || !self.n.is_power_of_two() {
            return bad("n must be a power of two >= 16".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return bad("alpha must lie in (0,2)".into());
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be finite and >= 0".into());
        }
        for (name, v) in [
            ("cfl_advect", self.cfl_advect),
            ("cfl_diffuse", self.cfl_diffuse),
            ("output_cadence", self.output_cadence),
            ("init.rho_bar", self.init.rho_bar),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be > 0"));
            }
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint_every must be >= 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0,1)".into());
        }
        if self.kernel_images == 0 {
            return bad("kernel.images must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.init.a) {
            return bad("init.a must lie in [0,1)".into());
        }
        if !(self.init.eps >= 0.0 && self.init.eps.is_finite()) {
            return bad("init.eps must be >= 0".into());
        }
        if self.init.k0 == 0 || self.init.k0 > self.n / 3 {
            return bad("init.k0 must lie in [1, n/3]".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<TorusGrid>> {
        TorusGrid::new(self.dim, self.n)
    }
}

/// Wavevectors `k` with `0 < |k| ≤ k0`, one from each `±k` pair.
pub fn preset_wavevectors(dim: usize, k0: usize) -> Vec<[i64; MAX_DIM]> {
    let k0 = k0 as i64;
    match dim {
        1 => (1..=k0).map(|k| [k, 0]).collect(),
        _ => {
            let mut out = Vec::new();
            for k1 in 0..=k0 {
                for k2 in -k0..=k0 {
                    let upper = k1 > 0 || k2 > 0;
                    if upper && k1 * k1 + k2 * k2 <= k0 * k0 {
                        out.push([k1, k2]);
                    }
                }
            }
            out
        }
    }
}

/// Builds the initial state for the configured preset.
pub fn initial_state(cfg: &SimConfig) -> Result<State> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let init = &cfg.init;
    let dim = cfg.dim;
    let ks = preset_wavevectors(dim, init.k0);
    let m = ks.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let theta: Vec<f64> = ks.iter().map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let psi: Vec<Vec<f64>> = (0..dim)
        .map(|_| ks.iter().map(|_| rng.gen_range(0.0..2.0 * PI)).collect())
        .collect();
    let dot = |k: &[i64; MAX_DIM], x: [f64; MAX_DIM]| k[0] as f64 * x[0] + k[1] as f64 * x[1];

    let rho = match init.preset {
        Preset::Uniform => ScalarField::constant(grid.clone(), init.rho_bar),
        Preset::Flock | Preset::PerturbedFlock => ScalarField::from_fn(grid.clone(), |x| {
            let s: f64 = ks.iter().zip(&theta).map(|(k, th)| (dot(k, x) + th).cos()).sum();
            init.rho_bar * (1.0 + init.a * s / m)
        }),
    };
    let u = match init.preset {
        Preset::PerturbedFlock => VectorField::new(
            (0..dim)
                .map(|a| {
                    ScalarField::from_fn(grid.clone(), |x| {
                        let s: f64 = ks.iter().zip(&psi[a]).map(|(k, ps)| (dot(k, x) + ps).sin()).sum();
                        init.ubar[a] + init.eps * s / m
                    })
                })
                .collect(),
        )?,
        _ => VectorField::constant(grid.clone(), &init.ubar[..dim]),
    };
    State::new(rho, u, 0.0)
}
