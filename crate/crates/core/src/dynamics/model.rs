use std::sync::Arc;

use super::{EvolvedQuantityE, SimConfig, State, Tendency};
use crate::error::{Error, Result};
use crate::fractional_kernel::{AlignmentOperator, KernelSpec};
use crate::torus_fields::{ScalarField, TorusGrid, VectorField};

/// Density floor below which a step is rejected.
pub const POSITIVITY_FLOOR: f64 = 1e-8;

/// How [`Dynamics::e_law_residual`] advances the state to difference `e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbeKind {
    /// One forward-Euler step along the right-hand side.
    #[default]
    Euler,
    /// One RK4 step; the difference quotient then carries an `O(dt)` bias.
    Rk4,
}

/// The semi-discrete system on one grid: kernel, spectral `L_φ` and the
/// dealiasing switch.
#[derive(Debug, Clone)]
pub struct Dynamics {
    grid: Arc<TorusGrid>,
    spec: KernelSpec,
    op: AlignmentOperator,
    dealias: bool,
}

impl Dynamics {
    pub fn new(grid: Arc<TorusGrid>, spec: KernelSpec, dealias: bool) -> Result<Self> {
        let op = spec.operator(&grid)?;
        Ok(Dynamics {
            grid,
            spec,
            op,
            dealias,
        })
    }

    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        let spec = KernelSpec::with_images(cfg.alpha, cfg.dim, cfg.kernel_images)?;
        Dynamics::new(cfg.grid()?, spec, cfg.dealias)
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn operator(&self) -> &AlignmentOperator {
        &self.op
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    fn check(&self, s: &State) -> Result<()> {
        if **s.rho.grid() != *self.grid {
            return Err(Error::GridMismatch("state and model grids differ".into()));
        }
        Ok(())
    }

    /// `ρ_t = −∇·(ρu)`, `u_t = −(u·∇)u + [L_φ, u](ρ)`.
    pub fn rhs(&self, s: &State) -> Result<Tendency> {
        self.check(s)?;
        let dim = self.grid.dim();
        let l_rho = self.op.apply(&s.rho)?;
        let mut rho_t: Option<ScalarField> = None;
        let mut u_t = Vec::with_capacity(dim);

        let grads: Vec<Vec<ScalarField>> = s
            .u
            .components()
            .iter()
            .map(|ui| (0..dim).map(|a| ui.derivative(a)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;

        for i in 0..dim {
            let ui = s.u.component(i);
            let flux = s.rho.product(ui, self.dealias)?;
            let div_part = flux.derivative(i)?;
            rho_t = Some(match rho_t {
                None => div_part.scale(-1.0),
                Some(acc) => acc.sub(&div_part)?,
            });

            // Products that are not fed to L_φ share one truncation.
            let mut local = ui.mul(&l_rho)?;
            for (j, g) in grads[i].iter().enumerate() {
                local = local.add(&s.u.component(j).mul(g)?)?;
            }
            let local = if self.dealias { local.dealiased() } else { local };
            u_t.push(self.op.apply(&flux)?.sub(&local)?);
        }
        let tendency = Tendency {
            rho: rho_t.expect("dim >= 1"),
            u: VectorField::new(u_t)?,
        };
        if !tendency.rho.is_finite() || !tendency.u.is_finite() {
            return Err(Error::NonFinite { t: s.t });
        }
        Ok(tendency)
    }

    /// `e = ∇·u + L_φρ`.
    pub fn e_quantity(&self, s: &State) -> Result<EvolvedQuantityE> {
        self.check(s)?;
        let e = s.u.divergence()?.add(&self.op.apply(&s.rho)?)?;
        Ok(EvolvedQuantityE { e })
    }

    /// `(∇·u)² − tr((∇u)²)`, the source term of the `e` law.
    pub fn e_source(&self, u: &VectorField) -> Result<ScalarField> {
        let dim = u.dim();
        let grad: Vec<Vec<ScalarField>> = u
            .components()
            .iter()
            .map(|ui| (0..dim).map(|a| ui.derivative(a)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let mut div = grad[0][0].clone();
        for (i, g) in grad.iter().enumerate().skip(1) {
            div = div.add(&g[i])?;
        }
        let mut trace = grad[0][0].mul(&grad[0][0])?;
        for i in 0..dim {
            for j in 0..dim {
                if i + j > 0 {
                    // grad[i][j] = ∂_j u_i, so this sums ∂_j u_i ∂_i u_j
                    trace = trace.add(&grad[i][j].mul(&grad[j][i])?)?;
                }
            }
        }
        div.mul(&div)?.sub(&trace)
    }

    /// Max-norm gap between two evaluations of `e_t`: a difference quotient
    /// along a probe step of size `dt_probe`, and
    /// `−∇·(ue) + (∇·u)² − tr((∇u)²)`.
    pub fn e_law_residual(&self, s: &State, dt_probe: f64, probe: ProbeKind) -> Result<f64> {
        let e0 = self.e_quantity(s)?.e;
        let advanced = match probe {
            ProbeKind::Euler => s.advanced(dt_probe, &self.rhs(s)?)?,
            ProbeKind::Rk4 => self.step(s, dt_probe)?,
        };
        let e1 = self.e_quantity(&advanced)?.e;
        let quotient = e1.sub(&e0)?.scale(1.0 / dt_probe);

        let transport = VectorField::new(
            s.u.components()
                .iter()
                .map(|ui| ui.mul(&e0))
                .collect::<Result<Vec<_>>>()?,
        )?
        .divergence()?;
        let law = self.e_source(&s.u)?.sub(&transport)?;
        Ok(quotient.sub(&law)?.max_abs())
    }

    /// Explicit time-step limit: the smaller of the advective bound
    /// `cfl_advect·Δx/max|u|` and `cfl_diffuse·Δx^α/(c(n,α)·max ρ)`.
    pub fn cfl_dt(&self, s: &State, cfl_advect: f64, cfl_diffuse: f64) -> f64 {
        let dx = self.grid.spacing();
        let advective = cfl_advect * dx / (s.u.max_norm() + 1e-12);
        let diffusive = cfl_diffuse * dx.powf(self.spec.alpha()) / (self.spec.norm_const() * s.rho.max());
        advective.min(diffusive)
    }

    /// `steps` RK4 steps of fixed size `dt`.
    pub fn integrate_fixed(&self, s: &State, dt: f64, steps: usize) -> Result<State> {
        let mut cur = s.clone();
        for _ in 0..steps {
            cur = self.step(&cur, dt)?;
        }
        Ok(cur)
    }

    /// Classical RK4 step.
    pub fn step(&self, s: &State, dt: f64) -> Result<State> {
        if dt == 0.0 {
            return Ok(s.clone());
        }
        let k1 = self.rhs(s)?;
        let s2 = s.advanced(0.5 * dt, &k1)?;
        let k2 = self.rhs(&s2)?;
        let s3 = s.advanced(0.5 * dt, &k2)?;
        let k3 = self.rhs(&s3)?;
        let s4 = s.advanced(dt, &k3)?;
        let k4 = self.rhs(&s4)?;

        let combine = |a: &ScalarField, b: &ScalarField, c: &ScalarField, d: &ScalarField, base: &ScalarField| {
            let vals = base
                .values()
                .iter()
                .zip(a.values())
                .zip(b.values())
                .zip(c.values())
                .zip(d.values())
                .map(|((((&x, &a), &b), &c), &d)| x + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d))
                .collect();
            ScalarField::new(base.grid().clone(), vals)
        };
        let rho = combine(&k1.rho, &k2.rho, &k3.rho, &k4.rho, &s.rho)?;
        let u = VectorField::new(
            (0..s.u.dim())
                .map(|a| {
                    combine(
                        k1.u.component(a),
                        k2.u.component(a),
                        k3.u.component(a),
                        k4.u.component(a),
                        s.u.component(a),
                    )
                })
                .collect::<Result<Vec<_>>>()?,
        )?;
        let next = State::new(rho, u, s.t + dt)?;
        if !next.rho.is_finite() || !next.u.is_finite() {
            return Err(Error::NonFinite { t: next.t });
        }
        let min_rho = next.rho.min();
        if min_rho <= POSITIVITY_FLOOR {
            return Err(Error::PositivityLoss { t: next.t, min_rho });
        }
        Ok(next)
    }
}
