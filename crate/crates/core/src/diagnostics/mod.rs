//! Monitored scalars of a state: conserved quantities, amplitude, Hölder
//! seminorms, `e`-norms, decay fits and the maximum-principle certificate.

mod fit;
mod holder;
mod nmp;

pub use fit::{auto_decay_fit, converged_decay_fit, decay_fit, window_above, DecayFit, FIT_FLOOR, FIT_RELATIVE_FLOOR};
pub use holder::{
    holder_seminorm, holder_seminorms, holder_shifts, interpolation_gaps, lipschitz_seminorm, HolderOrder,
    HolderSeminorms,
};
pub use nmp::{nmp_certificate, nmp_ratio, NmpCertificate, NMP_SKIP_RATIO};

use crate::dynamics::{Dynamics, State};
use crate::error::{Error, Result};

/// `(M, P, ū)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conserved {
    pub mass: f64,
    pub momentum: Vec<f64>,
    pub mean_velocity: Vec<f64>,
}

pub fn conserved(s: &State) -> Result<Conserved> {
    let mass = s.rho.integral();
    if !(mass > 0.0) {
        return Err(Error::NonPositiveMass(mass));
    }
    let cell = s.rho.grid().cell_volume();
    let rho = s.rho.values();
    let momentum: Vec<f64> = s
        .u
        .components()
        .iter()
        .map(|c| c.values().iter().zip(rho).map(|(u, r)| u * r).sum::<f64>() * cell)
        .collect();
    let mean_velocity = momentum.iter().map(|p| p / mass).collect();
    Ok(Conserved {
        mass,
        momentum,
        mean_velocity,
    })
}

/// `max_x |u(x) − ū|` (Euclidean).
pub fn amplitude(s: &State) -> Result<f64> {
    let ubar = conserved(s)?.mean_velocity;
    Ok(amplitude_about(s, &ubar))
}

pub(crate) fn amplitude_about(s: &State, ubar: &[f64]) -> f64 {
    (0..s.rho.grid().len())
        .map(|idx| {
            s.u.components()
                .iter()
                .zip(ubar)
                .map(|(c, m)| (c.values()[idx] - m).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub momentum: Vec<f64>,
    pub mean_velocity: Vec<f64>,
    pub amplitude: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub e_inf: f64,
    pub e_lip: f64,
    pub u_c1: f64,
    pub u_c2: f64,
    pub u_c2g: f64,
    /// Exponent used for `u_c2g`.
    pub gamma: f64,
    /// `|∇·u|_∞`, kept for the density envelopes.
    pub div_inf: f64,
    /// Filled in after the run; `NaN` until then.
    pub flock_dist_inf: f64,
    pub flock_dist_c1: f64,
}

/// Computes [`DiagnosticsRecord`]s for one model and seminorm exponent.
#[derive(Debug, Clone)]
pub struct Monitor {
    model: Dynamics,
    gamma: f64,
}

impl Monitor {
    pub fn new(model: Dynamics, gamma: f64) -> Self {
        Monitor { model, gamma }
    }

    pub fn record(&self, s: &State) -> Result<DiagnosticsRecord> {
        let c = conserved(s)?;
        let e = self.model.e_quantity(s)?.e;
        let semi = holder_seminorms(&s.u, self.gamma);
        Ok(DiagnosticsRecord {
            t: s.t,
            mass: c.mass,
            amplitude: amplitude_about(s, &c.mean_velocity),
            momentum: c.momentum,
            mean_velocity: c.mean_velocity,
            rho_min: s.rho.min(),
            rho_max: s.rho.max(),
            e_inf: e.max_abs(),
            e_lip: lipschitz_seminorm(&e),
            u_c1: semi.c1,
            u_c2: semi.c2,
            u_c2g: semi.c2g,
            gamma: self.gamma,
            div_inf: s.u.divergence()?.max_abs(),
            flock_dist_inf: f64::NAN,
            flock_dist_c1: f64::NAN,
        })
    }
}

/// Envelopes `(lower, upper)` for the density at each record time:
/// `rho_min(0)·e^{−I(t)}` and `rho_max(0)·e^{I(t)}` with `I` the trapezoid
/// integral of the recorded `|∇·u|_∞`.
pub fn density_envelopes(records: &[DiagnosticsRecord]) -> Vec<(f64, f64)> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let mut integral = 0.0;
    let mut out = vec![(first.rho_min, first.rho_max)];
    for w in records.windows(2) {
        integral += 0.5 * (w[1].t - w[0].t) * (w[0].div_inf + w[1].div_inf);
        out.push((first.rho_min * (-integral).exp(), first.rho_max * integral.exp()));
    }
    out
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::torus_fields::{ScalarField, TorusGrid, VectorField};

    fn state(n: usize, rho: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64) -> State {
        let g = TorusGrid::new(1, n).unwrap();
        State::new(
            ScalarField::from_fn(g.clone(), |x| rho(x[0])),
            VectorField::new(vec![ScalarField::from_fn(g, |x| u(x[0]))]).unwrap(),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn conserved_examples() {
        let c = conserved(&state(32, |_| 1.5, |_| 0.0)).unwrap();
        assert!((c.mass - 3.0 * PI).abs() < 1e-13);

        let c = conserved(&state(32, |_| 0.5 / PI, |_| 3.0)).unwrap();
        assert!((c.momentum[0] - 3.0 * c.mass).abs() < 1e-14);
        assert!((c.mean_velocity[0] - 3.0).abs() < 1e-14);

        let c = conserved(&state(64, |x| 1.0 + 0.3 * x.cos(), |x| 2.0 + x.sin())).unwrap();
        assert!((c.momentum[0] - 4.0 * PI).abs() < 1e-12);
        let c = conserved(&state(64, |x| 1.0 + 0.3 * x.cos(), |x| 2.0 + x.cos())).unwrap();
        assert!((c.momentum[0] - 4.3 * PI).abs() < 1e-12);
        assert!((c.mean_velocity[0] - 4.3 * PI / (2.0 * PI)).abs() < 1e-12);

        assert!(matches!(
            conserved(&state(16, |_| -1.0, |_| 0.0)),
            Err(Error::NonPositiveMass(_))
        ));
    }

    #[test]
    fn amplitude_examples() {
        assert!(amplitude(&state(32, |_| 1.0, |_| 0.7)).unwrap() < 1e-15);
        let a = amplitude(&state(64, |_| 1.0, |x| 0.7 + 0.05 * x.sin())).unwrap();
        assert!((a - 0.05).abs() < 1e-15);
    }

    #[test]
    fn amplitude_matches_brute_force_in_2d() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = VectorField::new(vec![
            ScalarField::from_fn(g.clone(), |x| (x[0] + 2.0 * x[1]).sin()),
            ScalarField::from_fn(g.clone(), |x| 0.3 * x[1].cos() + 1.0),
        ])
        .unwrap();
        let s = State::new(ScalarField::from_fn(g.clone(), |x| 2.0 + x[0].cos()), u, 0.0).unwrap();
        let c = conserved(&s).unwrap();
        let mut best = 0.0f64;
        for idx in 0..g.len() {
            let d0 = s.u.component(0).values()[idx] - c.mean_velocity[0];
            let d1 = s.u.component(1).values()[idx] - c.mean_velocity[1];
            best = best.max((d0 * d0 + d1 * d1).sqrt());
        }
        assert_eq!(amplitude(&s).unwrap(), best);
    }

    #[test]
    fn envelope_integrates_divergence() {
        let mk = |t: f64, d: f64| DiagnosticsRecord {
            t,
            mass: 1.0,
            momentum: vec![0.0],
            mean_velocity: vec![0.0],
            amplitude: 0.0,
            rho_min: 0.5,
            rho_max: 2.0,
            e_inf: 0.0,
            e_lip: 0.0,
            u_c1: 0.0,
            u_c2: 0.0,
            u_c2g: 0.0,
            gamma: 0.25,
            div_inf: d,
            flock_dist_inf: f64::NAN,
            flock_dist_c1: f64::NAN,
        };
        let env = density_envelopes(&[mk(0.0, 1.0), mk(1.0, 3.0)]);
        assert_eq!(env[0], (0.5, 2.0));
        assert!((env[1].0 - 0.5 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((env[1].1 - 2.0 * 2f64.exp()).abs() < 1e-14);
    }
}
