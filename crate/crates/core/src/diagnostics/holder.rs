use std::f64::consts::PI;

use crate::torus_fields::{GridShift, ScalarField, TorusGrid, VectorField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HolderOrder {
    /// `sup |δ_h u|/|h|`
    One,
    /// `sup |δ²_h u|/|h|²`
    Two,
    /// `sup |δ³_h u|/|h|^{2+γ}`
    TwoPlus(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HolderSeminorms {
    pub c1: f64,
    pub c2: f64,
    pub c2g: f64,
}

/// Lattice shifts entering the seminorm sups: every `0 < |h| ≤ π` in 1D; in
/// 2D the axis-aligned and diagonal shifts in that range.
pub fn holder_shifts(grid: &TorusGrid) -> Vec<GridShift> {
    let n = grid.points_per_dim() as i64;
    let dx = grid.spacing();
    let mut out = Vec::new();
    match grid.dim() {
        1 => {
            for m in 1..=n / 2 {
                out.push(GridShift::new(grid, &[m]).expect("nonzero shift"));
            }
        }
        _ => {
            for m in 1..=n / 2 {
                out.push(GridShift::new(grid, &[m, 0]).expect("nonzero shift"));
                out.push(GridShift::new(grid, &[0, m]).expect("nonzero shift"));
            }
            let mut m = 1;
            while m as f64 * dx * 2f64.sqrt() <= PI {
                out.push(GridShift::new(grid, &[m, m]).expect("nonzero shift"));
                out.push(GridShift::new(grid, &[m, -m]).expect("nonzero shift"));
                m += 1;
            }
        }
    }
    out
}

/// Euclidean norms of `δ_h u`, `δ²_h u`, `δ³_h u` at node `idx`.
pub(crate) fn difference_norms(u: &[&[f64]], grid: &TorusGrid, idx: usize, h: &GridShift) -> [f64; 3] {
    let i1 = grid.shifted_index(idx, h.offsets());
    let i2 = grid.shifted_index(idx, h.scaled(2));
    let i3 = grid.shifted_index(idx, h.scaled(3));
    let mut acc = [0.0; 3];
    for v in u {
        let (f0, f1, f2, f3) = (v[idx], v[i1], v[i2], v[i3]);
        let d1 = f1 - f0;
        let d2 = f2 - 2.0 * f1 + f0;
        let d3 = f3 - 3.0 * f2 + 3.0 * f1 - f0;
        acc[0] += d1 * d1;
        acc[1] += d2 * d2;
        acc[2] += d3 * d3;
    }
    acc.map(f64::sqrt)
}

fn component_values(u: &VectorField) -> Vec<&[f64]> {
    u.components().iter().map(|c| c.values()).collect()
}

/// All three seminorms in one sweep over nodes and shifts.
pub fn holder_seminorms(u: &VectorField, gamma: f64) -> HolderSeminorms {
    let grid = u.grid();
    let vals = component_values(u);
    let mut out = HolderSeminorms::default();
    for h in holder_shifts(grid) {
        let len = h.as_length();
        let p = [len, len * len, len.powf(2.0 + gamma)];
        for idx in 0..grid.len() {
            let d = difference_norms(&vals, grid, idx, &h);
            out.c1 = out.c1.max(d[0] / p[0]);
            out.c2 = out.c2.max(d[1] / p[1]);
            out.c2g = out.c2g.max(d[2] / p[2]);
        }
    }
    out
}

pub fn holder_seminorm(u: &VectorField, order: HolderOrder) -> f64 {
    let gamma = match order {
        HolderOrder::TwoPlus(g) => g,
        _ => 0.5,
    };
    let all = holder_seminorms(u, gamma);
    match order {
        HolderOrder::One => all.c1,
        HolderOrder::Two => all.c2,
        HolderOrder::TwoPlus(_) => all.c2g,
    }
}

/// `[f]₁` of a scalar field.
pub fn lipschitz_seminorm(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let vals = [f.values()];
    let mut best = 0.0f64;
    for h in holder_shifts(grid) {
        let len = h.as_length();
        for idx in 0..grid.len() {
            best = best.max(difference_norms(&vals, grid, idx, &h)[0] / len);
        }
    }
    best
}

/// Worst violation of `|δ³_h u(x)| ≤ 8A` and `|δ³_h u(x)|/|h|^{2+γ} ≤ [u]_{2+γ}`
/// over all nodes and seminorm shifts. Both gaps are `≤ 0` when the
/// invariant holds.
pub fn interpolation_gaps(u: &VectorField, amplitude: f64, c2g: f64, gamma: f64) -> (f64, f64) {
    let grid = u.grid();
    let vals = component_values(u);
    let mut worst = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for h in holder_shifts(grid) {
        let p = h.as_length().powf(2.0 + gamma);
        for idx in 0..grid.len() {
            let d3 = difference_norms(&vals, grid, idx, &h)[2];
            worst.0 = worst.0.max(d3 - 8.0 * amplitude);
            worst.1 = worst.1.max(d3 / p - c2g);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_1d(n: usize, f: impl Fn(f64) -> f64) -> VectorField {
        let g = TorusGrid::new(1, n).unwrap();
        VectorField::new(vec![ScalarField::from_fn(g, |x| f(x[0]))]).unwrap()
    }

    #[test]
    fn constants_have_zero_seminorms() {
        let u = field_1d(64, |_| 3.0);
        assert_eq!(holder_seminorms(&u, 0.25), HolderSeminorms::default());
        let g = TorusGrid::new(2, 16).unwrap();
        let v = VectorField::constant(g, &[1.0, -2.0]);
        assert_eq!(holder_seminorms(&v, 0.25), HolderSeminorms::default());
    }

    #[test]
    fn lipschitz_of_sine() {
        let u = field_1d(256, f64::sin);
        let c1 = holder_seminorm(&u, HolderOrder::One);
        assert!((c1 - 1.0).abs() < 1e-3, "{c1}");
        assert!(c1 <= 1.0);
    }

    #[test]
    fn single_harmonic_closed_form() {
        // u = (cos kx₁, sin kx₁) has |δ³_h u(x)| = |2 sin(k h₁/2)|³ at every x.
        let (n, k, gamma) = (64usize, 3.0, 0.25);
        let g = TorusGrid::new(2, n).unwrap();
        let u = VectorField::new(vec![
            ScalarField::from_fn(g.clone(), |x| (k * x[0]).cos()),
            ScalarField::from_fn(g, |x| (k * x[0]).sin()),
        ])
        .unwrap();
        let dx = 2.0 * PI / n as f64;
        let mut closed = 0.0f64;
        for m in 1..=n / 2 {
            let h = m as f64 * dx;
            closed = closed.max((2.0 * (0.5 * k * h).sin()).abs().powi(3) / h.powf(2.0 + gamma));
        }
        let got = holder_seminorm(&u, HolderOrder::TwoPlus(gamma));
        assert!((got - closed).abs() < 1e-10 * closed, "{got} {closed}");
    }

    #[test]
    fn shift_sets() {
        let g1 = TorusGrid::new(1, 32).unwrap();
        assert_eq!(holder_shifts(&g1).len(), 16);
        let g2 = TorusGrid::new(2, 32).unwrap();
        let shifts = holder_shifts(&g2);
        assert!(shifts.iter().all(|h| h.as_length() <= PI + 1e-12));
        // 16 along each axis plus 11 per diagonal
        assert_eq!(shifts.len(), 32 + 22);
    }

    #[test]
    fn interpolation_invariant_on_random_harmonics() {
        let u = field_1d(64, |x| 0.3 * (2.0 * x + 0.4).sin() + 0.1 * (5.0 * x).cos() + 1.0);
        let amp = u.component(0).map(|v| v - 1.0).max_abs();
        let s = holder_seminorms(&u, 0.25);
        let (a, b) = interpolation_gaps(&u, amp, s.c2g, 0.25);
        assert!(a <= 0.0 && b <= 0.0, "{a} {b}");
    }

    #[test]
    fn heat_smoothing_never_raises_a_seminorm() {
        use crate::cli_io::trig_polynomial;
        use num_complex::Complex64;
        for (dim, n) in [(1, 128), (2, 32)] {
            let g = TorusGrid::new(dim, n).unwrap();
            for seed in 0..3 {
                let comps = (0..dim)
                    .map(|c| ScalarField::from_fn(g.clone(), trig_polynomial(dim, 4, 10 * seed + c as u64)))
                    .collect();
                let u = VectorField::new(comps).unwrap();
                let before = holder_seminorms(&u, 0.25);
                for s in [1e-3, 1e-2, 0.1, 1.0] {
                    let heat = |_: usize, k: [i64; crate::torus_fields::MAX_DIM]| {
                        let k2: i64 = k.iter().map(|v| v * v).sum();
                        Complex64::new((-(k2 as f64) * s).exp(), 0.0)
                    };
                    let smooth = VectorField::new(u.components().iter().map(|f| f.apply_multiplier(heat)).collect()).unwrap();
                    let after = holder_seminorms(&smooth, 0.25);
                    for (a, b) in [(after.c1, before.c1), (after.c2, before.c2), (after.c2g, before.c2g)] {
                        assert!(a <= b + 1e-10, "dim {dim} seed {seed} s {s}: {a} > {b}");
                    }
                }
            }
        }
    }
}
