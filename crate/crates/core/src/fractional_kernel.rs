//! The periodized singular kernel `φ_α(x) = Σ_k |x + 2πk|^{−(n+α)}`, the
//! alignment operator `L_φ f(x) = ∫ φ(x−y)(f(y) − f(x)) dy` it induces, the
//! commutator `[L_φ, u](ρ)` and the pointwise dissipation functional `D_α`.
//!
//! On the torus `L_φ` is the Fourier multiplier `λ(k) = −c(n,α)|k|^α` with
//! `c(n,α) = ∫_{R^n} (1 − cos z₁)/|z|^{n+α} dz`, which is how the dynamics
//! apply it. Lattice sums of `φ_α` itself are only needed for `φ_min`, for
//! `D_α`, and by the direct-quadrature oracles in the tests.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_gk, GaussLegendre};
use crate::torus_fields::{ScalarField, TorusGrid, VectorField, MAX_DIM};

/// Default truncation radius of the image sum.
pub const DEFAULT_IMAGES: usize = 20;

/// Points per dimension of the scan certifying `φ_min`.
pub const PHI_MIN_SCAN: usize = 64;

/// How the dissipation functional treats the cell around `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShellRule {
    /// Second-order Taylor proxy `|∇f(x)|²/n · ∫_{|z|<r₀} |z|^{2−n−α} dz`.
    #[default]
    TaylorProxy,
    /// Drop the singular cell; yields a lower bound.
    Exclude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    alpha: f64,
    dim: usize,
    lattice_images: usize,
    norm_const: f64,
    phi_min: f64,
}

impl KernelSpec {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        Self::with_images(alpha, dim, DEFAULT_IMAGES)
    }

    pub fn with_images(alpha: f64, dim: usize, lattice_images: usize) -> Result<Self> {
        validate(alpha, dim)?;
        if lattice_images == 0 {
            return Err(Error::InvalidKernel("lattice_images must be positive".into()));
        }
        let norm_const = norm_const(dim, alpha)?;
        let mut spec = KernelSpec {
            alpha,
            dim,
            lattice_images,
            norm_const,
            phi_min: f64::NAN,
        };
        spec.phi_min = phi_min(&spec)?;
        Ok(spec)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lattice_images(&self) -> usize {
        self.lattice_images
    }

    /// `c(n,α)` in `λ(k) = −c(n,α)|k|^α`.
    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    pub fn phi_min(&self) -> f64 {
        self.phi_min
    }

    pub fn multiplier(&self, k: [i64; MAX_DIM]) -> f64 {
        let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
        if k2 == 0.0 {
            0.0
        } else {
            -self.norm_const * k2.powf(0.5 * self.alpha)
        }
    }

    /// `λ(k)` for every mode of `grid`.
    pub fn multiplier_table(&self, grid: &TorusGrid) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        Ok((0..grid.len())
            .map(|idx| self.multiplier(grid.wavevector(idx)))
            .collect())
    }

    /// Precomputed spectral `L_φ` for one grid.
    pub fn operator(&self, grid: &Arc<TorusGrid>) -> Result<AlignmentOperator> {
        Ok(AlignmentOperator {
            grid: grid.clone(),
            table: self.multiplier_table(grid)?,
        })
    }

    pub fn kernel_value(&self, x: &[f64]) -> Result<f64> {
        lattice_kernel(x, self.alpha, self.dim, self.lattice_images)
    }

    fn check_grid(&self, grid: &TorusGrid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::GridMismatch(format!(
                "kernel is {}-dimensional, grid is {}-dimensional",
                self.dim,
                grid.dim()
            )));
        }
        Ok(())
    }
}

fn validate(alpha: f64, dim: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidKernel(format!("alpha must lie in (0,2) (got {alpha})")));
    }
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(Error::InvalidKernel(format!("dim must be 1 or 2 (got {dim})")));
    }
    Ok(())
}

/// `c(n,α) = ∫_{R^n} (1 − cos z₁)/|z|^{n+α} dz`.
///
/// In 1D this is `π / (Γ(1+α) sin(πα/2))`. In 2D, integrating out `z₂` first
/// leaves `c(2,α) = c(1,α) · ∫_{−π/2}^{π/2} cos^α θ dθ`, evaluated by
/// adaptive quadrature.
pub fn norm_const(dim: usize, alpha: f64) -> Result<f64> {
    validate(alpha, dim)?;
    let c1 = PI / (gamma(1.0 + alpha) * (0.5 * PI * alpha).sin());
    match dim {
        1 => Ok(c1),
        _ => {
            let half = adaptive_gk(|t| t.cos().max(0.0).powf(alpha), 0.0, 0.5 * PI, 1e-15, 1e-14)?;
            Ok(c1 * 2.0 * half)
        }
    }
}

/// `λ(k)` for every mode of `grid`.
pub fn multiplier_table(alpha: f64, dim: usize, grid: &TorusGrid) -> Result<Vec<f64>> {
    let c = norm_const(dim, alpha)?;
    if grid.dim() != dim {
        return Err(Error::GridMismatch(format!(
            "multiplier requested for dim {dim} on a {}-dimensional grid",
            grid.dim()
        )));
    }
    Ok((0..grid.len())
        .map(|idx| {
            let k = grid.wavevector_norm(idx);
            if k == 0.0 {
                0.0
            } else {
                -c * k.powf(alpha)
            }
        })
        .collect())
}

/// `φ_α(x)` from the image sum over `|k|_∞ ≤ K` plus an Euler–Maclaurin
/// estimate of the discarded images.
///
/// The discarded images are the midpoint-rule samples of `|y|^{−(n+α)}` on
/// the cells outside the cube `Q = x + [−(2K+1)π, (2K+1)π]^n`. Their sum is
/// `(2π)^{−n} ∫_{ext Q} (1 − h²/24 Δ + h⁴(7/5760 Σ∂ᵢ⁴ + 1/576 ∂₁²∂₂²)) g`
/// with `h = 2π`, up to `O(h⁶ K^{−α−6})`. Each term is homogeneous of some
/// degree `−m`, so `∫_{ext Q} f = (m−n)^{−1} ∮_{∂Q} f(P) (P·ν) dS`.
pub fn lattice_kernel(x: &[f64], alpha: f64, dim: usize, images: usize) -> Result<f64> {
    validate(alpha, dim)?;
    if x.len() < dim {
        return Err(Error::InvalidKernel(format!("point has {} coordinates, need {dim}", x.len())));
    }
    let mut y = [0.0; MAX_DIM];
    for a in 0..dim {
        y[a] = (x[a] + PI).rem_euclid(2.0 * PI) - PI;
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(Error::SingularPoint);
    }
    let s = dim as f64 + alpha;
    let k = images as i64;
    let two_pi = 2.0 * PI;

    let direct = match dim {
        1 => (-k..=k).map(|j| (y[0] + two_pi * j as f64).abs().powf(-s)).sum::<f64>(),
        _ => {
            let mut acc = 0.0;
            for j0 in -k..=k {
                let a = y[0] + two_pi * j0 as f64;
                for j1 in -k..=k {
                    let b = y[1] + two_pi * j1 as f64;
                    acc += (a * a + b * b).powf(-0.5 * s);
                }
            }
            acc
        }
    };
    Ok(direct + image_tail(y, dim, alpha, images))
}

fn image_tail(y: [f64; MAX_DIM], dim: usize, alpha: f64, images: usize) -> f64 {
    let n = dim as f64;
    let s = n + alpha;
    let p = -0.5 * s;
    let h = 2.0 * PI;
    let half_width = (2 * images + 1) as f64 * PI;

    let c2 = -h * h / 24.0;
    let c4 = 7.0 * h.powi(4) / 5760.0;
    let c22 = h.powi(4) / 576.0;
    let (p1, p2, p3) = (p * (p - 1.0), p * (p - 1.0) * (p - 2.0), p * (p - 1.0) * (p - 2.0) * (p - 3.0));

    // Every term of the Euler–Maclaurin integrand, each divided by (m − n).
    let integrand = |pt: [f64; MAX_DIM]| -> f64 {
        let q = pt[0] * pt[0] + pt[1] * pt[1];
        let g = q.powf(p);
        let (qm1, qm2, qm3, qm4) = (g / q, g / (q * q), g / (q * q * q), g / (q * q * q * q));
        let mut lap = 0.0;
        let mut d4 = 0.0;
        for &yi in &pt[..dim] {
            let y2 = yi * yi;
            lap += 2.0 * p * qm1 + 4.0 * p1 * y2 * qm2;
            d4 += 12.0 * p1 * qm2 + 48.0 * p2 * y2 * qm3 + 16.0 * p3 * y2 * y2 * qm4;
        }
        let d22 = if dim == 2 {
            let (a2, b2) = (pt[0] * pt[0], pt[1] * pt[1]);
            4.0 * p1 * qm2 + 8.0 * p2 * (a2 + b2) * qm3 + 16.0 * p3 * a2 * b2 * qm4
        } else {
            0.0
        };
        g / (s - n) + c2 * lap / (s + 2.0 - n) + (c4 * d4 + c22 * d22) / (s + 4.0 - n)
    };

    let boundary = match dim {
        1 => {
            let right = y[0] + half_width;
            let left = y[0] - half_width;
            integrand([right, 0.0]) * right + integrand([left, 0.0]) * (-left)
        }
        _ => {
            let gl = GaussLegendre::new(32);
            let mut acc = 0.0;
            for axis in 0..2 {
                let other = 1 - axis;
                let (lo, hi) = (y[other] - half_width, y[other] + half_width);
                for sign in [1.0, -1.0] {
                    let face = y[axis] + sign * half_width;
                    let normal_dist = sign * face;
                    acc += normal_dist
                        * gl.integrate(lo, hi, |t| {
                            let mut pt = [0.0; MAX_DIM];
                            pt[axis] = face;
                            pt[other] = t;
                            integrand(pt)
                        });
                }
            }
            acc
        }
    };
    boundary / h.powi(dim as i32)
}

/// `min_x φ_α(x)`: the value at the far corner `(π, …, π)`, certified against
/// a [`PHI_MIN_SCAN`]-points-per-dimension scan of the torus.
pub fn phi_min(spec: &KernelSpec) -> Result<f64> {
    let corner = spec.kernel_value(&[PI; MAX_DIM])?;
    let step = 2.0 * PI / PHI_MIN_SCAN as f64;
    let total = PHI_MIN_SCAN.pow(spec.dim as u32);
    let mut scan_min = f64::INFINITY;
    for idx in 1..total {
        let pt = match spec.dim {
            1 => [idx as f64 * step, 0.0],
            _ => [(idx / PHI_MIN_SCAN) as f64 * step, (idx % PHI_MIN_SCAN) as f64 * step],
        };
        scan_min = scan_min.min(spec.kernel_value(&pt)?);
    }
    if scan_min < corner * (1.0 - 1e-12) {
        return Err(Error::PhiMinCertification {
            corner,
            scan: scan_min,
        });
    }
    Ok(corner)
}

/// Spectral `L_φ` on a fixed grid.
#[derive(Debug, Clone)]
pub struct AlignmentOperator {
    grid: Arc<TorusGrid>,
    table: Vec<f64>,
}

impl AlignmentOperator {
    pub fn from_table(grid: Arc<TorusGrid>, table: Vec<f64>) -> Result<Self> {
        if table.len() != grid.len() {
            return Err(Error::GridMismatch("multiplier table length".into()));
        }
        Ok(AlignmentOperator { grid, table })
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        if **f.grid() != *self.grid {
            return Err(Error::GridMismatch("field and operator grids differ".into()));
        }
        let table = &self.table;
        Ok(f.apply_multiplier(|idx, _| Complex64::new(table[idx], 0.0)))
    }

    /// `[L_φ, u](ρ) = L_φ(ρu) − L_φ(ρ)u`, componentwise.
    pub fn commutator(&self, rho: &ScalarField, u: &VectorField, dealias: bool) -> Result<VectorField> {
        let l_rho = self.apply(rho)?;
        u.try_map_components(|_, ui| {
            let flux = rho.product(ui, dealias)?;
            self.apply(&flux)?.sub(&l_rho.product(ui, dealias)?)
        })
    }
}

/// `L_φ f` by spectral multiplication.
pub fn apply_lphi(f: &ScalarField, spec: &KernelSpec) -> Result<ScalarField> {
    spec.operator(f.grid())?.apply(f)
}

/// `[L_φ, u](ρ)` with the two-thirds rule applied to every product.
pub fn commutator(rho: &ScalarField, u: &VectorField, spec: &KernelSpec) -> Result<VectorField> {
    rho.ensure_same_grid(u.component(0))?;
    spec.operator(rho.grid())?.commutator(rho, u, true)
}

/// Grid quadrature for `D_α f(x) = ∫ |f(x+z) − f(x)|² φ_α(z) dz` over one
/// periodic cell.
///
/// Every nonzero lattice offset contributes with weight `Δ^n`. The cell
/// around `z = 0` is replaced by the ball of equal volume (radius `r₀`) and
/// handled according to the [`ShellRule`].
#[derive(Debug, Clone)]
pub struct DissipationQuadrature {
    grid: Arc<TorusGrid>,
    alpha: f64,
    kernel: Vec<f64>,
    shell: ShellRule,
}

impl DissipationQuadrature {
    pub fn new(spec: &KernelSpec, grid: &Arc<TorusGrid>, shell: ShellRule) -> Result<Self> {
        spec.check_grid(grid)?;
        let mut kernel = vec![0.0; grid.len()];
        for (idx, slot) in kernel.iter_mut().enumerate().skip(1) {
            *slot = spec.kernel_value(&grid.node(idx))?;
        }
        Ok(DissipationQuadrature {
            grid: grid.clone(),
            alpha: spec.alpha,
            kernel,
            shell,
        })
    }

    /// `∫_{|z|<r₀} |z|^{2−n−α} dz / n`.
    fn shell_weight(&self) -> f64 {
        let dx = self.grid.spacing();
        let e = 2.0 - self.alpha;
        match self.grid.dim() {
            1 => {
                let r0 = 0.5 * dx;
                2.0 * r0.powf(e) / e
            }
            _ => {
                let r0 = dx / PI.sqrt();
                0.5 * 2.0 * PI * r0.powf(e) / e
            }
        }
    }

    /// `D_α` of the vector-valued `f` (components summed) at node `idx`;
    /// `gradients[c][a]` must hold `∂_a f_c`.
    pub fn evaluate_with_gradients(
        &self,
        f: &[&ScalarField],
        gradients: &[Vec<ScalarField>],
        idx: usize,
    ) -> f64 {
        let cell = self.grid.cell_volume();
        let mut acc = 0.0;
        for comp in f {
            let v = comp.values();
            let base = v[idx];
            for (z, &w) in self.kernel.iter().enumerate().skip(1) {
                let offset = self.grid.multi_index(z);
                let target = self.grid.shifted_index(idx, [offset[0] as i64, offset[1] as i64]);
                let d = v[target] - base;
                acc += d * d * w;
            }
        }
        acc *= cell;
        if self.shell == ShellRule::TaylorProxy {
            let grad2: f64 = gradients
                .iter()
                .flat_map(|g| g.iter().map(|ga| ga.values()[idx].powi(2)))
                .sum();
            acc += grad2 * self.shell_weight();
        }
        acc
    }

    /// `D_α f` at node `idx` for a scalar field.
    pub fn evaluate(&self, f: &ScalarField, idx: usize) -> Result<f64> {
        let grads = (0..self.grid.dim())
            .map(|a| f.derivative(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.evaluate_with_gradients(&[f], &[grads], idx))
    }
}

/// `D_α f(x)` at a single node; builds the quadrature on the fly.
pub fn dissipation_functional(f: &ScalarField, node: usize, spec: &KernelSpec) -> Result<f64> {
    DissipationQuadrature::new(spec, f.grid(), ShellRule::TaylorProxy)?.evaluate(f, node)
}

/// Radius below which [`direct_lphi_at`] replaces the second difference by
/// its quadratic Taylor model.
const ORACLE_CORE: f64 = 1e-4;

/// `L_φ f(x)` by direct quadrature of the kernel over the cell `[−π, π]^n`,
/// for `f` given pointwise. Pairs `z` with `−z` so the integrand is
/// `φ(z)·(f(x+z) + f(x−z) − 2f(x))`; inside `|z| < 10⁻⁴` the difference is
/// taken as quadratic in `|z|` and `φ` as its nearest image, integrated in
/// closed form. Test oracle only: every sample costs a lattice sum.
pub fn direct_lphi_at(f: impl Fn([f64; MAX_DIM]) -> f64, x: [f64; MAX_DIM], spec: &KernelSpec) -> Result<f64> {
    let alpha = spec.alpha();
    let fx = f(x);
    let second = |dir: [f64; MAX_DIM], r: f64| {
        let mut p = x;
        let mut m = x;
        for a in 0..spec.dim() {
            p[a] += r * dir[a];
            m[a] -= r * dir[a];
        }
        f(p) + f(m) - 2.0 * fx
    };
    let core_weight = ORACLE_CORE.powf(-alpha) / (2.0 - alpha);
    let (abs_tol, rel_tol) = (1e-10, 1e-10);
    let radial = |dir: [f64; MAX_DIM], reach: f64| -> Result<f64> {
        let mut err = None;
        let outer = adaptive_gk(
            |r| {
                let z = [r * dir[0], r * dir[1]];
                match spec.kernel_value(&z[..spec.dim()]) {
                    Ok(phi) => phi * second(dir, r) * r.powi(spec.dim() as i32 - 1),
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                }
            },
            ORACLE_CORE,
            reach,
            abs_tol,
            rel_tol,
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok(outer + second(dir, ORACLE_CORE) * core_weight)
    };
    match spec.dim() {
        1 => radial([1.0, 0.0], PI),
        _ => {
            let mut err = None;
            let mut total = 0.0;
            for q in 0..4 {
                let (a, b) = (q as f64 * PI / 4.0, (q + 1) as f64 * PI / 4.0);
                total += adaptive_gk(
                    |th| {
                        let dir = [th.cos(), th.sin()];
                        let reach = PI / dir[0].abs().max(dir[1].abs());
                        radial(dir, reach).unwrap_or_else(|e| {
                            err.get_or_insert(e);
                            0.0
                        })
                    },
                    a,
                    b,
                    abs_tol,
                    rel_tol,
                )?;
            }
            match err {
                Some(e) => Err(e),
                None => Ok(total),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn band_limited(grid: &Arc<TorusGrid>, kmax: i64, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = vec![Complex64::new(0.0, 0.0); grid.len()];
        for idx in 0..grid.len() {
            let k = grid.wavevector(idx);
            if k[0].abs() <= kmax && k[1].abs() <= kmax {
                modes[idx] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        // Real part of the synthesized field keeps only the Hermitian part.
        let f = ScalarField::from_modes(grid.clone(), &modes).unwrap();
        f.map(|v| v + 3.0)
    }

    #[test]
    fn one_dimensional_closed_form_at_pi() {
        let v = lattice_kernel(&[PI], 1.0, 1, 20).unwrap();
        assert!((v - 0.25).abs() < 1e-12, "{v}");
        // Periodicity and evenness.
        let a = lattice_kernel(&[0.7], 1.3, 1, 20).unwrap();
        let b = lattice_kernel(&[-0.7 + 2.0 * PI], 1.3, 1, 20).unwrap();
        assert!((a - b).abs() < 1e-13 * a);
    }

    #[test]
    fn nearest_image_dominates_near_origin() {
        assert!(lattice_kernel(&[1e-3], 1.0, 1, 20).unwrap() > 1e5);
        assert!(matches!(lattice_kernel(&[0.0], 1.0, 1, 20), Err(Error::SingularPoint)));
        assert!(matches!(lattice_kernel(&[2.0 * PI, 0.0], 1.0, 2, 20), Err(Error::SingularPoint)));
    }

    #[test]
    fn tail_correction_makes_truncation_radius_irrelevant() {
        for (dim, alpha) in [(1, 0.3), (1, 1.7), (2, 0.5), (2, 1.5)] {
            let x = [2.1, -0.4];
            let coarse = lattice_kernel(&x, alpha, dim, 20).unwrap();
            let fine = lattice_kernel(&x, alpha, dim, 60).unwrap();
            assert!((coarse - fine).abs() < 1e-10 * fine, "{dim} {alpha}: {coarse} {fine}");
        }
    }

    #[test]
    fn phi_min_values() {
        let spec = KernelSpec::new(1.0, 1).unwrap();
        assert!((spec.phi_min() - 0.25).abs() < 1e-12);
        for alpha in [0.5, 1.5] {
            for dim in [1, 2] {
                assert!(KernelSpec::new(alpha, dim).unwrap().phi_min() > 0.0);
            }
        }
    }

    #[test]
    fn phi_min_matches_fine_scan() {
        let spec = KernelSpec::new(0.5, 1).unwrap();
        let step = 2.0 * PI / 4096.0;
        let scan = (1..4096)
            .map(|j| spec.kernel_value(&[j as f64 * step]).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!((spec.phi_min() - scan).abs() < 1e-8);
    }

    #[test]
    fn norm_constant_matches_gamma_closed_form() {
        // c(n,α) = π^{n/2} |Γ(−α/2)| / (2^α Γ((n+α)/2))
        for alpha in [0.3, 0.5, 1.0, 1.5, 1.9] {
            for dim in [1usize, 2] {
                let n = dim as f64;
                let closed = PI.powf(0.5 * n) * gamma(-0.5 * alpha).abs()
                    / (2f64.powf(alpha) * gamma(0.5 * (n + alpha)));
                let c = norm_const(dim, alpha).unwrap();
                assert!((c - closed).abs() < 1e-11 * closed, "{dim} {alpha}: {c} {closed}");
            }
        }
    }

    #[test]
    fn multiplier_examples() {
        let g = TorusGrid::new(1, 16).unwrap();
        let t = multiplier_table(1.0, 1, &g).unwrap();
        assert_eq!(t[0], 0.0);
        assert!((t[1] + PI).abs() < 1e-12);
        assert!((t[2] + 2.0 * PI).abs() < 1e-12);
        assert!(multiplier_table(1.0, 2, &g).is_err());
    }

    #[test]
    fn multiplier_is_radial_and_decreasing() {
        let g = TorusGrid::new(2, 32).unwrap();
        let spec = KernelSpec::new(0.7, 2).unwrap();
        let t = spec.multiplier_table(&g).unwrap();
        let mut pairs: Vec<(f64, f64)> = (0..g.len()).map(|i| (g.wavevector_norm(i), t[i])).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pairs.windows(2) {
            if w[1].0 > w[0].0 {
                assert!(w[1].1 < w[0].1);
            } else {
                assert_eq!(w[1].1, w[0].1);
            }
        }
        assert!(pairs[1..].iter().all(|p| p.1 < 0.0));
    }

    #[test]
    fn homogeneity_of_multiplier() {
        for alpha in [0.4, 1.0, 1.8] {
            let spec = KernelSpec::new(alpha, 2).unwrap();
            for k in [[1, 0], [2, 3], [5, -1]] {
                let ratio = spec.multiplier([2 * k[0], 2 * k[1]]) / spec.multiplier(k);
                assert!((ratio - 2f64.powf(alpha)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lphi_examples() {
        let g = TorusGrid::new(1, 64).unwrap();
        let spec = KernelSpec::new(1.0, 1).unwrap();
        let c = ScalarField::constant(g.clone(), 2.0);
        assert!(apply_lphi(&c, &spec).unwrap().max_abs() < 1e-13);
        let cos = ScalarField::from_fn(g.clone(), |x| x[0].cos());
        let l = apply_lphi(&cos, &spec).unwrap();
        assert!(l.sub(&cos.scale(-PI)).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn lphi_is_mean_free_and_negative_semidefinite() {
        for (dim, n) in [(1, 64), (2, 16)] {
            let g = TorusGrid::new(dim, n).unwrap();
            let spec = KernelSpec::new(1.2, dim).unwrap();
            let f = band_limited(&g, 5, 9);
            let lf = apply_lphi(&f, &spec).unwrap();
            assert!(lf.mean().abs() < 1e-13 * lf.max_abs().max(1.0));
            let inner = f.mul(&lf).unwrap().integral();
            assert!(inner < 0.0);
            let k = ScalarField::constant(g.clone(), 1.5);
            let inner0 = k.mul(&apply_lphi(&k, &spec).unwrap()).unwrap().integral();
            assert!(inner0.abs() < 1e-10);
        }
    }

    #[test]
    fn commutator_examples() {
        let g = TorusGrid::new(1, 64).unwrap();
        let spec = KernelSpec::new(1.0, 1).unwrap();
        let rho = band_limited(&g, 8, 1);
        let ubar = VectorField::constant(g.clone(), &[0.7]);
        let c = commutator(&rho, &ubar, &spec).unwrap();
        assert!(c.component(0).max_abs() < 1e-12);

        let one = ScalarField::constant(g.clone(), 1.0);
        let u = VectorField::new(vec![ScalarField::from_fn(g.clone(), |x| x[0].cos())]).unwrap();
        let c = commutator(&one, &u, &spec).unwrap();
        let expect = u.component(0).scale(-PI);
        assert!(c.component(0).sub(&expect).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn commutator_matches_definitional_decomposition() {
        for (dim, n) in [(1, 128), (2, 32)] {
            let g = TorusGrid::new(dim, n).unwrap();
            let spec = KernelSpec::new(0.8, dim).unwrap();
            // Band-limited to N/6 so the two-thirds truncation is inactive.
            let kmax = (n / 6) as i64;
            let rho = band_limited(&g, kmax, 21);
            let u = VectorField::new((0..dim).map(|a| band_limited(&g, kmax, 30 + a as u64)).collect()).unwrap();
            let c = commutator(&rho, &u, &spec).unwrap();
            let l_rho = apply_lphi(&rho, &spec).unwrap();
            for a in 0..dim {
                let ua = u.component(a);
                let direct = apply_lphi(&rho.mul(ua).unwrap(), &spec)
                    .unwrap()
                    .sub(&l_rho.mul(ua).unwrap())
                    .unwrap();
                let scale = direct.max_abs();
                assert!(c.component(a).sub(&direct).unwrap().max_abs() < 1e-12 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn commutator_with_constant_density_is_scaled_lphi() {
        let g = TorusGrid::new(2, 32).unwrap();
        let spec = KernelSpec::new(1.5, 2).unwrap();
        let u = VectorField::new(vec![band_limited(&g, 5, 2), band_limited(&g, 5, 3)]).unwrap();
        let rho = ScalarField::constant(g.clone(), 2.5);
        let c = commutator(&rho, &u, &spec).unwrap();
        for a in 0..2 {
            let expect = apply_lphi(u.component(a), &spec).unwrap().scale(2.5);
            assert!(c.component(a).sub(&expect).unwrap().max_abs() < 1e-12 * expect.max_abs());
        }
    }

    #[test]
    fn dissipation_of_cosine() {
        let g = TorusGrid::new(1, 128).unwrap();
        let spec = KernelSpec::new(1.0, 1).unwrap();
        let f = ScalarField::from_fn(g.clone(), |x| x[0].cos());
        let q = DissipationQuadrature::new(&spec, &g, ShellRule::TaylorProxy).unwrap();
        // ∫ (1 − cos z)²/z² dz = 2π − π
        let d0 = q.evaluate(&f, 0).unwrap();
        assert!((d0 - PI).abs() < 1e-8, "{d0}");
        // the same value at x = π/2, where the gradient is maximal
        let d1 = q.evaluate(&f, 32).unwrap();
        assert!((d1 - PI).abs() < 1e-3, "{d1}");
        let c = ScalarField::constant(g.clone(), 1.0);
        assert_eq!(q.evaluate(&c, 5).unwrap(), 0.0);
    }

    #[test]
    fn dissipation_is_nonnegative_and_shell_exclusion_is_a_lower_bound() {
        let g = TorusGrid::new(2, 16).unwrap();
        let spec = KernelSpec::new(1.3, 2).unwrap();
        let f = band_limited(&g, 4, 77);
        let full = DissipationQuadrature::new(&spec, &g, ShellRule::TaylorProxy).unwrap();
        let lower = DissipationQuadrature::new(&spec, &g, ShellRule::Exclude).unwrap();
        for idx in (0..g.len()).step_by(7) {
            let a = full.evaluate(&f, idx).unwrap();
            let b = lower.evaluate(&f, idx).unwrap();
            assert!(b >= 0.0 && a >= b);
        }
    }

    #[test]
    fn direct_oracle_matches_multiplier() {
        let spec = KernelSpec::new(1.0, 1).unwrap();
        let l1 = direct_lphi_at(|x| x[0].cos(), [0.0; MAX_DIM], &spec).unwrap();
        assert!((l1 + PI).abs() < 1e-8, "{l1}");
        for alpha in [0.5, 1.5] {
            let spec = KernelSpec::new(alpha, 1).unwrap();
            let f = |x: [f64; MAX_DIM]| (2.0 * x[0] + 0.3).sin() + 0.5 * x[0].cos();
            let x: [f64; MAX_DIM] = [0.9, 0.0];
            let exact = -spec.norm_const()
                * (2f64.powf(alpha) * (2.0 * x[0] + 0.3).sin() + 0.5 * x[0].cos());
            let got = direct_lphi_at(f, x, &spec).unwrap();
            assert!((got - exact).abs() < 1e-7 * exact.abs(), "{alpha} {got} {exact}");
        }
    }

    #[test]
    fn direct_oracle_in_two_dimensions() {
        let spec = KernelSpec::with_images(1.0, 2, 6).unwrap();
        let f = |x: [f64; MAX_DIM]| (x[0] + 2.0 * x[1]).cos();
        let x = [0.4, -1.1];
        let exact = -spec.norm_const() * 5f64.powf(0.5) * f(x);
        let got = direct_lphi_at(f, x, &spec).unwrap();
        assert!((got - exact).abs() < 1e-5 * exact.abs(), "{got} {exact}");
    }
}
