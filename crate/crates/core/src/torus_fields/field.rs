use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::grid::{TorusGrid, MAX_DIM};
use crate::error::{Error, Result};

/// Real samples of a periodic function on a [`TorusGrid`], with a lazily
/// computed spectral representation.
///
/// Every operation returns a new field, so a cached spectrum can never go
/// stale; [`ScalarField::values_mut`] drops the cache before handing out
/// mutable access.
#[derive(Clone)]
pub struct ScalarField {
    grid: Arc<TorusGrid>,
    values: Vec<f64>,
    modes: OnceLock<Vec<Complex64>>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("grid", &self.grid)
            .field("len", &self.values.len())
            .finish()
    }
}

/// A lattice offset `h = (h_0, …)·Δ` used by finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridShift {
    offsets: [i64; MAX_DIM],
    length: f64,
}

impl GridShift {
    /// Builds a shift from integer lattice offsets, reduced into `(−N/2, N/2]`.
    pub fn new(grid: &TorusGrid, offsets: &[i64]) -> Result<Self> {
        if offsets.len() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "shift has {} offsets for a {}-dimensional grid",
                offsets.len(),
                grid.dim()
            )));
        }
        let n = grid.points_per_dim() as i64;
        let mut reduced = [0i64; MAX_DIM];
        for (r, &o) in reduced.iter_mut().zip(offsets) {
            let mut v = o.rem_euclid(n);
            if v > n / 2 {
                v -= n;
            }
            *r = v;
        }
        if reduced.iter().all(|&v| v == 0) {
            return Err(Error::ZeroShift);
        }
        let steps = ((reduced[0] * reduced[0] + reduced[1] * reduced[1]) as f64).sqrt();
        Ok(GridShift {
            offsets: reduced,
            length: steps * grid.spacing(),
        })
    }

    pub fn offsets(&self) -> [i64; MAX_DIM] {
        self.offsets
    }

    pub fn scaled(&self, factor: i64) -> [i64; MAX_DIM] {
        [self.offsets[0] * factor, self.offsets[1] * factor]
    }

    /// `|h|` in the torus metric.
    pub fn as_length(&self) -> f64 {
        self.length
    }
}

fn same_grid(a: &TorusGrid, b: &TorusGrid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "dim={} N={} vs dim={} N={}",
            a.dim(),
            a.points_per_dim(),
            b.dim(),
            b.points_per_dim()
        )))
    }
}

impl ScalarField {
    pub fn new(grid: Arc<TorusGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField {
            grid,
            values,
            modes: OnceLock::new(),
        })
    }

    pub fn constant(grid: Arc<TorusGrid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        ScalarField {
            grid,
            values,
            modes: OnceLock::new(),
        }
    }

    pub fn from_fn(grid: Arc<TorusGrid>, f: impl Fn([f64; MAX_DIM]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        ScalarField {
            grid,
            values,
            modes: OnceLock::new(),
        }
    }

    /// Synthesizes a field from spectral modes (normalized as in
    /// [`ScalarField::modes`]). Imaginary residue is discarded.
    pub fn from_modes(grid: Arc<TorusGrid>, modes: &[Complex64]) -> Result<Self> {
        if modes.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} modes for a grid of {} nodes",
                modes.len(),
                grid.len()
            )));
        }
        let values = grid.backward(modes);
        Ok(ScalarField {
            grid,
            values,
            modes: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Mutable node access; invalidates the cached spectrum.
    pub fn values_mut(&mut self) -> &mut [f64] {
        self.modes = OnceLock::new();
        &mut self.values
    }

    /// Spectral coefficients, normalized so that mode 0 is the spatial mean.
    pub fn modes(&self) -> &[Complex64] {
        self.modes.get_or_init(|| self.grid.forward(&self.values))
    }

    pub fn ensure_same_grid(&self, other: &ScalarField) -> Result<()> {
        same_grid(&self.grid, &other.grid)
    }

    /// Applies a Fourier multiplier `m(k)` mode by mode.
    pub fn apply_multiplier(&self, m: impl Fn(usize, [i64; MAX_DIM]) -> Complex64) -> Self {
        let modes: Vec<Complex64> = self
            .modes()
            .iter()
            .enumerate()
            .map(|(idx, &c)| c * m(idx, self.grid.wavevector(idx)))
            .collect();
        // Keep the spectrum of the real part, which is what the nodes hold.
        let real: Vec<Complex64> = (0..modes.len())
            .map(|idx| {
                let partner = self.grid.conjugate_index(idx);
                if partner == idx {
                    Complex64::new(modes[idx].re, 0.0)
                } else {
                    0.5 * (modes[idx] + modes[partner].conj())
                }
            })
            .collect();
        ScalarField {
            values: self.grid.backward(&real),
            grid: self.grid.clone(),
            modes: OnceLock::from(real),
        }
    }

    /// Spectral partial derivative along `axis`. The Nyquist mode of that axis
    /// is dropped so the result stays real.
    pub fn derivative(&self, axis: usize) -> Result<Self> {
        if axis >= self.grid.dim() {
            return Err(Error::InvalidAxis {
                axis,
                dim: self.grid.dim(),
            });
        }
        let grid = self.grid.clone();
        Ok(self.apply_multiplier(|_, k| {
            if grid.is_nyquist(k[axis]) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k[axis] as f64)
            }
        }))
    }

    /// `x ↦ f(x + v)` for an arbitrary real shift, via the phase `e^{ik·v}`.
    pub fn translate(&self, v: &[f64]) -> Self {
        if v.iter().all(|&c| c == 0.0) {
            return self.clone();
        }
        let dim = self.grid.dim();
        self.apply_multiplier(|_, k| {
            let phase: f64 = (0..dim).map(|a| k[a] as f64 * v[a]).sum();
            Complex64::from_polar(1.0, phase)
        })
    }

    /// `x ↦ f(x + h)` for a lattice offset, by index rotation.
    pub fn rotate(&self, offsets: [i64; MAX_DIM]) -> Self {
        let values = (0..self.values.len())
            .map(|i| self.values[self.grid.shifted_index(i, offsets)])
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
            modes: OnceLock::new(),
        }
    }

    /// `δ_h^order f`, with `δ_h f(x) = f(x+h) − f(x)`.
    pub fn finite_difference(&self, h: &GridShift, order: usize) -> Result<Self> {
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidOrder(order));
        }
        let mut out = self.clone();
        for _ in 0..order {
            let shifted = out.rotate(h.offsets());
            out = shifted.sub(&out)?;
        }
        Ok(out)
    }

    /// Truncates to the two-thirds band.
    pub fn dealiased(&self) -> Self {
        let mut modes = self.modes().to_vec();
        self.grid.dealias(&mut modes);
        ScalarField {
            values: self.grid.backward(&modes),
            grid: self.grid.clone(),
            modes: OnceLock::from(modes),
        }
    }

    fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(ScalarField {
            grid: self.grid.clone(),
            values,
            modes: OnceLock::new(),
        })
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self + factor·other`.
    pub fn axpy(&self, factor: f64, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a + factor * b)
    }

    /// Pointwise product, optionally truncated to the two-thirds band.
    pub fn product(&self, other: &ScalarField, dealias: bool) -> Result<Self> {
        let p = self.mul(other)?;
        Ok(if dealias { p.dealiased() } else { p })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            modes: OnceLock::new(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Spatial mean, read off mode 0.
    pub fn mean(&self) -> f64 {
        self.modes()[0].re
    }

    /// `∫_{T^n} f dx`, equal to the rectangle rule up to roundoff.
    pub fn integral(&self) -> f64 {
        self.mean() * self.grid.volume()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Forward transform of `f` (mode 0 equals the mean of `f`).
pub fn transform_forward(f: &ScalarField) -> Vec<Complex64> {
    f.modes().to_vec()
}

/// Inverse of [`transform_forward`].
pub fn transform_backward(grid: &Arc<TorusGrid>, modes: &[Complex64]) -> Result<ScalarField> {
    ScalarField::from_modes(grid.clone(), modes)
}

/// `dim` scalar components on one shared grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::GridMismatch("vector field with no components".into()))?;
        if components.len() != first.grid().dim() {
            return Err(Error::GridMismatch(format!(
                "{} components on a {}-dimensional grid",
                components.len(),
                first.grid().dim()
            )));
        }
        for c in &components[1..] {
            first.ensure_same_grid(c)?;
        }
        Ok(VectorField { components })
    }

    pub fn constant(grid: Arc<TorusGrid>, v: &[f64]) -> Self {
        let components = (0..grid.dim())
            .map(|a| ScalarField::constant(grid.clone(), v[a]))
            .collect();
        VectorField { components }
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, axis: usize) -> &ScalarField {
        &self.components[axis]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        VectorField {
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn try_map_components(
        &self,
        f: impl Fn(usize, &ScalarField) -> Result<ScalarField>,
    ) -> Result<Self> {
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(a, c)| f(a, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField { components })
    }

    pub fn divergence(&self) -> Result<ScalarField> {
        let mut acc = self.components[0].derivative(0)?;
        for (a, c) in self.components.iter().enumerate().skip(1) {
            acc = acc.add(&c.derivative(a)?)?;
        }
        Ok(acc)
    }

    pub fn translate(&self, v: &[f64]) -> Self {
        self.map_components(|c| c.translate(v))
    }

    /// Euclidean norm at node `idx`.
    pub fn norm_at(&self, idx: usize) -> f64 {
        self.components
            .iter()
            .map(|c| c.values()[idx].powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `max_x |v(x)|` in the Euclidean norm.
    pub fn max_norm(&self) -> f64 {
        (0..self.grid().len()).fold(0.0, |m, i| m.max(self.norm_at(i)))
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn grid1(n: usize) -> Arc<TorusGrid> {
        TorusGrid::new(1, n).unwrap()
    }

    fn random_field(grid: &Arc<TorusGrid>, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ScalarField::new(grid.clone(), v).unwrap()
    }

    fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn constant_field_has_only_mean_mode() {
        let g = grid1(32);
        let f = ScalarField::constant(g.clone(), 2.5);
        let m = f.modes();
        assert!((m[0].re - 2.5).abs() < 1e-15);
        assert!(m[1..].iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn cosine_has_modes_plus_minus_one() {
        let g = grid1(64);
        let f = ScalarField::from_fn(g.clone(), |x| x[0].cos());
        for (i, c) in f.modes().iter().enumerate() {
            let k = g.wavenumber(i);
            if k.abs() == 1 {
                assert!((c.re - 0.5).abs() < 1e-14 && c.im.abs() < 1e-14);
            } else {
                assert!(c.norm() < 1e-14, "mode {k} = {c}");
            }
        }
    }

    #[test]
    fn round_trip_is_identity() {
        for (dim, n) in [(1, 128), (2, 32)] {
            let g = TorusGrid::new(dim, n).unwrap();
            let f = random_field(&g, 7);
            let back = transform_backward(&g, &transform_forward(&f)).unwrap();
            assert!(max_diff(&f, &back) < 1e-12 * f.max_abs());
        }
    }

    #[test]
    fn real_field_modes_are_conjugate_symmetric() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = random_field(&g, 3);
        let m = f.modes();
        for idx in 0..g.len() {
            let [i0, i1] = g.multi_index(idx);
            let partner = g.flat_index([(16 - i0) % 16, (16 - i1) % 16]);
            assert!((m[idx] - m[partner].conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn mismatched_sizes_are_rejected() {
        let g = grid1(16);
        assert!(ScalarField::new(g.clone(), vec![0.0; 15]).is_err());
        assert!(ScalarField::from_modes(g.clone(), &[Complex64::new(0.0, 0.0); 17]).is_err());
        let other = ScalarField::constant(grid1(32), 1.0);
        assert!(ScalarField::constant(g, 1.0).add(&other).is_err());
    }

    #[test]
    fn derivative_of_sine_and_constant() {
        let g = grid1(64);
        let s = ScalarField::from_fn(g.clone(), |x| x[0].sin());
        let c = ScalarField::from_fn(g.clone(), |x| x[0].cos());
        assert!(max_diff(&s.derivative(0).unwrap(), &c) < 1e-12);
        let k = ScalarField::constant(g.clone(), 4.0);
        assert!(k.derivative(0).unwrap().max_abs() < 1e-12);
        assert!(matches!(s.derivative(1), Err(Error::InvalidAxis { .. })));
    }

    #[test]
    fn divergence_in_two_dimensions() {
        let g = TorusGrid::new(2, 32).unwrap();
        let u = VectorField::new(vec![
            ScalarField::from_fn(g.clone(), |x| x[0].sin()),
            ScalarField::from_fn(g.clone(), |x| x[1].sin()),
        ])
        .unwrap();
        let expect = ScalarField::from_fn(g.clone(), |x| x[0].cos() + x[1].cos());
        assert!(max_diff(&u.divergence().unwrap(), &expect) < 1e-12);
    }

    #[test]
    fn translate_examples() {
        let g = grid1(64);
        let cos = ScalarField::from_fn(g.clone(), |x| x[0].cos());
        let shifted = cos.translate(&[PI]);
        assert!(max_diff(&shifted, &cos.scale(-1.0)) < 1e-12);
        assert!(max_diff(&cos.translate(&[0.0]), &cos) < 1e-14);

        let sin = ScalarField::from_fn(g.clone(), |x| x[0].sin());
        let analytic = ScalarField::from_fn(g.clone(), |x| (x[0] + PI / 2.0).sin());
        assert!(max_diff(&sin.translate(&[PI / 2.0]), &analytic) < 1e-12);
    }

    #[test]
    fn lattice_translation_equals_rotation() {
        let g = TorusGrid::new(2, 32).unwrap();
        let f = random_field(&g, 11);
        let h = g.spacing();
        let a = f.translate(&[3.0 * h, -5.0 * h]);
        let b = f.rotate([3, -5]);
        assert!(max_diff(&a, &b) < 1e-13);
    }

    #[test]
    fn finite_difference_of_constant_is_zero() {
        let g = grid1(32);
        let f = ScalarField::constant(g.clone(), 3.0);
        let h = GridShift::new(&g, &[5]).unwrap();
        for order in 1..=3 {
            assert_eq!(f.finite_difference(&h, order).unwrap().max_abs(), 0.0);
        }
        assert!(matches!(f.finite_difference(&h, 4), Err(Error::InvalidOrder(4))));
        assert!(matches!(GridShift::new(&g, &[32]), Err(Error::ZeroShift)));
    }

    #[test]
    fn third_difference_of_harmonic_has_closed_form_magnitude() {
        let g = grid1(64);
        let k = 3.0;
        let c = ScalarField::from_fn(g.clone(), |x| (k * x[0]).cos());
        let s = ScalarField::from_fn(g.clone(), |x| (k * x[0]).sin());
        for m in [1i64, 4, 13] {
            let h = GridShift::new(&g, &[m]).unwrap();
            let dc = c.finite_difference(&h, 3).unwrap();
            let ds = s.finite_difference(&h, 3).unwrap();
            // (e^{ikh} − 1)^3 has modulus |2 sin(kh/2)|^3
            let expect = (2.0 * (k * h.as_length() / 2.0).sin()).abs().powi(3);
            for i in 0..g.len() {
                let mag = (dc.values()[i].powi(2) + ds.values()[i].powi(2)).sqrt();
                assert!((mag - expect).abs() < 1e-12, "{mag} vs {expect}");
            }
        }
    }

    #[test]
    fn second_difference_matches_direct_stencil() {
        let g = grid1(128);
        let bump = |x: f64| (-(x - PI).powi(2) * 4.0).exp();
        let f = ScalarField::from_fn(g.clone(), |x| bump(x[0]));
        let h = GridShift::new(&g, &[1]).unwrap();
        let d2 = f.finite_difference(&h, 2).unwrap();
        let n = g.len();
        let v = f.values();
        for i in 0..n {
            let direct = v[(i + 2) % n] - 2.0 * v[(i + 1) % n] + v[i];
            assert!((d2.values()[i] - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn leibniz_rule_for_third_differences() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = random_field(&g, 1);
        let q = random_field(&g, 2);
        let h = GridShift::new(&g, &[2, -1]).unwrap();
        let d = |x: &ScalarField, o| x.finite_difference(&h, o).unwrap();
        let tau = |x: &ScalarField, m| x.rotate(h.scaled(m));

        let lhs = d(&f.mul(&q).unwrap(), 3);
        let t1 = d(&f, 3).mul(&tau(&q, 3)).unwrap();
        let t2 = d(&f, 2).mul(&d(&tau(&q, 2), 1)).unwrap().scale(3.0);
        let t3 = d(&f, 1).mul(&d(&tau(&q, 1), 2)).unwrap().scale(3.0);
        let t4 = f.mul(&d(&q, 3)).unwrap();
        let rhs = t1.add(&t2).unwrap().add(&t3).unwrap().add(&t4).unwrap();
        assert!(max_diff(&lhs, &rhs) < 1e-10);
    }
}
