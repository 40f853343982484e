use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest supported spatial dimension. Points and wavevectors are stored as
/// `[_; MAX_DIM]` with unused trailing entries set to zero.
pub const MAX_DIM: usize = 2;

/// Uniform periodic lattice on `[0, 2π)^dim` together with its transform plans.
///
/// Node `(i0, i1)` sits at `(i0·Δ, i1·Δ)` and is stored at flat index
/// `i0·N + i1` (row-major, axis 1 contiguous). Spectral arrays use the same
/// layout, with index `i` along an axis carrying wavenumber `i` for
/// `i ≤ N/2` and `i − N` otherwise.
pub struct TorusGrid {
    dim: usize,
    n: usize,
    spacing: f64,
    dealias_mask: Vec<bool>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl TorusGrid {
    pub fn new(dim: usize, points_per_dim: usize) -> Result<Arc<Self>> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2 (got {dim})")));
        }
        if points_per_dim < 16 || !points_per_dim.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per dimension must be a power of two >= 16 (got {points_per_dim})"
            )));
        }
        let n = points_per_dim;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);

        let mut grid = TorusGrid {
            dim,
            n,
            spacing: 2.0 * PI / n as f64,
            dealias_mask: Vec::new(),
            fft,
            ifft,
        };
        // Two-thirds rule: drop any mode with |k_i| > N/3 on some axis.
        let cutoff = n as f64 / 3.0;
        grid.dealias_mask = (0..grid.len())
            .map(|idx| {
                let k = grid.wavevector(idx);
                k[..dim].iter().all(|&ki| (ki.abs() as f64) <= cutoff)
            })
            .collect();
        Ok(Arc::new(grid))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of nodes, `N^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of the torus, `(2π)^dim`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Quadrature weight of a single node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Signed wavenumber carried by index `i` along one axis, in `(−N/2, N/2]`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    /// True when `k` is the unpaired Nyquist wavenumber `N/2`.
    pub fn is_nyquist(&self, k: i64) -> bool {
        k == self.n as i64 / 2
    }

    pub fn multi_index(&self, idx: usize) -> [usize; MAX_DIM] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.n, idx % self.n],
        }
    }

    pub fn flat_index(&self, multi: [usize; MAX_DIM]) -> usize {
        match self.dim {
            1 => multi[0],
            _ => multi[0] * self.n + multi[1],
        }
    }

    pub fn wavevector(&self, idx: usize) -> [i64; MAX_DIM] {
        let m = self.multi_index(idx);
        let mut k = [0; MAX_DIM];
        for a in 0..self.dim {
            k[a] = self.wavenumber(m[a]);
        }
        k
    }

    /// Index of the mode `−k` paired with mode `idx`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let m = self.multi_index(idx);
        let mut out = [0usize; MAX_DIM];
        for a in 0..self.dim {
            out[a] = (self.n - m[a]) % self.n;
        }
        self.flat_index(out)
    }

    pub fn wavevector_norm(&self, idx: usize) -> f64 {
        let k = self.wavevector(idx);
        ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt()
    }

    pub fn node(&self, idx: usize) -> [f64; MAX_DIM] {
        let m = self.multi_index(idx);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = m[a] as f64 * self.spacing;
        }
        x
    }

    /// Flat index of the node reached from `idx` by moving `offsets` lattice
    /// steps (periodically wrapped).
    pub fn shifted_index(&self, idx: usize, offsets: [i64; MAX_DIM]) -> usize {
        let n = self.n as i64;
        let m = self.multi_index(idx);
        let mut out = [0usize; MAX_DIM];
        for a in 0..self.dim {
            out[a] = (m[a] as i64 + offsets[a]).rem_euclid(n) as usize;
        }
        self.flat_index(out)
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias_mask
    }

    /// Zeroes every mode outside the two-thirds band.
    pub fn dealias(&self, modes: &mut [Complex64]) {
        for (m, keep) in modes.iter_mut().zip(&self.dealias_mask) {
            if !keep {
                *m = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Forward DFT normalized so that mode 0 equals the spatial mean.
    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.len());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform_in_place(&mut buf, &self.fft);
        let scale = 1.0 / self.len() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    /// Inverse of [`TorusGrid::forward`]; the imaginary part is discarded.
    pub(crate) fn backward(&self, modes: &[Complex64]) -> Vec<f64> {
        debug_assert_eq!(modes.len(), self.len());
        let mut buf = modes.to_vec();
        self.transform_in_place(&mut buf, &self.ifft);
        buf.into_iter().map(|c| c.re).collect()
    }

    fn transform_in_place(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        plan.process(buf);
        if self.dim == 2 {
            transpose_square(buf, self.n);
            plan.process(buf);
            transpose_square(buf, self.n);
        }
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}
