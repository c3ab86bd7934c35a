//! Uniform periodic grids on the box [-L, L)^N.
//!
//! Fields live on tensor-product grids with the same point count M per axis.
//! Storage is row-major: axis 0 varies slowest, the last axis is contiguous.
//! Wavenumbers follow the usual FFT layout, index k < M/2 maps to pi*k/L and
//! index k >= M/2 maps to pi*(k - M)/L.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Hard cap on total nodes so a handful of work buffers stays within memory.
pub const MAX_TOTAL_POINTS: usize = 1 << 27;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    points_per_axis: usize,
    half_width: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Validation(format!(
                "grid dim must be 2 or 3, got {dim}"
            )));
        }
        let m = points_per_axis;
        if m < 16 || !m.is_power_of_two() {
            return Err(Error::Validation(format!(
                "points_per_axis must be a power of two >= 16, got {m}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Validation(format!(
                "half_width must be positive and finite, got {half_width}"
            )));
        }
        let total = m.checked_pow(dim as u32).ok_or_else(|| {
            Error::Validation(format!("grid size {m}^{dim} overflows"))
        })?;
        if total > MAX_TOTAL_POINTS {
            return Err(Error::Validation(format!(
                "grid has {total} nodes, beyond the supported {MAX_TOTAL_POINTS}"
            )));
        }
        Ok(GridSpec {
            dim,
            points_per_axis,
            half_width,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Mesh spacing h = 2L/M.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    pub fn node_count(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    /// Quadrature weight h^N of one node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Physical coordinate of axis index i, in [-L, L).
    #[inline]
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Signed integer frequency for FFT bin i, in [-M/2, M/2).
    #[inline]
    pub fn signed_index(&self, i: usize) -> i64 {
        let m = self.points_per_axis;
        if i < m / 2 {
            i as i64
        } else {
            i as i64 - m as i64
        }
    }

    /// Physical wavenumber pi * signed_index / L for FFT bin i.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        std::f64::consts::PI * self.signed_index(i) as f64 / self.half_width
    }

    /// Largest represented wavenumber magnitude per axis, pi*(M/2)/L.
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI * (self.points_per_axis as f64 / 2.0) / self.half_width
    }

    /// Axis indices of a flat row-major node index. Only the first `dim`
    /// entries of `out` are meaningful.
    #[inline]
    pub fn unravel(&self, flat: usize, out: &mut [usize; 3]) {
        let m = self.points_per_axis;
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            out[a] = rem % m;
            rem /= m;
        }
        debug_assert_eq!(rem, 0);
    }

    /// Physical coordinates of a flat node index.
    #[inline]
    pub fn coords_of(&self, flat: usize, out: &mut [f64; 3]) {
        let mut idx = [0usize; 3];
        self.unravel(flat, &mut idx);
        for a in 0..self.dim {
            out[a] = self.axis_coord(idx[a]);
        }
        for entry in out.iter_mut().skip(self.dim) {
            *entry = 0.0;
        }
    }

    /// Row-major stride of an axis: M^(dim-1-axis).
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.dim - 1 - axis) as u32)
    }
}
