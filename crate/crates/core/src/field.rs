//! Complex scalar fields sampled on a [`GridSpec`].
//!
//! All integrals use the trapezoid-free periodic quadrature h^N * sum, which
//! is spectrally accurate for fields that decay inside the box. The real
//! L2 pairing used for differentials is re <u, v> = h^N * sum re(conj(u) v).

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use num_complex::Complex64;

pub type C64 = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: GridSpec,
    values: Vec<C64>,
}

impl WaveField {
    pub fn zeros(grid: GridSpec) -> Self {
        WaveField {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.node_count()],
        }
    }

    /// Builds a field by evaluating `f` at every node. The slice passed to
    /// `f` holds `grid.dim()` coordinates.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(&[f64]) -> C64) -> Self {
        let mut values = Vec::with_capacity(grid.node_count());
        let mut x = [0.0f64; 3];
        for flat in 0..grid.node_count() {
            grid.coords_of(flat, &mut x);
            values.push(f(&x[..grid.dim()]));
        }
        WaveField { grid, values }
    }

    pub fn from_values(grid: GridSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Validation(format!(
                "value buffer holds {} entries, grid needs {}",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(WaveField { grid, values })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    /// ||u||_2^2 = h^N sum |u|^2.
    pub fn mass(&self) -> f64 {
        let s: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        s * self.grid.cell_volume()
    }

    /// Complex pairing <u, v> = h^N sum conj(u) v.
    pub fn inner(&self, other: &WaveField) -> C64 {
        debug_assert_eq!(self.grid, other.grid);
        let mut acc = C64::new(0.0, 0.0);
        for (a, b) in self.values.iter().zip(&other.values) {
            acc += a.conj() * b;
        }
        acc * self.grid.cell_volume()
    }

    /// Real pairing re <u, v>, the inner product behind all differentials.
    pub fn inner_re(&self, other: &WaveField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let mut acc = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            acc += a.re * b.re + a.im * b.im;
        }
        acc * self.grid.cell_volume()
    }

    /// ||u||_p^p = h^N sum |u|^p on raw point values.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        let s: f64 = if p == 4.0 {
            self.values.iter().map(|z| z.norm_sqr().powi(2)).sum()
        } else if p == 6.0 {
            self.values.iter().map(|z| z.norm_sqr().powi(3)).sum()
        } else {
            self.values
                .iter()
                .map(|z| z.norm_sqr().powf(0.5 * p))
                .sum()
        };
        s * self.grid.cell_volume()
    }

    /// ||x u||_2^2 = h^N sum |x|^2 |u|^2, the trap moment.
    pub fn xweighted_sq(&self) -> f64 {
        let mut x = [0.0f64; 3];
        let mut acc = 0.0;
        for (flat, z) in self.values.iter().enumerate() {
            self.grid.coords_of(flat, &mut x);
            let r2: f64 = x[..self.grid.dim()].iter().map(|c| c * c).sum();
            acc += r2 * z.norm_sqr();
        }
        acc * self.grid.cell_volume()
    }

    /// h^N sum (x1^2 + x2^2) |u|^2: the moment seen by the rotation axis.
    /// Coincides with `xweighted_sq` in two dimensions.
    pub fn inplane_weighted_sq(&self) -> f64 {
        let mut x = [0.0f64; 3];
        let mut acc = 0.0;
        for (flat, z) in self.values.iter().enumerate() {
            self.grid.coords_of(flat, &mut x);
            acc += (x[0] * x[0] + x[1] * x[1]) * z.norm_sqr();
        }
        acc * self.grid.cell_volume()
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, s: C64) {
        for z in &mut self.values {
            *z *= s;
        }
    }

    /// self += s * other.
    pub fn axpy(&mut self, s: C64, other: &WaveField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    /// Returns a copy rescaled so its mass equals `c` exactly.
    pub fn renormalized(&self, c: f64) -> Result<WaveField> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Validation(format!(
                "target mass must be positive, got {c}"
            )));
        }
        let m = self.mass();
        if !m.is_finite() {
            return Err(Error::NonFinite("field mass".into()));
        }
        if m <= 0.0 {
            return Err(Error::Validation(
                "cannot renormalize the zero field".into(),
            ));
        }
        let mut out = self.clone();
        out.scale(C64::new((c / m).sqrt(), 0.0));
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(context.to_string()))
        }
    }

    /// Mass fraction sitting on the outermost layer of nodes (any axis index
    /// 0 or M-1 after shifting so the layer hugs both box faces). Used by
    /// leak monitors: a confined state keeps this at round-off level.
    pub fn boundary_shell_fraction(&self) -> f64 {
        let m = self.grid.points_per_axis();
        let mut idx = [0usize; 3];
        let mut shell = 0.0;
        let mut total = 0.0;
        for (flat, z) in self.values.iter().enumerate() {
            let w = z.norm_sqr();
            total += w;
            self.grid.unravel(flat, &mut idx);
            let on_edge = idx[..self.grid.dim()]
                .iter()
                .any(|&i| i == 0 || i + 1 == m);
            if on_edge {
                shell += w;
            }
        }
        if total > 0.0 {
            shell / total
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::hermite_ground;
    use approx::assert_relative_eq;

    fn grid2() -> GridSpec {
        GridSpec::new(2, 64, 8.0).unwrap()
    }

    #[test]
    fn ground_state_mass_is_one() {
        for (dim, m, l) in [(2usize, 64usize, 8.0), (3, 32, 6.0)] {
            let g = GridSpec::new(dim, m, l).unwrap();
            let psi = hermite_ground(g);
            assert_relative_eq!(psi.mass(), 1.0, max_relative = 1e-12);
            assert_relative_eq!(
                psi.xweighted_sq(),
                dim as f64 / 2.0,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn lp_norms_match_gaussian_closed_form() {
        let g = grid2();
        let psi = hermite_ground(g);
        // ||psi0||_p^p = pi^(-Np/4) (2 pi / p)^(N/2)
        for p in [4.0, 6.0, 3.0] {
            let n = 2.0;
            let expect = std::f64::consts::PI.powf(-n * p / 4.0)
                * (2.0 * std::f64::consts::PI / p).powf(n / 2.0);
            assert_relative_eq!(psi.lp_norm_pow(p), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn renormalize_hits_target_mass() {
        let g = grid2();
        let psi = hermite_ground(g);
        let u = psi.renormalized(0.37).unwrap();
        assert_relative_eq!(u.mass(), 0.37, max_relative = 1e-14);
        assert!(WaveField::zeros(g).renormalized(1.0).is_err());
        assert!(psi.renormalized(-1.0).is_err());
    }

    #[test]
    fn inner_products_are_consistent() {
        let g = grid2();
        let u = WaveField::from_fn(g, |x| C64::new(x[0].cos(), x[1].sin()));
        let v = WaveField::from_fn(g, |x| C64::new((x[0] * x[1]).tanh(), 0.3));
        assert_relative_eq!(u.inner(&v).re, u.inner_re(&v), max_relative = 1e-12);
        assert_relative_eq!(u.inner(&u).re, u.mass(), max_relative = 1e-12);
        assert!(u.inner(&u).im.abs() < 1e-14 * u.mass());
    }

    #[test]
    fn finite_check_flags_nan() {
        let g = grid2();
        let mut u = hermite_ground(g);
        assert!(u.check_finite("test").is_ok());
        u.values_mut()[5] = C64::new(f64::NAN, 0.0);
        assert!(u.check_finite("test").is_err());
    }

    #[test]
    fn boundary_shell_tiny_for_confined_state() {
        let g = grid2();
        let psi = hermite_ground(g);
        assert!(psi.boundary_shell_fraction() < 1e-20);
    }
}
