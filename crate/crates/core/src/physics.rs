//! Model parameters for the rotating attractive Gross-Pitaevskii equation
//!
//!   i dt psi = -1/2 Lap psi + |x|^2/2 psi - Omega Lz psi - a |psi|^(p-2) psi
//!
//! in dimension N in {2, 3}, with rotation speed |Omega| in [0, 1) about the
//! x3 axis (counterclockwise in the x1-x2 plane) and focusing strength a >= 0.
//! The admissible power range is mass-critical and up to the energy-critical
//! boundary: 2 + 4/N <= p < 2N/(N-2) for N = 3, with a finite cap for N = 2.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Practical upper bound on p for N = 2 where 2N/(N-2) is infinite.
pub const MAX_P_2D: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    dim: usize,
    a: f64,
    p: f64,
    omega_mag: f64,
}

impl PhysicsParams {
    pub fn new(dim: usize, a: f64, p: f64, omega_mag: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Validation(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::Validation(format!(
                "focusing strength a must be >= 0, got {a}"
            )));
        }
        let p_min = 2.0 + 4.0 / dim as f64;
        let p_max = if dim == 2 {
            MAX_P_2D
        } else {
            2.0 * dim as f64 / (dim as f64 - 2.0)
        };
        if !(p.is_finite() && p >= p_min && p < p_max) {
            return Err(Error::Validation(format!(
                "power p must satisfy {p_min} <= p < {p_max} in dimension {dim}, got {p}"
            )));
        }
        if !(omega_mag.is_finite() && (0.0..1.0).contains(&omega_mag)) {
            return Err(Error::Validation(format!(
                "rotation speed must satisfy 0 <= |Omega| < 1, got {omega_mag}"
            )));
        }
        Ok(PhysicsParams {
            dim,
            a,
            p,
            omega_mag,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn omega_mag(&self) -> f64 {
        self.omega_mag
    }

    /// Copy with a different focusing strength, e.g. the a = 0 control.
    pub fn with_a(&self, a: f64) -> Result<Self> {
        PhysicsParams::new(self.dim, a, self.p, self.omega_mag)
    }

    /// Scaling exponent delta_p = N(p-2)/(2p) in [2/p, 1).
    pub fn delta_p(&self) -> f64 {
        self.dim as f64 * (self.p - 2.0) / (2.0 * self.p)
    }

    /// p * delta_p, the dilation power of the focusing term; > 2 means
    /// mass-supercritical.
    pub fn p_delta(&self) -> f64 {
        self.p * self.delta_p()
    }

    /// True when p is an even integer, which lets the nonlinear term be
    /// evaluated alias-free with a 2/3-rule filter.
    pub fn p_is_even_integer(&self) -> bool {
        let rounded = self.p.round();
        (self.p - rounded).abs() < 1e-12 && (rounded as i64) % 2 == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn admits_critical_through_subcritical_powers() {
        assert!(PhysicsParams::new(2, 1.0, 4.0, 0.3).is_ok());
        assert!(PhysicsParams::new(2, 1.0, 6.0, 0.0).is_ok());
        assert!(PhysicsParams::new(3, 1.0, 10.0 / 3.0, 0.5).is_ok());
        assert!(PhysicsParams::new(3, 1.0, 4.0, 0.9).is_ok());
        assert!(PhysicsParams::new(3, 0.0, 4.0, 0.0).is_ok());

        assert!(PhysicsParams::new(3, 1.0, 6.0, 0.1).is_err()); // energy critical
        assert!(PhysicsParams::new(3, 1.0, 3.0, 0.1).is_err()); // below critical
        assert!(PhysicsParams::new(2, 1.0, 4.0, 1.0).is_err()); // |Omega| = 1
        assert!(PhysicsParams::new(2, -1.0, 4.0, 0.1).is_err());
        assert!(PhysicsParams::new(4, 1.0, 3.0, 0.1).is_err());
    }

    #[test]
    fn delta_p_values() {
        let q = PhysicsParams::new(3, 1.0, 4.0, 0.1).unwrap();
        assert_relative_eq!(q.delta_p(), 0.75);
        assert_relative_eq!(q.p_delta(), 3.0);
        let q = PhysicsParams::new(2, 1.0, 4.0, 0.1).unwrap();
        assert_relative_eq!(q.delta_p(), 0.5);
        assert_relative_eq!(q.p_delta(), 2.0);
        let q = PhysicsParams::new(2, 1.0, 6.0, 0.1).unwrap();
        assert_relative_eq!(q.delta_p(), 2.0 / 3.0);
        assert_relative_eq!(q.p_delta(), 4.0);
    }

    #[test]
    fn even_power_detection() {
        assert!(PhysicsParams::new(3, 1.0, 4.0, 0.0)
            .unwrap()
            .p_is_even_integer());
        assert!(PhysicsParams::new(2, 1.0, 6.0, 0.0)
            .unwrap()
            .p_is_even_integer());
        assert!(!PhysicsParams::new(3, 1.0, 3.5, 0.0)
            .unwrap()
            .p_is_even_integer());
        assert!(!PhysicsParams::new(2, 1.0, 5.0, 0.0)
            .unwrap()
            .p_is_even_integer());
    }
}
