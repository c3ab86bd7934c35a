//! Closed-form reference states and random test fields.
//!
//! The harmonic-oscillator eigenfunctions here anchor most analytic checks:
//! the ground Gaussian psi0 with unit mass, the first excited mode along
//! axis 0, and the unit-winding vortex mode which diagonalizes the angular
//! momentum operator.

use crate::field::{C64, WaveField};
use crate::grid::GridSpec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Normalized oscillator ground state pi^(-N/4) exp(-|x|^2/2).
pub fn hermite_ground(grid: GridSpec) -> WaveField {
    let n = grid.dim() as f64;
    let norm = PI.powf(-n / 4.0);
    WaveField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        C64::new(norm * (-0.5 * r2).exp(), 0.0)
    })
}

/// Normalized first excited state sqrt(2) x1 psi0, oscillator level N+2.
pub fn hermite_excited(grid: GridSpec) -> WaveField {
    let n = grid.dim() as f64;
    let norm = 2.0f64.sqrt() * PI.powf(-n / 4.0);
    WaveField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        C64::new(norm * x[0] * (-0.5 * r2).exp(), 0.0)
    })
}

/// Unnormalized vortex mode (x1 + i x2) exp(-|x|^2/2).
///
/// Eigenvector of the angular momentum operator with eigenvalue +1 and of
/// the oscillator Hamiltonian with level N+2; its mass is pi^(N/2).
pub fn vortex_mode(grid: GridSpec) -> WaveField {
    WaveField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        C64::new(x[0], x[1]) * (-0.5 * r2).exp()
    })
}

/// Centered isotropic Gaussian exp(-alpha |x|^2), unnormalized.
pub fn gaussian_envelope(grid: GridSpec, alpha: f64) -> WaveField {
    WaveField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        C64::new((-alpha * r2).exp(), 0.0)
    })
}

/// Projection coefficient <psi0, u> onto the oscillator ground state.
pub fn project_l0(u: &WaveField) -> C64 {
    hermite_ground(u.grid()).inner(u)
}

/// Random smooth trial field: Gaussian envelope times a random quadratic
/// polynomial plus a random plane wave. Stays well resolved on any grid
/// this crate accepts, with generic asymmetry in both components of x.
pub fn random_envelope_field(grid: GridSpec, rng: &mut ChaCha8Rng) -> WaveField {
    let dim = grid.dim();
    let normal = StandardNormal;
    let cnorm = |rng: &mut ChaCha8Rng| {
        C64::new(
            <StandardNormal as Distribution<f64>>::sample(&normal, rng),
            <StandardNormal as Distribution<f64>>::sample(&normal, rng),
        )
    };
    // Coefficients for 1, x_a, x_a x_b (a <= b).
    let c0 = cnorm(rng);
    let lin: Vec<C64> = (0..dim).map(|_| cnorm(rng)).collect();
    let mut quad = Vec::new();
    for a in 0..dim {
        for _b in a..dim {
            quad.push(cnorm(rng));
        }
    }
    let cw = cnorm(rng);
    let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();

    WaveField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        let mut poly = c0;
        for a in 0..dim {
            poly += lin[a] * x[a];
        }
        let mut k = 0;
        for a in 0..dim {
            for b in a..dim {
                poly += quad[k] * x[a] * x[b];
                k += 1;
            }
        }
        let phase: f64 = q.iter().zip(x).map(|(qa, xa)| qa * xa).sum();
        let wave = cw * C64::new(0.0, phase).exp();
        (poly + wave) * (-0.5 * r2).exp()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, StreamKind};
    use approx::assert_relative_eq;

    #[test]
    fn excited_state_is_normalized_and_orthogonal() {
        let g = GridSpec::new(2, 64, 8.0).unwrap();
        let psi0 = hermite_ground(g);
        let psi1 = hermite_excited(g);
        assert_relative_eq!(psi1.mass(), 1.0, max_relative = 1e-12);
        assert!(psi0.inner(&psi1).norm() < 1e-14);
    }

    #[test]
    fn vortex_mass_closed_form() {
        for (dim, m, l) in [(2usize, 64usize, 8.0f64), (3, 32, 6.0)] {
            let g = GridSpec::new(dim, m, l).unwrap();
            let v = vortex_mode(g);
            assert_relative_eq!(
                v.mass(),
                PI.powf(dim as f64 / 2.0),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn project_l0_picks_ground_component() {
        let g = GridSpec::new(2, 64, 8.0).unwrap();
        let psi0 = hermite_ground(g);
        let l = project_l0(&psi0);
        assert_relative_eq!(l.re, 1.0, max_relative = 1e-12);
        assert!(l.im.abs() < 1e-14);
        // Excited state has no ground component.
        assert!(project_l0(&hermite_excited(g)).norm() < 1e-14);
    }

    #[test]
    fn random_fields_are_reproducible_and_resolved() {
        let g = GridSpec::new(2, 64, 8.0).unwrap();
        let mut r1 = stream_rng(9, StreamKind::Check);
        let mut r2 = stream_rng(9, StreamKind::Check);
        let u = random_envelope_field(g, &mut r1);
        let v = random_envelope_field(g, &mut r2);
        assert_eq!(u.values(), v.values());
        assert!(u.mass() > 0.0);
        assert!(u.boundary_shell_fraction() < 1e-10);
    }
}
