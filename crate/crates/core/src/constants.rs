//! Closed-form constants attached to a rotation strength and exponent pair.
//!
//! Everything here is scalar arithmetic: the equivalence constants for the
//! rotation-twisted energy norm, the coercivity constant of the supercritical
//! energy bound, and the small-mass threshold `c0` below which the energy
//! landscape on the constraint sphere splits into a well and a barrier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::PhysicsParams;

/// Scalar constants derived from `(N, p, a, |Ω|)` and the ball radius `r`.
///
/// `eps1`, `c1`, `c2`, `c_omega` exist only when `pδ_p > 2` and the rotation
/// is slow enough (`|Ω| < sqrt(1 - (2/(pδ_p))²)`); otherwise they are absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationConstants {
    pub nu: f64,
    pub mu: f64,
    pub eps0: f64,
    pub c_star: f64,
    pub c_upper: f64,
    pub eps1: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c_omega: Option<f64>,
    pub c0: f64,
    pub gn_const: f64,
}

/// True when the one-sided coercivity bound applies: `pδ_p > 2` and
/// `|Ω| < sqrt(1 - (2/(pδ_p))²)`.
pub fn frequency_condition(params: &PhysicsParams) -> bool {
    let pd = params.p_delta();
    pd > 2.0 && params.omega_mag() < (1.0 - (2.0 / pd).powi(2)).sqrt()
}

/// Evaluates every constant for the given physics, ball radius, and sharp
/// interpolation constant. Requires `0 < |Ω| < 1`: the rotationless case has
/// no twisted norm to bound.
pub fn compute_constants(params: &PhysicsParams, r: f64, gn_const: f64) -> Result<RotationConstants> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Validation(format!("ball radius r must be positive and finite, got {r}")));
    }
    if !(gn_const > 0.0 && gn_const.is_finite()) {
        return Err(Error::Validation(format!(
            "gn_const must be positive and finite, got {gn_const}"
        )));
    }
    let w = params.omega_mag();
    if w <= 0.0 {
        return Err(Error::Validation(
            "omega_mag must lie in (0,1) to derive rotation constants".into(),
        ));
    }

    let nu = (1.0 - w) / 4.0;
    let mu = (1.0 + w) / 2.0;
    let eps0 = w * (3.0 + w) / (1.0 + 3.0 * w);
    let c_star = (1.0 - w * w) / (2.0 * (1.0 + 3.0 * w));
    let c_upper = (1.0 + 6.0 * w + w * w) / (2.0 * (1.0 + 3.0 * w));

    let pd = params.p_delta();
    let (eps1, c1, c2, c_omega) = if frequency_condition(params) {
        // Admissible interval for the Young-splitting parameter; the midpoint
        // keeps both coercivity margins away from zero.
        let lo = pd * w * w / (pd + 2.0);
        let hi = 1.0 - 2.0 / pd;
        let e1 = 0.5 * (lo + hi);
        let c1 = 0.5 - 1.0 / pd - 0.5 * e1;
        let c2 = 0.5 + 1.0 / pd - w * w / (2.0 * e1);
        (Some(e1), Some(c1), Some(c2), Some(c1.min(c2)))
    } else {
        (None, None, None, None)
    };

    Ok(RotationConstants {
        nu,
        mu,
        eps0,
        c_star,
        c_upper,
        eps1,
        c1,
        c2,
        c_omega,
        c0: small_mass_threshold(params, r, gn_const),
        gn_const,
    })
}

/// The mass threshold `c0 = min(t1, t2, t3)`; below it the constrained local
/// minimization problem is well posed inside the ball of radius `r`.
pub fn small_mass_threshold(params: &PhysicsParams, r: f64, gn_const: f64) -> f64 {
    let w = params.omega_mag();
    let n = params.dim() as f64;
    let p = params.p();
    let a = params.a();
    let delta = params.delta_p();
    let pd = params.p_delta();

    let t1 = (1.0 - w) * r / (4.0 * n);
    // The a-dependent terms blow up as a -> 0; min() then falls back to t1.
    let shared = a * gn_const.powf(p) * r.powf((pd - 2.0) / 2.0);
    let expo = 2.0 / (p * (1.0 - delta));
    let t2 = (p * (1.0 - w).powi(3) / (16.0 * (1.0 + 3.0 * w) * shared)).powf(expo);
    let t3 = ((1.0 - w * w) / (2.0 * (1.0 + 3.0 * w) * shared)).powf(expo);
    t1.min(t2).min(t3)
}

/// Lower edge of the admissible multiplier window at mass `c`:
/// `N(C_* - a C^p r^{(pδ-2)/2} c^{p(1-δ)/2})`. The upper edge is `N/2`.
pub fn multiplier_lower_bound(params: &PhysicsParams, r: f64, c: f64, gn_const: f64) -> f64 {
    let n = params.dim() as f64;
    let w = params.omega_mag();
    let c_star = (1.0 - w * w) / (2.0 * (1.0 + 3.0 * w));
    let pd = params.p_delta();
    let delta = params.delta_p();
    let shift = params.a()
        * gn_const.powf(params.p())
        * r.powf((pd - 2.0) / 2.0)
        * c.powf(params.p() * (1.0 - delta) / 2.0);
    n * (c_star - shift)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: usize, p: f64, w: f64) -> PhysicsParams {
        PhysicsParams::new(dim, 1.0, p, w).unwrap()
    }

    #[test]
    fn third_rotation_closed_forms() {
        let k = compute_constants(&params(2, 4.0, 1.0 / 3.0), 1.0, 1.0).unwrap();
        assert!((k.c_star - 2.0 / 9.0).abs() < 1e-15);
        assert!((k.c_upper - 7.0 / 9.0).abs() < 1e-15);
        assert!((k.nu - 1.0 / 6.0).abs() < 1e-15);
        assert!((k.mu - 2.0 / 3.0).abs() < 1e-15);
        assert!((k.eps0 - (1.0 / 3.0) * (10.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn ordering_invariants_across_rotation_sweep() {
        for i in 1..100 {
            let w = i as f64 / 100.0;
            let k = compute_constants(&params(3, 4.0, w), 2.5, 0.7).unwrap();
            assert!(0.0 < k.nu && k.nu < k.mu && k.mu < 1.0, "nu/mu order at w={w}");
            assert!(k.c_star < k.c_upper, "c_star < c_upper at w={w}");
            assert!(k.c_upper < (k.mu / k.nu) * k.c_star, "c_upper bound at w={w}");
            assert!(k.eps0 > 0.0 && k.eps0 < 1.0 + w);
        }
    }

    #[test]
    fn threshold_example_matches_independent_arithmetic() {
        // N=3, p=4, r=1, a=1, |Ω|=0.1, gn=1: the three bracketed terms are
        // 3/40, (729/5200)^2, and (99/260)^2; the middle one wins.
        let k = compute_constants(&params(3, 4.0, 0.1), 1.0, 1.0).unwrap();
        let t1 = 3.0f64 / 40.0;
        let t2 = (729.0f64 / 5200.0).powi(2);
        let t3 = (99.0f64 / 260.0).powi(2);
        assert!((t1 - 0.075).abs() < 1e-15);
        assert!((t2 - 0.019653883).abs() < 1e-8);
        assert!((t3 - 0.14498521).abs() < 1e-8);
        assert!((k.c0 - t2).abs() <= 1e-12 * t2);
    }

    #[test]
    fn threshold_decreases_in_a_where_nonlinearity_binds() {
        // t1 is a-independent, so strict decrease is asserted on the branch
        // where the a-dependent terms attain the min.
        let mut prev = f64::INFINITY;
        for a in [1.0, 2.0, 4.0, 8.0] {
            let p = PhysicsParams::new(3, a, 4.0, 0.1).unwrap();
            let c0 = small_mass_threshold(&p, 1.0, 1.0);
            assert!(c0 < prev, "c0 not strictly decreasing at a={a}");
            prev = c0;
        }
        // With a = 0 both nonlinear terms are infinite and t1 is the min.
        let p0 = PhysicsParams::new(3, 0.0, 4.0, 0.1).unwrap();
        assert!((small_mass_threshold(&p0, 1.0, 1.0) - 0.075).abs() < 1e-15);
    }

    #[test]
    fn coercivity_pack_present_only_under_frequency_condition() {
        // pδ = 2 exactly: mass-critical, never present.
        let crit = compute_constants(&params(2, 4.0, 0.1), 1.0, 1.0).unwrap();
        assert!(crit.eps1.is_none() && crit.c_omega.is_none());

        // pδ = 4, condition needs |Ω| < sqrt(3)/2 ≈ 0.866.
        let fast = compute_constants(&params(2, 6.0, 0.9), 1.0, 1.0).unwrap();
        assert!(fast.c_omega.is_none());

        let slow = compute_constants(&params(2, 6.0, 0.6), 1.0, 1.0).unwrap();
        let (e1, c1, c2, cw) = (
            slow.eps1.unwrap(),
            slow.c1.unwrap(),
            slow.c2.unwrap(),
            slow.c_omega.unwrap(),
        );
        assert!((e1 - 0.37).abs() < 1e-15);
        assert!((c1 - 0.065).abs() < 1e-15);
        assert!((c2 - (0.75 - 0.36 / 0.74)).abs() < 1e-15);
        assert!(c1 > 0.0 && c2 > 0.0);
        assert!((cw - c1.min(c2)).abs() == 0.0);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(compute_constants(&params(3, 4.0, 0.1), 0.0, 1.0).is_err());
        assert!(compute_constants(&params(3, 4.0, 0.1), 1.0, 0.0).is_err());
        let norot = PhysicsParams::new(3, 1.0, 4.0, 0.0).unwrap();
        assert!(compute_constants(&norot, 1.0, 1.0).is_err());
    }

    #[test]
    fn multiplier_window_edges() {
        // At c -> 0 the lower edge tends to N*C_*.
        let p = params(3, 4.0, 0.1);
        let lo = multiplier_lower_bound(&p, 1.0, 1e-12, 1.0);
        assert!((lo - 3.0 * 0.99 / 2.6).abs() < 1e-5);
        // Larger mass widens the window downward.
        assert!(multiplier_lower_bound(&p, 1.0, 0.01, 1.0) > multiplier_lower_bound(&p, 1.0, 0.04, 1.0));
    }
}
