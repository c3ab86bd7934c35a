//! The rotation-frame energy functional, its gradient and second variation,
//! and the inequality battery used to certify fields.
//!
//! Conventions shared by every routine here:
//!   I(u)  = 1/2||grad u||^2 + 1/2||x u||^2 - (2a/p)||u||_p^p - <u,(Omega L)u>
//!   Q(u)  = 1/2||grad u||^2 - 1/2||x u||^2 - a delta_p ||u||_p^p
//!   omega = ( 1/2||u||_Sigma'^2 - <u,(Omega L)u> - a||u||_p^p ) / mass
//! For even integer p the p-norm entering I, Q, and omega is evaluated on the
//! 2/3-rule low-passed field, and the gradient applies the same projector on
//! both sides of the pointwise nonlinearity; the pair (energy, gradient) is
//! then exactly consistent on the grid. Non-integer p falls back to plain
//! pointwise powers. Inequality checks (`gn_check`, `weinstein_check`,
//! `rotation_interpolation_check`) always use plain pointwise norms: they
//! compare continuum quantities, not the discrete energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{C64, WaveField};
use crate::physics::PhysicsParams;
use crate::spectral::Spectral;

/// Every scalar the energy functional produces at a field, in one pass.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// 1/2 ||grad u||_2^2
    pub kinetic: f64,
    /// 1/2 ||x u||_2^2
    pub trap: f64,
    /// <u, (Omega . L) u>
    pub rotation: f64,
    /// (2a/p) ||u||_p^p
    pub nonlinear: f64,
    /// I(u) = kinetic + trap - nonlinear - rotation
    pub total: f64,
    /// ||u||_Sigma'^2 = ||grad u||^2 + ||x u||^2
    pub sigma_dot: f64,
    /// Q(u)
    pub pohozaev: f64,
    /// Lagrange multiplier estimate at this field
    pub omega_est: f64,
}

/// The four fields whose weighted sum is the energy gradient. Computing them
/// once yields both the gradient and the full `EnergyBreakdown`, so solver
/// iterations pay for a single transform pass.
#[derive(Debug, Clone)]
pub struct GradientPieces {
    /// -1/2 Lap u
    pub lap_half: WaveField,
    /// 1/2 |x|^2 u
    pub trap_half: WaveField,
    /// L_z u (zeros when the rotation is off)
    pub lz: WaveField,
    /// the nonlinear direction |u|^{p-2}u under the energy convention,
    /// without the coupling a (zeros when a = 0)
    pub nl: WaveField,
}

impl GradientPieces {
    /// G(u) = -1/2 Lap u + 1/2|x|^2 u - Omega L_z u - a |u|^{p-2}u, the
    /// unconstrained L^2 gradient (half the real differential of I).
    pub fn gradient(&self, params: &PhysicsParams) -> WaveField {
        let mut g = self.lap_half.clone();
        g.axpy(C64::new(1.0, 0.0), &self.trap_half);
        if params.omega_mag() != 0.0 {
            g.axpy(C64::new(-params.omega_mag(), 0.0), &self.lz);
        }
        if params.a() != 0.0 {
            g.axpy(C64::new(-params.a(), 0.0), &self.nl);
        }
        g
    }

    /// Assembles the scalar breakdown by pairing the pieces with `u`.
    pub fn breakdown(&self, u: &WaveField, params: &PhysicsParams) -> Result<EnergyBreakdown> {
        let kinetic = u.inner_re(&self.lap_half);
        let trap = u.inner_re(&self.trap_half);
        let rotation = params.omega_mag() * u.inner_re(&self.lz);
        // <u, F(|Fu|^{p-2}Fu)> = ||Fu||_p^p since the projector is
        // self-adjoint and idempotent; for a = 0 the piece is zero and the
        // multiplier degenerates to the linear one.
        let np = if params.a() != 0.0 { u.inner_re(&self.nl) } else { 0.0 };
        let nonlinear = 2.0 * params.a() / params.p() * np;
        let total = kinetic + trap - nonlinear - rotation;
        let sigma_dot = 2.0 * (kinetic + trap);
        let pohozaev = kinetic - trap - params.a() * params.delta_p() * np;
        let omega_est = (kinetic + trap - rotation - params.a() * np) / u.mass();

        let out = EnergyBreakdown {
            kinetic,
            trap,
            rotation,
            nonlinear,
            total,
            sigma_dot,
            pohozaev,
            omega_est,
        };
        for (name, v) in [
            ("kinetic", kinetic),
            ("trap", trap),
            ("rotation", rotation),
            ("nonlinear", nonlinear),
            ("omega_est", omega_est),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("energy component {name}")));
            }
        }
        Ok(out)
    }
}

fn check_dims(u: &WaveField, params: &PhysicsParams) -> Result<()> {
    if u.grid().dim() != params.dim() {
        return Err(Error::Validation(format!(
            "field dimension {} does not match physics dimension {}",
            u.grid().dim(),
            params.dim()
        )));
    }
    Ok(())
}

/// The nonlinear direction |u|^{p-2}u under the energy convention (low-passed
/// on both sides for even integer p, plain pointwise otherwise).
fn nonlinear_direction(spec: &Spectral, u: &WaveField, params: &PhysicsParams) -> WaveField {
    let p = params.p();
    if params.p_is_even_integer() {
        let half = (p as i32 - 2) / 2;
        let mut v = spec.dealias_field(u);
        for z in v.values_mut() {
            *z *= z.norm_sqr().powi(half);
        }
        spec.dealias_field(&v)
    } else {
        let e = (p - 2.0) / 2.0;
        let mut v = u.clone();
        for z in v.values_mut() {
            *z *= z.norm_sqr().powf(e);
        }
        v
    }
}

/// ||u||_p^p as the energy sees it: dealiased for even integer p.
pub fn nonlinear_energy_norm_pow(u: &WaveField, params: &PhysicsParams) -> f64 {
    if params.p_is_even_integer() {
        let spec = Spectral::for_grid(u.grid());
        spec.dealias_field(u).lp_norm_pow(params.p())
    } else {
        u.lp_norm_pow(params.p())
    }
}

/// Computes the gradient pieces at `u` in one transform pass.
pub fn gradient_pieces(u: &WaveField, params: &PhysicsParams) -> Result<GradientPieces> {
    check_dims(u, params)?;
    u.check_finite("gradient input")?;
    let spec = Spectral::for_grid(u.grid());
    let grid = u.grid();

    let lap_half = spec.neg_half_laplacian(u);
    let mut trap_half = u.clone();
    let mut x = [0.0f64; 3];
    for (flat, z) in trap_half.values_mut().iter_mut().enumerate() {
        grid.coords_of(flat, &mut x);
        let r2: f64 = x[..grid.dim()].iter().map(|c| c * c).sum();
        *z *= 0.5 * r2;
    }
    let lz = if params.omega_mag() != 0.0 {
        spec.apply_lz(u)
    } else {
        WaveField::zeros(grid)
    };
    let nl = if params.a() != 0.0 {
        nonlinear_direction(&spec, u, params)
    } else {
        WaveField::zeros(grid)
    };
    Ok(GradientPieces { lap_half, trap_half, lz, nl })
}

/// Full energy breakdown at `u`.
pub fn energy(u: &WaveField, params: &PhysicsParams) -> Result<EnergyBreakdown> {
    gradient_pieces(u, params)?.breakdown(u, params)
}

/// G(u), the unconstrained gradient field.
pub fn energy_gradient(u: &WaveField, params: &PhysicsParams) -> Result<WaveField> {
    Ok(gradient_pieces(u, params)?.gradient(params))
}

/// Q(u) = 1/2||grad u||^2 - 1/2||x u||^2 - a delta_p ||u||_p^p, computed
/// without assembling gradient fields. Vanishes at critical points.
pub fn pohozaev_q(u: &WaveField, params: &PhysicsParams) -> Result<f64> {
    check_dims(u, params)?;
    u.check_finite("pohozaev input")?;
    let spec = Spectral::for_grid(u.grid());
    let np = if params.a() != 0.0 { nonlinear_energy_norm_pow(u, params) } else { 0.0 };
    let q = 0.5 * spec.grad_sq(u) - 0.5 * u.xweighted_sq() - params.a() * params.delta_p() * np;
    if !q.is_finite() {
        return Err(Error::NonFinite("pohozaev value".into()));
    }
    Ok(q)
}

/// The multiplier a critical point of I on the mass sphere would carry.
pub fn lagrange_omega(u: &WaveField, params: &PhysicsParams) -> Result<f64> {
    if u.mass() <= 0.0 {
        return Err(Error::Validation("lagrange multiplier of a zero-mass field".into()));
    }
    Ok(energy(u, params)?.omega_est)
}

/// ||grad u||^2 + ||x u||^2, the homogeneous energy-space norm squared.
pub fn sigma_dot_sq(u: &WaveField) -> f64 {
    let spec = Spectral::for_grid(u.grid());
    spec.grad_sq(u) + u.xweighted_sq()
}

/// Second variation of I at `u` applied to `w`:
/// -1/2 Lap w + 1/2|x|^2 w - Omega L_z w
///   - a(|u|^{p-2}w + (p-2)|u|^{p-4} Re(conj(u) w) u),
/// with the nonlinear part evaluated through the same low-pass convention as
/// the gradient for even integer p.
pub fn hessian_vector(u: &WaveField, w: &WaveField, params: &PhysicsParams) -> Result<WaveField> {
    check_dims(u, params)?;
    u.check_finite("hessian base")?;
    w.check_finite("hessian direction")?;
    let spec = Spectral::for_grid(u.grid());
    let grid = u.grid();

    let mut h = spec.neg_half_laplacian(w);
    let mut x = [0.0f64; 3];
    {
        let vals = h.values_mut();
        for (flat, z) in w.values().iter().enumerate() {
            grid.coords_of(flat, &mut x);
            let r2: f64 = x[..grid.dim()].iter().map(|c| c * c).sum();
            vals[flat] += 0.5 * r2 * z;
        }
    }
    if params.omega_mag() != 0.0 {
        h.axpy(C64::new(-params.omega_mag(), 0.0), &spec.apply_lz(w));
    }
    if params.a() != 0.0 {
        let p = params.p();
        let even = params.p_is_even_integer();
        let (bu, bw) = if even {
            (spec.dealias_field(u), spec.dealias_field(w))
        } else {
            (u.clone(), w.clone())
        };
        let mut d = WaveField::zeros(grid);
        {
            let dv = d.values_mut();
            for (i, (zu, zw)) in bu.values().iter().zip(bw.values()).enumerate() {
                let m = zu.norm_sqr();
                if m == 0.0 {
                    continue;
                }
                let mp2 = m.powf((p - 2.0) / 2.0);
                let mp4 = m.powf((p - 4.0) / 2.0);
                let cross = (zu.conj() * zw).re;
                dv[i] = mp2 * zw + (p - 2.0) * mp4 * cross * zu;
            }
        }
        let d = if even { spec.dealias_field(&d) } else { d };
        h.axpy(C64::new(-params.a(), 0.0), &d);
    }
    Ok(h)
}

/// Real directional derivative of I at the point where `g` was evaluated:
/// dI(u)[w] = 2 Re <G(u), w>.
pub fn directional_derivative(g: &WaveField, w: &WaveField) -> f64 {
    2.0 * g.inner_re(w)
}

/// Result of a two-sided inequality evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Result of a three-term chain evaluation lhs <= mid <= rhs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChainCheck {
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn le_slack(a: f64, b: f64) -> bool {
    a <= b * (1.0 + 1e-8)
}

/// Interpolation inequality ||u||_p <= C ||grad u||^delta ||u||^{1-delta}
/// with the supplied sharp constant. Plain pointwise norms throughout.
pub fn gn_check(u: &WaveField, params: &PhysicsParams, gn_const: f64) -> InequalityCheck {
    let spec = Spectral::for_grid(u.grid());
    let delta = params.delta_p();
    let lhs = u.lp_norm_pow(params.p()).powf(1.0 / params.p());
    let rhs = gn_const * spec.grad_sq(u).powf(delta / 2.0) * u.mass().powf((1.0 - delta) / 2.0);
    InequalityCheck { lhs, rhs, holds: le_slack(lhs, rhs) }
}

/// Uncertainty-type bound ||u||_2^2 <= (2/N) ||grad u||_2 ||x u||_2, with
/// equality exactly on the Gaussian ground state.
pub fn weinstein_check(u: &WaveField) -> InequalityCheck {
    let spec = Spectral::for_grid(u.grid());
    let n = u.grid().dim() as f64;
    let lhs = u.mass();
    let rhs = 2.0 / n * spec.grad_sq(u).sqrt() * u.xweighted_sq().sqrt();
    InequalityCheck { lhs, rhs, holds: le_slack(lhs, rhs) }
}

/// |<u,(Omega.L)u>|  <=  ||(Omega ^ x)u|| ||grad u||  <=
/// (Omega^2/2eps)||xu||^2 + (eps/2)||grad u||^2, each step with 1e-8 slack.
/// `eps = |Omega| ||xu|| / ||grad u||` turns the second step into equality.
pub fn rotation_interpolation_check(u: &WaveField, omega_mag: f64, eps: f64) -> ChainCheck {
    let spec = Spectral::for_grid(u.grid());
    let gsq = spec.grad_sq(u);
    let lhs = (omega_mag * spec.lz_expectation(u)).abs();
    let mid = omega_mag * u.inplane_weighted_sq().sqrt() * gsq.sqrt();
    let rhs = omega_mag * omega_mag / (2.0 * eps) * u.xweighted_sq() + 0.5 * eps * gsq;
    ChainCheck { lhs, mid, rhs, holds: le_slack(lhs, mid) && le_slack(mid, rhs) }
}

/// 1/2||u||_Sigma'^2 - <u,(Omega.L)u>: the twisted norm that stays
/// equivalent to the Sigma' norm for every rotation below trap strength.
pub fn norm_omega1(u: &WaveField, omega_mag: f64) -> f64 {
    let spec = Spectral::for_grid(u.grid());
    let rot = if omega_mag != 0.0 { omega_mag * spec.lz_expectation(u) } else { 0.0 };
    0.5 * (spec.grad_sq(u) + u.xweighted_sq()) - rot
}

/// (1/2 - 1/(p delta))||grad u||^2 + (1/2 + 1/(p delta))||x u||^2
///   - <u,(Omega.L)u>; only defined for mass-supercritical exponents.
pub fn norm_omega2(u: &WaveField, params: &PhysicsParams) -> Result<f64> {
    let pd = params.p_delta();
    if pd <= 2.0 {
        return Err(Error::Validation(format!(
            "norm_omega2 requires p*delta_p > 2 (mass-supercritical p), got p*delta_p = {pd}"
        )));
    }
    let spec = Spectral::for_grid(u.grid());
    let w = params.omega_mag();
    let rot = if w != 0.0 { w * spec.lz_expectation(u) } else { 0.0 };
    Ok((0.5 - 1.0 / pd) * spec.grad_sq(u) + (0.5 + 1.0 / pd) * u.xweighted_sq() - rot)
}

/// Energy along the mass-preserving dilation flow, in closed form from the
/// undilated norms:
/// e^{2 theta} kin + e^{-2 theta} trap - e^{p delta theta} nonlinear - rot.
pub fn tilde_i(u: &WaveField, theta: f64, params: &PhysicsParams) -> Result<f64> {
    check_dims(u, params)?;
    u.check_finite("dilation energy input")?;
    let spec = Spectral::for_grid(u.grid());
    let kin = 0.5 * spec.grad_sq(u);
    let trap = 0.5 * u.xweighted_sq();
    let w = params.omega_mag();
    let rot = if w != 0.0 { w * spec.lz_expectation(u) } else { 0.0 };
    let np = if params.a() != 0.0 { nonlinear_energy_norm_pow(u, params) } else { 0.0 };
    let v = (2.0 * theta).exp() * kin + (-2.0 * theta).exp() * trap
        - (params.p_delta() * theta).exp() * 2.0 * params.a() / params.p() * np
        - rot;
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("dilated energy at theta={theta}")));
    }
    Ok(v)
}

/// The same quantity through the other route: resample u under the dilation
/// and evaluate I directly. Agreement with `tilde_i` certifies the resampler.
pub fn tilde_i_resampled(u: &WaveField, theta: f64, params: &PhysicsParams) -> Result<f64> {
    let spec = Spectral::for_grid(u.grid());
    let v = spec.kappa(u, theta)?;
    Ok(energy(&v, params)?.total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::compute_constants;
    use crate::grid::GridSpec;
    use crate::rng::{stream_rng, StreamKind};
    use crate::states::{hermite_excited, hermite_ground, random_envelope_field, vortex_mode};

    fn g2() -> GridSpec {
        GridSpec::new(2, 64, 8.0).unwrap()
    }

    fn g3() -> GridSpec {
        GridSpec::new(3, 64, 6.0).unwrap()
    }

    fn params(dim: usize, a: f64, p: f64, w: f64) -> PhysicsParams {
        PhysicsParams::new(dim, a, p, w).unwrap()
    }

    /// Smooth, well-resolved complex mixture for resampling tests.
    fn smooth_mix(grid: GridSpec) -> WaveField {
        let mut u = hermite_ground(grid);
        u.axpy(C64::new(0.3, 0.1), &hermite_excited(grid));
        u.axpy(C64::new(0.0, 0.2), &vortex_mode(grid));
        u
    }

    #[test]
    fn oscillator_energy_closed_forms() {
        for (grid, n) in [(g2(), 2.0), (g3(), 3.0)] {
            let c = 0.1;
            let u = hermite_ground(grid).renormalized(c).unwrap();
            let p = params(grid.dim(), 0.0, 4.0, 0.5);
            let e = energy(&u, &p).unwrap();
            assert!((e.total - 0.5 * n * c).abs() < 1e-8, "I = Nc/2");
            assert!((e.omega_est - 0.5 * n).abs() < 1e-8, "omega = N/2");
            assert!(e.pohozaev.abs() < 1e-8, "Q = 0 for the Gaussian");
            assert!((e.sigma_dot - n * c).abs() < 1e-8);
            assert!(e.rotation.abs() < 1e-12, "real field carries no rotation energy");
        }
    }

    #[test]
    fn gaussian_quartic_closed_form() {
        let c = 0.1;
        let u = hermite_ground(g2()).renormalized(c).unwrap();
        let p = params(2, 1.0, 4.0, 0.0);
        let e = energy(&u, &p).unwrap();
        let expected = 0.5 * c * c / (2.0 * std::f64::consts::PI);
        assert!((e.nonlinear - expected).abs() < 1e-10, "quartic Gaussian moment");
        assert!(e.total < 0.5 * 2.0 * c, "interaction strictly lowers the oscillator energy");
    }

    #[test]
    fn breakdown_is_component_sum() {
        let mut rng = stream_rng(7, StreamKind::Check);
        let p = params(2, 1.3, 4.0, 0.4);
        for _ in 0..5 {
            let u = random_envelope_field(g2(), &mut rng);
            let e = energy(&u, &p).unwrap();
            let sum = e.kinetic + e.trap - e.nonlinear - e.rotation;
            assert!((e.total - sum).abs() <= 1e-12 * e.total.abs().max(1.0));
            assert!(e.kinetic >= 0.0 && e.trap >= 0.0 && e.nonlinear >= 0.0);
        }
    }

    #[test]
    fn vortex_multiplier_closed_form() {
        for grid in [g2(), g3()] {
            let n = grid.dim() as f64;
            let u = vortex_mode(grid).renormalized(0.7).unwrap();
            let p = params(grid.dim(), 0.0, 4.0, 0.5);
            let w = lagrange_omega(&u, &p).unwrap();
            assert!((w - ((n + 2.0) / 2.0 - 0.5)).abs() < 1e-8, "dim {}", grid.dim());
        }
    }

    #[test]
    fn zero_mass_multiplier_rejected() {
        let u = WaveField::zeros(g2());
        let p = params(2, 1.0, 4.0, 0.1);
        assert!(lagrange_omega(&u, &p).is_err());
    }

    #[test]
    fn pohozaev_dilation_law() {
        let c = 0.3;
        let tau = 2.0;
        let u = hermite_ground(g2()).renormalized(c).unwrap();
        let spec = Spectral::for_grid(g2());
        let v = spec.dilate(&u, tau).unwrap();
        let p = params(2, 0.0, 4.0, 0.0);
        let q = pohozaev_q(&v, &p).unwrap();
        let expected = 0.5 * (tau * tau - 1.0 / (tau * tau)) * c; // (N/2)c with N=2
        assert!((q - expected).abs() < 1e-8);
    }

    #[test]
    fn nonfinite_field_rejected_by_name() {
        let mut u = hermite_ground(g2());
        u.values_mut()[10] = C64::new(f64::INFINITY, 0.0);
        let p = params(2, 1.0, 4.0, 0.1);
        match energy(&u, &p) {
            Err(Error::NonFinite(_)) => {}
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn gn_gaussian_near_extremal_and_random_fields_hold() {
        // Sharp constant for N=2, p=4 is about 0.6430; a hair above it keeps
        // the inequality strict while the Gaussian sits close to equality.
        let gn = 0.6434;
        let p = params(2, 1.0, 4.0, 0.0);
        let u = hermite_ground(g2());
        let chk = gn_check(&u, &p, gn);
        assert!(chk.holds);
        let ratio = chk.lhs / chk.rhs;
        assert!(ratio > 0.9 && ratio < 1.0, "Gaussian ratio {ratio}");

        let mut rng = stream_rng(11, StreamKind::Check);
        for _ in 0..100 {
            let f = random_envelope_field(g2(), &mut rng);
            assert!(gn_check(&f, &p, gn).holds);
        }
        let z = WaveField::zeros(g2());
        let zchk = gn_check(&z, &p, gn);
        assert!(zchk.holds && zchk.lhs == 0.0 && zchk.rhs == 0.0);
    }

    #[test]
    fn weinstein_gaussian_equality() {
        for grid in [g2(), g3()] {
            let chk = weinstein_check(&hermite_ground(grid));
            assert!(chk.holds);
            assert!((chk.lhs - chk.rhs).abs() < 1e-8, "Gaussian saturates the bound");
        }
        let mut rng = stream_rng(13, StreamKind::Check);
        let small = GridSpec::new(2, 32, 6.0).unwrap();
        for _ in 0..200 {
            assert!(weinstein_check(&random_envelope_field(small, &mut rng)).holds);
        }
    }

    #[test]
    fn rotation_chain_vortex_and_equality_eps() {
        let u = vortex_mode(g2()).renormalized(1.0).unwrap();
        let chk = rotation_interpolation_check(&u, 0.5, 0.5);
        assert!(chk.holds && chk.lhs > 0.0);

        let spec = Spectral::for_grid(g2());
        let eps_star = 0.5 * u.xweighted_sq().sqrt() / spec.grad_sq(&u).sqrt();
        let eq = rotation_interpolation_check(&u, 0.5, eps_star);
        assert!(eq.holds);
        assert!((eq.mid - eq.rhs).abs() <= 1e-8 * eq.rhs, "AM-GM equality point");

        let mut real = hermite_ground(g2());
        real.axpy(C64::new(0.4, 0.0), &hermite_excited(g2()));
        let rc = rotation_interpolation_check(&real, 0.7, 0.9);
        assert!(rc.holds && rc.lhs < 1e-12);
    }

    #[test]
    fn twisted_norm_sandwich_on_random_fields() {
        let grid = GridSpec::new(2, 32, 6.0).unwrap();
        let w = 1.0 / 3.0;
        let (c_lo, c_hi) = (2.0 / 9.0, 7.0 / 9.0);
        let mut rng = stream_rng(17, StreamKind::Check);
        for i in 0..1000 {
            let u = random_envelope_field(grid, &mut rng);
            let sd = sigma_dot_sq(&u);
            let n1 = norm_omega1(&u, w);
            assert!(n1 >= c_lo * sd - 1e-9 * sd, "lower sandwich at sample {i}");
            assert!(n1 <= c_hi * sd + 1e-9 * sd, "upper sandwich at sample {i}");
        }
    }

    #[test]
    fn supercritical_norm_lower_bound_on_random_fields() {
        // N=2, p=6: p*delta = 4, admissible rotations reach sqrt(3)/2.
        let grid = GridSpec::new(2, 32, 6.0).unwrap();
        let p = params(2, 1.0, 6.0, 0.6);
        let k = compute_constants(&p, 1.0, 1.0).unwrap();
        let cw = k.c_omega.unwrap();
        let mut rng = stream_rng(19, StreamKind::Check);
        for i in 0..1000 {
            let u = random_envelope_field(grid, &mut rng);
            let sd = sigma_dot_sq(&u);
            let n2 = norm_omega2(&u, &p).unwrap();
            assert!(n2 >= cw * sd - 1e-9 * sd, "coercivity at sample {i}");
        }
    }

    #[test]
    fn supercritical_norm_rejects_critical_exponent() {
        let u = hermite_ground(g2());
        assert!(norm_omega2(&u, &params(2, 1.0, 4.0, 0.1)).is_err());
    }

    #[test]
    fn dilation_energy_oscillator_closed_form() {
        let u = hermite_ground(g2());
        let p = params(2, 0.0, 4.0, 0.0);
        for theta in [-0.4, 0.0, 0.7] {
            let t = tilde_i(&u, theta, &p).unwrap();
            let expected = 0.5 * ((2.0 * theta).exp() + (-2.0 * theta).exp());
            assert!((t - expected).abs() < 1e-8, "theta {theta}");
        }
        let at0 = tilde_i(&u, 0.0, &p).unwrap();
        assert!(at0 < tilde_i(&u, 0.05, &p).unwrap() && at0 < tilde_i(&u, -0.05, &p).unwrap());
    }

    #[test]
    fn dilation_energy_cross_check_via_resampling() {
        let u = smooth_mix(g2());
        let p = params(2, 0.8, 4.0, 0.3);
        for theta in [-0.3, 0.25] {
            let closed = tilde_i(&u, theta, &p).unwrap();
            let sampled = tilde_i_resampled(&u, theta, &p).unwrap();
            assert!(
                (closed - sampled).abs() <= 1e-6 * closed.abs().max(1.0),
                "theta {theta}: closed {closed} vs resampled {sampled}"
            );
        }
    }

    #[test]
    fn theta_derivative_is_twice_pohozaev() {
        let u = smooth_mix(g2());
        let p = params(2, 1.0, 4.0, 0.2);
        let q = pohozaev_q(&u, &p).unwrap();
        let dt = 1e-4;

        // Closed-form route.
        let d_closed =
            (tilde_i(&u, dt, &p).unwrap() - tilde_i(&u, -dt, &p).unwrap()) / (2.0 * dt);
        assert!((d_closed - 2.0 * q).abs() <= 1e-6 * (2.0 * q).abs().max(1.0));

        // Resampled route exercises the dilation operator itself.
        let d_sampled = (tilde_i_resampled(&u, dt, &p).unwrap()
            - tilde_i_resampled(&u, -dt, &p).unwrap())
            / (2.0 * dt);
        assert!((d_sampled - 2.0 * q).abs() <= 1e-6 * (2.0 * q).abs().max(1.0));
    }

    #[test]
    fn supercritical_dilation_energy_unbounded_below() {
        // N=3, p=4 is supercritical: the dilation ray dives below -1 well
        // before theta = 5. At the critical pair (N=2, p=4) with small a the
        // ray stays positive.
        let u3 = hermite_ground(g3());
        let p3 = params(3, 1.0, 4.0, 0.0);
        let dove = (0..=20).map(|i| i as f64 * 0.25).any(|th| tilde_i(&u3, th, &p3).unwrap() < -1.0);
        assert!(dove, "supercritical ray must dive");

        let u2 = hermite_ground(g2());
        let p2 = params(2, 0.1, 4.0, 0.0);
        for i in 0..=20 {
            assert!(tilde_i(&u2, i as f64 * 0.5, &p2).unwrap() > 0.0);
        }
    }

    #[test]
    fn gradient_matches_directional_finite_differences() {
        let cases: Vec<(GridSpec, PhysicsParams)> = vec![
            (GridSpec::new(2, 32, 6.0).unwrap(), params(2, 1.3, 4.0, 0.4)),
            (GridSpec::new(2, 32, 6.0).unwrap(), params(2, 0.9, 6.0, 0.3)),
            (GridSpec::new(3, 16, 5.0).unwrap(), params(3, 0.7, 3.7, 0.25)),
        ];
        let mut rng = stream_rng(23, StreamKind::Check);
        let t = 1e-5;
        for (grid, p) in cases {
            for _ in 0..4 {
                let u = random_envelope_field(grid, &mut rng);
                let g = energy_gradient(&u, &p).unwrap();
                for _ in 0..7 {
                    let w = random_envelope_field(grid, &mut rng).renormalized(1.0).unwrap();
                    let mut up = u.clone();
                    up.axpy(C64::new(t, 0.0), &w);
                    let mut um = u.clone();
                    um.axpy(C64::new(-t, 0.0), &w);
                    let fd = (energy(&up, &p).unwrap().total - energy(&um, &p).unwrap().total)
                        / (2.0 * t);
                    let an = directional_derivative(&g, &w);
                    assert!(
                        (fd - an).abs() <= 1e-6 * fd.abs().max(an.abs()).max(1e-3),
                        "fd {fd} vs analytic {an} at p={}, dim={}",
                        p.p(),
                        p.dim()
                    );
                }
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_finite_differences() {
        let cases: Vec<(GridSpec, PhysicsParams)> = vec![
            (GridSpec::new(2, 32, 6.0).unwrap(), params(2, 1.1, 4.0, 0.35)),
            (GridSpec::new(2, 32, 6.0).unwrap(), params(2, 0.8, 6.0, 0.2)),
            (GridSpec::new(3, 16, 5.0).unwrap(), params(3, 0.6, 3.7, 0.15)),
        ];
        let mut rng = stream_rng(29, StreamKind::Check);
        let t = 1e-5;
        for (grid, p) in cases {
            let u = random_envelope_field(grid, &mut rng);
            for _ in 0..3 {
                let w = random_envelope_field(grid, &mut rng).renormalized(1.0).unwrap();
                let mut up = u.clone();
                up.axpy(C64::new(t, 0.0), &w);
                let mut um = u.clone();
                um.axpy(C64::new(-t, 0.0), &w);
                let gp = energy_gradient(&up, &p).unwrap();
                let gm = energy_gradient(&um, &p).unwrap();
                let hv = hessian_vector(&u, &w, &p).unwrap();
                let mut diff = gp.clone();
                diff.axpy(C64::new(-1.0, 0.0), &gm);
                diff.scale(C64::new(1.0 / (2.0 * t), 0.0));
                diff.axpy(C64::new(-1.0, 0.0), &hv);
                let err = diff.mass().sqrt();
                let scale = hv.mass().sqrt().max(1e-6);
                assert!(err <= 1e-6 * scale.max(1.0), "hessian fd err {err} (scale {scale})");
            }
        }
    }
}
