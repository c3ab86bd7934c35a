//! Real-time propagation by Strang splitting with an exact rotation substep.
//!
//! One step of size dt applies: half-step pointwise phase for trap plus
//! nonlinearity (exact, since the modulus is invariant under a pure phase),
//! full kinetic step in transform space, rigid grid rotation by the angle
//! |Omega| dt through spectral shears, and the closing half-step phase. Every
//! substep is an L^2 isometry up to quadrature, so mass conservation is a
//! roundoff-level diagnostic rather than an enforced constraint.
//!
//! `evolve` records mass, energy, gradient norm, and (optionally) the
//! phase-gauged Sigma distance to a reference state along the trajectory, and
//! halts with a blow-up flag when the gradient norm passes 10^3 times its
//! initial value or the grid stops representing the state (spectral tail or
//! boundary shell saturated). A box cannot follow true collapse, so the flag
//! is a qualitative indicator; on a saturation halt the final gradient entry
//! is recorded as infinity to mark "beyond the grid" explicitly.

use serde::Serialize;

use crate::energy;
use crate::error::{Error, Result};
use crate::field::{C64, WaveField};
use crate::grid::GridSpec;
use crate::physics::PhysicsParams;
use crate::rng::{stream_rng, StreamKind};
pub use crate::sigma::dist_sigma_mod_phase;
use crate::sigma::sigma_norm_sq;
use crate::spectral::{RotationPlan, Spectral};
use std::sync::Arc;

/// Per-sample records of one trajectory. All arrays share a length and
/// `times` is strictly monotone (increasing for forward runs).
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryStats {
    pub times: Vec<f64>,
    pub mass_series: Vec<f64>,
    pub energy_series: Vec<f64>,
    pub grad_norm_series: Vec<f64>,
    /// Phase-gauged Sigma distance to the reference state, when one is given.
    pub dist_series: Option<Vec<f64>>,
    pub blowup_flag: bool,
    pub blowup_time: Option<f64>,
    /// State at the last recorded sample.
    #[serde(skip)]
    pub final_field: WaveField,
}

/// Reusable fixed-step propagator: phase tables and the rotation plan are
/// built once per (grid, params, dt).
pub struct Propagator {
    params: PhysicsParams,
    spec: Arc<Spectral>,
    dt: f64,
    /// |x|^2 / 2 per node.
    trap_half: Vec<f64>,
    /// e^{-i dt k^2 / 2} per node.
    kinetic_phase: Vec<C64>,
    rotation: Option<RotationPlan>,
}

impl Propagator {
    /// Validates the step against the rotation stability bound
    /// |Omega| |dt| <= 1 and precomputes the per-step tables. Negative dt
    /// propagates backwards.
    pub fn new(grid: GridSpec, params: &PhysicsParams, dt: f64) -> Result<Propagator> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::Validation(format!(
                "time step must be finite and nonzero, got {dt}"
            )));
        }
        if params.omega_mag() * dt.abs() > 1.0 {
            return Err(Error::Validation(format!(
                "time step {dt} breaks the rotation stability bound |Omega dt| <= 1 at |Omega| = {}",
                params.omega_mag()
            )));
        }
        if grid.dim() != params.dim() {
            return Err(Error::Validation(format!(
                "grid dimension {} does not match physics dimension {}",
                grid.dim(),
                params.dim()
            )));
        }
        let spec = Spectral::for_grid(grid);
        let mut trap_half = vec![0.0f64; grid.node_count()];
        let mut x = [0.0f64; 3];
        for (flat, slot) in trap_half.iter_mut().enumerate() {
            grid.coords_of(flat, &mut x);
            *slot = 0.5 * x[..grid.dim()].iter().map(|v| v * v).sum::<f64>();
        }
        let kinetic_phase: Vec<C64> = spec
            .ksq_table()
            .iter()
            .map(|kk| C64::from_polar(1.0, -0.5 * dt * kk))
            .collect();
        let rotation = if params.omega_mag() != 0.0 {
            Some(spec.rotation_plan(params.omega_mag() * dt)?)
        } else {
            None
        };
        Ok(Propagator {
            params: *params,
            spec,
            dt,
            trap_half,
            kinetic_phase,
            rotation,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Half-step phase e^{-i (dt/2)(|x|^2/2 - a |u|^{p-2})}, exact for the
    /// frozen modulus.
    fn potential_half(&self, u: &mut WaveField) {
        let a = self.params.a();
        let e = (self.params.p() - 2.0) / 2.0;
        let half_dt = 0.5 * self.dt;
        for (z, trap) in u.values_mut().iter_mut().zip(&self.trap_half) {
            let mut pot = *trap;
            if a != 0.0 {
                let m2 = z.norm_sqr();
                let amp = if e == 1.0 { m2 } else if e == 2.0 { m2 * m2 } else { m2.powf(e) };
                pot -= a * amp;
            }
            *z *= C64::from_polar(1.0, -half_dt * pot);
        }
    }

    /// One Strang step in place.
    pub fn step(&self, u: &mut WaveField) -> Result<()> {
        self.potential_half(u);
        let vals = u.values_mut();
        self.spec.forward_inplace(vals);
        for (z, ph) in vals.iter_mut().zip(&self.kinetic_phase) {
            *z *= ph;
        }
        self.spec.inverse_inplace(vals);
        if let Some(plan) = &self.rotation {
            plan.apply(&self.spec, u.values_mut());
        }
        self.potential_half(u);
        u.check_finite("propagated state")
    }
}

/// One second-order step, allocating a fresh propagator; loops should build a
/// `Propagator` once instead.
pub fn strang_step(u: &WaveField, dt: f64, params: &PhysicsParams) -> Result<WaveField> {
    let prop = Propagator::new(u.grid(), params, dt)?;
    let mut v = u.clone();
    prop.step(&mut v)?;
    Ok(v)
}

/// Default step: 10^-3 capped by the rotation stability bound.
pub fn default_dt(params: &PhysicsParams) -> f64 {
    let mut dt = 1e-3f64;
    if params.omega_mag() > 0.0 {
        dt = dt.min(0.9 / params.omega_mag());
    }
    dt
}

/// Horizon and cadence of one `evolve` call. `t_final` may be negative to
/// propagate backwards (used by reversibility checks); `dt = None` picks the
/// default step.
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub t_final: f64,
    pub dt: Option<f64>,
    /// Sampling interval in time units.
    pub sample_every: f64,
}

impl EvolveOptions {
    pub fn new(t_final: f64) -> EvolveOptions {
        EvolveOptions { t_final, dt: None, sample_every: 0.1 }
    }
}

struct Sample {
    mass: f64,
    energy: f64,
    grad_norm: f64,
    dist: Option<f64>,
}

fn measure(
    u: &WaveField,
    params: &PhysicsParams,
    spec: &Spectral,
    reference: Option<&WaveField>,
) -> Result<Sample> {
    let bd = energy::energy(u, params)?;
    Ok(Sample {
        mass: u.mass(),
        energy: bd.total,
        grad_norm: spec.grad_sq(u).max(0.0).sqrt(),
        dist: reference.map(|r| dist_sigma_mod_phase(u, r)),
    })
}

/// Steps `u0` to `t_final`, recording stats every `sample_every` time units
/// plus the endpoints, and watching the blow-up monitors at every sample.
/// The observer sees each recorded (time, state) pair; use it for snapshot
/// emission.
pub fn evolve_observed(
    u0: &WaveField,
    params: &PhysicsParams,
    reference: Option<&WaveField>,
    opts: &EvolveOptions,
    mut observer: impl FnMut(f64, &WaveField),
) -> Result<TrajectoryStats> {
    u0.check_finite("initial state")?;
    if !(opts.t_final.is_finite() && opts.t_final != 0.0) {
        return Err(Error::Validation(format!(
            "evolution horizon must be finite and nonzero, got {}",
            opts.t_final
        )));
    }
    if !(opts.sample_every > 0.0 && opts.sample_every.is_finite()) {
        return Err(Error::Validation(format!(
            "sample interval must be positive, got {}",
            opts.sample_every
        )));
    }
    if let Some(r) = reference {
        if r.grid() != u0.grid() {
            return Err(Error::Validation(
                "reference state lives on a different grid than the initial state".into(),
            ));
        }
    }
    let dt_req = match opts.dt {
        Some(d) => {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Validation(format!(
                    "time step must be positive and finite, got {d}"
                )));
            }
            d
        }
        None => default_dt(params),
    };
    let n_steps = ((opts.t_final.abs() / dt_req).ceil() as usize).max(1);
    let dt = opts.t_final / n_steps as f64;
    let stride = ((opts.sample_every / dt.abs()).round() as usize).max(1);
    let spec = Spectral::for_grid(u0.grid());
    let prop = Propagator::new(u0.grid(), params, dt)?;

    let mut u = u0.clone();
    let mut times = Vec::new();
    let mut mass_series = Vec::new();
    let mut energy_series = Vec::new();
    let mut grad_series = Vec::new();
    let mut dist_series = reference.map(|_| Vec::new());
    let mut blowup_flag = false;
    let mut blowup_time = None;

    let first = measure(&u, params, &spec, reference)?;
    let grad_threshold = 1e3 * first.grad_norm;
    let push = |t: f64,
                    s: Sample,
                    times: &mut Vec<f64>,
                    mass: &mut Vec<f64>,
                    energy: &mut Vec<f64>,
                    grad: &mut Vec<f64>,
                    dist: &mut Option<Vec<f64>>| {
        times.push(t);
        mass.push(s.mass);
        energy.push(s.energy);
        grad.push(s.grad_norm);
        if let (Some(series), Some(d)) = (dist.as_mut(), s.dist) {
            series.push(d);
        }
    };
    push(
        0.0,
        first,
        &mut times,
        &mut mass_series,
        &mut energy_series,
        &mut grad_series,
        &mut dist_series,
    );
    observer(0.0, &u);

    for k in 1..=n_steps {
        let t = k as f64 * dt;
        match prop.step(&mut u) {
            Ok(()) => {}
            Err(Error::NonFinite(_)) => {
                // The state left floating-point range: unambiguous blow-up.
                let s = Sample {
                    mass: f64::NAN,
                    energy: f64::NAN,
                    grad_norm: f64::INFINITY,
                    dist: reference.map(|_| f64::NAN),
                };
                push(
                    t,
                    s,
                    &mut times,
                    &mut mass_series,
                    &mut energy_series,
                    &mut grad_series,
                    &mut dist_series,
                );
                blowup_flag = true;
                blowup_time = Some(t);
                break;
            }
            Err(e) => return Err(e),
        }
        if k % stride != 0 && k != n_steps {
            continue;
        }
        let mut s = match measure(&u, params, &spec, reference) {
            Ok(s) => s,
            Err(Error::NonFinite(_)) => Sample {
                mass: f64::NAN,
                energy: f64::NAN,
                grad_norm: f64::INFINITY,
                dist: reference.map(|_| f64::NAN),
            },
            Err(e) => return Err(e),
        };
        let saturated = !s.grad_norm.is_finite()
            || u.boundary_shell_fraction() > 1e-3
            || spec.tail_fraction(&u) > 0.25;
        let grown = s.grad_norm > grad_threshold;
        if saturated && !grown {
            // The grid stopped representing the gradient; record that the
            // true value lies beyond what the box can measure.
            s.grad_norm = f64::INFINITY;
        }
        let halt = saturated || grown;
        push(
            t,
            s,
            &mut times,
            &mut mass_series,
            &mut energy_series,
            &mut grad_series,
            &mut dist_series,
        );
        observer(t, &u);
        if halt {
            blowup_flag = true;
            blowup_time = Some(t);
            break;
        }
    }

    Ok(TrajectoryStats {
        times,
        mass_series,
        energy_series,
        grad_norm_series: grad_series,
        dist_series,
        blowup_flag,
        blowup_time,
        final_field: u,
    })
}

/// `evolve_observed` without an observer.
pub fn evolve(
    u0: &WaveField,
    params: &PhysicsParams,
    reference: Option<&WaveField>,
    opts: &EvolveOptions,
) -> Result<TrajectoryStats> {
    evolve_observed(u0, params, reference, opts, |_, _| {})
}

/// One trial of the perturbation experiment.
#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub trial: u32,
    /// Sigma distance (mod phase) between the perturbed start and the
    /// reference minimizer.
    pub initial_dist: f64,
    /// Largest recorded distance along the trajectory.
    pub max_dist: f64,
    /// max_dist / initial_dist.
    pub amplification: f64,
    pub blowup: bool,
}

/// Summary of `stability_experiment`.
#[derive(Debug, Clone, Serialize)]
pub struct StabilitySummary {
    pub perturbation_scale: f64,
    pub n_trials: usize,
    pub t_final: f64,
    /// Max over trials of the per-trial amplification.
    pub max_amplification: f64,
    pub blowup_trials: usize,
    /// A trial blew up: direct evidence against orbital stability at this
    /// mass, reported rather than raised.
    pub instability_evidence: bool,
    pub trials: Vec<TrialOutcome>,
}

/// Evolves `n_trials` perturbed copies of the minimizer `u_c`, each start
/// renormalized to the minimizer mass after adding a random field of Sigma
/// norm `scale * ||u_c||_Sigma`, and reports the worst distance
/// amplification. Trials draw from independent per-trial streams of `seed`,
/// so the summary does not depend on execution order.
pub fn stability_experiment(
    u_c: &WaveField,
    params: &PhysicsParams,
    scale: f64,
    n_trials: usize,
    t_final: f64,
    dt: Option<f64>,
    seed: u64,
) -> Result<StabilitySummary> {
    if !(scale > 0.0 && scale <= 0.1) {
        return Err(Error::Validation(format!(
            "perturbation scale must lie in (0, 0.1], got {scale}"
        )));
    }
    if n_trials == 0 {
        return Err(Error::Validation("stability experiment needs at least one trial".into()));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Validation(format!(
            "stability horizon must be positive, got {t_final}"
        )));
    }
    u_c.check_finite("reference minimizer")?;
    let c = u_c.mass();
    if c <= 0.0 {
        return Err(Error::Validation("reference minimizer has zero mass".into()));
    }
    let ref_norm = sigma_norm_sq(u_c).sqrt();
    let opts = EvolveOptions { t_final, dt, sample_every: 0.1 };

    let mut trials = Vec::with_capacity(n_trials);
    let mut max_amp = 0.0f64;
    let mut blowups = 0usize;
    for k in 0..n_trials {
        let mut rng = stream_rng(seed, StreamKind::Trial(k as u32));
        let noise = crate::states::random_envelope_field(u_c.grid(), &mut rng);
        let noise_norm = sigma_norm_sq(&noise).sqrt();
        let mut u0 = u_c.clone();
        u0.axpy(C64::new(scale * ref_norm / noise_norm, 0.0), &noise);
        let u0 = u0.renormalized(c)?;

        let stats = evolve(&u0, params, Some(u_c), &opts)?;
        let dist = stats.dist_series.as_ref().expect("reference given");
        let initial = dist[0];
        let max_dist = dist.iter().copied().filter(|d| d.is_finite()).fold(0.0f64, f64::max);
        let amplification = if initial > 0.0 { max_dist / initial } else { f64::INFINITY };
        if stats.blowup_flag {
            blowups += 1;
        }
        max_amp = max_amp.max(amplification);
        trials.push(TrialOutcome {
            trial: k as u32,
            initial_dist: initial,
            max_dist,
            amplification,
            blowup: stats.blowup_flag,
        });
    }
    Ok(StabilitySummary {
        perturbation_scale: scale,
        n_trials,
        t_final,
        max_amplification: max_amp,
        blowup_trials: blowups,
        instability_evidence: blowups > 0,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{mass_threshold, minimize_local, SolverConfig};
    use crate::spectral::Spectral;
    use crate::states::{hermite_excited, hermite_ground, vortex_mode};
    use std::f64::consts::{PI, TAU};

    fn sigma_dist(u: &WaveField, v: &WaveField) -> f64 {
        let mut d = u.clone();
        d.axpy(C64::new(-1.0, 0.0), v);
        sigma_norm_sq(&d).sqrt()
    }

    #[test]
    fn oscillator_eigenstate_accumulates_pure_phase() {
        let grid = GridSpec::new(2, 32, 6.0).unwrap();
        let params = PhysicsParams::new(2, 0.0, 4.0, 0.0).unwrap();
        let c = 0.5;
        let u0 = hermite_ground(grid).renormalized(c).unwrap();
        let t = 1.7;
        let stats = evolve(&u0, &params, None, &EvolveOptions::new(t)).unwrap();

        let mut exact = u0.clone();
        exact.scale(C64::from_polar(1.0, -1.0 * t)); // N/2 = 1
        assert!(!stats.blowup_flag);
        let err = sigma_dist(&stats.final_field, &exact);
        assert!(err <= 1e-6 * c.sqrt(), "phase error {err}");
    }

    #[test]
    fn vortex_pins_the_rotation_sign() {
        // The unit-winding vortex is an eigenstate with frequency
        // (N + 2)/2 - Omega; a sign error in the rotation substep would
        // shift it to (N + 2)/2 + Omega.
        let grid = GridSpec::new(2, 32, 6.0).unwrap();
        let omega = 0.3;
        let params = PhysicsParams::new(2, 0.0, 4.0, omega).unwrap();
        let u0 = vortex_mode(grid).renormalized(1.0).unwrap();
        let t = 0.9;
        let stats = evolve(&u0, &params, None, &EvolveOptions::new(t)).unwrap();

        let mut exact = u0.clone();
        exact.scale(C64::from_polar(1.0, -(2.0 - omega) * t));
        let err = sigma_dist(&stats.final_field, &exact);
        assert!(err <= 1e-6, "vortex phase error {err}");
    }

    #[test]
    fn substeps_preserve_mass() {
        let grid = GridSpec::new(2, 32, 6.0).unwrap();
        let params = PhysicsParams::new(2, 1.0, 4.0, 0.2).unwrap();
        let mut u = hermite_ground(grid);
        u.axpy(C64::new(0.3, 0.1), &hermite_excited(grid));
        let u = u.renormalized(0.7).unwrap();

        let stepped = strang_step(&u, 1e-3, &params).unwrap();
        let drift = (stepped.mass() - u.mass()).abs() / u.mass();
        assert!(drift <= 1e-12, "one-step mass drift {drift}");

        let prop = Propagator::new(grid, &params, 1e-3).unwrap();
        let mut v = u.clone();
        for _ in 0..500 {
            prop.step(&mut v).unwrap();
        }
        let run_drift = (v.mass() - u.mass()).abs() / u.mass();
        assert!(run_drift <= 1e-10, "run mass drift {run_drift}");
    }

    #[test]
    fn self_convergence_is_second_order() {
        let grid = GridSpec::new(2, 32, 6.0).unwrap();
        let params = PhysicsParams::new(2, 1.0, 4.0, 0.2).unwrap();
        let mut u0 = hermite_ground(grid);
        u0.axpy(C64::new(0.4, 0.0), &hermite_excited(grid));
        u0.axpy(C64::new(0.0, 0.2), &vortex_mode(grid));
        let u0 = u0.renormalized(0.5).unwrap();
        let t = 1.0;

        let run = |dt: f64| -> WaveField {
            let opts = EvolveOptions { t_final: t, dt: Some(dt), sample_every: 0.5 };
            evolve(&u0, &params, None, &opts).unwrap().final_field
        };
        let reference = run(2.5e-4);
        let err_coarse = sigma_dist(&run(2e-3), &reference);
        let err_fine = sigma_dist(&run(1e-3), &reference);
        let ratio = err_coarse / err_fine;
        assert!(
            (3.0..5.5).contains(&ratio),
            "order-2 ratio {ratio} (errors {err_coarse}, {err_fine})"
        );
    }

    #[test]
    fn standing_wave_holds_mass_energy_and_orbit() {
        let grid = GridSpec::new(2, 32, 6.0).unwrap();
        let params = PhysicsParams::new(2, 1.0, 4.0, 0.2).unwrap();
        let c0 = mass_threshold(&params, 1.0).unwrap();
        let cfg = SolverConfig::new(c0 / 4.0, 1.0);
        let rep = minimize_local(grid, &params, &cfg).unwrap();
        assert!(rep.converged);

        let opts = EvolveOptions::new(TAU);
        let stats = evolve(&rep.field, &params, Some(&rep.field), &opts).unwrap();
        assert!(!stats.blowup_flag);
        let m0 = stats.mass_series[0];
        let e0 = stats.energy_series[0];
        for (m, e) in stats.mass_series.iter().zip(&stats.energy_series) {
            assert!((m - m0).abs() / m0 <= 1e-10, "mass drift {}", (m - m0).abs() / m0);
            assert!((e - e0).abs() / e0.abs() <= 1e-8, "energy drift {}", (e - e0).abs() / e0.abs());
        }
        let dist = stats.dist_series.as_ref().unwrap();
        let worst = dist.iter().fold(0.0f64, |a, &d| a.max(d));
        assert!(worst <= 1e-5, "orbit distance {worst}");
    }

    #[test]
    fn evolution_is_reversible() {
        let grid = GridSpec::new(2, 32, 6.0).unwrap();
        let c = 0.5;
        let mut u0 = hermite_ground(grid);
        u0.axpy(C64::new(0.3, 0.2), &hermite_excited(grid));
        let u0 = u0.renormalized(c).unwrap();

        for (a, tol) in [(0.0, 1e-8), (1.0, 1e-6)] {
            let params = PhysicsParams::new(2, a, 4.0, 0.2).unwrap();
            let fwd = evolve(&u0, &params, None, &EvolveOptions::new(0.5)).unwrap();
            let mut back_opts = EvolveOptions::new(-0.5);
            back_opts.dt = Some(fwd.times[1].abs().min(1e-3));
            let back = evolve(&fwd.final_field, &params, None, &back_opts).unwrap();
            let err = sigma_dist(&back.final_field, &u0);
            assert!(err <= tol, "a = {a}: reversibility error {err}");
        }
    }

    #[test]
    fn angular_momentum_expectation_is_conserved() {
        let grid = GridSpec::new(2, 32, 6.0).unwrap();
        let params = PhysicsParams::new(2, 1.0, 4.0, 0.3).unwrap();
        let spec = Spectral::for_grid(grid);
        let mut u = hermite_ground(grid);
        u.axpy(C64::new(0.8, 0.0), &vortex_mode(grid));
        let mut u = u.renormalized(0.5).unwrap();

        let lz0 = spec.lz_expectation(&u);
        assert!(lz0.abs() > 1e-2, "test state carries angular momentum");
        let prop = Propagator::new(grid, &params, 1e-3).unwrap();
        for _ in 0..800 {
            prop.step(&mut u).unwrap();
        }
        let drift = (spec.lz_expectation(&u) - lz0).abs() / lz0.abs();
        assert!(drift <= 1e-8, "angular momentum drift {drift}");
    }

    #[test]
    fn phase_distance_identities() {
        let grid = GridSpec::new(2, 32, 6.0).unwrap();
        let c = 0.4;
        let u = hermite_ground(grid).renormalized(c).unwrap();

        let mut rotated = u.clone();
        rotated.scale(C64::from_polar(1.0, PI / 3.0));
        assert!(dist_sigma_mod_phase(&u, &rotated) <= 1e-12);

        let zero = WaveField::zeros(grid);
        let against_zero = dist_sigma_mod_phase(&u, &zero);
        assert!((against_zero - sigma_norm_sq(&u).sqrt()).abs() <= 1e-12);

        let excited = hermite_excited(grid).renormalized(c).unwrap();
        let got = dist_sigma_mod_phase(&u, &excited);
        let expected = (2.0 * c + c * (2.0 + 4.0)).sqrt();
        assert!((got - expected).abs() <= 1e-8, "{got} vs {expected}");
    }

    #[test]
    fn compressed_supercritical_state_trips_the_flag() {
        let grid = GridSpec::new(2, 64, 6.0).unwrap();
        let params = PhysicsParams::new(2, 2.0, 6.0, 0.0).unwrap();
        let spec = Spectral::for_grid(grid);
        let wide = hermite_ground(grid).renormalized(3.0).unwrap();
        let u0 = spec.dilate(&wide, 3.0).unwrap();
        let q = energy::pohozaev_q(&u0, &params).unwrap();
        assert!(q < 0.0, "start is not collapse-prone, Q = {q}");

        let stats = evolve(&u0, &params, None, &EvolveOptions::new(3.0)).unwrap();
        assert!(stats.blowup_flag, "no blow-up within the horizon");
        let t_star = stats.blowup_time.unwrap();
        assert!(t_star > 0.0 && t_star <= 3.0);
        let threshold = 1e3 * stats.grad_norm_series[0];
        assert!(*stats.grad_norm_series.last().unwrap() > threshold);
    }

    #[test]
    fn linear_flow_does_not_amplify_perturbations() {
        let grid = GridSpec::new(2, 32, 6.0).unwrap();
        let params = PhysicsParams::new(2, 0.0, 4.0, 0.2).unwrap();
        let u_c = hermite_ground(grid).renormalized(0.5).unwrap();
        let summary =
            stability_experiment(&u_c, &params, 1e-2, 2, TAU, None, 11).unwrap();

        assert_eq!(summary.n_trials, 2);
        assert_eq!(summary.blowup_trials, 0);
        assert!(!summary.instability_evidence);
        assert!(
            summary.max_amplification <= 1.0 + 1e-4,
            "amplification {}",
            summary.max_amplification
        );
    }
}
