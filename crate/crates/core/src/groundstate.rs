//! Local minimization of the rotating energy on the mass sphere.
//!
//! `minimize_local` searches S(c) = {||u||_2^2 = c} for the constrained local
//! minimizer that the small-mass energy landscape pins inside the ball
//! B(r) = {||u||_Sigma-dot^2 <= r}. Two phases run back to back:
//!
//! 1. a semi-implicit imaginary-time splitting step (exact pointwise decay of
//!    the trap and the frozen-modulus nonlinearity, exact Fourier decay of
//!    the kinetic part, explicit rotation under a CFL-limited step,
//!    renormalization back to mass c) carries an arbitrary start into the
//!    basin;
//! 2. a preconditioned projected descent with Barzilai-Borwein steps and an
//!    Armijo backtracking line search drives the constrained gradient below
//!    `tol_grad`. The working preconditioner is the Fourier-diagonal
//!    (1 - Lap)^{-1}; since -Lap + |x|^2 + 1 dominates -Lap + 1 as a
//!    quadratic form, the surrogate norm sqrt(<r, (1 - Lap)^{-1} r>) bounds
//!    the Sigma-dual norm of the gradient from above, so stopping on the
//!    surrogate certifies the dual residual too. The exact dual norm against
//!    A = -Lap + |x|^2 + 1 is evaluated once at exit and is what the report
//!    carries.
//!
//! The ball is monitored, never projected: a sustained exit with the energy
//! still falling aborts with `Error::EscapedBall`, anything else is reported
//! through the `feasible` flag.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

use crate::constants::small_mass_threshold;
use crate::energy::{self, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::field::{C64, WaveField};
use crate::grid::GridSpec;
use crate::oracle;
use crate::physics::PhysicsParams;
use crate::rng::{stream_rng, StreamKind};
use crate::sigma::{sigma_norm_sq, SigmaOp};
use crate::snapshot::read_snapshot;
use crate::spectral::Spectral;
use crate::states::{hermite_ground, random_envelope_field, vortex_mode};

/// How the solver builds its starting field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// sqrt(c) times the oscillator ground state.
    Gaussian,
    /// The Gaussian plus a seeded random envelope at ten percent mass mix.
    PerturbedGaussian,
    /// The Gaussian plus a unit-winding vortex component.
    VortexSeeded,
    /// A field read from a snapshot named by `init_file`.
    FromFile,
}

/// Knobs of the constrained minimizer: the constraint pair `(c, r)` plus
/// stepping and stopping controls with workable defaults.
#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    /// Target mass ||u||_2^2.
    pub c: f64,
    /// Squared-norm radius of the search ball.
    pub r: f64,
    /// Imaginary time step of the splitting phase.
    pub dt_imag: f64,
    /// Stopping threshold for the Sigma norm of the constrained gradient.
    pub tol_grad: f64,
    /// Iteration budget across both phases.
    pub max_iters: usize,
    pub init_kind: InitKind,
    /// Snapshot path backing `InitKind::FromFile`.
    pub init_file: Option<PathBuf>,
    /// Seed for randomized starts.
    pub seed: u64,
}

impl SolverConfig {
    /// Defaults for everything but the constraint pair.
    pub fn new(c: f64, r: f64) -> SolverConfig {
        SolverConfig {
            c,
            r,
            dt_imag: 1e-2,
            tol_grad: 1e-8,
            max_iters: 200_000,
            init_kind: InitKind::Gaussian,
            init_file: None,
            seed: 0,
        }
    }

    /// Positivity of the knobs, plus feasibility of the constraint pair in
    /// dimension `dim`: on S(c) the trap spectrum forces
    /// ||u||_Sigma-dot^2 >= N c, so the search set is empty unless c <= r/N.
    pub fn validate(&self, dim: usize) -> Result<()> {
        for (name, v) in [("c", self.c), ("r", self.r), ("dt_imag", self.dt_imag), ("tol_grad", self.tol_grad)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!(
                    "solver parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::Validation("max_iters must be at least 1".into()));
        }
        let n = dim as f64;
        if self.c > self.r / n {
            return Err(Error::Feasibility(format!(
                "mass c = {} exceeds r/N = {}: every u on S(c) has ||u||_Sigma-dot^2 >= N c, \
                 so S(c) meets B(r) only when c <= r/N",
                self.c,
                self.r / n
            )));
        }
        if self.init_kind == InitKind::FromFile && self.init_file.is_none() {
            return Err(Error::Validation(
                "init_kind = from_file requires an init_file path".into(),
            ));
        }
        Ok(())
    }
}

/// Position of a squared homogeneous norm relative to the ball split: the
/// well sits below nu r, the barrier region starts at mu r.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    InsideNuBall,
    Annulus,
    Boundary,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::InsideNuBall => "inside_nu_ball",
            Region::Annulus => "annulus",
            Region::Boundary => "boundary",
        };
        f.write_str(s)
    }
}

/// Classifies `sigma_dot_sq` against the split radii nu r and mu r, with
/// nu = (1 - |Omega|)/4 and mu = (1 + |Omega|)/2.
pub fn classify_region(sigma_dot_sq: f64, omega_mag: f64, r: f64) -> Region {
    let nu = (1.0 - omega_mag) / 4.0;
    let mu = (1.0 + omega_mag) / 2.0;
    if sigma_dot_sq <= nu * r {
        Region::InsideNuBall
    } else if sigma_dot_sq >= mu * r {
        Region::Annulus
    } else {
        Region::Boundary
    }
}

/// Output of `minimize_local`. The field itself is excluded from the JSON
/// form; snapshots carry it.
#[derive(Debug, Clone, Serialize)]
pub struct GroundStateReport {
    #[serde(skip)]
    pub field: WaveField,
    /// Lagrange multiplier at the final iterate.
    pub omega_c: f64,
    pub energy: EnergyBreakdown,
    /// Iterations consumed across both phases.
    pub iters: usize,
    /// Sigma norm of the constrained gradient at exit.
    pub grad_residual: f64,
    /// Ground-state projection coefficient <psi0, u>.
    pub l0: C64,
    /// ||u - l0 psi0||_Sigma^2.
    pub dist_sq_to_l0psi0: f64,
    pub region: Region,
    /// Mass on target to 1e-10 relative and sigma-dot^2 <= r.
    pub feasible: bool,
    /// Residual reached `tol_grad` within the iteration budget.
    pub converged: bool,
}

/// c0 = min(t1, t2, t3) for this physics and radius, resolving the sharp
/// interpolation constant through the cached radial oracle. With a = 0 only
/// the a-independent branch survives and no oracle solve happens.
pub fn mass_threshold(params: &PhysicsParams, r: f64) -> Result<f64> {
    let gn = if params.a() == 0.0 {
        1.0
    } else {
        oracle::gn_constant_cached(params.dim(), params.p())?.1
    };
    Ok(small_mass_threshold(params, r, gn))
}

fn initial_field(grid: GridSpec, params: &PhysicsParams, cfg: &SolverConfig) -> Result<WaveField> {
    let mut u = match cfg.init_kind {
        InitKind::Gaussian => hermite_ground(grid),
        InitKind::PerturbedGaussian => {
            let mut rng = stream_rng(cfg.seed, StreamKind::Init);
            let noise = random_envelope_field(grid, &mut rng);
            let mut u = hermite_ground(grid);
            let mix = 0.1 * (u.mass() / noise.mass()).sqrt();
            u.axpy(C64::new(mix, 0.0), &noise);
            u
        }
        InitKind::VortexSeeded => {
            let vortex = vortex_mode(grid);
            let mut u = hermite_ground(grid);
            u.axpy(C64::new(0.5 / vortex.mass().sqrt(), 0.0), &vortex);
            u
        }
        InitKind::FromFile => {
            let path = cfg.init_file.as_ref().expect("validated");
            let (f, header) = read_snapshot(path)?;
            if f.grid() != grid {
                return Err(Error::Validation(format!(
                    "snapshot grid ({}d, M = {}, L = {}) does not match the run grid ({}d, M = {}, L = {})",
                    header.grid.dim(),
                    header.grid.points_per_axis(),
                    header.grid.half_width(),
                    grid.dim(),
                    grid.points_per_axis(),
                    grid.half_width()
                )));
            }
            f
        }
    };
    if u.grid().dim() != params.dim() {
        return Err(Error::Validation(format!(
            "grid dimension {} does not match physics dimension {}",
            u.grid().dim(),
            params.dim()
        )));
    }
    u = u.renormalized(cfg.c)?;
    Ok(u)
}

/// Watches for a sustained exit from B(r) while the energy keeps falling,
/// the signature of a descent direction that leaves the search ball.
struct EscapeMonitor {
    r: f64,
    /// Energy at the step that first left the ball.
    exit_energy: Option<f64>,
    /// Consecutive observations outside the ball.
    streak: usize,
}

impl EscapeMonitor {
    fn new(r: f64) -> EscapeMonitor {
        EscapeMonitor { r, exit_energy: None, streak: 0 }
    }

    fn falling(&self, energy_now: f64) -> bool {
        match self.exit_energy {
            Some(e0) => energy_now < e0 - 1e-12 * e0.abs().max(1.0),
            None => false,
        }
    }

    fn observe(&mut self, sigma_dot_sq: f64, energy_now: f64, iter: usize) -> Result<()> {
        if sigma_dot_sq <= self.r {
            self.exit_energy = None;
            self.streak = 0;
            return Ok(());
        }
        self.streak += 1;
        if self.exit_energy.is_none() {
            self.exit_energy = Some(energy_now);
        } else if self.streak >= 25 && self.falling(energy_now) {
            return Err(Error::EscapedBall {
                sigma_dot_sq,
                r: self.r,
                iters: iter,
            });
        }
        Ok(())
    }

    /// Final verdict: a run that ends outside the ball having descended since
    /// it left found its minimum elsewhere, no matter how fast it got there.
    fn terminal(&self, sigma_dot_sq: f64, energy_now: f64, iters: usize) -> Result<()> {
        if sigma_dot_sq > self.r && self.falling(energy_now) {
            return Err(Error::EscapedBall {
                sigma_dot_sq,
                r: self.r,
                iters,
            });
        }
        Ok(())
    }
}

/// One imaginary-time splitting step at mass c. The pointwise substep decays
/// trap and nonlinearity exactly for the frozen modulus, the Fourier substep
/// decays the kinetic part exactly, the rotation substep is explicit Euler.
fn splitting_step(
    spec: &Spectral,
    ksq: &[f64],
    u: &mut WaveField,
    params: &PhysicsParams,
    dt: f64,
    c: f64,
) -> Result<()> {
    let grid = u.grid();
    let a = params.a();
    let e = (params.p() - 2.0) / 2.0;
    let mut x = [0.0f64; 3];
    for (flat, z) in u.values_mut().iter_mut().enumerate() {
        grid.coords_of(flat, &mut x);
        let r2: f64 = x[..grid.dim()].iter().map(|v| v * v).sum();
        let mut pot = 0.5 * r2;
        if a != 0.0 {
            let m2 = z.norm_sqr();
            // |z|^{p-2} with fast paths for the common integer exponents.
            let amp = if e == 1.0 { m2 } else if e == 2.0 { m2 * m2 } else { m2.powf(e) };
            pot -= a * amp;
        }
        *z *= (-dt * pot).exp();
    }
    let vals = u.values_mut();
    spec.forward_inplace(vals);
    for (z, kk) in vals.iter_mut().zip(ksq) {
        *z *= (-0.5 * dt * kk).exp();
    }
    spec.inverse_inplace(vals);
    if params.omega_mag() != 0.0 {
        let lz = spec.apply_lz(u);
        u.axpy(C64::new(dt * params.omega_mag(), 0.0), &lz);
    }
    *u = u.renormalized(c)?;
    u.check_finite("imaginary-time iterate")
}

/// Full constrained-gradient evaluation at one iterate.
struct Eval {
    bd: EnergyBreakdown,
    /// G(u) - omega u.
    residual: WaveField,
    /// (1 - Lap)^{-1} residual, the preconditioned direction.
    precond: WaveField,
    /// sqrt(<residual, precond>), an upper bound on the Sigma-dual norm.
    res_norm: f64,
}

fn eval_constrained(u: &WaveField, params: &PhysicsParams, spec: &Spectral) -> Result<Eval> {
    let pieces = energy::gradient_pieces(u, params)?;
    let bd = pieces.breakdown(u, params)?;
    let mut residual = pieces.gradient(params);
    residual.axpy(C64::new(-bd.omega_est, 0.0), u);
    let precond = spec.smoothing_inverse(&residual);
    let res_norm = residual.inner_re(&precond).max(0.0).sqrt();
    if !res_norm.is_finite() {
        return Err(Error::NonFinite("constrained gradient residual".into()));
    }
    Ok(Eval { bd, residual, precond, res_norm })
}

struct RunState {
    u: WaveField,
    iters: usize,
    eval: Eval,
}

/// Phase 1: imaginary-time splitting until the residual is small enough for
/// the descent phase, the energy stalls, or the budget runs out. Any step
/// that raises the energy is rejected and retried with half the time step, so
/// the accepted trajectory is monotone.
fn splitting_phase(
    mut u: WaveField,
    params: &PhysicsParams,
    cfg: &SolverConfig,
    spec: &Spectral,
    monitor: &mut EscapeMonitor,
    trace: &mut Option<&mut Vec<f64>>,
) -> Result<RunState> {
    let ksq = spec.ksq_table();
    // Explicit rotation advects with speed |Omega| |x|; keep the step a safe
    // fraction of a cell crossing at the box corner.
    let mut dt = cfg.dt_imag;
    if params.omega_mag() > 0.0 {
        let corner = u.grid().half_width() * (2.0f64).sqrt();
        dt = dt.min(0.5 * u.grid().spacing() / (params.omega_mag() * corner));
    }
    let dt_init = dt;
    let dt_floor = dt * 1e-4;
    let switch_tol = (1e-3 * cfg.c.sqrt()).max(cfg.tol_grad);

    let mut eval = eval_constrained(&u, params, spec)?;
    if let Some(t) = trace.as_deref_mut() {
        t.push(eval.bd.total);
    }
    let mut iters = 0usize;
    let mut window_start = eval.bd.total;
    let mut since_window = 0usize;
    let mut accept_streak = 0usize;
    while iters < cfg.max_iters && eval.res_norm > switch_tol {
        let mut cand = u.clone();
        splitting_step(spec, &ksq, &mut cand, params, dt, cfg.c)?;
        let cand_bd = energy::energy(&cand, params)?;
        iters += 1;
        if cand_bd.total > eval.bd.total + 1e-13 * eval.bd.total.abs().max(1.0) {
            dt *= 0.5;
            accept_streak = 0;
            if dt < dt_floor {
                break;
            }
            continue;
        }
        u = cand;
        // Cheap scalar refresh between the periodic full evaluations.
        eval.bd = cand_bd;
        if let Some(t) = trace.as_deref_mut() {
            t.push(eval.bd.total);
        }
        monitor.observe(eval.bd.sigma_dot, eval.bd.total, iters)?;
        accept_streak += 1;
        if accept_streak >= 50 {
            // A long run of accepted steps earns the step size back.
            dt = (dt * 1.5).min(dt_init);
            accept_streak = 0;
        }
        since_window += 1;
        if since_window >= 25 {
            eval = eval_constrained(&u, params, spec)?;
            if eval.res_norm <= switch_tol {
                break;
            }
            let progress = window_start - eval.bd.total;
            if progress < 1e-14 * eval.bd.total.abs().max(1.0) {
                break;
            }
            window_start = eval.bd.total;
            since_window = 0;
        }
    }
    eval = eval_constrained(&u, params, spec)?;
    Ok(RunState { u, iters, eval })
}

/// Phase 2: projected Barzilai-Borwein descent with Armijo backtracking on
/// the renormalization retraction. When the energy test hits the
/// floating-point floor (differences of order res^2 drown in rounding), the
/// search falls back to accepting on residual decrease before giving up.
fn descent_phase(
    state: RunState,
    params: &PhysicsParams,
    cfg: &SolverConfig,
    spec: &Spectral,
    monitor: &mut EscapeMonitor,
    trace: &mut Option<&mut Vec<f64>>,
) -> Result<RunState> {
    let RunState { mut u, mut iters, eval } = state;
    let c = cfg.c;
    let mut eval = eval;
    let mut prev: Option<(WaveField, WaveField)> = None;
    let mut alpha = 1.0f64;

    while iters < cfg.max_iters && eval.res_norm > cfg.tol_grad {
        // Preconditioned direction, projected onto the sphere tangent.
        let mut d = eval.precond.clone();
        let radial = u.inner_re(&d) / c;
        d.axpy(C64::new(-radial, 0.0), &u);
        let mut slope = eval.residual.inner_re(&d);
        if !slope.is_finite() {
            return Err(Error::NonFinite("descent slope".into()));
        }
        if slope <= 0.0 {
            // Preconditioner defeated by curvature; fall back to the plain
            // projected gradient, whose slope is the squared residual.
            d = eval.residual.clone();
            slope = eval.residual.inner_re(&d);
            if slope <= 0.0 {
                break;
            }
        }
        if let Some((pu, pr)) = &prev {
            let mut s = u.clone();
            s.axpy(C64::new(-1.0, 0.0), pu);
            let mut y = eval.residual.clone();
            y.axpy(C64::new(-1.0, 0.0), pr);
            let sy = s.inner_re(&y);
            let ss = s.inner_re(&s);
            alpha = if sy > 1e-300 { (ss / sy).clamp(1e-3, 1e2) } else { 1.0 };
        }

        let alpha_bb = alpha;
        let i0 = eval.bd.total;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial = u.clone();
            trial.axpy(C64::new(-alpha, 0.0), &d);
            let trial = trial.renormalized(c)?;
            let tbd = energy::energy(&trial, params)?;
            if tbd.total <= i0 - 1e-4 * alpha * slope {
                accepted = Some((trial, tbd));
                break;
            }
            alpha *= 0.5;
        }
        iters += 1;
        let (next, next_eval) = match accepted {
            Some((trial, tbd)) => {
                let mut ev = eval_constrained(&trial, params, spec)?;
                ev.bd = tbd;
                (trial, ev)
            }
            None => {
                // The energy differences have sunk below rounding. Restart
                // from the BB step and accept on residual decrease instead;
                // if even the residual refuses to fall, the iterate is at
                // the floor and the loop ends.
                let mut step = alpha_bb;
                let mut rescued = None;
                for _ in 0..20 {
                    let mut trial = u.clone();
                    trial.axpy(C64::new(-step, 0.0), &d);
                    let trial = trial.renormalized(c)?;
                    let ev = eval_constrained(&trial, params, spec)?;
                    if ev.res_norm <= (1.0 - 1e-3) * eval.res_norm {
                        rescued = Some((trial, ev));
                        break;
                    }
                    step *= 0.5;
                }
                match rescued {
                    Some(pair) => pair,
                    None => break,
                }
            }
        };
        prev = Some((u, eval.residual.clone()));
        u = next;
        eval = next_eval;
        if let Some(t) = trace.as_deref_mut() {
            t.push(eval.bd.total);
        }
        monitor.observe(eval.bd.sigma_dot, eval.bd.total, iters)?;
    }
    Ok(RunState { u, iters, eval })
}

/// Applies the global phase gauge (ground-state projection real nonnegative
/// when it carries weight) and assembles the report. The exact Sigma-dual
/// residual is evaluated here, once.
fn finish(state: RunState, params: &PhysicsParams, cfg: &SolverConfig) -> Result<GroundStateReport> {
    let RunState { mut u, iters, eval } = state;
    let dual = SigmaOp::for_grid(u.grid()).dual_norm(&eval.residual);
    let psi0 = hermite_ground(u.grid());
    let mut l0 = psi0.inner(&u);
    if l0.norm() > 1e-12 * cfg.c.sqrt() {
        let phase = C64::from_polar(1.0, -l0.arg());
        u.scale(phase);
        l0 = psi0.inner(&u);
    }
    let mut diff = u.clone();
    diff.axpy(-l0, &psi0);
    let dist_sq = sigma_norm_sq(&diff);

    let bd = eval.bd;
    let mass_ok = (u.mass() - cfg.c).abs() <= 1e-10 * cfg.c;
    let feasible = mass_ok && bd.sigma_dot <= cfg.r;
    let region = classify_region(bd.sigma_dot, params.omega_mag(), cfg.r);
    Ok(GroundStateReport {
        field: u,
        omega_c: bd.omega_est,
        energy: bd,
        iters,
        grad_residual: dual,
        l0,
        dist_sq_to_l0psi0: dist_sq,
        region,
        feasible,
        converged: dual <= cfg.tol_grad,
    })
}

fn run_minimizer(
    init: WaveField,
    params: &PhysicsParams,
    cfg: &SolverConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<GroundStateReport> {
    let c0 = mass_threshold(params, cfg.r)?;
    if cfg.c >= c0 {
        eprintln!(
            "warning: mass c = {:.6e} is not below the small-mass threshold c0 = {:.6e}; \
             the constrained minimizer may not exist and the descent may leave the ball",
            cfg.c, c0
        );
    }
    let spec = Spectral::for_grid(init.grid());
    let mut monitor = EscapeMonitor::new(cfg.r);
    let state = splitting_phase(init, params, cfg, &spec, &mut monitor, &mut trace)?;
    let state = descent_phase(state, params, cfg, &spec, &mut monitor, &mut trace)?;
    monitor.terminal(state.eval.bd.sigma_dot, state.eval.bd.total, state.iters)?;
    finish(state, params, cfg)
}

/// Minimizes I on S(c) near the trap ground state, reporting the minimizer,
/// its multiplier, and the feasibility certificates. Exhausting `max_iters`
/// yields a non-converged report, not an error; leaving B(r) with the energy
/// still decreasing is an error.
pub fn minimize_local(
    grid: GridSpec,
    params: &PhysicsParams,
    cfg: &SolverConfig,
) -> Result<GroundStateReport> {
    cfg.validate(params.dim())?;
    let init = initial_field(grid, params, cfg)?;
    run_minimizer(init, params, cfg, None)
}

/// `minimize_local` from an explicit starting field (renormalized to mass c),
/// used for warm starts along a mass sweep.
pub fn minimize_from(
    init: &WaveField,
    params: &PhysicsParams,
    cfg: &SolverConfig,
) -> Result<GroundStateReport> {
    cfg.validate(params.dim())?;
    let init = init.renormalized(cfg.c)?;
    run_minimizer(init, params, cfg, None)
}

#[cfg(test)]
pub(crate) fn minimize_traced(
    grid: GridSpec,
    params: &PhysicsParams,
    cfg: &SolverConfig,
    trace: &mut Vec<f64>,
) -> Result<GroundStateReport> {
    cfg.validate(params.dim())?;
    let init = initial_field(grid, params, cfg)?;
    run_minimizer(init, params, cfg, Some(trace))
}

/// Ground-state projection coefficient and squared Sigma distance to the
/// projected Gaussian: `(l0, ||u - l0 psi0||_Sigma^2)` with l0 = <psi0, u>.
/// The complex coefficient absorbs any global phase of `u`.
pub fn dist_to_gaussian(u: &WaveField) -> (C64, f64) {
    let psi0 = hermite_ground(u.grid());
    let l0 = psi0.inner(u);
    let mut diff = u.clone();
    diff.axpy(-l0, &psi0);
    (l0, sigma_norm_sq(&diff))
}

/// One row of the small-mass sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub c: f64,
    /// I(u_c)/c.
    pub m_over_c: f64,
    pub omega_c: f64,
    /// (||grad u||^2 - <u, Omega L u>)/c.
    pub ratio_grad: f64,
    /// (||x u||^2 - <u, Omega L u>)/c.
    pub ratio_trap: f64,
    /// ||u_c - l0 psi0||_Sigma^2.
    pub dist_sq: f64,
    pub region: Region,
    pub converged: bool,
}

fn poisoned_row(c: f64) -> SweepRow {
    SweepRow {
        c,
        m_over_c: f64::NAN,
        omega_c: f64::NAN,
        ratio_grad: f64::NAN,
        ratio_trap: f64::NAN,
        dist_sq: f64::NAN,
        region: Region::Boundary,
        converged: false,
    }
}

fn row_from_report(c: f64, rep: &GroundStateReport) -> SweepRow {
    let bd = rep.energy;
    SweepRow {
        c,
        m_over_c: bd.total / c,
        omega_c: rep.omega_c,
        ratio_grad: (2.0 * bd.kinetic - bd.rotation) / c,
        ratio_trap: (2.0 * bd.trap - bd.rotation) / c,
        dist_sq: rep.dist_sq_to_l0psi0,
        region: rep.region,
        converged: rep.converged,
    }
}

/// Runs the minimizer along a strictly decreasing list of masses below c0,
/// warm starting each solve from the previous minimizer. Rows come back
/// sorted by increasing mass. A failed solve poisons only its own row; the
/// following mass restarts cold.
pub fn asymptotics_sweep(
    grid: GridSpec,
    params: &PhysicsParams,
    base: &SolverConfig,
    c_list: &[f64],
) -> Result<Vec<SweepRow>> {
    if c_list.is_empty() {
        return Err(Error::Validation("sweep mass list is empty".into()));
    }
    for pair in c_list.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::Validation(format!(
                "sweep masses must be strictly decreasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    let c0 = mass_threshold(params, base.r)?;
    for &c in c_list {
        if !(c > 0.0 && c < c0) {
            return Err(Error::Validation(format!(
                "sweep mass {c} must sit in (0, c0) with c0 = {c0}"
            )));
        }
        let mut cfg = base.clone();
        cfg.c = c;
        cfg.validate(params.dim())?;
    }

    let mut rows = Vec::with_capacity(c_list.len());
    let mut warm: Option<WaveField> = None;
    for &c in c_list {
        let mut cfg = base.clone();
        cfg.c = c;
        let solved = match &warm {
            Some(w) => minimize_from(w, params, &cfg),
            None => minimize_local(grid, params, &cfg),
        };
        match solved {
            Ok(rep) => {
                rows.push(row_from_report(c, &rep));
                warm = Some(rep.field);
            }
            Err(Error::Validation(m)) => return Err(Error::Validation(m)),
            Err(_) => {
                rows.push(poisoned_row(c));
                warm = None;
            }
        }
    }
    rows.sort_by(|a, b| a.c.total_cmp(&b.c));
    Ok(rows)
}

/// Two-sided probe of the energy landscape split at mass c: the minimum over
/// the well (from the local solve) against a penalized minimum over the
/// barrier annulus {mu r <= ||u||_Sigma-dot^2 <= r} on the same sphere,
/// with the closed-form ceiling and floor both problems must respect.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryProbe {
    pub c: f64,
    pub r: f64,
    /// Minimum energy found inside the well.
    pub inf_ball: f64,
    /// Minimum energy found on the annulus, evaluated at a field projected
    /// exactly onto sigma-dot^2 = mu r when the penalty leaves it below.
    pub inf_annulus: f64,
    /// inf_annulus - inf_ball; positive means the barrier is present.
    pub gap: f64,
    /// Ceiling nu r C^* for the well minimum.
    pub ball_bound: f64,
    /// Floor mu r (C_* - (2a/p) C^p r^{(p delta - 2)/2} c^{p(1-delta)/2})
    /// for the annulus minimum.
    pub annulus_bound: f64,
    pub minimizer_sigma_dot_sq: f64,
    pub minimizer_region: Region,
}

/// Solves both sides of the landscape split. Requires c < c0.
pub fn geometry_probe(
    grid: GridSpec,
    params: &PhysicsParams,
    cfg: &SolverConfig,
) -> Result<GeometryProbe> {
    cfg.validate(params.dim())?;
    let c0 = mass_threshold(params, cfg.r)?;
    if !(cfg.c < c0) {
        return Err(Error::Validation(format!(
            "geometry probe requires c < c0, got c = {} with c0 = {c0}",
            cfg.c
        )));
    }
    let w = params.omega_mag();
    let nu = (1.0 - w) / 4.0;
    let mu = (1.0 + w) / 2.0;
    let c_star = (1.0 - w * w) / (2.0 * (1.0 + 3.0 * w));
    let c_upper = (1.0 + 6.0 * w + w * w) / (2.0 * (1.0 + 3.0 * w));
    let gn = if params.a() == 0.0 {
        1.0
    } else {
        oracle::gn_constant_cached(params.dim(), params.p())?.1
    };
    let shift = 2.0 * params.a() / params.p()
        * gn.powf(params.p())
        * cfg.r.powf((params.p_delta() - 2.0) / 2.0)
        * cfg.c.powf(params.p() * (1.0 - params.delta_p()) / 2.0);
    let ball_bound = nu * cfg.r * c_upper;
    let annulus_bound = mu * cfg.r * (c_star - shift);

    let rep = minimize_local(grid, params, cfg)?;
    let inf_ball = rep.energy.total;

    let inf_annulus = annulus_minimum(grid, params, cfg, mu)?;
    Ok(GeometryProbe {
        c: cfg.c,
        r: cfg.r,
        inf_ball,
        inf_annulus,
        gap: inf_annulus - inf_ball,
        ball_bound,
        annulus_bound,
        minimizer_sigma_dot_sq: rep.energy.sigma_dot,
        minimizer_region: rep.region,
    })
}

/// Penalized minimization of I over S(c) with sigma-dot^2 confined to
/// [mu r, r], then exact dilation projection onto the inner edge when the
/// penalty equilibrium settles slightly below it.
fn annulus_minimum(
    grid: GridSpec,
    params: &PhysicsParams,
    cfg: &SolverConfig,
    mu: f64,
) -> Result<f64> {
    let spec = Spectral::for_grid(grid);
    let sigma = SigmaOp::for_grid(grid);
    let c = cfg.c;
    let lo = mu * cfg.r;
    let hi = cfg.r;
    let beta = 1e3 / lo;
    let n = params.dim() as f64;

    // Width-lambda Gaussian on S(c) with sigma-dot^2 at mid-annulus:
    // sigma-dot^2 = c N (lambda + 1/lambda)/2.
    let target = 0.5 * (lo + hi);
    let t = 2.0 * target / (c * n);
    let lambda = 0.5 * (t + (t * t - 4.0).max(0.0).sqrt());
    let mut u = WaveField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        C64::new((-0.5 * lambda * r2).exp(), 0.0)
    });
    u = u.renormalized(c)?;

    let penalty = |s: f64| -> f64 {
        let below = (lo - s).max(0.0);
        let above = (s - hi).max(0.0);
        beta * (below * below + above * above)
    };
    let penalty_slope = |s: f64| -> f64 {
        let below = (lo - s).max(0.0);
        let above = (s - hi).max(0.0);
        beta * (-2.0 * below + 2.0 * above)
    };

    let mut alpha = 1.0f64;
    let mut prev: Option<(WaveField, WaveField)> = None;
    let mut pieces = energy::gradient_pieces(&u, params)?;
    let mut bd = pieces.breakdown(&u, params)?;
    for _ in 0..4000 {
        // Gradient of J = I + penalty(sigma-dot^2): the chain rule adds
        // penalty'(s) (-Lap u + |x|^2 u) on top of G.
        let mut g = pieces.gradient(params);
        let slope_pen = penalty_slope(bd.sigma_dot);
        if slope_pen != 0.0 {
            g.axpy(C64::new(2.0 * slope_pen, 0.0), &pieces.lap_half);
            g.axpy(C64::new(2.0 * slope_pen, 0.0), &pieces.trap_half);
        }
        let omega = u.inner_re(&g) / c;
        let mut residual = g;
        residual.axpy(C64::new(-omega, 0.0), &u);
        let precond = sigma.apply_inverse(&residual);
        let res_norm = residual.inner_re(&precond).max(0.0).sqrt();
        if res_norm <= 1e-6 {
            break;
        }
        let mut d = precond;
        let radial = u.inner_re(&d) / c;
        d.axpy(C64::new(-radial, 0.0), &u);
        let mut slope = residual.inner_re(&d);
        if slope <= 0.0 {
            d = residual.clone();
            slope = residual.inner_re(&d);
            if slope <= 0.0 {
                break;
            }
        }
        if let Some((pu, pr)) = &prev {
            let mut s = u.clone();
            s.axpy(C64::new(-1.0, 0.0), pu);
            let mut y = residual.clone();
            y.axpy(C64::new(-1.0, 0.0), pr);
            let sy = s.inner_re(&y);
            alpha = if sy > 1e-300 { (s.inner_re(&s) / sy).clamp(1e-3, 1e2) } else { 1.0 };
        }
        let j0 = bd.total + penalty(bd.sigma_dot);
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial = u.clone();
            trial.axpy(C64::new(-alpha, 0.0), &d);
            let trial = trial.renormalized(c)?;
            let tbd = energy::energy(&trial, params)?;
            let tj = tbd.total + penalty(tbd.sigma_dot);
            if tj <= j0 - 1e-4 * alpha * slope {
                accepted = Some((trial, tbd));
                break;
            }
            alpha *= 0.5;
        }
        let Some((next, next_bd)) = accepted else { break };
        prev = Some((u, residual));
        u = next;
        bd = next_bd;
        pieces = energy::gradient_pieces(&u, params)?;
    }

    // The quadratic penalty settles marginally below the inner edge; project
    // back onto sigma-dot^2 = mu r along the mass-preserving dilation through
    // u, where sigma-dot^2(tau) = tau^2 |grad|^2 + |x u|^2 / tau^2.
    let gsq = 2.0 * bd.kinetic;
    let xsq = 2.0 * bd.trap;
    if bd.sigma_dot < lo && gsq > 0.0 {
        let disc = lo * lo - 4.0 * gsq * xsq;
        if disc >= 0.0 {
            let tau_sq = (lo + disc.sqrt()) / (2.0 * gsq);
            let tau = tau_sq.sqrt();
            if let Ok(projected) = spec.dilate(&u, tau) {
                let pbd = energy::energy(&projected, params)?;
                return Ok(pbd.total);
            }
        }
    }
    Ok(bd.total)
}
