//! Mountain-pass machinery: a compressed negative-energy endpoint, dilation
//! paths from the local minimizer to it, relaxation of the path maximum, and
//! refinement of the maximal node into a constrained saddle candidate.
//!
//! The level estimate is one-sided: relaxing a 33-node path can only bound
//! the min-max from above, so the report carries gamma_c as an upper
//! estimate together with residual certificates (|Q| and the Sigma-dual
//! gradient norm) for the refined candidate. Whether the candidate is the
//! same critical point abstract min-max theory produces is not certifiable;
//! it is reported as a candidate only.

use serde::Serialize;

use crate::constants::{compute_constants, frequency_condition};
use crate::energy::{self, energy, energy_gradient, gradient_pieces, lagrange_omega};
use crate::error::{Error, Result};
use crate::field::{C64, WaveField};
use crate::grid::GridSpec;
use crate::groundstate::{minimize_local, SolverConfig};
use crate::oracle;
use crate::physics::PhysicsParams;
use crate::sigma::{sigma_norm_sq, SigmaOp};
use crate::spectral::Spectral;

const RES_TOL: f64 = 1e-5;
const Q_TOL: f64 = 1e-4;
/// I within this (relative) window of the minimizer level counts as collapse.
const COLLAPSE_TOL: f64 = 1e-6;
const REFINE_MAX_ITERS: usize = 2000;
/// Largest compression the resampler accepts before the grid gives out.
const MAX_COMPRESSION: f64 = 100.0;

/// Saddle search outcome. `gamma_c` is the relaxed path maximum (an upper
/// estimate of the min-max level), `m_c_r` the minimizer level it must
/// exceed.
#[derive(Debug, Clone, Serialize)]
pub struct MountainPassReport {
    pub gamma_c: f64,
    /// (t parameter, I value) per node of the relaxed path.
    pub path_nodes: Vec<(f64, f64)>,
    #[serde(skip)]
    pub saddle_field: WaveField,
    pub saddle_energy: f64,
    pub saddle_q: f64,
    /// Sigma-dual norm of G(u) - omega u at the accepted candidate.
    pub saddle_grad_residual: f64,
    pub omega_hat: f64,
    pub m_c_r: f64,
}

/// A mass-sphere path sampled at `ts` in [0, 1], energies kept in step with
/// the nodes.
#[derive(Debug, Clone)]
pub struct ScalingPath {
    pub ts: Vec<f64>,
    pub nodes: Vec<WaveField>,
    pub energies: Vec<f64>,
}

impl ScalingPath {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index and value of the largest node energy.
    pub fn max_node(&self) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &e) in self.energies.iter().enumerate() {
            if e > best.1 {
                best = (i, e);
            }
        }
        best
    }

    pub fn profile(&self) -> Vec<(f64, f64)> {
        self.ts.iter().copied().zip(self.energies.iter().copied()).collect()
    }
}

fn resolution_hint(l: f64, err: Error) -> Error {
    match err {
        Error::ResolutionLoss(msg) => Error::ResolutionLoss(format!(
            "compression l = {l} is not representable: {msg}; rerun with more points per axis"
        )),
        other => other,
    }
}

/// Compresses the minimizer until its energy goes negative and it leaves the
/// ball: v_c = l^{N/2} u_c(l x), doubling l from 2. Returns the endpoint and
/// the compression actually used.
pub fn endpoint_v_c(u_c: &WaveField, params: &PhysicsParams, r: f64) -> Result<(WaveField, f64)> {
    if params.a() <= 0.0 {
        return Err(Error::Validation(
            "endpoint construction needs a > 0: without focusing no compression reaches a negative level".into(),
        ));
    }
    if params.p_delta() <= 2.0 + 1e-12 {
        return Err(Error::Validation(format!(
            "endpoint construction needs p delta_p > 2 (p > 2 + 4/N); got p delta_p = {}",
            params.p_delta()
        )));
    }
    if !(r > 0.0) {
        return Err(Error::Validation(format!("ball radius must be positive, got {r}")));
    }
    u_c.check_finite("endpoint base state")?;
    let spec = Spectral::for_grid(u_c.grid());
    let c = u_c.mass();
    let mut l = 2.0f64;
    loop {
        if l > MAX_COMPRESSION {
            return Err(Error::ResolutionLoss(format!(
                "no compression up to l = {MAX_COMPRESSION} reaches a negative level outside the ball; \
                 rerun with more points per axis"
            )));
        }
        // The continuum dilation is exactly mass-preserving; renormalizing
        // projects the resampling error back onto the sphere.
        let v = spec
            .dilate(u_c, l)
            .map_err(|e| resolution_hint(l, e))?
            .renormalized(c)?;
        let total = energy(&v, params)?.total;
        if total < 0.0 && energy::sigma_dot_sq(&v) > r {
            return Ok((v, l));
        }
        l *= 2.0;
    }
}

/// Samples g(t) = (1 + t(l-1))^{N/2} u_c((1 + t(l-1)) x) at `n_nodes`
/// uniform parameters. Node 0 is u_c itself.
pub fn baseline_path(
    u_c: &WaveField,
    l: f64,
    n_nodes: usize,
    params: &PhysicsParams,
) -> Result<ScalingPath> {
    if n_nodes < 17 {
        return Err(Error::Validation(format!(
            "path needs at least 17 nodes, got {n_nodes}"
        )));
    }
    if !(l > 1.0 && l.is_finite()) {
        return Err(Error::Validation(format!(
            "path endpoint compression must exceed 1, got {l}"
        )));
    }
    let spec = Spectral::for_grid(u_c.grid());
    let c = u_c.mass();
    let mut ts = Vec::with_capacity(n_nodes);
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut energies = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let t = i as f64 / (n_nodes - 1) as f64;
        let node = if i == 0 {
            u_c.clone()
        } else {
            let tau = 1.0 + t * (l - 1.0);
            spec.dilate(u_c, tau)
                .map_err(|e| resolution_hint(tau, e))?
                .renormalized(c)?
        };
        energies.push(energy(&node, params)?.total);
        ts.push(t);
        nodes.push(node);
    }
    Ok(ScalingPath { ts, nodes, energies })
}

/// Knobs for the path relaxation. The softmax temperature halves every
/// `anneal_every` sweeps so late sweeps concentrate on the crest.
#[derive(Debug, Clone)]
pub struct GammaOptions {
    pub n_nodes: usize,
    pub sweeps: usize,
    pub anneal_every: usize,
    pub init_step: f64,
}

impl Default for GammaOptions {
    fn default() -> GammaOptions {
        GammaOptions { n_nodes: 33, sweeps: 600, anneal_every: 200, init_step: 0.2 }
    }
}

fn plain_sigma_dist(u: &WaveField, v: &WaveField) -> f64 {
    let mut d = u.clone();
    d.axpy(C64::new(-1.0, 0.0), v);
    sigma_norm_sq(&d).max(0.0).sqrt()
}

/// Largest and mean adjacent-node Sigma distance.
fn adjacency(path: &ScalingPath) -> (f64, f64) {
    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    for w in path.nodes.windows(2) {
        let d = plain_sigma_dist(&w[0], &w[1]);
        max = max.max(d);
        sum += d;
    }
    (max, sum / (path.len() - 1) as f64)
}

/// Redistributes interior nodes uniformly in Sigma arc length along the
/// piecewise-linear path, renormalizing each interpolant back to the sphere.
fn reparameterize(path: &ScalingPath, c: f64, params: &PhysicsParams) -> Result<ScalingPath> {
    let n = path.len();
    let mut cum = vec![0.0f64; n];
    for i in 1..n {
        cum[i] = cum[i - 1] + plain_sigma_dist(&path.nodes[i - 1], &path.nodes[i]);
    }
    let total = cum[n - 1];
    if !(total > 0.0) {
        return Err(Error::PathTorn("path has zero arc length; nodes coincide".into()));
    }
    let mut nodes = Vec::with_capacity(n);
    let mut energies = Vec::with_capacity(n);
    nodes.push(path.nodes[0].clone());
    energies.push(path.energies[0]);
    let mut seg = 0usize;
    for j in 1..n - 1 {
        let target = total * j as f64 / (n - 1) as f64;
        while seg + 2 < n && cum[seg + 1] < target {
            seg += 1;
        }
        let width = (cum[seg + 1] - cum[seg]).max(f64::MIN_POSITIVE);
        let frac = ((target - cum[seg]) / width).clamp(0.0, 1.0);
        let mut w = path.nodes[seg].clone();
        w.scale(C64::new(1.0 - frac, 0.0));
        w.axpy(C64::new(frac, 0.0), &path.nodes[seg + 1]);
        let w = w.renormalized(c)?;
        energies.push(energy(&w, params)?.total);
        nodes.push(w);
    }
    nodes.push(path.nodes[n - 1].clone());
    energies.push(path.energies[n - 1]);
    Ok(ScalingPath { ts: path.ts.clone(), nodes, energies })
}

/// Relaxes the explicit dilation path between `u_c` and `v_c` with a string
/// sweep: interior nodes move along their smoothed constrained residuals,
/// weighted by softmax proximity to the crest, then the whole chain is
/// redistributed along its Sigma arc length. The step grows on sweeps that
/// lower the path maximum and shrinks otherwise, and the best path seen is
/// what comes back. Returns the relaxed maximum (an upper estimate of the
/// min-max level) and the relaxed path.
pub fn estimate_gamma(
    u_c: &WaveField,
    v_c: &WaveField,
    params: &PhysicsParams,
    opts: &GammaOptions,
) -> Result<(f64, ScalingPath)> {
    if params.a() <= 0.0 {
        return Err(Error::Validation(
            "path relaxation needs a > 0; no negative endpoint exists otherwise".into(),
        ));
    }
    if u_c.grid() != v_c.grid() {
        return Err(Error::Validation("path endpoints live on different grids".into()));
    }
    let c = u_c.mass();
    if (v_c.mass() - c).abs() > 1e-8 * c {
        return Err(Error::Validation(format!(
            "path endpoints carry different masses: {} vs {}",
            c,
            v_c.mass()
        )));
    }
    if energy(v_c, params)?.total >= 0.0 {
        return Err(Error::Validation(
            "far endpoint must have negative energy; build it with the compression doubling".into(),
        ));
    }
    let spec = Spectral::for_grid(u_c.grid());
    // The endpoint is an exact dilate of u_c, so the kinetic ratio recovers l.
    let l = (spec.grad_sq(v_c) / spec.grad_sq(u_c)).sqrt();
    let mut path = baseline_path(u_c, l, opts.n_nodes, params)?;
    let last = path.len() - 1;
    path.nodes[last] = v_c.clone();
    path.energies[last] = energy(v_c, params)?.total;

    let baseline_max = path.max_node().1;
    let (_, mean_ref) = adjacency(&path);
    let length_bound = 3.0 * mean_ref * last as f64;
    // Temperature from the crest's local prominence, not the full spread:
    // the far side plunges steeply once compression wins, and coupling the
    // softmax to that plunge would drag half the path downhill.
    let mut sorted = path.energies.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mut temp = ((baseline_max - median) / 10.0).max(1e-9);
    let mut eta = opts.init_step;
    let scale = 1.0 + baseline_max.abs();

    // String evolution: descend the coupled nodes, then redistribute along
    // arc length every sweep. Without the redistribution, neighbors descend
    // off opposite sides of the col and the chain snaps at the crest.
    let mut best = (baseline_max, path.clone());
    let mut prev_max = baseline_max;
    for sweep in 1..=opts.sweeps {
        if sweep % opts.anneal_every == 0 {
            temp *= 0.5;
        }
        let emax = path.max_node().1;
        // Cap every node's move at half the mean node spacing so one sweep
        // can never tear the chain, whatever the local gradient does.
        let (_, mean_adj) = adjacency(&path);
        let cap = 0.5 * mean_adj;
        // Move nodes softmax-coupled to the crest; skip the decoupled ones.
        let mut moved = false;
        for i in 1..last {
            let weight = ((path.energies[i] - emax) / temp).exp();
            if weight < 1e-3 {
                continue;
            }
            let u = &path.nodes[i];
            let g = energy_gradient(u, params)?;
            let omega = lagrange_omega(u, params)?;
            let mut r = g;
            r.axpy(C64::new(-omega, 0.0), u);
            let mut dir = spec.smoothing_inverse(&r);
            let tang = dir.inner_re(u) / c;
            dir.axpy(C64::new(-tang, 0.0), u);
            let mut step = eta * weight;
            let dir_len = sigma_norm_sq(&dir).max(0.0).sqrt();
            if cap > 0.0 && step * dir_len > cap {
                step = cap / dir_len;
            }
            let mut trial = u.clone();
            trial.axpy(C64::new(-step, 0.0), &dir);
            let trial = trial.renormalized(c)?;
            path.energies[i] = energy(&trial, params)?.total;
            path.nodes[i] = trial;
            moved = true;
        }
        if !moved {
            break;
        }
        path = reparameterize(&path, c, params)?;
        let (_, mean_now) = adjacency(&path);
        if mean_now * last as f64 > length_bound {
            return Err(Error::PathTorn(format!(
                "path length grew to {:.3e} in Sigma, more than triple its baseline {:.3e}; \
                 the band snapped despite per-sweep redistribution",
                mean_now * last as f64,
                mean_ref * last as f64
            )));
        }
        let new_max = path.max_node().1;
        if new_max <= prev_max + 1e-12 * scale {
            eta = (eta * 1.2).min(2.0);
        } else {
            eta *= 0.5;
            if eta < 1e-8 {
                break;
            }
        }
        prev_max = new_max;
        if new_max < best.0 {
            best = (new_max, path.clone());
        }
    }

    // A relaxation that never improved on the baseline returns the baseline.
    let (gamma, path) = best;
    debug_assert!(gamma <= baseline_max + 1e-9 * scale);
    Ok((gamma, path))
}

/// Polishes the maximal path node into a constrained critical point by
/// minimizing phi(u) = <r, (1 - Lap)^{-1} r> for r = G(u) - omega u on the
/// mass sphere, with omega refreshed from the iterate. phi dominates the
/// squared Sigma-dual residual, so driving it down drives the dual residual
/// down too; the exact dual norm is evaluated once at exit and gates
/// acceptance together with the Pohozaev certificate.
pub fn refine_saddle(path: &ScalingPath, params: &PhysicsParams) -> Result<MountainPassReport> {
    if path.len() < 3 {
        return Err(Error::Validation("path too short to carry an interior maximum".into()));
    }
    let (imax, gamma) = path.max_node();
    let last = path.len() - 1;
    if imax == 0 || imax == last {
        return Err(Error::Validation(
            "path maximum sits on an endpoint; relax the path before refining".into(),
        ));
    }
    let m_c_r = path.energies[0];
    if gamma <= m_c_r {
        return Err(Error::NonConvergence(format!(
            "path maximum {gamma} does not exceed the minimizer level {m_c_r}"
        )));
    }
    let c = path.nodes[0].mass();
    let grid = path.nodes[0].grid();
    let spec = Spectral::for_grid(grid);

    // Coercivity floor for the monitored lower bound on iterates, when the
    // rotation is slow enough for the pack to exist.
    let coercivity = if params.omega_mag() > 0.0 && frequency_condition(params) {
        let gn = oracle::gn_constant_cached(params.dim(), params.p())?.1;
        compute_constants(params, 1.0, gn)?.c_omega
    } else {
        None
    };

    struct Eval {
        g: WaveField,
        r: WaveField,
        omega: f64,
        phi: f64,
        energy: f64,
        q: f64,
        sigma_dot: f64,
    }
    let eval = |u: &WaveField| -> Result<Eval> {
        let pieces = gradient_pieces(u, params)?;
        let bd = pieces.breakdown(u, params)?;
        let g = pieces.gradient(params);
        let omega = bd.omega_est;
        let mut r = g.clone();
        r.axpy(C64::new(-omega, 0.0), u);
        let br = spec.smoothing_inverse(&r);
        let phi = r.inner_re(&br);
        Ok(Eval {
            g,
            r,
            omega,
            phi,
            energy: bd.total,
            q: bd.pohozaev,
            sigma_dot: bd.sigma_dot,
        })
    };
    // Half-gradient of phi(u) = <r, B r>: H[Br] - omega Br - (<u,Br>/c)(Hu + G).
    let phi_grad = |u: &WaveField, ev: &Eval| -> Result<WaveField> {
        let br = spec.smoothing_inverse(&ev.r);
        let mut gp = energy::hessian_vector(u, &br, params)?;
        gp.axpy(C64::new(-ev.omega, 0.0), &br);
        let mut hu = energy::hessian_vector(u, u, params)?;
        hu.axpy(C64::new(1.0, 0.0), &ev.g);
        gp.axpy(C64::new(-u.inner_re(&br) / c, 0.0), &hu);
        let tang = gp.inner_re(u) / c;
        gp.axpy(C64::new(-tang, 0.0), u);
        Ok(gp)
    };

    let mut u = path.nodes[imax].clone();
    let mut ev = eval(&u)?;
    let mut prev: Option<(WaveField, WaveField)> = None;
    let mut iters = 0usize;
    let mut stalled = false;
    while iters < REFINE_MAX_ITERS {
        iters += 1;
        // sqrt(phi) = sqrt(<r, (1 - Lap)^{-1} r>) dominates the Sigma-dual
        // norm, so this cheap test already certifies the dual residual.
        if ev.phi.max(0.0).sqrt() <= RES_TOL && ev.q.abs() <= Q_TOL * ev.sigma_dot {
            break;
        }
        if ev.energy <= m_c_r + COLLAPSE_TOL * m_c_r.abs().max(1.0) {
            return Err(Error::CollapsedToMinimizer(format!(
                "refinement energy {} reached the minimizer level {m_c_r}",
                ev.energy
            )));
        }
        if let Some(floor) = coercivity {
            if ev.q.abs() <= 1e-3 * ev.sigma_dot && floor * ev.sigma_dot > ev.energy + 1e-3 {
                return Err(Error::NonConvergence(format!(
                    "coercivity monitor failed on an iterate: {} * {} > {} + 1e-3",
                    floor, ev.sigma_dot, ev.energy
                )));
            }
        }

        let gp = phi_grad(&u, &ev)?;
        let mut dir = spec.smoothing_inverse(&gp);
        let tang = dir.inner_re(&u) / c;
        dir.axpy(C64::new(-tang, 0.0), &u);
        let mut slope = -2.0 * dir.inner_re(&gp);
        if slope >= 0.0 {
            dir = gp.clone();
            slope = -2.0 * dir.inner_re(&gp);
        }
        let mut step = match &prev {
            Some((s, y)) => {
                let sy = s.inner_re(y);
                if sy > 0.0 { (s.inner_re(s) / sy).clamp(1e-4, 1e2) } else { 1.0 }
            }
            None => (0.1f64 / (1.0 + dir.inner_re(&dir).sqrt())).min(0.1),
        };
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial = u.clone();
            trial.axpy(C64::new(-step, 0.0), &dir);
            let trial = trial.renormalized(c)?;
            let trial_ev = eval(&trial)?;
            if trial_ev.phi <= ev.phi + 1e-4 * step * slope {
                accepted = Some((trial, trial_ev));
                break;
            }
            step *= 0.5;
        }
        let Some((new_u, new_ev)) = accepted else {
            // Line search floor. The exact dual check below may still pass:
            // the surrogate overestimates the residual.
            stalled = true;
            break;
        };
        let gp_new = phi_grad(&new_u, &new_ev)?;
        let mut s = new_u.clone();
        s.axpy(C64::new(-1.0, 0.0), &u);
        let mut y = gp_new;
        y.axpy(C64::new(-1.0, 0.0), &phi_grad(&u, &ev)?);
        prev = Some((s, y));
        u = new_u;
        ev = new_ev;
    }

    // One exact dual evaluation settles the certificate for every exit path.
    let dual = SigmaOp::for_grid(grid).dual_norm(&ev.r);
    if !(dual <= RES_TOL && ev.q.abs() <= Q_TOL * ev.sigma_dot) {
        let how = if stalled { "stalled at the line-search floor" } else { "exhausted its budget" };
        return Err(Error::NonConvergence(format!(
            "saddle refinement {how} after {iters} iterations with certificates unmet: \
             dual residual {dual:.3e} (target {RES_TOL:.0e}), |Q|/sigma-dot^2 = {:.3e} (target {Q_TOL:.0e})",
            ev.q.abs() / ev.sigma_dot.max(f64::MIN_POSITIVE)
        )));
    }

    Ok(MountainPassReport {
        gamma_c: gamma,
        path_nodes: path.profile(),
        saddle_field: u,
        saddle_energy: ev.energy,
        saddle_q: ev.q,
        saddle_grad_residual: dual,
        omega_hat: ev.omega,
        m_c_r,
    })
}

/// End-to-end search: minimize, compress an endpoint, relax the path, refine
/// the crest node.
pub fn mountain_pass(
    grid: GridSpec,
    params: &PhysicsParams,
    cfg: &SolverConfig,
    opts: &GammaOptions,
) -> Result<MountainPassReport> {
    let rep = minimize_local(grid, params, cfg)?;
    if !rep.converged {
        return Err(Error::NonConvergence(format!(
            "minimizer residual {} still above tolerance; cannot anchor the path",
            rep.grad_residual
        )));
    }
    let (v_c, _l) = endpoint_v_c(&rep.field, params, cfg.r)?;
    let (_gamma, path) = estimate_gamma(&rep.field, &v_c, params, opts)?;
    refine_saddle(&path, params)
}
