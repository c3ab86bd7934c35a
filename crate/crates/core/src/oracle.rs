//! Independent radial oracle for the sharp interpolation constant.
//!
//! Solves the ground-state ODE
//!     W'' + ((N-1)/r) W' = alpha W - beta W^{p-1},
//! alpha = 1/delta_p - 1, beta = 2/(p delta_p), by bisection shooting on
//! W(0) with an RK4 integrator, then replaces the far field by the decaying
//! linear-mode asymptotics once W has fallen to 1e-6 of its peak (forward
//! integration is contaminated by the growing mode beyond that point). The
//! profile is certified by a high-order finite-difference residual, a Nehari
//! identity, and a radial Pohozaev identity; nothing here touches the FFT
//! stack, so the constant it produces is a genuinely independent input.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{C64, WaveField};
use crate::grid::GridSpec;

/// A radial ground-state profile on a uniform grid over [0, R].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub dim: usize,
    pub p: f64,
    /// ||W||_2^2 over R^N via radial quadrature.
    pub l2_sq: f64,
    /// true iff values[last] < 1e-10 * values[0]
    pub decay_ok: bool,
}

fn delta_of(dim: usize, p: f64) -> f64 {
    dim as f64 * (p - 2.0) / (2.0 * p)
}

/// Linear decay rate sqrt(alpha) of the far field.
fn alpha_of(dim: usize, p: f64) -> f64 {
    1.0 / delta_of(dim, p) - 1.0
}

fn beta_of(dim: usize, p: f64) -> f64 {
    2.0 / (p * delta_of(dim, p))
}

fn validate(dim: usize, p: f64, big_r: f64, n_points: usize) -> Result<()> {
    if dim != 2 && dim != 3 {
        return Err(Error::Validation(format!("radial solver supports N=2,3, got {dim}")));
    }
    let p_sup = if dim == 2 { f64::INFINITY } else { 6.0 };
    if !(p > 2.0 && p < p_sup && p.is_finite()) {
        return Err(Error::Validation(format!(
            "exponent must satisfy 2 < p < {p_sup} strictly for N={dim}, got {p}"
        )));
    }
    if !(big_r >= 15.0 && big_r.is_finite()) {
        return Err(Error::Validation(format!("radial domain R must be >= 15, got {big_r}")));
    }
    if n_points < 4096 {
        return Err(Error::Validation(format!("need at least 4096 radial points, got {n_points}")));
    }
    Ok(())
}

/// How a shot from W(0) = s ended.
#[derive(PartialEq)]
enum Event {
    /// W crossed zero: s too large.
    Crossed,
    /// W turned upward while positive: s too small.
    TurnedUp,
    /// Reached R without either event (as good as converged).
    Reached,
}

/// RK4 shooting; returns the trajectory recorded on the output grid up to
/// the terminating event. Substeps adapt to the local stiffness so that
/// shots far from the ground state (where the plunge past zero happens on
/// the 1/sqrt(|f'|) scale) stay classifiable instead of overflowing.
fn shoot(dim: usize, p: f64, s: f64, big_r: f64, n: usize) -> (Vec<f64>, Event) {
    let alpha = alpha_of(dim, p);
    let beta = beta_of(dim, p);
    let nn = dim as f64;
    let h_out = big_r / (n - 1) as f64;

    let cubic = (p - 4.0).abs() < 1e-15;
    let f = move |w: f64| -> f64 {
        let nl = if cubic { w * w } else { w.abs().powf(p - 2.0) };
        alpha * w - beta * nl * w
    };
    let fp_abs = move |w: f64| -> f64 {
        alpha.abs() + beta * (p - 1.0) * w.abs().powf(p - 2.0)
    };
    let rhs = |r: f64, w: f64, v: f64| -> (f64, f64) { (v, f(w) - (nn - 1.0) * v / r) };
    let step = |r0: f64, hs: f64, w: &mut f64, v: &mut f64| {
        let (k1w, k1v) = rhs(r0, *w, *v);
        let (k2w, k2v) = rhs(r0 + 0.5 * hs, *w + 0.5 * hs * k1w, *v + 0.5 * hs * k1v);
        let (k3w, k3v) = rhs(r0 + 0.5 * hs, *w + 0.5 * hs * k2w, *v + 0.5 * hs * k2v);
        let (k4w, k4v) = rhs(r0 + hs, *w + hs * k3w, *v + hs * k3v);
        *w += hs / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        *v += hs / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    };
    // Integrates [r_from, r_to]; Some(event) if the shot classified itself.
    let seg = |r_from: f64, r_to: f64, base: f64, w: &mut f64, v: &mut f64| -> Option<Event> {
        let mut r = r_from;
        while r_to - r > 1e-14 * r_to {
            let cap = 0.5 / fp_abs(*w).max(1.0).sqrt();
            let hs = base.min(cap).min(r_to - r);
            step(r, hs, w, v);
            r += hs;
            if *w <= 0.0 || !w.is_finite() || !v.is_finite() {
                return Some(Event::Crossed);
            }
            if *v > 0.0 || *w > 10.0 * s {
                return Some(Event::TurnedUp);
            }
        }
        None
    };

    // Seed with the origin series W = s + c r^2 + d r^4, shrinking the seed
    // radius until the series terms are genuinely small corrections.
    let c = (alpha * s - beta * s.powf(p - 1.0)) / (2.0 * nn);
    let fprime = alpha - beta * (p - 1.0) * s.powf(p - 2.0);
    let d = fprime * c / (4.0 * (nn + 2.0));
    let mut r_seed = h_out / 16.0;
    while r_seed > 1e-12 && (c * r_seed * r_seed).abs() + (d * r_seed.powi(4)).abs() > 0.1 * s {
        r_seed *= 0.25;
    }
    let mut w = s + c * r_seed * r_seed + d * r_seed.powi(4);
    let mut v = 2.0 * c * r_seed + 4.0 * d * r_seed.powi(3);
    let mut out = vec![s];

    match seg(r_seed, h_out, (h_out - r_seed) / 32.0, &mut w, &mut v) {
        Some(e) => return (out, e),
        None => out.push(w),
    }
    for i in 1..n - 1 {
        let r = i as f64 * h_out;
        match seg(r, r + h_out, h_out / 4.0, &mut w, &mut v) {
            Some(e) => return (out, e),
            None => out.push(w),
        }
    }
    (out, Event::Reached)
}

/// Decaying solution of the far-field linearization y'' + (N-1)/r y' =
/// alpha y on the output nodes j..n-1, computed by backward RK4 from R.
/// Backward integration is stable for this mode and damps any growing-mode
/// admixture in the seed exponentially, so the crude asymptotic slope at R
/// is more than good enough.
fn backward_tail(dim: usize, alpha: f64, big_r: f64, n: usize, j: usize) -> Vec<f64> {
    let nn = dim as f64;
    let h_out = big_r / (n - 1) as f64;
    let sub = 4usize;
    let h = -h_out / sub as f64;
    let rhs = |r: f64, y: f64, v: f64| -> (f64, f64) { (v, alpha * y - (nn - 1.0) * v / r) };
    let mut y = 1.0f64;
    let mut v = -(alpha.sqrt() + (nn - 1.0) / (2.0 * big_r));
    let mut out = vec![0.0f64; n - j];
    out[n - j - 1] = y;
    for i in (j..n - 1).rev() {
        let r_right = (i + 1) as f64 * h_out;
        for k in 0..sub {
            let r0 = r_right + k as f64 * h;
            let (k1y, k1v) = rhs(r0, y, v);
            let (k2y, k2v) = rhs(r0 + 0.5 * h, y + 0.5 * h * k1y, v + 0.5 * h * k1v);
            let (k3y, k3v) = rhs(r0 + 0.5 * h, y + 0.5 * h * k2y, v + 0.5 * h * k2v);
            let (k4y, k4v) = rhs(r0 + h, y + h * k3y, v + h * k3v);
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        out[i - j] = y;
    }
    out
}

/// Solves for the radial extremizer profile by bisection shooting.
pub fn solve_wp(dim: usize, p: f64, big_r: f64, n_points: usize) -> Result<RadialProfile> {
    validate(dim, p, big_r, n_points)?;
    let n = n_points;

    let class = |s: f64| -> Event { shoot(dim, p, s, big_r, n).1 };
    let (mut lo, mut hi) = (1e-3, 1e3);
    if class(lo) != Event::TurnedUp || class(hi) != Event::Crossed {
        return Err(Error::BracketFailure(format!(
            "shooting bracket [1e-3, 1e3] does not straddle the ground state for N={dim}, p={p}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket exhausted at f64 resolution
        }
        match class(mid) {
            Event::TurnedUp => lo = mid,
            Event::Crossed => hi = mid,
            Event::Reached => {
                lo = mid;
                hi = mid;
                break;
            }
        }
    }
    let s = 0.5 * (lo + hi);

    // Final recorded run. At the 2e-4 handover level the forward shot is
    // still clean to a few 1e-9 relative (growing-mode contamination scales
    // like 1e-16 / level^2) while the nonlinear term the linear tail drops
    // is already below 1e-10.
    let (values, _) = shoot(dim, p, s, big_r, n);
    let h_out = big_r / (n - 1) as f64;
    let alpha = alpha_of(dim, p);
    let junction_level = 2e-4 * s;
    let j = values.iter().position(|&w| w <= junction_level);
    let mut full = vec![0.0f64; n];
    let copy_len = values.len().min(n);
    full[..copy_len].copy_from_slice(&values[..copy_len]);
    let j = match j {
        Some(j) => j,
        None if copy_len == n => n, // never reached the splice level; keep as is
        None => {
            return Err(Error::BracketFailure(format!(
                "trajectory for N={dim}, p={p} lost accuracy before decaying; increase R or n_points"
            )));
        }
    };
    if j < n {
        let tail = backward_tail(dim, alpha, big_r, n, j);
        let scale = full[j] / tail[0];
        // Smooth handover over ~2 radial units so no derivative kink
        // survives at the junction between shot and tail.
        let win = ((2.0 / h_out).ceil() as usize).min(copy_len.saturating_sub(j + 1)).max(1);
        for i in j..n {
            let t = tail[i - j] * scale;
            if i < j + win {
                let x = (i - j) as f64 / win as f64;
                let smooth = x * x * (3.0 - 2.0 * x);
                full[i] = full[i] * (1.0 - smooth) + t * smooth;
            } else {
                full[i] = t;
            }
        }
    }

    // Ground-state monotonicity: positive and strictly decreasing.
    for i in 1..n {
        if !(full[i] > 0.0) || full[i] >= full[i - 1] {
            return Err(Error::BracketFailure(format!(
                "profile for N={dim}, p={p} is not positive strictly decreasing at node {i}"
            )));
        }
    }

    let radii: Vec<f64> = (0..n).map(|i| i as f64 * h_out).collect();
    let l2_sq = radial_moment(&radii, &full, dim, 2.0);
    let decay_ok = full[n - 1] < 1e-10 * full[0];
    Ok(RadialProfile { radii, values: full, dim, p, l2_sq, decay_ok })
}

/// S_{N-1} * int W^q r^{N-1} dr by composite Simpson quadrature.
fn radial_moment(radii: &[f64], values: &[f64], dim: usize, q: f64) -> f64 {
    let surface = match dim {
        2 => std::f64::consts::TAU,
        _ => 2.0 * std::f64::consts::TAU,
    };
    let h = radii[1] - radii[0];
    let f: Vec<f64> = radii
        .iter()
        .zip(values)
        .map(|(&r, &w)| w.abs().powf(q) * r.powi(dim as i32 - 1))
        .collect();
    surface * simpson(&f, h)
}

fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    let mut end = n;
    let mut extra = 0.0;
    if (n - 1) % 2 == 1 {
        // Odd interval count: trapezoid on the last (negligible tail) cell.
        extra = 0.5 * h * (f[n - 2] + f[n - 1]);
        end = n - 1;
    }
    let mut acc = f[0] + f[end - 1];
    for (i, v) in f.iter().enumerate().take(end - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0 + extra
}

/// Max-norm ODE residual on [0, R-2] via 4th-order central differences
/// (first two nodes skipped; the origin is handled by the series start).
pub fn ode_residual_max(profile: &RadialProfile) -> f64 {
    let alpha = alpha_of(profile.dim, profile.p);
    let beta = beta_of(profile.dim, profile.p);
    let nn = profile.dim as f64;
    let w = &profile.values;
    let h = profile.radii[1] - profile.radii[0];
    let r_cut = profile.radii.last().unwrap() - 2.0;
    let mut worst = 0.0f64;
    for i in 2..w.len() - 2 {
        let r = profile.radii[i];
        if r > r_cut {
            break;
        }
        let d1 = (-w[i + 2] + 8.0 * w[i + 1] - 8.0 * w[i - 1] + w[i - 2]) / (12.0 * h);
        let d2 = (-w[i + 2] + 16.0 * w[i + 1] - 30.0 * w[i] + 16.0 * w[i - 1] - w[i - 2])
            / (12.0 * h * h);
        let res = d2 + (nn - 1.0) / r * d1 - alpha * w[i] + beta * w[i].powf(profile.p - 1.0);
        worst = worst.max(res.abs());
    }
    worst
}

/// Relative defects of the Nehari and Pohozaev identities:
///   ||grad W||^2 + alpha ||W||^2 = beta ||W||_p^p
///   (N-2)/2 ||grad W||^2 + N alpha/2 ||W||^2 = N beta / p ||W||_p^p
pub fn identity_defects(profile: &RadialProfile) -> (f64, f64) {
    let dim = profile.dim;
    let nn = dim as f64;
    let alpha = alpha_of(dim, profile.p);
    let beta = beta_of(dim, profile.p);
    let h = profile.radii[1] - profile.radii[0];
    let n = profile.values.len();
    // 4th-order interior derivative, one-sided at the four boundary nodes.
    let mut grad = vec![0.0f64; n];
    let w = &profile.values;
    for i in 2..n - 2 {
        grad[i] = (-w[i + 2] + 8.0 * w[i + 1] - 8.0 * w[i - 1] + w[i - 2]) / (12.0 * h);
    }
    grad[0] = 0.0; // smooth even profile at the origin
    grad[1] = (w[2] - w[0]) / (2.0 * h);
    grad[n - 2] = (w[n - 1] - w[n - 3]) / (2.0 * h);
    grad[n - 1] = (w[n - 1] - w[n - 2]) / h;
    let surface = match dim {
        2 => std::f64::consts::TAU,
        _ => 2.0 * std::f64::consts::TAU,
    };
    let g: Vec<f64> = profile
        .radii
        .iter()
        .zip(&grad)
        .map(|(&r, &d)| d * d * r.powi(dim as i32 - 1))
        .collect();
    let grad_sq = surface * simpson(&g, h);
    let mass = profile.l2_sq;
    let pnorm = radial_moment(&profile.radii, w, dim, profile.p);

    let nehari = grad_sq + alpha * mass - beta * pnorm;
    let poho = (nn - 2.0) / 2.0 * grad_sq + nn * alpha / 2.0 * mass - nn * beta / profile.p * pnorm;
    let scale = grad_sq.abs().max(alpha * mass).max(beta * pnorm);
    (nehari.abs() / scale, poho.abs() / scale)
}

/// C_{N,p} = (p / (2 ||W||_2^{p-2}))^{1/p}.
pub fn gn_constant(profile: &RadialProfile) -> Result<f64> {
    if !profile.decay_ok {
        return Err(Error::Validation(
            "profile tail has not decayed; enlarge R before extracting the constant".into(),
        ));
    }
    let p = profile.p;
    Ok((p / (2.0 * profile.l2_sq.powf((p - 2.0) / 2.0))).powf(1.0 / p))
}

/// Default radial domain: large enough for the tail to pass the decay gate.
pub fn default_domain(dim: usize, p: f64) -> (f64, usize) {
    let alpha = alpha_of(dim, p);
    let big_r = (30.0 / alpha.sqrt()).max(15.0);
    let mut n = 8192usize;
    while (big_r / (n - 1) as f64) > 2.2e-3 {
        n *= 2;
    }
    (big_r, n)
}

/// Solves on the default domain and returns (profile, C_{N,p}).
pub fn gn_solution(dim: usize, p: f64) -> Result<(RadialProfile, f64)> {
    let (big_r, n) = default_domain(dim, p);
    let profile = solve_wp(dim, p, big_r, n)?;
    let c = gn_constant(&profile)?;
    Ok((profile, c))
}

type GnCache = Mutex<HashMap<(usize, u64), (Arc<RadialProfile>, f64)>>;

fn gn_cache() -> &'static GnCache {
    static CACHE: OnceLock<GnCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Process-wide memo of `gn_solution`, keyed by (N, p).
pub fn gn_constant_cached(dim: usize, p: f64) -> Result<(Arc<RadialProfile>, f64)> {
    let key = (dim, p.to_bits());
    if let Some(hit) = gn_cache().lock().expect("gn cache poisoned").get(&key) {
        return Ok(hit.clone());
    }
    let (profile, c) = gn_solution(dim, p)?;
    let entry = (Arc::new(profile), c);
    gn_cache().lock().expect("gn cache poisoned").insert(key, entry.clone());
    Ok(entry)
}

/// Radialization of the profile onto a flat grid: u(x) = W(|x|), linearly
/// interpolated; zero beyond the profile domain.
pub fn sample_on_grid(profile: &RadialProfile, grid: GridSpec) -> Result<WaveField> {
    if grid.dim() != profile.dim {
        return Err(Error::Validation(format!(
            "grid dimension {} does not match profile dimension {}",
            grid.dim(),
            profile.dim
        )));
    }
    let h = profile.radii[1] - profile.radii[0];
    let n = profile.values.len();
    let big_r = profile.radii[n - 1];
    Ok(WaveField::from_fn(grid, |x| {
        let r: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r >= big_r {
            return C64::new(0.0, 0.0);
        }
        let t = r / h;
        let i = (t as usize).min(n - 2);
        let frac = t - i as f64;
        C64::new(profile.values[i] * (1.0 - frac) + profile.values[i + 1] * frac, 0.0)
    }))
}
