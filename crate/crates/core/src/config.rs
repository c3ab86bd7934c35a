//! Run configuration: a deliberately small key=value format.
//!
//! `[section]` headers group the keys, `#` starts a comment line, blank
//! lines separate. Every key is known, typed, and bounded at parse time;
//! rejection messages carry the offending line number so a config can be
//! fixed without guessing. Defaults fill the omitted optional keys and the
//! completed struct is what the run manifest echoes.

use std::collections::HashMap;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::groundstate::{InitKind, SolverConfig};
use crate::physics::PhysicsParams;

/// Evolution horizon and sampling controls for the dynamics subcommands.
#[derive(Debug, Clone, Serialize)]
pub struct DynamicsConfig {
    /// Horizon in trap time units; ten trap periods by default.
    pub t_final: f64,
    /// Time step; the propagator picks its own default when absent.
    pub dt: Option<f64>,
    /// Observable sampling interval.
    pub sample_every: f64,
}

impl Default for DynamicsConfig {
    fn default() -> DynamicsConfig {
        DynamicsConfig {
            t_final: 10.0 * (2.0 * std::f64::consts::PI),
            dt: None,
            sample_every: 0.1,
        }
    }
}

/// One run's full parameter set: grid, physics, the constraint pair (held
/// inside the solver knobs), dynamics controls, the single seed feeding all
/// randomness, and where artifacts land.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub physics: PhysicsParams,
    pub solver: SolverConfig,
    pub dynamics: DynamicsConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
}

/// A key=value occurrence with its source line for error reporting.
struct Entry {
    line: usize,
    value: String,
}

struct RawConfig {
    /// "section.key" -> entry; top-level keys use the bare key name.
    entries: HashMap<String, Entry>,
}

impl RawConfig {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }
}

const SECTIONS: [&str; 5] = ["grid", "physics", "constraint", "solver", "dynamics"];

const KNOWN_KEYS: [&str; 18] = [
    "seed",
    "output_dir",
    "grid.dim",
    "grid.points_per_axis",
    "grid.half_width",
    "physics.a",
    "physics.p",
    "physics.omega_mag",
    "constraint.c",
    "constraint.r",
    "solver.dt_imag",
    "solver.tol_grad",
    "solver.max_iters",
    "solver.init_kind",
    "solver.init_file",
    "dynamics.t_final",
    "dynamics.dt",
    "dynamics.sample_every",
];

fn scan(text: &str) -> Result<RawConfig> {
    let mut entries = HashMap::new();
    let mut section: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return Err(Error::ConfigParse {
                    line: line_no,
                    message: format!("malformed section header {line:?}"),
                });
            };
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::ConfigParse {
                    line: line_no,
                    message: format!(
                        "unknown section [{name}]; expected one of [grid] [physics] [constraint] [solver] [dynamics]"
                    ),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::ConfigParse {
                line: line_no,
                message: format!("expected key = value, got {line:?}"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::ConfigParse {
                line: line_no,
                message: "empty key before '='".into(),
            });
        }
        let full = match &section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        };
        if !KNOWN_KEYS.contains(&full.as_str()) {
            return Err(Error::ConfigParse {
                line: line_no,
                message: match &section {
                    Some(s) => format!("unknown key {key:?} in section [{s}]"),
                    None => format!("unknown top-level key {key:?}; only seed and output_dir live outside a section"),
                },
            });
        }
        if entries.contains_key(&full) {
            return Err(Error::ConfigParse {
                line: line_no,
                message: format!("duplicate key {key:?}"),
            });
        }
        entries.insert(full, Entry { line: line_no, value: value.to_string() });
    }
    Ok(RawConfig { entries })
}

fn parse_num<T: std::str::FromStr>(entry: &Entry, key: &str, kind: &str) -> Result<T> {
    entry.value.parse::<T>().map_err(|_| Error::ConfigParse {
        line: entry.line,
        message: format!("expected {kind} for {key}, got {:?}", entry.value),
    })
}

fn require(raw: &mut RawConfig, key: &str) -> Result<Entry> {
    raw.take(key)
        .ok_or_else(|| Error::Validation(format!("config is missing the required key {key}")))
}

/// Re-attaches a constructor's validation message to a config line.
fn at_line<T>(line: usize, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        Error::Validation(message) => Error::ConfigParse { line, message },
        other => other,
    })
}

/// Parses and validates a full run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut raw = scan(text)?;

    let dim_e = require(&mut raw, "grid.dim")?;
    let points_e = require(&mut raw, "grid.points_per_axis")?;
    let width_e = require(&mut raw, "grid.half_width")?;
    let dim: usize = parse_num(&dim_e, "grid.dim", "an integer")?;
    let points: usize = parse_num(&points_e, "grid.points_per_axis", "an integer")?;
    let width: f64 = parse_num(&width_e, "grid.half_width", "a number")?;
    let grid = at_line(dim_e.line, GridSpec::new(dim, points, width))?;

    let a_e = require(&mut raw, "physics.a")?;
    let p_e = require(&mut raw, "physics.p")?;
    let omega_e = require(&mut raw, "physics.omega_mag")?;
    let a: f64 = parse_num(&a_e, "physics.a", "a number")?;
    let p: f64 = parse_num(&p_e, "physics.p", "a number")?;
    let omega: f64 = parse_num(&omega_e, "physics.omega_mag", "a number")?;
    if !(omega.is_finite() && (0.0..1.0).contains(&omega)) {
        return Err(Error::ConfigParse {
            line: omega_e.line,
            message: "omega_mag must lie in [0,1)".into(),
        });
    }
    let physics = at_line(p_e.line, PhysicsParams::new(dim, a, p, omega))?;

    let c_e = require(&mut raw, "constraint.c")?;
    let r_e = require(&mut raw, "constraint.r")?;
    let c: f64 = parse_num(&c_e, "constraint.c", "a number")?;
    let r: f64 = parse_num(&r_e, "constraint.r", "a number")?;
    for (e, key, v) in [(&c_e, "constraint.c", c), (&r_e, "constraint.r", r)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::ConfigParse {
                line: e.line,
                message: format!("{key} must be positive and finite, got {v}"),
            });
        }
    }
    if c > r / dim as f64 {
        return Err(Error::ConfigParse {
            line: c_e.line,
            message: format!(
                "mass c = {c} exceeds r/N = {}: S(c) meets B(r) only when c <= r/N",
                r / dim as f64
            ),
        });
    }

    let mut solver = SolverConfig::new(c, r);
    if let Some(e) = raw.take("solver.dt_imag") {
        solver.dt_imag = parse_num(&e, "solver.dt_imag", "a number")?;
        if !(solver.dt_imag > 0.0 && solver.dt_imag.is_finite()) {
            return Err(Error::ConfigParse {
                line: e.line,
                message: format!("solver.dt_imag must be positive and finite, got {}", e.value),
            });
        }
    }
    if let Some(e) = raw.take("solver.tol_grad") {
        solver.tol_grad = parse_num(&e, "solver.tol_grad", "a number")?;
        if !(solver.tol_grad > 0.0 && solver.tol_grad.is_finite()) {
            return Err(Error::ConfigParse {
                line: e.line,
                message: format!("solver.tol_grad must be positive and finite, got {}", e.value),
            });
        }
    }
    if let Some(e) = raw.take("solver.max_iters") {
        solver.max_iters = parse_num(&e, "solver.max_iters", "an integer")?;
        if solver.max_iters == 0 {
            return Err(Error::ConfigParse {
                line: e.line,
                message: "solver.max_iters must be at least 1".into(),
            });
        }
    }
    if let Some(e) = raw.take("solver.init_kind") {
        solver.init_kind = match e.value.as_str() {
            "gaussian" => InitKind::Gaussian,
            "perturbed_gaussian" => InitKind::PerturbedGaussian,
            "vortex_seeded" => InitKind::VortexSeeded,
            "from_file" => InitKind::FromFile,
            other => {
                return Err(Error::ConfigParse {
                    line: e.line,
                    message: format!(
                        "unknown init_kind {other:?}; expected gaussian, perturbed_gaussian, vortex_seeded, or from_file"
                    ),
                })
            }
        };
    }
    if let Some(e) = raw.take("solver.init_file") {
        solver.init_file = Some(PathBuf::from(e.value));
    }

    let mut dynamics = DynamicsConfig::default();
    if let Some(e) = raw.take("dynamics.t_final") {
        dynamics.t_final = parse_num(&e, "dynamics.t_final", "a number")?;
        if !(dynamics.t_final > 0.0 && dynamics.t_final.is_finite()) {
            return Err(Error::ConfigParse {
                line: e.line,
                message: format!("dynamics.t_final must be positive and finite, got {}", e.value),
            });
        }
    }
    if let Some(e) = raw.take("dynamics.dt") {
        let dt: f64 = parse_num(&e, "dynamics.dt", "a number")?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::ConfigParse {
                line: e.line,
                message: format!("dynamics.dt must be positive and finite, got {}", e.value),
            });
        }
        dynamics.dt = Some(dt);
    }
    if let Some(e) = raw.take("dynamics.sample_every") {
        dynamics.sample_every = parse_num(&e, "dynamics.sample_every", "a number")?;
        if !(dynamics.sample_every > 0.0 && dynamics.sample_every.is_finite()) {
            return Err(Error::ConfigParse {
                line: e.line,
                message: format!("dynamics.sample_every must be positive and finite, got {}", e.value),
            });
        }
    }

    let mut seed = 0u64;
    if let Some(e) = raw.take("seed") {
        seed = parse_num(&e, "seed", "an unsigned integer")?;
    }
    solver.seed = seed;
    let output_dir = match raw.take("output_dir") {
        Some(e) => PathBuf::from(e.value),
        None => PathBuf::from("."),
    };

    // scan() already rejected unknown keys, so nothing is left over.
    debug_assert!(raw.entries.is_empty());

    if grid.dim() != physics.dim() {
        return Err(Error::Validation(format!(
            "grid dimension {} does not match physics dimension {}",
            grid.dim(),
            physics.dim()
        )));
    }
    solver.validate(physics.dim())?;

    Ok(RunConfig { grid, physics, solver, dynamics, seed, output_dir })
}
