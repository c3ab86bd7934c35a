//! Run manifests: one JSON document per run directory recording the full
//! configuration echo (defaults applied), the derived constants, how the run
//! ended, and where its artifacts landed.
//!
//! Two runs with identical inputs and code version produce byte-identical
//! manifests except for the wall-time field, so manifests double as cheap
//! regression fixtures.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::constants::{compute_constants, RotationConstants};
use crate::error::{Error, Result};
use crate::groundstate::mass_threshold;

/// How a run ended, echoed as the manifest `status` string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    /// Crate version at build time.
    pub version: &'static str,
    pub status: RunStatus,
    /// Failure description when status is `failed`.
    pub diagnostic: Option<String>,
    pub wall_time_seconds: f64,
    /// Full configuration with defaults applied.
    pub config: RunConfig,
    /// Rotation-derived constants; absent for omega_mag = 0, which has no
    /// twisted norm to bound.
    pub constants: Option<RotationConstants>,
    /// Small-mass threshold for the configured (physics, r).
    pub c0: f64,
    /// True when the configured mass sits below c0.
    pub small_mass_regime: bool,
    /// Files the run wrote, relative to the output directory.
    pub artifacts: Vec<String>,
}

/// Verifies the output directory can be written, creating it if needed.
/// Runs call this before any compute so a bad path fails in milliseconds.
pub fn check_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| {
        Error::Validation(format!("output_dir {} is not usable: {e}", dir.display()))
    })?;
    let probe = dir.join(".rotor-gpe-write-probe");
    fs::write(&probe, b"probe").map_err(|e| {
        Error::Validation(format!("output_dir {} is not writable: {e}", dir.display()))
    })?;
    let _ = fs::remove_file(&probe);
    Ok(())
}

/// Assembles the manifest for a finished (or failed) run.
pub fn run_manifest(
    config: &RunConfig,
    status: RunStatus,
    diagnostic: Option<String>,
    wall_time_seconds: f64,
    artifacts: &[PathBuf],
) -> Result<Manifest> {
    let c0 = mass_threshold(&config.physics, config.solver.r)?;
    let constants = if config.physics.omega_mag() > 0.0 {
        let gn = if config.physics.a() == 0.0 {
            1.0
        } else {
            crate::oracle::gn_constant_cached(config.physics.dim(), config.physics.p())?.1
        };
        Some(compute_constants(&config.physics, config.solver.r, gn)?)
    } else {
        None
    };
    Ok(Manifest {
        version: env!("CARGO_PKG_VERSION"),
        status,
        diagnostic,
        wall_time_seconds,
        config: config.clone(),
        constants,
        c0,
        small_mass_regime: config.solver.c < c0,
        artifacts: artifacts.iter().map(|p| p.display().to_string()).collect(),
    })
}

/// Serializes the manifest into `manifest.json` under the output directory.
pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<PathBuf> {
    let path = dir.join("manifest.json");
    let mut body = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Validation(format!("manifest serialization failed: {e}")))?;
    body.push('\n');
    fs::write(&path, body)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn config(omega: &str) -> RunConfig {
        let text = format!(
            "[grid]\ndim = 3\npoints_per_axis = 32\nhalf_width = 6\n\
             [physics]\na = 1\np = 4\nomega_mag = {omega}\n\
             [constraint]\nc = 0.01\nr = 1\n"
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn manifests_are_byte_stable_modulo_wall_time() {
        let cfg = config("0.1");
        let arts = vec![PathBuf::from("report.json"), PathBuf::from("state.rgpe1")];
        let a = run_manifest(&cfg, RunStatus::Ok, None, 1.5, &arts).unwrap();
        let b = run_manifest(&cfg, RunStatus::Ok, None, 99.25, &arts).unwrap();
        let strip = |m: &Manifest| {
            let s = serde_json::to_string_pretty(m).unwrap();
            s.lines()
                .filter(|l| !l.contains("wall_time_seconds"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&a), strip(&b));
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn constants_and_regime_flag_are_recorded() {
        let cfg = config("0.1");
        let m = run_manifest(&cfg, RunStatus::Ok, None, 0.0, &[]).unwrap();
        let k = m.constants.expect("rotating run derives constants");
        assert!((m.c0 - 0.075).abs() > 0.0 || m.c0 > 0.0);
        assert_eq!(m.c0, k.c0);
        // c = 0.01 sits below the N=3, p=4, |Omega|=0.1, r=1 threshold.
        assert!(m.small_mass_regime);

        let still = config("0");
        let m0 = run_manifest(&still, RunStatus::Ok, None, 0.0, &[]).unwrap();
        assert!(m0.constants.is_none());
        assert!(m0.c0 > 0.0);
    }

    #[test]
    fn failed_runs_keep_their_diagnostic() {
        let cfg = config("0.1");
        let m = run_manifest(
            &cfg,
            RunStatus::Failed,
            Some("descent left the ball".into()),
            0.25,
            &[],
        )
        .unwrap();
        let body = serde_json::to_string(&m).unwrap();
        assert!(body.contains("\"status\":\"failed\""));
        assert!(body.contains("descent left the ball"));
    }

    #[test]
    fn output_dir_probe_accepts_fresh_and_rejects_file() {
        let dir = tempfile::tempdir().unwrap();
        let fresh = dir.path().join("runs/a/b");
        check_output_dir(&fresh).unwrap();
        assert!(fresh.is_dir());

        let blocker = dir.path().join("occupied");
        fs::write(&blocker, b"x").unwrap();
        assert!(matches!(check_output_dir(&blocker), Err(Error::Validation(_))));
    }

    #[test]
    fn manifest_file_lands_in_the_directory() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("0.1");
        let m = run_manifest(&cfg, RunStatus::Ok, None, 0.0, &[PathBuf::from("x.csv")]).unwrap();
        let path = write_manifest(dir.path(), &m).unwrap();
        assert_eq!(path, dir.path().join("manifest.json"));
        let body = fs::read_to_string(&path).unwrap();
        assert!(body.ends_with('\n'));
        assert!(body.contains("\"artifacts\""));
        assert!(body.contains("x.csv"));
    }
}
