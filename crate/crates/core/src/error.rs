//! Error taxonomy shared by the library and the CLI.
//!
//! Errors split into two families: usage errors (bad configuration, bad
//! input files, infeasible constraint data) and numerical errors raised by
//! monitors during a run. The CLI maps the former to exit code 2 and the
//! latter to exit code 3.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Rejected input: parameter outside the supported domain.
    #[error("validation: {0}")]
    Validation(String),

    /// Config file failed to parse; line is 1-based.
    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    /// Constraint data admits no minimizer search (e.g. mass too large for the ball).
    #[error("infeasible constraint: {0}")]
    Feasibility(String),

    /// A field or scalar stopped being finite.
    #[error("non-finite value detected in {0}")]
    NonFinite(String),

    /// Gradient flow left the search ball while still descending.
    #[error("descent escaped the constraint ball: |u|_dot_sigma^2 = {sigma_dot_sq:.6e} > r = {r:.6e} after {iters} iterations")]
    EscapedBall {
        sigma_dot_sq: f64,
        r: f64,
        iters: usize,
    },

    /// Grid can no longer represent the field (spectral or boundary tail too heavy).
    #[error("resolution loss: {0}")]
    ResolutionLoss(String),

    /// Shooting method could not bracket the ground-state profile.
    #[error("shooting bracket failure: {0}")]
    BracketFailure(String),

    /// Saddle refinement slid back into the minimizer basin.
    #[error("saddle refinement collapsed toward the constrained minimizer: {0}")]
    CollapsedToMinimizer(String),

    /// Path nodes separated beyond repair during relaxation.
    #[error("path tore during relaxation: {0}")]
    PathTorn(String),

    /// An iteration hit its budget or stalled without meeting its certificate.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// Snapshot file malformed or inconsistent.
    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Coarse class used for CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Caller supplied something invalid. Exit code 2.
    Usage,
    /// The computation itself failed. Exit code 3.
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Validation(_)
            | Error::ConfigParse { .. }
            | Error::Feasibility(_)
            | Error::Snapshot(_) => ErrorClass::Usage,
            Error::NonFinite(_)
            | Error::EscapedBall { .. }
            | Error::ResolutionLoss(_)
            | Error::BracketFailure(_)
            | Error::CollapsedToMinimizer(_)
            | Error::PathTorn(_)
            | Error::NonConvergence(_)
            | Error::Io(_) => ErrorClass::Numerical,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Usage => 2,
            ErrorClass::Numerical => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_by_class() {
        assert_eq!(Error::Validation("x".into()).exit_code(), 2);
        assert_eq!(
            Error::ConfigParse {
                line: 3,
                message: "bad".into()
            }
            .exit_code(),
            2
        );
        assert_eq!(Error::NonFinite("field".into()).exit_code(), 3);
        assert_eq!(
            Error::EscapedBall {
                sigma_dot_sq: 2.0,
                r: 1.0,
                iters: 10
            }
            .exit_code(),
            3
        );
    }

    #[test]
    fn messages_carry_context() {
        let e = Error::ConfigParse {
            line: 7,
            message: "unknown key `dts`".into(),
        };
        let s = e.to_string();
        assert!(s.contains("line 7"));
        assert!(s.contains("dts"));
    }
}
