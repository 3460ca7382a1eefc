//! Error type shared across the crate.
//!
//! Failures fall into a few mechanically distinct classes, and the command
//! line tool maps them onto exit codes, so the variants are kept coarse:
//! usage mistakes ([`Error::Contract`]) versus numerical trouble (everything
//! else).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A matrix that must be inverted is singular or too ill-conditioned to
    /// trust. Carries an infinity-norm condition estimate when one could be
    /// formed (`inf` when the factorization failed outright).
    #[error("singular or ill-conditioned matrix in {context} (condition estimate {cond:.3e})")]
    Regularity { context: String, cond: f64 },

    /// A Newton iteration ran out of iterations before meeting its residual
    /// tolerance.
    #[error(
        "Newton solve in {context} did not converge: residual {residual:.3e} after {iterations} iterations"
    )]
    Convergence {
        context: String,
        iterations: usize,
        residual: f64,
    },

    /// A trajectory produced a non-finite state. The step index points at the
    /// first bad step.
    #[error("trajectory diverged at step {step}")]
    Divergence { step: usize },

    /// A quantity that must be finite came out NaN or infinite.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// The boundary-value shooting solve inside the exact-discretization
    /// oracle failed; the enclosed message says how.
    #[error("shooting solve failed: {0}")]
    Shooting(String),

    /// The caller violated a documented precondition (missing Rayleigh
    /// potential, bad parameter, unknown scenario, malformed configuration).
    #[error("{0}")]
    Contract(String),

    /// Reading or writing a report file failed.
    #[error("i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    /// Exit code the command line tool uses for this error: 2 for
    /// configuration and usage problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Contract(_) => 2,
            _ => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_config_from_numerics() {
        assert_eq!(Error::contract("bad scenario").exit_code(), 2);
        assert_eq!(Error::Divergence { step: 7 }.exit_code(), 3);
        assert_eq!(
            Error::Convergence {
                context: "del_step".into(),
                iterations: 50,
                residual: 1.0,
            }
            .exit_code(),
            3
        );
        assert_eq!(
            Error::Regularity {
                context: "mass matrix".into(),
                cond: f64::INFINITY,
            }
            .exit_code(),
            3
        );
    }

    #[test]
    fn messages_carry_context() {
        let e = Error::Convergence {
            context: "legendre_minus_inverse".into(),
            iterations: 50,
            residual: 3.2e-4,
        };
        let msg = e.to_string();
        assert!(msg.contains("legendre_minus_inverse"));
        assert!(msg.contains("50"));
    }
}
