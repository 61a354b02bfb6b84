use thiserror::Error;

/// Errors surfaced by the simulator. Physical-invariant violations are
/// reported, never silently repaired.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("input {value} outside [-1, 1]")]
    InputOutOfRange { value: f64 },
    #[error("matrix not Hermitian: defect {defect:.3e} exceeds {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("density matrix trace deviates from 1 by {deviation:.3e} (tolerance {tol:.1e})")]
    TraceNotOne { deviation: f64, tol: f64 },
    #[error("density matrix eigenvalue {eigenvalue:.3e} below -{tol:.1e}")]
    NotPositiveSemidefinite { eigenvalue: f64, tol: f64 },
    #[error("propagator lost unitarity: defect {defect:.3e} exceeds {tol:.1e}")]
    NotUnitary { defect: f64, tol: f64 },
    #[error("expectation value has imaginary part {imag:.3e} beyond {tol:.1e}")]
    ComplexExpectation { imag: f64, tol: f64 },
    #[error("{what} must not be empty")]
    Empty { what: &'static str },
    #[error("{context}: sequence lengths differ ({left} vs {right})")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },
    #[error("target has zero variance; score undefined")]
    ConstantTarget,
    #[error("weak-measurement angle {0} outside [0, pi/2]")]
    InvalidAngle(f64),
    #[error("weak-measurement noise scaling diverges at angle 0")]
    InfiniteNoiseVariance,
    #[error("integrator failure at step {step}: {reason}")]
    IntegratorFailure { step: usize, reason: String },
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
