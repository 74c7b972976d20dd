use num_complex::Complex64;
use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Variants carry enough context (times, brackets, offending values) for the
/// CLI to map them onto exit codes and readable diagnostics.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("degenerate poles near {center}: cluster {cluster:?} cannot be resolved")]
    DegeneratePoles {
        center: Complex64,
        cluster: Vec<Complex64>,
    },

    #[error("numeric inversion unsupported at t = {t}: {reason}")]
    UnsupportedTime { t: f64, reason: &'static str },

    #[error("transform evaluator failed at u = {0}")]
    Evaluator(Complex64),

    #[error("invalid waiting-time spec: {0}")]
    InvalidSpec(String),

    #[error("survival probability saturated at t = {t} (last valid t = {last_valid})")]
    SaturatedSurvival { t: f64, last_valid: f64 },

    #[error("invariant violated at t = {t}: {what}")]
    InvariantViolation { what: String, t: f64 },

    #[error("deconvolution unstable: condition estimate {condition:.3e}")]
    DeconvolutionUnstable { condition: f64 },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("defective generator: eigenvalue {eigenvalue} has algebraic multiplicity {algebraic} but only {geometric} eigenvectors")]
    DefectiveGenerator {
        eigenvalue: Complex64,
        algebraic: usize,
        geometric: usize,
    },

    #[error("not a generator: {0}")]
    NotAGenerator(String),

    #[error("TCL generator singular in ({lo}, {hi})")]
    TclSingular { lo: f64, hi: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("accuracy check failed for {what}: discrepancy {discrepancy:.3e} > {tolerance:.1e}")]
    Accuracy {
        what: &'static str,
        discrepancy: f64,
        tolerance: f64,
    },

    #[error("truncation target unreachable: tail {tail:.3e} with N_max = {n_max}")]
    Truncation { n_max: usize, tail: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;
