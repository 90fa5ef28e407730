use thiserror::Error;

/// Errors raised by the rate engines, generators and simulator.
///
/// Floating point payloads are reported as `f64` whatever the working scalar.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CslError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("components carry different species masses: a = {a:?}, b = {b:?}")]
    SpeciesMismatch { a: Vec<f64>, b: Vec<f64> },

    #[error("amplitudes not normalized: |a|^2 + |b|^2 = {norm}")]
    NotNormalized { norm: f64 },

    #[error("cutoff multiplier {multiplier} is below the minimum of 3")]
    CutoffTooSmall { multiplier: f64 },

    #[error("grid cell {cell} r_C is coarser than the limit {limit} r_C")]
    GridTooCoarse { cell: f64, limit: f64 },

    #[error("grid padding {padding} r_C is below the minimum of {limit} r_C")]
    PaddingTooSmall { padding: f64, limit: f64 },

    #[error("grid needs {required} cells per raster but the budget is {available}")]
    MemoryBudget { required: usize, available: usize },

    #[error("decay rate {raw} s^-1 is negative beyond the cancellation tolerance {tolerance} s^-1")]
    NegativeRate { raw: f64, tolerance: f64 },

    #[error("time step {dt} s exceeds the stability bound {max_dt} s (need dt * Gamma <= 0.01)")]
    UnstableStep { dt: f64, max_dt: f64 },

    #[error("decay fit failed: {reason}")]
    FitFailure {
        reason: String,
        /// `(t, Re <a_1 a_2*>)` samples of the ensemble mean.
        curve: Vec<(f64, f64)>,
    },

    #[error("lattice has {sites} sites but {required} particles must be placed")]
    BoxTooSmall { sites: usize, required: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("cluster_rate needs unit masses, found {mass} Da (use mass_cluster_rate)")]
    NonUnitMass { mass: f64 },

    #[error("particle table line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
}

pub type Result<T, E = CslError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> CslError {
    CslError::InvalidParameter {
        name,
        value,
        reason,
    }
}
