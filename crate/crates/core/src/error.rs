use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is singular or ill-conditioned: condition number {cond:.3e} exceeds bound {bound:.3e}")]
    IllConditioned { cond: f64, bound: f64 },

    #[error("metric is not positive-definite: smallest eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("epsilon = {0} is outside the reality regime epsilon >= 0")]
    NegativeEpsilon(f64),

    #[error("invalid contour: {0}")]
    InvalidContour(String),

    #[error("integration overflowed near r = {r:.6} on the {side} ray; shorten the ray or renormalize more often")]
    Overflow { r: f64, side: &'static str },

    #[error("step count {steps} is too small: local error estimate {estimate:.3e} exceeds {tolerance:.3e}")]
    StepsTooSmall { steps: usize, estimate: f64, tolerance: f64 },

    #[error("adaptive integration stalled at s = {s:.6} (step size {h:.3e})")]
    StepSizeUnderflow { s: f64, h: f64 },

    #[error("root search for level {level} failed in window [{lo:.6}, {hi:.6}]: {reason}; |D| profile: {}", format_profile(.profile))]
    RootSearch {
        level: usize,
        lo: f64,
        hi: f64,
        reason: String,
        profile: Vec<(f64, f64)>,
    },

    #[error("levels {first} and {second} coincide within resolution at E = {energy:.10}")]
    Degenerate { first: usize, second: usize, energy: f64 },

    #[error("oscillator basis backend unavailable: {0}")]
    UnsupportedBasis(String),

    #[error("level {level} has complex eigenvalue {re:.10} {im:+.3e}i; a real spectrum is required")]
    ComplexSpectrum { level: usize, re: f64, im: f64 },

    #[error("matrix is not Hermitian (max violation {0:.3e})")]
    NonHermitian(f64),

    #[error("position pathway unavailable: {0}")]
    PathwayUnavailable(String),

    #[error("state has zero norm")]
    ZeroState,

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error("requested {requested} levels but only {available} are available")]
    NotEnoughLevels { requested: usize, available: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_profile(profile: &[(f64, f64)]) -> String {
    profile
        .iter()
        .map(|(e, d)| format!("({e:.4}, {d:.2e})"))
        .collect::<Vec<_>>()
        .join(" ")
}
