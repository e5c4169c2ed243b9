use thiserror::Error;

/// Failures raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions")]
    QuadratureFailure {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("integrand does not decay at large q ({0}); supply a finite q_max or a decorrelating model")]
    ModelRegularization(String),

    #[error("singular medium: Maxwell-Garnett denominator |1 - rho*alpha/3| = {0:e}")]
    SingularMedium(f64),

    #[error("empty medium: rho*alpha = 0, polarization propagator undefined")]
    EmptyMedium,

    #[error("local field factor is singular at q = {q}")]
    SingularLocalField { q: f64 },

    #[error("argument principle counted {counted} roots but {converged} converged")]
    IncompleteRoots { counted: usize, converged: usize },

    #[error("renormalization denominator vanishes (|d| = {0:e})")]
    ResonanceSingularity(f64),

    #[error("no resonance root in [{lo}, {hi}]")]
    NoResonance { lo: f64, hi: f64 },

    #[error("fixed point did not converge after {iterations} iterations (last step {last_step:e})")]
    FixedPointFailure {
        iterations: usize,
        last_step: f64,
        history: Vec<(f64, f64)>,
    },

    #[error("integrand not decayed at omega_max = {omega_max} (|1 - n^3| = {residual:e}); partial value {partial:e}")]
    CutoffNotDecayed {
        omega_max: f64,
        residual: f64,
        partial: f64,
    },

    #[error("logarithm branch jumps by {jump:.3} rad near omega = {omega}; refine the grid")]
    GridRefinement { omega: f64, jump: f64 },

    #[error("analytic continuation failed at k = {re} + {im}i: {reason}")]
    AnalyticContinuation { re: f64, im: f64, reason: String },

    #[error("random sequential addition failed after {rejections} rejections ({placed} of {wanted} placed)")]
    DensityTooHigh {
        rejections: u64,
        placed: usize,
        wanted: usize,
    },

    #[error("resonant cluster: condition estimate {condition:e}, residual {residual:e}")]
    ResonantCluster { condition: f64, residual: f64 },

    #[error("ensemble quality: {failed} of {total} configurations failed")]
    EnsembleQuality { failed: usize, total: usize },

    #[error("comparison invalid: {0}")]
    ComparisonInvalid(String),

    #[error("internal consistency: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
