use thiserror::Error;

/// Everything that can go wrong across the library.
///
/// Numerical failures carry enough context to point at the offending
/// quantity; configuration problems are reported with field-level messages
/// by the CLI layer on top of [`Error::Config`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input {0}")]
    NonFinite(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("endpoint Newton did not converge within {iters} iterations (|g| = {residual:.3e})")]
    SolveDiverged { iters: usize, residual: f64 },

    #[error("density factor h is not positive on the support; potential is outside the one-cut class")]
    NotOneCut,

    #[error("MALA chain stalled: acceptance rate {0:.3} after adaptation")]
    ChainStalled(f64),

    #[error("SDE step collapsed at t = {t:.6} (index {index}): 20 halvings exhausted")]
    StepCollapse { t: f64, index: usize },

    #[error("v-ODE step too large: L1 norm grew to {0}")]
    StepTooLarge(f64),

    #[error("too few small-gap events to fit a repulsion exponent ({0} gaps); widen the window")]
    WidenWindow(usize),

    #[error("optimizer diverged: {0}")]
    OptimFailed(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
