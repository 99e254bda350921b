use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Evaluation outside the function's domain (e.g. negative time).
    #[error("domain error: {0}")]
    Domain(String),

    /// A stateful update arrived out of order or on an unready state.
    #[error("state error: {0}")]
    State(String),

    #[error("model error: {0}")]
    Model(String),

    /// Maximum-likelihood iteration failed to converge.
    #[error("fit did not converge after {iterations} iterations (last step {last_step:e}, shape {shape})")]
    Fit {
        iterations: usize,
        last_step: f64,
        shape: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Two tiers' demand vectors are not proportional.
    #[error("tier {tier} demand is not proportional to the base tier: resources {resource_a} and {resource_b} give factors {factor_a} and {factor_b}")]
    NonProportional {
        tier: usize,
        resource_a: usize,
        resource_b: usize,
        factor_a: f64,
        factor_b: f64,
    },

    #[error("unknown tier {0}")]
    UnknownTier(u32),
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
