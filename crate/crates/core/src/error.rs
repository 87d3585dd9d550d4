use thiserror::Error;

/// Errors raised by the analytic model, the optimizer and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("undefined at this point: {0}")]
    Undefined(&'static str),

    #[error("secure-rate sign changes more than once; crossings near {crossings:?} km")]
    MultiCrossing { crossings: Vec<f64> },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ModelError::Domain {
            name,
            value,
            expected: "[0, 1]",
        })
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ModelError::Domain {
            name,
            value,
            expected: "finite and >= 0",
        })
    }
}
