use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside the domain of the operation.
    #[error("{name} = {value} is out of range: {constraint}")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("round-loop gain g = 1 makes the broadband spectrum singular")]
    UnitGain,

    #[error("optimal gain is unbounded for a perfect detector (theta = 0)")]
    UnboundedGain,

    #[error("loop resonance at omega = {omega}: |1 - g e^(i omega tau) h(omega)| = {magnitude:e}")]
    LoopResonance { omega: f64, magnitude: f64 },

    #[error("infeasible detection: epsilon_x + epsilon_y = {total} > 1")]
    InfeasibleDetection { total: f64 },

    #[error("invalid simulation config: {0}")]
    Config(String),

    #[error("feedback loop diverged at step {step} (|X1| = {value:e})")]
    Instability { step: usize, value: f64 },

    #[error("segment length {segment} exceeds record length {record}")]
    SegmentTooLong { segment: usize, record: usize },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("rate extraction invalid: Bloch dynamics not diagonal (coupling {coupling:e})")]
    RateExtraction { coupling: f64 },

    #[error("no unique steady state")]
    NoUniqueSteadyState,

    #[error("inconsistent rates: gamma_z = 0 with C = {c}")]
    InconsistentRates { c: f64 },

    #[error("unphysical steady state: gamma_z = {gamma_z} < C = {c}")]
    Unphysical { gamma_z: f64, c: f64 },

    #[error("correlation did not decay within {steps} steps")]
    GridLength { steps: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            constraint,
        }
    }

    /// True for errors caused by invalid input rather than by a failed
    /// numerical procedure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::UnitGain
                | Error::UnboundedGain
                | Error::InfeasibleDetection { .. }
                | Error::Config(_)
                | Error::SegmentTooLong { .. }
                | Error::NotPowerOfTwo(_)
                | Error::InconsistentRates { .. }
                | Error::Unphysical { .. }
        )
    }
}
