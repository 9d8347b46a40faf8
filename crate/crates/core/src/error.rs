use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("numerical degeneracy: every outcome probability is below {threshold:e}")]
    NumericalDegeneracy { threshold: f64 },

    #[error("genesis block must encode r1 = 0, got r1r2 = {bits}")]
    GenesisConstraint { bits: String },

    #[error("payload of {bits} bits exceeds block capacity of {capacity} bits")]
    Capacity { bits: usize, capacity: usize },

    #[error("codec has no bijection for block index {0}")]
    UnknownIndex(usize),

    #[error("block index {got} cannot follow a chain of {len} blocks (expected {expected})")]
    Sequencing { len: usize, expected: usize, got: usize },

    #[error("block {index} carries phase {got} but the schedule fixes {expected}")]
    ScheduleViolation { index: usize, expected: f64, got: f64 },

    #[error("phase budget violated: theta1 = {theta1} must be < {bound} for ratio n = {ratio}")]
    Budget { theta1: f64, bound: f64, ratio: u32 },

    #[error("state of {qubits} qubits exceeds the explicit simulation limit of {max}")]
    OracleScale { qubits: usize, max: usize },

    #[error("qubit {target} has been absorbed; only qubit {live} is still present")]
    TemporalAccess { target: usize, live: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::ContractViolation(msg.into())
    }

    /// Errors caused by the caller's inputs or parameters rather than a
    /// runtime fault. The CLI maps these to exit code 2.
    pub fn is_constraint(&self) -> bool {
        matches!(
            self,
            Error::GenesisConstraint { .. }
                | Error::Capacity { .. }
                | Error::Budget { .. }
                | Error::Config(_)
                | Error::Sequencing { .. }
                | Error::ScheduleViolation { .. }
                | Error::UnknownIndex(_)
        )
    }
}
