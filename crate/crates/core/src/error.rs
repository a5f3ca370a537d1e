use thiserror::Error;

use crate::fock::ModeLabel;

pub type Result<T, E = CkaError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CkaError {
    #[error("mode {0} appears in both operands of a tensor product")]
    ModeCollision(ModeLabel),
    #[error("mode {0} is not part of the state's mode set")]
    UnknownMode(ModeLabel),
    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("photon number {count} in mode {mode} exceeds cutoff {cutoff}")]
    CutoffExceeded { mode: ModeLabel, count: u32, cutoff: u32 },
    #[error("state norm {0} outside [0, 1 + 1e-12]")]
    BadNorm(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("register of {requested} qubits exceeds capacity of {capacity}")]
    Capacity { requested: usize, capacity: usize },
    #[error("invalid register layout: {0}")]
    InvalidLayout(String),
    #[error("block is not in the parity code space (leakage {0:.3e})")]
    OutsideCodeSpace(f64),
    #[error("qubit index {0} out of range")]
    QubitOutOfRange(usize),
    #[error("measurement outcome has zero probability")]
    ZeroProbability,
    #[error("QND count {count} outside [0, {max}]")]
    CountOutOfRange { count: usize, max: usize },
    #[error("unsupported layout for correction: {0}")]
    UnsupportedLayout(String),
    #[error("malformed range: {0}")]
    MalformedRange(String),
}
