//! Statevector simulation of the parameterized policy circuit.

pub mod pqc;
pub mod state;

pub use pqc::{
    apply_block, expectation, measure, pqc_backward, pqc_forward, run_pqc, run_pqc_observed,
    softmax_policy, term_expectations, Axis, Block, Observable, Pauli, PolicyConfig,
    PqcGradients, PqcParameters,
};
pub use state::{Gate, QuantumState, MAX_QUBITS};
