//! Simulation of a single-qubit quantum Otto engine under Markovian noise.
//!
//! The working substance is a spin-1/2 system driven through a four-stroke
//! cycle: adiabatic gap expansion, partial-SWAP thermalization with a hot
//! reservoir (optionally degraded by amplitude and phase damping), adiabatic
//! compression, and thermalization with a cold reservoir. The crate computes
//! work, heat, efficiency, quantum coherence, and Leggett-Garg temporal
//! correlations for the cycle, and also simulates a gate-level 4-qubit
//! circuit realization with per-gate noise injection and a thermodynamic
//! cost metric.
//!
//! Modules:
//! - [`linalg`]: dense complex matrices up to 16x16 with a deterministic
//!   Jacobi eigensolver, matrix exponential/logarithm, Kronecker products.
//! - [`state`]: density matrices, Gibbs states, entropies, coherence.
//! - [`channels`]: CPTP maps (amplitude damping, phase damping, partial-SWAP
//!   thermalization) with certificate checks.
//! - [`dynamics`]: time-dependent Hamiltonian schedules, time-ordered
//!   unitary propagation, and a Lindblad RK4 integrator.
//! - [`engine`]: the four-stroke cycle and all thermodynamic outputs.
//! - [`leggett_garg`]: two-time correlation functions and the K combination.
//! - [`zbasis`]: closed-form results for the sigma_z-basis variant of the
//!   engine, used as independent oracles.
//! - [`circuit`]: density-matrix simulation of the 4-qubit circuit.

pub mod channels;
pub mod circuit;
pub mod dynamics;
pub mod engine;
mod error;
pub mod leggett_garg;
pub mod linalg;
pub mod state;
pub mod zbasis;

pub use error::{Error, Result};
pub use linalg::{herm_eig, kron, mat_exp, mat_log, pauli, ComplexMatrix, PauliAxis};
pub use state::{DensityMatrix, ThermalSpec};
