//! Simulator for networks of Kerr parametric oscillators (KPOs) solving Ising
//! problems in the LHZ parity encoding.
//!
//! Units: `ħ = 1`, energies in units of the Kerr coefficient. Fock states are
//! stored mode-major: mode 0 is the most significant digit of the basis index.

pub mod error;
pub mod evolve;
pub mod experiments;
pub mod fock;
pub mod hamiltonian;
pub mod io;
pub mod lhz;
pub mod readout;
pub mod scalar;
pub mod variational;

pub use error::{Error, Result};
pub use evolve::{evolve, EvolutionReport, EvolveOptions};
pub use fock::{FockSpace, StateVector};
pub use hamiltonian::{CorrectionMode, Hamiltonian, SimParams};
pub use lhz::{build_lhz, IsingInstance, LhzInstance, LhzLayout, Spins};
pub use readout::{metrics, spin_distribution, Metrics, SpinDistribution};
pub use scalar::{Coupling, Real};

/// Exact couplings for classical checks.
pub type Exact = num_rational::Ratio<i64>;
pub type IsingInstanceExact = IsingInstance<Exact>;
pub type LhzInstanceExact = LhzInstance<Exact>;
pub type IsingInstance64 = IsingInstance<f64>;
pub type LhzInstance64 = LhzInstance<f64>;
pub type StateVector64 = StateVector<f64>;
pub type StateVector32 = StateVector<f32>;
