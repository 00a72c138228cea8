//! Simulation, optimization and statistical certification of
//! entanglement-assisted qubit communication.
//!
//! The crate is organized bottom-up:
//!
//! * [`qcore`]: dense quantum linear algebra (states, channels, POVMs).
//! * [`protocol`]: the two-EPR-pair random-access-code protocol with a
//!   state-discrimination flag.
//! * [`optim`]: POVM, constrained-state and isometry solvers plus a generic
//!   see-saw driver.
//! * [`bounds`]: almost-qutrit corrected benchmarks.
//! * [`stats`]: estimator, Azuma-Hoeffding p-value, Poisson bootstrap.
//! * [`facets`]: (6,4,1,6) facet inequalities, classical and quantum bounds,
//!   and the rotation/CNOT circuit template.
//! * [`dataio`]: measured-table ingestion, binning and reports.
//! * [`cli`]: command implementations behind the `eacomm` binary.

pub mod bounds;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod facets;
pub mod optim;
pub mod protocol;
pub mod qcore;
pub mod selftest;
pub mod stats;

pub use error::{Error, Result};
