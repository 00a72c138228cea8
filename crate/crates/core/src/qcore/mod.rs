//! Finite-dimensional quantum linear algebra: states, channels,
//! measurements, the Born rule and spectral utilities.

pub mod info;
pub mod matrix;
pub mod ops;
pub mod spectral;
pub mod states;
pub mod types;

pub use info::{fidelity, relative_entropy};
pub use matrix::{CMat, CVec, Field, C64};
pub use ops::{apply_channel, born, partial_trace, tensor, Factor};
pub use spectral::{eig_herm, sign_observable, Eigen, SignProjectors, DEFAULT_ZERO_TOL};
pub use types::{DensityOperator, HermitianObservable, Ket, Povm, QuantumChannel, UnitaryOperator};
