//! Optimization engines: maximum-payoff POVMs with a dual certificate, the
//! constrained top-eigenvalue state step, isometry ascent, and a see-saw
//! driver.

pub mod constrained;
pub mod povm;
pub mod seesaw;
pub mod stiefel;

use serde::Serialize;

pub use constrained::{constrained_state_opt, ConstrainedSolution};
pub use povm::{improve_povm, max_payoff_povm, max_payoff_povm_with, PayoffEnsemble, PovmSolverOptions};
pub use seesaw::{seesaw, Initialization, RestartSummary, SeeSawConfig, SeeSawOutcome, SeeSawProblem};
pub use stiefel::{random_isometry, stiefel_ascent, stiefel_ascent_from, ChoiFunctional, IsometryObjective};

/// An optimizer result with its diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct CertifiedSolution<S> {
    pub value: f64,
    #[serde(skip)]
    pub strategy: S,
    /// Dual value minus primal value, when a certificate exists.
    pub dual_gap: Option<f64>,
    pub sweeps_used: usize,
    pub converged: bool,
}
