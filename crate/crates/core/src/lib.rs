//! Dense state-vector simulation of extended Wigner's-friend scenarios.
//!
//! The engine in [`qsim`] is generic over the real scalar (`f32` or `f64`);
//! the scenario and Bell-analysis layers run in `f64`. The aliases below
//! name the common concrete types.

pub mod bell;
pub mod error;
pub mod observables;
pub mod qsim;
pub mod report;
pub mod scalar;
pub mod scenarios;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type State = qsim::StateVector<f64>;
pub type Operator = qsim::OperatorMatrix<f64>;
pub type Projector = qsim::ProjectorSpec<f64>;
pub type Ket = qsim::LocalKet<f64>;
pub type State32 = qsim::StateVector<f32>;
pub type Operator32 = qsim::OperatorMatrix<f32>;
pub type Projector32 = qsim::ProjectorSpec<f32>;
