//! Dense statevector engine over labeled qudit registers.

pub mod layout;
pub mod operator;
pub mod projector;
pub mod rng;
pub mod sampling;
pub mod state;

pub use layout::{Register, RegisterLayout, MAX_DIMENSION};
pub use operator::{OperatorKind, OperatorMatrix};
pub use projector::{
    born_probability, commutator_defect, conditional_probability, project_collapse, Clause,
    ProjectorSpec,
};
pub use rng::{TrialRng, GENERATOR_NAME};
pub use sampling::{sample_outcome, OutcomeDistribution};
pub use state::{LocalKet, StateVector};
