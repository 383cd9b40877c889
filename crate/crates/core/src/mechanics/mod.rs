//! Tendon kinematics, torque balance, contacts and the two force setups.

mod chain;
mod contact;
mod equilibrium;
mod loads;
mod tendon;

use thiserror::Error;

use crate::pam::PamError;

pub use chain::{
    forward_kinematics, ChainKind, ChainModel, ChainPose, FingerConfig, MusclePressures, RoutedMuscle, Segment,
};
pub use contact::{Body, Contact, ContactScene, Shape};
pub use equilibrium::{
    chain_residual, chain_tensions, joint_residual, solve_chain, solve_finger_equilibrium, EquilibriumResult,
    SolverOptions, MAX_NEWTON_ITERATIONS, MIN_STEP,
};
pub use loads::{fingertip_force, grasp_cylinder, FingertipForce, GraspForce, MAX_CONTACT_ROUNDS};
pub use tendon::{muscle_excursion, muscle_tension, tendon_excursion};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechanicsError {
    #[error("unknown chain `{0}`")]
    UnknownChain(String),
    #[error("unknown joint `{0}`")]
    UnknownJoint(String),
    #[error("unknown muscle `{0}`")]
    UnknownMuscle(String),
    #[error("no pressure given for muscle `{0}`")]
    MissingPressure(String),
    #[error("configuration has {got} angles, chain has {expected} joints")]
    ConfigLength { expected: usize, got: usize },
    #[error(transparent)]
    Pam(#[from] PamError),
    #[error("no convergence, best residual {:.3e} N·mm after {} iterations", best.residual, best.iterations)]
    NoConvergence { best: Box<EquilibriumResult<f64>> },
    #[error("configuration not reachable: {0}")]
    UnreachableConfig(String),
}

impl MechanicsError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownChain(_) => "unknown-chain",
            Self::UnknownJoint(_) => "unknown-joint",
            Self::UnknownMuscle(_) => "unknown-muscle",
            Self::MissingPressure(_) => "missing-pressure",
            Self::ConfigLength { .. } => "config-length",
            Self::Pam(_) => "pam",
            Self::NoConvergence { .. } => "no-convergence",
            Self::UnreachableConfig(_) => "unreachable-config",
        }
    }
}
