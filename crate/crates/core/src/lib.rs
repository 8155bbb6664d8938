//! Moment-matching training of fully-visible Boltzmann machines with
//! exact, Gibbs and emulated-annealer samplers, and an electoral-college
//! forecasting pipeline built on top of them.

pub mod chimera;
pub mod election;
pub mod error;
pub mod io;
pub mod model;
pub mod sampler;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use model::{
    empirical_moments, energy, exact_moments, spins_to_bits, state_probability, to_ising, BoltzmannMachine,
    IsingProblem, MomentStatistics, SampleBatch, SpinVector, StateVector,
};
pub use sampler::{AnnealConfig, AnnealerSettings, ChainStrength, GibbsConfig, SamplerKind};
pub use trainer::{TargetSpec, TrainerConfig, TrainingTrace};
