//! Particle approximation of the distribution of the maximum of a Gaussian
//! process, and Thompson-sampling Bayesian optimization built on it.
//!
//! * [`gp`]: exact GP regression and joint posterior draws.
//! * [`maxdist`]: the challenge-based particle algorithm and its KDE estimate.
//! * [`oracles`]: brute-force and analytic reference distributions.
//! * [`acquisition`], [`bayesopt`]: baseline acquisition functions, the
//!   optimization loop and regret accounting.
//! * [`objectives`], [`fixtures`]: benchmark functions and standard setups.

pub mod acquisition;
pub mod bayesopt;
pub mod domain;
pub mod error;
pub mod fixtures;
pub mod gp;
pub mod linalg;
pub mod maxdist;
pub mod models;
pub mod objectives;
pub mod oracles;
pub mod stats;

pub use acquisition::{
    acq_ei, acq_ev, acq_pi, acq_ucb, maximize_acquisition, AcquisitionKind, AcquisitionOptimum,
    AcquisitionSpec,
};
pub use bayesopt::{
    run_optimization, thompson_suggest, ObjectiveError, OptimizationProblem, RunTrace, TraceRow,
};
pub use domain::Domain;
pub use error::{Error, Result};
pub use gp::{
    kernel_eval, posterior, Dataset, GpPosterior, JointSampler, KernelFamily, KernelSpec,
    Prediction,
};
pub use maxdist::{
    challenge_round, init_particles, kde_density, propose_challengers, run_mcmd, run_mcmd_with,
    sample_from_estimate, systematic_resample, Challenger, KdeBandwidth, KdeKernel, MaxDistConfig,
    MaxDistEstimate, ParticleSet,
};
pub use models::{Deterministic, DiscreteGp};
pub use objectives::{branin_negative, example_function, BenchObjective};
pub use oracles::{
    brute_force_max_distribution, compare_distributions, discrete_limit_distribution,
    pairwise_win_matrix, DiscreteMaxDist, DistributionComparison, PairwiseWinMatrix,
};
