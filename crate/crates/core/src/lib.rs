//! Gossip consensus over networks whose links either attract or repel.
//!
//! The crate covers three levels of analysis for the randomized pairwise
//! update on a [`SignedGraph`]:
//!
//! * [`expectation`]: the mean update `W̄`, the rate `f(α,β) = ρ(ΠW̄)`, and
//!   the repulsion threshold `β⋆` where it crosses 1;
//! * [`meansquare`]: the second-moment operator `E[WᵀΠW]` and its
//!   sufficient conditions;
//! * [`simulator`]: a seeded Monte Carlo engine plus the window conditions
//!   used for almost-sure statements.
//!
//! Dense `nalgebra` matrices are used throughout.

pub mod error;
pub mod expectation;
pub mod export;
pub mod graph;
pub mod meansquare;
pub mod schedule;
pub mod seeds;
pub mod simulator;
pub mod spectral;
pub mod tolerances;

pub use error::{Error, Result};
pub use expectation::{
    classify_expectation, complete_graph_threshold, er_sweep, er_threshold, f_rho, mean_update,
    product_convergence_check, threshold_beta, Classification, ExpectationReport,
    ProductDiagnostic, SweepPoint,
};
pub use graph::{
    build_partition, complete_uniform, er_repulsive, random_symmetric, ring_uniform, Arc, ArcKind,
    ConnectivityReport, GraphFile, SignedGraph,
};
pub use meansquare::{ms_classify, second_moment_operator, MeanSquareClass, SecondMomentReport};
pub use schedule::{Gain, Schedule};
pub use simulator::{
    monte_carlo, no_survivor_probe, phi_sequence, q_sequence, run, select_arc, step,
    EmpiricalClass, Ensemble, StateVector, Trajectory,
};
pub use spectral::{commutator_norm, spectral_radius, sym_eigenvalues, weyl_bound, SpectrumResult};
pub use tolerances::Tolerances;

pub use nalgebra::DMatrix;
