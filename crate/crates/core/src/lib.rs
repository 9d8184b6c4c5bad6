//! Spectral analysis of Krein strings whose mass distribution is a
//! self-similar generalized Cantor measure.
//!
//! The pipeline is: [`ladder`] describes the iterated function system,
//! [`discretize`] produces exactly self-similar atomic approximations,
//! [`stieltjes`] solves the resulting tridiagonal pencil by Sturm-count
//! bisection, [`renorm`] checks the renormalization identities across
//! generations, and [`asymptotics`] samples the renormalized counting
//! function over one period.

pub mod asymptotics;
pub mod discretize;
pub mod error;
pub mod io;
pub mod ladder;
pub mod renorm;
pub mod stieltjes;

pub use asymptotics::{
    convergence_report, counting, disc_count_bound, sigma_profile, ConvergenceReport,
    DiscCountBound, SigmaProfile, TRUST_MARGIN,
};
pub use discretize::{capacity, cylinders, discretize, set_capacity, AtomicMeasure, Cylinder};
pub use error::{Result, SpectraError};
pub use ladder::{
    apply_s, evaluate_c, even_ladder, validate_ladder, LadderSpec, Number, PiecewiseLinear,
    RawLadder, Scalar,
};
pub use renorm::{
    bc_counting_shift, gammas, log_distance_partial_sums, verify_ordering_chain,
    verify_periodicity, verify_quasiperiodicity, LogDistance, OrderingReport, RenormReport,
    Theorem,
};
pub use stieltjes::{
    assemble, eigenvalue, eigenvalues_unresolved, eigenvector, oscillation_count, sign_changes,
    spectrum, sturm_count, BoundaryCondition, Spectrum, StringSystem,
};
