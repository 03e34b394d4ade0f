//! Transport of a single photon (equivalently, a single excitation) in a
//! Glauber-Fock waveguide lattice, where the coupling between neighboring
//! sites grows as `C1*sqrt(m)` and the on-site propagation constants ramp
//! linearly as `alpha*m`. The array maps onto a driven quantum harmonic
//! oscillator: site index <-> Fock number, coupling C1 <-> drive g, ramp
//! alpha <-> frequency omega, propagation distance z <-> time t. All engines
//! work in scaled units; conversions to physical units (1/cm couplings,
//! distances in cm) belong to the caller.
//!
//! The crate provides four routes to the same transport observables, kept
//! deliberately independent so they can check one another:
//!
//! - [`unitary`]: lossless propagation of pure states,
//! - [`master`]: dephasing master equations (constant, Ornstein-Uhlenbeck
//!   and power-law-noise rate schedules; site noise correlated or not),
//! - [`stochastic`]: ensembles of pure-state trajectories under explicit
//!   frequency noise,
//! - [`observables`]: closed-form means, the two-variable moment ODE, and
//!   parameter scans across engines.

pub mod error;
pub mod grid;
mod ham;
pub mod lattice;
pub mod master;
pub mod observables;
pub mod stochastic;
pub mod unitary;

pub use error::{Error, Result};
pub use grid::PropagationGrid;
pub use lattice::{
    build_hamiltonian, coupling_from_spacing, revival_distance, spacing_profile, GeometrySpec,
    HoppingMode, LatticeSpec, RevivalDistance,
};
pub use master::{
    integrate_master, master_rhs, CorrelationMode, DensityMatrix, DephasingSchedule, MasterRun,
};
pub use observables::{
    closed_form_markovian, closed_form_unitary, mean_n_at_revival, mean_site_index,
    mean_site_index_profile, moment_ode_mean_n, scan_dephasing, EngineTag, MomentState,
    ScanOptions, ScheduleFamily, TransportCurve,
};
pub use stochastic::{
    propagate_trajectory, run_ensemble, sample_ou_step, sample_white_step, NoiseKind, NoiseModel,
    NoiseStreams, TrajectoryEnsemble, TrajectoryRun,
};
pub use unitary::{intensity, propagate_unitary, PureState, UnitaryRun};
