//! Numerical laboratory for a planar compass-gait walker whose upper body
//! carries a spring-supported mass that slides horizontally at hip height.
//!
//! The crate covers the whole pipeline: swing-phase mechanics and touchdown
//! ([`model`], [`impact`]), hybrid simulation with event location ([`sim`]),
//! Poincaré-map fixed points and their stability ([`limit_cycle`]), ZMP, cost
//! of transport and gait-family classification ([`metrics`]), and resumable
//! parameter sweeps with plot-ready output ([`sweep`], [`plots`]).

pub mod error;
pub mod impact;
pub mod integrate;
pub mod limit_cycle;
pub mod metrics;
pub mod model;
pub mod params;
#[cfg(feature = "sweep")]
pub mod plots;
pub mod sim;
pub mod state;
#[cfg(feature = "sweep")]
pub mod sweep;

pub use error::{Result, WalkerError};
pub use impact::impact_map;
pub use limit_cycle::{cold_start, find_fixed_point, poincare_map, LimitCycle, NewtonConfig, SectionState};
pub use metrics::{GaitMetrics, Group};
pub use model::{controller_torque, dynamics_terms, kinematics, total_energy, DynamicsTerms};
pub use params::{BodyKind, ModelParams};
pub use sim::{simulate_n_strides, simulate_stride, SimConfig, Termination, Trajectory};
pub use state::HybridState;
#[cfg(feature = "sweep")]
pub use sweep::{run_sweep, SweepRecord, SweepSpec};
