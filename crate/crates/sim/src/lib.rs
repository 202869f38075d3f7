//! Deterministic BGP propagation simulator.
//!
//! Routers exchange announcements and withdrawals over zero-delay FIFO
//! sessions; every message is captured so that the effect of community
//! tagging, community filtering and Adj-RIB-Out handling on update volume
//! can be asserted. [`experiments`] ships the four-AS lab and its scripted
//! experiments.

pub mod capture;
pub mod engine;
pub mod experiments;
pub mod profile;
pub mod scenario;

pub use capture::{CaptureError, CaptureLog, CapturedMessage, SimMessage, EXPORT_BASE_TIME};
pub use engine::{
    run, run_scenario, Route, RouteAttrs, RouteSource, Session, SessionKind, SimError, SimRouter, Simulation,
};
pub use experiments::{
    build_lab_topology, builtin_scenario, format_matrix, lab_prefix, run_experiment_matrix, write_matrix_csv,
    Experiment, MatrixRow, PolicySet,
};
pub use profile::{default_profiles, named_profile, ProfileSpec, RouterProfile, SoftwareRow, NAMED_PROFILES, SOFTWARE};
pub use scenario::{Direction, EventKind, PolicyAction, PolicyRule, Scenario, ScenarioError, SimEvent};
