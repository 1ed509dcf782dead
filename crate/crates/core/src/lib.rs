//! Decentralized multi-agent search and track.
//!
//! A team of mobile range-bearing sensors covers a rectangular surveillance
//! area. Each agent runs a particle PHD filter for the targets it can see and
//! co-propagates a per-cell search density for the area it has not looked at
//! yet. Agents in communication range exchange search densities, predicted
//! target states and operating modes; searchers partition the unsearched cells
//! into disjoint greedy walks, trackers pick the sensor action maximizing a
//! Renyi information gain, and redundant trackers of the same targets are
//! resolved back to searching.
//!
//! The crate is `no_std` (with `alloc`); all randomness enters through
//! explicitly passed RNGs, and every operation is deterministic given its
//! inputs. IO, file formats and the CLI live in the companion `satrack` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod control;
pub mod filter;
pub mod geometry;
pub mod models;
pub mod planner;
pub mod rng;
pub mod sim;

pub use control::{ospa, OverlapConfig, OverlapDecision, OverlapLedger, RenyiConfig};
pub use filter::{FilterConfig, Particle, ParticleSet, SearchGrid};
pub use geometry::Rect;
pub use models::{
    AgentKinematics, KinematicState, Measurement, MotionModel, SensorModel, TargetKind,
};
pub use planner::{PlannerConfig, SearchMap, WalkPlan};
pub use sim::{
    run, AgentStart, AgentStepLog, MessageLog, Mode, OverlapLog, PayloadLog, Scenario, SimError,
    StepLog, TargetScript, Trace, TruthLog,
};
