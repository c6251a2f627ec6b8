//! Nonlinear opinion dynamics for agents that split their effort between two
//! task patches.
//!
//! Each agent carries an opinion `z` coupled to its horizontal position. The
//! [`model`] module holds the vector fields, [`integrator`] advances single
//! agents, [`bifurcation`] follows equilibria in parameter space, and
//! [`sim`] runs the multi-agent trash-collection scenario with the
//! [`environment`] and [`safety`] layers.

pub mod bifurcation;
pub mod config;
pub mod environment;
pub mod error;
pub mod integrator;
pub mod model;
pub mod safety;
pub mod scenarios;
pub mod sim;

pub use error::{Error, Result};
pub use model::{AgentParams, AgentState, Membership, Param, Patch, PatchId, Waypoint};
