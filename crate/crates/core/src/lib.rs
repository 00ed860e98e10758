//! Optimality gaps of AC optimal power flow relaxations under load scaling.
//!
//! The pipeline: read a case ([`case_io`]) into a [`network::Network`],
//! build the AC-OPF or one of its convex relaxations ([`formulation`]),
//! solve it with the bundled interior-point method ([`ipm`]), and sweep a
//! load factor to locate where relaxations stop being tight ([`sweep`]).
//! [`report`] renders the resulting tables as SVG plots.

pub mod case_io;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod formulation;
pub mod ipm;
pub mod network;
pub mod nlp;
pub mod report;
pub mod sweep;

pub use error::{Error, Result};
