//! Workbench for storage functions witnessing L²-gain dissipation
//! inequalities: verification, falsification, construction and smoothing.

pub mod audits;
pub mod config;
pub mod construct1d;
pub mod expr;
pub mod hji;
pub mod par;
pub mod smoothing;
pub mod storage;
pub mod suite;
pub mod systems;
pub mod trajectories;
