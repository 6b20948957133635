//! Exact wall-crossing calculator relating stable-pair invariants on a
//! Calabi-Yau 3-fold containing `P^2`, orbifold stable-pair invariants and
//! generalized DT invariants of sheaves on local `P^2`.
//!
//! Every number is an exact rational; see [`rational`].

pub mod cli;
pub mod combinat;
pub mod dtstore;
pub mod lattice;
pub mod qseries;
pub mod rational;
pub mod selftest;
pub mod wallcross;

pub use lattice::{AmbientData, P2Class, XClass};
pub use rational::Q;
