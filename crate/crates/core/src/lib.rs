//! Symbolic-numeric toolkit for Lie systems and their superposition rules.

pub mod algebra;
pub mod dynamics;
pub mod expr;
pub mod geometry;
pub mod group;
pub mod pde;
pub mod superposition;
