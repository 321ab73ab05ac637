// SPDX-License-Identifier: Apache-2.0

//! Magnon blockade in a driven cavity-magnon system with a degenerate
//! three-wave mixing element.
//!
//! The crate builds the effective and full Hamiltonians in truncated Fock
//! spaces, solves the Lindblad master equation for its steady state, evaluates
//! the weak-drive closed form for the equal-time second-order correlation
//! g²(0), and runs parameter sweeps that write CSV tables.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod fock;
pub mod model;
pub mod steadystate;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
