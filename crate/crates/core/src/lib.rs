//! Decentralized, operating-point independent stability certificates for
//! linearized power-network frequency dynamics.
//!
//! Each bus is tested locally against a shared positive-real multiplier; the
//! network-side scaling only needs line susceptances and voltage caps.

pub mod error;
pub mod linalg;
pub mod cert;
pub mod tf;
pub mod models;
pub mod network;
pub mod converse;

pub use error::{Error, Result};
