//! Constructive network calculus and compiled multilevel Picard
//! approximations for semilinear heat equations.

pub mod calculus;
pub mod compiler;
pub mod error;
pub mod identity;
pub mod interp;
pub mod lab;
pub mod mlp;
pub mod network;
pub mod oracle;

pub use error::{Error, Result};
pub use network::{Activation, Layer, Network};
