//! Fractal strings, box-counting, geometric and distance zeta functions.

pub mod boxcount;
pub mod chain;
pub mod distzeta;
pub mod error;
pub mod fit;
pub mod golden;
pub mod ifs;
pub mod quad;
pub mod strings;
pub mod tube;
pub mod zeta;

pub use error::{Error, Result};
