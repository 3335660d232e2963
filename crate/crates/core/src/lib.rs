//! Exact arithmetic for finitely generated torsion modules over `Z_p[[T]]`.

pub mod bertini;
pub mod charideal;
pub mod error;
pub mod harness;
pub mod lambda;
pub mod padic;
pub mod parse;
pub mod specialize;

pub use error::{Error, Result};
