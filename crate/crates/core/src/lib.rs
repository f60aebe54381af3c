//! Flow-sensitive information-flow analysis for a small While language,
//! parameterized over an arbitrary finite security lattice.

pub mod cli;
pub mod error;
pub mod formats;
pub mod lang;
pub mod lattice;
pub mod harness;
pub mod principal;
pub mod transform;
pub mod typing;

pub use error::{Error, Result};
pub use lattice::{Elem, Lattice, VarSet};
pub use typing::{check_judgement, spc, Judgement, TypeEnv};
