pub mod error;
pub mod matops;

pub use error::{FactorSide, LrmcError, Result};
pub mod problems;
pub mod solver;
pub mod schedules;
pub mod training;
pub mod bench;
pub mod cli;
