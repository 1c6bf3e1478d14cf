pub mod arm;
pub mod cli;
pub mod error;
pub mod fairness;
pub mod planning;
pub mod policy;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
