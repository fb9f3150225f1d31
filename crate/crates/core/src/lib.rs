pub mod assess;
pub mod assist;
pub mod cli;
pub mod defaults;
pub mod eeg;
pub mod error;
pub mod games;
pub mod io;
pub mod kinematics;
pub mod patient;
pub mod stats;

pub use error::{Error, Result};
