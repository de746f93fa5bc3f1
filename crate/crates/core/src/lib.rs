pub mod baselines;
pub mod engine;
pub mod error;
pub mod inference;
pub mod io;
pub mod math;
pub mod model;
pub mod oracle;
pub mod risk;

pub use error::{Error, Result};
