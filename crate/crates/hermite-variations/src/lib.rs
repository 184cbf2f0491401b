pub mod error;
pub mod gaussian;
pub mod params;
pub mod quad;
pub mod rng;
pub mod simulator;
pub mod stats;
pub mod variation;
pub mod harness;
pub mod criteria;
pub mod cli;

pub use error::{HvError, Result};
pub use params::{derive_params, HurstParams};
pub use rng::RandomStream;
