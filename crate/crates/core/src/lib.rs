pub mod cli;
pub mod content;
pub mod effcap;
pub mod energy;
pub mod error;
pub mod games;
pub mod geometry;
pub mod numeric;
pub mod qos;
pub mod rng;
pub mod simkit;

pub use error::{Error, Result};
