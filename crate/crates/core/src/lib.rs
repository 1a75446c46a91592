pub mod allocate;
pub mod chunker;
pub mod cli;
pub mod coarse;
pub mod config;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod pipeline;
pub mod placeholder;
pub mod pool;
pub mod scorer;
pub mod segment;
pub mod select;
pub mod text;

pub use error::{Error, Result};
