pub mod error;
pub mod geo;
pub mod ideology;
pub mod isolation;
pub mod linkage;
pub mod partisan;
pub mod pipeline;
pub mod roster;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
