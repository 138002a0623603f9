pub mod align;
pub mod chamfer;
pub mod cli;
pub mod error;
pub mod eval;
pub mod fmt;
pub mod geometry;
pub mod imaging;
pub mod quality;
pub mod synth;
pub mod templates;
pub mod track;

pub use error::{Error, Result};
