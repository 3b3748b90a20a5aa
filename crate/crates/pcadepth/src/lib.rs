//! File formats, synthetic scenes, run configuration and the `pcadepth`
//! command line around [`pcadepth_core`].

pub mod cli;
pub mod config;
mod error;
pub mod io;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
