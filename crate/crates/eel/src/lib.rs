//! File formats, plotting, parallel sweeps and the command-line front end
//! for [`eel_core`].

pub mod commands;
pub mod config;
mod error;
pub mod plot;
pub mod report;
pub mod sweep;
pub mod table;

pub use error::{Error, Result};
