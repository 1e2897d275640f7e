//! Small-instance laboratory for path-recording purifications of Haar oracles,
//! the three-layer glued construction, and the compression of glued databases
//! into single-oracle databases.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod glued;
pub mod haar_oracle;
pub mod linalg;
pub mod path_recording;
pub mod relations;
pub mod simulator;
pub mod stretch;
pub mod structure;

pub use error::{Error, Result};
pub use linalg::C64;
