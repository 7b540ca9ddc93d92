//! Model files, result documents and the analysis commands behind the
//! `dmkit` binary.

pub mod commands;
pub mod error;
pub mod model;
pub mod report;

pub use commands::{run, Command, Format, GridSpec, Invocation, Options, PointsSpec};
pub use error::{CliError, ErrorKind};
pub use model::LoadedModel;
