//! Command-line harness around `dflab-core`: configuration, task dispatch
//! and the artifact formats consumed by plotting tools.

pub mod config;
pub mod error;
pub mod run;
pub mod schema;

pub use config::{RunConfig, Task};
pub use error::{HarnessError, Result};
pub use run::{run, Format};
