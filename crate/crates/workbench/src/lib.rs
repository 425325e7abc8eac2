pub mod api;
pub mod cli;
pub mod error;
pub mod files;
pub mod formalize;
pub mod state;
pub mod watch;

pub use error::WorkbenchError;
pub use state::{Snapshot, Workbench};
