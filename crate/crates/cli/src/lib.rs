//! Command-line front end: system files, commands and reports.

pub mod format;
pub mod report;
pub mod run;

pub use format::{parse, InputError, SystemFile};
pub use report::{Command, Mode, Report, RunOptions};
pub use run::{execute, execute_text, replay, Failure};
