//! Library behind the `conserva` binary. The commands return report values
//! and exit codes so they can be driven from tests without a process.

pub mod analysis;
pub mod commands;
pub mod csv_io;
pub mod exit;
pub mod input;
pub mod report;
pub mod simulate;
