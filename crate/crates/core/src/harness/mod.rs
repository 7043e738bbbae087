//! Reproduction plumbing shared by the command-line tool and the test suites.

pub mod io;
pub mod sweep;
pub mod verify;
