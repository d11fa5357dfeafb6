//! Command-line driver for the PIR compiler.

pub mod driver;
