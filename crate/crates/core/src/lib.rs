//! A small optimizing compiler for a subset of R. Programs are lowered to an
//! SSA IR in which environments and promises are explicit values, analyzed,
//! optimized, and executed by a reference interpreter that can deoptimize
//! back to unoptimized code.

pub mod frontend;
pub mod cfg;
pub mod ir;
pub mod lower;
pub mod interp;
pub mod analysis;
pub mod passes;
pub mod stats;
pub mod gen;
