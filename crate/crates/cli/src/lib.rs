//! Library half of the `sensikit` command-line tool: dataset I/O, target
//! and distribution spec parsing, the black-box target protocol, plan-file
//! serialization, and the experiment harness. The binary in `main.rs` is a
//! thin argument-parsing shell over these.

pub mod dataset;
pub mod experiments;
pub mod extern_target;
pub mod plan_io;
pub mod specs;
