//! Library side of the `ctgen` command: input parsing, output rendering,
//! parallel sampling, benchmarks and the acceptance suite.

pub mod app;
pub mod bench;
pub mod input;
pub mod output;
pub mod sampling;
pub mod verify;
