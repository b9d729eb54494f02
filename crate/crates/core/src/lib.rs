//! Compositional grid-world environment with a scripted expert, synthetic
//! task language, generalization splits and an evaluation harness.

pub mod conformance;
pub mod episode;
pub mod eval;
pub mod graph;
pub mod hash;
pub mod io;
pub mod lang;
pub mod mapgen;
pub mod oracle;
pub mod splits;
pub mod task;
pub mod world;
