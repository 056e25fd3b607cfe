//! Clustering and verified feedback generation for iterative
//! dynamic-programming submissions written in a small C subset.

pub mod constraints;
pub mod corpus;
pub mod correspondence;
pub mod encoder;
pub mod feedback;
pub mod features;
pub mod analysis;
pub mod clustering;
pub mod frontend;
pub mod oracle;
pub mod solver;
