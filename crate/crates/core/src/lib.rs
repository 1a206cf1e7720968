//! Cross-document event coreference resolution.

pub mod classifier;
pub mod cli;
pub mod clustering;
pub mod corpus;
pub mod embeddings;
pub mod features;
pub mod harness;
pub mod metrics;
pub mod sampler;
pub mod synth;
