//! Object embeddings learned from simulated stacking behaviour, and affine
//! bridges that ground contextual word vectors in that space.

pub mod bridge;
pub mod config;
pub mod datasim;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod lexicon;
pub mod objindex;
pub mod pipeline;
pub mod report;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};
