//! Transparent distributional term and passage vectors from title/abstract
//! corpora: each term is represented by its highest-odds co-occurring
//! context terms, every dimension directly inspectable.

pub mod cli;
pub mod cooccur;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod passages;
pub mod pipeline;
pub mod stem;
pub mod store;
pub mod terms;
pub mod vectors;

pub use error::{Error, ErrorClass, Result};
