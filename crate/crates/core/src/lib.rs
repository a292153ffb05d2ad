//! Learning-to-rank for community question answering: text similarity
//! features over question/comment pairs and a pairwise linear ranker.

pub mod app;
pub mod config;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod frames;
pub mod knowledge_graph;
pub mod lexical;
pub mod preprocess;
pub mod ranker;

pub use error::{Error, Result};
