pub mod bigons;
pub mod divergence;
pub mod embeddings;
pub mod error;
pub mod fit;
pub mod graph;
pub mod hyperbolicity;
pub mod models;
pub mod smallcanc;
pub mod word;

pub use error::{Error, Result};
