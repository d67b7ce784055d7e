//! Readers and writers for the on-disk dataset: the `weibo_network`
//! adjacency file, the uid list, user profiles and the binary graph cache.

pub mod cache;
mod network;
mod profile;
mod uidlist;

pub use cache::{load_cache, read_cache, save_cache, write_cache, CacheError};
pub use network::{parse_weibo_network, write_weibo_network, ParseStats, RawArc, RawNetwork};
pub use profile::{follow_counts, parse_profiles, write_profiles, ProfileField, ProfileSchema, ProfileStats, UserProfile};
pub use uidlist::{parse_uidlist, write_uidlist};

use thiserror::Error;

use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IngestError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        IngestError::Parse { line, message: message.into() }
    }
}
