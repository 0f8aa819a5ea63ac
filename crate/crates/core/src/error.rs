use std::path::PathBuf;

use crate::item::ItemId;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("failed to load {source_name}: record {record}: {message}")]
    Load {
        source_name: String,
        record: String,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("correctness check failed for query {query_id}: {message}")]
    Correctness { query_id: ItemId, message: String },

    #[error("structural audit failed: {0}")]
    Audit(String),

    #[error("output error: {0}")]
    Output(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
