//! Store, file formats, enrichment client, evaluation harness and HTTP
//! service around the `hvd-core` encoders.

pub mod aggregate;
pub mod commands;
pub mod config;
pub mod engine;
pub mod enrich;
mod error;
pub mod eval;
pub mod index_file;
pub mod ingest;
pub mod record_json;
pub mod rfi;
pub mod service;
pub mod sidecar;
pub mod store;
pub mod synth;
pub mod timefmt;

pub use config::{ConfigBuilder, EncoderConfig, Mode};
pub use engine::Engine;
pub use error::{HvdError, Result};
pub use store::Store;
