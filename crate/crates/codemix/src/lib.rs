//! File formats, provider backends, the record/replay cache and the
//! command-line interface around [`codemix_core`].

pub mod batch;
pub mod cache;
pub mod canonical;
pub mod cli;
pub mod config;
pub mod formats;
pub mod http;
pub mod tables;
pub mod transport;
pub mod vocab_io;
pub mod wire;

pub use codemix_core as core;
