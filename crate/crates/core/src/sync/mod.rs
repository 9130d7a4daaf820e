//! Remote usage: a calibration server pooling samples from many clients,
//! the client operations, and the XML document they exchange.

mod client;
mod server;
pub mod wire;

use thiserror::Error;

use crate::store::StoreError;

pub use client::{pull_model, push_feedback, push_samples, request_calibration, PullOutcome, PushOutcome};
pub use server::{aggregate_table, router, serve, spawn_server, ServerHandle};
pub use wire::{decode, encode, ExchangeDocument, RowBatch, WireError};

#[derive(Debug, Error)]
pub enum SyncError {
    #[error("cannot reach server: {0}")]
    Network(String),
    #[error("server answered {status}: {message}")]
    Response { status: u16, message: String },
    #[error("server has no model for `{0}`")]
    NoServerModel(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}
