//! Client side of remote usage: push local rows, pull the latest model.

use std::time::Duration;

use super::wire::{decode, encode, ExchangeDocument, RowBatch, CONTENT_TYPE};
use super::SyncError;
use crate::sample::SampleRow;
use crate::store::{Store, StoreError, Watermark};

const TIMEOUT: Duration = Duration::from_secs(120);

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(TIMEOUT))
        .build()
        .into()
}

fn endpoint(server_url: &str, path: &str) -> String {
    format!("{}/{}", server_url.trim_end_matches('/'), path)
}

/// Status and decoded body of a request.
fn exchange(req: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Result<(u16, ExchangeDocument), SyncError> {
    let mut resp = req.map_err(|e| SyncError::Network(e.to_string()))?;
    let status = resp.status().as_u16();
    let body = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| SyncError::Network(e.to_string()))?;
    let doc = decode(&body).map_err(|e| SyncError::Response { status, message: e.to_string() })?;
    Ok((status, doc))
}

fn status_error(status: u16, doc: ExchangeDocument) -> SyncError {
    let message = match doc {
        ExchangeDocument::Error { message } => message,
        other => format!("unexpected response {other:?}"),
    };
    SyncError::Response { status, message }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PushOutcome {
    /// Rows sent in the request.
    pub sent: usize,
    /// Rows the server stored.
    pub accepted: usize,
    /// Rows the server already had.
    pub duplicates: usize,
}

impl std::ops::AddAssign for PushOutcome {
    fn add_assign(&mut self, o: PushOutcome) {
        self.sent += o.sent;
        self.accepted += o.accepted;
        self.duplicates += o.duplicates;
    }
}

/// Sends `rows` and returns the server's verdict. A 409 still counts as
/// delivered: the duplicates are already on the server.
fn send(server_url: &str, doc: &ExchangeDocument, path: &str) -> Result<PushOutcome, SyncError> {
    let sent = match doc {
        ExchangeDocument::Samples(b) | ExchangeDocument::Feedback(b) => b.rows.len(),
        _ => 0,
    };
    let req = agent()
        .post(&endpoint(server_url, path))
        .header("Content-Type", CONTENT_TYPE)
        .send(encode(doc));
    match exchange(req)? {
        (200..=299 | 409, ExchangeDocument::Accepted { count, duplicates }) => Ok(PushOutcome {
            sent,
            accepted: count,
            duplicates,
        }),
        (status, doc) => Err(status_error(status, doc)),
    }
}

fn batch(store: &Store, smell: &str, metric_names: Vec<String>, rows: Vec<SampleRow>) -> Result<RowBatch, StoreError> {
    Ok(RowBatch {
        smell: smell.to_owned(),
        client: store.client_id()?,
        metric_names: if rows.is_empty() { Vec::new() } else { metric_names },
        rows,
    })
}

/// Sends the smell's expert rows not yet delivered. The watermark moves
/// only after the server answered.
pub fn push_samples(store: &Store, server_url: &str, smell: &str) -> Result<PushOutcome, SyncError> {
    let kind = store.smell(smell)?;
    let table = store.load_table_or_empty(&kind)?;
    let expert: Vec<SampleRow> = table.rows.into_iter().filter(|r| !r.origin.is_feedback()).collect();
    let mark = store.watermark(smell)?;
    let fresh = expert.get(mark.samples..).unwrap_or_default().to_vec();
    if fresh.is_empty() {
        return Ok(PushOutcome::default());
    }
    let doc = ExchangeDocument::Samples(batch(store, smell, table.metric_names, fresh)?);
    let outcome = send(server_url, &doc, "v1/samples")?;
    store.set_watermark(smell, Watermark { samples: expert.len(), ..mark })?;
    Ok(outcome)
}

/// Sends undelivered feedback rows of every smell with a sample file.
pub fn push_feedback(store: &Store, server_url: &str) -> Result<PushOutcome, SyncError> {
    let mut total = PushOutcome::default();
    for kind in store.registry()?.iter() {
        let table = match store.load_table(&kind.name) {
            Ok(t) => t,
            Err(StoreError::MissingFile(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        let feedback: Vec<SampleRow> = table.rows.into_iter().filter(|r| r.origin.is_feedback()).collect();
        let mark = store.watermark(&kind.name)?;
        let fresh = feedback.get(mark.feedback..).unwrap_or_default().to_vec();
        if fresh.is_empty() {
            continue;
        }
        let doc = ExchangeDocument::Feedback(batch(store, &kind.name, table.metric_names, fresh)?);
        total += send(server_url, &doc, "v1/feedback")?;
        store.set_watermark(&kind.name, Watermark { feedback: feedback.len(), ..mark })?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PullOutcome {
    Updated { from: Option<u32>, to: u32 },
    UpToDate { local: u32, server: u32 },
}

/// Stores the server's model when it is newer than the local one.
pub fn pull_model(store: &Store, server_url: &str, smell: &str) -> Result<PullOutcome, SyncError> {
    let req = agent().get(&endpoint(server_url, &format!("v1/models/{smell}"))).call();
    let model = match exchange(req)? {
        (200, ExchangeDocument::Model(m)) if m.smell == smell => m,
        (404, _) => return Err(SyncError::NoServerModel(smell.to_owned())),
        (status, doc) => return Err(status_error(status, doc)),
    };
    let local = store.model_version(smell)?;
    match local {
        Some(v) if v >= model.version => Ok(PullOutcome::UpToDate {
            local: v,
            server: model.version,
        }),
        _ => {
            store.save_model(&model)?;
            Ok(PullOutcome::Updated {
                from: local,
                to: model.version,
            })
        }
    }
}

/// Asks the server to recalibrate over everything it holds.
pub fn request_calibration(server_url: &str, smell: &str) -> Result<crate::stats::SmellModel, SyncError> {
    let req = agent()
        .post(&endpoint(server_url, &format!("v1/calibrate/{smell}")))
        .header("Content-Type", CONTENT_TYPE)
        .send_empty();
    match exchange(req)? {
        (200, ExchangeDocument::Model(m)) => Ok(m),
        (status, doc) => Err(status_error(status, doc)),
    }
}
