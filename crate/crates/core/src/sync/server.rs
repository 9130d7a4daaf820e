//! HTTP calibration server aggregating uploads from many clients.
//!
//! Uploaded rows live under `clients/<client>/samples/<smell>.csv` inside
//! the server's store, so duplicates are detected per client. Models are
//! calibrated over the union of all clients and saved in the server's own
//! `models/` directory.

use std::collections::HashSet;
use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;

use super::wire::{decode, encode, ExchangeDocument, RowBatch, CONTENT_TYPE};
use crate::sample::SampleTable;
use crate::smell::{SmellKind, SmellRegistry};
use crate::stats::{calibrate, CalibrationOptions};
use crate::store::{FeedbackEntry, Store, StoreError};

const BODY_LIMIT: usize = 64 << 20;

struct ServerState {
    store: Store,
    registry: SmellRegistry,
    options: CalibrationOptions,
    /// Serializes every store mutation.
    writes: Mutex<()>,
    /// Smells with a calibration in flight.
    calibrating: Mutex<HashSet<String>>,
}

type Shared = Arc<ServerState>;

fn xml(status: StatusCode, doc: &ExchangeDocument) -> Response {
    (status, [(header::CONTENT_TYPE, CONTENT_TYPE)], encode(doc)).into_response()
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    xml(status, &ExchangeDocument::Error { message: message.into() })
}

/// Client ids name directories, so only a safe alphabet is accepted.
fn valid_client(id: &str) -> bool {
    (1..=64).contains(&id.len()) && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn clients_dir(store: &Store) -> PathBuf {
    store.root().join("clients")
}

/// The union of every client's rows for `smell`, clients in id order.
pub fn aggregate_table(store: &Store, smell: &SmellKind) -> Result<SampleTable, StoreError> {
    let mut table = SampleTable::new(smell.name.clone(), smell.metric_set.clone());
    let dir = clients_dir(store);
    if !dir.is_dir() {
        return Ok(table);
    }
    let mut clients: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|source| StoreError::Io { path: dir.clone(), source })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    clients.sort();
    for client in clients {
        let part = Store::bare(client).load_table_or_empty(smell)?;
        if part.metric_names != smell.metric_set {
            return Err(StoreError::SchemaMismatch {
                smell: smell.name.clone(),
                expected: smell.metric_set.join(","),
                found: part.metric_names.join(","),
            });
        }
        table.rows.extend(part.rows);
    }
    Ok(table)
}

fn store_error(e: StoreError) -> Response {
    match e {
        StoreError::SchemaMismatch { .. } | StoreError::InvalidRow { .. } => error(StatusCode::BAD_REQUEST, e.to_string()),
        other => error(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
    }
}

async fn upload(state: Shared, body: String, feedback: bool) -> Response {
    let batch: RowBatch = match decode(&body) {
        Ok(ExchangeDocument::Samples(b)) if !feedback => b,
        Ok(ExchangeDocument::Feedback(b)) if feedback => b,
        Ok(_) => return error(StatusCode::BAD_REQUEST, "unexpected payload for this endpoint"),
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    if !valid_client(&batch.client) {
        return error(StatusCode::BAD_REQUEST, format!("invalid client id `{}`", batch.client));
    }
    let Some(smell) = state.registry.get(&batch.smell).cloned() else {
        return error(StatusCode::NOT_FOUND, format!("unknown smell `{}`", batch.smell));
    };
    if !batch.rows.is_empty() && batch.metric_names != smell.metric_set {
        return error(
            StatusCode::BAD_REQUEST,
            format!("metrics [{}] do not match `{}` [{}]", batch.metric_names.join(","), smell.name, smell.metric_set.join(",")),
        );
    }
    if let Some(row) = batch.rows.iter().find(|r| r.origin.is_feedback() != feedback) {
        return error(StatusCode::BAD_REQUEST, format!("row origin `{}` not accepted here", row.origin));
    }
    let result = tokio::task::spawn_blocking(move || {
        let _guard = state.writes.lock().unwrap_or_else(|p| p.into_inner());
        let client = Store::bare(clients_dir(&state.store).join(&batch.client));
        let outcome = client.merge_rows(&smell, &batch.rows)?;
        if feedback {
            for &i in &outcome.appended {
                let row = &batch.rows[i];
                state.store.append_feedback_log(&FeedbackEntry {
                    timestamp: row.timestamp.clone(),
                    smell: smell.name.clone(),
                    origin: row.origin,
                    element_id: row.element_id(),
                    application: row.application.clone(),
                })?;
            }
        }
        Ok::<_, StoreError>(outcome)
    })
    .await;
    match result {
        Ok(Ok(outcome)) => {
            let status = if outcome.duplicates > 0 { StatusCode::CONFLICT } else { StatusCode::OK };
            xml(
                status,
                &ExchangeDocument::Accepted {
                    count: outcome.appended.len(),
                    duplicates: outcome.duplicates,
                },
            )
        }
        Ok(Err(e)) => store_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn post_samples(State(state): State<Shared>, body: String) -> Response {
    upload(state, body, false).await
}

async fn post_feedback(State(state): State<Shared>, body: String) -> Response {
    upload(state, body, true).await
}

async fn get_model(State(state): State<Shared>, Path(smell): Path<String>) -> Response {
    if state.registry.get(&smell).is_none() {
        return error(StatusCode::NOT_FOUND, format!("unknown smell `{smell}`"));
    }
    match state.store.load_model(&smell) {
        Ok(model) => xml(StatusCode::OK, &ExchangeDocument::Model(model)),
        Err(StoreError::MissingModel(_)) => error(StatusCode::NOT_FOUND, format!("no model for `{smell}` yet")),
        Err(e) => store_error(e),
    }
}

/// Clears the in-flight mark when the calibration ends, even on panic.
struct InFlight(Shared, String);

impl Drop for InFlight {
    fn drop(&mut self) {
        self.0.calibrating.lock().unwrap_or_else(|p| p.into_inner()).remove(&self.1);
    }
}

async fn post_calibrate(State(state): State<Shared>, Path(smell): Path<String>) -> Response {
    let Some(kind) = state.registry.get(&smell).cloned() else {
        return error(StatusCode::NOT_FOUND, format!("unknown smell `{smell}`"));
    };
    if !state.calibrating.lock().unwrap_or_else(|p| p.into_inner()).insert(smell.clone()) {
        return error(StatusCode::SERVICE_UNAVAILABLE, format!("`{smell}` is being calibrated"));
    }
    let in_flight = InFlight(state.clone(), smell);
    let result = tokio::task::spawn_blocking(move || {
        let state = in_flight.0.clone();
        let (table, previous) = {
            let _guard = state.writes.lock().unwrap_or_else(|p| p.into_inner());
            let table = aggregate_table(&state.store, &kind).map_err(store_error)?;
            let previous = state.store.model_version(&kind.name).map_err(store_error)?;
            (table.effective(), previous.unwrap_or(0))
        };
        if table.is_empty() {
            return Err(error(StatusCode::UNPROCESSABLE_ENTITY, format!("no samples for `{}`", kind.name)));
        }
        let model = calibrate(&table, &kind, &state.options, previous)
            .map_err(|e| error(StatusCode::UNPROCESSABLE_ENTITY, format!("calibration failed: {e}")))?;
        let _guard = state.writes.lock().unwrap_or_else(|p| p.into_inner());
        state.store.save_model(&model).map_err(store_error)?;
        drop(in_flight);
        Ok(model)
    })
    .await;
    match result {
        Ok(Ok(model)) => xml(StatusCode::OK, &ExchangeDocument::Model(model)),
        Ok(Err(response)) => response,
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

/// The service's routes over an initialized store.
pub fn router(store: Store, options: CalibrationOptions) -> Result<Router, StoreError> {
    let registry = store.registry()?;
    let state = Arc::new(ServerState {
        store,
        registry,
        options,
        writes: Mutex::new(()),
        calibrating: Mutex::new(HashSet::new()),
    });
    Ok(Router::new()
        .route("/v1/samples", post(post_samples))
        .route("/v1/feedback", post(post_feedback))
        .route("/v1/models/{smell}", get(get_model))
        .route("/v1/calibrate/{smell}", post(post_calibrate))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state))
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    store: Store,
    options: CalibrationOptions,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(store, options).map_err(std::io::Error::other)?;
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// A server running on its own thread; stops when dropped.
pub struct ServerHandle {
    pub addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stop(mut self) -> std::io::Result<()> {
        self.shutdown()
    }

    fn shutdown(&mut self) -> std::io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().map_err(|_| std::io::Error::other("server thread panicked"))?,
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.shutdown();
    }
}

/// Binds `addr` and serves on a background thread.
pub fn spawn_server(addr: &str, store: Store, options: CalibrationOptions) -> std::io::Result<ServerHandle> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let listener = runtime.block_on(TcpListener::bind(addr))?;
    let local = listener.local_addr()?;
    let app = router(store, options).map_err(std::io::Error::other)?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        runtime.block_on(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
        })
    });
    Ok(ServerHandle {
        addr: local,
        stop: Some(tx),
        thread: Some(thread),
    })
}

