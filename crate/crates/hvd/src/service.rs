//! HTTP/JSON service.
//!
//! Queries run against an immutable engine snapshot; ingestion builds a new
//! engine behind a writer lock, persists it, then swaps the snapshot, so a
//! query never observes part of a batch.

use std::collections::{HashMap, VecDeque};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use hvd_core::bsc::fnv1a;
use hvd_core::{Record, TimeEncoding};
use serde::{Deserialize, Serialize};

use crate::aggregate::{aggregate, Aggregation, AggregationKind};
use crate::config::Mode;
use crate::engine::Engine;
use crate::enrich::EnrichmentClient;
use crate::ingest::{append_input, enrich_input, read_input_file, IngestInput, IngestReport, DEFAULT_IN_FLIGHT};
use crate::record_json::{LineError, RecordJson};
use crate::rfi::{MatchResponse, Rfi};
use crate::store::Store;
use crate::{timefmt, HvdError};

/// Match sets kept for aggregation requests.
pub const TOKEN_CACHE: usize = 256;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
                detail: None,
            },
        }
    }
}

impl From<HvdError> for ApiError {
    fn from(e: HvdError) -> Self {
        let (status, code) = match &e {
            HvdError::Usage(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            HvdError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            HvdError::Mismatch(_) | HvdError::Core(hvd_core::Error::RegistryMismatch { .. }) => {
                (StatusCode::CONFLICT, "mismatch")
            }
            HvdError::Core(_) | HvdError::Data(_) | HvdError::Json(_) | HvdError::Format(_) => {
                (StatusCode::BAD_REQUEST, "invalid")
            }
            HvdError::Enrichment(_) => (StatusCode::BAD_GATEWAY, "enrichment"),
            HvdError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

struct Snapshot {
    engine: Arc<Engine>,
    generation: u64,
}

/// A cached match set and the engine it was computed against.
struct MatchSet {
    engine: Arc<Engine>,
    ids: Vec<String>,
}

#[derive(Default)]
struct TokenCache {
    order: VecDeque<String>,
    sets: HashMap<String, Arc<MatchSet>>,
}

impl TokenCache {
    fn insert(&mut self, token: String, set: MatchSet) {
        if self.sets.insert(token.clone(), Arc::new(set)).is_none() {
            self.order.push_back(token);
        }
        while self.order.len() > TOKEN_CACHE {
            if let Some(old) = self.order.pop_front() {
                self.sets.remove(&old);
            }
        }
    }
}

pub struct AppState {
    snapshot: RwLock<Snapshot>,
    writer: tokio::sync::Mutex<()>,
    store: Option<Store>,
    client: Option<Arc<dyn EnrichmentClient>>,
    api_key: Option<String>,
    tokens: Mutex<TokenCache>,
}

impl AppState {
    pub fn new(engine: Engine, store: Option<Store>, client: Option<Arc<dyn EnrichmentClient>>) -> Self {
        Self {
            snapshot: RwLock::new(Snapshot {
                engine: Arc::new(engine),
                generation: 0,
            }),
            writer: tokio::sync::Mutex::new(()),
            store,
            client,
            api_key: None,
            tokens: Mutex::new(TokenCache::default()),
        }
    }

    /// Requires `x-api-key` on every request except the health check.
    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn engine(&self) -> Arc<Engine> {
        self.snapshot.read().expect("snapshot lock").engine.clone()
    }

    fn current(&self) -> (Arc<Engine>, u64) {
        let s = self.snapshot.read().expect("snapshot lock");
        (s.engine.clone(), s.generation)
    }

    fn check_key(&self, headers: &HeaderMap) -> Result<(), ApiError> {
        match &self.api_key {
            Some(key) if headers.get("x-api-key").and_then(|v| v.to_str().ok()) != Some(key) => {
                Err(ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong x-api-key"))
            }
            _ => Ok(()),
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/rfi", post(post_rfi))
        .route("/api/records/{id}", get(get_record))
        .route("/api/ingest", post(post_ingest))
        .route("/api/aggregations", get(get_aggregations))
        .route("/api/config", get(get_config))
        .route("/api/health", get(health))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> crate::Result<T> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

async fn post_rfi(State(st): State<Arc<AppState>>, headers: HeaderMap, Json(rfi): Json<Rfi>) -> ApiResult<MatchResponse> {
    st.check_key(&headers)?;
    let (engine, generation) = st.current();
    let client = st.client.clone();
    let (engine, mut resp, rfi) = blocking(move || {
        let resp = engine.rfi(&rfi, client.as_deref())?;
        Ok((engine, resp, rfi))
    })
    .await?;
    // same request against the same snapshot gives the same token
    let key = format!("{generation}:{}", serde_json::to_string(&rfi).unwrap_or_default());
    let token = format!("{:016x}", fnv1a(key.as_bytes()));
    let ids = resp.matches.iter().map(|m| m.id.clone()).collect();
    st.tokens
        .lock()
        .expect("token lock")
        .insert(token.clone(), MatchSet { engine, ids });
    resp.token = Some(token);
    Ok(Json(resp))
}

async fn get_record(State(st): State<Arc<AppState>>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<RecordJson> {
    st.check_key(&headers)?;
    let engine = st.engine();
    let r = engine
        .record(&id)
        .ok_or_else(|| HvdError::NotFound(format!("record {id:?}")))?;
    Ok(Json(RecordJson::from_record(r, false)))
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum IngestRequest {
    Records { records: Vec<serde_json::Value> },
    Path { path: PathBuf, embeddings: Option<PathBuf> },
}

fn parse_payload(values: Vec<serde_json::Value>) -> IngestInput {
    let mut input = IngestInput::default();
    for (i, v) in values.into_iter().enumerate() {
        let line = i + 1;
        let id = v.get("id").and_then(|x| x.as_str()).map(String::from);
        match serde_json::from_value::<RecordJson>(v)
            .map_err(|e| e.to_string())
            .and_then(RecordJson::into_record)
        {
            Ok(r) => {
                input.records.push(r);
                input.lines.push(line);
            }
            Err(reason) => input.rejected.push(LineError { line, id, reason }),
        }
    }
    input
}

async fn post_ingest(
    State(st): State<Arc<AppState>>,
    headers: HeaderMap,
    Json(req): Json<IngestRequest>,
) -> ApiResult<IngestReport> {
    st.check_key(&headers)?;
    let _writer = st.writer.lock().await;
    let engine = st.engine();
    let client = st.client.clone();
    let store = st.store.clone();
    let (next, report) = blocking(move || {
        let input = match req {
            IngestRequest::Records { records } => {
                let mut input = parse_payload(records);
                if let Some(c) = client.as_deref() {
                    enrich_input(&mut input, c, DEFAULT_IN_FLIGHT);
                }
                input
            }
            IngestRequest::Path { path, embeddings } => read_input_file(&path, embeddings.as_deref(), client.as_deref())?,
        };
        let (next, report) = append_input(&engine, input)?;
        if report.accepted > 0 {
            if let Some(store) = &store {
                store.save_engine(&next)?;
            }
        }
        Ok((next, report))
    })
    .await?;
    if report.accepted > 0 {
        let mut s = st.snapshot.write().expect("snapshot lock");
        s.engine = Arc::new(next);
        s.generation += 1;
    }
    Ok(Json(report))
}

#[derive(Debug, Deserialize)]
pub struct AggregationQuery {
    pub token: Option<String>,
    /// Comma-separated ids, as an alternative to a token.
    pub ids: Option<String>,
    pub kind: String,
    pub bucket: Option<String>,
}

async fn get_aggregations(
    State(st): State<Arc<AppState>>,
    headers: HeaderMap,
    Query(q): Query<AggregationQuery>,
) -> ApiResult<Aggregation> {
    st.check_key(&headers)?;
    let kind: AggregationKind = q.kind.parse()?;
    let set = match (&q.token, &q.ids) {
        (Some(t), _) => st
            .tokens
            .lock()
            .expect("token lock")
            .sets
            .get(t)
            .cloned()
            .ok_or_else(|| HvdError::NotFound(format!("token {t:?}")))?,
        (None, Some(ids)) => {
            let engine = st.engine();
            let ids: Vec<String> = ids.split(',').filter(|s| !s.is_empty()).map(String::from).collect();
            if let Some(bad) = ids.iter().find(|id| engine.record(id).is_none()) {
                return Err(HvdError::NotFound(format!("record {bad:?}")).into());
            }
            Arc::new(MatchSet { engine, ids })
        }
        (None, None) => return Err(HvdError::Usage("token or ids required".into()).into()),
    };
    let records: Vec<&Record> = set.ids.iter().filter_map(|id| set.engine.record(id)).collect();
    Ok(Json(aggregate(&records, kind, q.bucket.as_deref())?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConfigResponse {
    pub dimension: usize,
    pub modes: Vec<Mode>,
    pub default_mode: Mode,
    pub attributes: Vec<String>,
    pub defaults: HashMap<Mode, HashMap<String, f64>>,
    pub time_encoding: String,
    pub time_range: [String; 2],
    pub store_size: usize,
}

async fn get_config(State(st): State<Arc<AppState>>, headers: HeaderMap) -> ApiResult<ConfigResponse> {
    st.check_key(&headers)?;
    let engine = st.engine();
    let cfg = engine.config();
    let mut defaults = HashMap::new();
    for &m in &cfg.modes {
        let f = cfg.default_fuzziness(m)?;
        defaults.insert(m, f.iter().map(|(a, t)| (a.name().to_string(), t)).collect());
    }
    let time = &engine.encoder().settings().time;
    Ok(Json(ConfigResponse {
        dimension: cfg.dim,
        modes: cfg.modes.clone(),
        default_mode: engine.default_mode(),
        attributes: cfg.attributes()?.iter().map(|a| a.name().to_string()).collect(),
        defaults,
        time_encoding: match time.encoding {
            TimeEncoding::Level => "level".into(),
            TimeEncoding::Components => "components".into(),
        },
        time_range: [timefmt::format(time.start), timefmt::format(time.end)],
        store_size: engine.len(),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub records: usize,
    pub uptime_s: f64,
}

static STARTED: std::sync::OnceLock<Instant> = std::sync::OnceLock::new();

async fn health(State(st): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        records: st.engine().len(),
        uptime_s: STARTED.get_or_init(Instant::now).elapsed().as_secs_f64(),
    })
}
