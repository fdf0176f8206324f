//! JSON HTTP API backing the interactive shaping UI.
//!
//! Request bodies are parsed by hand so every failure, including malformed
//! JSON, comes back as `4xx {"error": "..."}`. Named specs are stored as
//! `<dir>/<name>.json`, written through a temp file and renamed into place.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use dcnflow_core::benchmarks::{preset, preset_names, BenchmarkPreset};
use dcnflow_core::network::{SpineLeafSpec, Topology};
use dcnflow_core::nodedist::{build_node_dist, endpoint_loads, skew_table, EndpointLoad, NodeDist, NodeDistSpec};
use dcnflow_core::pmf::DistSpec;
use dcnflow_core::seed::{derive_seed, stream};

use crate::preview::{preview, PreviewRequest};

pub const SPECS_DIR_ENV: &str = "DCNFLOW_SPECS_DIR";
pub const DEFAULT_SPECS_DIR: &str = "specs";
const MAX_NAME_LEN: usize = 64;
const MAX_SKEW_GRID: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct AppState {
    pub specs_dir: PathBuf,
}

impl AppState {
    pub fn new(specs_dir: impl Into<PathBuf>) -> Self {
        AppState { specs_dir: specs_dir.into() }
    }

    /// `$DCNFLOW_SPECS_DIR`, else `./specs`.
    pub fn from_env() -> Self {
        let dir = std::env::var_os(SPECS_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| DEFAULT_SPECS_DIR.into());
        AppState::new(dir)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl ToString) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, message: message.to_string() }
    }

    fn not_found(message: impl ToString) -> Self {
        ApiError { status: StatusCode::NOT_FOUND, message: message.to_string() }
    }

    fn internal(message: impl ToString) -> Self {
        ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, message: message.to_string() }
    }
}

impl From<dcnflow_core::Error> for ApiError {
    fn from(e: dcnflow_core::Error) -> Self {
        ApiError::bad_request(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed request: {e}")))
}

/// Runs CPU-bound work off the async workers.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/preview", post(preview_handler))
        .route("/api/node-dist/preview", post(node_dist_handler))
        .route("/api/presets", get(presets_handler))
        .route("/api/specs", post(save_spec_handler))
        .route("/api/specs/{name}", get(load_spec_handler))
        .route("/api/skew-table", post(skew_table_handler))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(Arc::new(state))
}

pub async fn serve(addr: SocketAddr, state: AppState) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

async fn preview_handler(body: Bytes) -> ApiResult<Response> {
    let req: PreviewRequest = parse(&body)?;
    let resp = blocking(move || Ok(preview(&req)?)).await?;
    Ok(Json(resp).into_response())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDistPreviewRequest {
    pub node_dist: NodeDistSpec,
    #[serde(default)]
    pub topology: Option<SpineLeafSpec>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeDistPreviewResponse {
    pub node_dist: NodeDist,
    pub endpoint_loads: Vec<EndpointLoad>,
}

async fn node_dist_handler(body: Bytes) -> ApiResult<Response> {
    let req: NodeDistPreviewRequest = parse(&body)?;
    let resp = blocking(move || {
        let topology = Topology::from_spec(req.topology.unwrap_or_else(SpineLeafSpec::reference))?;
        let nd = build_node_dist(&req.node_dist, topology.endpoints(), derive_seed(req.seed, &[stream::NODE_DIST]))?;
        Ok(NodeDistPreviewResponse { endpoint_loads: endpoint_loads(&nd), node_dist: nd })
    })
    .await?;
    Ok(Json(resp).into_response())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PresetsResponse {
    pub names: Vec<String>,
    pub presets: Vec<BenchmarkPreset>,
}

/// Presets resolved on the reference topology.
async fn presets_handler() -> ApiResult<Response> {
    let topology = Topology::reference();
    let presets = preset_names()
        .into_iter()
        .map(|n| preset(n, &topology))
        .collect::<Result<Vec<_>, _>>()
        .map_err(ApiError::internal)?;
    Ok(Json(PresetsResponse {
        names: presets.iter().map(|p| p.name.clone()).collect(),
        presets,
    })
    .into_response())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaveSpecRequest {
    pub name: String,
    pub spec: DistSpec,
}

pub fn valid_spec_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= MAX_NAME_LEN
        && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

fn spec_path(dir: &Path, name: &str) -> ApiResult<PathBuf> {
    if !valid_spec_name(name) {
        return Err(ApiError::bad_request(format!(
            "invalid spec name `{name}`: use 1-{MAX_NAME_LEN} of [A-Za-z0-9_-]"
        )));
    }
    Ok(dir.join(format!("{name}.json")))
}

/// Writes `bytes` to `path` via a sibling temp file and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    use std::io::Write;
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

async fn save_spec_handler(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let req: SaveSpecRequest = parse(&body)?;
    req.spec.validate()?;
    let path = spec_path(&state.specs_dir, &req.name)?;
    let bytes = serde_json::to_vec_pretty(&req.spec).map_err(ApiError::internal)?;
    blocking(move || write_atomic(&path, &bytes).map_err(ApiError::internal)).await?;
    Ok((StatusCode::CREATED, Json(serde_json::json!({ "name": req.name })))
        .into_response())
}

async fn load_spec_handler(State(state): State<Arc<AppState>>, UrlPath(name): UrlPath<String>) -> ApiResult<Response> {
    let path = spec_path(&state.specs_dir, &name)?;
    match tokio::fs::read(&path).await {
        Ok(bytes) => Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(ApiError::not_found(format!("no spec named `{name}`"))),
        Err(e) => Err(ApiError::internal(e)),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewTableRequest {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub rhos: Vec<f64>,
}

async fn skew_table_handler(body: Bytes) -> ApiResult<Response> {
    let req: SkewTableRequest = parse(&body)?;
    if req.xs.len().saturating_mul(req.ys.len()).saturating_mul(req.rhos.len()) > MAX_SKEW_GRID {
        return Err(ApiError::bad_request(format!("grid larger than {MAX_SKEW_GRID} points")));
    }
    let table = blocking(move || Ok(skew_table(&req.xs, &req.ys, &req.rhos)?)).await?;
    Ok(Json(table).into_response())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_names() {
        assert!(valid_spec_name("my-spec_2"));
        assert!(!valid_spec_name(""));
        assert!(!valid_spec_name("../etc/passwd"));
        assert!(!valid_spec_name("a.json"));
        assert!(!valid_spec_name(&"x".repeat(65)));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/s.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
