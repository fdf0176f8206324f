use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use dcnflow::preview::PreviewResponse;
use dcnflow::server::{router, AppState};
use dcnflow_core::benchmarks::preset;
use dcnflow_core::network::Topology;
use dcnflow_core::pmf::{build_pmf, DistSpec};

fn app(dir: &std::path::Path) -> Router {
    router(AppState::new(dir))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn json_of(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

fn weibull() -> Value {
    json!({
        "kind": "named",
        "family": "weibull",
        "params": {"alpha": 0.5, "lambda": 40.0},
        "min_val": 1.0,
        "max_val": 5000.0,
        "round_to": 1.0
    })
}

#[tokio::test]
async fn preview_single_point() {
    let dir = tempfile::tempdir().unwrap();
    let body = json!({
        "dist_spec": {"kind": "explicit", "explicit_pmf": {"100": 1.0}, "min_val": 1.0, "round_to": 1.0},
        "sample_count": 2000,
        "bins": 10,
        "seed": 1
    });
    let (status, bytes) = call(&app(dir.path()), "POST", "/api/preview", Some(&body.to_string())).await;
    assert_eq!(status, StatusCode::OK);
    let resp: PreviewResponse = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(resp.histogram.counts.iter().filter(|&&c| c > 0).count(), 1);
    assert_eq!(resp.histogram.counts.iter().sum::<u64>(), 2000);
    assert_eq!(resp.stats.mean, 100.0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn preview_is_stateless() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let body = json!({"dist_spec": weibull(), "sample_count": 20000, "bins": 50, "seed": 7}).to_string();
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let (app, body) = (app.clone(), body.clone());
            tokio::spawn(async move { call(&app, "POST", "/api/preview", Some(&body)).await })
        })
        .collect();
    let mut results = Vec::new();
    for h in handles {
        results.push(h.await.unwrap());
    }
    for (status, bytes) in &results {
        assert_eq!(*status, StatusCode::OK);
        assert_eq!(bytes, &results[0].1);
    }
    let resp: PreviewResponse = serde_json::from_slice(&results[0].1).unwrap();
    assert!(resp.cdf.probs.windows(2).all(|w| w[0] <= w[1]));
    assert!((resp.cdf.probs.last().unwrap() - 1.0).abs() <= 1e-9);
}

#[tokio::test]
async fn preview_errors_are_json_400() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    for body in [
        "not json".to_string(),
        json!({"dist_spec": weibull(), "sample_count": 10, "bins": 10}).to_string(),
        json!({"dist_spec": {"kind": "named", "family": "lognormal", "params": {"mu": 1.0, "sigma": -1.0}, "min_val": 1.0, "round_to": 1.0}, "sample_count": 1000, "bins": 10}).to_string(),
        json!({"dist_spec": {"kind": "bogus"}, "sample_count": 1000, "bins": 10}).to_string(),
    ] {
        let (status, bytes) = call(&app, "POST", "/api/preview", Some(&body)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert!(json_of(&bytes)["error"].is_string());
    }
}

#[tokio::test]
async fn presets_include_university_with_its_spec() {
    let dir = tempfile::tempdir().unwrap();
    let (status, bytes) = call(&app(dir.path()), "GET", "/api/presets", None).await;
    assert_eq!(status, StatusCode::OK);
    let v = json_of(&bytes);
    let names: Vec<&str> = v["names"].as_array().unwrap().iter().map(|n| n.as_str().unwrap()).collect();
    for n in ["university", "private_enterprise", "commercial_cloud", "social_media_cloud"] {
        assert!(names.contains(&n));
    }
    assert_eq!(names.len(), 14);
    let uni = v["presets"].as_array().unwrap().iter().find(|p| p["name"] == "university").unwrap();
    assert_eq!(uni["size_spec"]["family"], "lognormal");
    assert_eq!(uni["size_spec"]["params"]["mu"], 7.0);
    assert_eq!(uni["size_spec"]["params"]["sigma"], 2.5);
    assert_eq!(uni["time_spec"]["family"], "weibull");
}

#[tokio::test]
async fn spec_save_then_load_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let spec = preset("university", &Topology::reference()).unwrap().size_spec;
    let body = json!({"name": "uni-sizes", "spec": spec}).to_string();
    let (status, _) = call(&app, "POST", "/api/specs", Some(&body)).await;
    assert_eq!(status, StatusCode::CREATED);

    let (status, bytes) = call(&app, "GET", "/api/specs/uni-sizes", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(bytes, std::fs::read(dir.path().join("uni-sizes.json")).unwrap());
    assert_eq!(bytes, serde_json::to_vec_pretty(&spec).unwrap());
    let back: DistSpec = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(build_pmf(&back, 20_000, 3).unwrap(), build_pmf(&spec, 20_000, 3).unwrap());

    // overwrite keeps a single file
    let (status, _) = call(&app, "POST", "/api/specs", Some(&body)).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[tokio::test]
async fn spec_errors() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, bytes) = call(&app, "GET", "/api/specs/missing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(json_of(&bytes)["error"].as_str().unwrap().contains("missing"));

    let bad_name = json!({"name": "../x", "spec": weibull()}).to_string();
    assert_eq!(call(&app, "POST", "/api/specs", Some(&bad_name)).await.0, StatusCode::BAD_REQUEST);
    let bad_spec = json!({"name": "x", "spec": {"kind": "named", "family": "weibull", "params": {}, "min_val": 1.0, "round_to": 1.0}}).to_string();
    assert_eq!(call(&app, "POST", "/api/specs", Some(&bad_spec)).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);

    assert_eq!(call(&app, "GET", "/api/nothing", None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn node_dist_preview() {
    let dir = tempfile::tempdir().unwrap();
    let body = json!({
        "node_dist": {"num_skewed_nodes": 2, "skewed_node_probs": [0.3, 0.3]},
        "topology": {"servers_per_rack": 4, "racks": 2, "cores": 1, "server_link": 1250.0, "core_link": 5000.0, "num_channels": 1},
        "seed": 3
    });
    let (status, bytes) = call(&app(dir.path()), "POST", "/api/node-dist/preview", Some(&body.to_string())).await;
    assert_eq!(status, StatusCode::OK);
    let v = json_of(&bytes);
    let matrix = v["node_dist"]["matrix"].as_array().unwrap();
    assert_eq!(matrix.len(), 8);
    let total: f64 = matrix.iter().flat_map(|r| r.as_array().unwrap()).map(|x| x.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    let loads = v["endpoint_loads"].as_array().unwrap();
    assert_eq!(loads.len(), 8);
    let mut totals: Vec<f64> = loads
        .iter()
        .map(|l| l["src_frac"].as_f64().unwrap() + l["dst_frac"].as_f64().unwrap())
        .collect();
    totals.sort_by(f64::total_cmp);
    assert!((totals.iter().sum::<f64>() - 2.0).abs() < 1e-9);
    // each hot node carries its own 0.3 plus part of the other's spread
    assert!(totals[6] >= 0.3 && totals[5] < 0.25, "{totals:?}");

    let bad = json!({"node_dist": {"num_skewed_nodes": 2, "skewed_node_probs": [0.9, 0.9]}});
    assert_eq!(call(&app(dir.path()), "POST", "/api/node-dist/preview", Some(&bad.to_string())).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn skew_table_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let body = json!({"xs": [0.05, 0.1, 0.2, 0.4], "ys": [0.55], "rhos": [0.1, 0.5, 0.9]});
    let (status, bytes) = call(&app(dir.path()), "POST", "/api/skew-table", Some(&body.to_string())).await;
    assert_eq!(status, StatusCode::OK);
    let v = json_of(&bytes);
    let f = v["factors"].as_array().unwrap();
    assert_eq!(f.len(), 3);
    let low = f[0][0][2].as_f64().unwrap();
    assert!((low - (0.55 / 0.2) / (0.45 / 0.8)).abs() < 1e-9, "{low}");
    for rho in f {
        for x in rho[0].as_array().unwrap() {
            assert!(x.as_f64().unwrap() > 1.0);
        }
    }
    let bad = json!({"xs": [1.5], "ys": [0.5], "rhos": [0.5]});
    assert_eq!(call(&app(dir.path()), "POST", "/api/skew-table", Some(&bad.to_string())).await.0, StatusCode::BAD_REQUEST);
}
