use std::time::Duration;

use agentree_core::code_analysis::similarity_matrix;
use agentree_core::journal::{run_stats, to_journal_bytes, SolutionRun};
use agentree_core::simulator::{simulate_run, GrammarGenerator, PolicyConfig};
use agentree_service::analysis::{self, CompareRequest, NodeSel};
use agentree_service::clients::HttpClient;
use agentree_service::workspace::IngestStatus;
use agentree_service::{router, AppState, Workspace};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use tower::ServiceExt;

fn sim(llm: &str, seed: u64, n: usize) -> SolutionRun {
    let cfg = PolicyConfig {
        n_steps: n,
        seed,
        llm_id: llm.into(),
        ..PolicyConfig::default()
    };
    simulate_run(&cfg, GrammarGenerator::default()).unwrap()
}

fn workspace(runs: &[SolutionRun]) -> (tempfile::TempDir, Workspace) {
    let dir = tempfile::tempdir().unwrap();
    let ws = Workspace::open(dir.path().join("ws")).unwrap();
    for r in runs {
        ws.ingest_bytes(&to_journal_bytes(r)).unwrap();
    }
    (dir, ws)
}

fn standard() -> (tempfile::TempDir, AppState) {
    let runs: Vec<SolutionRun> = ["llm-a", "llm-b"]
        .iter()
        .flat_map(|l| (0..3).map(move |s| sim(l, s, 12)))
        .collect();
    let (dir, ws) = workspace(&runs);
    (dir, AppState::offline(ws))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Method::GET, uri, None).await
}

#[tokio::test]
async fn run_endpoints_match_library_output() {
    let (_d, state) = standard();
    let snap = state.workspace.snapshot();
    let app = router(state);
    assert_eq!(get(&app, "/health").await, (StatusCode::OK, json!({"status": "ok"})));

    let (s, runs) = get(&app, "/runs").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(runs, serde_json::to_value(analysis::runs(&snap)).unwrap());
    assert_eq!(runs.as_array().unwrap().len(), 6);

    let run = &snap.run("llm-a-seed1").unwrap().run;
    let (_, summary) = get(&app, "/runs/llm-a-seed1").await;
    assert_eq!(summary["stats"], serde_json::to_value(run_stats(run)).unwrap());

    let (s, sim) = get(&app, "/runs/llm-a-seed1/similarity").await;
    assert_eq!(s, StatusCode::OK);
    let want = similarity_matrix(run);
    assert_eq!(sim["matrix"]["n"], json!(want.n));
    assert_eq!(sim["matrix"]["values"], serde_json::to_value(&want.values).unwrap());

    let (_, tree) = get(&app, "/runs/llm-a-seed1/tree").await;
    assert_eq!(tree, serde_json::to_value(analysis::tree(&snap, "llm-a-seed1").unwrap()).unwrap());
    assert_eq!(tree["nodes"].as_array().unwrap().len(), run.len());

    let (_, node) = get(&app, "/runs/llm-a-seed1/nodes/3").await;
    assert_eq!(node["code"], json!(run.nodes()[3].code));
    let (_, diff) = get(&app, "/runs/llm-a-seed1/diff?a=0&b=6").await;
    assert_eq!(diff, serde_json::to_value(analysis::diff(&snap, "llm-a-seed1", 0, 6).unwrap()).unwrap());
    let (_, findings) = get(&app, "/runs/llm-a-seed1/findings").await;
    assert_eq!(findings, serde_json::to_value(analysis::findings(&snap, "llm-a-seed1").unwrap()).unwrap());
}

#[tokio::test]
async fn errors_use_status_codes() {
    let (_d, state) = standard();
    let app = router(state);
    let (s, body) = get(&app, "/runs/nope").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("nope"));
    assert_eq!(get(&app, "/runs/llm-a-seed0/nodes/99").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/runsets/llm-z/distance").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/runsets/llm-a/order?key=bogus").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/runsets/llm-a/dendrogram?clusters=9").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/projection?algo=umap").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/projection?algo=tsne&perplexity=50").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/jobs/unknown").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn runset_endpoints() {
    let (_d, state) = standard();
    let snap = state.workspace.snapshot();
    let app = router(state);
    let (_, sets) = get(&app, "/runsets").await;
    let sets = sets.as_array().unwrap().clone();
    assert_eq!(sets.len(), 2);
    assert_eq!(sets[0]["run_ids"].as_array().unwrap().len(), 3);

    let (_, dist) = get(&app, "/runsets/llm-b/distance").await;
    assert_eq!(dist, serde_json::to_value(analysis::distance(&snap, "llm-b").unwrap()).unwrap());
    let (_, dend) = get(&app, "/runsets/llm-b/dendrogram?clusters=2").await;
    assert_eq!(dend, serde_json::to_value(analysis::dendrogram(&snap, "llm-b", Some(2)).unwrap()).unwrap());

    for key in ["total_time", "best_metric", "n_buggy", "n_functional", "tree_similarity"] {
        let (s, order) = get(&app, &format!("/runsets/llm-a/order?key={key}")).await;
        assert_eq!(s, StatusCode::OK, "{key}");
        let mut perm: Vec<u64> = order["order"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
        perm.sort();
        assert_eq!(perm, [0, 1, 2], "{key}");
    }
    let (_, order) = get(&app, "/runsets/llm-a/order?key=total_time").await;
    let totals: Vec<f64> = order["run_ids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|id| run_stats(&snap.run(id.as_str().unwrap()).unwrap().run).total_time)
        .collect();
    assert!(totals.windows(2).all(|w| w[0] <= w[1]), "{totals:?}");

    let (_, pkgs) = get(&app, "/packages").await;
    assert_eq!(pkgs, serde_json::to_value(analysis::packages(&snap)).unwrap());
}

#[tokio::test]
async fn cached_results_are_reused() {
    let (_d, state) = standard();
    let cache = state.cache.clone();
    let app = router(state.clone());
    let first = get(&app, "/runs/llm-a-seed0/similarity").await;
    let n = cache.computations();
    assert_eq!(get(&app, "/runs/llm-a-seed0/similarity").await, first);
    assert_eq!(cache.computations(), n);
    // a fresh process over the same workspace reads the persisted entry
    let again = AppState::offline(Workspace::open(state.workspace.root()).unwrap());
    let cache2 = again.cache.clone();
    assert_eq!(get(&router(again), "/runs/llm-a-seed0/similarity").await, first);
    assert_eq!(cache2.computations(), 0);
}

#[tokio::test]
async fn ingest_is_idempotent_and_rejects_malformed_files() {
    let (dir, ws) = workspace(&[]);
    let bytes = to_journal_bytes(&sim("llm-a", 4, 8));
    assert_eq!(ws.ingest_bytes(&bytes).unwrap().status, IngestStatus::Added);
    assert_eq!(ws.ingest_bytes(&bytes).unwrap().status, IngestStatus::Unchanged);
    let listing = || {
        let mut v: Vec<_> = std::fs::read_dir(dir.path().join("ws/journals"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        v.sort();
        v
    };
    assert_eq!(listing().len(), 1);
    let before = (listing(), ws.snapshot().all_hash());
    assert!(ws.ingest_bytes(b"{\"run_id\": \"x\", \"config\": 3}").is_err());
    assert!(ws.ingest_bytes(b"\xff\xfe").is_err());
    let mut bad: Value = serde_json::from_slice(&bytes).unwrap();
    bad["nodes"][3]["parent_id"] = json!(7);
    assert!(ws.ingest_bytes(bad.to_string().as_bytes()).is_err());
    assert_eq!((listing(), ws.snapshot().all_hash()), before);
}

#[tokio::test]
async fn pca_projection_covers_every_node() {
    let (_d, state) = standard();
    let app = router(state);
    let (s, all) = get(&app, "/projection?algo=pca").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(all["points"].as_array().unwrap().len(), 6 * 12);
    assert_eq!(all["embedding_fallbacks"], json!(0));
    let (_, one) = get(&app, "/projection?algo=pca&llm=llm-b").await;
    let points = one["points"].as_array().unwrap();
    assert_eq!(points.len(), 3 * 12);
    assert!(points.iter().all(|p| p["llm_id"] == "llm-b"));
}

async fn wait_for_job(app: &Router, id: &str) -> Value {
    for _ in 0..600 {
        let (_, status) = get(app, &format!("/jobs/{id}")).await;
        if status["state"] != "running" {
            return status;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("job {id} did not finish");
}

#[tokio::test]
async fn tsne_runs_as_a_job_then_serves_from_cache() {
    let (_d, state) = standard();
    let app = router(state);
    let uri = "/projection?algo=tsne&llm=llm-a&perplexity=5&iterations=150&seed=3";
    let (s, started) = get(&app, uri).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let id = started["job_id"].as_str().unwrap().to_string();
    // asking again while it runs joins the same job
    let (_, again) = get(&app, uri).await;
    assert!(again.get("job_id").is_none_or(|j| j == &json!(id)));
    let status = wait_for_job(&app, &id).await;
    assert_eq!(status["state"], "done", "{status}");
    assert_eq!(status["iteration"], json!(150));
    let (s, done) = get(&app, uri).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(done["points"].as_array().unwrap().len(), 36);
    assert!(done["kl"].as_f64().unwrap() >= 0.0);
}

#[tokio::test]
async fn tsne_job_can_be_cancelled() {
    let (_d, state) = standard();
    let app = router(state);
    let (s, started) = get(&app, "/projection?algo=tsne&perplexity=5&iterations=100000").await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let id = started["job_id"].as_str().unwrap().to_string();
    let (s, _) = call(&app, Method::DELETE, &format!("/jobs/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(wait_for_job(&app, &id).await["state"], "cancelled");
}

fn selection() -> Value {
    serde_json::to_value(CompareRequest {
        points1: vec![NodeSel { run_id: "llm-a-seed0".into(), node_id: 0 }],
        points2: vec![
            NodeSel { run_id: "llm-b-seed1".into(), node_id: 1 },
            NodeSel { run_id: "llm-b-seed1".into(), node_id: 2 },
        ],
    })
    .unwrap()
}

#[tokio::test]
async fn compare_offline_echoes_prompt() {
    let (_d, state) = standard();
    let snap = state.workspace.snapshot();
    let app = router(state);
    let (s, body) = call(&app, Method::POST, "/compare", Some(selection())).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["offline"], json!(true));
    assert_eq!(body["text"], body["prompt"]);
    let code = &snap.run("llm-b-seed1").unwrap().run.nodes()[2].code;
    assert!(body["prompt"].as_str().unwrap().contains(code.as_str()));
    let empty = json!({"points1": [], "points2": []});
    assert_eq!(call(&app, Method::POST, "/compare", Some(empty)).await.0, StatusCode::BAD_REQUEST);
}

/// Serves `app` on an ephemeral local port and returns its base URL.
async fn stub(app: Router) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

#[tokio::test]
async fn compare_uses_configured_llm() {
    let url = stub(Router::new().route(
        "/complete",
        post(|headers: axum::http::HeaderMap, Json(b): Json<Value>| async move {
            assert_eq!(headers["authorization"], "Bearer t0ken");
            assert!(b["prompt"].as_str().unwrap().starts_with("You are given two collections of code."));
            Json(json!({"text": "A"}))
        }),
    ))
    .await;
    let (_d, mut state) = standard();
    state.llm = Some(HttpClient::new(format!("{url}/complete"), Some("t0ken".into())));
    let app = router(state);
    let (s, body) = call(&app, Method::POST, "/compare", Some(selection())).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!((body["text"].clone(), body["offline"].clone()), (json!("A"), json!(false)));
}

#[tokio::test]
async fn llm_failures_map_to_gateway_errors() {
    let url = stub(
        Router::new()
            .route("/busy", post(|| async { StatusCode::SERVICE_UNAVAILABLE }))
            .route("/bad", post(|| async { Json(json!({"unexpected": true})) })),
    )
    .await;
    for (path, want) in [("busy", StatusCode::SERVICE_UNAVAILABLE), ("bad", StatusCode::BAD_GATEWAY)] {
        let (_d, mut state) = standard();
        state.llm = Some(HttpClient::new(format!("{url}/{path}"), None));
        let (s, body) = call(&router(state), Method::POST, "/compare", Some(selection())).await;
        assert_eq!(s, want, "{path}: {body}");
        assert!(body["prompt"].is_string());
    }
}

#[tokio::test]
async fn bad_external_embeddings_fall_back() {
    let url = stub(Router::new().route("/embed", post(|| async { Json(json!({"embedding": [1.0, 2.0]})) }))).await;
    let (_d, mut state) = standard();
    state.embedder = Some(HttpClient::new(format!("{url}/embed"), None));
    let (s, body) = get(&router(state), "/projection?algo=pca&llm=llm-a").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["embedding_fallbacks"], json!(36));
}
