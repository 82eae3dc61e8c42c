use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use thmdx_core::enrich::http::{
    EmbedWireProfile, HttpChatProvider, HttpEmbedProvider, HttpRerankProvider, RerankWireProfile,
};
use thmdx_core::enrich::{
    build_slogan_prompt, embed_text, generate_slogan, ChatProvider, ChatProviderConfig,
    ChatRequest, EmbedProvider, EmbedProviderConfig, EnrichError, ProviderError, RerankProvider,
    RerankProviderConfig, RetryPolicy, SloganStrategy,
};

#[derive(Default)]
struct Seen {
    bodies: Mutex<Vec<Value>>,
    auth: Mutex<Vec<Option<String>>>,
    flaky_calls: AtomicUsize,
}

type Shared = Arc<Seen>;

fn record(seen: &Seen, headers: &HeaderMap, body: &Value) {
    seen.bodies.lock().unwrap().push(body.clone());
    seen.auth.lock().unwrap().push(
        headers
            .get("authorization")
            .map(|v| v.to_str().unwrap().to_string()),
    );
}

async fn chat(
    State(seen): State<Shared>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> Json<Value> {
    record(&seen, &headers, &body);
    Json(json!({"choices": [{"message": {"role": "assistant", "content": "A short slogan.  \n"}}]}))
}

async fn chat_unicode(Json(_): Json<Value>) -> Json<Value> {
    Json(json!({"choices": [{"message": {"content": "Théorème"}}]}))
}

async fn chat_null(Json(_): Json<Value>) -> Json<Value> {
    Json(json!({"choices": [{"message": {"content": null}}]}))
}

async fn flaky(State(seen): State<Shared>, Json(_): Json<Value>) -> (StatusCode, Json<Value>) {
    if seen.flaky_calls.fetch_add(1, Ordering::SeqCst) == 0 {
        return (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(json!({"error": "busy"})),
        );
    }
    (
        StatusCode::OK,
        Json(json!({"choices": [{"message": {"content": "Recovered."}}]})),
    )
}

async fn bad_request(Json(_): Json<Value>) -> (StatusCode, &'static str) {
    (StatusCode::BAD_REQUEST, "nope")
}

/// Returns items in reverse order with explicit indices.
async fn embed(
    State(seen): State<Shared>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> Json<Value> {
    record(&seen, &headers, &body);
    let inputs = body["input"].as_array().cloned().unwrap_or_default();
    let data: Vec<Value> = inputs
        .iter()
        .enumerate()
        .rev()
        .map(|(i, text)| {
            let len = text.as_str().unwrap().len() as f64;
            json!({"index": i, "embedding": [len, 1.0, -1.0]})
        })
        .collect();
    Json(json!({"data": data, "model": body["model"]}))
}

async fn embed_custom(Json(body): Json<Value>) -> Json<Value> {
    let n = body["texts"].as_array().map_or(0, Vec::len);
    Json(json!({"vectors": (0..n).map(|_| json!({"values": [0.5, 0.5]})).collect::<Vec<_>>()}))
}

async fn rerank(
    State(seen): State<Shared>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> Json<Value> {
    record(&seen, &headers, &body);
    let docs = body["documents"].as_array().cloned().unwrap_or_default();
    let results: Vec<Value> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| json!({"index": i, "relevance_score": d.as_str().unwrap().len() as f64 / 10.0}))
        .collect();
    Json(json!({"results": results}))
}

fn serve() -> (String, Shared) {
    let seen: Shared = Arc::default();
    let app = Router::new()
        .route("/chat", post(chat))
        .route("/chat-unicode", post(chat_unicode))
        .route("/chat-null", post(chat_null))
        .route("/flaky", post(flaky))
        .route("/bad", post(bad_request))
        .route("/embed", post(embed))
        .route("/embed-custom", post(embed_custom))
        .route("/rerank", post(rerank))
        .with_state(seen.clone());
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            let addr: SocketAddr = listener.local_addr().unwrap();
            tx.send(addr).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    let addr = rx.recv().unwrap();
    (format!("http://{addr}"), seen)
}

fn chat_config(base: &str, path: &str) -> ChatProviderConfig {
    let mut c = ChatProviderConfig::new(format!("{base}{path}"), "chat-model");
    c.api_key_env = "THMDX_TEST_CHAT_KEY".into();
    c
}

#[test]
fn chat_request_shape_and_auth() {
    let (base, seen) = serve();
    std::env::set_var("THMDX_TEST_CHAT_KEY", "sekrit");
    let config = chat_config(&base, "/chat");
    let provider = HttpChatProvider::new(&config);
    let prompt = build_slogan_prompt(
        SloganStrategy::BodyAbstract,
        "Every X is Y.",
        Some("We study X."),
        None,
    )
    .unwrap();
    let slogan = generate_slogan(
        &provider,
        &config,
        RetryPolicy::immediate(0),
        "d#1",
        SloganStrategy::BodyAbstract,
        &prompt,
    )
    .unwrap();
    assert_eq!(slogan.text, "A short slogan.");

    let body = seen.bodies.lock().unwrap()[0].clone();
    assert_eq!(body["model"], "chat-model");
    assert_eq!(body["max_tokens"], 1024);
    assert!((body["temperature"].as_f64().unwrap() - 0.2).abs() < 1e-6);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][0]["content"], prompt.system);
    assert_eq!(
        body["messages"][1]["content"],
        "theorem_body:\nEvery X is Y.\n\npaper_summary:\nWe study X."
    );
    assert_eq!(
        seen.auth.lock().unwrap()[0].as_deref(),
        Some("Bearer sekrit")
    );
}

#[test]
fn chat_error_paths() {
    let (base, seen) = serve();
    let request = ChatRequest {
        model: "m".into(),
        system: "s".into(),
        user: "u".into(),
        temperature: 0.2,
        max_output_tokens: 1024,
    };
    let bad = HttpChatProvider::new(&chat_config(&base, "/bad"));
    match bad.complete(&request) {
        Err(ProviderError::Status { status: 400, body }) => assert_eq!(body, "nope"),
        other => panic!("{other:?}"),
    }
    let null = HttpChatProvider::new(&chat_config(&base, "/chat-null"));
    assert_eq!(null.complete(&request), Err(ProviderError::EmptyCompletion));

    let config = chat_config(&base, "/chat-unicode");
    let unicode = HttpChatProvider::new(&config);
    let prompt =
        build_slogan_prompt(SloganStrategy::BodyOnly, "Every X is Y.", None, None).unwrap();
    let err = generate_slogan(
        &unicode,
        &config,
        RetryPolicy::immediate(1),
        "d#1",
        SloganStrategy::BodyOnly,
        &prompt,
    );
    assert!(matches!(err, Err(EnrichError::NonAsciiOutput { .. })));

    let config = chat_config(&base, "/flaky");
    let flaky = HttpChatProvider::new(&config);
    let slogan = generate_slogan(
        &flaky,
        &config,
        RetryPolicy::immediate(1),
        "d#1",
        SloganStrategy::BodyOnly,
        &prompt,
    )
    .unwrap();
    assert_eq!(slogan.text, "Recovered.");
    assert_eq!(seen.flaky_calls.load(Ordering::SeqCst), 2);

    let unreachable = HttpChatProvider::with_timeout(
        &chat_config("http://127.0.0.1:9", ""),
        Duration::from_secs(2),
    );
    assert!(matches!(
        unreachable.complete(&request),
        Err(ProviderError::Transport(_))
    ));
}

#[test]
fn embeddings_reordered_by_index() {
    let (base, seen) = serve();
    let config = EmbedProviderConfig::new(format!("{base}/embed"), "embed-model", 3);
    let provider = HttpEmbedProvider::new(&config, EmbedWireProfile::default());
    let texts = vec!["a".to_string(), "abc".to_string(), "ab".to_string()];
    let vectors = provider.embed(&texts).unwrap();
    assert_eq!(
        vectors.iter().map(|v| v[0]).collect::<Vec<_>>(),
        [1.0, 3.0, 2.0]
    );
    let body = seen.bodies.lock().unwrap()[0].clone();
    assert_eq!(
        body,
        json!({"model": "embed-model", "input": ["a", "abc", "ab"]})
    );
    assert_eq!(seen.auth.lock().unwrap()[0], None);

    let single = embed_text(&provider, &config, RetryPolicy::immediate(0), "abcd").unwrap();
    assert_eq!(single, [4.0, 1.0, -1.0]);
    let wrong_dim = EmbedProviderConfig::new(format!("{base}/embed"), "embed-model", 4);
    assert!(matches!(
        embed_text(&provider, &wrong_dim, RetryPolicy::immediate(0), "x"),
        Err(EnrichError::DimensionMismatch {
            expected: 4,
            got: 3
        })
    ));
}

#[test]
fn embedding_wire_profile_is_configurable() {
    let (base, _) = serve();
    let config = EmbedProviderConfig::new(format!("{base}/embed-custom"), "m", 2);
    let profile = EmbedWireProfile {
        model_field: "model_id".into(),
        input_field: "texts".into(),
        data_field: "vectors".into(),
        vector_field: "values".into(),
        index_field: None,
    };
    let provider = HttpEmbedProvider::new(&config, profile);
    let out = provider.embed(&["p".into(), "q".into()]).unwrap();
    assert_eq!(out, vec![vec![0.5, 0.5]; 2]);
}

#[test]
fn rerank_scores_by_index() {
    let (base, seen) = serve();
    let config = RerankProviderConfig {
        endpoint_url: format!("{base}/rerank"),
        model_name: "rr".into(),
        api_key_env: String::new(),
    };
    let provider = HttpRerankProvider::new(&config, RerankWireProfile::default());
    let scores = provider
        .score("query", &["aa".into(), "aaaa".into()])
        .unwrap();
    assert_eq!(scores, [0.2, 0.4]);
    let body = seen.bodies.lock().unwrap()[0].clone();
    assert_eq!(body["query"], "query");
    assert_eq!(body["model"], "rr");
}
