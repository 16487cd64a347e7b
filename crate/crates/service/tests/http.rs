//! End-to-end behaviour of the HTTP API over a real socket.

mod common;

use std::io::{Read, Write};
use std::net::TcpStream;
use std::thread;
use std::time::Duration;

use common::{client, get_json, post_json, post_raw, TestServer};
use discovery_core::benchgen::{generate, TaxonomySpec};
use discovery_core::embed::EmbedderSpec;
use discovery_core::{Engine, EngineConfig, Mode};
use discovery_service::{ApiConfig, Providers};
use serde_json::{json, Value};

fn cards_json(industries: usize) -> Value {
    let corpus = generate(&TaxonomySpec::new(7, industries)).unwrap();
    serde_json::to_value(&corpus.agents).unwrap()
}

#[test]
fn lifecycle_and_validation() {
    let server = TestServer::start(ApiConfig::default(), Providers::default());
    let http = client();

    let (status, body) = get_json(&http, &server.url("/v1/health"));
    assert_eq!((status, body["status"].as_str()), (200, Some("ok")));
    let (_, stats) = get_json(&http, &server.url("/v1/stats"));
    assert_eq!(stats["snapshot_id"], Value::Null);
    assert_eq!(stats["agents"], 0);

    let (status, _) = post_json(&http, &server.url("/v1/discover"), &json!({ "query": "payroll" }));
    assert_eq!(status, 503);
    let (status, body) = post_raw(&http, &server.url("/v1/index/build"), b"");
    assert_eq!(status, 409, "{body}");

    let (status, body) = post_raw(&http, &server.url("/v1/agents"), b"{ not json");
    assert_eq!(status, 400);
    assert!(body["error"].is_string());
    let (status, _) = post_raw(&http, &server.url("/v1/agents"), b"42");
    assert_eq!(status, 400);

    let cards = cards_json(1);
    let first = cards[0].clone();
    let (status, body) = post_json(&http, &server.url("/v1/agents"), &first);
    assert_eq!((status, body["accepted"].as_u64()), (200, Some(1)));
    let mut batch = cards.as_array().unwrap().clone();
    batch.push(json!({ "Id": "broken", "Description": "", "Tags": ["x"] }));
    let (status, body) = post_json(&http, &server.url("/v1/agents"), &Value::Array(batch.clone()));
    assert_eq!(status, 200);
    assert_eq!(body["accepted"].as_u64(), Some(59));
    let rejected = body["rejected"].as_array().unwrap();
    assert_eq!(rejected.len(), 2);
    assert_eq!((rejected[0]["index"].as_u64(), rejected[0]["status"].as_u64()), (Some(0), Some(409)));
    assert_eq!((rejected[1]["index"].as_u64(), rejected[1]["status"].as_u64()), (Some(60), Some(400)));

    let (status, _) = post_json(&http, &server.url("/v1/index/build"), &json!({ "alhpa": 0.3 }));
    assert_eq!(status, 400);
    let (status, _) = post_json(&http, &server.url("/v1/index/build"), &json!({ "alpha": 7 }));
    assert_eq!(status, 400);
    let (status, summary) = post_json(&http, &server.url("/v1/index/build"), &json!({ "alpha": 0.4 }));
    assert_eq!(status, 200, "{summary}");
    assert_eq!(summary["agents"], 60);
    let snapshot_id = summary["snapshot_id"].as_u64().unwrap();

    let (_, stats) = get_json(&http, &server.url("/v1/stats"));
    assert_eq!(stats["agents"], 60);
    assert_eq!(stats["dim"], 384);
    assert_eq!(stats["mode"], "full");
    assert_eq!(stats["snapshot_id"].as_u64(), Some(snapshot_id));
    assert_eq!(stats["tags"], summary["tags"]);

    for bad in [
        json!({ "query": "  " }),
        json!({ "query": "x", "k": 0 }),
        json!({ "query": "x", "mode": "fast" }),
        json!({ "q": "x" }),
    ] {
        let (status, body) = post_json(&http, &server.url("/v1/discover"), &bad);
        assert_eq!(status, 400, "{bad} -> {body}");
        assert!(body["error"].is_string());
    }

    let query = batch[3]["Examples"][0].as_str().unwrap().to_string();
    let (status, body) =
        post_json(&http, &server.url("/v1/discover"), &json!({ "query": query, "k": 3, "mode": "no_slm" }));
    assert_eq!(status, 200, "{body}");
    assert_eq!(body["mode"], "no_slm");
    assert_eq!(body["snapshot_id"].as_u64(), Some(snapshot_id));
    assert_eq!(body["degraded"], false);
    assert!(body["predicted_tags"].as_array().unwrap().is_empty());
    let results = body["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    for field in ["id", "name", "final", "ctx", "res"] {
        assert!(!results[0][field].is_null(), "missing {field}");
    }
    for stage in ["predict", "embed", "recall_sparse", "recall_dense", "rerank", "total"] {
        assert!(body["timings"][stage].is_number(), "missing timing {stage}");
    }

    let agents = serde_json::from_value(Value::Array(batch[1..60].to_vec())).unwrap();
    let mut direct_agents: Vec<discovery_core::AgentCard> = vec![serde_json::from_value(first).unwrap()];
    direct_agents.extend::<Vec<_>>(agents);
    let config = EngineConfig { alpha: 0.4, mode: Mode::NoSlm, final_k: 3, ..EngineConfig::default() };
    let direct = Engine::builder(config).build(direct_agents).unwrap().discover(&query).unwrap();
    let ids: Vec<&str> = results.iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(ids, direct.ids());
    assert_eq!(results[0]["final"].as_f64().unwrap(), direct.ranked[0].final_score);
}

/// Sends a raw POST and returns the response status. The server may answer
/// before reading the body, which HTTP clients tend to report as an error.
fn raw_post_status(base: &str, path: &str, body: &[u8]) -> u16 {
    let mut stream = TcpStream::connect(base.trim_start_matches("http://")).unwrap();
    let head = format!(
        "POST {path} HTTP/1.1\r\nHost: test\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    stream.write_all(head.as_bytes()).unwrap();
    let _ = stream.write_all(body);
    let mut reply = Vec::new();
    let _ = stream.read_to_end(&mut reply);
    let line = String::from_utf8_lossy(&reply);
    line.split_whitespace().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0)
}

#[test]
fn oversized_bodies_are_rejected() {
    let config = ApiConfig { body_limit: 4096, ..ApiConfig::default() };
    let server = TestServer::start(config, Providers::default());
    let big = serde_json::to_vec(&cards_json(1)).unwrap();
    assert!(big.len() > 4096);
    assert_eq!(raw_post_status(&server.base, "/v1/agents", &big), 413);
    let query = serde_json::to_vec(&json!({ "query": "x".repeat(8192) })).unwrap();
    assert_eq!(raw_post_status(&server.base, "/v1/discover", &query), 413);
    assert_eq!(server.state.staged_count(), 0);
    let small = serde_json::to_vec(&cards_json(1)[0]).unwrap();
    assert_eq!(raw_post_status(&server.base, "/v1/agents", &small), 200);
}

/// Embedding stub: 4-dim vectors from text length, stalling on texts that
/// contain "stall".
fn slow_embedder() -> String {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}", server.server_addr().to_ip().unwrap());
    thread::spawn(move || {
        for mut req in server.incoming_requests() {
            thread::spawn(move || {
                let mut body = String::new();
                req.as_reader().read_to_string(&mut body).unwrap();
                let parsed: Value = serde_json::from_str(&body).unwrap();
                let texts = parsed["texts"].as_array().unwrap();
                if texts.iter().any(|t| t.as_str().unwrap().contains("stall")) {
                    thread::sleep(Duration::from_millis(1500));
                }
                let vectors: Vec<Value> =
                    texts.iter().map(|t| json!([1.0, t.as_str().unwrap().len() as f32, 0.5, 0.25])).collect();
                let _ = req.respond(tiny_http::Response::from_string(json!({ "vectors": vectors }).to_string()));
            });
        }
    });
    url
}

#[test]
fn deadline_and_degraded_prediction() {
    let failing_tagger = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let slm_url = format!("http://{}", failing_tagger.server_addr().to_ip().unwrap());
    thread::spawn(move || {
        for req in failing_tagger.incoming_requests() {
            let _ = req.respond(tiny_http::Response::from_string("down").with_status_code(500));
        }
    });
    let providers =
        Providers { embedder: EmbedderSpec::external(slow_embedder(), 4), slm_url: Some(slm_url), generator_url: None };
    let config = ApiConfig {
        deadline: Duration::from_millis(400),
        engine: EngineConfig { dim: 4, ..EngineConfig::default() },
        ..ApiConfig::default()
    };
    let server = TestServer::start(config, providers);
    let http = client();
    post_json(&http, &server.url("/v1/agents"), &cards_json(1));
    let (status, body) = post_raw(&http, &server.url("/v1/index/build"), b"");
    assert_eq!(status, 200, "{body}");

    let (status, body) = post_json(&http, &server.url("/v1/discover"), &json!({ "query": "close the books" }));
    assert_eq!(status, 200, "{body}");
    assert_eq!(body["degraded"], true);
    assert!(body["predicted_tags"].as_array().unwrap().is_empty());

    let (status, body) = post_json(&http, &server.url("/v1/discover"), &json!({ "query": "stall forever" }));
    assert_eq!(status, 504, "{body}");
    let (status, _) = get_json(&http, &server.url("/v1/health"));
    assert_eq!(status, 200);
}
