//! Wire-contract tests for the HTTP clients against a local stub server.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use discovery_core::context::{Expander, HttpGenerator, QueryGenerator};
use discovery_core::embed::{Embedder, HttpEmbedder};
use discovery_core::tagger::{HttpTagger, TagPredictor};
use discovery_core::{AgentCard, Error, SynonymDict};
use serde_json::{json, Value};
use tiny_http::{Response, Server};

struct Stub {
    url: String,
    hits: Arc<AtomicUsize>,
}

/// Serves `handler(path, body)` on an ephemeral port. A `None` reply is
/// answered with status 500.
fn serve<F>(handler: F) -> Stub
where
    F: Fn(&str, Value) -> Option<Value> + Send + Sync + 'static,
{
    let server = Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}", server.server_addr().to_ip().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    let handler = Arc::new(handler);
    thread::spawn(move || {
        for mut req in server.incoming_requests() {
            counter.fetch_add(1, Ordering::SeqCst);
            let handler = handler.clone();
            thread::spawn(move || {
                let mut body = String::new();
                req.as_reader().read_to_string(&mut body).unwrap();
                let parsed: Value = serde_json::from_str(&body).unwrap_or(Value::Null);
                let path = req.url().to_string();
                let resp = match handler(&path, parsed) {
                    Some(v) => Response::from_string(v.to_string())
                        .with_header("Content-Type: application/json".parse::<tiny_http::Header>().unwrap()),
                    None => Response::from_string("boom").with_status_code(500),
                };
                let _ = req.respond(resp);
            });
        }
    });
    Stub { url, hits }
}

#[test]
fn embedder_posts_texts_and_normalizes() {
    let stub = serve(|path, body| {
        assert_eq!(path, "/embed");
        let texts = body["texts"].as_array().unwrap();
        let vectors: Vec<Value> =
            texts.iter().map(|t| json!([t.as_str().unwrap().len() as f32, 0.0, 0.0, 0.0])).collect();
        Some(json!({ "vectors": vectors }))
    });
    let e = HttpEmbedder::new(&stub.url, 4, 2, 4).unwrap();
    let v = e.embed("abc").unwrap();
    assert_eq!(v.as_slice(), &[1.0, 0.0, 0.0, 0.0]);

    let texts: Vec<String> = ["a", "bb", "ccc", "dddd", "eeeee"].iter().map(|s| s.to_string()).collect();
    let vs = e.embed_batch(&texts).unwrap();
    assert_eq!(vs.len(), 5);
    assert!(vs.iter().all(|v| (v.norm() - 1.0).abs() < 1e-6));
    // One call for "abc", then three chunks of at most two texts.
    assert_eq!(stub.hits.load(Ordering::SeqCst), 4);

    assert!(matches!(e.embed_batch(&["x".into(), " ".into()]), Err(Error::EmptyText(1))));
}

#[test]
fn embedder_rejects_wrong_shapes() {
    let stub = serve(|_, _| Some(json!({ "vectors": [[1.0, 0.0]] })));
    let e = HttpEmbedder::new(&stub.url, 4, 8, 1).unwrap();
    assert!(e.embed("text").is_err());
    assert!(matches!(e.embed_batch(&["a".into(), "b".into()]), Err(Error::Provider { .. })));
}

#[test]
fn embedder_retries_three_times_on_server_errors() {
    let stub = serve(|_, _| None);
    let e = HttpEmbedder::new(&stub.url, 4, 8, 1).unwrap();
    match e.embed("text") {
        Err(Error::Provider { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("expected provider error, got {other:?}"),
    }
    assert_eq!(stub.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn tagger_drops_out_of_vocabulary_tags() {
    let stub = serve(|path, body| {
        assert_eq!(path, "/predict_tags");
        assert_eq!(body["max_tags"], 3);
        Some(json!({ "tags": [
            { "tag": "payroll", "score": 0.9 },
            { "tag": "astrology", "score": 0.8 },
            { "tag": "Human Resources", "score": 0.7 },
            { "tag": "crypto", "score": 0.1 }
        ]}))
    });
    let synonyms: SynonymDict = [("human resources", "hr")].into_iter().collect();
    let tagger = HttpTagger::new(&stub.url, ["payroll", "hr"], synonyms, HttpTagger::DEFAULT_DEADLINE, 2);
    let p = tagger.predict_tags("pay my staff", 3).unwrap();
    let names: Vec<&str> = p.tags.iter().map(|t| t.tag.as_str()).collect();
    assert_eq!(names, ["payroll", "hr"]);
    assert_eq!(tagger.dropped_out_of_vocabulary(), 2);
}

#[test]
fn tagger_gives_up_at_the_deadline_without_retrying() {
    let stub = serve(|_, _| {
        thread::sleep(Duration::from_millis(600));
        Some(json!({ "tags": [] }))
    });
    let tagger = HttpTagger::new(&stub.url, ["payroll"], SynonymDict::new(), Duration::from_millis(100), 2);
    let started = std::time::Instant::now();
    assert!(matches!(tagger.predict_tags("anything", 5), Err(Error::Provider { attempts: 1, .. })));
    assert!(started.elapsed() < Duration::from_millis(500));
    assert_eq!(stub.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn generator_contract_and_fallback() {
    let stub = serve(|path, body| {
        assert_eq!(path, "/gen_queries");
        let n = body["n"].as_u64().unwrap() as usize;
        assert_eq!(body["tags"][0], "payroll");
        assert!(body["description"].as_str().unwrap().starts_with("Runs payroll"));
        Some(json!({ "queries": (0..n + 2).map(|i| format!("synthetic {i}")).collect::<Vec<_>>() }))
    });
    let agent = AgentCard::new("p", "P", "Runs payroll", ["payroll"], ["pay everyone"]).unwrap();
    let generator = Arc::new(HttpGenerator::new(&stub.url));
    assert_eq!(generator.generate(&agent, 2).unwrap().len(), 4);

    let doc = Expander::new(generator, 3).expand(&agent).unwrap();
    assert_eq!(doc.synthetic_queries, ["synthetic 0", "synthetic 1", "synthetic 2"]);
    assert!(doc.text.starts_with("Runs payroll"));

    let down = serve(|_, _| None);
    let expander = Expander::new(Arc::new(HttpGenerator::new(&down.url)), 3);
    let doc = expander.expand(&agent).unwrap();
    assert_eq!(doc.text, "Runs payroll");
    assert_eq!(expander.warnings(), 1);
}
