//! HTTP provider behaviour against a scripted local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use flowbench::gateway::{
    read_records, record_session, CompletionProvider, GatewayError, HttpProvider, ModelConfig,
    PromptJob,
};

struct Stub {
    url: String,
    requests: Arc<Mutex<Vec<(String, String)>>>,
}

/// Serves one scripted `(status, body)` reply per connection, then the last
/// reply forever. Records each request's authorization header and body.
fn serve(replies: Vec<(u16, String)>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let seen = Arc::clone(&requests);
    thread::spawn(move || {
        for (i, stream) in listener.incoming().enumerate() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut auth = String::new();
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                if lower.starts_with("authorization:") {
                    auth = line["authorization:".len()..].trim().to_string();
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            seen.lock()
                .unwrap()
                .push((auth, String::from_utf8(body).unwrap()));
            let (status, text) = replies.get(i).or(replies.last()).unwrap().clone();
            let reply = format!(
                "HTTP/1.1 {status} Stub\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{text}",
                text.len()
            );
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    Stub { url, requests }
}

fn ok_body(content: &str, finish: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}, "finish_reason": finish}]
    })
    .to_string()
}

fn cfg(stub: &Stub) -> ModelConfig {
    ModelConfig {
        base_url: stub.url.clone(),
        backoff_ms: 1,
        timeout_secs: 5,
        max_retries: 2,
        ..ModelConfig::default()
    }
}

#[test]
fn sends_chat_request_and_reads_reply() {
    let stub = serve(vec![(200, ok_body("assert compute(1, 2) == 1", "stop"))]);
    let cfg = cfg(&stub);
    let p = HttpProvider::new(&cfg, "secret").unwrap();
    let c = p.complete("PROMPT", &cfg).unwrap();
    assert_eq!(c.text, "assert compute(1, 2) == 1");
    assert_eq!((c.attempts, c.truncated), (1, false));

    let reqs = stub.requests.lock().unwrap();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].0, "Bearer secret");
    let body: serde_json::Value = serde_json::from_str(&reqs[0].1).unwrap();
    assert_eq!(body["model"], "gpt-4o-mini");
    assert_eq!(body["messages"][0]["content"], "PROMPT");
    assert_eq!(body["temperature"], 0.0);
}

#[test]
fn retries_server_errors_and_rate_limits() {
    let stub = serve(vec![
        (500, "{}".into()),
        (429, "{}".into()),
        (200, ok_body("ok", "stop")),
    ]);
    let cfg = cfg(&stub);
    let c = HttpProvider::new(&cfg, "k")
        .unwrap()
        .complete("P", &cfg)
        .unwrap();
    assert_eq!((c.text.as_str(), c.attempts), ("ok", 3));
    assert_eq!(stub.requests.lock().unwrap().len(), 3);
}

#[test]
fn gives_up_after_max_retries() {
    let stub = serve(vec![(503, "{}".into())]);
    let cfg = cfg(&stub);
    match HttpProvider::new(&cfg, "k").unwrap().complete("P", &cfg) {
        Err(GatewayError::Transport { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("{other:?}"),
    }
    assert_eq!(stub.requests.lock().unwrap().len(), 3);
}

#[test]
fn unauthorized_is_not_retried() {
    let stub = serve(vec![(401, r#"{"error":"bad key"}"#.into())]);
    let cfg = cfg(&stub);
    let err = HttpProvider::new(&cfg, "k")
        .unwrap()
        .complete("P", &cfg)
        .unwrap_err();
    assert!(matches!(err, GatewayError::Credential(_)), "{err}");
    assert_eq!(stub.requests.lock().unwrap().len(), 1);
}

#[test]
fn client_errors_are_rejections() {
    let stub = serve(vec![(400, r#"{"error":"context too long"}"#.into())]);
    let cfg = cfg(&stub);
    match HttpProvider::new(&cfg, "k").unwrap().complete("P", &cfg) {
        Err(GatewayError::Rejected { status, body }) => {
            assert_eq!(status, 400);
            assert!(body.contains("context too long"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn length_finish_marks_truncation() {
    let stub = serve(vec![(200, ok_body("assert compute(1,", "length"))]);
    let cfg = cfg(&stub);
    let c = HttpProvider::new(&cfg, "k")
        .unwrap()
        .complete("P", &cfg)
        .unwrap();
    assert!(c.truncated);
}

#[test]
fn session_records_live_responses() {
    let stub = serve(vec![(200, ok_body("assert compute(0, 0) == 0", "stop"))]);
    let cfg = ModelConfig {
        concurrency: 2,
        ..cfg(&stub)
    };
    let provider = HttpProvider::new(&cfg, "k").unwrap();
    let jobs: Vec<PromptJob> = (0..4)
        .map(|i| PromptJob {
            program_id: format!("p{i}"),
            prompt: format!("prompt {i}"),
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("responses.jsonl");
    let s = record_session(&jobs, &provider, &cfg, &store).unwrap();
    assert_eq!((s.requests, s.failures.len()), (4, 0));
    assert_eq!(read_records(&store).unwrap().len(), 4);
    let again = record_session(&jobs, &provider, &cfg, &store).unwrap();
    assert_eq!((again.requests, again.skipped), (0, 4));
    assert_eq!(stub.requests.lock().unwrap().len(), 4);
}

#[test]
fn session_stops_on_credential_failure() {
    let stub = serve(vec![(401, "{}".into())]);
    let cfg = ModelConfig {
        concurrency: 1,
        ..cfg(&stub)
    };
    let provider = HttpProvider::new(&cfg, "k").unwrap();
    let jobs: Vec<PromptJob> = (0..5)
        .map(|i| PromptJob {
            program_id: format!("p{i}"),
            prompt: format!("prompt {i}"),
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let s = record_session(&jobs, &provider, &cfg, &dir.path().join("r.jsonl")).unwrap();
    assert_eq!(s.requests, 1);
    assert!(matches!(s.failures[0].1, GatewayError::Credential(_)));
}
