use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

use aec::config::BackendConfig;
use aec::http::HttpBackend;
use aec_core::agents::{prompts, BackendError, ChatBackend};

/// Serve one canned response per connection, recording each request.
fn serve(responses: Vec<(u16, &'static str)>) -> (String, thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let mut requests = Vec::new();
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut head = String::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                head.push_str(&line);
                if line == "\r\n" || line.is_empty() {
                    break;
                }
            }
            let mut payload = vec![0; length];
            reader.read_exact(&mut payload).unwrap();
            requests.push(head + &String::from_utf8(payload).unwrap());
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        requests
    });
    (url, handle)
}

const OK_BODY: &str = r#"{"choices": [{"message": {"role": "assistant", "content": "yes"}}]}"#;

fn config(url: String, retries: u32) -> BackendConfig {
    BackendConfig {
        endpoint: Some(url),
        model: Some("test-model".into()),
        api_key_env: Some("AEC_TEST_KEY".into()),
        retries,
        retry_backoff_ms: 0,
        ..BackendConfig::default()
    }
}

#[test]
fn retries_after_rate_limit() {
    let (url, server) = serve(vec![(429, "{}"), (200, OK_BODY)]);
    let backend = HttpBackend::with_env(&config(url, 1), |_| Some("secret".into())).unwrap();
    let prompt = prompts::semantic_judge("strike", "Protest", "Workers went on strike.");
    assert_eq!(backend.complete(&prompt).unwrap(), "yes");
    let requests = server.join().unwrap();
    assert_eq!(requests.len(), 2);
    let lower = requests[1].to_ascii_lowercase();
    assert!(lower.contains("authorization: bearer secret"), "{}", requests[1]);
    let body: serde_json::Value = serde_json::from_str(requests[1].split("\r\n\r\n").nth(1).unwrap()).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 512);
    assert_eq!(body["messages"][1]["role"], "user");
}

#[test]
fn gives_up_when_retries_run_out() {
    let (url, server) = serve(vec![(503, "busy"), (503, "busy")]);
    let backend = HttpBackend::with_env(&config(url, 1), |_| Some("k".into())).unwrap();
    let err = backend.complete(&prompts::semantic_judge("a", "B", "a")).unwrap_err();
    assert_eq!(
        err,
        BackendError::Status {
            status: 503,
            body: "busy".into()
        }
    );
    assert_eq!(server.join().unwrap().len(), 2);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, server) = serve(vec![(400, "bad request")]);
    let backend = HttpBackend::with_env(&config(url, 3), |_| Some("k".into())).unwrap();
    assert!(matches!(
        backend.complete(&prompts::semantic_judge("a", "B", "a")),
        Err(BackendError::Status { status: 400, .. })
    ));
    assert_eq!(server.join().unwrap().len(), 1);
}

#[test]
fn missing_content_is_an_error() {
    let (url, server) = serve(vec![(200, r#"{"choices": []}"#)]);
    let backend = HttpBackend::with_env(&config(url, 0), |_| Some("k".into())).unwrap();
    assert_eq!(
        backend.complete(&prompts::semantic_judge("a", "B", "a")),
        Err(BackendError::MissingContent)
    );
    server.join().unwrap();
}
