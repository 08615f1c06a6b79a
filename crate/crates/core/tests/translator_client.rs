//! Translator client tests: command backend, cache behavior, batch shape,
//! and a fixture HTTP server.

use std::io::{Read, Write};
use std::net::TcpListener;

use syntaxprobe::translator::{
    batch_translate, Backend, Cache, CommandBackend, HttpBackend, TranslatorClient,
    TranslatorConfig,
};
use syntaxprobe::{Category, Corpus, Language, Signature, SutCase, Value, ValueType};

fn copy_config(model_id: &str) -> TranslatorConfig {
    TranslatorConfig {
        model_id: model_id.into(),
        backend: Backend::Command(CommandBackend {
            argv: vec!["cp".into(), "{src_file}".into(), "{out_file}".into()],
        }),
    }
}

fn small_case(id: &str, language: Language, source: &str) -> SutCase {
    SutCase {
        id: id.into(),
        language,
        element_name: "x".into(),
        element_category: Category::Operator,
        entry: "foo".into(),
        signature: Signature::new(vec![ValueType::Int], ValueType::Int),
        source: source.into(),
        inputs: vec![vec![Value::Int(1)]],
        expected: vec![Value::Int(1)],
    }
}

#[test]
fn identity_command_backend_echoes_source() {
    let client = TranslatorClient::new(copy_config("copy"), None);
    let out = client
        .translate("int foo(int a) { return a; }", Language::Cpp, Language::Python)
        .unwrap();
    assert_eq!(out, "int foo(int a) { return a; }");
}

#[test]
fn second_identical_call_served_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::at(dir.path().to_path_buf()).unwrap();
    let client = TranslatorClient::new(copy_config("copy"), Some(cache));
    let a = client.translate("int foo();", Language::Cpp, Language::Python).unwrap();
    assert_eq!(client.backend_calls(), 1);
    let b = client.translate("int foo();", Language::Cpp, Language::Python).unwrap();
    assert_eq!(client.backend_calls(), 1, "cache hit must not invoke backend");
    assert_eq!(a, b);
}

#[test]
fn batch_translate_cardinality_and_failures() {
    let cases = vec![
        small_case("cpp/a/one", Language::Cpp, "int foo(int a) { return a; }"),
        small_case("cpp/a/two", Language::Cpp, "int foo(int a) { return a + 0; }"),
    ];
    let corpus = Corpus::from_cases(cases).unwrap();
    let pairs = [
        (Language::Cpp, Language::Python),
        (Language::Cpp, Language::Java),
    ];
    let client = TranslatorClient::new(copy_config("copy"), None);
    let records = batch_translate(&corpus, &pairs, &client, 1, 2);
    assert_eq!(records.len(), 4, "2 cases x 2 pairs x 1 attempt");
    assert!(records.iter().all(|r| !r.translated_source.is_empty()));

    // A failing backend yields empty-source records, not a panic or abort.
    let bad = TranslatorConfig {
        model_id: "broken".into(),
        backend: Backend::Command(CommandBackend {
            argv: vec!["false".into()],
        }),
    };
    let client = TranslatorClient::new(bad, None);
    let records = batch_translate(&corpus, &pairs[..1], &client, 1, 1);
    assert_eq!(records.len(), 2);
    assert!(records.iter().all(|r| r.translated_source.is_empty()));
}

/// Minimal single-use HTTP server answering every POST with a fixed body.
fn spawn_stub_server(replies: Vec<String>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = std::thread::spawn(move || {
        let mut seen_bodies = Vec::new();
        for reply in replies {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            // read until end of headers, then content-length body
            let body_start;
            let content_length;
            loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                if let Some(pos) = find_header_end(&buf) {
                    let headers = String::from_utf8_lossy(&buf[..pos]).to_string();
                    content_length = headers
                        .lines()
                        .find_map(|l| {
                            let (k, v) = l.split_once(':')?;
                            k.eq_ignore_ascii_case("content-length")
                                .then(|| v.trim().parse::<usize>().ok())?
                        })
                        .unwrap_or(0);
                    body_start = pos + 4;
                    break;
                }
            }
            while buf.len() < body_start + content_length {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
            }
            seen_bodies.push(String::from_utf8_lossy(&buf[body_start..]).to_string());
            let response = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                reply.len(),
                reply
            );
            stream.write_all(response.as_bytes()).unwrap();
        }
        seen_bodies
    });
    (format!("http://{addr}/translate"), handle)
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}

#[test]
fn http_backend_strips_fences_and_posts_prompt() {
    let reply = serde_json::json!({
        "text": "```python\ndef foo(a,b):\n return a//b\n```"
    })
    .to_string();
    let (endpoint, server) = spawn_stub_server(vec![reply]);

    let config = TranslatorConfig {
        model_id: "stub-model".into(),
        backend: Backend::Http(HttpBackend {
            endpoint,
            prompt_template: "Translate this {src_lang} function to {tgt_lang}:\n{code}".into(),
            auth_env: None,
            timeout_s: 10,
            max_retries: 0,
            requests_per_minute: None,
            response_field: "text".into(),
        }),
    };
    let client = TranslatorClient::new(config, None);
    let out = client
        .translate("int foo(int a, int b) { return a / b; }", Language::Cpp, Language::Python)
        .unwrap();
    assert_eq!(out, "def foo(a,b):\n return a//b");

    let bodies = server.join().unwrap();
    let body: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(body["model"], "stub-model");
    let prompt = body["prompt"].as_str().unwrap();
    assert!(prompt.contains("cpp"));
    assert!(prompt.contains("python"));
    assert!(prompt.contains("int foo(int a, int b)"));
}

#[test]
fn http_error_status_is_reported() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = std::thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut chunk = [0u8; 4096];
        let _ = stream.read(&mut chunk);
        let _ = stream.write_all(b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
    });
    let config = TranslatorConfig {
        model_id: "stub".into(),
        backend: Backend::Http(HttpBackend {
            endpoint: format!("http://{addr}/x"),
            prompt_template: "{code}".into(),
            auth_env: None,
            timeout_s: 5,
            max_retries: 0,
            requests_per_minute: None,
            response_field: "text".into(),
        }),
    };
    let client = TranslatorClient::new(config, None);
    let err = client.translate("x", Language::Cpp, Language::Python).unwrap_err();
    assert!(matches!(err, syntaxprobe::translator::TranslatorError::HttpError(404)));
    server.join().unwrap();
}

#[test]
fn warm_cache_batch_makes_zero_backend_calls() {
    let dir = tempfile::tempdir().unwrap();
    let cases = vec![small_case("cpp/a/one", Language::Cpp, "int foo(int a) { return a; }")];
    let corpus = Corpus::from_cases(cases).unwrap();
    let pairs = [(Language::Cpp, Language::Python)];

    let cache = Cache::at(dir.path().to_path_buf()).unwrap();
    let client = TranslatorClient::new(copy_config("copy"), Some(cache));
    let first = batch_translate(&corpus, &pairs, &client, 1, 2);
    assert_eq!(client.backend_calls(), 1);

    let cache = Cache::at(dir.path().to_path_buf()).unwrap();
    let client = TranslatorClient::new(copy_config("copy"), Some(cache));
    let second = batch_translate(&corpus, &pairs, &client, 1, 2);
    assert_eq!(client.backend_calls(), 0, "warm cache must satisfy the batch");
    assert_eq!(first, second);
}
