//! HTTP embedding client against a throwaway in-process server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use rrs_core::embedkit::{cosine, EmbedError, EmbeddingProvider, HttpConfig, HttpProvider};
use rrs_core::{FunctionPair, LanguageHint};
use serde_json::{json, Value};

type Handler = dyn Fn(&Value, usize) -> (u16, String) + Send + Sync;

struct Server {
    url: String,
    hits: Arc<AtomicUsize>,
    peak: Arc<AtomicUsize>,
}

fn read_request(stream: &mut TcpStream) -> Value {
    let mut reader = BufReader::new(stream);
    let mut len = 0;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).unwrap();
    serde_json::from_slice(&body).unwrap()
}

fn serve(delay: Duration, handler: Arc<Handler>) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let peak = Arc::new(AtomicUsize::new(0));
    let live = Arc::new(AtomicUsize::new(0));
    let (h, p) = (hits.clone(), peak.clone());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let (h, p, live, handler) = (h.clone(), p.clone(), live.clone(), handler.clone());
            thread::spawn(move || {
                let req = read_request(&mut stream);
                let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                p.fetch_max(now, Ordering::SeqCst);
                let n = h.fetch_add(1, Ordering::SeqCst);
                thread::sleep(delay);
                let (status, body) = handler(&req, n);
                live.fetch_sub(1, Ordering::SeqCst);
                let resp = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(resp.as_bytes());
            });
        }
    });
    Server { url, hits, peak }
}

fn pair() -> FunctionPair {
    FunctionPair {
        pair_id: "p1".into(),
        vuln_source: "int f(int n){return n;}".into(),
        benign_source: "int f(int n){return n;}".into(),
        cve_id: None,
        project: None,
        language_hint: LanguageHint::C,
    }
}

/// Embeds each text as its byte histogram over `dim` buckets.
fn fake_vectors(req: &Value, dims: [usize; 2]) -> String {
    let texts = req["texts"].as_array().unwrap();
    let vectors: Vec<Vec<f64>> = texts
        .iter()
        .zip(dims)
        .map(|(t, d)| {
            let mut v = vec![0.0; d];
            for b in t.as_str().unwrap().bytes() {
                v[b as usize % d] += 1.0;
            }
            v
        })
        .collect();
    json!({"model_id": req["model_id"], "dim": dims[0], "vectors": vectors}).to_string()
}

fn provider(url: &str) -> HttpProvider {
    let mut cfg = HttpConfig::new(url, vec!["m".into()]);
    cfg.backoff = Duration::from_millis(5);
    HttpProvider::new(cfg).unwrap()
}

#[test]
fn returns_vectors_and_self_cosine_is_one() {
    let s = serve(Duration::ZERO, Arc::new(|req: &Value, _| (200, fake_vectors(req, [16, 16]))));
    let p = provider(&s.url);
    let (x, y) = p.get_pair_embeddings(&pair(), "m").unwrap();
    assert_eq!(x.dim(), 16);
    assert!((cosine(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(p.get_pair_embeddings(&pair(), "m").unwrap(), (x, y));
}

#[test]
fn side_dimension_mismatch() {
    let s = serve(Duration::ZERO, Arc::new(|req: &Value, _| (200, fake_vectors(req, [768, 512]))));
    let err = provider(&s.url).get_pair_embeddings(&pair(), "m").unwrap_err();
    assert!(matches!(err, EmbedError::DimensionMismatch { left: 768, right: 512 }), "{err}");
}

#[test]
fn retries_server_errors_then_succeeds() {
    let s = serve(
        Duration::ZERO,
        Arc::new(|req: &Value, n| if n < 2 { (503, "busy".into()) } else { (200, fake_vectors(req, [4, 4])) }),
    );
    provider(&s.url).get_pair_embeddings(&pair(), "m").unwrap();
    assert_eq!(s.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn gives_up_after_two_retries() {
    let s = serve(Duration::ZERO, Arc::new(|_: &Value, _| (500, "down".into())));
    let err = provider(&s.url).get_pair_embeddings(&pair(), "m").unwrap_err();
    assert!(matches!(err, EmbedError::Status { status: 500, .. }), "{err}");
    assert_eq!(s.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let s = serve(Duration::ZERO, Arc::new(|_: &Value, _| (404, "no such model".into())));
    let err = provider(&s.url).get_pair_embeddings(&pair(), "m").unwrap_err();
    assert!(matches!(err, EmbedError::Status { status: 404, .. }));
    assert_eq!(s.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn unreachable_service() {
    // bind then drop to get a port nobody listens on
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = provider(&format!("http://127.0.0.1:{port}")).get_pair_embeddings(&pair(), "m").unwrap_err();
    assert!(matches!(err, EmbedError::Service(_)), "{err}");
}

#[test]
fn unknown_model_never_hits_network() {
    let s = serve(Duration::ZERO, Arc::new(|req: &Value, _| (200, fake_vectors(req, [4, 4]))));
    assert!(matches!(provider(&s.url).get_pair_embeddings(&pair(), "zzz"), Err(EmbedError::UnknownModel(_))));
    assert_eq!(s.hits.load(Ordering::SeqCst), 0);
}

#[test]
fn in_flight_requests_are_bounded() {
    let s = serve(Duration::from_millis(40), Arc::new(|req: &Value, _| (200, fake_vectors(req, [4, 4]))));
    let p = Arc::new(provider(&s.url));
    let workers: Vec<_> = (0..12)
        .map(|_| {
            let p = p.clone();
            thread::spawn(move || p.get_pair_embeddings(&pair(), "m").unwrap())
        })
        .collect();
    for w in workers {
        w.join().unwrap();
    }
    assert_eq!(s.hits.load(Ordering::SeqCst), 12);
    let peak = s.peak.load(Ordering::SeqCst);
    assert!((2..=4).contains(&peak), "peak {peak}");
}
