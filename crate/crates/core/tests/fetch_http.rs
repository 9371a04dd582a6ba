#![cfg(feature = "fetch")]

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use chrono::NaiveDate;
use newsflow::ingest::fetch::{ArticleClient, FetchConfig, HttpTransport};

fn page_body(n: usize) -> String {
    let docs: Vec<String> = (0..n)
        .map(|i| {
            format!(
                r#"{{"pub_date":"2015-07-0{}T10:00:00+0000","headline":{{"main":"Headline {i}"}},"abstract":"Stocks gain {i}","snippet":"Stocks gain {i}"}}"#,
                i + 1
            )
        })
        .collect();
    format!(
        r#"{{"status":"OK","response":{{"docs":[{}]}}}}"#,
        docs.join(",")
    )
}

/// Serves canned responses in order, one connection each, and records the
/// request lines.
fn serve(
    responses: Vec<(u16, String)>,
) -> (String, Arc<Mutex<Vec<String>>>, thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    let handle = thread::spawn(move || {
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
            }
            log.lock().unwrap().push(request_line.trim().to_string());
            let reason = if status == 200 {
                "OK"
            } else {
                "Too Many Requests"
            };
            write!(
                stream,
                "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (format!("http://{addr}/search"), seen, handle)
}

fn config(endpoint: String) -> FetchConfig {
    FetchConfig {
        backoff: Duration::from_millis(10),
        min_interval: Duration::from_millis(0),
        ..FetchConfig::new(endpoint, "test-key")
    }
}

#[test]
fn fetches_single_short_page_after_rate_limit() {
    let (endpoint, seen, handle) = serve(vec![(429, "{}".to_string()), (200, page_body(5))]);
    let client = ArticleClient::new(
        HttpTransport::new(Duration::from_secs(5)).unwrap(),
        config(endpoint),
    );
    let begin = NaiveDate::from_ymd_opt(2015, 7, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(2015, 7, 31).unwrap();
    let out = client.fetch_articles("greece", begin, end).unwrap();
    handle.join().unwrap();

    assert_eq!(out.documents.len(), 5);
    assert_eq!(out.pages, 1);
    assert_eq!(out.retries, 1);
    assert_eq!(out.documents[0].date, begin);
    assert_eq!(out.documents[0].keyword, "greece");
    assert_eq!(out.documents[0].body, "Headline 0\nStocks gain 0");

    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 2);
    assert!(seen[1].contains("q=greece"));
    assert!(seen[1].contains("begin_date=20150701"));
    assert!(seen[1].contains("page=0"));
    assert!(seen[1].contains("api-key=test-key"));
}

#[test]
fn cache_avoids_second_request() {
    let dir = tempfile::tempdir().unwrap();
    let (endpoint, _, handle) = serve(vec![(200, page_body(3))]);
    let cfg = FetchConfig {
        cache_dir: Some(dir.path().to_path_buf()),
        ..config(endpoint)
    };
    let client = ArticleClient::new(HttpTransport::new(Duration::from_secs(5)).unwrap(), cfg);
    let begin = NaiveDate::from_ymd_opt(2015, 7, 1).unwrap();
    let first = client.fetch_articles("spain", begin, begin).unwrap();
    handle.join().unwrap();
    // The server is gone; only the cache can answer.
    let second = client.fetch_articles("spain", begin, begin).unwrap();
    assert_eq!(first.documents, second.documents);
    assert_eq!(second.cache_hits, 1);
}
