//! A scripted chat-completion endpoint on a local port.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};

pub type Script = dyn Fn(&str, usize) -> (u16, String) + Send + Sync;

#[derive(Debug, Clone)]
pub struct Request {
    pub caption: String,
    pub body: serde_json::Value,
    pub authorization: Option<String>,
}

pub struct StubServer {
    pub url: String,
    pub requests: Arc<Mutex<Vec<Request>>>,
}

impl StubServer {
    /// `script(caption, attempt)` gives the status and body for the
    /// `attempt`-th request (0-based) carrying `caption`.
    pub fn start(script: impl Fn(&str, usize) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        let script: Arc<Script> = Arc::new(script);
        let attempts = Arc::new(Mutex::new(HashMap::<String, usize>::new()));
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let script = Arc::clone(&script);
                let log = Arc::clone(&log);
                let attempts = Arc::clone(&attempts);
                std::thread::spawn(move || {
                    let mut reader = BufReader::new(stream.try_clone().unwrap());
                    let mut length = 0;
                    let mut authorization = None;
                    loop {
                        let mut line = String::new();
                        if reader.read_line(&mut line).unwrap_or(0) == 0 {
                            return;
                        }
                        let line = line.trim_end();
                        if line.is_empty() {
                            break;
                        }
                        if let Some((k, v)) = line.split_once(':') {
                            match k.to_ascii_lowercase().as_str() {
                                "content-length" => length = v.trim().parse().unwrap(),
                                "authorization" => authorization = Some(v.trim().to_string()),
                                _ => {}
                            }
                        }
                    }
                    let mut body = vec![0; length];
                    reader.read_exact(&mut body).unwrap();
                    let body: serde_json::Value = serde_json::from_slice(&body).unwrap();
                    let caption = body["messages"][1]["content"].as_str().unwrap_or_default().to_string();
                    let attempt = {
                        let mut a = attempts.lock().unwrap();
                        let n = a.entry(caption.clone()).or_insert(0);
                        *n += 1;
                        *n - 1
                    };
                    log.lock().unwrap().push(Request {
                        caption: caption.clone(),
                        body,
                        authorization,
                    });
                    let (status, reply) = script(&caption, attempt);
                    let resp = format!(
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                        reply.len()
                    );
                    let _ = stream.write_all(resp.as_bytes());
                });
            }
        });
        Self { url, requests }
    }

    pub fn attempts_for(&self, caption: &str) -> usize {
        self.requests
            .lock()
            .unwrap()
            .iter()
            .filter(|r| r.caption == caption)
            .count()
    }
}

/// A chat-completion response whose message content is `content`.
pub fn chat(content: &str) -> String {
    serde_json::json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}).to_string()
}
