#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use screeneval::domain::SubjectRecord;
use screeneval::ingest::Dataset;
use serde_json::{json, Value};
use tiny_http::{Header, Response, Server};

/// How the mock endpoint treats one model id.
#[derive(Debug, Clone, Copy)]
pub enum Behavior {
    Ok,
    /// 503 for the first `n` requests carrying a given prompt, then OK.
    FailFirst(usize),
    NotFound,
}

#[derive(Default)]
pub struct Counters {
    pub requests: AtomicUsize,
    pub in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
    per_prompt: Mutex<HashMap<String, usize>>,
}

pub struct MockEndpoint {
    pub url: String,
    pub counters: Arc<Counters>,
    server: Arc<Server>,
    workers: Vec<JoinHandle<()>>,
}

impl MockEndpoint {
    pub fn start(behaviors: BTreeMap<String, Behavior>, latency: Duration) -> Self {
        let server = Arc::new(Server::http("127.0.0.1:0").expect("bind mock"));
        let port = server.server_addr().to_ip().unwrap().port();
        let counters = Arc::new(Counters::default());
        let behaviors = Arc::new(behaviors);
        let workers = (0..16)
            .map(|_| {
                let (server, counters, behaviors) = (server.clone(), counters.clone(), behaviors.clone());
                thread::spawn(move || {
                    while let Ok(mut req) = server.recv() {
                        let now = counters.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                        counters.max_in_flight.fetch_max(now, Ordering::SeqCst);
                        counters.requests.fetch_add(1, Ordering::SeqCst);
                        let mut body = String::new();
                        req.as_reader().read_to_string(&mut body).unwrap();
                        thread::sleep(latency);
                        let (status, text) = respond(&body, &behaviors, &counters);
                        counters.in_flight.fetch_sub(1, Ordering::SeqCst);
                        let header = Header::from_bytes("Content-Type", "application/json").unwrap();
                        let _ = req.respond(Response::from_string(text).with_status_code(status).with_header(header));
                    }
                })
            })
            .collect();
        MockEndpoint {
            url: format!("http://127.0.0.1:{port}/v1/chat/completions"),
            counters,
            server,
            workers,
        }
    }

    pub fn requests(&self) -> usize {
        self.counters.requests.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> usize {
        self.counters.max_in_flight.load(Ordering::SeqCst)
    }
}

impl Drop for MockEndpoint {
    fn drop(&mut self) {
        self.server.unblock();
        for _ in 1..self.workers.len() {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn respond(body: &str, behaviors: &BTreeMap<String, Behavior>, counters: &Counters) -> (u16, String) {
    let req: Value = serde_json::from_str(body).expect("request is JSON");
    let model = req["model"].as_str().unwrap_or_default().to_string();
    let prompt = req["messages"][0]["content"].as_str().unwrap_or_default().to_string();
    match behaviors.get(&model).copied().unwrap_or(Behavior::Ok) {
        Behavior::NotFound => (404, json!({"error": {"message": format!("model {model} not found")}}).to_string()),
        Behavior::FailFirst(n) => {
            let mut seen = counters.per_prompt.lock().unwrap();
            let c = seen.entry(format!("{model}\u{0}{prompt}")).or_insert(0);
            *c += 1;
            if *c <= n {
                (503, "upstream overloaded".into())
            } else {
                (200, completion(&prompt))
            }
        }
        Behavior::Ok => (200, completion(&prompt)),
    }
}

/// Deterministic completion derived from the prompt text.
fn completion(prompt: &str) -> String {
    let h = prompt.bytes().fold(7u64, |h, b| h.wrapping_mul(31).wrapping_add(u64::from(b)));
    let content = format!(
        "Here is my assessment.\n```json\n{}\n```",
        json!({
            "anxiety_score": h % 22,
            "depression_score": (h / 22) % 22,
            "anxiety_keywords": ["worried"],
            "depression_keywords": ["tired"],
        })
    );
    json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}).to_string()
}

pub fn toy_dataset(n: usize) -> Dataset {
    Dataset::from_records((0..n).map(|i| SubjectRecord {
        subject_id: format!("s{i:02}"),
        hads_a: (i % 22) as u8,
        hads_d: ((i * 5) % 22) as u8,
        transcripts: BTreeMap::from([
            ("GT".to_string(), format!("subject {i} says they feel worried and tired most days")),
            ("W-Small".to_string(), format!("subject {i} says they feel worried tired most days")),
        ]),
    }))
}
