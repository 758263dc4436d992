//! Runs a small inference campaign against a local stand-in for a chat
//! completion server, then resumes it.

use std::thread;
use std::time::Duration;

use screeneval::client::{run_campaign, CampaignConfig, CampaignOptions, RetryPolicy};
use screeneval::domain::SubjectRecord;
use screeneval::ingest::Dataset;
use serde_json::{json, Value};

fn serve(server: tiny_http::Server) {
    for mut request in server.incoming_requests() {
        let mut body = String::new();
        if request.as_reader().read_to_string(&mut body).is_err() {
            continue;
        }
        let req: Value = serde_json::from_str(&body).unwrap_or_default();
        let prompt = req["messages"][0]["content"].as_str().unwrap_or_default();
        let score = prompt.len() % 22;
        let content = format!(
            "Assessment follows.\n```json\n{}\n```",
            json!({
                "anxiety_score": score,
                "depression_score": 21 - score,
                "anxiety_keywords": ["worried"],
                "depression_keywords": ["tired"],
            })
        );
        let reply = json!({"choices": [{"message": {"role": "assistant", "content": content}}]});
        thread::sleep(Duration::from_millis(20));
        let _ = request.respond(tiny_http::Response::from_string(reply.to_string()));
    }
}

fn main() {
    let server = tiny_http::Server::http("127.0.0.1:0").expect("bind");
    let port = server.server_addr().to_ip().expect("tcp").port();
    thread::spawn(move || serve(server));

    let dataset = Dataset::from_records((1..=3).map(|i| SubjectRecord {
        subject_id: format!("p{i}"),
        hads_a: 5,
        hads_d: 7,
        transcripts: [
            ("GT".to_string(), format!("participant {i}: I get worried and I am tired all day")),
            ("W-Small".to_string(), format!("participant {i} I get worry and I am tired all day")),
        ]
        .into(),
    }));

    let mut cfg = CampaignConfig::new(
        format!("http://127.0.0.1:{port}/v1/chat/completions"),
        vec!["model-a".into(), "model-b".into()],
    );
    cfg.max_in_flight = 4;
    cfg.retry = RetryPolicy {
        max_attempts: 3,
        backoff_ms: vec![50, 200],
    };

    let dir = std::env::temp_dir().join(format!("screeneval-mock-campaign-{}", std::process::id()));
    let first = run_campaign(&cfg, &dataset, &dir, CampaignOptions { max_new_cells: Some(10) }).expect("campaign");
    println!("first pass (capped at 10 cells): {first:?}");
    let rest = run_campaign(&cfg, &dataset, &dir, CampaignOptions::default()).expect("campaign");
    println!("resumed: {rest:?}");
    println!("outputs in {}", dir.display());
}
