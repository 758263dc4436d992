use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use ureq::Agent;

use super::campaign::RetryPolicy;

/// One request attempt, as recorded in the raw store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptLog {
    pub attempt: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub attempts: Vec<AttemptLog>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("request failed after {} attempt(s): {reason}", attempts.len())]
pub struct CellFailed {
    pub reason: String,
    pub status: Option<u16>,
    /// Response body of the last attempt.
    pub body: String,
    pub attempts: Vec<AttemptLog>,
}

/// Blocking client for one chat-completion endpoint.
#[derive(Debug, Clone)]
pub struct ChatClient {
    agent: Agent,
    endpoint: String,
    api_key: Option<String>,
    retry: RetryPolicy,
}

impl ChatClient {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, retry: RetryPolicy, timeout: Duration) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        ChatClient {
            agent,
            endpoint: endpoint.into(),
            api_key,
            retry,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn send_once(&self, body: &str) -> Result<(u16, String), String> {
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok((status, text))
    }
}

fn retryable(status: u16) -> bool {
    status == 429 || status >= 500
}

/// Sends a single-user-message chat request and returns the completion text
/// at `choices[0].message.content`. Transport errors, 429 and 5xx responses
/// are retried per the client's policy; other failures are returned at once.
pub fn chat_complete(client: &ChatClient, model: &str, prompt: &str, temperature: f64) -> Result<Completion, CellFailed> {
    let body = json!({
        "model": model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": temperature,
    })
    .to_string();

    let mut attempts = Vec::new();
    let max = client.retry.max_attempts.max(1);
    for attempt in 1..=max {
        let outcome = client.send_once(&body);
        let (again, reason, status, text) = match outcome {
            Err(e) => {
                attempts.push(AttemptLog {
                    attempt,
                    status: None,
                    error: Some(e.clone()),
                    body: String::new(),
                });
                (true, e, None, String::new())
            }
            Ok((status, text)) => {
                attempts.push(AttemptLog {
                    attempt,
                    status: Some(status),
                    error: None,
                    body: text.clone(),
                });
                if (200..300).contains(&status) {
                    return match completion_text(&text) {
                        Some(t) => Ok(Completion { text: t, attempts }),
                        None => Err(CellFailed {
                            reason: "response has no choices[0].message.content".into(),
                            status: Some(status),
                            body: text,
                            attempts,
                        }),
                    };
                }
                (retryable(status), format!("HTTP {status}"), Some(status), text)
            }
        };
        if !again || attempt == max {
            return Err(CellFailed {
                reason,
                status,
                body: text,
                attempts,
            });
        }
        log::debug!("{model}: attempt {attempt} failed ({reason}), retrying");
        thread::sleep(client.retry.delay(attempt));
    }
    unreachable!("loop returns on the last attempt")
}

fn completion_text(body: &str) -> Option<String> {
    let v: Value = serde_json::from_str(body).ok()?;
    v.pointer("/choices/0/message/content")?.as_str().map(str::to_string)
}
