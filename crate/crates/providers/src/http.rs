//! Blocking JSON POST with bounded exponential backoff.

use std::time::Duration;

use serde_json::Value;

use crate::config::ProviderConfig;
use crate::error::ProviderError;

/// Longest single backoff delay.
const MAX_BACKOFF_MS: u64 = 5_000;

pub struct JsonClient {
    client: reqwest::blocking::Client,
    retries: u32,
    backoff_ms: u64,
}

impl JsonClient {
    pub fn new(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?;
        Ok(JsonClient {
            client,
            retries: cfg.retries,
            backoff_ms: cfg.backoff_ms,
        })
    }

    /// Posts `body` and parses the JSON reply. Transport failures and 5xx
    /// responses are retried `retries` times; 4xx responses are not.
    pub fn post(&self, url: &str, body: &Value) -> Result<Value, ProviderError> {
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                let delay = self.backoff_ms.saturating_mul(1 << (attempt - 1).min(16)).min(MAX_BACKOFF_MS);
                std::thread::sleep(Duration::from_millis(delay));
            }
            match self.client.post(url).json(body).send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp
                            .json::<Value>()
                            .map_err(|e| ProviderError::InvalidProviderOutput(format!("response is not JSON: {e}")));
                    }
                    last = format!("{url} answered {status}");
                    if status.is_client_error() {
                        break;
                    }
                }
                Err(e) => last = format!("{url}: {e}"),
            }
            log::warn!("provider call failed (attempt {}): {last}", attempt + 1);
        }
        Err(ProviderError::ProviderUnavailable(last))
    }
}
