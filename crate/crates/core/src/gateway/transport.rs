//! HTTP transport abstraction. The gateway talks through this trait so
//! tests can substitute scripted or panicking transports and assert, for
//! example, that replay mode never touches the network.

use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("network error: {0}")]
    Network(String),
}

#[derive(Debug, Clone)]
pub struct TransportResponse {
    pub status: u16,
    pub body: String,
}

pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        endpoint: &str,
        api_key: Option<&str>,
        body: &serde_json::Value,
        timeout: Duration,
    ) -> Result<TransportResponse, TransportError>;
}

/// Real HTTP transport over a blocking client.
pub struct HttpTransport;

impl Transport for HttpTransport {
    fn post_json(
        &self,
        endpoint: &str,
        api_key: Option<&str>,
        body: &serde_json::Value,
        timeout: Duration,
    ) -> Result<TransportResponse, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        let mut request = client.post(endpoint).json(body);
        if let Some(key) = api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout
            } else {
                TransportError::Network(e.to_string())
            }
        })?;
        let status = response.status().as_u16();
        let body = response.text().map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(TransportResponse { status, body })
    }
}
