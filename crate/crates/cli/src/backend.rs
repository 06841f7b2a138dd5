//! Generation backend selection. Three kinds ship:
//!
//! - `stub`: returns a fixed text — deterministic, no I/O, the default for
//!   tests and dry runs,
//! - `policy`: greedy decodes a trained policy checkpoint in-process,
//! - `http`: posts the prompt to an external generation service. This is
//!   the only network egress in the whole binary.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use refute_core::orchestrate::{
    GenerationBackend, GenerationRequest, GenerationResponse, PolicyBackend, StubBackend,
};

use crate::error::{usage, CliResult};
use crate::io::load_policy;

/// Default canned text when the stub backend is selected without a text.
pub const DEFAULT_STUB_TEXT: &str = "the retrieved evidence does not support this claim";

#[derive(Debug, Clone)]
pub enum BackendChoice {
    Stub { text: String },
    Policy { path: PathBuf },
    Http { url: String },
}

impl BackendChoice {
    /// Resolves the backend kind plus its parameters from flag/file values.
    pub fn resolve(
        kind: Option<&str>,
        stub_text: Option<String>,
        policy_path: Option<PathBuf>,
        url: Option<String>,
    ) -> CliResult<Self> {
        match kind.unwrap_or("stub") {
            "stub" => Ok(BackendChoice::Stub {
                text: stub_text.unwrap_or_else(|| DEFAULT_STUB_TEXT.to_string()),
            }),
            "policy" => {
                let path = policy_path.ok_or_else(|| {
                    usage("--backend policy needs a policy checkpoint (--policy or [generation])")
                })?;
                Ok(BackendChoice::Policy { path })
            }
            "http" => {
                let url = url.ok_or_else(|| {
                    usage("--backend http needs a service URL (--url or [generation].url)")
                })?;
                Ok(BackendChoice::Http { url })
            }
            other => Err(usage(format!(
                "unknown generation backend {other:?}; expected stub, policy, or http"
            ))),
        }
    }

    pub fn build(self) -> CliResult<Box<dyn GenerationBackend>> {
        Ok(match self {
            BackendChoice::Stub { text } => Box::new(StubBackend::fixed(text)),
            BackendChoice::Policy { path } => Box::new(PolicyBackend::new(load_policy(&path)?)),
            BackendChoice::Http { url } => Box::new(HttpBackend::new(url)),
        })
    }
}

/// Wire format sent to the generation service.
#[derive(Debug, Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    max_tokens: usize,
    temperature: f64,
}

/// Wire format expected back: any JSON object with a `text` field.
#[derive(Debug, Deserialize)]
struct WireResponse {
    text: String,
}

/// Blocking HTTP client for an external generation service. One POST per
/// attempt; the engine's retry policy handles transient failures.
pub struct HttpBackend {
    url: String,
    id: String,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(url: String) -> Self {
        let id = format!("http:{url}");
        Self { url, id, client: reqwest::blocking::Client::new() }
    }
}

impl GenerationBackend for HttpBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, String> {
        request.validate().map_err(|e| e.to_string())?;
        let wire = WireRequest {
            prompt: &request.prompt,
            max_tokens: request.max_tokens,
            temperature: request.temperature,
        };
        let start = Instant::now();
        let response = self
            .client
            .post(&self.url)
            .timeout(request.timeout)
            .json(&wire)
            .send()
            .map_err(|e| format!("request to {}: {e}", self.url))?;
        let status = response.status();
        if !status.is_success() {
            return Err(format!("generation service returned {status}"));
        }
        let body: WireResponse = response
            .json()
            .map_err(|e| format!("generation service sent an unreadable body: {e}"))?;
        Ok(GenerationResponse {
            text: body.text,
            latency: start.elapsed(),
            backend_id: self.id.clone(),
        })
    }

    fn id(&self) -> &str {
        &self.id
    }
}
