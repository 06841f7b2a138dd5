//! The generation backend seam: a narrow, synchronous client interface with
//! deterministic in-process implementations for tests and demos. Network
//! backends (HTTP) live in the binary crate; this module owns only the
//! contract.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use super::OrchestrateError;
use crate::policy::Policy;

/// What the engine asks a generator for.
#[derive(Debug, Clone)]
pub struct GenerationRequest {
    pub prompt: String,
    /// Upper bound on generated tokens (advisory for backends with their
    /// own caps).
    pub max_tokens: usize,
    pub temperature: f64,
    pub timeout: Duration,
}

impl GenerationRequest {
    pub fn validate(&self) -> Result<(), OrchestrateError> {
        if self.timeout.is_zero() {
            return Err(OrchestrateError::BadRequest("timeout must be positive".into()));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(OrchestrateError::BadRequest(format!(
                "temperature must be finite and ≥ 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// What a generator returns on success.
#[derive(Debug, Clone)]
pub struct GenerationResponse {
    pub text: String,
    pub latency: Duration,
    pub backend_id: String,
}

/// A single generation attempt. Implementations must be safe to call from
/// multiple threads; the engine handles retries.
pub trait GenerationBackend: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, String>;
    fn id(&self) -> &str;
}

/// Retry schedule for transient backend failures: `retries` extra attempts
/// after the first, sleeping `base_delay · 2^attempt` between attempts.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub retries: usize,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { retries: 2, base_delay: Duration::from_millis(100) }
    }
}

impl RetryPolicy {
    /// Runs `attempt` under this schedule. Returns the successful response
    /// and the number of attempts made, or the last error message.
    pub fn run<F>(&self, mut attempt: F) -> Result<(GenerationResponse, usize), (String, usize)>
    where
        F: FnMut() -> Result<GenerationResponse, String>,
    {
        let mut last_error = String::new();
        for trial in 0..=self.retries {
            match attempt() {
                Ok(response) => return Ok((response, trial + 1)),
                Err(message) => last_error = message,
            }
            if trial < self.retries {
                std::thread::sleep(self.base_delay * 2u32.saturating_pow(trial as u32));
            }
        }
        Err((last_error, self.retries + 1))
    }
}

/// Deterministic in-process stand-ins for an external generator.
#[derive(Debug)]
pub enum StubBackend {
    /// Always returns the same text.
    Fixed(String),
    /// Fails the first `n` calls, then behaves like `Fixed`.
    FailTimes { failures: usize, text: String, calls: AtomicUsize },
    /// Every call fails.
    AlwaysFail,
}

impl StubBackend {
    pub fn fixed(text: impl Into<String>) -> Self {
        Self::Fixed(text.into())
    }

    pub fn fail_times(failures: usize, text: impl Into<String>) -> Self {
        Self::FailTimes { failures, text: text.into(), calls: AtomicUsize::new(0) }
    }
}

impl GenerationBackend for StubBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, String> {
        request.validate().map_err(|e| e.to_string())?;
        let start = Instant::now();
        let text = match self {
            Self::Fixed(text) => text.clone(),
            Self::FailTimes { failures, text, calls } => {
                let n = calls.fetch_add(1, Ordering::SeqCst);
                if n < *failures {
                    return Err(format!("stub failure {} of {}", n + 1, failures));
                }
                text.clone()
            }
            Self::AlwaysFail => return Err("stub backend is configured to fail".to_string()),
        };
        Ok(GenerationResponse {
            text,
            latency: start.elapsed(),
            backend_id: self.id().to_string(),
        })
    }

    fn id(&self) -> &str {
        match self {
            Self::Fixed(_) => "stub:fixed",
            Self::FailTimes { .. } => "stub:fail-times",
            Self::AlwaysFail => "stub:always-fail",
        }
    }
}

/// Greedy decoding from an in-process policy: the deterministic "real"
/// generator used for end-to-end desk runs.
#[derive(Debug, Clone)]
pub struct PolicyBackend {
    policy: Policy,
}

impl PolicyBackend {
    pub fn new(policy: Policy) -> Self {
        Self { policy }
    }
}

impl GenerationBackend for PolicyBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, String> {
        request.validate().map_err(|e| e.to_string())?;
        let start = Instant::now();
        let mut actions = self.policy.generate_greedy(&request.prompt);
        if request.max_tokens > 0 && actions.len() > request.max_tokens {
            actions.truncate(request.max_tokens);
        }
        Ok(GenerationResponse {
            text: self.policy.decode(&actions),
            latency: start.elapsed(),
            backend_id: self.id().to_string(),
        })
    }

    fn id(&self) -> &str {
        "policy:greedy"
    }
}
