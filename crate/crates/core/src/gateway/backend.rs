//! Stance backends: a chat-completion HTTP client and two offline mocks.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::prompt::PromptInstance;
use super::GatewayError;
use crate::attribute::Attribute;
use crate::corpus::StanceRecord;
use crate::stance::Stance;

/// What a mock oracle answers when it declines to pick a side.
pub const ORACLE_NEUTRAL_RESPONSE: &str = "I cannot determine the stance";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendError {
    /// Worth retrying: rate limits, server errors, timeouts, dropped connections.
    Transient(String),
    Permanent(String),
}

impl std::fmt::Display for BackendError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendError::Transient(m) => write!(f, "transient: {m}"),
            BackendError::Permanent(m) => write!(f, "permanent: {m}"),
        }
    }
}

pub struct BackendRequest<'a> {
    pub record: &'a StanceRecord,
    pub prompt: &'a PromptInstance,
}

/// Anything that turns a rendered prompt into a raw model response.
pub trait StanceBackend: Send + Sync {
    fn model_id(&self) -> &str;
    fn complete(&self, request: &BackendRequest<'_>) -> Result<String, BackendError>;
}

fn default_timeout_secs() -> u64 {
    60
}
fn default_max_retries() -> u32 {
    3
}
fn default_max_in_flight() -> usize {
    4
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_max_tokens() -> u32 {
    16
}
fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}

/// Backend configuration as it appears in pipeline config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub model: String,
    #[serde(flatten)]
    pub kind: BackendKind,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    /// First retry delay; doubles on every further attempt.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat {
        endpoint: String,
        /// Environment variable holding the bearer token.
        #[serde(default = "default_api_key_env")]
        api_key_env: String,
        #[serde(default)]
        temperature: f64,
        #[serde(default = "default_max_tokens")]
        max_tokens: u32,
    },
    MockRule,
    MockBiasedOracle(OracleParams),
}

impl BackendKind {
    pub fn name(&self) -> &'static str {
        match self {
            BackendKind::HttpChat { .. } => "http_chat",
            BackendKind::MockRule => "mock_rule",
            BackendKind::MockBiasedOracle(_) => "mock_biased_oracle",
        }
    }
}

impl BackendDescriptor {
    /// Decoding settings worth recording next to remote-model predictions.
    pub fn decoding_note(&self) -> Option<String> {
        match &self.kind {
            BackendKind::HttpChat {
                temperature,
                max_tokens,
                ..
            } => Some(format!(
                "{}: decoding temperature={temperature} max_tokens={max_tokens}",
                self.model
            )),
            _ => None,
        }
    }

    pub fn mock_rule(model: impl Into<String>) -> Self {
        Self::with_kind(model, BackendKind::MockRule)
    }

    pub fn biased_oracle(model: impl Into<String>, params: OracleParams) -> Self {
        Self::with_kind(model, BackendKind::MockBiasedOracle(params))
    }

    pub fn with_kind(model: impl Into<String>, kind: BackendKind) -> Self {
        BackendDescriptor {
            model: model.into(),
            kind,
            timeout_secs: default_timeout_secs(),
            max_retries: default_max_retries(),
            max_in_flight: default_max_in_flight(),
            backoff_ms: default_backoff_ms(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.model.trim().is_empty() {
            return Err(GatewayError::Config("backend model id is empty".into()));
        }
        if self.max_in_flight < 1 {
            return Err(GatewayError::Config("max_in_flight must be at least 1".into()));
        }
        if let BackendKind::MockBiasedOracle(p) = &self.kind {
            p.validate()?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn StanceBackend>, GatewayError> {
        self.validate()?;
        Ok(match &self.kind {
            BackendKind::HttpChat {
                endpoint,
                api_key_env,
                temperature,
                max_tokens,
            } => {
                let api_key = std::env::var(api_key_env).map_err(|_| {
                    GatewayError::Config(format!(
                        "environment variable {api_key_env} with the API key is not set"
                    ))
                })?;
                Box::new(HttpChatBackend::new(
                    &self.model,
                    endpoint,
                    Some(api_key),
                    *temperature,
                    *max_tokens,
                    Duration::from_secs(self.timeout_secs),
                )?)
            }
            BackendKind::MockRule => Box::new(RuleBackend::new(&self.model)),
            BackendKind::MockBiasedOracle(params) => {
                Box::new(BiasedOracle::new(&self.model, params.clone()))
            }
        })
    }
}

/// Chat-completion client: POSTs `{model, messages, temperature, max_tokens}`
/// and reads the first choice's message content.
pub struct HttpChatBackend {
    model: String,
    endpoint: String,
    api_key: Option<String>,
    temperature: f64,
    max_tokens: u32,
    client: reqwest::blocking::Client,
}

impl HttpChatBackend {
    pub fn new(
        model: &str,
        endpoint: &str,
        api_key: Option<String>,
        temperature: f64,
        max_tokens: u32,
        timeout: Duration,
    ) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Config(format!("HTTP client: {e}")))?;
        Ok(HttpChatBackend {
            model: model.to_string(),
            endpoint: endpoint.to_string(),
            api_key,
            temperature,
            max_tokens,
            client,
        })
    }

    pub fn request_body(&self, rendered: &str) -> serde_json::Value {
        json!({
            "model": self.model,
            "messages": [{"role": "user", "content": rendered}],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        })
    }
}

/// Pulls `choices[0].message.content` out of a chat-completion response.
pub fn extract_content(body: &serde_json::Value) -> Option<String> {
    body.get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
        .map(str::to_string)
}

impl StanceBackend for HttpChatBackend {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &BackendRequest<'_>) -> Result<String, BackendError> {
        let mut req = self
            .client
            .post(&self.endpoint)
            .json(&self.request_body(&request.prompt.rendered));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() || e.is_connect() || e.is_request() {
                BackendError::Transient(e.to_string())
            } else {
                BackendError::Permanent(e.to_string())
            }
        })?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(BackendError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(BackendError::Permanent(format!("HTTP {status}")));
        }
        let body: serde_json::Value = resp
            .json()
            .map_err(|e| BackendError::Permanent(format!("malformed response body: {e}")))?;
        extract_content(&body)
            .ok_or_else(|| BackendError::Permanent("response has no choices[0].message.content".into()))
    }
}

/// Keyword mock: "love {target}" answers FAVOR, "hate {target}" answers
/// AGAINST, anything else "unsure".
pub struct RuleBackend {
    model: String,
}

impl RuleBackend {
    pub fn new(model: &str) -> Self {
        RuleBackend {
            model: model.to_string(),
        }
    }

    pub fn respond(target: &str, statement: &str) -> &'static str {
        let statement = statement.to_lowercase();
        let target = target.to_lowercase();
        if statement.contains(&format!("love {target}")) {
            "FAVOR"
        } else if statement.contains(&format!("hate {target}")) {
            "AGAINST"
        } else {
            "unsure"
        }
    }
}

impl StanceBackend for RuleBackend {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &BackendRequest<'_>) -> Result<String, BackendError> {
        Ok(Self::respond(&request.prompt.target, &request.prompt.statement).to_string())
    }
}

fn default_neutral_rate() -> f64 {
    0.0
}

/// Group-conditional error rates for [`BiasedOracle`]. Group `a` is
/// `group_a` under `attribute`; every other record uses the `_b` rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub attribute: Attribute,
    pub group_a: String,
    /// P(answer FAVOR | gold FAVOR) in group a.
    pub tpr_a: f64,
    pub tpr_b: f64,
    /// P(answer AGAINST | gold AGAINST) in group a.
    pub tnr_a: f64,
    pub tnr_b: f64,
    /// Probability of an off-instruction answer, drawn before the stance.
    #[serde(default = "default_neutral_rate")]
    pub neutral_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

impl OracleParams {
    /// Same rates for every group.
    pub fn unbiased(attribute: Attribute, group_a: &str, tpr: f64, tnr: f64, seed: u64) -> Self {
        OracleParams {
            attribute,
            group_a: group_a.to_string(),
            tpr_a: tpr,
            tpr_b: tpr,
            tnr_a: tnr,
            tnr_b: tnr,
            neutral_rate: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        for (name, v) in [
            ("tpr_a", self.tpr_a),
            ("tpr_b", self.tpr_b),
            ("tnr_a", self.tnr_a),
            ("tnr_b", self.tnr_b),
            ("neutral_rate", self.neutral_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(GatewayError::Config(format!("{name} = {v} is not a probability")));
            }
        }
        if self.attribute.canonical_group(&self.group_a).is_none() {
            return Err(GatewayError::Config(format!(
                "group_a {:?} is not a {} group",
                self.group_a, self.attribute
            )));
        }
        Ok(())
    }
}

/// Simulated model with known group-conditional accuracy. Each record's
/// answer depends only on `(seed, record id)`.
pub struct BiasedOracle {
    model: String,
    params: OracleParams,
    group_a: &'static str,
}

impl BiasedOracle {
    pub fn new(model: &str, params: OracleParams) -> Self {
        let group_a = params
            .attribute
            .canonical_group(&params.group_a)
            .unwrap_or("");
        BiasedOracle {
            model: model.to_string(),
            params,
            group_a,
        }
    }

    fn rng_for(&self, record_id: &str) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(b"biased-oracle");
        h.update(self.params.seed.to_le_bytes());
        h.update(record_id.as_bytes());
        ChaCha8Rng::from_seed(h.finalize().into())
    }

    pub fn respond(&self, record: &StanceRecord) -> Result<&'static str, BackendError> {
        let group = self.params.attribute.group_of(record).ok_or_else(|| {
            BackendError::Permanent(format!(
                "record {} has no {} group",
                record.id, self.params.attribute
            ))
        })?;
        let in_a = group == self.group_a;
        let mut rng = self.rng_for(&record.id);
        let neutral_draw: f64 = rng.random();
        let stance_draw: f64 = rng.random();
        if neutral_draw < self.params.neutral_rate {
            return Ok(ORACLE_NEUTRAL_RESPONSE);
        }
        let p_correct = match (record.gold_stance, in_a) {
            (Stance::Favor, true) => self.params.tpr_a,
            (Stance::Favor, false) => self.params.tpr_b,
            (Stance::Against, true) => self.params.tnr_a,
            (Stance::Against, false) => self.params.tnr_b,
        };
        let answer = if stance_draw < p_correct {
            record.gold_stance
        } else {
            record.gold_stance.flipped()
        };
        Ok(answer.as_str())
    }
}

impl StanceBackend for BiasedOracle {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &BackendRequest<'_>) -> Result<String, BackendError> {
        self.respond(request.record).map(str::to_string)
    }
}
