//! Prompting methods: template rendering, staged chains and the multi-agent
//! extractor → formulator → reviewers → updater workflow.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod client;
mod templates;

pub use client::{
    ChatClient, ChatMessage, ChatRequest, ChatResponse, ClientError, Fixture, FixtureStore, LiveClient, LiveConfig,
    RecordingClient, ReplayClient,
};
pub use templates::{placeholders, render, template, templates, Method, PromptTemplate, Role, CODE_EXAMPLE};

pub const DEFAULT_REVIEWERS: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("template {template} has unbound placeholder {{{name}}}")]
    UnboundPlaceholder { template: String, name: String },
    #[error("{role} call failed: {source}")]
    Client { role: String, source: ClientError },
    #[error("{role} returned an empty completion")]
    EmptyCompletion { role: String },
    #[error("invalid pipeline config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub role: Role,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentTranscript {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reviewers: Option<usize>,
    pub exchanges: Vec<Exchange>,
}

impl AgentTranscript {
    pub fn roles(&self) -> Vec<Role> {
        self.exchanges.iter().map(|e| e.role).collect()
    }
}

/// What a prompt needs to know about the problem.
#[derive(Debug, Clone)]
pub struct ProblemPrompt {
    pub description: String,
    /// Category-specific modeling instructions (bound by `cot_s_instructions`).
    pub instructions: String,
}

#[derive(Debug, Clone)]
pub struct MethodConfig {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    pub n_reviewers: usize,
    pub code_example: String,
    /// Repetition index of this cell; distinguishes otherwise identical requests.
    pub sample: u32,
}

impl MethodConfig {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            temperature: 0.0,
            max_tokens: None,
            n_reviewers: DEFAULT_REVIEWERS,
            code_example: CODE_EXAMPLE.to_string(),
            sample: 0,
        }
    }
}

/// Last fenced code block of `text`, or the whole (trimmed) text if none.
pub fn extract_code(text: &str) -> String {
    let mut last: Option<Vec<&str>> = None;
    let mut open: Option<Vec<&str>> = None;
    for line in text.lines() {
        let fence = line.trim_start().starts_with("```");
        match (&mut open, fence) {
            (None, true) => open = Some(Vec::new()),
            (Some(_), true) => last = open.take(),
            (Some(body), false) => body.push(line),
            (None, false) => {}
        }
    }
    match last {
        Some(body) => {
            let mut code = body.join("\n");
            code.push('\n');
            code
        }
        None => text.trim().to_string(),
    }
}

struct Caller<'a> {
    client: &'a dyn ChatClient,
    cfg: &'a MethodConfig,
}

impl Caller<'_> {
    fn call(&self, role: Role, messages: Vec<ChatMessage>, sample: u32) -> Result<String, PipelineError> {
        let req = ChatRequest {
            model: self.cfg.model.clone(),
            messages,
            temperature: self.cfg.temperature,
            max_tokens: self.cfg.max_tokens,
            sample,
        };
        let resp = self
            .client
            .complete(&req)
            .map_err(|source| PipelineError::Client { role: role.as_str().to_string(), source })?;
        if resp.text.trim().is_empty() {
            return Err(PipelineError::EmptyCompletion { role: role.as_str().to_string() });
        }
        Ok(resp.text)
    }
}

fn bindings<'a>(problem: &ProblemPrompt, cfg: &MethodConfig) -> BTreeMap<&'a str, String> {
    BTreeMap::from([
        ("problem_description", problem.description.clone()),
        ("code_example", cfg.code_example.clone()),
        ("instructions", problem.instructions.clone()),
    ])
}

/// Runs one prompting method and returns the final candidate code.
///
/// Single-prompt methods make one exchange; staged chains keep the whole
/// conversation so each stage sees the previous answers.
pub fn run_method(
    method: Method,
    problem: &ProblemPrompt,
    client: &dyn ChatClient,
    cfg: &MethodConfig,
) -> Result<(String, AgentTranscript), PipelineError> {
    if method == Method::Agentic {
        return run_agentic(problem, client, cfg.n_reviewers, cfg);
    }
    let caller = Caller { client, cfg };
    let b = bindings(problem, cfg);
    let mut messages = Vec::new();
    let mut exchanges = Vec::new();
    for &role in method.roles() {
        let prompt = render(template(method, role), &b)?;
        messages.push(ChatMessage::user(prompt.clone()));
        let response = caller.call(role, messages.clone(), cfg.sample)?;
        messages.push(ChatMessage::assistant(response.clone()));
        exchanges.push(Exchange { role, prompt, response });
    }
    let code = extract_code(&exchanges.last().expect("every method has a stage").response);
    Ok((code, AgentTranscript { method, reviewers: None, exchanges }))
}

/// Multi-agent workflow with one review round. Reviewers are independent
/// calls that never see each other's feedback; only the updater receives
/// the concatenation.
pub fn run_agentic(
    problem: &ProblemPrompt,
    client: &dyn ChatClient,
    n_reviewers: usize,
    cfg: &MethodConfig,
) -> Result<(String, AgentTranscript), PipelineError> {
    if n_reviewers == 0 {
        return Err(PipelineError::Config("agentic mode needs at least one reviewer".into()));
    }
    let caller = Caller { client, cfg };
    let mut b = bindings(problem, cfg);
    let single = |role: Role, b: &BTreeMap<&str, String>| -> Result<Exchange, PipelineError> {
        let prompt = render(template(Method::Agentic, role), b)?;
        let response = caller.call(role, vec![ChatMessage::user(prompt.clone())], cfg.sample)?;
        Ok(Exchange { role, prompt, response })
    };

    let extractor = single(Role::Extractor, &b)?;
    b.insert("extraction_output", extractor.response.clone());
    let formulator = single(Role::Formulator, &b)?;
    let current_code = extract_code(&formulator.response);
    b.insert("code_formulation_output_1", current_code.clone());
    b.insert("current_code", current_code);

    let review_prompt = render(template(Method::Agentic, Role::Reviewer), &b)?;
    let base = cfg.sample.saturating_mul(n_reviewers as u32);
    let reviews: Vec<Result<String, PipelineError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..n_reviewers)
            .map(|i| {
                let prompt = review_prompt.clone();
                let caller = &caller;
                s.spawn(move || caller.call(Role::Reviewer, vec![ChatMessage::user(prompt)], base + i as u32))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("reviewer thread panicked")).collect()
    });
    let reviews = reviews.into_iter().collect::<Result<Vec<_>, _>>()?;
    let feedback = reviews
        .iter()
        .enumerate()
        .map(|(i, r)| format!("Reviewer {}:\n{}", i + 1, r.trim_end()))
        .collect::<Vec<_>>()
        .join("\n\n");
    b.insert("reviewers_feedback", feedback);
    let updater = single(Role::Updater, &b)?;

    let code = extract_code(&updater.response);
    let mut exchanges = vec![extractor, formulator];
    exchanges.extend(reviews.into_iter().map(|response| Exchange {
        role: Role::Reviewer,
        prompt: review_prompt.clone(),
        response,
    }));
    exchanges.push(updater);
    Ok((code, AgentTranscript { method: Method::Agentic, reviewers: Some(n_reviewers), exchanges }))
}
