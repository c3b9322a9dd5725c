use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::PipelineError;

/// Starter program shown to the model; it dumps `model.lp` and `solution.json`.
pub const CODE_EXAMPLE: &str = include_str!("../../assets/code_example.py");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    StandardS,
    CotS,
    CotS2,
    CotSInstructions,
    Agentic,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::StandardS, Method::CotS, Method::CotS2, Method::CotSInstructions, Method::Agentic];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::StandardS => "standard_s",
            Method::CotS => "cot_s",
            Method::CotS2 => "cot_s2",
            Method::CotSInstructions => "cot_s_instructions",
            Method::Agentic => "agentic",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.as_str() == s)
    }

    /// Prompt roles in exchange order (reviewers appear once).
    pub fn roles(self) -> &'static [Role] {
        match self {
            Method::StandardS | Method::CotS => &[Role::Single],
            Method::CotS2 | Method::CotSInstructions => &[Role::ExtractElements, Role::FormulateModel, Role::ExtensiveForm],
            Method::Agentic => &[Role::Extractor, Role::Formulator, Role::Reviewer, Role::Updater],
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// The only exchange of a single-prompt method.
    Single,
    ExtractElements,
    FormulateModel,
    ExtensiveForm,
    Extractor,
    Formulator,
    Reviewer,
    Updater,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Single => "single",
            Role::ExtractElements => "extract_elements",
            Role::FormulateModel => "formulate_model",
            Role::ExtensiveForm => "extensive_form",
            Role::Extractor => "extractor",
            Role::Formulator => "formulator",
            Role::Reviewer => "reviewer",
            Role::Updater => "updater",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: String,
    pub method: Method,
    pub role: Role,
    pub body: String,
}

macro_rules! asset {
    ($name:literal) => {
        include_str!(concat!("../../assets/prompts/", $name, ".txt"))
    };
}

fn build() -> Vec<PromptTemplate> {
    // Staged chains restate the problem and starter code at every stage.
    let problem = asset!("cot_s2_problem");
    let staged = |stage: &str| format!("{stage}{problem}");
    let entries: [(Method, Role, String); 12] = [
        (Method::StandardS, Role::Single, asset!("standard_s").into()),
        (Method::CotS, Role::Single, asset!("cot_s").into()),
        (Method::CotS2, Role::ExtractElements, staged(asset!("cot_s2_extract_elements"))),
        (Method::CotS2, Role::FormulateModel, staged(asset!("cot_s2_formulate_model"))),
        (Method::CotS2, Role::ExtensiveForm, staged(asset!("cot_s2_extensive_form"))),
        (Method::CotSInstructions, Role::ExtractElements, staged(asset!("cot_s_instructions_extract_elements"))),
        (Method::CotSInstructions, Role::FormulateModel, staged(asset!("cot_s2_formulate_model"))),
        (Method::CotSInstructions, Role::ExtensiveForm, staged(asset!("cot_s_instructions_extensive_form"))),
        (Method::Agentic, Role::Extractor, asset!("agentic_extractor").into()),
        (Method::Agentic, Role::Formulator, asset!("agentic_formulator").into()),
        (Method::Agentic, Role::Reviewer, asset!("agentic_reviewer").into()),
        (Method::Agentic, Role::Updater, asset!("agentic_updater").into()),
    ];
    entries
        .into_iter()
        .map(|(method, role, body)| PromptTemplate {
            id: format!("{}/{}", method.as_str(), role.as_str()),
            method,
            role,
            body: body.trim_end().to_string(),
        })
        .collect()
}

pub fn templates() -> &'static [PromptTemplate] {
    static REGISTRY: OnceLock<Vec<PromptTemplate>> = OnceLock::new();
    REGISTRY.get_or_init(build)
}

pub fn template(method: Method, role: Role) -> &'static PromptTemplate {
    templates()
        .iter()
        .find(|t| t.method == method && t.role == role)
        .unwrap_or_else(|| panic!("no template for {method}/{}", role.as_str()))
}

/// Splits a body into literal text and `{identifier}` placeholders.
fn segments(body: &str) -> Vec<Result<&str, &str>> {
    let mut out = Vec::new();
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let ident_len = after.find(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')).unwrap_or(after.len());
        if ident_len > 0 && after[ident_len..].starts_with('}') {
            out.push(Ok(&rest[..open]));
            out.push(Err(&after[..ident_len]));
            rest = &after[ident_len + 1..];
        } else {
            out.push(Ok(&rest[..=open]));
            rest = after;
        }
    }
    out.push(Ok(rest));
    out
}

/// Placeholder names used by a template body, in order of first use.
pub fn placeholders(body: &str) -> Vec<&str> {
    let mut seen = Vec::new();
    for name in segments(body).into_iter().filter_map(Result::err) {
        if !seen.contains(&name) {
            seen.push(name);
        }
    }
    seen
}

/// Substitutes every placeholder in one pass; bound values are not rescanned.
pub fn render(t: &PromptTemplate, bindings: &BTreeMap<&str, String>) -> Result<String, PipelineError> {
    let mut out = String::with_capacity(t.body.len());
    for seg in segments(&t.body) {
        match seg {
            Ok(text) => out.push_str(text),
            Err(name) => match bindings.get(name) {
                Some(v) => out.push_str(v),
                None => {
                    return Err(PipelineError::UnboundPlaceholder { template: t.id.clone(), name: name.to_string() })
                }
            },
        }
    }
    Ok(out)
}
