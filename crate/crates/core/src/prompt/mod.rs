//! Prompt rendering and model-output parsing for the instruction strategies.
//!
//! Four strategies are supported:
//!
//! - **DI** (direct instruction): the task alone, as a single user turn.
//! - **FSI** (full-skill instruction): every skill in the trial hub, descriptor
//!   and body, inlined into the system prompt.
//! - **ASI** (agent-skill instruction): a selection turn that shows only
//!   descriptors, then an execution turn that loads the selected bodies.
//! - **ASIH**: ASI whose execution turn also carries the earlier turns,
//!   trimmed by [`trim_history`].

mod history;
mod keyword;
mod response;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::skill_repo::{Skill, SkillHub};

pub use history::trim_history;
pub use keyword::{replace_keyword, substitute_keyword, KeywordForms, KeywordVariant};
pub use response::{
    extract_json_object, parse_execution_json, parse_selection_json, strip_code_fences, ExecutionParse,
    ExecutionResponse, SelectionResponse,
};

pub const SKILL_CONTEXT_PLACEHOLDER: &str = "{{Skill Context}}";

/// Selection-phase system prompt.
pub const SELECTION_TEMPLATE: &str = include_str!("../../templates/selection_system.txt");
/// Execution-phase system prompt, also used for FSI.
pub const EXECUTION_TEMPLATE: &str = include_str!("../../templates/execution_system.txt");
/// Direct-instruction task templates for the three benchmark datasets.
pub const DIRECT_IMDB_TEMPLATE: &str = include_str!("../../templates/direct_imdb.txt");
pub const DIRECT_FINER_TEMPLATE: &str = include_str!("../../templates/direct_finer.txt");
pub const DIRECT_INSURBENCH_TEMPLATE: &str = include_str!("../../templates/direct_insurbench.txt");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("skill hub is empty")]
    EmptyHub,
    #[error("no skills selected")]
    EmptySelection,
    #[error("could not parse model output as JSON: {0}")]
    ParseFailure(String),
    #[error("model output violates the response schema: {0}")]
    SchemaViolation(String),
    #[error("invalid keyword variant `{0}`")]
    InvalidKeyword(String),
    #[error("strategy {0} is not rendered by a single prompt")]
    UnsupportedStrategy(Strategy),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    DI,
    FSI,
    ASI,
    ASIH,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::DI, Strategy::FSI, Strategy::ASI, Strategy::ASIH];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::DI => "DI",
            Strategy::FSI => "FSI",
            Strategy::ASI => "ASI",
            Strategy::ASIH => "ASIH",
        }
    }

    /// Whether trials under this strategy route through a selection phase.
    pub fn routes(self) -> bool {
        matches!(self, Strategy::ASI | Strategy::ASIH)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "di" => Ok(Strategy::DI),
            "fsi" => Ok(Strategy::FSI),
            "asi" => Ok(Strategy::ASI),
            "asih" => Ok(Strategy::ASIH),
            other => Err(format!("unknown strategy `{other}` (expected di, fsi, asi or asih)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// An ordered conversation. At most one system message, and only in first position.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    messages: Vec<ChatMessage>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a transcript, checking the system-message and empty-content rules.
    pub fn from_messages(messages: Vec<ChatMessage>) -> Result<Self, String> {
        for (i, m) in messages.iter().enumerate() {
            if m.role == Role::System && i != 0 {
                return Err(format!("system message at position {i}; only position 0 is allowed"));
            }
            if m.content.is_empty() && m.role != Role::Assistant {
                return Err(format!("empty {} message at position {i}", m.role.as_str()));
            }
        }
        Ok(Self { messages })
    }

    /// Appends a message. A system message is only accepted into an empty transcript.
    pub fn push(&mut self, message: ChatMessage) {
        assert!(
            message.role != Role::System || self.messages.is_empty(),
            "system message must come first"
        );
        self.messages.push(message);
    }

    pub fn messages(&self) -> &[ChatMessage] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn system(&self) -> Option<&str> {
        self.messages
            .first()
            .filter(|m| m.role == Role::System)
            .map(|m| m.content.as_str())
    }

    /// Content of the final user message.
    pub fn last_user(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }

    /// Total characters of content (Unicode scalar values).
    pub fn content_chars(&self) -> usize {
        self.messages.iter().map(|m| m.content.chars().count()).sum()
    }
}

fn template_body(template: &str) -> &str {
    template.trim_end_matches('\n')
}

/// Fills `{{Skill Context}}` after applying the keyword substitution to the
/// template text only; the inserted context is never rewritten.
fn instantiate(template: &str, keyword: &KeywordVariant, context: &str) -> String {
    let scaffold = substitute_keyword(template_body(template), keyword);
    scaffold.replace(SKILL_CONTEXT_PLACEHOLDER, context)
}

/// One `- name: description` line per skill, in name order.
pub fn descriptor_listing(hub: &SkillHub) -> String {
    hub.iter()
        .map(|s| format!("- {}: {}", s.name(), s.description()))
        .collect::<Vec<_>>()
        .join("\n")
}

fn skill_section(skill: &Skill, with_description: bool) -> String {
    let mut out = format!("### {}\n", skill.name());
    if with_description {
        out.push_str(skill.description());
        out.push_str("\n\n");
    }
    out.push_str(skill.body.trim_end());
    out
}

/// Selection-phase transcript: descriptors only.
pub fn render_selection_prompt(
    hub: &SkillHub,
    task: &str,
    keyword: &KeywordVariant,
) -> Result<Transcript, ProtocolError> {
    if hub.is_empty() {
        return Err(ProtocolError::EmptyHub);
    }
    let system = instantiate(SELECTION_TEMPLATE, keyword, &descriptor_listing(hub));
    Ok(Transcript {
        messages: vec![ChatMessage::system(system), ChatMessage::user(task)],
    })
}

/// Execution-phase transcript: the full bodies of the selected skills, in selection order.
pub fn render_execution_prompt(
    selected: &[&Skill],
    task: &str,
    keyword: &KeywordVariant,
) -> Result<Transcript, ProtocolError> {
    if selected.is_empty() {
        return Err(ProtocolError::EmptySelection);
    }
    let context = selected
        .iter()
        .map(|s| skill_section(s, false))
        .collect::<Vec<_>>()
        .join("\n\n");
    let system = instantiate(EXECUTION_TEMPLATE, keyword, &context);
    Ok(Transcript {
        messages: vec![ChatMessage::system(system), ChatMessage::user(task)],
    })
}

/// Single-shot prompts for DI and FSI.
pub fn render_strategy_prompt(
    strategy: Strategy,
    hub: &SkillHub,
    task: &str,
    keyword: &KeywordVariant,
) -> Result<Transcript, ProtocolError> {
    match strategy {
        Strategy::DI => Ok(Transcript {
            messages: vec![ChatMessage::user(task)],
        }),
        Strategy::FSI => {
            if hub.is_empty() {
                return Err(ProtocolError::EmptyHub);
            }
            let context = hub
                .iter()
                .map(|s| skill_section(s, true))
                .collect::<Vec<_>>()
                .join("\n\n");
            let system = instantiate(EXECUTION_TEMPLATE, keyword, &context);
            Ok(Transcript {
                messages: vec![ChatMessage::system(system), ChatMessage::user(task)],
            })
        }
        other => Err(ProtocolError::UnsupportedStrategy(other)),
    }
}

/// Fills `<<<Field>>>` slots of a direct-instruction template.
///
/// Unknown slots are left in place.
pub fn fill_direct_template(template: &str, fields: &[(&str, &str)]) -> String {
    let mut out = template_body(template).to_string();
    for (name, value) in fields {
        out = out.replace(&format!("<<<{name}>>>"), value);
    }
    out
}
