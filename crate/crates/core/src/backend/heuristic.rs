use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::{BackendConfig, BackendError, ChatBackend, CompletionResult};
use crate::prompt::{SelectionResponse, Transcript};
use crate::skill_repo::{is_valid_skill_name, Skill, SkillDescriptor, SkillHub};

/// Cue words the heuristic execution step reads as evidence for a label.
pub const POSITIVE_CUES: &[&str] = &[
    "excellent",
    "wonderful",
    "superb",
    "delightful",
    "brilliant",
    "enjoyable",
    "masterful",
    "charming",
];
pub const NEGATIVE_CUES: &[&str] = &[
    "terrible",
    "awful",
    "dreadful",
    "tedious",
    "boring",
    "disappointing",
    "clumsy",
    "painful",
];

/// Lower-cased alphanumeric words of `text`.
pub fn word_set(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// `(|a ∩ b|, |a ∪ b|)`.
pub fn jaccard_counts(a: &BTreeSet<String>, b: &BTreeSet<String>) -> (usize, usize) {
    let inter = a.intersection(b).count();
    (inter, a.len() + b.len() - inter)
}

/// Compares two Jaccard ratios exactly by cross-multiplication.
fn cmp_ratio((i1, u1): (usize, usize), (i2, u2): (usize, usize)) -> Ordering {
    (i1 * u2).cmp(&(i2 * u1))
}

/// Routes `task` to the skill whose `name + description` words overlap it most.
///
/// Ties go to the lexicographically smaller name. If no skill shares a word
/// with the task, nothing is selected.
pub fn heuristic_select(task: &str, hub: &SkillHub) -> Result<SelectionResponse, BackendError> {
    if hub.is_empty() {
        return Err(BackendError::EmptyInput("skill hub is empty".into()));
    }
    let task_words = word_set(task);
    if task_words.is_empty() {
        return Err(BackendError::EmptyInput("task has no alphanumeric words".into()));
    }

    let mut best: Option<(&str, (usize, usize))> = None;
    // Name order, so a strict `>` keeps the smallest name among ties.
    for skill in hub.iter() {
        let words = word_set(&format!("{} {}", skill.name(), skill.description()));
        let score = jaccard_counts(&task_words, &words);
        if score.0 == 0 {
            continue;
        }
        if best.is_none_or(|(_, b)| cmp_ratio(score, b) == Ordering::Greater) {
            best = Some((skill.name(), score));
        }
    }

    Ok(match best {
        Some((name, _)) => SelectionResponse {
            message: format!("Yes I need to read the skill information first because the request matches {name}."),
            skills: vec![name.to_string()],
        },
        None => SelectionResponse {
            message: "I didn't find the right skill.".into(),
            skills: Vec::new(),
        },
    })
}

/// Recovers `- name: description` lines from a rendered selection prompt.
fn hub_from_listing(system: &str) -> SkillHub {
    let mut hub = SkillHub::new();
    for line in system.lines() {
        let Some(entry) = line.strip_prefix("- ") else {
            continue;
        };
        let Some((name, description)) = entry.split_once(": ") else {
            continue;
        };
        if !is_valid_skill_name(name) || hub.contains(name) {
            continue;
        }
        let descriptor = SkillDescriptor {
            name: name.to_string(),
            description: description.to_string(),
            source_path: String::new(),
        };
        // Duplicates were filtered above.
        let _ = hub.insert(Skill::new(descriptor, ""));
    }
    hub
}

fn cue_label(task: &str) -> &'static str {
    let words = word_set(task);
    let count = |cues: &[&str]| cues.iter().filter(|c| words.contains(**c)).count();
    match count(POSITIVE_CUES).cmp(&count(NEGATIVE_CUES)) {
        Ordering::Greater => "positive",
        Ordering::Less => "negative",
        Ordering::Equal => "undecided",
    }
}

/// Offline backend. Selection prompts (recognised by the `"Skills"` output
/// key) are answered with [`heuristic_select`]; anything else gets a
/// cue-word sentiment label. Reported latency is always zero so runs stay
/// reproducible.
pub struct HeuristicBackend {
    config: BackendConfig,
}

impl HeuristicBackend {
    pub fn new(config: BackendConfig) -> Self {
        Self { config }
    }
}

impl ChatBackend for HeuristicBackend {
    fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn complete(&self, t: &Transcript) -> Result<CompletionResult, BackendError> {
        self.config.check_context(t)?;
        let task = t
            .last_user()
            .ok_or_else(|| BackendError::EmptyInput("transcript has no user message".into()))?;
        let system = t.system().unwrap_or_default();
        let text = if system.contains("\"Skills\":") {
            let hub = hub_from_listing(system);
            let selection = heuristic_select(task, &hub)?;
            serde_json::to_string(&selection).expect("selection serializes")
        } else {
            serde_json::json!({ "Message": cue_label(task) }).to_string()
        };
        Ok(CompletionResult {
            text,
            latency: 0.0,
            prompt_tokens: 0,
            completion_tokens: 0,
        })
    }
}
