//! Task datasets: one JSON object per line.
//!
//! ```text
//! {"id": "imdb-0001", "input": "...", "label": "positive", "skill": "sentiment-analytics"}
//! ```
//!
//! An optional `history` array of `{"role", "content"}` messages supplies
//! the earlier turns used by the ASIH strategy.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::prompt::{ChatMessage, Role};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: String,
    pub input: String,
    pub label: String,
    /// Name of the gold skill.
    pub skill: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<ChatMessage>,
}

impl Task {
    pub fn new(
        id: impl Into<String>,
        input: impl Into<String>,
        label: impl Into<String>,
        skill: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            input: input.into(),
            label: label.into(),
            skill: skill.into(),
            history: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (field, value) in [
            ("id", &self.id),
            ("input", &self.input),
            ("label", &self.label),
            ("skill", &self.skill),
        ] {
            if value.trim().is_empty() {
                return Err(format!("field `{field}` is empty"));
            }
        }
        if let Some(i) = self.history.iter().position(|m| m.role == Role::System) {
            return Err(format!("history message {i} is a system message"));
        }
        Ok(())
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("task serializes")
    }
}

/// Parses a dataset. Blank lines are skipped; ids must be unique.
pub fn parse_dataset_jsonl(text: &str) -> Result<Vec<Task>, HarnessError> {
    let mut tasks = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fail = |reason: String| HarnessError::Dataset { line: i + 1, reason };
        let task: Task = serde_json::from_str(line).map_err(|e| fail(e.to_string()))?;
        task.validate().map_err(fail)?;
        if !seen.insert(task.id.clone()) {
            return Err(fail(format!("duplicate task id `{}`", task.id)));
        }
        tasks.push(task);
    }
    Ok(tasks)
}

pub fn load_dataset(path: &Path) -> Result<Vec<Task>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_dataset_jsonl(&text)
}

pub fn write_dataset_jsonl(tasks: &[Task]) -> String {
    tasks.iter().map(|t| t.to_json_line() + "\n").collect()
}

/// Distinct gold labels of a dataset.
pub fn dataset_labels(tasks: &[Task]) -> BTreeSet<String> {
    tasks.iter().map(|t| t.label.clone()).collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

/// Maps a free-text answer onto one of `labels`, case-insensitively.
///
/// An answer that is exactly a label (ignoring surrounding quotes and
/// punctuation) wins. Otherwise the label with the earliest whole-word
/// occurrence is chosen, the longer label on a tie. No occurrence gives
/// `None`.
pub fn extract_label(message: &str, labels: &BTreeSet<String>) -> Option<String> {
    let lowered = message.to_lowercase();
    let bare = lowered.trim().trim_matches(|c: char| !is_word_char(c));
    if let Some(label) = labels.iter().find(|l| l.to_lowercase() == bare) {
        return Some(label.clone());
    }
    let mut best: Option<(usize, &String)> = None;
    for label in labels {
        let needle = label.to_lowercase();
        if needle.is_empty() {
            continue;
        }
        let hit = lowered.match_indices(&needle).find(|(pos, _)| {
            let before = lowered[..*pos].chars().next_back();
            let after = lowered[pos + needle.len()..].chars().next();
            !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char)
        });
        if let Some((pos, _)) = hit {
            let better = match best {
                None => true,
                Some((p, l)) => pos < p || (pos == p && label.len() > l.len()),
            };
            if better {
                best = Some((pos, label));
            }
        }
    }
    best.map(|(_, l)| l.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(ls: &[&str]) -> BTreeSet<String> {
        ls.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_rows_and_history() {
        let text = concat!(
            r#"{"id":"a","input":"great film","label":"positive","skill":"sentiment-analytics"}"#,
            "\n\n",
            r#"{"id":"b","input":"x","label":"negative","skill":"s","history":[{"role":"user","content":"hi"},{"role":"assistant","content":"hello"}]}"#,
            "\n"
        );
        let tasks = parse_dataset_jsonl(text).unwrap();
        assert_eq!(tasks.len(), 2);
        assert_eq!(tasks[1].history.len(), 2);
        assert_eq!(parse_dataset_jsonl(&write_dataset_jsonl(&tasks)).unwrap(), tasks);
    }

    #[test]
    fn rejects_bad_rows() {
        let dup = "{\"id\":\"a\",\"input\":\"x\",\"label\":\"l\",\"skill\":\"s\"}\n".repeat(2);
        assert!(matches!(
            parse_dataset_jsonl(&dup),
            Err(HarnessError::Dataset { line: 2, .. })
        ));
        let empty = r#"{"id":"a","input":" ","label":"l","skill":"s"}"#;
        assert!(matches!(
            parse_dataset_jsonl(empty),
            Err(HarnessError::Dataset { line: 1, .. })
        ));
        let sys = r#"{"id":"a","input":"x","label":"l","skill":"s","history":[{"role":"system","content":"x"}]}"#;
        assert!(parse_dataset_jsonl(sys).is_err());
        assert!(parse_dataset_jsonl("{").is_err());
    }

    #[test]
    fn label_extraction() {
        let ls = labels(&["positive", "negative"]);
        assert_eq!(extract_label("Positive.", &ls).as_deref(), Some("positive"));
        assert_eq!(
            extract_label("The review is negative overall", &ls).as_deref(),
            Some("negative")
        );
        assert_eq!(
            extract_label("negative, not positive", &ls).as_deref(),
            Some("negative")
        );
        assert_eq!(extract_label("nonpositive", &ls), None);
        assert_eq!(extract_label("undecided", &ls), None);
        let ls = labels(&["Yes", "Yes-partial"]);
        assert_eq!(
            extract_label("yes-partial coverage", &ls).as_deref(),
            Some("Yes-partial")
        );
    }
}
