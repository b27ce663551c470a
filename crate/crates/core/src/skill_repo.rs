//! SKILL.md parsing, cross-skill reference extraction and trial-hub assembly.
//!
//! A skill document is a `---` delimited block of flat `key: value` lines
//! followed by a markdown body:
//!
//! ```text
//! ---
//! name: sales-analytics
//! description: Analyze sales data
//! ---
//! Step 1 ...
//! ```
//!
//! `name` and `description` are required. Other keys are accepted and kept
//! in [`Skill::metadata`]. Indented lines inside the block (nested YAML) are
//! ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;

pub const SKILL_FILE_NAME: &str = "SKILL.md";
const DELIMITER: &str = "---";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SkillError {
    #[error("{path}:{line}: missing frontmatter block (expected `---` delimiters)")]
    MissingFrontmatter { path: String, line: usize },
    #[error("{path}:{line}: missing required field `{key}`")]
    MissingField { path: String, line: usize, key: String },
    #[error("{path}:{line}: invalid skill name `{name}` (expected kebab-case [a-z0-9]+(-[a-z0-9]+)*)")]
    InvalidName { path: String, line: usize, name: String },
    #[error("{path}:{line}: malformed frontmatter line (expected `key: value`)")]
    MalformedFrontmatter { path: String, line: usize },
    #[error("duplicate skill name `{0}`")]
    DuplicateSkillName(String),
    #[error("insufficient distractor pool: have {have}, need {need}")]
    InsufficientPool { have: usize, need: usize },
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

impl SkillError {
    fn io(path: &Path, err: std::io::Error) -> Self {
        SkillError::Io {
            path: path.display().to_string(),
            reason: err.to_string(),
        }
    }
}

/// Returns true when `name` matches `[a-z0-9]+(-[a-z0-9]+)*`.
pub fn is_valid_skill_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .split('-')
            .all(|part| !part.is_empty() && part.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()))
}

/// The short, always-visible part of a skill.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillDescriptor {
    pub name: String,
    pub description: String,
    pub source_path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skill {
    pub descriptor: SkillDescriptor,
    /// Workflow instructions, loaded only when the skill is selected.
    pub body: String,
    /// Names of other skills this one points at, in order of first mention.
    pub references: Vec<String>,
    /// Frontmatter keys other than `name` and `description`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl Skill {
    /// Builds a skill, deriving references from the body.
    pub fn new(descriptor: SkillDescriptor, body: impl Into<String>) -> Self {
        let body = body.into();
        let references = extract_references(&body)
            .into_iter()
            .filter(|r| *r != descriptor.name)
            .collect();
        Self {
            descriptor,
            body,
            references,
            metadata: BTreeMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.descriptor.name
    }

    pub fn description(&self) -> &str {
        &self.descriptor.description
    }

    /// Renders the skill back into SKILL.md form.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(DELIMITER);
        out.push('\n');
        out.push_str(&format!("name: {}\n", self.descriptor.name));
        out.push_str(&format!("description: {}\n", self.descriptor.description));
        for (k, v) in &self.metadata {
            out.push_str(&format!("{k}: {v}\n"));
        }
        out.push_str(DELIMITER);
        out.push('\n');
        out.push_str(&self.body);
        out
    }
}

fn strip_quotes(value: &str) -> &str {
    let v = value.trim();
    if v.len() >= 2 && ((v.starts_with('"') && v.ends_with('"')) || (v.starts_with('\'') && v.ends_with('\''))) {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

/// Parses one SKILL.md document.
pub fn parse_skill_file(text: &str, source_path: &str) -> Result<Skill, SkillError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let missing_frontmatter = |line| SkillError::MissingFrontmatter {
        path: source_path.to_string(),
        line,
    };

    // split_inclusive keeps the terminators so the body is reproduced byte for byte.
    let mut lines = text.split_inclusive('\n');
    match lines.next() {
        Some(first) if first.trim_end() == DELIMITER => {}
        _ => return Err(missing_frontmatter(1)),
    }

    let mut fields: Vec<(usize, String, String)> = Vec::new();
    let mut consumed = text.split_inclusive('\n').next().map_or(0, str::len);
    let mut closed = false;
    let mut line_no = 1;
    for raw in lines {
        line_no += 1;
        consumed += raw.len();
        let line = raw.trim_end_matches(['\n', '\r']);
        if line.trim_end() == DELIMITER {
            closed = true;
            break;
        }
        if line.trim().is_empty() || line.trim_start().starts_with('#') || line.starts_with([' ', '\t']) {
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(SkillError::MalformedFrontmatter {
                path: source_path.to_string(),
                line: line_no,
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(SkillError::MalformedFrontmatter {
                path: source_path.to_string(),
                line: line_no,
            });
        }
        fields.push((line_no, key.to_string(), strip_quotes(value).to_string()));
    }
    if !closed {
        return Err(missing_frontmatter(line_no));
    }
    let closing_line = line_no;

    let field = |key: &str| fields.iter().rev().find(|(_, k, _)| k == key);
    let missing = |key: &str| SkillError::MissingField {
        path: source_path.to_string(),
        line: closing_line,
        key: key.to_string(),
    };

    let (name_line, _, name) = field("name").ok_or_else(|| missing("name"))?;
    if !is_valid_skill_name(name) {
        return Err(SkillError::InvalidName {
            path: source_path.to_string(),
            line: *name_line,
            name: name.clone(),
        });
    }
    let (_, _, description) = field("description").ok_or_else(|| missing("description"))?;
    let description = description.trim();
    if description.is_empty() {
        return Err(missing("description"));
    }

    let descriptor = SkillDescriptor {
        name: name.clone(),
        description: description.to_string(),
        source_path: source_path.to_string(),
    };
    let mut skill = Skill::new(descriptor, &text[consumed..]);
    for (_, k, v) in &fields {
        if k != "name" && k != "description" {
            skill.metadata.insert(k.clone(), v.clone());
        }
    }
    Ok(skill)
}

/// Skill names referenced from a markdown body, in order of first occurrence.
///
/// Two forms are recognised: markdown links whose target ends in `SKILL.md`
/// (the parent directory names the skill) and inline `skill:<name>` tokens.
pub fn extract_references(body: &str) -> Vec<String> {
    let mut found: Vec<(usize, String)> = Vec::new();
    found.extend(link_references(body));
    found.extend(inline_references(body));
    found.sort_by_key(|(pos, _)| *pos);

    let mut out: Vec<String> = Vec::new();
    for (_, name) in found {
        if !out.contains(&name) {
            out.push(name);
        }
    }
    out
}

fn link_references(body: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut search_from = 0;
    while let Some(rel) = body[search_from..].find("](") {
        let target_start = search_from + rel + 2;
        search_from = target_start;
        let Some(close) = body[target_start..].find(')') else {
            break;
        };
        let target = &body[target_start..target_start + close];
        if let Some(name) = skill_from_link_target(target) {
            out.push((target_start, name));
        }
    }
    out
}

fn skill_from_link_target(target: &str) -> Option<String> {
    let target = target.trim();
    let target = target.strip_prefix('<').unwrap_or(target);
    // Drop an optional link title: [x](path "title").
    let target = target.split_whitespace().next()?;
    let target = target.trim_end_matches('>');
    let target = target.split(['#', '?']).next()?;
    let mut parts = target.rsplit(['/', '\\']);
    if parts.next()? != SKILL_FILE_NAME {
        return None;
    }
    let parent = parts.find(|p| !p.is_empty() && *p != ".")?;
    is_valid_skill_name(parent).then(|| parent.to_string())
}

fn inline_references(body: &str) -> Vec<(usize, String)> {
    const MARKER: &str = "skill:";
    let bytes = body.as_bytes();
    let mut out = Vec::new();
    let mut search_from = 0;
    while let Some(rel) = body[search_from..].find(MARKER) {
        let at = search_from + rel;
        search_from = at + MARKER.len();
        let preceded_by_word = at > 0 && {
            let b = bytes[at - 1];
            b.is_ascii_alphanumeric() || b == b'_' || b == b'-'
        };
        if preceded_by_word {
            continue;
        }
        let rest = &body[at + MARKER.len()..];
        let len = rest
            .bytes()
            .take_while(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || *b == b'-')
            .count();
        let candidate = rest[..len].trim_end_matches('-');
        if is_valid_skill_name(candidate) {
            out.push((at, candidate.to_string()));
        }
    }
    out
}

/// A named collection of skills, optionally marking the ground truth for a trial.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillHub {
    skills: BTreeMap<String, Skill>,
    ground_truth: Option<String>,
}

impl SkillHub {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a hub, rejecting duplicate names.
    pub fn from_skills(skills: impl IntoIterator<Item = Skill>) -> Result<Self, SkillError> {
        let mut hub = Self::new();
        for skill in skills {
            hub.insert(skill)?;
        }
        Ok(hub)
    }

    pub fn insert(&mut self, skill: Skill) -> Result<(), SkillError> {
        let name = skill.name().to_string();
        if self.skills.contains_key(&name) {
            return Err(SkillError::DuplicateSkillName(name));
        }
        self.skills.insert(name, skill);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Skill> {
        self.skills.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.skills.contains_key(name)
    }

    /// Skills in name order.
    pub fn iter(&self) -> impl Iterator<Item = &Skill> {
        self.skills.values()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.skills.keys().map(String::as_str)
    }

    pub fn ground_truth(&self) -> Option<&Skill> {
        self.ground_truth.as_deref().and_then(|n| self.skills.get(n))
    }

    /// Marks `name` as the ground truth. Returns false if it is not in the hub.
    pub fn set_ground_truth(&mut self, name: &str) -> bool {
        if self.skills.contains_key(name) {
            self.ground_truth = Some(name.to_string());
            true
        } else {
            false
        }
    }

    /// Directed reference edges `(from, to)` in name order.
    pub fn reference_edges(&self) -> Vec<(String, String)> {
        self.iter()
            .flat_map(|s| s.references.iter().map(move |r| (s.name().to_string(), r.clone())))
            .collect()
    }
}

impl fmt::Display for SkillHub {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.names().collect();
        write!(f, "[{}]", names.join(", "))
    }
}

/// Parses every `SKILL.md` one level below `dir`, in directory-name order.
///
/// Each entry carries its own result so callers can report per-file errors.
pub fn scan_dir(dir: &Path) -> Result<Vec<(PathBuf, Result<Skill, SkillError>)>, SkillError> {
    let entries = fs::read_dir(dir).map_err(|e| SkillError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| SkillError::io(dir, e))?;
        let candidate = entry.path().join(SKILL_FILE_NAME);
        if entry.path().is_dir() && candidate.is_file() {
            paths.push(candidate);
        }
    }
    paths.sort();

    Ok(paths
        .into_iter()
        .map(|path| {
            let parsed = fs::read_to_string(&path)
                .map_err(|e| SkillError::io(&path, e))
                .and_then(|text| parse_skill_file(&text, &path.display().to_string()));
            (path, parsed)
        })
        .collect())
}

/// Loads a skill directory into a hub. The first parse error aborts.
pub fn load_hub(dir: &Path) -> Result<SkillHub, SkillError> {
    let mut hub = SkillHub::new();
    for (_, parsed) in scan_dir(dir)? {
        hub.insert(parsed?)?;
    }
    Ok(hub)
}

/// Assembles a trial hub: the ground truth plus `n_distractors` skills drawn
/// without replacement from `pool`.
///
/// The pool is sorted by name, de-duplicated and stripped of the ground
/// truth, then a SplitMix64-driven partial Fisher–Yates picks the
/// distractors. For a fixed seed the distractors for a smaller count are a
/// prefix of those for a larger count.
pub fn build_trial_hub(
    ground_truth: &Skill,
    pool: &[Skill],
    n_distractors: usize,
    seed: u64,
) -> Result<SkillHub, SkillError> {
    let mut candidates: Vec<&Skill> = pool.iter().filter(|s| s.name() != ground_truth.name()).collect();
    candidates.sort_by(|a, b| a.name().cmp(b.name()));
    candidates.dedup_by(|a, b| a.name() == b.name());
    if candidates.len() < n_distractors {
        return Err(SkillError::InsufficientPool {
            have: candidates.len(),
            need: n_distractors,
        });
    }

    let mut rng = SplitMix64::new(seed);
    let chosen = rng.partial_shuffle(&mut candidates, n_distractors);

    let mut hub = SkillHub::new();
    hub.insert(ground_truth.clone())?;
    for skill in chosen.iter() {
        hub.insert((*skill).clone())?;
    }
    hub.set_ground_truth(ground_truth.name());
    Ok(hub)
}
