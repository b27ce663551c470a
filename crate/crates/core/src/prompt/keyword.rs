//! Synonym substitution for the word "skill" in prompt scaffolding.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ProtocolError;

/// The word used in place of "Skill" throughout the prompt templates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
#[derive(Default)]
pub enum KeywordVariant {
    #[default]
    Skill,
    Capability,
    Expertise,
    Proficiency,
    KnowHow,
    /// Any other word; pluralised by the usual English suffix rules.
    Custom(String),
}


/// The four surface forms a keyword can take in a template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordForms {
    pub lower: String,
    pub lower_plural: String,
    pub capital: String,
    pub capital_plural: String,
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn pluralize(word: &str) -> String {
    let lower = word.to_lowercase();
    let ends_with_consonant_y = lower.len() >= 2
        && lower.ends_with('y')
        && !matches!(lower.as_bytes()[lower.len() - 2], b'a' | b'e' | b'i' | b'o' | b'u');
    if ends_with_consonant_y {
        format!("{}ies", &word[..word.len() - 1])
    } else if ["s", "x", "z", "ch", "sh"].iter().any(|s| lower.ends_with(s)) {
        format!("{word}es")
    } else {
        format!("{word}s")
    }
}

impl KeywordVariant {
    pub const BUILTIN: [KeywordVariant; 5] = [
        KeywordVariant::Skill,
        KeywordVariant::Capability,
        KeywordVariant::Expertise,
        KeywordVariant::Proficiency,
        KeywordVariant::KnowHow,
    ];

    /// Parses a keyword; built-in variants match case-insensitively.
    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(ProtocolError::InvalidKeyword(text.to_string()));
        }
        Ok(match trimmed.to_lowercase().as_str() {
            "skill" => KeywordVariant::Skill,
            "capability" => KeywordVariant::Capability,
            "expertise" => KeywordVariant::Expertise,
            "proficiency" => KeywordVariant::Proficiency,
            "know-how" => KeywordVariant::KnowHow,
            _ => KeywordVariant::Custom(trimmed.to_string()),
        })
    }

    /// Canonical capitalised singular spelling.
    pub fn as_str(&self) -> &str {
        match self {
            KeywordVariant::Skill => "Skill",
            KeywordVariant::Capability => "Capability",
            KeywordVariant::Expertise => "Expertise",
            KeywordVariant::Proficiency => "Proficiency",
            KeywordVariant::KnowHow => "Know-how",
            KeywordVariant::Custom(s) => s,
        }
    }

    pub fn forms(&self) -> KeywordForms {
        let (singular, plural) = match self {
            KeywordVariant::Skill => ("skill".to_string(), "skills".to_string()),
            KeywordVariant::Capability => ("capability".to_string(), "capabilities".to_string()),
            // Mass noun: no distinct plural.
            KeywordVariant::Expertise => ("expertise".to_string(), "expertise".to_string()),
            KeywordVariant::Proficiency => ("proficiency".to_string(), "proficiencies".to_string()),
            KeywordVariant::KnowHow => ("know-how".to_string(), "know-hows".to_string()),
            KeywordVariant::Custom(s) => {
                let lower = s.to_lowercase();
                let plural = pluralize(&lower);
                (lower, plural)
            }
        };
        KeywordForms {
            capital: capitalize(&singular),
            capital_plural: capitalize(&plural),
            lower: singular,
            lower_plural: plural,
        }
    }
}

impl fmt::Display for KeywordVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KeywordVariant {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl TryFrom<String> for KeywordVariant {
    type Error = ProtocolError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::parse(&value)
    }
}

impl From<KeywordVariant> for String {
    fn from(value: KeywordVariant) -> Self {
        value.as_str().to_string()
    }
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'-'
}

/// Replaces whole-word occurrences of `from`'s four forms with the matching
/// form of `to`.
///
/// Words are maximal runs of ASCII alphanumerics, `_` and `-`, so
/// hyphenated skill names such as `web-research` are never touched. A word
/// wrapped directly in double quotes (the `"Skills"` JSON key) is left alone,
/// as is any `{{...}}` placeholder.
pub fn replace_keyword(text: &str, from: &KeywordVariant, to: &KeywordVariant) -> String {
    if from == to {
        return text.to_string();
    }
    let src = from.forms();
    let dst = to.forms();
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < bytes.len() {
        if text[i..].starts_with("{{") {
            if let Some(end) = text[i..].find("}}") {
                out.push_str(&text[i..i + end + 2]);
                i += end + 2;
                continue;
            }
        }
        if !is_word_byte(bytes[i]) {
            // Copy one full character; non-ASCII bytes are never word bytes.
            let ch_len = text[i..].chars().next().map_or(1, char::len_utf8);
            out.push_str(&text[i..i + ch_len]);
            i += ch_len;
            continue;
        }
        let start = i;
        while i < bytes.len() && is_word_byte(bytes[i]) {
            i += 1;
        }
        let word = &text[start..i];
        let quoted = start > 0 && bytes[start - 1] == b'"' && i < bytes.len() && bytes[i] == b'"';
        let replacement = if quoted {
            None
        } else if word == src.lower {
            Some(&dst.lower)
        } else if word == src.lower_plural {
            Some(&dst.lower_plural)
        } else if word == src.capital {
            Some(&dst.capital)
        } else if word == src.capital_plural {
            Some(&dst.capital_plural)
        } else {
            None
        };
        out.push_str(replacement.map_or(word, String::as_str));
    }
    out
}

/// Rewrites "skill"/"skills"/"Skill"/"Skills" in template scaffolding.
pub fn substitute_keyword(template: &str, keyword: &KeywordVariant) -> String {
    replace_keyword(template, &KeywordVariant::Skill, keyword)
}
