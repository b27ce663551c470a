//! Strict-JSON response contracts and their recovery rules.
//!
//! Model output is cleaned in two steps before schema validation: markdown
//! code fences are stripped, then the first balanced `{...}` object is cut
//! out of any surrounding prose.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::ProtocolError;

const EXCERPT_CHARS: usize = 80;

/// Output of the selection phase: `{"Message": ..., "Skills": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResponse {
    #[serde(rename = "Message")]
    pub message: String,
    #[serde(rename = "Skills")]
    pub skills: Vec<String>,
}

/// Output of the execution phase: `{"Message": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResponse {
    #[serde(rename = "Message")]
    pub message: String,
}

/// An execution response plus whether it had to be recovered from non-JSON text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionParse {
    pub response: ExecutionResponse,
    pub degraded: bool,
}

fn excerpt(raw: &str) -> String {
    let mut s: String = raw.chars().take(EXCERPT_CHARS).collect();
    if raw.chars().count() > EXCERPT_CHARS {
        s.push('…');
    }
    s
}

/// Removes a surrounding markdown code fence (with or without a language tag).
pub fn strip_code_fences(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    // Skip the info string (e.g. `json`) up to the end of the opening line.
    let rest = match rest.find('\n') {
        Some(nl) => &rest[nl + 1..],
        None => rest.trim_start_matches(|c: char| c.is_ascii_alphanumeric()),
    };
    match rest.rfind("```") {
        Some(end) => rest[..end].trim(),
        None => rest.trim(),
    }
}

/// The first balanced `{...}` in `text`, honouring JSON string escapes.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let bytes = text.as_bytes();
    let mut search_from = 0;
    while let Some(rel) = text[search_from..].find('{') {
        let start = search_from + rel;
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        for (offset, &b) in bytes[start..].iter().enumerate() {
            if in_string {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_string = false;
                }
                continue;
            }
            match b {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(&text[start..=start + offset]);
                    }
                }
                _ => {}
            }
        }
        // Unbalanced from this brace; try the next one.
        search_from = start + 1;
    }
    None
}

fn parse_object(raw: &str) -> Result<Map<String, Value>, ProtocolError> {
    let cleaned = strip_code_fences(raw);
    let candidate = extract_json_object(cleaned).ok_or_else(|| ProtocolError::ParseFailure(excerpt(raw)))?;
    match serde_json::from_str::<Value>(candidate) {
        Ok(Value::Object(map)) => Ok(map),
        _ => Err(ProtocolError::ParseFailure(excerpt(candidate))),
    }
}

fn message_field(map: &Map<String, Value>) -> Result<String, ProtocolError> {
    match map.get("Message") {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(ProtocolError::SchemaViolation(format!(
            "\"Message\" must be a string, got {other}"
        ))),
        None => Err(ProtocolError::SchemaViolation("missing key \"Message\"".into())),
    }
}

/// Parses a selection-phase reply. Duplicate skill names are dropped, keeping first occurrences.
pub fn parse_selection_json(raw: &str) -> Result<SelectionResponse, ProtocolError> {
    let map = parse_object(raw)?;
    let message = message_field(&map)?;
    let items = match map.get("Skills") {
        Some(Value::Array(items)) => items,
        Some(other) => {
            return Err(ProtocolError::SchemaViolation(format!(
                "\"Skills\" must be an array, got {other}"
            )))
        }
        None => return Err(ProtocolError::SchemaViolation("missing key \"Skills\"".into())),
    };
    let mut skills: Vec<String> = Vec::with_capacity(items.len());
    for item in items {
        let Value::String(name) = item else {
            return Err(ProtocolError::SchemaViolation(format!(
                "\"Skills\" entries must be strings, got {item}"
            )));
        };
        let name = name.trim();
        if !skills.iter().any(|s| s == name) {
            skills.push(name.to_string());
        }
    }
    Ok(SelectionResponse { message, skills })
}

/// Recovers `"Message": value` when the value was emitted without quotes,
/// as the execution template's own example shows.
fn unquoted_message(candidate: &str) -> Option<String> {
    let key = candidate.find("\"Message\"")?;
    let after = candidate[key + "\"Message\"".len()..].trim_start();
    let value = after.strip_prefix(':')?;
    let value = value.trim().trim_end_matches('}').trim().trim_end_matches(',').trim();
    let value = value.trim_matches('"').trim();
    (!value.is_empty()).then(|| value.to_string())
}

/// Parses an execution-phase reply.
///
/// When the reply contains no JSON object at all, the whole trimmed text is
/// returned as the message and flagged `degraded`; a model that answers in
/// plain text still produces a scoreable prediction.
pub fn parse_execution_json(raw: &str) -> Result<ExecutionParse, ProtocolError> {
    let cleaned = strip_code_fences(raw);
    let Some(candidate) = extract_json_object(cleaned) else {
        if cleaned.is_empty() {
            return Err(ProtocolError::ParseFailure(excerpt(raw)));
        }
        return Ok(ExecutionParse {
            response: ExecutionResponse {
                message: cleaned.to_string(),
            },
            degraded: true,
        });
    };
    let map = match serde_json::from_str::<Value>(candidate) {
        Ok(Value::Object(map)) => map,
        _ => {
            return match unquoted_message(candidate) {
                Some(message) => Ok(ExecutionParse {
                    response: ExecutionResponse { message },
                    degraded: true,
                }),
                None => Err(ProtocolError::ParseFailure(excerpt(candidate))),
            }
        }
    };
    let message = message_field(&map)?;
    if message.trim().is_empty() {
        return Err(ProtocolError::SchemaViolation("\"Message\" is empty".into()));
    }
    Ok(ExecutionParse {
        response: ExecutionResponse { message },
        degraded: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_examples() {
        let r = parse_selection_json(
            r#"{"Message":"Yes I need to read the skill information first because …","Skills":["langgraph-docs"]}"#,
        )
        .unwrap();
        assert_eq!(r.skills, vec!["langgraph-docs"]);
        let r = parse_selection_json(r#"{"Message":"I didn't find the right skill.","Skills":[]}"#).unwrap();
        assert!(r.skills.is_empty());
        assert_eq!(r.message, "I didn't find the right skill.");
    }

    #[test]
    fn selection_fenced_and_prose() {
        let plain = r#"{"Message":"m","Skills":["a","b","a"]}"#;
        let fenced = format!("```json\n{plain}\n```");
        let expected = SelectionResponse {
            message: "m".into(),
            skills: vec!["a".into(), "b".into()],
        };
        assert_eq!(parse_selection_json(plain).unwrap(), expected);
        assert_eq!(parse_selection_json(&fenced).unwrap(), expected);
        assert_eq!(
            parse_selection_json(&format!("Sure! Here you go:\n{plain}\nThanks.")).unwrap(),
            expected
        );
    }

    #[test]
    fn selection_failures() {
        assert!(matches!(
            parse_selection_json("I think the answer is A"),
            Err(ProtocolError::ParseFailure(_))
        ));
        assert!(matches!(
            parse_selection_json(r#"{"Message":"m"}"#),
            Err(ProtocolError::SchemaViolation(_))
        ));
        assert!(matches!(
            parse_selection_json(r#"{"Message":"m","Skills":"a"}"#),
            Err(ProtocolError::SchemaViolation(_))
        ));
        assert!(matches!(
            parse_selection_json(r#"{"Message":1,"Skills":[]}"#),
            Err(ProtocolError::SchemaViolation(_))
        ));
        assert!(matches!(
            parse_selection_json(r#"{"Message":"m","Skills":[1]}"#),
            Err(ProtocolError::SchemaViolation(_))
        ));
        assert!(matches!(
            parse_selection_json("{not json}"),
            Err(ProtocolError::ParseFailure(_))
        ));
    }

    #[test]
    fn braces_inside_strings() {
        let raw = r#"prefix {"Message":"a } tricky \" {","Skills":["x"]} suffix {"#;
        assert_eq!(parse_selection_json(raw).unwrap().skills, vec!["x"]);
    }

    #[test]
    fn execution_cases() {
        let ok = parse_execution_json(r#"{"Message":"positive"}"#).unwrap();
        assert_eq!(ok.response.message, "positive");
        assert!(!ok.degraded);
        let fenced = parse_execution_json("```\n{\"Message\":\"positive\"}\n```").unwrap();
        assert_eq!(fenced, ok);
        let plain = parse_execution_json("negative").unwrap();
        assert_eq!(plain.response.message, "negative");
        assert!(plain.degraded);
    }

    #[test]
    fn execution_unquoted_value() {
        let r = parse_execution_json("{\n  \"Message\": positive\n}").unwrap();
        assert_eq!(r.response.message, "positive");
        assert!(r.degraded);
    }

    #[test]
    fn execution_failures() {
        assert!(matches!(
            parse_execution_json("   "),
            Err(ProtocolError::ParseFailure(_))
        ));
        assert!(matches!(
            parse_execution_json(r#"{"Message":""}"#),
            Err(ProtocolError::SchemaViolation(_))
        ));
        assert!(matches!(
            parse_execution_json(r#"{"Answer":"x"}"#),
            Err(ProtocolError::SchemaViolation(_))
        ));
    }

    #[test]
    fn fence_stripping() {
        assert_eq!(strip_code_fences("```json\n{}\n```"), "{}");
        assert_eq!(strip_code_fences("```{}```"), "{}");
        assert_eq!(strip_code_fences("  text  "), "text");
    }
}
