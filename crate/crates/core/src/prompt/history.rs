use super::Transcript;

const MAX_UNTRIMMED: usize = 5;

/// Bounds a conversation before it is sent to the model.
///
/// Transcripts of up to five messages pass through unchanged. Longer ones
/// keep message 0 (normally the system prompt) plus the most recent three
/// messages when the count is even, or four when it is odd. Under strict
/// system/user/assistant alternation the retained tail then starts on a
/// user turn.
pub fn trim_history(t: &Transcript) -> Transcript {
    let n = t.len();
    if n <= MAX_UNTRIMMED {
        return t.clone();
    }
    let keep = if n.is_multiple_of(2) { 3 } else { 4 };
    let messages = t.messages();
    let mut out = Transcript::new();
    out.push(messages[0].clone());
    for m in &messages[n - keep..] {
        out.push(m.clone());
    }
    out
}
