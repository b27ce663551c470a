//! Seeded synthetic routing tasks and skill pools for offline runs.

use crate::backend::{word_set, NEGATIVE_CUES, POSITIVE_CUES};
use crate::rng::SplitMix64;
use crate::skill_repo::{Skill, SkillDescriptor, SkillHub};

use super::dataset::Task;

/// Neutral words padding every synthetic task.
pub const FILLER_LEXICON: &[&str] = &[
    "please", "help", "me", "with", "this", "request", "today", "thanks", "could", "you", "handle", "kindly", "need",
    "quick", "answer", "for", "my", "case",
];

pub const SYNTHETIC_LABELS: [&str; 2] = ["negative", "positive"];

const FILLER_PER_TASK: usize = 4;

/// Composes `n_tasks` routing tasks over `hub`.
///
/// Each task draws a gold skill, 3 to 6 distinct content words from that
/// skill's description (all of them if it has fewer), four filler words and
/// one cue word for its label. Identical `(hub, n_tasks, seed)` give
/// identical tasks.
pub fn generate_synthetic_tasks(hub: &SkillHub, n_tasks: usize, seed: u64) -> Vec<Task> {
    assert!(!hub.is_empty(), "hub must not be empty");
    let skills: Vec<&Skill> = hub.iter().collect();
    let mut rng = SplitMix64::new(seed);
    let mut tasks = Vec::with_capacity(n_tasks);
    for i in 0..n_tasks {
        let gold = skills[rng.index(skills.len())];
        let mut content: Vec<String> = word_set(gold.description())
            .into_iter()
            .filter(|w| !FILLER_LEXICON.contains(&w.as_str()) && !is_cue(w))
            .collect();
        let k = rng.range_inclusive(3, 6).min(content.len());
        let picked = rng.partial_shuffle(&mut content, k).to_vec();

        let mut filler: Vec<&str> = FILLER_LEXICON.to_vec();
        let filler = rng.partial_shuffle(&mut filler, FILLER_PER_TASK).to_vec();

        let label = SYNTHETIC_LABELS[rng.index(SYNTHETIC_LABELS.len())];
        let cues = if label == "positive" {
            POSITIVE_CUES
        } else {
            NEGATIVE_CUES
        };
        let cue = cues[rng.index(cues.len())];

        let input = format!("{} {} {}", filler.join(" "), picked.join(" "), cue);
        tasks.push(Task::new(format!("syn-{seed}-{i:04}"), input, label, gold.name()));
    }
    tasks
}

fn is_cue(word: &str) -> bool {
    POSITIVE_CUES.contains(&word) || NEGATIVE_CUES.contains(&word)
}

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: &[&str] = &["a", "o", "u", "i"];

/// The `index`-th pseudo-word: three consonant-vowel syllables plus a
/// closing `x`, a shape no English word in the lexicons takes.
pub fn pseudo_word(index: usize) -> String {
    let base = ONSETS.len() * VOWELS.len();
    assert!(index < base.pow(3), "pseudo-word index out of range");
    let mut out = String::new();
    let mut rest = index;
    for _ in 0..3 {
        let syllable = rest % base;
        rest /= base;
        out.push_str(ONSETS[syllable / VOWELS.len()]);
        out.push_str(VOWELS[syllable % VOWELS.len()]);
    }
    out.push('x');
    out
}

const WORDS_PER_DESCRIPTION: usize = 6;

/// `n` skills whose names and descriptions use pairwise disjoint
/// pseudo-word vocabularies. The seed only permutes which words go where.
pub fn orthogonal_skill_pool(n: usize, seed: u64) -> Vec<Skill> {
    let per_skill = 2 + WORDS_PER_DESCRIPTION;
    let mut indices: Vec<usize> = (0..n * per_skill).collect();
    SplitMix64::new(seed).shuffle(&mut indices);
    indices
        .chunks(per_skill)
        .map(|chunk| {
            let words: Vec<String> = chunk.iter().map(|&i| pseudo_word(i)).collect();
            let name = format!("{}-{}", words[0], words[1]);
            let description = words[2..].join(" ");
            let body = format!("Handle requests about {description}.\n");
            Skill::new(
                SkillDescriptor {
                    source_path: format!("{name}/SKILL.md"),
                    name,
                    description,
                },
                body,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn demo_hub(n: usize) -> SkillHub {
        let descriptions = [
            "classify movie review sentiment polarity",
            "extract financial entity tags from filings",
            "answer insurance policy coverage questions",
            "summarize legal contract clauses",
            "translate product manuals accurately",
            "plan travel itineraries with budgets",
        ];
        SkillHub::from_skills(descriptions.iter().take(n).enumerate().map(|(i, d)| {
            Skill::new(
                SkillDescriptor {
                    name: format!("skill-{i}"),
                    description: d.to_string(),
                    source_path: String::new(),
                },
                "",
            )
        }))
        .unwrap()
    }

    #[test]
    fn deterministic() {
        let hub = demo_hub(6);
        assert_eq!(
            generate_synthetic_tasks(&hub, 10, 7),
            generate_synthetic_tasks(&hub, 10, 7)
        );
        assert_ne!(
            generate_synthetic_tasks(&hub, 10, 7),
            generate_synthetic_tasks(&hub, 10, 8)
        );
    }

    #[test]
    fn tasks_embed_gold_words() {
        let hub = demo_hub(6);
        for task in generate_synthetic_tasks(&hub, 50, 3) {
            let gold = word_set(hub.get(&task.skill).unwrap().description());
            let shared = word_set(&task.input).intersection(&gold).count();
            assert!(shared >= 3, "{task:?}");
            assert!(SYNTHETIC_LABELS.contains(&task.label.as_str()));
            assert!(task.validate().is_ok());
        }
        let one = generate_synthetic_tasks(&hub, 1, 0);
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn singleton_hub() {
        let hub = demo_hub(1);
        assert!(generate_synthetic_tasks(&hub, 20, 9)
            .iter()
            .all(|t| t.skill == "skill-0"));
    }

    #[test]
    fn pseudo_words_are_unique_and_foreign() {
        let words: Vec<String> = (0..3000).map(pseudo_word).collect();
        let distinct: BTreeSet<&String> = words.iter().collect();
        assert_eq!(distinct.len(), words.len());
        for w in &words {
            assert!(!FILLER_LEXICON.contains(&w.as_str()) && !is_cue(w), "{w}");
        }
    }

    #[test]
    fn orthogonal_pool_vocabularies_are_disjoint() {
        let pool = orthogonal_skill_pool(100, 11);
        let mut seen = BTreeSet::new();
        for s in &pool {
            for w in word_set(&format!("{} {}", s.name(), s.description())) {
                assert!(seen.insert(w));
            }
        }
        assert!(SkillHub::from_skills(pool).is_ok());
    }
}
