//! Independent reference implementations used to check the library.
//!
//! Nothing here calls into the code under test except for plain data
//! accessors, so agreement means two separate derivations match.

#![allow(dead_code)]

use std::collections::HashSet;
use std::path::PathBuf;

use rand::Rng;
use skillbench_core::skill_repo::{Skill, SkillDescriptor};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn demo_skills_dir() -> PathBuf {
    repo_root().join("data/demo-skills")
}

pub fn fixture(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(path)
}

pub fn skill(name: &str, description: &str, body: &str) -> Skill {
    Skill::new(
        SkillDescriptor {
            name: name.to_string(),
            description: description.to_string(),
            source_path: format!("{name}/SKILL.md"),
        },
        body,
    )
}

// ---- routing ----

fn words(text: &str) -> HashSet<String> {
    let mut out = HashSet::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            out.insert(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.insert(current);
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Word-overlap routing: highest Jaccard(task, name + description), ties to
/// the smallest name, `None` when nothing overlaps.
pub fn jaccard_route(task: &str, skills: &[(String, String)]) -> Option<String> {
    let t = words(task);
    // (numerator, denominator) in lowest terms, compared as rationals.
    let mut best: Option<(u64, u64, &String)> = None;
    for (name, description) in skills {
        let s = words(&format!("{name} {description}"));
        let inter = t.intersection(&s).count() as u64;
        let union = t.union(&s).count() as u64;
        if inter == 0 {
            continue;
        }
        let g = gcd(inter, union);
        let (num, den) = (inter / g, union / g);
        best = match best {
            None => Some((num, den, name)),
            Some((bn, bd, bname)) => {
                let lhs = num as u128 * bd as u128;
                let rhs = bn as u128 * den as u128;
                if lhs > rhs || (lhs == rhs && name < bname) {
                    Some((num, den, name))
                } else {
                    Some((bn, bd, bname))
                }
            }
        };
    }
    best.map(|(_, _, n)| n.clone())
}

// ---- POMDP ----

/// A POMDP as bare arrays: reveal actions `(T[s][s'], O[s'][o])`, execute
/// rewards `R[a][s]`, one reveal cost.
#[derive(Debug, Clone)]
pub struct RawPomdp {
    pub reveals: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)>,
    pub rewards: Vec<Vec<f64>>,
    pub cost: f64,
}

impl RawPomdp {
    pub fn toy(p: f64, cost: f64) -> Self {
        RawPomdp {
            reveals: vec![(
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![p, 1.0 - p], vec![1.0 - p, p]],
            )],
            rewards: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            cost,
        }
    }
}

/// Enumerates `P(s, s', o | b, a)` and returns `(P(o), P(s' | o))`.
pub fn joint_posterior(t: &[Vec<f64>], o: &[Vec<f64>], b: &[f64], obs: usize) -> (f64, Vec<f64>) {
    let n = b.len();
    let mut table = vec![vec![0.0; n]; n];
    for s in 0..n {
        for s2 in 0..n {
            table[s][s2] = b[s] * t[s][s2] * o[s2][obs];
        }
    }
    let marginal: Vec<f64> = (0..n).map(|s2| (0..n).map(|s| table[s][s2]).sum()).collect();
    let z: f64 = marginal.iter().sum();
    (z, marginal.iter().map(|m| if z > 0.0 { m / z } else { 0.0 }).collect())
}

/// Depth-limited expectimax: execute now, or pay for a reveal and recurse.
pub fn expectimax(m: &RawPomdp, b: &[f64], depth: usize) -> f64 {
    let execute = m
        .rewards
        .iter()
        .map(|r| r.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    if depth == 0 {
        return execute;
    }
    let mut best = execute;
    for (t, o) in &m.reveals {
        let n_obs = o[0].len();
        let mut v = -m.cost;
        for obs in 0..n_obs {
            let (z, post) = joint_posterior(t, o, b, obs);
            if z > 0.0 {
                v += z * expectimax(m, &post, depth - 1);
            }
        }
        best = best.max(v);
    }
    best
}

/// Random stochastic row of width `n`.
pub fn random_row<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| random_row(rng, cols)).collect()
}

/// Random belief, occasionally with zero entries.
pub fn random_belief<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.1) {
                0.0
            } else {
                rng.gen_range(0.0..1.0)
            }
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    if sum == 0.0 {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        return v;
    }
    raw.into_iter().map(|x| x / sum).collect()
}

// ---- metrics ----

/// Per-class F1 averaged over every class seen in gold or predictions.
pub fn macro_f1_oracle(gold: &[&str], pred: &[Option<&str>]) -> f64 {
    let mut classes: Vec<&str> = gold.iter().copied().chain(pred.iter().flatten().copied()).collect();
    classes.sort();
    classes.dedup();
    let mut total = 0.0;
    for c in &classes {
        let tp = gold
            .iter()
            .zip(pred)
            .filter(|(g, p)| *g == c && p.as_deref() == Some(c))
            .count() as f64;
        let fp = gold
            .iter()
            .zip(pred)
            .filter(|(g, p)| *g != c && p.as_deref() == Some(c))
            .count() as f64;
        let fn_ = gold
            .iter()
            .zip(pred)
            .filter(|(g, p)| *g == c && p.as_deref() != Some(c))
            .count() as f64;
        let denom = 2.0 * tp + fp + fn_;
        total += if denom == 0.0 { 0.0 } else { 2.0 * tp / denom };
    }
    total / classes.len() as f64
}

// ---- decay fit ----

/// Best `(lambda, rss)` over a dense λ grid, with `(a, c)` on a fine grid
/// of the constraint triangle. Slow and crude on purpose.
pub fn brute_force_decay(points: &[(f64, f64)], lambdas: &[f64], ac_steps: usize) -> (f64, f64, f64, f64) {
    let mut best = (0.0, 0.0, 0.0, f64::INFINITY);
    for &l in lambdas {
        let e: Vec<f64> = points.iter().map(|(n, _)| (-l * (n - 5.0)).exp()).collect();
        for i in 0..=ac_steps {
            let a = i as f64 / ac_steps as f64;
            for j in 0..=i {
                let c = j as f64 / ac_steps as f64;
                let rss: f64 = points
                    .iter()
                    .zip(&e)
                    .map(|((_, y), ei)| (c + (a - c) * ei - y).powi(2))
                    .sum();
                if rss < best.3 {
                    best = (a, c, l, rss);
                }
            }
        }
    }
    best
}

// ---- golden run ----

pub struct GoldenRun {
    pub records: String,
    pub transcripts: String,
    pub aggregate_csv: String,
}

/// Runs the checked-in ASI fixture with the scripted mock and returns the
/// files it wrote.
pub fn run_golden_fixture() -> GoldenRun {
    use skillbench_core::backend::{BackendConfig, BackendKind, MockBackend, ScriptedResponses};
    use skillbench_core::harness::{run_experiment_to_dir, ExperimentSpec};
    use skillbench_core::prompt::Strategy;

    let dir = fixture("golden");
    let script = ScriptedResponses::from_json(&std::fs::read_to_string(dir.join("script.json")).unwrap()).unwrap();
    let mut config = BackendConfig::new(BackendKind::Mock);
    config.model_id = "scripted".into();
    config.vram_gb = 72.0;
    let backend = MockBackend::new(config.clone(), script);
    let mut spec = ExperimentSpec::new(Strategy::ASI, config);
    spec.dataset_path = dir.join("tasks.jsonl");
    spec.skills_dir = demo_skills_dir();
    spec.n_distractors = 2;
    spec.seed = 42;
    let out = tempfile::tempdir().unwrap();
    run_experiment_to_dir(&spec, &backend, out.path()).unwrap();
    let read = |name: &str| std::fs::read_to_string(out.path().join(name)).unwrap();
    GoldenRun {
        records: read("records.jsonl"),
        transcripts: read("transcripts.jsonl"),
        aggregate_csv: read("aggregate.csv"),
    }
}

/// Compares against `tests/fixtures/golden/<name>`; with
/// `SKILLBENCH_UPDATE_GOLDEN=1` the file is rewritten instead.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = fixture("golden").join(name);
    if std::env::var_os("SKILLBENCH_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        let line = expected
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| expected.lines().count().min(actual.lines().count()));
        Err(format!("{name} differs from golden at line {}", line + 1))
    }
}
