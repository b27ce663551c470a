//! Experiment orchestration: trials, full runs, the hub-size sweep and the
//! keyword ablation.

mod dataset;
mod fit;
mod synthetic;

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendConfig, BackendError, ChatBackend};
use crate::metrics::{aggregate, Aggregate, MetricsError, SkillMode, TrialRecord};
use crate::prompt::{
    parse_execution_json, parse_selection_json, render_execution_prompt, render_selection_prompt,
    render_strategy_prompt, trim_history, ChatMessage, KeywordVariant, Strategy, Transcript,
};
use crate::report::{aggregate_row, AGGREGATE_HEADER};
use crate::rng::task_seed;
use crate::skill_repo::{build_trial_hub, load_hub, Skill, SkillError, SkillHub};

pub use dataset::{dataset_labels, extract_label, load_dataset, parse_dataset_jsonl, write_dataset_jsonl, Task};
pub use fit::{constant_fit_rss, fit_decay_curve, fit_decay_curve_with_n0, DecayFit, FitError, DEFAULT_N0};
pub use synthetic::{generate_synthetic_tasks, orthogonal_skill_pool, pseudo_word, FILLER_LEXICON, SYNTHETIC_LABELS};

pub const DEFAULT_DISTRACTORS: usize = 5;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset line {line}: {reason}")]
    Dataset { line: usize, reason: String },
    #[error("task `{task}` names unknown gold skill `{skill}`")]
    UnknownGoldSkill { task: String, skill: String },
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Skill(#[from] SkillError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

fn io_error(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub strategy: Strategy,
    pub dataset_path: PathBuf,
    pub skills_dir: PathBuf,
    pub backend: BackendConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_distractors")]
    pub n_distractors: usize,
    #[serde(default)]
    pub keyword: KeywordVariant,
    #[serde(default)]
    pub skill_mode: SkillMode,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_distractors() -> usize {
    DEFAULT_DISTRACTORS
}

fn default_parallelism() -> usize {
    1
}

impl ExperimentSpec {
    pub fn new(strategy: Strategy, backend: BackendConfig) -> Self {
        Self {
            strategy,
            dataset_path: PathBuf::new(),
            skills_dir: PathBuf::new(),
            backend,
            seed: 0,
            n_distractors: DEFAULT_DISTRACTORS,
            keyword: KeywordVariant::Skill,
            skill_mode: SkillMode::Lenient,
            parallelism: 1,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.parallelism == 0 {
            return Err(HarnessError::InvalidSpec("parallelism must be >= 1".into()));
        }
        self.backend.validate()?;
        Ok(())
    }
}

/// One backend call as it appears in the transcript log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub id: String,
    pub phase: Phase,
    pub messages: Transcript,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Direct,
    Selection,
    Execution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub log: Vec<TranscriptEntry>,
}

/// Everything a trial needs besides the task itself.
pub struct TrialContext<'a> {
    pub spec: &'a ExperimentSpec,
    pub backend: &'a dyn ChatBackend,
    /// Every skill available; the gold skill and distractors come from here.
    pub pool: &'a [Skill],
    /// Labels the execution answer is mapped onto.
    pub labels: &'a BTreeSet<String>,
}

struct Calls<'a> {
    task_id: &'a str,
    backend: &'a dyn ChatBackend,
    seconds: f64,
    log: Vec<TranscriptEntry>,
}

impl Calls<'_> {
    fn complete(&mut self, phase: Phase, t: Transcript) -> Result<String, BackendError> {
        let result = self.backend.complete(&t);
        let (response, error) = match &result {
            Ok(r) => {
                self.seconds += r.latency;
                (Some(r.text.clone()), None)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        self.log.push(TranscriptEntry {
            id: self.task_id.to_string(),
            phase,
            messages: t,
            response,
            error,
        });
        result.map(|r| r.text)
    }
}

/// Runs one task. Backend and parse failures end up in the record, never
/// in the return value.
pub fn run_trial(ctx: &TrialContext<'_>, task: &Task) -> TrialOutcome {
    let spec = ctx.spec;
    let routes = spec.strategy.routes();
    let mut record = TrialRecord {
        id: task.id.clone(),
        strategy: spec.strategy,
        predicted_label: None,
        gold_label: task.label.clone(),
        selected_skills: routes.then(Vec::new),
        gold_skill: routes.then(|| task.skill.clone()),
        gt_minutes: 0.0,
        vram_gb: ctx.backend.config().vram_gb,
        degraded: false,
        routing_violation: false,
        error: None,
    };
    let mut calls = Calls {
        task_id: &task.id,
        backend: ctx.backend,
        seconds: 0.0,
        log: Vec::new(),
    };

    let result = trial_body(ctx, task, &mut record, &mut calls);
    if let Err(e) = result {
        record.degraded = true;
        record.error = Some(e);
    }
    record.gt_minutes = calls.seconds / 60.0;
    TrialOutcome { record, log: calls.log }
}

fn trial_hub(ctx: &TrialContext<'_>, task: &Task) -> Result<SkillHub, String> {
    let gold = ctx
        .pool
        .iter()
        .find(|s| s.name() == task.skill)
        .ok_or_else(|| format!("unknown gold skill `{}`", task.skill))?;
    build_trial_hub(
        gold,
        ctx.pool,
        ctx.spec.n_distractors,
        task_seed(ctx.spec.seed, &task.id),
    )
    .map_err(|e| e.to_string())
}

fn trial_body(
    ctx: &TrialContext<'_>,
    task: &Task,
    record: &mut TrialRecord,
    calls: &mut Calls<'_>,
) -> Result<(), String> {
    let spec = ctx.spec;
    let hub = trial_hub(ctx, task)?;
    let execution = match spec.strategy {
        Strategy::DI | Strategy::FSI => {
            let t =
                render_strategy_prompt(spec.strategy, &hub, &task.input, &spec.keyword).map_err(|e| e.to_string())?;
            calls.complete(Phase::Direct, t).map_err(|e| e.to_string())?
        }
        Strategy::ASI | Strategy::ASIH => {
            let t = render_selection_prompt(&hub, &task.input, &spec.keyword).map_err(|e| e.to_string())?;
            let raw_selection = calls.complete(Phase::Selection, t).map_err(|e| e.to_string())?;
            let selection = parse_selection_json(&raw_selection).map_err(|e| e.to_string())?;
            record.routing_violation = selection.skills.iter().any(|s| !hub.contains(s));
            let chosen: Vec<&Skill> = selection.skills.iter().filter_map(|s| hub.get(s)).collect();
            record.selected_skills = Some(selection.skills.clone());
            if chosen.is_empty() {
                return Ok(());
            }
            let mut t = render_execution_prompt(&chosen, &task.input, &spec.keyword).map_err(|e| e.to_string())?;
            if spec.strategy == Strategy::ASIH {
                t = with_history(t, task, &raw_selection);
            }
            calls.complete(Phase::Execution, t).map_err(|e| e.to_string())?
        }
    };
    let parsed = parse_execution_json(&execution).map_err(|e| e.to_string())?;
    record.degraded = parsed.degraded;
    record.predicted_label = extract_label(&parsed.response.message, ctx.labels);
    Ok(())
}

/// `[system, history.., user(task), assistant(selection), user(task)]`, trimmed.
fn with_history(execution: Transcript, task: &Task, raw_selection: &str) -> Transcript {
    let mut messages = execution.messages().to_vec();
    let last = messages.pop().expect("execution prompt ends with the task");
    messages.extend(task.history.iter().cloned());
    messages.push(ChatMessage::user(task.input.clone()));
    messages.push(ChatMessage::assistant(raw_selection));
    messages.push(last);
    let full = Transcript::from_messages(messages).expect("history carries no system message");
    trim_history(&full)
}

/// Where [`run_tasks`] persists its output as it goes.
pub struct RunSinks {
    pub records: Option<Box<dyn Write + Send>>,
    pub transcripts: Option<Box<dyn Write + Send>>,
}

impl RunSinks {
    pub fn none() -> Self {
        Self {
            records: None,
            transcripts: None,
        }
    }

    fn append(&mut self, outcome: &TrialOutcome) -> std::io::Result<()> {
        if let Some(w) = self.records.as_mut() {
            writeln!(w, "{}", outcome.record.to_json_line())?;
            w.flush()?;
        }
        if let Some(w) = self.transcripts.as_mut() {
            for entry in &outcome.log {
                writeln!(w, "{}", serde_json::to_string(entry).expect("entry serializes"))?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// In dataset order, whatever the completion order was.
    pub records: Vec<TrialRecord>,
    pub aggregate: Aggregate,
}

fn check_tasks(spec: &ExperimentSpec, tasks: &[Task], pool: &[Skill]) -> Result<(), HarnessError> {
    if tasks.is_empty() {
        return Err(HarnessError::EmptyDataset);
    }
    let names: BTreeSet<&str> = pool.iter().map(Skill::name).collect();
    if let Some(t) = tasks.iter().find(|t| !names.contains(t.skill.as_str())) {
        return Err(HarnessError::UnknownGoldSkill {
            task: t.id.clone(),
            skill: t.skill.clone(),
        });
    }
    let have = names.len().saturating_sub(1);
    if have < spec.n_distractors {
        return Err(SkillError::InsufficientPool {
            have,
            need: spec.n_distractors,
        }
        .into());
    }
    Ok(())
}

/// Runs every task with up to `spec.parallelism` trials in flight. Each
/// finished trial is appended to `sinks` under one lock.
pub fn run_tasks(
    spec: &ExperimentSpec,
    backend: &dyn ChatBackend,
    tasks: &[Task],
    pool: &[Skill],
    sinks: RunSinks,
) -> Result<RunOutput, HarnessError> {
    spec.validate()?;
    check_tasks(spec, tasks, pool)?;
    let labels = dataset_labels(tasks);
    let ctx = TrialContext {
        spec,
        backend,
        pool,
        labels: &labels,
    };

    let next = AtomicUsize::new(0);
    let sinks = Mutex::new(sinks);
    let io_failure: Mutex<Option<std::io::Error>> = Mutex::new(None);
    let finished: Mutex<Vec<(usize, TrialRecord)>> = Mutex::new(Vec::with_capacity(tasks.len()));
    let workers = spec.parallelism.min(tasks.len());
    let work = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= tasks.len() {
            break;
        }
        let outcome = run_trial(&ctx, &tasks[i]);
        {
            let mut sinks = sinks.lock().expect("sink lock");
            if let Err(e) = sinks.append(&outcome) {
                io_failure.lock().expect("error lock").get_or_insert(e);
            }
        }
        finished.lock().expect("record lock").push((i, outcome.record));
    };
    if workers <= 1 {
        work();
    } else {
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(work);
            }
        });
    }
    if let Some(e) = io_failure.into_inner().expect("error lock") {
        return Err(HarnessError::Io {
            path: "output".into(),
            reason: e.to_string(),
        });
    }

    let mut finished = finished.into_inner().expect("record lock");
    finished.sort_by_key(|(i, _)| *i);
    let records: Vec<TrialRecord> = finished.into_iter().map(|(_, r)| r).collect();
    let aggregate = aggregate(&records, spec.skill_mode)?;
    Ok(RunOutput { records, aggregate })
}

fn load_inputs(spec: &ExperimentSpec) -> Result<(Vec<Task>, Vec<Skill>), HarnessError> {
    let tasks = load_dataset(&spec.dataset_path)?;
    let pool: Vec<Skill> = load_hub(&spec.skills_dir)?.iter().cloned().collect();
    Ok((tasks, pool))
}

/// Loads the dataset and skills named by `spec` and runs every task.
pub fn run_experiment(spec: &ExperimentSpec, backend: &dyn ChatBackend) -> Result<RunOutput, HarnessError> {
    let (tasks, pool) = load_inputs(spec)?;
    run_tasks(spec, backend, &tasks, &pool, RunSinks::none())
}

pub const RECORDS_FILE: &str = "records.jsonl";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";

/// [`run_experiment`], writing `records.jsonl` and `transcripts.jsonl`
/// incrementally and `aggregate.csv` at the end.
pub fn run_experiment_to_dir(
    spec: &ExperimentSpec,
    backend: &dyn ChatBackend,
    out_dir: &Path,
) -> Result<RunOutput, HarnessError> {
    let (tasks, pool) = load_inputs(spec)?;
    fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let open = |name: &str| -> Result<Box<dyn Write + Send>, HarnessError> {
        let path = out_dir.join(name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        Ok(Box::new(BufWriter::new(file)))
    };
    let sinks = RunSinks {
        records: Some(open(RECORDS_FILE)?),
        transcripts: Some(open(TRANSCRIPTS_FILE)?),
    };
    let output = run_tasks(spec, backend, &tasks, &pool, sinks)?;
    let path = out_dir.join(AGGREGATE_FILE);
    let csv = format!(
        "{AGGREGATE_HEADER}\n{}\n",
        aggregate_row(spec.strategy.as_str(), &output.aggregate)
    );
    fs::write(&path, csv).map_err(|e| io_error(&path, e))?;
    Ok(output)
}

/// Selection-only routing accuracy for each hub size `N` in `counts`
/// (`N - 1` distractors per trial).
///
/// Trials use the same per-task seeds at every `N`, so a larger hub always
/// contains the distractors of a smaller one.
pub fn sweep_skill_count(
    spec: &ExperimentSpec,
    backend: &dyn ChatBackend,
    counts: &[usize],
    tasks: &[Task],
    pool: &[Skill],
) -> Result<Vec<(usize, f64)>, HarnessError> {
    spec.validate()?;
    if counts.is_empty() || counts.contains(&0) {
        return Err(HarnessError::InvalidSpec("counts must be non-empty and >= 1".into()));
    }
    let max = *counts.iter().max().expect("non-empty");
    check_tasks(
        &ExperimentSpec {
            n_distractors: max - 1,
            ..spec.clone()
        },
        tasks,
        pool,
    )?;

    let by_name: HashMap<&str, &Skill> = pool.iter().map(|s| (s.name(), s)).collect();
    let mut out = Vec::with_capacity(counts.len());
    for &n in counts {
        let mut records = Vec::with_capacity(tasks.len());
        for task in tasks {
            let gold = by_name[task.skill.as_str()];
            let hub = build_trial_hub(gold, pool, n - 1, task_seed(spec.seed, &task.id))?;
            let mut record = TrialRecord {
                id: task.id.clone(),
                strategy: Strategy::ASI,
                predicted_label: None,
                gold_label: task.label.clone(),
                selected_skills: Some(Vec::new()),
                gold_skill: Some(task.skill.clone()),
                gt_minutes: 0.0,
                vram_gb: 0.0,
                degraded: false,
                routing_violation: false,
                error: None,
            };
            let selected = render_selection_prompt(&hub, &task.input, &spec.keyword)
                .map_err(|e| e.to_string())
                .and_then(|t| backend.complete(&t).map_err(|e| e.to_string()))
                .and_then(|r| parse_selection_json(&r.text).map_err(|e| e.to_string()));
            match selected {
                Ok(sel) => {
                    record.routing_violation = sel.skills.iter().any(|s| !hub.contains(s));
                    record.selected_skills = Some(sel.skills);
                }
                Err(e) => {
                    record.degraded = true;
                    record.error = Some(e);
                }
            }
            records.push(record);
        }
        out.push((n, crate::metrics::skill_accuracy(&records, spec.skill_mode)?));
    }
    Ok(out)
}

/// Runs the same experiment once per keyword, changing nothing else.
pub fn synonym_sweep(
    spec: &ExperimentSpec,
    backend: &dyn ChatBackend,
    tasks: &[Task],
    pool: &[Skill],
    keywords: &[KeywordVariant],
) -> Result<Vec<(KeywordVariant, Aggregate)>, HarnessError> {
    if keywords.is_empty() {
        return Err(HarnessError::InvalidSpec("keyword list is empty".into()));
    }
    keywords
        .iter()
        .map(|kw| {
            let variant = ExperimentSpec {
                keyword: kw.clone(),
                ..spec.clone()
            };
            run_tasks(&variant, backend, tasks, pool, RunSinks::none()).map(|out| (kw.clone(), out.aggregate))
        })
        .collect()
}

/// `N,skill_acc` CSV for a sweep.
pub fn sweep_csv(points: &[(usize, f64)]) -> String {
    let mut out = String::from("N,skill_acc\n");
    for (n, acc) in points {
        out.push_str(&format!("{n},{acc:.3}\n"));
    }
    out
}
