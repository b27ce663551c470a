//! Per-trial records and the five reported metrics: classification accuracy,
//! classification F1, skill-routing accuracy, mean generation time and mean
//! VRAM-time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::Strategy;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no records to aggregate")]
    EmptyInput,
    #[error("record {0}: {1}")]
    InvalidRecord(String, String),
    #[error("records file line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Outcome of one task under one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub id: String,
    pub strategy: Strategy,
    pub predicted_label: Option<String>,
    pub gold_label: String,
    pub selected_skills: Option<Vec<String>>,
    pub gold_skill: Option<String>,
    pub gt_minutes: f64,
    pub vram_gb: f64,
    /// The execution answer was recovered from non-JSON output, or a phase failed.
    pub degraded: bool,
    /// The model named a skill that is not in the trial hub.
    #[serde(default)]
    pub routing_violation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let bad = |why: &str| Err(MetricsError::InvalidRecord(self.id.clone(), why.to_string()));
        if !(self.gt_minutes.is_finite() && self.gt_minutes >= 0.0) {
            return bad("gt_minutes must be finite and >= 0");
        }
        if !(self.vram_gb.is_finite() && self.vram_gb >= 0.0) {
            return bad("vram_gb must be finite and >= 0");
        }
        Ok(())
    }

    pub fn vram_time(&self) -> f64 {
        vram_time(self.vram_gb, self.gt_minutes)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Parses a JSONL records file; blank lines are skipped.
pub fn parse_records_jsonl(text: &str) -> Result<Vec<TrialRecord>, MetricsError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: TrialRecord = serde_json::from_str(line).map_err(|e| MetricsError::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkillMode {
    /// Hit when the gold skill is among the selected skills.
    #[default]
    Lenient,
    /// Hit only when exactly the gold skill was selected.
    Strict,
}

impl FromStr for SkillMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lenient" => Ok(SkillMode::Lenient),
            "strict" => Ok(SkillMode::Strict),
            other => Err(format!("unknown skill mode `{other}` (expected lenient or strict)")),
        }
    }
}

impl fmt::Display for SkillMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SkillMode::Lenient => "lenient",
            SkillMode::Strict => "strict",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Average {
    #[default]
    Macro,
    Micro,
}

/// Exact-match accuracy; missing predictions count as wrong.
pub fn classification_accuracy(records: &[TrialRecord]) -> Result<f64, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let hits = records
        .iter()
        .filter(|r| r.predicted_label.as_deref() == Some(r.gold_label.as_str()))
        .count();
    Ok(hits as f64 / records.len() as f64)
}

#[derive(Default, Clone, Copy)]
struct ClassCounts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

fn class_counts(records: &[TrialRecord]) -> BTreeMap<&str, ClassCounts> {
    let mut counts: BTreeMap<&str, ClassCounts> = BTreeMap::new();
    for r in records {
        let gold = r.gold_label.as_str();
        match r.predicted_label.as_deref() {
            Some(pred) if pred == gold => counts.entry(gold).or_default().tp += 1,
            Some(pred) => {
                counts.entry(pred).or_default().fp += 1;
                counts.entry(gold).or_default().fn_ += 1;
            }
            None => counts.entry(gold).or_default().fn_ += 1,
        }
    }
    counts
}

/// F1 over the union of gold and predicted classes.
///
/// Macro averages per-class `2TP / (2TP + FP + FN)`; micro pools the counts.
pub fn f1_score(records: &[TrialRecord], average: F1Average) -> Result<f64, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let counts = class_counts(records);
    let f1 = |c: ClassCounts| {
        let denom = 2 * c.tp + c.fp + c.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * c.tp) as f64 / denom as f64
        }
    };
    Ok(match average {
        F1Average::Macro => {
            let per_class: Vec<f64> = counts.values().copied().map(f1).collect();
            per_class.iter().sum::<f64>() / per_class.len() as f64
        }
        F1Average::Micro => {
            let pooled = counts.values().fold(ClassCounts::default(), |acc, c| ClassCounts {
                tp: acc.tp + c.tp,
                fp: acc.fp + c.fp,
                fn_: acc.fn_ + c.fn_,
            });
            f1(pooled)
        }
    })
}

pub fn macro_f1(records: &[TrialRecord]) -> Result<f64, MetricsError> {
    f1_score(records, F1Average::Macro)
}

fn skill_hit(r: &TrialRecord, gold: &str, mode: SkillMode) -> bool {
    let selected = r.selected_skills.as_deref().unwrap_or(&[]);
    match mode {
        SkillMode::Lenient => selected.iter().any(|s| s == gold),
        SkillMode::Strict => selected.len() == 1 && selected[0] == gold,
    }
}

/// Routing accuracy over records that carry a gold skill.
pub fn skill_accuracy(records: &[TrialRecord], mode: SkillMode) -> Result<f64, MetricsError> {
    let routed: Vec<(&TrialRecord, &str)> = records
        .iter()
        .filter_map(|r| r.gold_skill.as_deref().map(|g| (r, g)))
        .collect();
    if routed.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let hits = routed.iter().filter(|(r, g)| skill_hit(r, g, mode)).count();
    Ok(hits as f64 / routed.len() as f64)
}

/// GPU-memory residency cost of one task: VRAM (GB) × time (min).
pub fn vram_time(vram_gb: f64, gt_minutes: f64) -> f64 {
    vram_gb * gt_minutes
}

/// Order-independent mean: values are sorted before a compensated sum.
fn stable_mean(mut values: Vec<f64>) -> f64 {
    let n = values.len() as f64;
    values.sort_by(f64::total_cmp);
    let mut sum = 0.0_f64;
    let mut compensation = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    (sum + compensation) / n
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub cls_acc: f64,
    pub cls_f1: f64,
    /// Absent when no record carries a gold skill (DI and FSI runs).
    pub skill_acc: Option<f64>,
    pub avg_gt_min: f64,
    pub avg_vram_time: f64,
    pub n: usize,
}

pub fn aggregate(records: &[TrialRecord], mode: SkillMode) -> Result<Aggregate, MetricsError> {
    aggregate_with(records, mode, F1Average::Macro)
}

pub fn aggregate_with(records: &[TrialRecord], mode: SkillMode, average: F1Average) -> Result<Aggregate, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    for r in records {
        r.validate()?;
    }
    let skill_acc = match skill_accuracy(records, mode) {
        Ok(v) => Some(v),
        Err(MetricsError::EmptyInput) => None,
        Err(e) => return Err(e),
    };
    Ok(Aggregate {
        cls_acc: classification_accuracy(records)?,
        cls_f1: f1_score(records, average)?,
        skill_acc,
        avg_gt_min: stable_mean(records.iter().map(|r| r.gt_minutes).collect()),
        avg_vram_time: stable_mean(records.iter().map(TrialRecord::vram_time).collect()),
        n: records.len(),
    })
}

/// Distinct gold labels, sorted.
pub fn label_set(records: &[TrialRecord]) -> BTreeSet<&str> {
    records.iter().map(|r| r.gold_label.as_str()).collect()
}
