//! Table-style CSV rendering of aggregates.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::metrics::{aggregate, Aggregate, MetricsError, SkillMode, TrialRecord};

pub const AGGREGATE_HEADER: &str = "group,cls_acc,cls_f1,skill_acc,avg_gt_min,avg_vram_time,n";

fn fixed3(v: f64) -> String {
    format!("{v:.3}")
}

/// One CSV row with three-decimal numbers; an absent skill accuracy renders as `-`.
pub fn aggregate_row(group: &str, agg: &Aggregate) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        csv_field(group),
        fixed3(agg.cls_acc),
        fixed3(agg.cls_f1),
        agg.skill_acc.map_or_else(|| "-".to_string(), fixed3),
        fixed3(agg.avg_gt_min),
        fixed3(agg.avg_vram_time),
        agg.n
    )
}

/// Quotes a field when it contains a comma, quote or newline.
pub fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    /// One row per input file.
    #[default]
    File,
    Strategy,
    /// A single `all` row.
    None,
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "file" => Ok(GroupBy::File),
            "strategy" => Ok(GroupBy::Strategy),
            "none" | "all" => Ok(GroupBy::None),
            other => Err(format!("unknown grouping `{other}` (expected file, strategy or none)")),
        }
    }
}

/// Groups records from labelled sources and renders one row per group,
/// sorted by group key.
pub fn report_csv(
    sources: &[(String, Vec<TrialRecord>)],
    group_by: GroupBy,
    mode: SkillMode,
) -> Result<String, MetricsError> {
    let mut groups: BTreeMap<String, Vec<TrialRecord>> = BTreeMap::new();
    for (label, records) in sources {
        if records.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        for r in records {
            let key = match group_by {
                GroupBy::File => label.clone(),
                GroupBy::Strategy => r.strategy.to_string(),
                GroupBy::None => "all".to_string(),
            };
            groups.entry(key).or_default().push(r.clone());
        }
    }
    if groups.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for (key, records) in &groups {
        out.push_str(&aggregate_row(key, &aggregate(records, mode)?));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::Strategy;

    fn rec(strategy: Strategy, ok: bool) -> TrialRecord {
        TrialRecord {
            id: "t".into(),
            strategy,
            predicted_label: Some(if ok { "p" } else { "n" }.into()),
            gold_label: "p".into(),
            selected_skills: None,
            gold_skill: None,
            gt_minutes: 0.015,
            vram_gb: 72.0,
            degraded: false,
            routing_violation: false,
            error: None,
        }
    }

    #[test]
    fn row_format() {
        let agg = Aggregate {
            cls_acc: 0.95,
            cls_f1: 0.9504,
            skill_acc: None,
            avg_gt_min: 0.015,
            avg_vram_time: 1.08,
            n: 300,
        };
        assert_eq!(aggregate_row("ASI", &agg), "ASI,0.950,0.950,-,0.015,1.080,300");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
    }

    #[test]
    fn grouping() {
        let a = (
            "a.jsonl".to_string(),
            vec![rec(Strategy::ASI, true), rec(Strategy::DI, false)],
        );
        let b = ("b.jsonl".to_string(), vec![rec(Strategy::FSI, true)]);
        let by_file = report_csv(std::slice::from_ref(&a), GroupBy::File, SkillMode::Lenient).unwrap();
        assert_eq!(by_file.lines().count(), 2);
        let by_strategy = report_csv(&[a, b], GroupBy::Strategy, SkillMode::Lenient).unwrap();
        let keys: Vec<&str> = by_strategy
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap())
            .collect();
        assert_eq!(keys, vec!["ASI", "DI", "FSI"]);
        assert!(report_csv(&[("e".into(), vec![])], GroupBy::File, SkillMode::Lenient).is_err());
    }
}
