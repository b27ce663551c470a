#![no_main]

use libfuzzer_sys::fuzz_target;
use skillbench_core::metrics::{aggregate, parse_records_jsonl, SkillMode};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(records) = parse_records_jsonl(&text) {
        let _ = aggregate(&records, SkillMode::Strict);
    }
});
