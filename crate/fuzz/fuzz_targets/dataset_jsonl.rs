#![no_main]

use libfuzzer_sys::fuzz_target;
use skillbench_core::harness::parse_dataset_jsonl;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let _ = parse_dataset_jsonl(&text);
});
