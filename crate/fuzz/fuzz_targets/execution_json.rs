//! Raw model output from the execution phase, including the recovery paths.

#![no_main]

use libfuzzer_sys::fuzz_target;
use skillbench_core::prompt::parse_execution_json;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let _ = parse_execution_json(&text);
});
