//! Raw model output from the routing phase.

#![no_main]

use libfuzzer_sys::fuzz_target;
use skillbench_core::prompt::parse_selection_json;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let _ = parse_selection_json(&text);
});
