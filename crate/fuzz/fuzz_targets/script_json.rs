#![no_main]

use libfuzzer_sys::fuzz_target;
use skillbench_core::backend::ScriptedResponses;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let _ = ScriptedResponses::from_json(&text);
});
