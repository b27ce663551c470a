#![no_main]

use libfuzzer_sys::fuzz_target;
use skillbench_core::skill_repo::extract_references;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let _ = extract_references(&text);
});
