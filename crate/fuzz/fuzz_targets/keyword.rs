#![no_main]

use libfuzzer_sys::fuzz_target;
use skillbench_core::prompt::KeywordVariant;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(k) = KeywordVariant::parse(&text) {
        let _ = k.forms();
    }
});
