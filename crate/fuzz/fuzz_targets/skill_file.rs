//! SKILL.md parsing. Accepted files must survive a render and reparse.

#![no_main]

use libfuzzer_sys::fuzz_target;
use skillbench_core::skill_repo::parse_skill_file;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(skill) = parse_skill_file(&text, "fuzz/SKILL.md") {
        let _ = parse_skill_file(&skill.to_markdown(), "fuzz/SKILL.md");
    }
});
