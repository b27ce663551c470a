//! Writes a synthetic routing dataset for a skill directory as JSONL.
//!
//! cargo run -p skillbench-core --example synthetic_dataset -- data/demo-skills 40 7 > tasks.jsonl

use std::path::PathBuf;
use std::process::ExitCode;

use skillbench_core::harness::{generate_synthetic_tasks, write_dataset_jsonl};
use skillbench_core::skill_repo::load_hub;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = PathBuf::from(args.first().map_or("data/demo-skills", String::as_str));
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);

    let hub = match load_hub(&dir) {
        Ok(hub) if !hub.is_empty() => hub,
        Ok(_) => {
            eprintln!("{}: no skills found", dir.display());
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("{}: {e}", dir.display());
            return ExitCode::from(1);
        }
    };
    print!("{}", write_dataset_jsonl(&generate_synthetic_tasks(&hub, n, seed)));
    ExitCode::SUCCESS
}
