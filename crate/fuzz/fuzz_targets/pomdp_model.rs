//! Model files are validated on load; a tiny horizon keeps each run cheap.

#![no_main]

use libfuzzer_sys::fuzz_target;
use skillbench_core::disclosure::{value_iteration_to, PomdpModel};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(m) = PomdpModel::from_json(&text) {
        if m.n_states() <= 4 && m.actions().len() <= 4 {
            let _ = value_iteration_to(&m, 2);
        }
    }
});
