//! The run-settings parser must never panic on arbitrary config text.

#![no_main]

use libfuzzer_sys::fuzz_target;
use seed::config::RunSettings;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = RunSettings::parse(text);
    }
});
