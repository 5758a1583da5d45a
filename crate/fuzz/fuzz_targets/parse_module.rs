//! The IR parser must never panic, in either mode, on arbitrary text.

#![no_main]

use libfuzzer_sys::fuzz_target;
use seed::ir::{parse_module, ParseOptions};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        for strict in [false, true] {
            let _ = parse_module(text, ParseOptions { strict });
        }
    }
});
