//! The pair-list parser must never panic on arbitrary text.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = seed::corpus::parse_pair_list(text);
    }
});
