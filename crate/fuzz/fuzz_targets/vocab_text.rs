//! The vocabulary loader must never panic on arbitrary text.

#![no_main]

use libfuzzer_sys::fuzz_target;
use seed::vocab::Vocabulary;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = Vocabulary::from_text(text);
    }
});
