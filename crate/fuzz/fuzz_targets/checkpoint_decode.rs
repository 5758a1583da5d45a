//! The checkpoint decoder must reject arbitrary bytes cleanly: no panics,
//! no unbounded allocations.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = seed::checkpoint::decode(data);
});
