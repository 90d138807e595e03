#![no_main]

use libfuzzer_sys::fuzz_target;
use relres::io::parse_sweep;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = parse_sweep(text) {
            assert!(!s.values.is_empty());
            assert!(s.values.iter().all(|v| v.is_finite()));
        }
    }
});
