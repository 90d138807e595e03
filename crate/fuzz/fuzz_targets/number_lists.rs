#![no_main]

use libfuzzer_sys::fuzz_target;
use relres::io::{parse_dims, parse_reals};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(dims) = parse_dims(text) {
            assert!(dims.iter().all(|&d| d > 0));
        }
        if let Ok(xs) = parse_reals(text) {
            assert!(xs.iter().all(|x| x.is_finite()));
        }
    }
});
