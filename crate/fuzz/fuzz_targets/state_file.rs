#![no_main]

use libfuzzer_sys::fuzz_target;
use relres::io::{parse_state_file, parse_vector_file};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(op) = parse_state_file(text) {
            assert_eq!(op.dims().iter().product::<usize>(), op.dim());
        }
        if let Ok((dims, v)) = parse_vector_file(text) {
            assert_eq!(dims.iter().product::<usize>(), v.len());
        }
    }
});
