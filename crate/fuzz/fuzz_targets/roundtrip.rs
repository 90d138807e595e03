#![no_main]

use libfuzzer_sys::fuzz_target;
use relres::io::{parse_state_file, write_state_file};

// Anything that parses must survive a write and re-parse unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(op) = parse_state_file(text) else { return };
    let again = parse_state_file(&write_state_file(&op)).expect("written file parses");
    assert_eq!(op.dims(), again.dims());
    assert_eq!(op.matrix(), again.matrix());
});
