#![no_main]

use libfuzzer_sys::fuzz_target;
use relres::io::parse_partitions;

fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let factors = usize::from(n % 12);
    if let Ok(text) = std::str::from_utf8(rest) {
        if let Ok(parts) = parse_partitions(text, factors) {
            assert!(!parts.is_empty());
        }
    }
});
