#![no_main]

use libfuzzer_sys::fuzz_target;
use relres::io::parse_split;

// First byte picks the number of tensor factors, the rest is the spec text.
fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let factors = usize::from(n % 12);
    if let Ok(text) = std::str::from_utf8(rest) {
        if let Ok(b) = parse_split(text, factors) {
            assert!(b.a_side().iter().all(|&k| k < factors));
        }
    }
});
