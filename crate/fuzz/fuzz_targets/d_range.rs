#![no_main]

use libfuzzer_sys::fuzz_target;
use noisy_minmax::cli::parse_d_range;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(ds) = parse_d_range(text) {
        assert!(!ds.is_empty());
        assert!(ds.iter().all(|&d| d >= 2));
    }
});
