#![no_main]

use libfuzzer_sys::fuzz_target;
use noisy_minmax::interval::{exact_decimal, parse_decimal, Interval};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(x) = parse_decimal(text) {
        assert_eq!(parse_decimal(&exact_decimal(x)).unwrap(), x);
    }
    if let Ok(i) = serde_json::from_str::<Interval>(text) {
        assert!(i.lo() <= i.hi());
        let back: Interval = serde_json::from_str(&serde_json::to_string(&i).unwrap()).unwrap();
        assert_eq!(back, i);
    }
});
