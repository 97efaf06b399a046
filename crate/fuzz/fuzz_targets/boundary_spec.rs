#![no_main]

use libfuzzer_sys::fuzz_target;
use noisy_minmax::cdf::BoundarySpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = text.parse::<BoundarySpec>() {
        assert!(spec.validate().is_ok());
        assert_eq!(spec.to_string().parse::<BoundarySpec>().unwrap(), spec);
        assert!(spec.to_cdf(4).is_ok());
    }
    if let Ok(spec) = serde_json::from_str::<BoundarySpec>(text) {
        let _ = spec.to_cdf(4);
    }
});
