#![no_main]

use libfuzzer_sys::fuzz_target;
use noisy_minmax::game::MonteCarloReport;
use noisy_minmax::verifier::VerificationReport;

fuzz_target!(|data: &[u8]| {
    if let Ok(r) = serde_json::from_slice::<VerificationReport>(data) {
        let _ = r.render_text();
        let json = serde_json::to_string(&r).unwrap();
        let _: VerificationReport = serde_json::from_str(&json).unwrap();
    }
    if let Ok(r) = serde_json::from_slice::<MonteCarloReport>(data) {
        let _ = r.cdf_at(0);
        let json = serde_json::to_string(&r).unwrap();
        let _: MonteCarloReport = serde_json::from_str(&json).unwrap();
    }
});
