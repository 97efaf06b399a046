#![no_main]

use libfuzzer_sys::fuzz_target;
use noisy_minmax::cdf::{psi_step, Cdf};

fuzz_target!(|data: &[u8]| {
    let Ok(f) = serde_json::from_slice::<Cdf>(data) else {
        return;
    };
    let back: Cdf = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
    assert_eq!(back, f);
    let total: f64 = f.pmf().iter().map(|p| p.1).sum();
    assert!(total <= 1.0 + 1e-9);
    if f.len() < 1000 {
        let g = psi_step(&f, 3);
        assert!(g.values().windows(2).all(|w| w[0] <= w[1]));
    }
});
