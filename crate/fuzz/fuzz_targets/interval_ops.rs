#![no_main]

use libfuzzer_sys::fuzz_target;
use noisy_minmax::interval::Interval;

fn floats(data: &[u8]) -> Vec<f64> {
    data.chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

fuzz_target!(|data: &[u8]| {
    let v = floats(data);
    let [a, b, c, d, ..] = v[..] else {
        return;
    };
    let (Ok(i), Ok(j)) = (Interval::new(a.min(b), a.max(b)), Interval::new(c.min(d), c.max(d))) else {
        return;
    };
    let (x, y) = (i.lo(), j.hi());
    if let Ok(r) = i.checked_add(j) {
        assert!(r.contains(x + y));
    }
    if let Ok(r) = i.checked_sub(j) {
        assert!(r.contains(x - y));
    }
    if let Ok(r) = i.checked_mul(j) {
        assert!(r.contains(x * y));
    }
    if let Ok(r) = i.checked_div(j) {
        assert!(r.contains(x / y));
    }
    let k = data.first().map_or(0, |b| (b % 9) as u32);
    if let Ok(r) = i.checked_powi(k) {
        assert!(r.lo() <= r.hi());
        if k % 2 == 0 {
            assert!(r.lo() >= 0.0);
        }
    }
});
