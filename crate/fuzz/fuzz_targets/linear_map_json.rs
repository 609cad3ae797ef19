#![no_main]
use libfuzzer_sys::fuzz_target;
use ptqm::hilbert::{check_unitary, LinearMap};

fuzz_target!(|data: &[u8]| {
    if let Ok(map) = LinearMap::from_json(data) {
        let _ = check_unitary(&map, 1e-8, 0);
    }
});
