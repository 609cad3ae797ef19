#![no_main]
use libfuzzer_sys::fuzz_target;
use ptqm::hilbert::MetricSpace;

fuzz_target!(|data: &[u8]| {
    if let Ok(space) = MetricSpace::from_json(data) {
        let _ = space.invariants();
        let _ = space.to_json();
    }
});
