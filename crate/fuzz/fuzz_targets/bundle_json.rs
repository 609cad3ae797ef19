#![no_main]
use libfuzzer_sys::fuzz_target;
use ptqm::equivalence::EquivalenceBundle;

fuzz_target!(|data: &[u8]| {
    if let Ok(bundle) = EquivalenceBundle::from_json(data) {
        let _ = bundle.verify(0);
    }
});
