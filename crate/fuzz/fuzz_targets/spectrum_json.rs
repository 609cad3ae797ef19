#![no_main]
use libfuzzer_sys::fuzz_target;
use ptqm::spectrum::Spectrum;

fuzz_target!(|data: &[u8]| {
    if let Ok(spectrum) = Spectrum::from_json(data) {
        let _ = spectrum.invariant_violations(1e-8, 1e-8);
        let _ = spectrum.summary_table();
    }
});
