#![no_main]
//! Run configurations must parse or be rejected, never panic.

use libfuzzer_sys::fuzz_target;
use ptqm_cli::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(config) = RunConfig::from_toml_str(s) {
            let _ = config.validate();
        }
    }
});
