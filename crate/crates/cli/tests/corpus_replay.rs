//! Replays the fuzz corpus (and deterministic mutations of it) through the same
//! entry points the fuzz targets exercise, on the stable toolchain.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use ptqm::equivalence::EquivalenceBundle;
use ptqm::hilbert::{check_unitary, LinearMap, MetricSpace};
use ptqm::spectrum::Spectrum;
use ptqm_cli::config::RunConfig;

fn corpus(target: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus for {target}");
    files
}

fn metric_space(data: &[u8]) -> bool {
    match MetricSpace::from_json(data) {
        Ok(space) => {
            let _ = space.invariants();
            let _ = space.to_json();
            true
        }
        Err(_) => false,
    }
}

fn linear_map(data: &[u8]) -> bool {
    match LinearMap::from_json(data) {
        Ok(map) => {
            let _ = check_unitary(&map, 1e-8, 0);
            true
        }
        Err(_) => false,
    }
}

fn spectrum(data: &[u8]) -> bool {
    match Spectrum::from_json(data) {
        Ok(s) => {
            let _ = s.invariant_violations(1e-8, 1e-8);
            let _ = s.summary_table();
            true
        }
        Err(_) => false,
    }
}

fn bundle(data: &[u8]) -> bool {
    match EquivalenceBundle::from_json(data) {
        Ok(b) => {
            let _ = b.verify(0);
            true
        }
        Err(_) => false,
    }
}

fn run_config(data: &[u8]) -> bool {
    match std::str::from_utf8(data).ok().and_then(|s| RunConfig::from_toml_str(s).ok()) {
        Some(c) => c.validate().is_ok(),
        None => false,
    }
}

/// Truncations, byte replacements and digit swaps at evenly spread positions.
fn mutations(data: &[u8]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let n = data.len();
    if n == 0 {
        return vec![b"\xff".to_vec(), b"[".to_vec()];
    }
    for k in 1..=12 {
        let pos = n * k / 13;
        out.push(data[..pos].to_vec());
        for replacement in [b'9', b'-', b'"', b'}', b'e', 0xff] {
            let mut m = data.to_vec();
            m[pos.min(n - 1)] = replacement;
            out.push(m);
        }
    }
    out
}

fn replay(target: &str, parse: fn(&[u8]) -> bool) -> Vec<(String, bool)> {
    let mut results = Vec::new();
    for path in corpus(target) {
        let data = fs::read(&path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let accepted = catch_unwind(AssertUnwindSafe(|| parse(&data)))
            .unwrap_or_else(|_| panic!("{target}/{name} panicked"));
        for (i, m) in mutations(&data).iter().enumerate() {
            catch_unwind(AssertUnwindSafe(|| parse(m)))
                .unwrap_or_else(|_| panic!("{target}/{name} mutation {i} panicked"));
        }
        results.push((name, accepted));
    }
    results
}

fn verdict(results: &[(String, bool)], name: &str) -> bool {
    results.iter().find(|(n, _)| n == name).unwrap_or_else(|| panic!("missing seed {name}")).1
}

#[test]
fn metric_space_corpus() {
    let r = replay("metric_space_json", metric_space);
    assert!(verdict(&r, "identity_4") && verdict(&r, "cubic_12"));
    assert!(!verdict(&r, "dim_mismatch") && !verdict(&r, "indefinite") && !verdict(&r, "wrong_kind"));
}

#[test]
fn linear_map_corpus() {
    let r = replay("linear_map_json", linear_map);
    assert!(verdict(&r, "identity") && verdict(&r, "doubled"));
    assert!(!verdict(&r, "ragged"));
}

#[test]
fn spectrum_corpus() {
    let r = replay("spectrum_json", spectrum);
    assert!(verdict(&r, "oscillator_cubic") && verdict(&r, "shooting_cubic_trimmed"));
    assert!(!verdict(&r, "future_schema"));
}

#[test]
fn bundle_corpus() {
    let r = replay("bundle_json", bundle);
    assert!(verdict(&r, "cubic_12"));
    assert!(!verdict(&r, "tampered_h") && !verdict(&r, "negative_tolerance") && !verdict(&r, "empty_object"));
}

#[test]
fn run_config_corpus() {
    let r = replay("run_config_toml", run_config);
    for ok in ["defaults", "cubic_verify", "quartic_contour", "convergence_sweep"] {
        assert!(verdict(&r, ok), "{ok}");
    }
    assert!(!verdict(&r, "negative_epsilon") && !verdict(&r, "unknown_key"));
}
