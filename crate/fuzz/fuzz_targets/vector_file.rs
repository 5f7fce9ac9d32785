//! Fuzzes the plain-text vector reader. It must never panic and every
//! accepted value must be finite.

#![no_main]

use cygrad::matrix_market::read_vector;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(values) = read_vector(data) {
        assert!(values.iter().all(|v| v.is_finite()));
    }
});
