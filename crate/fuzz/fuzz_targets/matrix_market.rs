//! Fuzzes the Matrix Market reader. Any byte soup must either parse into a
//! well-formed operator or return an error; it must never panic, and a
//! successful parse must yield an operator with consistent index arrays.

#![no_main]

use cygrad::linalg::Vector;
use cygrad::matrix_market::read_symmetric_csr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(op) = read_symmetric_csr(data) {
        let n = op.dimension();
        assert!(n >= 1);
        for (i, j, v) in op.triplets() {
            assert!(i < n && j < n);
            assert!(v.is_finite());
        }
        // a parsed operator must be applicable; keep the exercise small so
        // header-only inputs with a huge dimension stay cheap
        if n <= 4096 {
            let y = op.matvec(&Vector::ones(n)).expect("dimension matches");
            assert_eq!(y.len(), n);
        }
    }
});
