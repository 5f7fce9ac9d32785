//! Fuzzes the problem generator grammar. Parsing must never panic, parsed
//! specs must round-trip through their display form, and realizing a small
//! spec must produce a problem with consistent shapes.

#![no_main]

use cygrad::problems::{GeneratorSpec, SpectrumSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = text.parse::<GeneratorSpec>() {
        let printed = spec.to_string();
        let reparsed: GeneratorSpec = printed.parse().expect("printed form must reparse");
        assert_eq!(spec, reparsed);

        // realize only cheap specs; the grammar accepts any n
        let cheap = match &spec {
            GeneratorSpec::Diag(SpectrumSpec { n, .. }) => *n <= 256,
            GeneratorSpec::Spd2d { .. } => true,
        };
        if cheap {
            if let Ok(problem) = spec.realize() {
                let n = problem.operator.dimension();
                assert_eq!(problem.rhs.len(), n);
                assert_eq!(problem.x0.len(), n);
            }
        }
    }
});
