//! Fuzzes the steplength rule grammar. Parsing must never panic, and any
//! rule that parses must survive a display/parse round trip unchanged.

#![no_main]

use cygrad::SteplengthRule;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rule) = text.parse::<SteplengthRule>() {
        let printed = rule.to_string();
        let reparsed: SteplengthRule = printed.parse().expect("printed form must reparse");
        assert_eq!(printed, reparsed.to_string());
    }
});
