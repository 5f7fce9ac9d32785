//! Fuzzes the key=value config reader. Parsing must never panic, and keys
//! accepted once must be retrievable.

#![no_main]

use cygrad_cli::ConfigMap;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(mut map) = ConfigMap::parse(text) {
        // draining every stored key must leave the map clean
        let keys: Vec<String> = map.keys().map(String::from).collect();
        for key in &keys {
            let values = map.take_all(key);
            assert!(
                !values.is_empty(),
                "stored key must hold at least one value"
            );
        }
        map.finish()
            .expect("drained map has nothing left to reject");
    }
});
