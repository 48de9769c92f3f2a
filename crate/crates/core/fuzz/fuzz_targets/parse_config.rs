#![no_main]

use bakerevt_core::experiment::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config(text) {
        // An accepted config survives a round trip through its own serialization.
        let json = serde_json::to_string(&cfg).expect("configs serialize");
        let back = parse_config(&json).expect("serialized config parses");
        assert_eq!(back, cfg);
    }
});
