#![no_main]

use bakerevt_core::ulam::{decode_dump, encode_dump};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(op) = decode_dump(data) {
        assert_eq!(encode_dump(&op), data);
    }
});
