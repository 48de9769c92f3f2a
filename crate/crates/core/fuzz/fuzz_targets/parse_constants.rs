#![no_main]

use bakerevt_core::geometry::{parse_constants, write_constants};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_constants(data) {
        let mut out = Vec::new();
        write_constants(&mut out, &rows).expect("valid rows serialize");
        assert_eq!(parse_constants(out.as_slice()).unwrap(), rows);
    }
});
