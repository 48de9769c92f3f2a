#![no_main]

use bakerevt_core::symbolic::Word;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(word) = text.parse::<Word>() {
        assert!(!word.is_empty());
        assert_eq!(word.to_string().parse::<Word>().unwrap(), word);
        assert_eq!(word.len() % word.minimal_period(), 0);
    }
});
