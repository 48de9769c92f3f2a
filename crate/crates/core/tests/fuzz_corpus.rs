//! Replays the checked-in fuzz corpus through the same checks as the fuzz
//! targets, so regressions show up without a fuzzing toolchain.

use std::path::PathBuf;

use bakerevt_core::experiment::parse_config;
use bakerevt_core::geometry::{parse_constants, write_constants};
use bakerevt_core::symbolic::Word;
use bakerevt_core::ulam::{decode_dump, encode_dump};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn parse_config_seeds() {
    let mut accepted = 0;
    for (name, data) in seeds("parse_config") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        if let Ok(cfg) = parse_config(text) {
            let json = serde_json::to_string(&cfg).unwrap();
            assert_eq!(parse_config(&json).unwrap(), cfg, "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 12);
}

#[test]
fn parse_word_seeds() {
    for (name, data) in seeds("parse_word") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        if let Ok(word) = text.parse::<Word>() {
            assert_eq!(word.to_string().parse::<Word>().unwrap(), word, "{name}");
            assert_eq!(word.len() % word.minimal_period(), 0, "{name}");
        }
    }
}

#[test]
fn decode_ulam_dump_seeds() {
    let mut accepted = 0;
    for (name, data) in seeds("decode_ulam_dump") {
        if let Ok(op) = decode_dump(&data) {
            assert_eq!(encode_dump(&op), data, "{name}");
            accepted += 1;
        }
    }
    assert_eq!(accepted, 3);
}

#[test]
fn parse_constants_seeds() {
    let mut accepted = 0;
    for (name, data) in seeds("parse_constants") {
        if let Ok(rows) = parse_constants(data.as_slice()) {
            let mut out = Vec::new();
            write_constants(&mut out, &rows).unwrap();
            assert_eq!(parse_constants(out.as_slice()).unwrap(), rows, "{name}");
            accepted += 1;
        }
    }
    assert_eq!(accepted, 2);
}
