#![allow(dead_code)]

use std::collections::HashMap;

/// Reads `key=value` lines from a fixture file in `fixtures/`.
pub fn fixture(name: &str) -> HashMap<String, f64> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/").to_string() + name;
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (k, v) = l.split_once('=').expect("key=value");
            (k.trim().to_string(), v.trim().parse().expect("decimal value"))
        })
        .collect()
}

pub fn limit_fixture(key: &str) -> f64 {
    fixture("limit_values.txt")[key]
}
