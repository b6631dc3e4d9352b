#![no_main]

use libfuzzer_sys::fuzz_target;
use strokeseg::stroke::parse_stroke_json;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rec) = parse_stroke_json(text) {
        assert_eq!(parse_stroke_json(&rec.to_json()).expect("written json parses"), rec);
    }
});
