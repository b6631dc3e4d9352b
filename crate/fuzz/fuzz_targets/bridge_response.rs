#![no_main]

use libfuzzer_sys::fuzz_target;
use strokeseg::bridge::parse_response;

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else { return };
    if let Ok(r) = parse_response(line) {
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(parse_response(&text).unwrap(), r);
    }
});
