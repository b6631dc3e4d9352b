#![no_main]

use libfuzzer_sys::fuzz_target;
use strokeseg::stroke::{parse_stk, MIN_POINTS};
use strokeseg::pipeline::ClassifierSpec;
use strokeseg::{Detector, DetectorConfig};

fn null_detector() -> Result<Detector, strokeseg::pipeline::DetectError> {
    Detector::from_config(DetectorConfig {
        point_classifier: Some(ClassifierSpec::Null),
        corner_classifier: Some(ClassifierSpec::Null),
        ..DetectorConfig::default()
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(rec) = parse_stk(text) else { return };
    let again = parse_stk(&rec.to_stk()).expect("written stk parses");
    assert_eq!(again, rec);
    if rec.points.len() >= MIN_POINTS {
        if let Ok(raw) = rec.into_raw() {
            let detector = null_detector().unwrap();
            let _ = detector.detect(&raw);
        }
    }
});
