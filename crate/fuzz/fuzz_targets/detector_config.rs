#![no_main]

use libfuzzer_sys::fuzz_target;
use strokeseg::DetectorConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = serde_json::from_slice::<DetectorConfig>(data) {
        let _ = cfg.validate();
        let text = serde_json::to_string(&cfg).unwrap();
        let _ = serde_json::from_str::<DetectorConfig>(&text).expect("written config parses");
    }
});
