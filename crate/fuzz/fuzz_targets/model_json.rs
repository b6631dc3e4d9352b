#![no_main]

use libfuzzer_sys::fuzz_target;
use strokeseg::classifier::BaselineModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = BaselineModel::from_json(text) {
        let again = BaselineModel::from_json(&model.to_json()).expect("saved model loads");
        assert_eq!(again.to_json(), model.to_json());
        let x = vec![0.5; model.features.dimension()];
        let p = model.probability(&x);
        assert!(p.is_nan() || (0.0..=1.0).contains(&p));
    }
});
