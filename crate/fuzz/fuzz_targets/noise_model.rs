#![no_main]

use dfsqc::noise::NoiseModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = NoiseModel::from_json(text) {
        assert_eq!(NoiseModel::from_json(&model.to_json()).unwrap(), model);
    }
});
