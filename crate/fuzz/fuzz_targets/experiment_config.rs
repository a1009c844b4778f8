#![no_main]

use dfsqc::cli::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = ExperimentConfig::parse(text) {
        let again = serde_json::to_string(&config).unwrap();
        assert_eq!(ExperimentConfig::parse(&again).unwrap(), config);
    }
});
