#![no_main]

use dfsqc::tomography::{reconstruct_state, TomographyDataset};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(dataset) = TomographyDataset::from_json(text) else { return };
    assert_eq!(TomographyDataset::from_json(&dataset.to_json()).unwrap(), dataset);
    let freqs = dataset.frequencies().unwrap();
    for p in &freqs.probabilities {
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    if dataset.settings[0].n_qubits() <= 4 {
        if let Ok(rho) = reconstruct_state(&dataset) {
            assert!((rho.trace() - 1.0).abs() < 1e-6);
        }
    }
});
