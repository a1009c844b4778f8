#![no_main]

use dfsqc::gates::PulseSequence;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(seq) = PulseSequence::from_json(text) else { return };
    assert_eq!(PulseSequence::from_json(&seq.to_json()).unwrap(), seq);
    // keep the dense simulation cheap
    if seq.register.n_ions() <= 4 && seq.ops.len() <= 32 && seq.ops.iter().all(|op| op.angle.abs() < 1e6) {
        let u = seq.unitary().unwrap();
        assert!(u.unitarity_residual() < 1e-6);
    }
});
