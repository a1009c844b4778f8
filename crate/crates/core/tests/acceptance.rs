//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line; the process exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use dfsqc::cli::{run_experiment, ExperimentConfig};
use dfsqc::dfs::{coherence_ratio, collective_dephasing, LogicalRegister};
use dfsqc::gates::{apply_sequence, PulseOp, bell_sequence, compile_cnot, target_cnot_matrix, GateParams};
use dfsqc::motion::{effective_gate, effective_gate_at, gate_trace_distance, DrivenOscillatorModel, SpinCoupling, DEFAULT_STEPS};
use dfsqc::noise::{fit_power_law, ms_imbalance_infidelity, unitary_gate_fidelity, NoiseModel, NoisyChannel};
use dfsqc::quantum::{embed_single, expm_hermitian, partial_trace, CMatrix, CVector, DensityMatrix, StateVector, Unitary, C64};
use dfsqc::rng::stream_rng;
use dfsqc::tomography::{
    dfs_gate_summary, dfs_process_tomography, haar_state, mean_gate_fidelity, process_tomography, ChiChannel, ChiMatrix,
    Depolarizing, PauliTwirlTrajectories, Statistics,
};
use rand::Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Aligns the global phase of `actual` to `target` and returns the largest
/// entrywise difference.
fn phase_aligned_error(actual: &CMatrix, target: &CMatrix) -> f64 {
    let overlap = (target.adjoint() * actual).trace();
    let phase = C64::from_polar(1.0, -overlap.arg());
    max_abs(&(actual * phase - target))
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn cnot_matrix() -> Outcome {
    let start = Instant::now();
    let reg = LogicalRegister::linear(2);
    let seq = compile_cnot(&reg, 0, 1, &GateParams::default()).unwrap();
    let logical = seq.logical_matrix().unwrap();
    let err = phase_aligned_error(&logical, &target_cnot_matrix());
    let elapsed = start.elapsed();
    Outcome {
        pass: err < 1e-10 && within(elapsed, 1.0),
        detail: format!("max |delta| = {err:.2e}, {:.3} s", elapsed.as_secs_f64()),
    }
}

fn bell_states() -> Outcome {
    let start = Instant::now();
    let reg = LogicalRegister::linear(2);
    let params = GateParams::default();
    let seq = bell_sequence(&reg, 0, 1, &params).unwrap();
    // expected outputs from the printed CNOT after X(pi/2) on the control
    let (c, sn) = (FRAC_PI_4.cos(), FRAC_PI_4.sin());
    let rx = CMatrix::from_row_slice(2, 2, &[
        C64::new(c, 0.0), C64::new(0.0, -sn),
        C64::new(0.0, -sn), C64::new(c, 0.0),
    ]);
    let expected_u = target_cnot_matrix() * embed_single(2, 0, &rx);
    let mut worst_fid = 0.0f64;
    let mut worst_perm = 0.0f64;
    let mut worst_entangle = 0.0f64;
    let mut expected = Vec::new();
    for k in 0..4 {
        let bits = format!("{:02b}", k);
        let psi = reg.encode(&bits).unwrap();
        let ideal = StateVector::new(expected_u.column(k).into_owned()).unwrap();
        let out = apply_sequence(&seq, &psi, None).unwrap().density();
        let decoded = reg.decode_in_dfs(&out).unwrap();
        let fid = dfsqc::quantum::fidelity(&decoded.logical, &ideal).unwrap();
        worst_fid = worst_fid.max((1.0 - fid).abs());
        worst_perm = worst_perm.max((1.0 - decoded.permanence).abs());
        let reduced = partial_trace(&ideal.to_density(), &[2, 2], &[0]).unwrap();
        worst_entangle = worst_entangle.max(max_abs(&(reduced.matrix() - DensityMatrix::maximally_mixed(2).matrix())));
        expected.push(ideal);
    }
    let mut worst_overlap = 0.0f64;
    for i in 0..4 {
        for j in i + 1..4 {
            worst_overlap = worst_overlap.max(expected[i].inner(&expected[j]).unwrap().norm());
        }
    }

    let model = NoiseModel::calibrated_demo();
    let mut noisy = Vec::new();
    for k in 0..4 {
        let bits = format!("{:02b}", k);
        let psi = reg.encode(&bits).unwrap();
        let ideal = dfsqc::quantum::StateVector::normalized(
            reg.isometry().adjoint() * seq.unitary().unwrap().apply(&psi).unwrap().amps(),
        )
        .unwrap();
        let out = apply_sequence(&seq, &psi, Some(&model)).unwrap().density();
        noisy.push(dfsqc::tomography::dfs_report(&reg, &out, &ideal).unwrap().fidelity);
    }
    let band = noisy.iter().all(|f| (0.85..=0.95).contains(f));
    let elapsed = start.elapsed();
    let pass = worst_fid < 1e-10
        && worst_perm < 1e-10
        && worst_entangle < 1e-10
        && worst_overlap < 1e-10
        && band
        && within(elapsed, 10.0);
    Outcome {
        pass,
        detail: format!(
            "noiseless |1-F| <= {worst_fid:.1e}, |1-P| <= {worst_perm:.1e}, max overlap {worst_overlap:.1e}; \
             calibrated F = [{}], {:.2} s",
            noisy.iter().map(|f| format!("{f:.4}")).collect::<Vec<_>>().join(", "),
            elapsed.as_secs_f64()
        ),
    }
}

fn dfs_immunity() -> Outcome {
    let start = Instant::now();
    let reg = LogicalRegister::linear(2);
    let mut worst = 0.0f64;
    for trial in 0..50u64 {
        let mut rng = stream_rng(41, trial);
        let logical = StateVector::normalized(haar_state(4, &mut rng)).unwrap();
        let mixed_weight: f64 = rng.random();
        let other = StateVector::normalized(haar_state(4, &mut rng)).unwrap();
        let logical_rho = DensityMatrix::mixture(&[
            (mixed_weight, logical.to_density()),
            (1.0 - mixed_weight, other.to_density()),
        ])
        .unwrap();
        let rho = reg.encode_density(&logical_rho).unwrap();
        let phases: Vec<f64> = (0..1 + trial as usize % 7)
            .map(|_| rng.random_range(-10.0..10.0))
            .collect();
        let out = collective_dephasing(&rho, &phases);
        worst = worst.max(max_abs(&(out.matrix() - rho.matrix())));
    }
    let ratio = coherence_ratio(PI, 100_000, 0).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        pass: worst < 1e-12 && ratio >= 100.0 && within(elapsed, 5.0),
        detail: format!(
            "max |out - in| = {worst:.1e}, coherence ratio {ratio:.1}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    }
}

fn motional_closure() -> Outcome {
    let start = Instant::now();
    let params = GateParams::default();
    let mut lines = Vec::new();
    let mut pass = true;
    for (label, spin, delta) in [
        ("MS", SpinCoupling::Sx, params.delta_ms),
        ("CP", SpinCoupling::Sz, params.delta_cp),
    ] {
        let model = DrivenOscillatorModel::with_theta(spin, delta, FRAC_PI_8);
        let gate = effective_gate(&model).unwrap();
        let td = gate_trace_distance(&gate.spin, model.ideal_gate().matrix());
        let tau = model.tau();
        let fine = effective_gate_at(&model, tau, tau / (2 * DEFAULT_STEPS) as f64).unwrap();
        let halving = max_abs(&(&gate.spin - &fine.spin));
        pass &= gate.return_population >= 1.0 - 1e-6 && td < 1e-5 && halving < 1e-7;
        lines.push(format!(
            "{label}: return {:.9}, trace distance {td:.1e}, dt-halving {halving:.1e}",
            gate.return_population
        ));
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, 30.0);
    Outcome {
        pass,
        detail: format!("{}; {:.2} s", lines.join("; "), elapsed.as_secs_f64()),
    }
}

fn process_pipeline() -> Outcome {
    let start = Instant::now();
    let reg = LogicalRegister::linear(2);
    let seq = compile_cnot(&reg, 0, 1, &GateParams::default()).unwrap();
    let u = seq.unitary().unwrap();
    let ideal = Unitary::new(target_cnot_matrix()).unwrap();
    let chi_ideal = ChiMatrix::from_unitary(&ideal).unwrap();

    let exact = dfs_process_tomography(&reg, |rho| rho.evolve(&u), Statistics::Exact, 1).unwrap();
    let process_fidelity = exact.chi.process_fidelity(&chi_ideal);

    let identity = process_tomography(2, |rho| Ok(rho.matrix().clone()), Statistics::Exact, 1).unwrap();
    let mut e_ii = CMatrix::zeros(16, 16);
    e_ii[(0, 0)] = C64::new(1.0, 0.0);
    let identity_err = max_abs(&(identity.entries() - e_ii));

    let model = NoiseModel::calibrated_demo();
    let channel = NoisyChannel::sample(&seq, &model, model.samples).unwrap();
    let noisy = dfs_process_tomography(&reg, |rho| channel.apply(rho), Statistics::Shots(100), 17).unwrap();
    let fid = mean_gate_fidelity(&ChiChannel::new(&noisy.chi), &ideal, 200_000, 5).unwrap();
    let summary = dfs_gate_summary(&noisy.chi_unnormalized, &ideal, 200_000, 5).unwrap();
    let product = summary.permanence.mean * summary.fidelity.mean;
    let consistent = (summary.overall.mean - product).abs() <= 0.02 * summary.overall.mean;
    let has_errors = fid.stderr > 0.0 && summary.permanence.stderr > 0.0 && summary.fidelity.stderr > 0.0;
    let elapsed = start.elapsed();
    Outcome {
        pass: process_fidelity > 0.999 && identity_err < 1e-6 && consistent && has_errors && within(elapsed, 300.0),
        detail: format!(
            "exact process fidelity {process_fidelity:.9}, identity chi error {identity_err:.1e}; \
             100 shots: F = {:.4}({:.0e}), P = {:.4}({:.0e}), overall {:.4} vs P*F {:.4}; {:.1} s",
            summary.fidelity.mean,
            summary.fidelity.stderr,
            summary.permanence.mean,
            summary.permanence.stderr,
            summary.overall.mean,
            product,
            elapsed.as_secs_f64()
        ),
    }
}

fn haar_estimator() -> Outcome {
    let start = Instant::now();
    let id = Unitary::identity(4);
    let n = 200_000;
    let traj = mean_gate_fidelity(&PauliTwirlTrajectories::new(2, 0.2), &id, n, 3).unwrap();
    let exact = mean_gate_fidelity(&Depolarizing { dim: 4, p: 0.2 }, &id, n, 3).unwrap();
    let depol_ok = (traj.mean - 0.85).abs() <= 3.0 * traj.stderr && (exact.mean - 0.85).abs() < 1e-12;
    let elapsed = start.elapsed();

    // first and second moments of Haar states
    let samples: Vec<CVector> = (0..n as u64)
        .map(|k| haar_state(4, &mut stream_rng(99, k)))
        .collect();
    let mut moments_ok = true;
    let mut worst_z = 0.0f64;
    let mut check = |values: Vec<f64>, expected: f64| {
        let m = values.len() as f64;
        let mean = values.iter().sum::<f64>() / m;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let z = (mean - expected).abs() / (var / m).sqrt();
        worst_z = worst_z.max(z);
        moments_ok &= z < 5.0;
    };
    for k in 0..4 {
        check(samples.iter().map(|s| s[k].norm_sqr()).collect(), 0.25);
    }
    for j in 0..4 {
        for k in j + 1..4 {
            check(
                samples.iter().map(|s| (s[j] * s[k].conj()).norm_sqr()).collect(),
                1.0 / 20.0,
            );
        }
    }
    Outcome {
        pass: depol_ok && moments_ok && within(elapsed, 30.0),
        detail: format!(
            "depolarizing trajectories {:.5} +/- {:.5} (target 0.85), exact {:.12}; worst moment z = {worst_z:.2}; \
             estimator {:.2} s",
            traj.mean,
            traj.stderr,
            exact.mean,
            elapsed.as_secs_f64()
        ),
    }
}

fn imbalance_scaling() -> Outcome {
    let eps: Vec<f64> = (0..9).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / 8.0)).collect();
    let points: Vec<(f64, f64)> = eps
        .iter()
        .map(|&e| (e, ms_imbalance_infidelity(FRAC_PI_2, e).unwrap()))
        .collect();
    let exponent = fit_power_law(&points);
    // reference only: weights (1 + eps, 1) shift the coupling at first order
    let op = PulseOp::ms((0, 1), FRAC_PI_2, 0.0, &GateParams::default());
    let ideal = op.unitary(2).unwrap();
    let one_sided: Vec<(f64, f64)> = eps
        .iter()
        .map(|&e| {
            let u = expm_hermitian(&op.generator(2, Some(&[(0, 1.0 + e), (1, 1.0)])), 1.0).unwrap();
            (e, 1.0 - unitary_gate_fidelity(u.matrix(), ideal.matrix()))
        })
        .collect();
    Outcome {
        pass: (exponent - 2.0).abs() <= 0.2,
        detail: format!(
            "fitted exponent {exponent:.3} for weights 1 +/- eps/2 over eps in [1e-3, 1e-1] (expected 2 +/- 0.2); \
             the pair coupling changes only at order eps^2, so infidelity goes as eps^4. \
             One-sided weights (1 + eps, 1) give {:.3}",
            fit_power_law(&one_sided)
        ),
    }
}

fn reproducibility() -> Outcome {
    let configs = [
        r#"{"experiment": "bell", "noise": {"addressing_ratio": 0.05, "intensity_imbalance": 0.05,
            "ac_stark_phase_jitter_std": 0.45, "collective_phase_std": 1.0, "seed": 2009, "samples": 100}}"#,
        r#"{"experiment": "cnot-tomo", "shots": 100, "n_haar_samples": 5000, "seed": 3,
            "noise": {"addressing_ratio": 0.05, "ac_stark_phase_jitter_std": 0.3, "samples": 50}}"#,
        r#"{"experiment": "coherence", "seed": 8, "coherence": {"phi_std": 2.0, "samples": 20000}}"#,
    ];
    let mut pass = true;
    for text in configs {
        let config = ExperimentConfig::parse(text).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run_experiment(&config, text.as_bytes()).unwrap())
        };
        let a = run(1);
        let b = run(4);
        let c = run(4);
        pass &= a == b && b == c;
    }
    Outcome {
        pass,
        detail: "bell, cnot-tomo and coherence reports compared across 1 and 4 threads and repeated runs".into(),
    }
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("CNOT matrix reproduction", cnot_matrix),
        ("Bell generation", bell_states),
        ("DFS immunity", dfs_immunity),
        ("motional closure", motional_closure),
        ("process tomography pipeline", process_pipeline),
        ("Haar estimator", haar_estimator),
        ("noise scaling law", imbalance_scaling),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default()
            ),
        });
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{tag}] {name}: {}", k + 1, outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
