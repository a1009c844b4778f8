//! The experiments behind `dfsqc run`.

use std::f64::consts::PI;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dfs::{coherence_comparison, CoherenceComparison, LogicalRegister, DEFAULT_RATIO_CAP};
use crate::error::Result;
use crate::gates::{apply_sequence, bell_sequence, compile_cnot, target_cnot_matrix};
use crate::motion::{
    effective_gate, gate_trace_distance, off_resonant_error_scan, scan_csv, DrivenOscillatorModel, ScanPoint,
    SpinCoupling,
};
use crate::noise::{NoiseModel, NoisyChannel};
use crate::quantum::{matrix_rows, DensityMatrix, StateVector, Unitary};
use crate::tomography::{
    dfs_gate_summary, dfs_process_tomography, dfs_report, mean_gate_fidelity, ChiChannel, ChiMatrix, ChiRecord,
    DfsGateSummary, Estimate, Statistics,
};

use super::config::{ExperimentConfig, ExperimentKind};

/// Everything a run writes, as file name and contents.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<(String, String)>,
}

#[derive(Debug, Serialize)]
struct Report<M: Serialize> {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    experiment: &'static str,
    seed: u64,
    noise: NoiseModel,
    noise_settings: &'static str,
    metrics: M,
}

fn noise_label(noise: &NoiseModel) -> &'static str {
    if *noise == NoiseModel::noiseless() {
        "noiseless"
    } else {
        "hand-chosen, not fitted to measured data"
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn config_hash(raw: &[u8]) -> String {
    hex::encode(Sha256::digest(raw))
}

fn report<M: Serialize>(config: &ExperimentConfig, hash: &str, metrics: M) -> String {
    to_json(&Report {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: hash.to_string(),
        experiment: config.experiment.name(),
        seed: config.seed,
        noise: config.noise.clone(),
        noise_settings: noise_label(&config.noise),
        metrics,
    })
}

/// Runs `config`. `raw` is the config file as read, hashed into the report.
pub fn run_experiment(config: &ExperimentConfig, raw: &[u8]) -> Result<RunOutput> {
    let hash = config_hash(raw);
    let files = match config.experiment {
        ExperimentKind::Bell => {
            let (metrics, matrices) = bell(config)?;
            vec![
                ("report.json".into(), report(config, &hash, metrics)),
                ("matrices.json".into(), to_json(&matrices)),
            ]
        }
        ExperimentKind::CnotTomo => {
            let (metrics, matrices) = cnot_tomography(config)?;
            vec![
                ("report.json".into(), report(config, &hash, metrics)),
                ("matrices.json".into(), to_json(&matrices)),
            ]
        }
        ExperimentKind::Coherence => vec![("report.json".into(), report(config, &hash, coherence(config)?))],
        ExperimentKind::MsScan | ExperimentKind::CpScan => {
            let (metrics, csv) = motion_scan(config)?;
            let csv_name = format!("{}.csv", config.experiment.name().replace('-', "_"));
            vec![("report.json".into(), report(config, &hash, metrics)), (csv_name, csv)]
        }
    };
    Ok(RunOutput { files })
}

#[derive(Debug, Serialize)]
struct BellState {
    input: String,
    permanence: f64,
    fidelity: f64,
    overall: f64,
}

#[derive(Debug, Serialize)]
struct PublishedBell {
    fidelity: [f64; 4],
    permanence: [f64; 4],
}

#[derive(Debug, Serialize)]
struct BellMetrics {
    states: Vec<BellState>,
    mean_fidelity: f64,
    mean_permanence: f64,
    mean_overall: f64,
    /// Largest `|<B_i|B_j>|` between the ideal outputs, `i != j`.
    max_ideal_overlap: f64,
    /// Largest deviation of a reduced ideal single-qubit state from `I/2`.
    max_ideal_reduced_deviation: f64,
    published_experiment: PublishedBell,
}

#[derive(Debug, Serialize)]
struct BellMatrices {
    logical: Vec<NamedMatrix>,
    physical: Vec<NamedMatrix>,
}

#[derive(Debug, Serialize)]
struct NamedMatrix {
    name: String,
    entries: Vec<Vec<[f64; 2]>>,
}

fn logical_vector(reg: &LogicalRegister, physical: &StateVector) -> Result<StateVector> {
    StateVector::normalized(reg.isometry().adjoint() * physical.amps())
}

fn bell(config: &ExperimentConfig) -> Result<(BellMetrics, BellMatrices)> {
    let reg = &config.register;
    let seq = bell_sequence(reg, config.control, config.target, &config.gate_params)?;
    let ideal_u = seq.unitary()?;
    let noise = (!config.noise.eq(&NoiseModel::noiseless())).then_some(&config.noise);
    let mut states = Vec::new();
    let mut ideals = Vec::new();
    let mut matrices = BellMatrices {
        logical: Vec::new(),
        physical: Vec::new(),
    };
    for bits in ["00", "01", "10", "11"] {
        let psi = reg.encode(bits)?;
        let ideal = logical_vector(reg, &ideal_u.apply(&psi)?)?;
        let out = apply_sequence(&seq, &psi, noise)?.density();
        let r = dfs_report(reg, &out, &ideal)?;
        let decoded = reg.decode_in_dfs(&out)?;
        matrices.logical.push(NamedMatrix {
            name: bits.into(),
            entries: matrix_rows(decoded.logical.matrix()),
        });
        matrices.physical.push(NamedMatrix {
            name: bits.into(),
            entries: matrix_rows(out.matrix()),
        });
        states.push(BellState {
            input: bits.into(),
            permanence: r.permanence,
            fidelity: r.fidelity,
            overall: r.overall,
        });
        ideals.push(ideal);
    }
    let mut max_overlap = 0.0f64;
    let mut max_reduced = 0.0f64;
    for (i, a) in ideals.iter().enumerate() {
        for b in &ideals[i + 1..] {
            max_overlap = max_overlap.max(a.inner(b)?.norm());
        }
        let reduced = crate::quantum::partial_trace(&a.to_density(), &[2, 2], &[0])?;
        let dev = (reduced.matrix() - DensityMatrix::maximally_mixed(2).matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        max_reduced = max_reduced.max(dev);
    }
    let mean = |f: fn(&BellState) -> f64| states.iter().map(f).sum::<f64>() / states.len() as f64;
    let metrics = BellMetrics {
        mean_fidelity: mean(|s| s.fidelity),
        mean_permanence: mean(|s| s.permanence),
        mean_overall: mean(|s| s.overall),
        states,
        max_ideal_overlap: max_overlap,
        max_ideal_reduced_deviation: max_reduced,
        published_experiment: PublishedBell {
            fidelity: [0.89, 0.91, 0.91, 0.92],
            permanence: [0.902, 0.943, 0.839, 0.860],
        },
    };
    Ok((metrics, matrices))
}

#[derive(Debug, Serialize)]
struct PublishedCnot {
    mean_gate_fidelity: f64,
    permanence: f64,
    overall: f64,
}

#[derive(Debug, Serialize)]
struct CnotMetrics {
    statistics: String,
    process_fidelity: f64,
    /// Haar average over the renormalized in-subspace process matrix.
    mean_gate_fidelity: Estimate,
    /// Mean over the sixteen tomography inputs.
    input_permanence: Estimate,
    /// Haar averages over the permanence-weighted process matrix.
    dfs: DfsGateSummary,
    /// `|overall - permanence * fidelity|` of the Haar averages.
    consistency_gap: f64,
    chi_hermiticity_residual: f64,
    chi_min_choi_eigenvalue: f64,
    chi_trace_preservation_residual: f64,
    sequence_duration_us: f64,
    published_experiment: PublishedCnot,
}

#[derive(Debug, Serialize)]
struct CnotMatrices {
    chi: ChiRecord,
    chi_unnormalized: ChiRecord,
    chi_ideal: ChiRecord,
    logical_unitary: Vec<Vec<[f64; 2]>>,
}

fn cnot_tomography(config: &ExperimentConfig) -> Result<(CnotMetrics, CnotMatrices)> {
    let reg = &config.register;
    let seq = compile_cnot(reg, config.control, config.target, &config.gate_params)?;
    let statistics = if config.exact_statistics {
        Statistics::Exact
    } else {
        Statistics::Shots(config.shots)
    };
    let result = if config.noise == NoiseModel::noiseless() {
        let u = seq.unitary()?;
        dfs_process_tomography(reg, |rho| rho.evolve(&u), statistics, config.seed)?
    } else {
        let channel = NoisyChannel::sample(&seq, &config.noise, config.noise.samples)?;
        dfs_process_tomography(reg, |rho| channel.apply(rho), statistics, config.seed)?
    };
    // the printed matrix has the first logical qubit as control
    let ideal_matrix = if config.control == 0 {
        target_cnot_matrix()
    } else {
        let swap = crate::quantum::CMatrix::from_fn(4, 4, |r, c| {
            let s = |k: usize| ((k & 1) << 1) | (k >> 1);
            if s(c) == r {
                crate::quantum::ONE
            } else {
                crate::quantum::ZERO
            }
        });
        &swap * target_cnot_matrix() * &swap
    };
    let ideal = Unitary::new(ideal_matrix)?;
    let chi_ideal = ChiMatrix::from_unitary(&ideal)?;
    let haar_seed = crate::rng::subseed(config.seed, 0x4841_4152);
    let mean = mean_gate_fidelity(&ChiChannel::new(&result.chi), &ideal, config.n_haar_samples, haar_seed)?;
    let dfs = dfs_gate_summary(&result.chi_unnormalized, &ideal, config.n_haar_samples, haar_seed)?;
    let metrics = CnotMetrics {
        statistics: match statistics {
            Statistics::Exact => "exact".into(),
            Statistics::Shots(n) => format!("{n} shots per setting"),
        },
        process_fidelity: result.chi.process_fidelity(&chi_ideal),
        mean_gate_fidelity: mean,
        input_permanence: Estimate::from_samples(&result.permanences),
        consistency_gap: (dfs.overall.mean - dfs.permanence.mean * dfs.fidelity.mean).abs(),
        dfs,
        chi_hermiticity_residual: result.chi.hermiticity_residual(),
        chi_min_choi_eigenvalue: result.chi.min_choi_eigenvalue(),
        chi_trace_preservation_residual: result.chi.trace_preservation_residual(),
        sequence_duration_us: seq.total_duration() * 1e6,
        published_experiment: PublishedCnot {
            mean_gate_fidelity: 0.89,
            permanence: 0.89,
            overall: 0.79,
        },
    };
    let matrices = CnotMatrices {
        chi: result.chi.to_record(),
        chi_unnormalized: result.chi_unnormalized.to_record(),
        chi_ideal: chi_ideal.to_record(),
        logical_unitary: matrix_rows(&seq.logical_matrix()?),
    };
    Ok((metrics, matrices))
}

#[derive(Debug, Serialize)]
struct CoherenceMetrics {
    phi_std: f64,
    samples: usize,
    #[serde(flatten)]
    comparison: CoherenceComparison,
    ratio_cap: f64,
}

fn coherence(config: &ExperimentConfig) -> Result<CoherenceMetrics> {
    let c = &config.coherence;
    Ok(CoherenceMetrics {
        phi_std: c.phi_std,
        samples: c.samples,
        comparison: coherence_comparison(c.phi_std, c.samples, config.seed, DEFAULT_RATIO_CAP)?,
        ratio_cap: DEFAULT_RATIO_CAP,
    })
}

#[derive(Debug, Serialize)]
struct ScanMetrics {
    spin_coupling: SpinCoupling,
    theta: f64,
    delta: f64,
    coupling: f64,
    loop_time_us: f64,
    return_population: f64,
    closure_residual: f64,
    trace_distance_to_ideal: f64,
    points: Vec<ScanPoint>,
}

fn motion_scan(config: &ExperimentConfig) -> Result<(ScanMetrics, String)> {
    let s = &config.scan;
    let (coupling, delta, theta) = match config.experiment {
        ExperimentKind::MsScan => (SpinCoupling::Sx, config.gate_params.delta_ms, s.theta.unwrap_or(PI / 8.0)),
        _ => (SpinCoupling::Sz, config.gate_params.delta_cp, s.theta.unwrap_or(PI / 16.0)),
    };
    let mut model = DrivenOscillatorModel::with_theta(coupling, delta, theta);
    model.n_fock = s.n_fock;
    let gate = effective_gate(&model)?;
    let points = off_resonant_error_scan(&model, &s.fractions, s.steps_per_loop)?;
    let csv = scan_csv(&points);
    Ok((
        ScanMetrics {
            spin_coupling: coupling,
            theta: model.theta(),
            delta,
            coupling: model.coupling,
            loop_time_us: model.tau() * 1e6,
            return_population: gate.return_population,
            closure_residual: gate.residual,
            trace_distance_to_ideal: gate_trace_distance(&gate.spin, model.ideal_gate().matrix()),
            points,
        },
        csv,
    ))
}
