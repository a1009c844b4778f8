//! Error channels for pulse sequences: addressing crosstalk, intensity
//! imbalance, AC-Stark phase jitter and collective (DFS-protected) phase
//! noise.
//!
//! Every realization is a unitary, so sampled channels are mixtures of
//! unitaries and therefore completely positive and trace preserving.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::dfs::collective_phase_unitary;
use crate::error::{Error, Result};
use crate::gates::{PulseKind, PulseOp, PulseSequence};
use crate::quantum::{expm_hermitian, CMatrix, DensityMatrix, Unitary};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Rabi frequency on an adjacent ion relative to the addressed ones.
    pub addressing_ratio: f64,
    /// Fractional Rabi-frequency difference between the two addressed ions.
    pub intensity_imbalance: f64,
    /// Std of the additive angle error of every AC-Stark pulse, radians.
    pub ac_stark_phase_jitter_std: f64,
    /// Std of the quasi-static collective phase per sequence run, radians.
    pub collective_phase_std: f64,
    pub seed: u64,
    /// Monte-Carlo realizations averaged when the model has stochastic parts.
    pub samples: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            addressing_ratio: 0.05,
            intensity_imbalance: 0.0,
            ac_stark_phase_jitter_std: 0.0,
            collective_phase_std: 0.0,
            seed: 0,
            samples: 200,
        }
    }
}

impl NoiseModel {
    /// All error sources off.
    pub fn noiseless() -> Self {
        Self {
            addressing_ratio: 0.0,
            ..Self::default()
        }
    }

    /// Settings used for the Bell-state demonstration: 5% crosstalk plus
    /// AC-Stark jitter and imbalance chosen by hand (not fitted to data).
    pub fn calibrated_demo() -> Self {
        Self {
            addressing_ratio: 0.05,
            intensity_imbalance: 0.05,
            ac_stark_phase_jitter_std: 0.45,
            collective_phase_std: 1.0,
            seed: 2009,
            samples: 400,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.addressing_ratio) {
            return Err(Error::InvalidArgument(format!(
                "addressing_ratio must lie in [0, 1), got {}",
                self.addressing_ratio
            )));
        }
        if !self.intensity_imbalance.is_finite() || self.intensity_imbalance.abs() >= 2.0 {
            return Err(Error::InvalidArgument(format!(
                "intensity_imbalance must lie in (-2, 2), got {}",
                self.intensity_imbalance
            )));
        }
        for (name, v) in [
            ("ac_stark_phase_jitter_std", self.ac_stark_phase_jitter_std),
            ("collective_phase_std", self.collective_phase_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.samples == 0 {
            return Err(Error::InvalidArgument("samples must be >= 1".into()));
        }
        Ok(())
    }

    pub fn is_stochastic(&self) -> bool {
        self.ac_stark_phase_jitter_std > 0.0 || self.collective_phase_std > 0.0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("noise model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }
}

/// Coupling weights `(ion, w)` for `op` with the given neighbor ratio and
/// imbalance. Addressed ions get `1 +- epsilon/2`, the ions directly beside
/// the addressed block get `ratio`.
pub fn coupling_weights(op: &PulseOp, n_ions: usize, ratio: f64, epsilon: f64) -> Vec<(usize, f64)> {
    let mut weights: Vec<(usize, f64)> = match op.targets.as_slice() {
        [a, b] => vec![(*a, 1.0 + epsilon / 2.0), (*b, 1.0 - epsilon / 2.0)],
        ts => ts.iter().map(|&t| (t, 1.0)).collect(),
    };
    if ratio != 0.0 {
        let lo = *op.targets.iter().min().expect("validated op has targets");
        let hi = *op.targets.iter().max().expect("validated op has targets");
        if lo > 0 {
            weights.push((lo - 1, ratio));
        }
        if hi + 1 < n_ions {
            weights.push((hi + 1, ratio));
        }
    }
    weights
}

/// The op with its drive spilling onto adjacent ions at `ratio` times the
/// addressed Rabi frequency. Coherent error.
pub fn addressing_crosstalk(op: &PulseOp, ratio: f64, n_ions: usize) -> Result<Unitary> {
    op.validate(n_ions)?;
    let w = coupling_weights(op, n_ions, ratio, 0.0);
    expm_hermitian(&op.generator(n_ions, Some(&w)), 1.0)
}

/// Two-ion gate with `S = (1+eps/2) s_1 + (1-eps/2) s_2`.
pub fn imbalance_perturbation(op: &PulseOp, epsilon: f64, n_ions: usize) -> Result<Unitary> {
    op.validate(n_ions)?;
    if !matches!(op.kind, PulseKind::MSRotation | PulseKind::CPGate) {
        return Err(Error::InvalidArgument(format!(
            "imbalance applies to two-ion gates, not {:?}",
            op.kind
        )));
    }
    let w = coupling_weights(op, n_ions, 0.0, epsilon);
    expm_hermitian(&op.generator(n_ions, Some(&w)), 1.0)
}

/// One noise realization of the sequence as a unitary.
fn realization(
    seq: &PulseSequence,
    model: &NoiseModel,
    static_ops: &[CMatrix],
    rng: &mut impl Rng,
) -> Result<CMatrix> {
    let n = seq.register.n_ions();
    let jitter = normal(model.ac_stark_phase_jitter_std)?;
    let collective = normal(model.collective_phase_std)?;
    let phi_total = collective.as_ref().map(|d| d.sample(rng)).unwrap_or(0.0);
    let total_time = seq.total_duration();

    let mut u = CMatrix::identity(1 << n, 1 << n);
    for (op, fixed) in seq.ops.iter().zip(static_ops) {
        let step = match (&jitter, op.kind) {
            (Some(dist), PulseKind::ACStarkZ) => {
                let mut jittered = op.clone();
                jittered.angle += dist.sample(rng);
                let w = coupling_weights(&jittered, n, model.addressing_ratio, 0.0);
                expm_hermitian(&jittered.generator(n, Some(&w)), 1.0)?.into_matrix()
            }
            _ => fixed.clone(),
        };
        u = step * u;
        if phi_total != 0.0 && total_time > 0.0 {
            let phi = phi_total * op.duration / total_time;
            u = collective_phase_unitary(n, phi).matrix() * u;
        }
    }
    if phi_total != 0.0 && total_time <= 0.0 {
        u = collective_phase_unitary(n, phi_total).matrix() * u;
    }
    Ok(u)
}

fn normal(std: f64) -> Result<Option<Normal<f64>>> {
    if std > 0.0 {
        Normal::new(0.0, std)
            .map(Some)
            .map_err(|e| Error::InvalidArgument(e.to_string()))
    } else {
        Ok(None)
    }
}

/// Sampled noise realizations of a sequence; the channel is their uniform
/// mixture. Sample `k` always uses stream `k` of the model seed, so results
/// do not depend on thread scheduling.
#[derive(Debug, Clone)]
pub struct NoisyChannel {
    unitaries: Vec<CMatrix>,
}

impl NoisyChannel {
    pub fn sample(seq: &PulseSequence, model: &NoiseModel, n_samples: usize) -> Result<Self> {
        seq.validate()?;
        model.validate()?;
        if n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
        }
        let n = seq.register.n_ions();
        let static_ops = seq
            .ops
            .iter()
            .map(|op| {
                let w = coupling_weights(op, n, model.addressing_ratio, pair_imbalance(op, model));
                expm_hermitian(&op.generator(n, Some(&w)), 1.0).map(Unitary::into_matrix)
            })
            .collect::<Result<Vec<_>>>()?;
        let count = if model.is_stochastic() { n_samples } else { 1 };
        let unitaries = (0..count)
            .into_par_iter()
            .map(|k| {
                let mut rng = stream_rng(model.seed, k as u64);
                realization(seq, model, &static_ops, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { unitaries })
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.unitaries[0].nrows()
    }

    pub fn realizations(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let weight = 1.0 / self.unitaries.len() as f64;
        let mut acc = CMatrix::zeros(rho.nrows(), rho.ncols());
        for u in &self.unitaries {
            acc += (u * rho * u.adjoint()).scale(weight);
        }
        acc
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        crate::quantum::same_dim(self.dim(), rho.dim())?;
        Ok(DensityMatrix::from_matrix_unchecked(self.apply_matrix(rho.matrix())))
    }
}

fn pair_imbalance(op: &PulseOp, model: &NoiseModel) -> f64 {
    match op.kind {
        PulseKind::MSRotation | PulseKind::CPGate => model.intensity_imbalance,
        _ => 0.0,
    }
}

/// Monte-Carlo average of the noisy sequence applied to `rho`.
pub fn sample_noisy_channel(
    seq: &PulseSequence,
    rho: &DensityMatrix,
    model: &NoiseModel,
    n_samples: usize,
) -> Result<DensityMatrix> {
    NoisyChannel::sample(seq, model, n_samples)?.apply(rho)
}

/// Average gate fidelity `(|Tr(V^dag U)|^2 + d) / (d (d + 1))` between two
/// unitaries of dimension `d`.
pub fn unitary_gate_fidelity(actual: &CMatrix, ideal: &CMatrix) -> f64 {
    let d = actual.nrows() as f64;
    let overlap = (ideal.adjoint() * actual).trace().norm_sqr();
    (overlap + d) / (d * (d + 1.0))
}

/// Gate infidelity of an MS rotation under intensity imbalance `epsilon`.
pub fn ms_imbalance_infidelity(theta: f64, epsilon: f64) -> Result<f64> {
    let params = crate::gates::GateParams::default();
    let op = PulseOp::ms((0, 1), theta, 0.0, &params);
    let ideal = op.unitary(2)?;
    let actual = imbalance_perturbation(&op, epsilon, 2)?;
    Ok(1.0 - unitary_gate_fidelity(actual.matrix(), ideal.matrix()))
}

/// Least-squares slope of `log(infidelity)` against `log(epsilon)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfs::LogicalRegister;
    use crate::gates::{bell_sequence, compile_cnot, GateParams};
    use crate::quantum::fidelity;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn reg() -> LogicalRegister {
        LogicalRegister::linear(2)
    }

    #[test]
    fn zero_ratio_is_ideal() {
        let params = GateParams::default();
        for op in compile_cnot(&reg(), 0, 1, &params).unwrap().ops {
            let u = addressing_crosstalk(&op, 0.0, 4).unwrap();
            assert!(max_abs(&(u.matrix() - op.unitary(4).unwrap().matrix())) < 1e-14);
        }
    }

    #[test]
    fn crosstalk_weights() {
        let params = GateParams::default();
        let ms = PulseOp::ms((0, 1), FRAC_PI_2, 0.0, &params);
        assert_eq!(coupling_weights(&ms, 4, 0.05, 0.0), vec![(0, 1.0), (1, 1.0), (2, 0.05)]);
        let cp = PulseOp::cp((1, 2), 0.5, &params);
        assert_eq!(
            coupling_weights(&cp, 4, 0.05, 0.0),
            vec![(1, 1.0), (2, 1.0), (0, 0.05), (3, 0.05)]
        );
        assert_eq!(coupling_weights(&cp, 4, 0.0, 0.2), vec![(1, 1.1), (2, 0.9)]);
    }

    #[test]
    fn ms_crosstalk_leaves_subspace() {
        let params = GateParams::default();
        let op = PulseOp::ms((0, 1), FRAC_PI_2, 0.0, &params);
        let u = addressing_crosstalk(&op, 0.05, 4).unwrap();
        let psi = reg().encode("00").unwrap();
        let out = u.apply(&psi).unwrap().to_density();
        let p = reg().permanence(&out).unwrap();
        assert!(p < 1.0 - 1e-4, "permanence {p}");
    }

    #[test]
    fn cp_crosstalk_is_diagonal() {
        // a sigma_z force on the outer ions only adds phases: no leakage
        let params = GateParams::default();
        let op = PulseOp::cp((1, 2), -PI / 4.0, &params);
        let u = addressing_crosstalk(&op, 0.05, 4).unwrap();
        let off_diag = u.matrix() - CMatrix::from_diagonal(&u.matrix().diagonal());
        assert!(max_abs(&off_diag) < 1e-14);
    }

    #[test]
    fn cnot_with_crosstalk_loses_permanence() {
        let params = GateParams::default();
        let seq = compile_cnot(&reg(), 0, 1, &params).unwrap();
        let model = NoiseModel { addressing_ratio: 0.05, ..NoiseModel::noiseless() };
        let channel = NoisyChannel::sample(&seq, &model, 1).unwrap();
        for bits in ["00", "01", "10", "11"] {
            let rho = reg().encode(bits).unwrap().to_density();
            let p = reg().permanence(&channel.apply(&rho).unwrap()).unwrap();
            assert!(p < 1.0 && p > 0.8, "{bits}: {p}");
        }
    }

    #[test]
    fn imbalance_zero_is_ideal() {
        let params = GateParams::default();
        let op = PulseOp::ms((2, 3), 1.0, 0.2, &params);
        let u = imbalance_perturbation(&op, 0.0, 4).unwrap();
        assert!(max_abs(&(u.matrix() - op.unitary(4).unwrap().matrix())) < 1e-14);
        let z = PulseOp::stark_z(1, 1.0, &params);
        assert!(imbalance_perturbation(&z, 0.1, 4).is_err());
    }

    #[test]
    fn symmetric_imbalance_only_rescales_the_coupling() {
        // (1+e/2)(1-e/2) = 1 - e^2/4: the MS angle shrinks by that factor
        let params = GateParams::default();
        let theta = FRAC_PI_2;
        let eps = 0.1;
        let op = PulseOp::ms((0, 1), theta, 0.0, &params);
        let u = imbalance_perturbation(&op, eps, 2).unwrap();
        let scaled = PulseOp::ms((0, 1), theta * (1.0 - eps * eps / 4.0), 0.0, &params);
        assert!(max_abs(&(u.matrix() - scaled.unitary(2).unwrap().matrix())) < 1e-14);
    }

    #[test]
    fn no_noise_gives_rank_one_output() {
        let seq = bell_sequence(&reg(), 0, 1, &GateParams::default()).unwrap();
        let psi = reg().encode("00").unwrap();
        let rho = sample_noisy_channel(&seq, &psi.to_density(), &NoiseModel::noiseless(), 50).unwrap();
        let ideal = seq.unitary().unwrap().apply(&psi).unwrap();
        assert!((fidelity(&rho, &ideal).unwrap() - 1.0).abs() < 1e-12);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collective_noise_is_invisible_inside_the_subspace() {
        let seq = bell_sequence(&reg(), 0, 1, &GateParams::default()).unwrap();
        let model = NoiseModel {
            collective_phase_std: 2.0,
            ..NoiseModel::noiseless()
        };
        for bits in ["00", "01", "10", "11"] {
            let psi = reg().encode(bits).unwrap();
            let noisy = sample_noisy_channel(&seq, &psi.to_density(), &model, 100).unwrap();
            let clean = seq.unitary().unwrap().apply(&psi).unwrap().to_density();
            assert!(max_abs(&(noisy.matrix() - clean.matrix())) < 1e-10);
        }
    }

    #[test]
    fn channel_is_trace_preserving_and_reproducible() {
        let seq = bell_sequence(&reg(), 0, 1, &GateParams::default()).unwrap();
        let model = NoiseModel::calibrated_demo();
        let psi = reg().encode("10").unwrap().to_density();
        let a = sample_noisy_channel(&seq, &psi, &model, 64).unwrap();
        let b = sample_noisy_channel(&seq, &psi, &model, 64).unwrap();
        assert_eq!(a, b);
        assert!((a.trace() - 1.0).abs() < 1e-10);
        assert!(a.eigenvalues().iter().all(|&l| l > -1e-10));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| sample_noisy_channel(&seq, &psi, &model, 64).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let pts: Vec<(f64, f64)> = [1e-3, 1e-2, 1e-1].iter().map(|&e| (e, 3.0 * e * e)).collect();
        assert!((fit_power_law(&pts) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn noise_model_json() {
        let m = NoiseModel::calibrated_demo();
        assert_eq!(NoiseModel::from_json(&m.to_json()).unwrap(), m);
        assert!(NoiseModel::from_json("{\"addressing_ratio\": 1.5}").is_err());
        assert!(NoiseModel::from_json("{\"bogus\": 1}").is_err());
        assert_eq!(NoiseModel::from_json("{}").unwrap(), NoiseModel::default());
    }
}
