//! Haar sampling, mean gate fidelity and subspace reports.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::dfs::{LogicalRegister, PERMANENCE_FLOOR};
use crate::error::{Error, Result};
use crate::quantum::{fidelity, CMatrix, CVector, DensityMatrix, StateVector, Unitary, C64};
use crate::rng::stream_rng;

use super::process::{pauli_basis, ChiMatrix};

/// Smallest sample count accepted by the Haar estimators.
pub const MIN_HAAR_SAMPLES: usize = 1000;

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state: a normalized complex Gaussian vector.
pub fn haar_state(dim: usize, rng: &mut impl Rng) -> CVector {
    let g = CVector::from_fn(dim, |_, _| gaussian(rng));
    let norm = g.norm();
    g.unscale(norm)
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix with
/// the phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> Unitary {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (k, mut col) in q.column_iter_mut().enumerate() {
        let d = r[(k, k)];
        col *= d / d.norm();
    }
    Unitary::from_matrix_unchecked(q)
}

/// A channel on logical states that can be scored against a target state.
pub trait LogicalChannel: Sync {
    fn dim(&self) -> usize;

    /// `<phi| E(|psi><psi|) |phi>`. Stochastic channels may return a single
    /// trajectory drawn from `rng` whose mean is the exact value.
    fn overlap(&self, psi: &CVector, phi: &CVector, rng: &mut ChaCha8Rng) -> f64;

    /// `Tr E(|psi><psi|)`, below one for trace-decreasing maps.
    fn success(&self, _psi: &CVector, _rng: &mut ChaCha8Rng) -> f64 {
        1.0
    }
}

/// A process matrix with its operator basis cached for repeated scoring.
#[derive(Debug, Clone)]
pub struct ChiChannel {
    entries: CMatrix,
    basis: Vec<CMatrix>,
}

impl ChiChannel {
    pub fn new(chi: &ChiMatrix) -> Self {
        Self {
            entries: chi.entries().clone(),
            basis: pauli_basis(chi.n_qubits()).into_iter().map(|(_, a)| a).collect(),
        }
    }

    fn images(&self, psi: &CVector) -> Vec<CVector> {
        self.basis.iter().map(|a| a * psi).collect()
    }

    /// `(overlap, success)` in one pass.
    fn evaluate(&self, psi: &CVector, phi: &CVector) -> (f64, f64) {
        let w = self.images(psi);
        let v: Vec<C64> = w.iter().map(|wm| phi.dotc(wm)).collect();
        let mut overlap = C64::new(0.0, 0.0);
        let mut success = C64::new(0.0, 0.0);
        for (m, wm) in w.iter().enumerate() {
            for (n, wn) in w.iter().enumerate() {
                let c = self.entries[(m, n)];
                overlap += c * v[m] * v[n].conj();
                success += c * wn.dotc(wm);
            }
        }
        (overlap.re, success.re)
    }
}

impl LogicalChannel for ChiChannel {
    fn dim(&self) -> usize {
        self.basis[0].nrows()
    }

    fn overlap(&self, psi: &CVector, phi: &CVector, _rng: &mut ChaCha8Rng) -> f64 {
        self.evaluate(psi, phi).0
    }

    fn success(&self, psi: &CVector, _rng: &mut ChaCha8Rng) -> f64 {
        self.evaluate(psi, psi).1
    }
}

/// `rho -> U rho U^dag`.
#[derive(Debug, Clone)]
pub struct UnitaryChannel(pub Unitary);

impl LogicalChannel for UnitaryChannel {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn overlap(&self, psi: &CVector, phi: &CVector, _rng: &mut ChaCha8Rng) -> f64 {
        phi.dotc(&(self.0.matrix() * psi)).norm_sqr()
    }
}

/// `rho -> (1 - p) rho + p I / d`, evaluated exactly.
#[derive(Debug, Clone, Copy)]
pub struct Depolarizing {
    pub dim: usize,
    pub p: f64,
}

impl LogicalChannel for Depolarizing {
    fn dim(&self) -> usize {
        self.dim
    }

    fn overlap(&self, psi: &CVector, phi: &CVector, _rng: &mut ChaCha8Rng) -> f64 {
        (1.0 - self.p) * phi.dotc(psi).norm_sqr() + self.p / self.dim as f64
    }
}

/// The same depolarizing channel unravelled into Pauli trajectories: with
/// probability `p` a uniformly random Pauli product (identity included) is
/// applied.
#[derive(Debug, Clone)]
pub struct PauliTwirlTrajectories {
    pub p: f64,
    paulis: Vec<CMatrix>,
}

impl PauliTwirlTrajectories {
    pub fn new(n_qubits: usize, p: f64) -> Self {
        Self {
            p,
            paulis: pauli_basis(n_qubits).into_iter().map(|(_, a)| a).collect(),
        }
    }
}

impl LogicalChannel for PauliTwirlTrajectories {
    fn dim(&self) -> usize {
        self.paulis[0].nrows()
    }

    fn overlap(&self, psi: &CVector, phi: &CVector, rng: &mut ChaCha8Rng) -> f64 {
        if rng.random::<f64>() < self.p {
            let k = rng.random_range(0..self.paulis.len());
            phi.dotc(&(&self.paulis[k] * psi)).norm_sqr()
        } else {
            phi.dotc(psi).norm_sqr()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Neumaier-compensated sum; plain summation drifts by ~1e-12 over the
/// sample counts used here.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + carry
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = compensated_sum(values.iter().copied()) / n as f64;
        let var = if n > 1 {
            compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            samples: n,
        }
    }
}

fn check_samples(channel: &impl LogicalChannel, ideal: &Unitary, n_samples: usize) -> Result<()> {
    if n_samples < MIN_HAAR_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_HAAR_SAMPLES} Haar samples, got {n_samples}"
        )));
    }
    crate::quantum::same_dim(channel.dim(), ideal.dim())
}

/// Haar average of `<psi| U^dag E(|psi><psi|) U |psi>`. Sample `k` draws
/// from stream `k` of `seed`.
pub fn mean_gate_fidelity(
    channel: &impl LogicalChannel,
    ideal: &Unitary,
    n_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    check_samples(channel, ideal, n_samples)?;
    let d = ideal.dim();
    let values: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let psi = haar_state(d, &mut rng);
            let phi = ideal.matrix() * &psi;
            channel.overlap(&psi, &phi, &mut rng)
        })
        .collect();
    Ok(Estimate::from_samples(&values))
}

/// Haar averages for a trace-decreasing in-subspace channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DfsGateSummary {
    /// Probability of remaining in the subspace.
    pub permanence: Estimate,
    /// Fidelity of the renormalized in-subspace output.
    pub fidelity: Estimate,
    /// Unnormalized overlap: success and correctness together.
    pub overall: Estimate,
}

/// Scores the permanence-weighted process matrix from
/// [`super::dfs_process_tomography`] over Haar inputs.
pub fn dfs_gate_summary(
    chi_unnormalized: &ChiMatrix,
    ideal: &Unitary,
    n_samples: usize,
    seed: u64,
) -> Result<DfsGateSummary> {
    let channel = ChiChannel::new(chi_unnormalized);
    check_samples(&channel, ideal, n_samples)?;
    let d = ideal.dim();
    let triples: Vec<(f64, f64, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let psi = haar_state(d, &mut rng);
            let phi = ideal.matrix() * &psi;
            let (overlap, _) = channel.evaluate(&psi, &phi);
            let (_, success) = channel.evaluate(&psi, &psi);
            let success = success.clamp(0.0, 1.0);
            let overlap = overlap.clamp(0.0, success);
            let fid = if success > PERMANENCE_FLOOR { overlap / success } else { 0.0 };
            (success, fid, overlap)
        })
        .collect();
    let pick = |f: fn(&(f64, f64, f64)) -> f64| Estimate::from_samples(&triples.iter().map(f).collect::<Vec<_>>());
    Ok(DfsGateSummary {
        permanence: pick(|t| t.0),
        fidelity: pick(|t| t.1),
        overall: pick(|t| t.2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DfsReport {
    pub permanence: f64,
    pub fidelity: f64,
    pub overall: f64,
}

/// Permanence of a physical state, fidelity of its renormalized logical
/// part with `ideal`, and their product.
pub fn dfs_report(reg: &LogicalRegister, rho: &DensityMatrix, ideal: &StateVector) -> Result<DfsReport> {
    crate::quantum::same_dim(reg.logical_dim(), ideal.dim())?;
    let decoded = reg.decode_in_dfs(rho)?;
    let fid = fidelity(&decoded.logical, ideal)?;
    Ok(DfsReport {
        permanence: decoded.permanence,
        fidelity: fid,
        overall: decoded.permanence * fid,
    })
}
