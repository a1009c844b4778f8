//! Process tomography in the Pauli operator basis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dfs::LogicalRegister;
use crate::error::{Error, Result};
use crate::quantum::{
    eigh, matrix_from_rows, matrix_rows, pauli_string, CMatrix, CVector, DensityMatrix, Pauli, Unitary, C64,
};
use crate::rng::subseed;

use super::measurement::{FrequencyData, Statistics};
use super::state::{project_spectrum, reconstruct_frequencies, Estimator};

/// Relative singular-value floor of the reconstruction system.
pub const CONDITIONING_FLOOR: f64 = 1e-10;

/// Pauli products on `n` qubits, ordered `I < X < Y < Z` with the first
/// qubit most significant.
pub fn pauli_basis(n: usize) -> Vec<(String, CMatrix)> {
    let count = 4usize.pow(n as u32);
    (0..count)
        .map(|mut k| {
            let mut p = vec![Pauli::I; n];
            for slot in p.iter_mut().rev() {
                *slot = Pauli::ALL[k % 4];
                k /= 4;
            }
            (p.iter().map(|q| q.label()).collect(), pauli_string(&p))
        })
        .collect()
}

/// Process matrix `E(rho) = sum_mn chi_mn A_m rho A_n^dag` over
/// [`pauli_basis`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix {
    n_qubits: usize,
    entries: CMatrix,
}

impl ChiMatrix {
    pub fn new(n_qubits: usize, entries: CMatrix) -> Result<Self> {
        let d2 = 4usize.pow(n_qubits as u32);
        if entries.nrows() != d2 || entries.ncols() != d2 {
            return Err(Error::DimensionMismatch {
                expected: d2,
                found: entries.nrows(),
            });
        }
        Ok(Self { n_qubits, entries })
    }

    /// Rank-one process matrix of a unitary: `chi = c c^dag` with
    /// `c_m = Tr(A_m U) / d`.
    pub fn from_unitary(u: &Unitary) -> Result<Self> {
        let d = u.dim();
        let n = d.trailing_zeros() as usize;
        if !d.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("dimension {d} is not a qubit register")));
        }
        let coeffs = CVector::from_iterator(
            4usize.pow(n as u32),
            pauli_basis(n)
                .iter()
                .map(|(_, a)| (a.adjoint() * u.matrix()).trace() / d as f64),
        );
        Self::new(n, &coeffs * coeffs.adjoint())
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_unitary(&Unitary::identity(1 << n_qubits)).expect("identity is a qubit unitary")
    }

    /// Fully depolarizing channel, `chi = I / d^2`.
    pub fn depolarizing(n_qubits: usize) -> Self {
        let d2 = 4usize.pow(n_qubits as u32);
        Self {
            n_qubits,
            entries: CMatrix::identity(d2, d2).unscale(d2 as f64),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn labels(&self) -> Vec<String> {
        pauli_basis(self.n_qubits).into_iter().map(|(l, _)| l).collect()
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let basis = pauli_basis(self.n_qubits);
        let d = 1 << self.n_qubits;
        let mut out = CMatrix::zeros(d, d);
        let left: Vec<CMatrix> = basis.iter().map(|(_, a)| a * rho).collect();
        for (m, lm) in left.iter().enumerate() {
            for (n, (_, an)) in basis.iter().enumerate() {
                let c = self.entries[(m, n)];
                if c != C64::new(0.0, 0.0) {
                    out += (lm * an.adjoint()) * c;
                }
            }
        }
        out
    }

    /// `Re Tr(chi_a chi_b)`; for trace-preserving maps against a unitary
    /// this is the process fidelity.
    pub fn process_fidelity(&self, other: &ChiMatrix) -> f64 {
        (&self.entries * &other.entries).trace().re
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.entries - self.entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Choi operator `sum_mn chi_mn |A_m>> <<A_n|`.
    pub fn choi(&self) -> CMatrix {
        let basis = pauli_basis(self.n_qubits);
        let d = 1 << self.n_qubits;
        let vecs: Vec<CVector> = basis
            .iter()
            .map(|(_, a)| CVector::from_iterator(d * d, a.transpose().iter().cloned()))
            .collect();
        let mut j = CMatrix::zeros(d * d, d * d);
        for (m, vm) in vecs.iter().enumerate() {
            for (n, vn) in vecs.iter().enumerate() {
                let c = self.entries[(m, n)];
                if c != C64::new(0.0, 0.0) {
                    j += (vm * vn.adjoint()) * c;
                }
            }
        }
        j
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        let c = self.choi();
        let h = (&c + c.adjoint()).unscale(2.0);
        eigh(&h).0.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `max |sum_mn chi_mn A_n^dag A_m - I|`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let basis = pauli_basis(self.n_qubits);
        let d = 1 << self.n_qubits;
        let mut acc = CMatrix::zeros(d, d);
        for (m, (_, am)) in basis.iter().enumerate() {
            for (n, (_, an)) in basis.iter().enumerate() {
                acc += (an.adjoint() * am) * self.entries[(m, n)];
            }
        }
        (acc - CMatrix::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Convex combination of process matrices.
    pub fn mixture(parts: &[(f64, &ChiMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let mut acc = CMatrix::zeros(first.1.entries.nrows(), first.1.entries.ncols());
        for (w, chi) in parts {
            crate::quantum::same_dim(first.1.entries.nrows(), chi.entries.nrows())?;
            acc += chi.entries.scale(*w);
        }
        Self::new(first.1.n_qubits, acc)
    }

    pub fn to_record(&self) -> ChiRecord {
        ChiRecord {
            basis: self.labels(),
            entries: matrix_rows(&self.entries),
        }
    }

    pub fn from_record(record: &ChiRecord) -> Result<Self> {
        let d2 = record.basis.len();
        let n = (d2.trailing_zeros() / 2) as usize;
        if 4usize.pow(n as u32) != d2 {
            return Err(Error::InvalidArgument(format!("{d2} basis labels")));
        }
        let chi = Self::new(n, matrix_from_rows(&record.entries)?)?;
        if chi.labels() != record.basis {
            return Err(Error::InvalidArgument("unexpected chi basis order".into()));
        }
        Ok(chi)
    }
}

/// Serialized process matrix with its operator basis labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiRecord {
    pub basis: Vec<String>,
    pub entries: Vec<Vec<[f64; 2]>>,
}

/// Inputs `{|0>, |1>, |+>, |+i>}` on every qubit, first qubit most
/// significant, labelled like `"0+"`.
pub fn canonical_inputs(n: usize) -> Vec<(String, DensityMatrix)> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let single = [
        ('0', [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
        ('1', [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]),
        ('+', [C64::new(h, 0.0), C64::new(h, 0.0)]),
        ('i', [C64::new(h, 0.0), C64::new(0.0, h)]),
    ];
    let count = 4usize.pow(n as u32);
    (0..count)
        .map(|mut k| {
            let mut picks = vec![0usize; n];
            for slot in picks.iter_mut().rev() {
                *slot = k % 4;
                k /= 4;
            }
            let label: String = picks.iter().map(|&p| single[p].0).collect();
            let psi = picks
                .iter()
                .map(|&p| CVector::from_vec(single[p].1.to_vec()))
                .reduce(|a, b| a.kronecker(&b))
                .expect("n >= 1");
            (label, DensityMatrix::from_matrix_unchecked(&psi * psi.adjoint()))
        })
        .collect()
}

/// Least-squares `chi` with `sum_mn chi_mn A_m rho_j A_n^dag = out_j`.
pub fn solve_chi(n: usize, inputs: &[CMatrix], outputs: &[CMatrix]) -> Result<CMatrix> {
    if inputs.len() != outputs.len() {
        return Err(Error::LengthMismatch {
            expected: inputs.len(),
            found: outputs.len(),
        });
    }
    let basis = pauli_basis(n);
    let d = 1 << n;
    let d2 = basis.len();
    let rows = inputs.len() * d * d;
    let mut system = CMatrix::zeros(rows, d2 * d2);
    for (j, rho) in inputs.iter().enumerate() {
        for (m, (_, am)) in basis.iter().enumerate() {
            let left = am * rho;
            for (k, (_, an)) in basis.iter().enumerate() {
                let term = &left * an.adjoint();
                for r in 0..d {
                    for c in 0..d {
                        system[(j * d * d + r * d + c, m * d2 + k)] = term[(r, c)];
                    }
                }
            }
        }
    }
    let mut rhs = CVector::zeros(rows);
    for (j, out) in outputs.iter().enumerate() {
        crate::quantum::same_dim(d, out.nrows())?;
        for r in 0..d {
            for c in 0..d {
                rhs[j * d * d + r * d + c] = out[(r, c)];
            }
        }
    }
    let svd = system.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smax.is_nan() || smax <= 0.0 || smin / smax < CONDITIONING_FLOOR {
        return Err(Error::Conditioning);
    }
    let x = svd.solve(&rhs, 0.0).map_err(|_| Error::Conditioning)?;
    Ok(CMatrix::from_fn(d2, d2, |m, k| x[m * d2 + k]))
}

/// Nearest completely positive `chi` with the same trace.
fn project_cp(chi: &CMatrix) -> CMatrix {
    let total = chi.trace().re.max(0.0);
    project_spectrum(chi, total)
}

fn reconstruct_output(out: &CMatrix, statistics: Statistics, seed: u64) -> Result<CMatrix> {
    let trace = out.trace().re;
    if trace <= 0.0 {
        return Ok(CMatrix::zeros(out.nrows(), out.ncols()));
    }
    let rho = DensityMatrix::from_matrix_unchecked(out.unscale(trace));
    let data = FrequencyData::measure(&rho, statistics, seed)?;
    Ok(reconstruct_frequencies(&data, Estimator::Linear)?.into_matrix().scale(trace))
}

/// Process tomography of a channel on `n` qubits. Each output is measured
/// in all Pauli settings (input `j` uses sub-seed `j`), reconstructed, and
/// the resulting `chi` is projected onto completely positive maps.
pub fn process_tomography<F>(n: usize, channel: F, statistics: Statistics, seed: u64) -> Result<ChiMatrix>
where
    F: Fn(&DensityMatrix) -> Result<CMatrix> + Sync,
{
    let inputs = canonical_inputs(n);
    let outputs = inputs
        .par_iter()
        .enumerate()
        .map(|(j, (_, rho))| reconstruct_output(&channel(rho)?, statistics, subseed(seed, j as u64)))
        .collect::<Result<Vec<_>>>()?;
    let in_mats: Vec<CMatrix> = inputs.into_iter().map(|(_, r)| r.into_matrix()).collect();
    let chi = solve_chi(n, &in_mats, &outputs)?;
    ChiMatrix::new(n, project_cp(&chi))
}

/// Process tomography of a logical gate realized on the physical register.
#[derive(Debug, Clone, PartialEq)]
pub struct DfsProcessResult {
    /// From the renormalized in-subspace outputs.
    pub chi: ChiMatrix,
    /// From the outputs weighted by their permanence (trace decreasing).
    pub chi_unnormalized: ChiMatrix,
    /// Permanence measured for each canonical input.
    pub permanences: Vec<f64>,
}

/// Encodes each canonical logical input, runs the physical channel,
/// reconstructs the physical output by state tomography and keeps only the
/// part inside the subspace.
pub fn dfs_process_tomography<F>(
    reg: &LogicalRegister,
    channel: F,
    statistics: Statistics,
    seed: u64,
) -> Result<DfsProcessResult>
where
    F: Fn(&DensityMatrix) -> Result<DensityMatrix> + Sync,
{
    reg.validate()?;
    let n = reg.n_logical();
    let inputs = canonical_inputs(n);
    let decoded = inputs
        .par_iter()
        .enumerate()
        .map(|(j, (_, logical))| {
            let physical_in = reg.encode_density(logical)?;
            let physical_out = channel(&physical_in)?;
            let data = FrequencyData::measure(&physical_out, statistics, subseed(seed, j as u64))?;
            let rho = reconstruct_frequencies(&data, Estimator::Linear)?;
            reg.decode_in_dfs(&rho)
        })
        .collect::<Result<Vec<_>>>()?;
    let in_mats: Vec<CMatrix> = inputs.into_iter().map(|(_, r)| r.into_matrix()).collect();
    let normalized: Vec<CMatrix> = decoded.iter().map(|d| d.logical.matrix().clone()).collect();
    let weighted: Vec<CMatrix> = decoded
        .iter()
        .map(|d| d.logical.matrix().scale(d.permanence))
        .collect();
    let chi = ChiMatrix::new(n, project_cp(&solve_chi(n, &in_mats, &normalized)?))?;
    let chi_unnormalized = ChiMatrix::new(n, project_cp(&solve_chi(n, &in_mats, &weighted)?))?;
    Ok(DfsProcessResult {
        chi,
        chi_unnormalized,
        permanences: decoded.iter().map(|d| d.permanence).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{compile_cnot, target_cnot_matrix, GateParams};

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn unitary_channel(u: CMatrix) -> impl Fn(&DensityMatrix) -> Result<CMatrix> + Sync {
        move |rho| Ok(&u * rho.matrix() * u.adjoint())
    }

    #[test]
    fn basis_labels_are_lexicographic() {
        let labels: Vec<String> = pauli_basis(2).into_iter().map(|(l, _)| l).collect();
        assert_eq!(labels.len(), 16);
        assert_eq!(&labels[..5], &["II", "IX", "IY", "IZ", "XI"]);
        assert_eq!(labels[15], "ZZ");
        let inputs = canonical_inputs(2);
        assert_eq!(inputs.len(), 16);
        assert_eq!(inputs[6].0, "1+");
    }

    #[test]
    fn identity_channel_gives_single_entry() {
        let chi = process_tomography(2, |rho| Ok(rho.matrix().clone()), Statistics::Exact, 1).unwrap();
        let mut expected = CMatrix::zeros(16, 16);
        expected[(0, 0)] = C64::new(1.0, 0.0);
        assert!(max_abs(&(chi.entries() - expected)) < 1e-9);
    }

    #[test]
    fn depolarizing_channel_gives_flat_chi() {
        let chi = process_tomography(
            2,
            |rho| Ok(CMatrix::identity(4, 4).scale(rho.trace() / 4.0)),
            Statistics::Exact,
            1,
        )
        .unwrap();
        assert!(max_abs(&(chi.entries() - ChiMatrix::depolarizing(2).entries())) < 1e-9);
    }

    #[test]
    fn cnot_process_fidelity() {
        let u = target_cnot_matrix();
        let ideal = ChiMatrix::from_unitary(&Unitary::new(u.clone()).unwrap()).unwrap();
        let chi = process_tomography(2, unitary_channel(u), Statistics::Exact, 1).unwrap();
        assert!(chi.process_fidelity(&ideal) > 1.0 - 1e-9);
        assert!(chi.hermiticity_residual() < 1e-9);
        assert!(chi.min_choi_eigenvalue() > -1e-8);
        assert!(chi.trace_preservation_residual() < 1e-6);
        assert!((ideal.process_fidelity(&ideal) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_reproduces_the_channel() {
        let u = target_cnot_matrix();
        let chi = ChiMatrix::from_unitary(&Unitary::new(u.clone()).unwrap()).unwrap();
        for (_, rho) in canonical_inputs(2) {
            let expected = &u * rho.matrix() * u.adjoint();
            assert!(max_abs(&(chi.apply(rho.matrix()) - expected)) < 1e-12);
        }
    }

    #[test]
    fn mixture_of_channels_is_linear() {
        let u = target_cnot_matrix();
        let a = process_tomography(2, unitary_channel(u.clone()), Statistics::Exact, 1).unwrap();
        let b = process_tomography(2, |rho| Ok(rho.matrix().clone()), Statistics::Exact, 1).unwrap();
        let mixed = process_tomography(
            2,
            |rho| Ok((&u * rho.matrix() * u.adjoint()).scale(0.3) + rho.matrix().scale(0.7)),
            Statistics::Exact,
            1,
        )
        .unwrap();
        let expected = ChiMatrix::mixture(&[(0.3, &a), (0.7, &b)]).unwrap();
        assert!(max_abs(&(mixed.entries() - expected.entries())) < 1e-8);
    }

    #[test]
    fn singular_inputs_are_reported() {
        let inputs = vec![CMatrix::identity(2, 2).unscale(2.0); 4];
        let outputs = inputs.clone();
        assert_eq!(solve_chi(1, &inputs, &outputs), Err(Error::Conditioning));
    }

    #[test]
    fn noiseless_dfs_pipeline_matches_the_printed_cnot() {
        let reg = LogicalRegister::linear(2);
        let seq = compile_cnot(&reg, 0, 1, &GateParams::default()).unwrap();
        let u = seq.unitary().unwrap();
        let res = dfs_process_tomography(&reg, |rho| rho.evolve(&u), Statistics::Exact, 3).unwrap();
        let ideal = ChiMatrix::from_unitary(&Unitary::new(target_cnot_matrix()).unwrap()).unwrap();
        assert!(res.chi.process_fidelity(&ideal) > 0.999);
        assert!(res.permanences.iter().all(|p| (p - 1.0).abs() < 1e-9));
    }

    #[test]
    fn record_round_trip() {
        let chi = ChiMatrix::depolarizing(1);
        let rec = chi.to_record();
        assert_eq!(rec.basis, vec!["I", "X", "Y", "Z"]);
        assert_eq!(ChiMatrix::from_record(&rec).unwrap(), chi);
    }
}
