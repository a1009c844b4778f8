//! State reconstruction from Pauli-basis frequencies.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::quantum::{eigh, CMatrix, CVector, DensityMatrix, C64};

use super::measurement::{outcome_vector, FrequencyData, MeasurementSetting, TomographyDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// Linear inversion followed by the nearest density matrix.
    #[default]
    Linear,
    /// Iterative `R rho R` maximum likelihood seeded by the linear estimate.
    MaximumLikelihood { iterations: usize },
}

/// Checks that every setting on `n` qubits appears exactly once and
/// returns `n`.
fn check_coverage(settings: &[MeasurementSetting]) -> Result<usize> {
    let n = settings
        .first()
        .ok_or_else(|| Error::Coverage("no settings".into()))?
        .n_qubits();
    let mut seen: HashMap<&MeasurementSetting, ()> = HashMap::new();
    for s in settings {
        if s.n_qubits() != n {
            return Err(Error::Coverage(format!("setting {s} has the wrong length")));
        }
        if seen.insert(s, ()).is_some() {
            return Err(Error::Coverage(format!("setting {s} appears twice")));
        }
    }
    let needed = 3usize.pow(n as u32);
    if settings.len() != needed {
        return Err(Error::Coverage(format!(
            "{} of {needed} settings present",
            settings.len()
        )));
    }
    Ok(n)
}

fn product_vector(setting: &MeasurementSetting, outcome: usize) -> CVector {
    let n = setting.n_qubits();
    let mut v = CVector::from_element(1, C64::new(1.0, 0.0));
    for (k, &b) in setting.bases().iter().enumerate() {
        let bit = outcome >> (n - 1 - k) & 1;
        let e = outcome_vector(b, bit);
        let next = CVector::from_fn(v.len() * 2, |i, _| v[i / 2] * e[i % 2]);
        v = next;
    }
    v
}

/// `(1 / 3^n) sum_s sum_b f_s(b) (x)_k (3 Pi_{s_k, b_k} - I)`, the unbiased
/// estimator for a complete product-basis setting set.
pub fn linear_inversion(data: &FrequencyData) -> Result<CMatrix> {
    let n = check_coverage(&data.settings)?;
    let dim = 1usize << n;
    if data.probabilities.len() != data.settings.len() {
        return Err(Error::LengthMismatch {
            expected: data.settings.len(),
            found: data.probabilities.len(),
        });
    }
    let single = |s: &MeasurementSetting, k: usize, bit: usize| {
        let e = outcome_vector(s.bases()[k], bit);
        let v = CVector::from_vec(e.to_vec());
        (&v * v.adjoint()).scale(3.0) - CMatrix::identity(2, 2)
    };
    let mut acc = CMatrix::zeros(dim, dim);
    for (s, freqs) in data.settings.iter().zip(&data.probabilities) {
        if freqs.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: freqs.len(),
            });
        }
        for (b, &f) in freqs.iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            let op = (0..n)
                .map(|k| single(s, k, b >> (n - 1 - k) & 1))
                .reduce(|a, m| a.kronecker(&m))
                .expect("n >= 1");
            acc += op.scale(f);
        }
    }
    Ok(acc.unscale(3f64.powi(n as i32)))
}

/// Euclidean projection of `vals` onto `{x >= 0, sum x = total}`.
fn simplex_projection(vals: &[f64], total: f64) -> Vec<f64> {
    let mut sorted = vals.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - total) / (k + 1) as f64;
        if v - t > 0.0 {
            shift = t;
        }
    }
    vals.iter().map(|&v| (v - shift).max(0.0)).collect()
}

/// Nearest (Frobenius) positive semidefinite matrix with trace `total`.
pub(crate) fn project_spectrum(m: &CMatrix, total: f64) -> CMatrix {
    let herm = (m + m.adjoint()).unscale(2.0);
    let (vals, vecs) = eigh(&herm);
    let clipped = simplex_projection(vals.as_slice(), total);
    let d = CVector::from_iterator(clipped.len(), clipped.iter().map(|&x| C64::new(x, 0.0)));
    &vecs * CMatrix::from_diagonal(&d) * vecs.adjoint()
}

/// Nearest density matrix in Frobenius norm.
pub fn project_to_density(m: &CMatrix) -> DensityMatrix {
    DensityMatrix::from_matrix_unchecked(project_spectrum(m, 1.0))
}

fn maximum_likelihood(data: &FrequencyData, start: &CMatrix, iterations: usize) -> CMatrix {
    let dim = start.nrows();
    let projectors: Vec<(f64, CVector)> = data
        .settings
        .iter()
        .zip(&data.probabilities)
        .flat_map(|(s, freqs)| {
            freqs
                .iter()
                .enumerate()
                .filter(|(_, &f)| f > 0.0)
                .map(move |(b, &f)| (f, product_vector(s, b)))
        })
        .collect();
    // mixing in a little of the identity keeps every predicted probability positive
    let mut rho = start.scale(0.99) + CMatrix::identity(dim, dim).scale(0.01 / dim as f64);
    for _ in 0..iterations {
        let mut r = CMatrix::zeros(dim, dim);
        for (f, v) in &projectors {
            let p = v.dotc(&(&rho * v)).re.max(1e-300);
            r += (v * v.adjoint()).scale(f / p);
        }
        let next = &r * &rho * &r;
        let tr = next.trace().re;
        rho = next.unscale(tr);
    }
    (&rho + rho.adjoint()).unscale(2.0)
}

pub fn reconstruct_frequencies(data: &FrequencyData, estimator: Estimator) -> Result<DensityMatrix> {
    let linear = project_to_density(&linear_inversion(data)?);
    match estimator {
        Estimator::Linear => Ok(linear),
        Estimator::MaximumLikelihood { iterations } => Ok(DensityMatrix::from_matrix_unchecked(
            maximum_likelihood(data, linear.matrix(), iterations),
        )),
    }
}

/// Linear inversion plus projection onto density matrices.
pub fn reconstruct_state(data: &TomographyDataset) -> Result<DensityMatrix> {
    reconstruct_frequencies(&data.frequencies()?, Estimator::Linear)
}
