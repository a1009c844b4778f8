//! Projective measurements in per-ion Pauli bases and measurement records.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quantum::{CMatrix, DensityMatrix, Pauli, C64};
use crate::rng::stream_rng;

/// Probabilities more negative than this are rejected instead of clamped.
pub const NEGATIVE_PROBABILITY_TOL: f64 = 1e-9;

/// Outcome histogram keyed by bitstring, first character for the first ion.
/// `'0'` is the `+1` eigenvalue of the measured Pauli.
pub type Histogram = BTreeMap<String, u64>;

/// One measurement basis per ion, drawn from `X`, `Y`, `Z`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MeasurementSetting(Vec<Pauli>);

impl MeasurementSetting {
    pub fn new(bases: Vec<Pauli>) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::InvalidArgument("empty measurement setting".into()));
        }
        if bases.contains(&Pauli::I) {
            return Err(Error::InvalidArgument("measurement basis must be X, Y or Z".into()));
        }
        let cap = crate::quantum::DEFAULT_DIM_CAP.trailing_zeros() as usize;
        if bases.len() > cap {
            return Err(Error::DimensionOverflow {
                dim: 1usize.checked_shl(bases.len() as u32).unwrap_or(usize::MAX),
                cap: crate::quantum::DEFAULT_DIM_CAP,
            });
        }
        Ok(Self(bases))
    }

    pub fn bases(&self) -> &[Pauli] {
        &self.0
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    /// Unitary applied before a computational-basis readout.
    pub fn rotation(&self) -> CMatrix {
        self.0
            .iter()
            .map(|&b| basis_change(b))
            .reduce(|acc, m| acc.kronecker(&m))
            .expect("setting is non-empty")
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{}", b.label())?;
        }
        Ok(())
    }
}

impl FromStr for MeasurementSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bases = s
            .chars()
            .map(|c| match c {
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::InvalidArgument(format!(
                    "unknown measurement basis {other:?} in {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bases)
    }
}

impl Serialize for MeasurementSetting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MeasurementSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `H` for `X`, `H S^dag` for `Y`, identity for `Z`.
fn basis_change(b: Pauli) -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = C64::new(h, 0.0);
    let i = C64::new(0.0, h);
    match b {
        Pauli::X => CMatrix::from_row_slice(2, 2, &[r, r, r, -r]),
        Pauli::Y => CMatrix::from_row_slice(2, 2, &[r, -i, r, i]),
        _ => CMatrix::identity(2, 2),
    }
}

/// Eigenvector of `basis` for outcome `bit` (`0` is the `+1` eigenvalue).
pub(crate) fn outcome_vector(basis: Pauli, bit: usize) -> [C64; 2] {
    let m = basis_change(basis);
    // row `bit` of the basis change, conjugated
    [m[(bit, 0)].conj(), m[(bit, 1)].conj()]
}

/// Every setting on `n` qubits in lexicographic `X < Y < Z` order.
pub fn all_settings(n: usize) -> Vec<MeasurementSetting> {
    let count = 3usize.pow(n as u32);
    (0..count)
        .map(|mut k| {
            let mut bases = vec![Pauli::X; n];
            for slot in bases.iter_mut().rev() {
                *slot = [Pauli::X, Pauli::Y, Pauli::Z][k % 3];
                k /= 3;
            }
            MeasurementSetting(bases)
        })
        .collect()
}

fn n_qubits_of(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("dimension {dim} is not a qubit register")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Outcome probabilities indexed by the binary value of the bitstring.
pub fn outcome_probabilities(rho: &CMatrix, setting: &MeasurementSetting) -> Result<Vec<f64>> {
    let n = n_qubits_of(rho.nrows())?;
    if n != setting.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: setting.n_qubits(),
        });
    }
    let r = setting.rotation();
    let rotated = &r * rho * r.adjoint();
    let mut probs = Vec::with_capacity(rotated.nrows());
    for k in 0..rotated.nrows() {
        let p = rotated[(k, k)].re;
        if p < -NEGATIVE_PROBABILITY_TOL {
            return Err(Error::InvalidProbability { value: p });
        }
        probs.push(p.max(0.0));
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidProbability { value: total });
    }
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

pub(crate) fn bitstring(index: usize, n: usize) -> String {
    (0..n)
        .map(|k| if index >> (n - 1 - k) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn parse_bitstring(s: &str, n: usize) -> Result<usize> {
    if s.len() != n || !s.chars().all(|c| c == '0' || c == '1') {
        return Err(Error::InvalidArgument(format!(
            "outcome {s:?} is not a {n}-bit string"
        )));
    }
    Ok(usize::from_str_radix(s, 2).expect("validated bitstring"))
}

/// Multinomial draw by successive conditional binomials.
fn sample_counts(probs: &[f64], shots: u64, rng: &mut impl Rng) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() || mass <= 0.0 {
            counts[k] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let c = Binomial::new(remaining, q).expect("q lies in [0, 1]").sample(rng);
        counts[k] = c;
        remaining -= c;
        mass -= p;
    }
    counts
}

fn to_histogram(counts: &[u64], n: usize) -> Histogram {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (bitstring(k, n), c))
        .collect()
}

/// Samples `shots` readouts of `rho` in `setting`.
pub fn simulate_measurement(
    rho: &DensityMatrix,
    setting: &MeasurementSetting,
    shots: u64,
    seed: u64,
) -> Result<Histogram> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let probs = outcome_probabilities(rho.matrix(), setting)?;
    let mut rng = stream_rng(seed, 0);
    Ok(to_histogram(&sample_counts(&probs, shots, &mut rng), setting.n_qubits()))
}

/// Finite-shot or infinite-shot readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistics {
    Exact,
    Shots(u64),
}

/// Recorded counts for a list of settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyDataset {
    pub settings: Vec<MeasurementSetting>,
    pub counts: Vec<Histogram>,
    pub shots_per_setting: u64,
}

impl TomographyDataset {
    /// Simulates every setting on `n` qubits; setting `k` uses stream `k`.
    pub fn simulate(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be >= 1".into()));
        }
        let n = n_qubits_of(rho.dim())?;
        let settings = all_settings(n);
        let counts = settings
            .par_iter()
            .enumerate()
            .map(|(k, s)| {
                let probs = outcome_probabilities(rho.matrix(), s)?;
                let mut rng = stream_rng(seed, k as u64);
                Ok(to_histogram(&sample_counts(&probs, shots, &mut rng), n))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            settings,
            counts,
            shots_per_setting: shots,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_per_setting == 0 {
            return Err(Error::InvalidArgument("shots_per_setting must be >= 1".into()));
        }
        if self.settings.len() != self.counts.len() {
            return Err(Error::LengthMismatch {
                expected: self.settings.len(),
                found: self.counts.len(),
            });
        }
        let n = self
            .settings
            .first()
            .ok_or_else(|| Error::Coverage("dataset has no settings".into()))?
            .n_qubits();
        for (s, h) in self.settings.iter().zip(&self.counts) {
            if s.n_qubits() != n {
                return Err(Error::InvalidArgument(format!(
                    "setting {s} does not have {n} bases"
                )));
            }
            let mut total = 0u64;
            for (bits, &c) in h {
                parse_bitstring(bits, n)?;
                total = total
                    .checked_add(c)
                    .ok_or_else(|| Error::InvalidArgument("count overflow".into()))?;
            }
            if total != self.shots_per_setting {
                return Err(Error::InvalidArgument(format!(
                    "setting {s} has {total} counts, expected {}",
                    self.shots_per_setting
                )));
            }
        }
        Ok(())
    }

    pub fn frequencies(&self) -> Result<FrequencyData> {
        self.validate()?;
        let n = self.settings[0].n_qubits();
        let shots = self.shots_per_setting as f64;
        let probabilities = self
            .counts
            .iter()
            .map(|h| {
                let mut f = vec![0.0; 1 << n];
                for (bits, &c) in h {
                    f[parse_bitstring(bits, n)?] = c as f64 / shots;
                }
                Ok(f)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FrequencyData {
            settings: self.settings.clone(),
            probabilities,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let data: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("tomography dataset: {e}")))?;
        data.validate()?;
        Ok(data)
    }
}

/// Outcome frequencies per setting, indexed like [`outcome_probabilities`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyData {
    pub settings: Vec<MeasurementSetting>,
    pub probabilities: Vec<Vec<f64>>,
}

impl FrequencyData {
    /// Infinite-shot frequencies for every setting.
    pub fn exact(rho: &CMatrix) -> Result<Self> {
        let settings = all_settings(n_qubits_of(rho.nrows())?);
        let probabilities = settings
            .iter()
            .map(|s| outcome_probabilities(rho, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            settings,
            probabilities,
        })
    }

    pub fn measure(rho: &DensityMatrix, statistics: Statistics, seed: u64) -> Result<Self> {
        match statistics {
            Statistics::Exact => Self::exact(rho.matrix()),
            Statistics::Shots(shots) => TomographyDataset::simulate(rho, shots, seed)?.frequencies(),
        }
    }
}
