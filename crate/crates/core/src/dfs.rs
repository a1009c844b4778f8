//! Logical qubits encoded in ion pairs, `|0>_L = |10>_P` and `|1>_L = |01>_P`.
//!
//! Each pair holds exactly one `|0>_P` excitation, so every logical basis
//! state has the same total `sum_k sigma_z^(k)` and collective phase noise
//! only contributes a global phase inside the subspace.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::ContinuousCDF;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{CMatrix, CVector, DensityMatrix, StateVector, ONE, ZERO};
use crate::rng::stream_rng;

/// Below this permanence the renormalized logical state is meaningless.
pub const PERMANENCE_FLOOR: f64 = 1e-9;

/// Default upper bound reported by [`coherence_ratio`].
pub const DEFAULT_RATIO_CAP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LogicalRegister {
    /// Ion pairs, one per logical qubit. The first ion of a pair holds
    /// `|1>_P` in `|0>_L`.
    pub pairs: Vec<(usize, usize)>,
}

impl LogicalRegister {
    /// Adjacent pairs `(0,1), (2,3), ...` along the ion string.
    pub fn linear(n_logical: usize) -> Self {
        Self {
            pairs: (0..n_logical).map(|k| (2 * k, 2 * k + 1)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::Layout("register has no logical qubits".into()));
        }
        if self.pairs.len() > 6 {
            return Err(Error::DimensionOverflow {
                dim: 1usize.checked_shl(2 * self.pairs.len() as u32).unwrap_or(usize::MAX),
                cap: crate::quantum::DEFAULT_DIM_CAP,
            });
        }
        let n = self.n_ions();
        let mut seen = vec![false; n];
        for &(a, b) in &self.pairs {
            for ion in [a, b] {
                if ion >= n {
                    return Err(Error::Layout(format!(
                        "ion {ion} outside a string of {n} ions"
                    )));
                }
                if seen[ion] {
                    return Err(Error::Layout(format!("ion {ion} used by two pairs")));
                }
                seen[ion] = true;
            }
        }
        Ok(())
    }

    pub fn n_logical(&self) -> usize {
        self.pairs.len()
    }

    pub fn n_ions(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn physical_dim(&self) -> usize {
        1 << self.n_ions()
    }

    pub fn logical_dim(&self) -> usize {
        1 << self.n_logical()
    }

    /// Physical basis index of a logical basis index (both big-endian).
    pub fn physical_index(&self, logical: usize) -> usize {
        let n_l = self.n_logical();
        let n_p = self.n_ions();
        let mut idx = 0usize;
        for (q, &(a, b)) in self.pairs.iter().enumerate() {
            let bit = (logical >> (n_l - 1 - q)) & 1;
            let ion = if bit == 0 { a } else { b };
            idx |= 1 << (n_p - 1 - ion);
        }
        idx
    }

    /// Isometry whose columns are the encoded logical basis states.
    pub fn isometry(&self) -> CMatrix {
        let mut v = CMatrix::zeros(self.physical_dim(), self.logical_dim());
        for l in 0..self.logical_dim() {
            v[(self.physical_index(l), l)] = ONE;
        }
        v
    }

    pub fn projector(&self) -> DfsProjector {
        let v = self.isometry();
        DfsProjector {
            matrix: &v * v.adjoint(),
        }
    }

    /// Encodes a logical bit string such as `"01"`.
    pub fn encode(&self, logical_bits: &str) -> Result<StateVector> {
        if logical_bits.chars().count() != self.n_logical() {
            return Err(Error::LengthMismatch {
                expected: self.n_logical(),
                found: logical_bits.chars().count(),
            });
        }
        let mut logical = 0usize;
        for c in logical_bits.chars() {
            let bit = match c {
                '0' => 0,
                '1' => 1,
                other => {
                    return Err(Error::InvalidArgument(format!("bad logical bit {other:?}")))
                }
            };
            logical = (logical << 1) | bit;
        }
        StateVector::basis(self.physical_dim(), self.physical_index(logical))
    }

    /// Maps a logical state vector into the physical space.
    pub fn encode_state(&self, logical: &StateVector) -> Result<StateVector> {
        crate::quantum::same_dim(self.logical_dim(), logical.dim())?;
        StateVector::new(self.isometry() * logical.amps())
    }

    pub fn encode_density(&self, logical: &DensityMatrix) -> Result<DensityMatrix> {
        crate::quantum::same_dim(self.logical_dim(), logical.dim())?;
        let v = self.isometry();
        Ok(DensityMatrix::from_matrix_unchecked(
            &v * logical.matrix() * v.adjoint(),
        ))
    }

    /// `V^dagger M V`: the block of a physical operator acting inside the
    /// subspace.
    pub fn restrict(&self, physical: &CMatrix) -> Result<CMatrix> {
        crate::quantum::same_dim(self.physical_dim(), physical.nrows())?;
        let v = self.isometry();
        Ok(v.adjoint() * physical * v)
    }

    /// Unnormalized in-subspace block of a physical density matrix. Its
    /// trace is the permanence.
    pub fn project(&self, rho: &DensityMatrix) -> Result<CMatrix> {
        self.restrict(rho.matrix())
    }

    pub fn permanence(&self, rho: &DensityMatrix) -> Result<f64> {
        Ok(self.project(rho)?.trace().re.clamp(0.0, 1.0))
    }

    /// Projects onto the subspace and renormalizes.
    pub fn decode_in_dfs(&self, rho: &DensityMatrix) -> Result<DfsDecoded> {
        let block = self.project(rho)?;
        let permanence = block.trace().re.clamp(0.0, 1.0);
        if permanence < PERMANENCE_FLOOR {
            return Err(Error::EmptySubspace { permanence });
        }
        Ok(DfsDecoded {
            logical: DensityMatrix::from_matrix_unchecked(block.unscale(permanence)),
            permanence,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfsDecoded {
    pub logical: DensityMatrix,
    pub permanence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfsProjector {
    matrix: CMatrix,
}

impl DfsProjector {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round() as usize
    }
}

fn excitations(index: usize) -> i64 {
    index.count_ones() as i64
}

/// Averages `U(phi) rho U(phi)^dagger` with
/// `U(phi) = exp(-i phi/2 sum_k sigma_z^(k))` over the supplied phases. An
/// empty list is the identity channel.
pub fn collective_dephasing(rho: &DensityMatrix, phi_samples: &[f64]) -> DensityMatrix {
    if phi_samples.is_empty() {
        return rho.clone();
    }
    let dim = rho.dim();
    // <r|U rho U^dag|c> = rho_rc * exp(i phi (w_r - w_c)), w = count of |1>
    let max_shift = (usize::BITS - dim.leading_zeros()) as i64;
    let n = phi_samples.len() as f64;
    let factors: Vec<num_complex::Complex64> = (-max_shift..=max_shift)
        .map(|shift| {
            phi_samples
                .iter()
                .map(|&phi| num_complex::Complex64::from_polar(1.0, phi * shift as f64))
                .sum::<num_complex::Complex64>()
                / n
        })
        .collect();
    let out = CMatrix::from_fn(dim, dim, |r, c| {
        let shift = excitations(r) - excitations(c);
        rho.matrix()[(r, c)] * factors[(shift + max_shift) as usize]
    });
    DensityMatrix::from_matrix_unchecked(out)
}

/// The collective-phase unitary `exp(-i phi/2 sum_k sigma_z^(k))` on `n_ions`.
pub fn collective_phase_unitary(n_ions: usize, phi: f64) -> crate::quantum::Unitary {
    let dim = 1usize << n_ions;
    let diag = CVector::from_fn(dim, |idx, _| {
        let sum_z = n_ions as f64 - 2.0 * excitations(idx) as f64;
        num_complex::Complex64::from_polar(1.0, -phi / 2.0 * sum_z)
    });
    crate::quantum::Unitary::from_matrix_unchecked(CMatrix::from_diagonal(&diag))
}

/// Gaussian collective phases, one per shot, reproducible from `seed`.
pub fn sample_collective_phases(phi_std: f64, n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    if !phi_std.is_finite() || phi_std < 0.0 {
        return Err(Error::InvalidArgument(format!("phase std {phi_std}")));
    }
    if phi_std == 0.0 {
        return Ok(vec![0.0; n_samples]);
    }
    let normal = Normal::new(0.0, phi_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = stream_rng(seed, 0);
    Ok((0..n_samples).map(|_| normal.sample(&mut rng)).collect())
}

/// Gaussian phases with one draw per equal-probability stratum: sample `k`
/// is the normal quantile of `(k + u_k) / n`, `u_k` uniform. Averages of
/// smooth functions converge much faster than with independent draws.
pub fn stratified_collective_phases(phi_std: f64, n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    if !phi_std.is_finite() || phi_std < 0.0 {
        return Err(Error::InvalidArgument(format!("phase std {phi_std}")));
    }
    if phi_std == 0.0 {
        return Ok(vec![0.0; n_samples]);
    }
    let normal = statrs::distribution::Normal::new(0.0, phi_std)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = stream_rng(seed, 0);
    Ok((0..n_samples)
        .map(|k| {
            let u: f64 = rng.random();
            let q = ((k as f64 + u) / n_samples as f64).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            normal.inverse_cdf(q)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceComparison {
    pub physical: f64,
    pub logical: f64,
    pub ratio: f64,
}

/// Off-diagonal coherence retained by a single-ion superposition and by a
/// logical superposition under the same collective dephasing, sampled with
/// [`stratified_collective_phases`].
pub fn coherence_comparison(
    phi_std: f64,
    n_samples: usize,
    seed: u64,
    ratio_cap: f64,
) -> Result<CoherenceComparison> {
    if n_samples < 1000 {
        return Err(Error::InvalidArgument(format!(
            "coherence estimate needs at least 1000 samples, got {n_samples}"
        )));
    }
    let phases = stratified_collective_phases(phi_std, n_samples, seed)?;
    let plus = |dim: usize, a: usize, b: usize| {
        let mut amps = CVector::from_element(dim, ZERO);
        amps[a] = ONE;
        amps[b] = ONE;
        StateVector::normalized(amps).map(|s| s.to_density())
    };
    let physical_in = plus(2, 0, 1)?;
    let reg = LogicalRegister::linear(1);
    let logical_in = plus(4, reg.physical_index(0), reg.physical_index(1))?;

    let physical_out = collective_dephasing(&physical_in, &phases);
    let logical_out = collective_dephasing(&logical_in, &phases);
    let physical = 2.0 * physical_out.matrix()[(0, 1)].norm();
    let logical =
        2.0 * logical_out.matrix()[(reg.physical_index(0), reg.physical_index(1))].norm();
    let ratio = if physical * ratio_cap <= logical {
        ratio_cap
    } else {
        logical / physical
    };
    Ok(CoherenceComparison {
        physical,
        logical,
        ratio,
    })
}

/// Logical over physical coherence; see [`coherence_comparison`].
pub fn coherence_ratio(phi_std: f64, n_samples: usize, seed: u64) -> Result<f64> {
    Ok(coherence_comparison(phi_std, n_samples, seed, DEFAULT_RATIO_CAP)?.ratio)
}
