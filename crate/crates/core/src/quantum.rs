//! Dense complex linear algebra and state primitives.
//!
//! Qubit ordering is big-endian: subsystem 0 (ion 1) is the most significant
//! tensor factor, and a basis index's bits read left to right as ions 1..n.
//! Physical labels follow the ion convention `|S> = |1>`, `|D> = |0>`, and
//! `sigma_z |0> = +|0>`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest Hilbert-space dimension any product may produce.
pub const DEFAULT_DIM_CAP: usize = 1 << 12;

pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> CMatrix {
        match self {
            Pauli::I => CMatrix::identity(2, 2),
            Pauli::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
            Pauli::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    pub fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Kronecker product of a sequence of Pauli matrices, first factor most
/// significant.
pub fn pauli_string(paulis: &[Pauli]) -> CMatrix {
    paulis
        .iter()
        .fold(CMatrix::identity(1, 1), |acc, p| acc.kronecker(&p.matrix()))
}

/// Embeds a single-qubit operator acting on `qubit` into an `n`-qubit space.
pub fn embed_single(n: usize, qubit: usize, op: &CMatrix) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for k in 0..n {
        if k == qubit {
            out = out.kronecker(op);
        } else {
            out = out.kronecker(&CMatrix::identity(2, 2));
        }
    }
    out
}

/// Embeds a two-qubit operator (first factor on `a`, second on `b`) into an
/// `n`-qubit space. `a` and `b` need not be adjacent.
pub fn embed_pair(n: usize, a: usize, b: usize, op: &CMatrix) -> CMatrix {
    assert!(a != b && a < n && b < n);
    let dim = 1usize << n;
    let bit = |q: usize| n - 1 - q;
    DMatrix::from_fn(dim, dim, |row, col| {
        let mask = (1 << bit(a)) | (1 << bit(b));
        if row & !mask != col & !mask {
            return ZERO;
        }
        let local = |idx: usize| (((idx >> bit(a)) & 1) << 1) | ((idx >> bit(b)) & 1);
        op[(local(row), local(col))]
    })
}

pub fn kron_checked(a: &CMatrix, b: &CMatrix, cap: usize) -> Result<CMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    match (rows, cols) {
        (Some(r), Some(c)) if r <= cap && c <= cap => Ok(a.kronecker(b)),
        (r, c) => Err(Error::DimensionOverflow {
            dim: r.unwrap_or(usize::MAX).max(c.unwrap_or(usize::MAX)),
            cap,
        }),
    }
}

fn hermitian_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn check_hermitian(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let residual = hermitian_residual(m);
    if residual > HERMITIAN_TOL * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix (eigenvalues ascending are not
/// guaranteed).
pub fn eigh(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    (eig.eigenvalues, eig.eigenvectors)
}

/// Applies `f` to the eigenvalues of a Hermitian matrix.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> C64) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let diag = CMatrix::from_diagonal(&vals.map(f));
    &vecs * diag * vecs.adjoint()
}

/// Returns `exp(-i t H)` for Hermitian `H`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> Result<Unitary> {
    check_hermitian(h)?;
    let u = hermitian_map(h, |lambda| C64::from_polar(1.0, -t * lambda));
    Ok(Unitary { entries: u })
}

/// Rotates the matrix by a global phase so that its first entry with
/// magnitude above `1e-9` is real and positive.
pub fn canonicalize_phase(m: &CMatrix) -> CMatrix {
    match m.iter().find(|z| z.norm() > 1e-9) {
        Some(z) => m * (z.conj() / z.norm()),
        None => m.clone(),
    }
}

/// Largest entrywise distance between `a` and `b` after both are brought
/// to canonical global phase.
pub fn phase_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    max_abs(&(canonicalize_phase(a) - canonicalize_phase(b)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: CVector,
}

impl StateVector {
    pub fn new(amps: CVector) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidArgument("empty state vector".into()));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL * 10.0 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amps })
    }

    /// Normalizes the amplitudes; fails only on the zero vector.
    pub fn normalized(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amps: amps.unscale(norm) })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = ONE;
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amps(self) -> CVector {
        self.amps
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            entries: &self.amps * self.amps.adjoint(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(entries: CMatrix) -> Result<Self> {
        check_hermitian(&entries)?;
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::BadTrace { trace: trace.re });
        }
        let (vals, _) = eigh(&entries);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(Error::NotPositive { eigenvalue: min });
        }
        Ok(Self { entries })
    }

    /// Builds without validation. Callers guarantee the invariants by
    /// construction (for example a convex mixture of pure states).
    pub(crate) fn from_matrix_unchecked(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn evolve(&self, u: &Unitary) -> Result<Self> {
        same_dim(u.dim(), self.dim())?;
        Ok(Self {
            entries: &u.entries * &self.entries * u.entries.adjoint(),
        })
    }

    /// Convex combination `sum_k w_k rho_k`; weights must be non-negative and
    /// sum to one.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let dim = first.1.dim();
        let mut acc = CMatrix::zeros(dim, dim);
        let mut total = 0.0;
        for (w, rho) in parts {
            same_dim(dim, rho.dim())?;
            if *w < 0.0 {
                return Err(Error::InvalidProbability { value: *w });
            }
            acc += rho.matrix().scale(*w);
            total += w;
        }
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace { trace: total });
        }
        Ok(Self { entries: acc })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.entries).0.iter().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    entries: CMatrix,
}

impl Unitary {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        let n = entries.nrows();
        let residual = max_abs(&(entries.adjoint() * &entries - CMatrix::identity(n, n)));
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
        Ok(Self { entries })
    }

    pub(crate) fn from_matrix_unchecked(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
        }
    }

    /// `other` applied after `self`.
    pub fn then(&self, other: &Unitary) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            entries: &other.entries * &self.entries,
        })
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        same_dim(self.dim(), psi.dim())?;
        Ok(StateVector {
            amps: &self.entries * &psi.amps,
        })
    }

    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.entries.adjoint() * &self.entries - CMatrix::identity(n, n)))
    }
}

/// Kronecker product for states and operators.
pub trait Tensor: Sized {
    fn tensor_with_cap(&self, other: &Self, cap: usize) -> Result<Self>;
}

impl Tensor for StateVector {
    fn tensor_with_cap(&self, other: &Self, cap: usize) -> Result<Self> {
        let a = CMatrix::from_column_slice(self.dim(), 1, self.amps.as_slice());
        let b = CMatrix::from_column_slice(other.dim(), 1, other.amps.as_slice());
        let k = kron_checked(&a, &b, cap)?;
        Ok(Self {
            amps: CVector::from_column_slice(k.as_slice()),
        })
    }
}

impl Tensor for DensityMatrix {
    fn tensor_with_cap(&self, other: &Self, cap: usize) -> Result<Self> {
        Ok(Self {
            entries: kron_checked(&self.entries, &other.entries, cap)?,
        })
    }
}

impl Tensor for Unitary {
    fn tensor_with_cap(&self, other: &Self, cap: usize) -> Result<Self> {
        Ok(Self {
            entries: kron_checked(&self.entries, &other.entries, cap)?,
        })
    }
}

impl Tensor for CMatrix {
    fn tensor_with_cap(&self, other: &Self, cap: usize) -> Result<Self> {
        kron_checked(self, other, cap)
    }
}

/// Kronecker product with `a` as the most significant factor.
pub fn tensor<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor_with_cap(b, DEFAULT_DIM_CAP)
}

/// `<psi| rho |psi>`.
pub fn fidelity(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    same_dim(rho.dim(), psi.dim())?;
    let v = psi.amps.dotc(&(rho.matrix() * psi.amps()));
    Ok(v.re.clamp(0.0, 1.0))
}

/// Traces out every subsystem not listed in `keep`. `dims` gives the
/// dimension of each subsystem, most significant first; the result keeps
/// the remaining subsystems in their original order.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let m = partial_trace_matrix(rho.matrix(), dims, keep)?;
    Ok(DensityMatrix { entries: m })
}

pub fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    same_dim(total, m.nrows())?;
    let count = dims.len();
    let mut kept = vec![false; count];
    for &k in keep {
        if k >= count {
            return Err(Error::InvalidSubsystem { index: k, count });
        }
        kept[k] = true;
    }
    let keep_dim: usize = (0..count).filter(|&k| kept[k]).map(|k| dims[k]).product();
    let mut out = CMatrix::zeros(keep_dim, keep_dim);

    let digits = |mut idx: usize| {
        let mut d = vec![0usize; count];
        for k in (0..count).rev() {
            d[k] = idx % dims[k];
            idx /= dims[k];
        }
        d
    };
    let compose = |d: &[usize], filter: bool| {
        (0..count)
            .filter(|&k| kept[k] == filter)
            .fold(0usize, |acc, k| acc * dims[k] + d[k])
    };

    for row in 0..total {
        let dr = digits(row);
        let env_r = compose(&dr, false);
        let kr = compose(&dr, true);
        for col in 0..total {
            let dc = digits(col);
            if compose(&dc, false) != env_r {
                continue;
            }
            out[(kr, compose(&dc, true))] += m[(row, col)];
        }
    }
    Ok(out)
}

pub(crate) fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Row-major `[re, im]` pairs, the on-disk matrix format.
pub fn matrix_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    m.row_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch {
            expected: cols,
            found: bad.len(),
        });
    }
    Ok(CMatrix::from_fn(n, cols, |r, c| C64::new(rows[r][c][0], rows[r][c][1])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn ket(bits: &str) -> StateVector {
        let idx = usize::from_str_radix(bits, 2).unwrap();
        StateVector::basis(1 << bits.len(), idx).unwrap()
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        a.shape() == b.shape() && max_abs(&(a - b)) <= tol
    }

    #[test]
    fn tensor_of_basis_states() {
        let psi = tensor(&ket("1"), &ket("0")).unwrap();
        assert_eq!(psi.dim(), 4);
        assert_eq!(psi.amps()[2], ONE);
        assert_eq!(psi.amps().iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn tensor_of_identities() {
        let id = tensor(&Unitary::identity(2), &Unitary::identity(2)).unwrap();
        assert!(close(id.matrix(), &CMatrix::identity(4, 4), 0.0));
    }

    #[test]
    fn xx_swaps_10_and_01() {
        let xx = tensor(&Pauli::X.matrix(), &Pauli::X.matrix()).unwrap();
        // hand oracle: XX|10> has a single 1 in row 1
        let out = &xx * ket("10").amps();
        let mut expected = CVector::zeros(4);
        expected[1] = ONE;
        assert_eq!(out, expected);
    }

    #[test]
    fn tensor_dimension_cap() {
        let big = CMatrix::identity(64, 64);
        assert_eq!(kron_checked(&big, &big, DEFAULT_DIM_CAP).unwrap().nrows(), 4096);
        let huge = CMatrix::identity(128, 128);
        assert!(matches!(
            tensor(&huge, &huge),
            Err(Error::DimensionOverflow { dim: 16384, cap: 4096 })
        ));
    }

    #[test]
    fn expm_of_pauli_z() {
        let u = expm_hermitian(&Pauli::Z.matrix(), FRAC_PI_2).unwrap();
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::from_polar(1.0, -FRAC_PI_2),
            C64::from_polar(1.0, FRAC_PI_2),
        ]));
        assert!(close(u.matrix(), &expected, 1e-14));
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let u = expm_hermitian(&CMatrix::zeros(4, 4), 1.7).unwrap();
        assert!(close(u.matrix(), &CMatrix::identity(4, 4), 1e-15));
    }

    #[test]
    fn expm_xx_against_series() {
        let xx = Pauli::X.matrix().kronecker(&Pauli::X.matrix());
        let t = FRAC_PI_4;
        // Taylor series oracle for exp(-i t XX)
        let mut series = CMatrix::identity(4, 4);
        let mut term = CMatrix::identity(4, 4);
        for k in 1..40 {
            term = &term * &xx * (-I * t / k as f64);
            series += &term;
        }
        let u = expm_hermitian(&xx, t).unwrap();
        assert!(close(u.matrix(), &series, 1e-13));
        // closed form: (|10> - i|01>)/sqrt2
        let out = u.apply(&ket("10")).unwrap();
        assert!((out.amps()[2] - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
        assert!((out.amps()[1] - C64::new(0.0, -FRAC_1_SQRT_2)).norm() < 1e-14);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(expm_hermitian(&m, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn fidelity_examples() {
        let psi = StateVector::normalized(CVector::from_vec(vec![ONE, I, ZERO, ONE])).unwrap();
        assert!((fidelity(&psi.to_density(), &psi).unwrap() - 1.0).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(4);
        assert!((fidelity(&mixed, &psi).unwrap() - 0.25).abs() < 1e-12);

        // 5% depolarized Bell state: 0.95 + 0.05/4
        let bell = StateVector::normalized(CVector::from_vec(vec![ONE, ZERO, ZERO, ONE])).unwrap();
        let noisy = DensityMatrix::mixture(&[(0.95, bell.to_density()), (0.05, mixed)]).unwrap();
        assert!((fidelity(&noisy, &bell).unwrap() - 0.9625).abs() < 1e-12);

        assert!(matches!(
            fidelity(&noisy, &ket("0")),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partial_trace_of_bell_is_mixed() {
        let bell = StateVector::normalized(CVector::from_vec(vec![ONE, ZERO, ZERO, ONE])).unwrap();
        let reduced = partial_trace(&bell.to_density(), &[2, 2], &[0]).unwrap();
        assert!(close(reduced.matrix(), &CMatrix::identity(2, 2).scale(0.5), 1e-15));
    }

    #[test]
    fn partial_trace_of_product() {
        let a = StateVector::normalized(CVector::from_vec(vec![ONE, I])).unwrap().to_density();
        let b = DensityMatrix::maximally_mixed(3);
        let ab = tensor(&a, &b).unwrap();
        let ra = partial_trace(&ab, &[2, 3], &[0]).unwrap();
        let rb = partial_trace(&ab, &[2, 3], &[1]).unwrap();
        assert!(close(ra.matrix(), a.matrix(), 1e-14));
        assert!(close(rb.matrix(), b.matrix(), 1e-14));
    }

    #[test]
    fn partial_trace_of_encoded_bell_over_middle_ions() {
        // (|1010> + |0101>)/sqrt2, keep ions 1 and 2 (indices 1,2)
        let mut amps = CVector::zeros(16);
        amps[0b1010] = C64::new(FRAC_1_SQRT_2, 0.0);
        amps[0b0101] = C64::new(FRAC_1_SQRT_2, 0.0);
        let rho = StateVector::new(amps).unwrap().to_density();
        let reduced = partial_trace(&rho, &[2, 2, 2, 2], &[1, 2]).unwrap();
        // explicit sum oracle: remaining bits are 01 (from 1010) and 10 (from 0101)
        let mut oracle = CMatrix::zeros(4, 4);
        for env in 0..4usize {
            for r in 0..4usize {
                for c in 0..4usize {
                    let full = |local: usize| ((env >> 1) << 3) | (local << 1) | (env & 1);
                    oracle[(r, c)] += rho.matrix()[(full(r), full(c))];
                }
            }
        }
        assert!(close(reduced.matrix(), &oracle, 1e-15));
        assert!((reduced.matrix()[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!((reduced.matrix()[(2, 2)].re - 0.5).abs() < 1e-15);
        assert!(reduced.matrix()[(1, 2)].norm() < 1e-15);
    }

    #[test]
    fn partial_trace_invalid_index() {
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(matches!(
            partial_trace(&rho, &[2, 2], &[2]),
            Err(Error::InvalidSubsystem { index: 2, count: 2 })
        ));
    }

    #[test]
    fn embed_pair_matches_kron_for_adjacent() {
        let zz = Pauli::Z.matrix().kronecker(&Pauli::X.matrix());
        let direct = CMatrix::identity(2, 2).kronecker(&zz).kronecker(&CMatrix::identity(2, 2));
        assert!(close(&embed_pair(4, 1, 2, &zz), &direct, 0.0));
        // reversed order swaps factors
        let xz = Pauli::X.matrix().kronecker(&Pauli::Z.matrix());
        assert!(close(&embed_pair(2, 1, 0, &zz), &xz, 0.0));
    }

    #[test]
    fn phase_canonicalization() {
        let u = expm_hermitian(&Pauli::Y.matrix(), 0.3).unwrap();
        let shifted = u.matrix() * C64::from_polar(1.0, 1.234);
        assert!(phase_distance(u.matrix(), &shifted) < 1e-14);
        assert!(phase_distance(u.matrix(), &Pauli::X.matrix()) > 0.1);
    }

    #[test]
    fn density_validation() {
        assert!(matches!(
            DensityMatrix::new(CMatrix::identity(2, 2)),
            Err(Error::BadTrace { .. })
        ));
        let neg = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(1.5, 0.0), C64::new(-0.5, 0.0)]));
        assert!(matches!(DensityMatrix::new(neg), Err(Error::NotPositive { .. })));
        assert!(Unitary::new(CMatrix::identity(2, 2).scale(2.0)).is_err());
    }

    #[test]
    fn matrix_rows_round_trip() {
        let m = Pauli::Y.matrix();
        let rows = matrix_rows(&m);
        assert_eq!(rows[0][1], [0.0, -1.0]);
        assert_eq!(matrix_from_rows(&rows).unwrap(), m);
        assert!(matrix_from_rows(&[vec![[1.0, 0.0]], vec![]]).is_err());
    }
}
