//! Bichromatic gates with the motional mode kept explicit.
//!
//! The spin-dependent force `H(t) = g (a e^{i delta t} + a^dag e^{-i delta t}) S`
//! acts on two ions and a truncated Fock space, with `S = s_1 + s_2` built
//! from `sigma_z` (phase gate) or `sigma_x` (MS gate). After `tau = 2 pi / delta`
//! the motion is disentangled and the spins see `exp(-i theta S^2)` with
//! `theta = 2 pi (g / delta)^2`.
//!
//! Propagation is a midpoint-sampled product of exact exponentials. Because
//! `S` is conserved, each `S` eigenvalue `s` gets its own Fock-space
//! propagator, and `a e^{i phi} + a^dag e^{-i phi} = R X R^dag` with
//! `R = exp(-i phi n)`, `X = a + a^dag`, so every step reuses one
//! diagonalization of `X`.

use std::f64::consts::TAU;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{eigh, CMatrix, CVector, Pauli, Unitary, C64};

/// Population allowed in the top two Fock levels.
pub const TRUNCATION_TOL: f64 = 1e-8;
/// Residual spin-motion entanglement tolerated by [`effective_gate`].
pub const CLOSURE_TOL: f64 = 1e-6;
/// Unitarity tolerance of the propagator.
pub const PROPAGATOR_TOL: f64 = 1e-8;
/// Integration steps per loop used when no step is given.
pub const DEFAULT_STEPS: usize = 8000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinCoupling {
    /// `sigma_z^(1) + sigma_z^(2)`, the conditional phase gate.
    Sz,
    /// `sigma_x^(1) + sigma_x^(2)`, the Molmer-Sorensen gate.
    Sx,
}

impl SpinCoupling {
    pub fn collective(self) -> CMatrix {
        let s = match self {
            SpinCoupling::Sz => Pauli::Z.matrix(),
            SpinCoupling::Sx => Pauli::X.matrix(),
        };
        let id = CMatrix::identity(2, 2);
        s.kronecker(&id) + id.kronecker(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivenOscillatorModel {
    pub n_fock: usize,
    /// Composite coupling `g` (Lamb-Dicke factor times half the Rabi
    /// frequency), rad/s.
    pub coupling: f64,
    /// Detuning from the motional sideband, rad/s.
    pub delta: f64,
    pub spin_op: SpinCoupling,
    pub initial_fock: usize,
}

impl DrivenOscillatorModel {
    /// Coupling that yields `exp(-i theta S^2)` after one loop.
    pub fn with_theta(spin_op: SpinCoupling, delta: f64, theta: f64) -> Self {
        Self {
            n_fock: 24,
            coupling: delta * (theta / TAU).sqrt(),
            delta,
            spin_op,
            initial_fock: 0,
        }
    }

    /// Gate angle from the second-order Magnus term over one closed loop.
    pub fn theta(&self) -> f64 {
        TAU * (self.coupling / self.delta).powi(2)
    }

    pub fn tau(&self) -> f64 {
        TAU / self.delta
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fock < 8 {
            return Err(Error::InvalidArgument(format!(
                "n_fock must be >= 8, got {}",
                self.n_fock
            )));
        }
        if self.initial_fock + 2 >= self.n_fock {
            return Err(Error::InvalidArgument("initial Fock level too close to the cutoff".into()));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::InvalidArgument(format!("coupling must be >= 0, got {}", self.coupling)));
        }
        Ok(())
    }

    /// The ideal spin gate `exp(-i theta S^2)`.
    pub fn ideal_gate(&self) -> Unitary {
        let s = self.spin_op.collective();
        crate::quantum::expm_hermitian(&(&s * &s), self.theta()).expect("S^2 is Hermitian")
    }
}

/// Per-`S`-eigenvalue Fock propagators together with the spin eigenbasis.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub n_fock: usize,
    spin_basis: CMatrix,
    blocks: Vec<CMatrix>,
    /// Largest population seen in the top two Fock levels.
    pub max_top_population: f64,
}

impl Propagator {
    /// Full unitary on spin (x) Fock, spin most significant.
    pub fn unitary(&self) -> Unitary {
        let n = self.n_fock;
        let mut u = CMatrix::zeros(4 * n, 4 * n);
        for (k, block) in self.blocks.iter().enumerate() {
            let w = self.spin_basis.column(k);
            let proj = w * w.adjoint();
            u += proj.kronecker(block);
        }
        Unitary::from_matrix_unchecked(u)
    }

    /// Spin operators `K_m = <m| U |initial>` for every Fock level `m`.
    pub fn kraus(&self, initial: usize) -> Vec<CMatrix> {
        (0..self.n_fock)
            .map(|m| {
                let mut k = CMatrix::zeros(4, 4);
                for (j, block) in self.blocks.iter().enumerate() {
                    let w = self.spin_basis.column(j);
                    k += (w * w.adjoint()) * block[(m, initial)];
                }
                k
            })
            .collect()
    }
}

fn ladder_position(n: usize) -> CMatrix {
    // X = a + a^dag in the truncated number basis
    CMatrix::from_fn(n, n, |r, c| {
        if r + 1 == c {
            C64::new((c as f64).sqrt(), 0.0)
        } else if c + 1 == r {
            C64::new((r as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Propagates for time `t` with step at most `dt` (`dt <= t / 200`).
pub fn propagate(model: &DrivenOscillatorModel, t: f64, dt: f64) -> Result<Propagator> {
    model.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("propagation time must be positive, got {t}")));
    }
    if dt.is_nan() || dt <= 0.0 || dt > t / 200.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "step {dt:e} must lie in (0, t/200]"
        )));
    }
    let steps = (t / dt).ceil() as usize;
    let h = t / steps as f64;
    let n = model.n_fock;

    let (s_vals, s_vecs) = eigh(&model.spin_op.collective());
    let (x_vals, x_vecs) = eigh(&ladder_position(n));
    let number_phase = |phi: f64| DVector::from_fn(n, |k, _| C64::from_polar(1.0, phi * k as f64));
    // T = V^dag exp(i delta h n) V links consecutive midpoint frames
    let link = x_vecs.adjoint()
        * CMatrix::from_diagonal(&number_phase(model.delta * h))
        * &x_vecs;
    let checkpoint = (steps / 64).max(1);

    let mut blocks = Vec::with_capacity(4);
    let mut max_top = 0.0f64;
    for &s in s_vals.iter() {
        let c = model.coupling * s * h;
        let kick = CVector::from_fn(n, |j, _| C64::from_polar(1.0, -c * x_vals[j]));
        // C_1 = D V^dag R_1^dag, R_m = exp(-i delta t_m n)
        let first_mid = 0.5 * h;
        let mut frame = x_vecs.adjoint() * CMatrix::from_diagonal(&number_phase(model.delta * first_mid));
        scale_rows(&mut frame, &kick);
        for step in 2..=steps {
            frame = &link * frame;
            scale_rows(&mut frame, &kick);
            if step % checkpoint == 0 || step == steps {
                max_top = max_top.max(top_population(&x_vecs, &frame, model.initial_fock));
            }
        }
        max_top = max_top.max(top_population(&x_vecs, &frame, model.initial_fock));
        let last_mid = (steps as f64 - 0.5) * h;
        let r_last = number_phase(-model.delta * last_mid);
        let mut block = &x_vecs * frame;
        scale_rows(&mut block, &r_last);
        blocks.push(block);
    }
    if max_top > TRUNCATION_TOL {
        return Err(Error::TruncationViolation { population: max_top });
    }
    let prop = Propagator {
        n_fock: n,
        spin_basis: s_vecs,
        blocks,
        max_top_population: max_top,
    };
    let residual = prop
        .blocks
        .iter()
        .map(|b| {
            (b.adjoint() * b - CMatrix::identity(n, n))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    if residual > PROPAGATOR_TOL {
        return Err(Error::NotUnitary { residual });
    }
    Ok(prop)
}

fn scale_rows(m: &mut CMatrix, d: &CVector) {
    for (r, mut row) in m.row_iter_mut().enumerate() {
        row *= d[r];
    }
}

fn top_population(x_vecs: &CMatrix, frame: &CMatrix, initial: usize) -> f64 {
    let n = x_vecs.nrows();
    let col = x_vecs * frame.column(initial);
    col[n - 1].norm_sqr() + col[n - 2].norm_sqr()
}

/// Spin gate after propagation with residual motion diagnostics.
#[derive(Debug, Clone)]
pub struct EffectiveGate {
    /// `<initial| U |initial>` on the spin space.
    pub spin: CMatrix,
    /// `1 - sigma_min(spin)^2`: worst-case population left outside the
    /// initial motional state.
    pub residual: f64,
    /// Smallest motional return probability over spin basis inputs.
    pub return_population: f64,
}

pub fn effective_gate_at(model: &DrivenOscillatorModel, t: f64, dt: f64) -> Result<EffectiveGate> {
    let prop = propagate(model, t, dt)?;
    let spin = prop.kraus(model.initial_fock)[model.initial_fock].clone();
    let sv = spin.clone().svd(false, false).singular_values;
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let return_population = (0..4)
        .map(|j| spin.column(j).norm_squared())
        .fold(f64::INFINITY, f64::min);
    Ok(EffectiveGate {
        spin,
        residual: (1.0 - smin * smin).max(0.0),
        return_population,
    })
}

/// Effective spin gate after one loop, `t = 2 pi / delta`. Fails when the
/// motion has not returned to its initial state.
pub fn effective_gate(model: &DrivenOscillatorModel) -> Result<EffectiveGate> {
    let tau = model.tau();
    let gate = effective_gate_at(model, tau, tau / DEFAULT_STEPS as f64)?;
    if gate.residual > CLOSURE_TOL {
        return Err(Error::Closure {
            residual: gate.residual,
        });
    }
    Ok(gate)
}

/// Phase-insensitive trace distance between the Choi states of two gates,
/// `sqrt(1 - |Tr(V^dag W)|^2 / d^2)`.
pub fn gate_trace_distance(actual: &CMatrix, ideal: &CMatrix) -> f64 {
    let d = ideal.nrows() as f64;
    let overlap = (ideal.adjoint() * actual).trace().norm_sqr() / (d * d);
    (1.0 - overlap).max(0.0).sqrt()
}

/// Average gate fidelity of the spin channel `rho -> sum_m K_m rho K_m^dag`
/// against a unitary.
pub fn channel_gate_fidelity(kraus: &[CMatrix], ideal: &CMatrix) -> f64 {
    let d = ideal.nrows() as f64;
    let mut tr_sq = 0.0;
    let mut tr_norm = 0.0;
    for k in kraus {
        let m = ideal.adjoint() * k;
        tr_sq += m.trace().norm_sqr();
        tr_norm += (m.adjoint() * &m).trace().re;
    }
    (tr_sq + tr_norm) / (d * (d + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub fraction: f64,
    pub infidelity: f64,
}

/// Gate infidelity when the pulse runs for `(1 + fraction) tau` instead of
/// `tau`, motion traced out.
pub fn off_resonant_error_scan(
    model: &DrivenOscillatorModel,
    fractions: &[f64],
    steps_per_loop: usize,
) -> Result<Vec<ScanPoint>> {
    use rayon::prelude::*;
    let ideal = model.ideal_gate();
    let tau = model.tau();
    fractions
        .par_iter()
        .map(|&f| {
            if !(f > -0.5 && f < 0.5) {
                return Err(Error::InvalidArgument(format!(
                    "timing fraction {f} outside (-0.5, 0.5)"
                )));
            }
            let t = (1.0 + f) * tau;
            let prop = propagate(model, t, tau / steps_per_loop as f64)?;
            let kraus = prop.kraus(model.initial_fock);
            let infidelity = (1.0 - channel_gate_fidelity(&kraus, ideal.matrix())).max(0.0);
            Ok(ScanPoint {
                fraction: f,
                infidelity,
            })
        })
        .collect()
}

/// CSV with header `fraction,infidelity`.
pub fn scan_csv(points: &[ScanPoint]) -> String {
    let mut out = String::from("fraction,infidelity\n");
    for p in points {
        out.push_str(&format!("{},{:e}\n", p.fraction, p.infidelity));
    }
    out
}
