//! Logical gate set and the pulse-sequence compiler.
//!
//! Physical pulses and their action inside the subspace:
//!
//! * AC-Stark `Z(theta)` on the second ion of a pair: `exp(-i theta/2 Z_L)`.
//! * MS rotation `exp(-i theta/2 s_phi (x) s_phi)` on a pair, with
//!   `s_phi = cos(phi) X + sin(phi) Y`: `exp(-i theta/2 X_L)` for every `phi`
//!   (the two ion phases cancel on `|10>`, `|01>`).
//! * CP gate `exp(-i theta/2 Z (x) Z)` on two adjacent ions of different
//!   pairs: `exp(-i s theta/2 Z_L (x) Z_L)`, where `s = -1` when exactly one
//!   of the two ions is the first ion of its pair.
//!
//! Logical y-axis rotations are composed as `Z(phi) X(theta) Z(-phi)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::dfs::LogicalRegister;
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::quantum::{
    embed_pair, embed_single, expm_hermitian, CMatrix, DensityMatrix, Pauli, StateVector, Unitary,
    C64,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseKind {
    ACStarkZ,
    MSRotation,
    CPGate,
    PhysicalFlip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseOp {
    pub kind: PulseKind,
    pub targets: Vec<usize>,
    /// Rotation angle in radians.
    pub angle: f64,
    /// Laser phase in radians (MS axis, carrier flip axis).
    #[serde(default)]
    pub phase: f64,
    /// Seconds.
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Detunings and rates. Gate times derive from these and are never stored
/// separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct GateParams {
    /// MS detuning from the motional sideband, rad/s.
    pub delta_ms: f64,
    /// CP detuning, rad/s.
    pub delta_cp: f64,
    /// Axial center-of-mass trap frequency, rad/s.
    pub omega_z: f64,
    /// AC-Stark shift of the addressed ion, rad/s.
    pub stark_shift: f64,
    /// Carrier Rabi frequency for single-ion flips, rad/s.
    pub carrier_rabi: f64,
}

impl Default for GateParams {
    fn default() -> Self {
        Self {
            delta_ms: TAU * 7.0e3,
            delta_cp: TAU / 470e-6,
            omega_z: TAU * 1.2e6,
            stark_shift: TAU * 20.0e3,
            carrier_rabi: TAU * 100.0e3,
        }
    }
}

impl GateParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta_ms", self.delta_ms),
            ("delta_cp", self.delta_cp),
            ("omega_z", self.omega_z),
            ("stark_shift", self.stark_shift),
            ("carrier_rabi", self.carrier_rabi),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn ms_duration(&self) -> f64 {
        TAU / self.delta_ms
    }

    pub fn cp_duration(&self) -> f64 {
        TAU / self.delta_cp
    }

    pub fn stark_duration(&self, theta: f64) -> f64 {
        theta.abs() / self.stark_shift
    }

    pub fn flip_duration(&self, theta: f64) -> f64 {
        theta.abs() / self.carrier_rabi
    }
}

impl PulseOp {
    pub fn stark_z(ion: usize, theta: f64, params: &GateParams) -> Self {
        Self {
            kind: PulseKind::ACStarkZ,
            targets: vec![ion],
            angle: theta,
            phase: 0.0,
            duration: params.stark_duration(theta),
            label: None,
        }
    }

    pub fn ms(pair: (usize, usize), theta: f64, phase: f64, params: &GateParams) -> Self {
        Self {
            kind: PulseKind::MSRotation,
            targets: vec![pair.0, pair.1],
            angle: theta,
            phase,
            duration: params.ms_duration(),
            label: None,
        }
    }

    pub fn cp(ions: (usize, usize), theta: f64, params: &GateParams) -> Self {
        Self {
            kind: PulseKind::CPGate,
            targets: vec![ions.0, ions.1],
            angle: theta,
            phase: 0.0,
            duration: params.cp_duration(),
            label: None,
        }
    }

    pub fn flip(ion: usize, params: &GateParams) -> Self {
        Self {
            kind: PulseKind::PhysicalFlip,
            targets: vec![ion],
            angle: PI,
            phase: 0.0,
            duration: params.flip_duration(PI),
            label: None,
        }
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn validate(&self, n_ions: usize) -> Result<()> {
        for (name, v) in [("angle", self.angle), ("phase", self.phase), ("duration", self.duration)] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} is not finite")));
            }
        }
        if self.duration < 0.0 {
            return Err(Error::InvalidArgument("negative duration".into()));
        }
        let expected = match self.kind {
            PulseKind::ACStarkZ | PulseKind::PhysicalFlip => 1,
            PulseKind::MSRotation | PulseKind::CPGate => 2,
        };
        if self.targets.len() != expected {
            return Err(Error::Layout(format!(
                "{:?} takes {expected} target(s), got {}",
                self.kind,
                self.targets.len()
            )));
        }
        if let Some(&bad) = self.targets.iter().find(|&&t| t >= n_ions) {
            return Err(Error::Layout(format!("ion {bad} outside a string of {n_ions}")));
        }
        if expected == 2 && self.targets[0].abs_diff(self.targets[1]) != 1 {
            return Err(Error::Layout(format!(
                "{:?} needs adjacent ions, got {:?}",
                self.kind, self.targets
            )));
        }
        Ok(())
    }

    /// Single-ion coupling operator of this pulse (before squaring for the
    /// two-ion gates).
    pub fn spin_operator(&self) -> CMatrix {
        match self.kind {
            PulseKind::ACStarkZ | PulseKind::CPGate => Pauli::Z.matrix(),
            PulseKind::MSRotation | PulseKind::PhysicalFlip => {
                Pauli::X.matrix().scale(self.phase.cos()) + Pauli::Y.matrix().scale(self.phase.sin())
            }
        }
    }

    /// Hermitian `G` on the full string with `U = exp(-i G)`.
    ///
    /// Two-ion gates are written as `theta/4 (S^2 - sum_k w_k^2)` with
    /// `S = sum_k w_k s_k`; with unit weights on the two targets this is
    /// `theta/2 s_1 s_2`. `weights` lists `(ion, w)` and defaults to the
    /// targets with weight one.
    pub fn generator(&self, n_ions: usize, weights: Option<&[(usize, f64)]>) -> CMatrix {
        let s = self.spin_operator();
        let default: Vec<(usize, f64)> = self.targets.iter().map(|&t| (t, 1.0)).collect();
        let weights = weights.unwrap_or(&default);
        match self.kind {
            PulseKind::ACStarkZ | PulseKind::PhysicalFlip => {
                let mut g = CMatrix::zeros(1 << n_ions, 1 << n_ions);
                for &(ion, w) in weights {
                    g += embed_single(n_ions, ion, &s).scale(w * self.angle / 2.0);
                }
                g
            }
            PulseKind::MSRotation | PulseKind::CPGate => {
                let dim = 1 << n_ions;
                let mut g = CMatrix::zeros(dim, dim);
                let ss = s.kronecker(&s);
                // S^2 - sum w^2 = sum_{j != k} w_j w_k s_j s_k
                for (i, &(a, wa)) in weights.iter().enumerate() {
                    for &(b, wb) in &weights[i + 1..] {
                        g += embed_pair(n_ions, a, b, &ss).scale(2.0 * wa * wb * self.angle / 4.0);
                    }
                }
                g
            }
        }
    }

    pub fn unitary(&self, n_ions: usize) -> Result<Unitary> {
        self.validate(n_ions)?;
        expm_hermitian(&self.generator(n_ions, None), 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSequence {
    pub register: LogicalRegister,
    pub ops: Vec<PulseOp>,
}

impl PulseSequence {
    pub fn new(register: LogicalRegister) -> Self {
        Self {
            register,
            ops: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.register.validate()?;
        let n = self.register.n_ions();
        self.ops.iter().try_for_each(|op| op.validate(n))
    }

    pub fn push(&mut self, op: PulseOp) {
        self.ops.push(op);
    }

    pub fn extend(&mut self, other: &PulseSequence) -> Result<()> {
        if other.register != self.register {
            return Err(Error::Layout("sequences use different registers".into()));
        }
        self.ops.extend(other.ops.iter().cloned());
        Ok(())
    }

    /// Sum of op durations in seconds.
    pub fn total_duration(&self) -> f64 {
        self.ops.iter().map(|op| op.duration).sum()
    }

    /// Ideal physical unitary, ops applied in list order.
    pub fn unitary(&self) -> Result<Unitary> {
        self.validate()?;
        let n = self.register.n_ions();
        let mut u = CMatrix::identity(1 << n, 1 << n);
        for op in &self.ops {
            u = op.unitary(n)?.matrix() * u;
        }
        Ok(Unitary::from_matrix_unchecked(u))
    }

    /// Block of the ideal unitary inside the subspace.
    pub fn logical_matrix(&self) -> Result<CMatrix> {
        self.register.restrict(self.unitary()?.matrix())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sequence serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let seq: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        seq.validate()?;
        Ok(seq)
    }
}

fn pair(reg: &LogicalRegister, q: usize) -> Result<(usize, usize)> {
    reg.pairs.get(q).copied().ok_or_else(|| {
        Error::Layout(format!(
            "logical qubit {q} outside a register of {}",
            reg.n_logical()
        ))
    })
}

/// Sign of `sigma_z` of `ion` inside the subspace: `-1` for the first ion of
/// its pair, `+1` for the second.
fn logical_z_sign(reg: &LogicalRegister, ion: usize) -> f64 {
    if reg.pairs.iter().any(|&(a, _)| a == ion) {
        -1.0
    } else {
        1.0
    }
}

/// The adjacent ions linking two logical qubits.
pub fn cp_ions(reg: &LogicalRegister, q1: usize, q2: usize) -> Result<(usize, usize)> {
    let p1 = pair(reg, q1)?;
    let p2 = pair(reg, q2)?;
    if q1 == q2 {
        return Err(Error::Layout("phase gate needs two distinct logical qubits".into()));
    }
    for a in [p1.0, p1.1] {
        for b in [p2.0, p2.1] {
            if a.abs_diff(b) == 1 {
                return Ok((a.min(b), a.max(b)));
            }
        }
    }
    Err(Error::Layout(format!(
        "logical qubits {q1} and {q2} have no adjacent ions"
    )))
}

pub fn z_rotation_op(reg: &LogicalRegister, theta: f64, q: usize, params: &GateParams) -> Result<PulseOp> {
    Ok(PulseOp::stark_z(pair(reg, q)?.1, theta, params))
}

pub fn x_rotation_op(
    reg: &LogicalRegister,
    theta: f64,
    q: usize,
    axis_phase: f64,
    params: &GateParams,
) -> Result<PulseOp> {
    Ok(PulseOp::ms(pair(reg, q)?, theta, axis_phase, params))
}

/// Physical CP op whose logical action is `exp(-i theta/2 Z_L Z_L)`.
pub fn cp_logical_op(
    reg: &LogicalRegister,
    theta: f64,
    qubits: (usize, usize),
    params: &GateParams,
) -> Result<PulseOp> {
    let ions = cp_ions(reg, qubits.0, qubits.1)?;
    let sign = logical_z_sign(reg, ions.0) * logical_z_sign(reg, ions.1);
    Ok(PulseOp::cp(ions, sign * theta, params))
}

/// AC-Stark `exp(-i theta/2 sigma_z)` on the second ion of logical qubit `q`.
pub fn z_rotation_logical(reg: &LogicalRegister, theta: f64, q: usize) -> Result<Unitary> {
    z_rotation_op(reg, theta, q, &GateParams::default())?.unitary(reg.n_ions())
}

/// MS `exp(-i theta/2 s_phi (x) s_phi)` on the pair of logical qubit `q`.
pub fn x_rotation_logical(
    reg: &LogicalRegister,
    theta: f64,
    q: usize,
    axis_phase: f64,
) -> Result<Unitary> {
    x_rotation_op(reg, theta, q, axis_phase, &GateParams::default())?.unitary(reg.n_ions())
}

/// Physical `exp(-i theta/2 Z (x) Z)` on the adjacent ions of the two logical
/// qubits. Inside the subspace this is `exp(-i s theta/2 Z_L Z_L)`, see the
/// module docs for `s`.
pub fn cp_gate_logical(reg: &LogicalRegister, theta: f64, qubits: (usize, usize)) -> Result<Unitary> {
    let ions = cp_ions(reg, qubits.0, qubits.1)?;
    PulseOp::cp(ions, theta, &GateParams::default()).unitary(reg.n_ions())
}

/// Solved angle table for the CNOT sequence. The composition equals the
/// target matrix exactly; see `compile_cnot`.
pub mod cnot_table {
    use super::*;
    /// Opening Ramsey pulse on the target.
    pub const RAMSEY_OPEN: f64 = FRAC_PI_2;
    /// Logical ZZ angle of each phase-gate half, `exp(-i theta/2 Z_L Z_L)`.
    pub const CP_HALF: f64 = FRAC_PI_4;
    /// Spin-echo rotation applied to both logical qubits.
    pub const ECHO: f64 = PI;
    /// Composite closing Ramsey pulse `Z(post) X(pi/2) Z(pre)` on the target.
    pub const RAMSEY_Y_PRE: f64 = -FRAC_PI_2;
    pub const RAMSEY_Y_ROTATION: f64 = FRAC_PI_2;
    pub const RAMSEY_Y_POST: f64 = FRAC_PI_2;
    /// Second control pi pulse undoing the echo flip.
    pub const ECHO_RESTORE: f64 = PI;
}

/// Pulse sequence for the logical CNOT. Inside the subspace (control as the
/// more significant qubit) the composition is
///
/// ```text
///  0  -1  0  0
///  i   0  0  0
///  0   0  1  0
///  0   0  0  i
/// ```
///
/// i.e. the target flips when the control is `|0>_L`.
pub fn compile_cnot(
    reg: &LogicalRegister,
    control: usize,
    target: usize,
    params: &GateParams,
) -> Result<PulseSequence> {
    use cnot_table::*;
    reg.validate()?;
    params.validate()?;
    if control == target {
        return Err(Error::Layout("control and target coincide".into()));
    }
    pair(reg, control)?;
    pair(reg, target)?;
    let mut seq = PulseSequence::new(reg.clone());
    let cp = || cp_logical_op(reg, CP_HALF, (control, target), params);
    seq.push(x_rotation_op(reg, RAMSEY_OPEN, target, 0.0, params)?.labeled("ramsey-x"));
    seq.push(cp()?.labeled("cp-half"));
    seq.push(x_rotation_op(reg, ECHO, control, 0.0, params)?.labeled("echo"));
    seq.push(x_rotation_op(reg, ECHO, target, 0.0, params)?.labeled("echo"));
    seq.push(cp()?.labeled("cp-half"));
    seq.push(z_rotation_op(reg, RAMSEY_Y_PRE, target, params)?.labeled("ramsey-y"));
    seq.push(x_rotation_op(reg, RAMSEY_Y_ROTATION, target, 0.0, params)?.labeled("ramsey-y"));
    seq.push(z_rotation_op(reg, RAMSEY_Y_POST, target, params)?.labeled("ramsey-y"));
    seq.push(x_rotation_op(reg, ECHO_RESTORE, control, 0.0, params)?.labeled("echo-restore"));
    Ok(seq)
}

/// `X(pi/2)` on the control followed by the CNOT.
pub fn bell_sequence(
    reg: &LogicalRegister,
    control: usize,
    target: usize,
    params: &GateParams,
) -> Result<PulseSequence> {
    let mut seq = PulseSequence::new(reg.clone());
    seq.push(x_rotation_op(reg, FRAC_PI_2, control, 0.0, params)?.labeled("bell-x"));
    seq.extend(&compile_cnot(reg, control, target, params)?)?;
    Ok(seq)
}

/// Single-ion flips taking the optically pumped string `|11..1>` (all ions
/// in `S`) to the encoded logical basis state.
pub fn prepare_basis(reg: &LogicalRegister, logical_bits: &str, params: &GateParams) -> Result<PulseSequence> {
    if logical_bits.chars().count() != reg.n_logical() {
        return Err(Error::LengthMismatch {
            expected: reg.n_logical(),
            found: logical_bits.chars().count(),
        });
    }
    let mut seq = PulseSequence::new(reg.clone());
    for (c, &(a, b)) in logical_bits.chars().zip(&reg.pairs) {
        let ion = match c {
            '0' => b,
            '1' => a,
            other => return Err(Error::InvalidArgument(format!("bad logical bit {other:?}"))),
        };
        seq.push(PulseOp::flip(ion, params).labeled("prepare"));
    }
    Ok(seq)
}

/// The CNOT matrix as printed, control most significant.
pub fn target_cnot_matrix() -> CMatrix {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    CMatrix::from_row_slice(
        4,
        4,
        &[o, -one, o, o, i, o, o, o, o, o, one, o, o, o, o, i],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum SequenceOutput {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl SequenceOutput {
    pub fn density(&self) -> DensityMatrix {
        match self {
            SequenceOutput::Pure(psi) => psi.to_density(),
            SequenceOutput::Mixed(rho) => rho.clone(),
        }
    }
}

/// Applies the ops in order. With a noise model the result is the
/// Monte-Carlo averaged density matrix.
pub fn apply_sequence(
    seq: &PulseSequence,
    psi: &StateVector,
    noise: Option<&NoiseModel>,
) -> Result<SequenceOutput> {
    seq.validate()?;
    crate::quantum::same_dim(seq.register.physical_dim(), psi.dim())?;
    match noise {
        None => Ok(SequenceOutput::Pure(seq.unitary()?.apply(psi)?)),
        Some(model) => Ok(SequenceOutput::Mixed(crate::noise::sample_noisy_channel(
            seq,
            &psi.to_density(),
            model,
            model.samples,
        )?)),
    }
}
