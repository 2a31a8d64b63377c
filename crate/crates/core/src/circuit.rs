//! Density-matrix simulation of the 4-qubit circuit realizing the cycle,
//! with per-gate-class noise injection and the thermodynamic-cost metric.
//!
//! Qubit layout (little-endian, qubit k is bit k of the basis index):
//! q0 cold-reservoir ancilla, q1 target, q2 swap helper, q3 hot-reservoir
//! ancilla.
//!
//! The circuit's computational frame encodes (|0>, |1>) = (excited, ground)
//! whenever an energy eigenbasis is active: the L and K gates map |0> to the
//! upper eigenstate of the sigma_x and sigma_y stroke Hamiltonians, and the
//! preparation angle theta_i = 2 arccos(sqrt(p_i)) places the excited-state
//! weight p_i on |0>. In the zbasis mode the same frame is kept by
//! conjugating the stroke propagators with X, so the preparation and
//! partial-SWAP wiring is identical in both modes.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{stroke_propagator, ScheduleKind};
use crate::engine::{excited_population, run_cycle, BasisMode, CycleParams};
use crate::error::{Error, Result};
use crate::linalg::{pauli, ComplexMatrix, PauliAxis};
use crate::state::DensityMatrix;
use crate::zbasis::{cost_bound, OracleInputs};

pub const N_QUBITS: usize = 4;
const DIM: usize = 16;

/// Basis-change gate to the sigma_x eigenbasis: (sx + sz)/sqrt(2).
pub fn l_gate() -> ComplexMatrix {
    let s = Complex64::new(1.0 / 2.0_f64.sqrt(), 0.0);
    (&pauli(PauliAxis::X) + &pauli(PauliAxis::Z)).scale(s)
}

/// Basis-change gate to the sigma_y eigenbasis: (sy + sz)/sqrt(2).
pub fn k_gate() -> ComplexMatrix {
    let s = Complex64::new(1.0 / 2.0_f64.sqrt(), 0.0);
    (&pauli(PauliAxis::Y) + &pauli(PauliAxis::Z)).scale(s)
}

/// Unitary reading of the partial-SWAP rotation:
/// Lambda = sqrt(1-lambda) I - i sqrt(lambda) sigma_y.
pub fn lambda_gate(lambda: f64) -> ComplexMatrix {
    let c = (1.0 - lambda).sqrt();
    let s = lambda.sqrt();
    ComplexMatrix::from_rows2([
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ])
}

/// The printed form sqrt(1-lambda) I - sqrt(lambda) sigma_y, which is not
/// unitary for lambda in (0, 1). Kept for A/B comparison.
pub fn lambda_gate_paper_literal(lambda: f64) -> ComplexMatrix {
    let c = Complex64::new((1.0 - lambda).sqrt(), 0.0);
    &ComplexMatrix::identity(2).scale(c)
        - &pauli(PauliAxis::Y).scale(Complex64::new(lambda.sqrt(), 0.0))
}

/// Polar-decomposition unitary factor of a 2x2 matrix: M (M^t M)^{-1/2}.
pub fn polar_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mtm = &m.dagger() * m;
    let eig = crate::linalg::herm_eig(&mtm)?;
    if eig.eigenvalues.iter().any(|&l| l < 1e-12) {
        return Err(Error::SingularInput);
    }
    let inv_sqrt = eig.assemble(|l| Complex64::new(1.0 / l.sqrt(), 0.0));
    Ok(m * &inv_sqrt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateKind {
    Rx,
    Cnot,
    Clambda,
    Uexp,
    Ucomp,
    Lgate,
    Kgate,
    CustomUnitary,
}

/// Stroke-propagator parameters embedded in a gate; the matrix is rebuilt
/// deterministically from these. Zbasis kinds are conjugated with X into the
/// circuit's excited-first frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleGateParams {
    pub kind: ScheduleKind,
    pub omega_c: f64,
    pub omega_h: f64,
    pub tau: f64,
    pub n_steps: usize,
    #[serde(default)]
    pub ramp: crate::dynamics::CompressionRamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateParams {
    Angle { theta: f64 },
    Lambda { lambda: f64 },
    Schedule(ScheduleGateParams),
    /// Row-major 2x2 matrix as (re, im) pairs.
    Matrix { matrix: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    /// Gate wires; for CNOT and CLAMBDA the first listed qubit is the
    /// control.
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<GateParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitProgram {
    pub schema: u32,
    pub n_qubits: usize,
    pub ops: Vec<GateOp>,
}

impl CircuitProgram {
    pub fn validate(&self) -> Result<()> {
        if self.schema != 1 {
            return Err(Error::InvalidCircuit(format!(
                "unsupported schema {}",
                self.schema
            )));
        }
        if self.n_qubits != N_QUBITS {
            return Err(Error::InvalidCircuit(format!(
                "expected {} qubits, got {}",
                N_QUBITS, self.n_qubits
            )));
        }
        for (idx, op) in self.ops.iter().enumerate() {
            let mut seen = [false; N_QUBITS];
            for &q in &op.qubits {
                if q >= self.n_qubits {
                    return Err(Error::InvalidCircuit(format!(
                        "op {idx}: qubit {q} out of range"
                    )));
                }
                if seen[q] {
                    return Err(Error::InvalidCircuit(format!(
                        "op {idx}: duplicate qubit {q}"
                    )));
                }
                seen[q] = true;
            }
            gate_matrix(op)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let program: Self =
            serde_json::from_str(s).map_err(|e| Error::InvalidCircuit(e.to_string()))?;
        program.validate()?;
        Ok(program)
    }
}

/// Per-gate-class noise policy: amplitude then phase damping applied to each
/// touched qubit after the gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoisePolicy {
    #[default]
    None,
    AllGates,
    AllExceptCnot,
    CnotOnly,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub policy: NoisePolicy,
    /// Amplitude-damping strength per gate application.
    pub gamma_prime: f64,
    /// Dephasing strength per gate application.
    pub p: f64,
    /// Per-gate-class overrides of (gamma_prime, p).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub per_class: BTreeMap<GateKind, (f64, f64)>,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self::default()
    }

    /// Strengths derived from the cycle's own channel parameters.
    pub fn from_cycle(params: &CycleParams, policy: NoisePolicy) -> Self {
        Self {
            policy,
            gamma_prime: params.gamma_prime(),
            p: params.p,
            per_class: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma_prime", self.gamma_prime), ("p", self.p)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ParamOutOfRange {
                    name,
                    value: v,
                    range: "[0, 1]",
                });
            }
        }
        for (gp, p) in self.per_class.values() {
            if !(0.0..=1.0).contains(gp) || !(0.0..=1.0).contains(p) {
                return Err(Error::ParamOutOfRange {
                    name: "per_class",
                    value: *gp,
                    range: "[0, 1]",
                });
            }
        }
        Ok(())
    }

    fn strengths_for(&self, kind: GateKind) -> Option<(f64, f64)> {
        let selected = match self.policy {
            NoisePolicy::None => false,
            NoisePolicy::AllGates => true,
            NoisePolicy::AllExceptCnot => kind != GateKind::Cnot,
            NoisePolicy::CnotOnly => kind == GateKind::Cnot,
        };
        if !selected {
            return None;
        }
        Some(
            self.per_class
                .get(&kind)
                .copied()
                .unwrap_or((self.gamma_prime, self.p)),
        )
    }
}

/// Embed a single-qubit gate on qubit k into the 16-dimensional space.
fn embed_one(g: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(DIM);
    for i in 0..DIM {
        let bit_in = (i >> k) & 1;
        for bit_out in 0..2 {
            let j = (i & !(1 << k)) | (bit_out << k);
            let cur = u.get(j, i);
            u.set(j, i, cur + g.get(bit_out, bit_in));
        }
    }
    u
}

fn cnot_matrix(control: usize, target: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(DIM);
    for i in 0..DIM {
        let j = i ^ (((i >> control) & 1) << target);
        u.set(j, i, Complex64::ONE);
    }
    u
}

/// g applied to `target` when `control` is |1>.
fn controlled_matrix(g: &ComplexMatrix, control: usize, target: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(DIM);
    for i in 0..DIM {
        if (i >> control) & 1 == 0 {
            let cur = u.get(i, i);
            u.set(i, i, cur + Complex64::ONE);
        } else {
            let bit_in = (i >> target) & 1;
            for bit_out in 0..2 {
                let j = (i & !(1 << target)) | (bit_out << target);
                let cur = u.get(j, i);
                u.set(j, i, cur + g.get(bit_out, bit_in));
            }
        }
    }
    u
}

fn rx_matrix(theta: f64) -> ComplexMatrix {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(theta / 2.0).sin());
    ComplexMatrix::from_rows2([[c, s], [s, c]])
}

fn schedule_matrix(p: &ScheduleGateParams) -> Result<ComplexMatrix> {
    let schedule =
        crate::dynamics::HamiltonianSchedule::new(p.kind, p.omega_c, p.omega_h, p.tau)?
            .with_ramp(p.ramp);
    let settings = crate::dynamics::PropagatorSettings {
        n_steps: p.n_steps,
        richardson: false,
    };
    let u = stroke_propagator(&schedule, &settings)?;
    match p.kind {
        ScheduleKind::ZbasisExpansion | ScheduleKind::ZbasisCompression => {
            let x = pauli(PauliAxis::X);
            Ok(&(&x * &u) * &x)
        }
        _ => Ok(u),
    }
}

/// Full 16x16 unitary of one gate op.
pub fn gate_matrix(op: &GateOp) -> Result<ComplexMatrix> {
    let need = |n: usize| -> Result<()> {
        if op.qubits.len() != n {
            return Err(Error::InvalidCircuit(format!(
                "{:?} expects {} qubit(s), got {}",
                op.kind,
                n,
                op.qubits.len()
            )));
        }
        Ok(())
    };
    match op.kind {
        GateKind::Rx => {
            need(1)?;
            let Some(GateParams::Angle { theta }) = &op.params else {
                return Err(Error::InvalidCircuit("RX requires an angle".into()));
            };
            if !(0.0..=2.0 * std::f64::consts::PI).contains(theta) {
                return Err(Error::ParamOutOfRange {
                    name: "theta",
                    value: *theta,
                    range: "[0, 2 pi]",
                });
            }
            Ok(embed_one(&rx_matrix(*theta), op.qubits[0]))
        }
        GateKind::Cnot => {
            need(2)?;
            Ok(cnot_matrix(op.qubits[0], op.qubits[1]))
        }
        GateKind::Clambda => {
            need(2)?;
            let Some(GateParams::Lambda { lambda }) = &op.params else {
                return Err(Error::InvalidCircuit("CLAMBDA requires lambda".into()));
            };
            if !(0.0..=1.0).contains(lambda) {
                return Err(Error::ParamOutOfRange {
                    name: "lambda",
                    value: *lambda,
                    range: "[0, 1]",
                });
            }
            Ok(controlled_matrix(
                &lambda_gate(*lambda),
                op.qubits[0],
                op.qubits[1],
            ))
        }
        GateKind::Uexp | GateKind::Ucomp => {
            need(1)?;
            let Some(GateParams::Schedule(sp)) = &op.params else {
                return Err(Error::InvalidCircuit(
                    "stroke gates require schedule parameters".into(),
                ));
            };
            Ok(embed_one(&schedule_matrix(sp)?, op.qubits[0]))
        }
        GateKind::Lgate => {
            need(1)?;
            Ok(embed_one(&l_gate(), op.qubits[0]))
        }
        GateKind::Kgate => {
            need(1)?;
            Ok(embed_one(&k_gate(), op.qubits[0]))
        }
        GateKind::CustomUnitary => {
            need(1)?;
            let Some(GateParams::Matrix { matrix }) = &op.params else {
                return Err(Error::InvalidCircuit("CUSTOM_UNITARY requires a matrix".into()));
            };
            if matrix.len() != 4 {
                return Err(Error::InvalidCircuit("custom matrix must be 2x2".into()));
            }
            let entries: Vec<Complex64> = matrix
                .iter()
                .map(|[re, im]| Complex64::new(*re, *im))
                .collect();
            let g = ComplexMatrix::from_vec(2, entries)?;
            if !g.is_unitary(1e-9) {
                return Err(Error::InvalidCircuit("custom matrix is not unitary".into()));
            }
            Ok(embed_one(&g, op.qubits[0]))
        }
    }
}

/// Circuit realizing the full cycle on the target qubit. Preparation
/// transfers thermal populations from the reservoir ancillae; the
/// partial SWAP is two CNOTs and the controlled rotation c-Lambda wrapped in
/// a direction-selecting CNOT pair on the hot ancilla.
pub fn build_otto_circuit(params: &CycleParams) -> Result<CircuitProgram> {
    params.validate()?;
    let (h_c, h_h) = params.stroke_hamiltonians();
    let p_c = excited_population(params.beta_c, &h_c);
    let p_h = excited_population(params.beta_h, &h_h);
    let theta_c = 2.0 * p_c.sqrt().acos();
    let theta_h = 2.0 * p_h.sqrt().acos();
    let (exp_kind, comp_kind) = match params.basis_mode {
        BasisMode::Xy => (ScheduleKind::Expansion, ScheduleKind::Compression),
        BasisMode::Zbasis => (ScheduleKind::ZbasisExpansion, ScheduleKind::ZbasisCompression),
    };
    let schedule = |kind: ScheduleKind| {
        GateParams::Schedule(ScheduleGateParams {
            kind,
            omega_c: params.omega_c,
            omega_h: params.omega_h,
            tau: params.tau(),
            n_steps: params.propagator.n_steps,
            ramp: params.compression_ramp.unwrap_or_default(),
        })
    };
    let one = |kind: GateKind, q: usize, params: Option<GateParams>| GateOp {
        kind,
        qubits: vec![q],
        params,
    };
    let two = |kind: GateKind, c: usize, t: usize, params: Option<GateParams>| GateOp {
        kind,
        qubits: vec![c, t],
        params,
    };

    let xy = params.basis_mode == BasisMode::Xy;
    let mut ops = Vec::new();
    // preparation: thermal populations onto the target
    ops.push(one(GateKind::Rx, 0, Some(GateParams::Angle { theta: theta_c })));
    ops.push(two(GateKind::Cnot, 0, 1, None));
    if xy {
        ops.push(one(GateKind::Lgate, 1, None));
    }
    // expansion stroke
    ops.push(one(GateKind::Uexp, 1, Some(schedule(exp_kind))));
    // hot-reservoir ancilla and partial-SWAP block
    ops.push(one(GateKind::Rx, 3, Some(GateParams::Angle { theta: theta_h })));
    if xy {
        ops.push(one(GateKind::Kgate, 1, None));
    }
    ops.push(two(GateKind::Cnot, 3, 1, None));
    ops.push(two(
        GateKind::Clambda,
        1,
        2,
        Some(GateParams::Lambda {
            lambda: params.lambda,
        }),
    ));
    ops.push(two(GateKind::Cnot, 2, 1, None));
    ops.push(two(GateKind::Cnot, 3, 1, None));
    if xy {
        ops.push(one(GateKind::Kgate, 1, None));
    }
    // compression stroke
    ops.push(one(GateKind::Ucomp, 1, Some(schedule(comp_kind))));

    let program = CircuitProgram {
        schema: 1,
        n_qubits: N_QUBITS,
        ops,
    };
    program.validate()?;
    verify_preparation(params, &program)?;
    Ok(program)
}

/// Replays the preparation block and checks the target's reduced state
/// matches the cold Gibbs populations to 1e-9.
fn verify_preparation(params: &CycleParams, program: &CircuitProgram) -> Result<()> {
    let prep_len = match params.basis_mode {
        BasisMode::Xy => 3,
        BasisMode::Zbasis => 2,
    };
    let mut rho = DensityMatrix::basis_state(DIM, 0).into_matrix();
    for op in &program.ops[..prep_len] {
        let u = gate_matrix(op)?;
        rho = &(&u * &rho) * &u.dagger();
    }
    let target = partial_trace_raw(&rho, 1);
    let (h_c, _) = params.stroke_hamiltonians();
    let expected = crate::state::gibbs_of(params.beta_c, &h_c);
    let expected_enc = match params.basis_mode {
        BasisMode::Xy => expected.matrix().clone(),
        BasisMode::Zbasis => {
            let x = pauli(PauliAxis::X);
            (&(&x * expected.matrix()) * &x).clone()
        }
    };
    let dev = target.max_abs_diff(&expected_enc);
    if dev > 1e-9 {
        return Err(Error::InvalidCircuit(format!(
            "preparation deviates from the thermal target by {dev:.3e}"
        )));
    }
    Ok(())
}

fn apply_unitary(rho: &ComplexMatrix, u: &ComplexMatrix) -> ComplexMatrix {
    &(u * rho) * &u.dagger()
}

fn apply_noise_on_qubit(rho: &ComplexMatrix, q: usize, gamma_prime: f64, p: f64) -> ComplexMatrix {
    let mut out = rho.clone();
    if gamma_prime > 0.0 {
        let e0 = ComplexMatrix::from_rows2([
            [Complex64::ONE, Complex64::ZERO],
            [Complex64::ZERO, Complex64::new((1.0 - gamma_prime).sqrt(), 0.0)],
        ]);
        let e1 = ComplexMatrix::from_rows2([
            [Complex64::ZERO, Complex64::new(gamma_prime.sqrt(), 0.0)],
            [Complex64::ZERO, Complex64::ZERO],
        ]);
        let f0 = embed_one(&e0, q);
        let f1 = embed_one(&e1, q);
        out = &(&(&f0 * &out) * &f0.dagger()) + &(&(&f1 * &out) * &f1.dagger());
    }
    if p > 0.0 {
        let e0 = ComplexMatrix::from_rows2([
            [Complex64::ONE, Complex64::ZERO],
            [Complex64::ZERO, Complex64::new((1.0 - p).sqrt(), 0.0)],
        ]);
        let e1 = ComplexMatrix::from_rows2([
            [Complex64::ZERO, Complex64::ZERO],
            [Complex64::ZERO, Complex64::new(p.sqrt(), 0.0)],
        ]);
        let f0 = embed_one(&e0, q);
        let f1 = embed_one(&e1, q);
        out = &(&(&f0 * &out) * &f0.dagger()) + &(&(&f1 * &out) * &f1.dagger());
    }
    out
}

/// Left-to-right program execution: unitary conjugation per gate, then
/// per-qubit noise on the touched qubits per the policy.
pub fn simulate(
    program: &CircuitProgram,
    noise: &NoiseModel,
    rho0: &DensityMatrix,
) -> Result<DensityMatrix> {
    let (rho, _) = simulate_with_checkpoints(program, noise, rho0, &[])?;
    Ok(rho)
}

/// Same as [`simulate`], also returning copies of the state right after the
/// listed op indices (post-noise).
pub fn simulate_with_checkpoints(
    program: &CircuitProgram,
    noise: &NoiseModel,
    rho0: &DensityMatrix,
    checkpoints: &[usize],
) -> Result<(DensityMatrix, Vec<ComplexMatrix>)> {
    program.validate()?;
    noise.validate()?;
    if rho0.dim() != DIM {
        return Err(Error::DimensionMismatch {
            left: rho0.dim(),
            right: DIM,
        });
    }
    let mut rho = rho0.matrix().clone();
    let mut marks = vec![ComplexMatrix::zeros(DIM); checkpoints.len()];
    for (idx, op) in program.ops.iter().enumerate() {
        let u = gate_matrix(op)?;
        rho = apply_unitary(&rho, &u);
        if let Some((gp, p)) = noise.strengths_for(op.kind) {
            for &q in &op.qubits {
                rho = apply_noise_on_qubit(&rho, q, gp, p);
            }
        }
        for (slot, &want) in checkpoints.iter().enumerate() {
            if want == idx {
                marks[slot] = rho.clone();
            }
        }
    }
    let out = DensityMatrix::new(rho).map_err(|e| Error::ChannelBrokeState(e.to_string()))?;
    Ok((out, marks))
}

fn partial_trace_raw(rho: &ComplexMatrix, keep: usize) -> ComplexMatrix {
    let dim = rho.dim();
    let mut out = ComplexMatrix::zeros(2);
    for i in 0..dim {
        for j in 0..dim {
            if (i & !(1 << keep)) == (j & !(1 << keep)) {
                let r = (i >> keep) & 1;
                let c = (j >> keep) & 1;
                let cur = out.get(r, c);
                out.set(r, c, cur + rho.get(i, j));
            }
        }
    }
    out
}

/// Reduced state of one qubit of a multi-qubit density matrix.
pub fn partial_trace(rho: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    let dim = rho.dim();
    if !dim.is_power_of_two() || dim < 4 {
        return Err(Error::BadShape(format!(
            "partial trace expects a multi-qubit state, got dim {dim}"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if keep >= n {
        return Err(Error::InvalidCircuit(format!(
            "keep qubit {keep} out of range for {n} qubits"
        )));
    }
    DensityMatrix::new(partial_trace_raw(rho.matrix(), keep))
}

/// Energy expectation of a single-qubit state against a Hermitian operator,
/// via its Pauli decomposition. The sigma_x and sigma_y terms are read out
/// through the L and K basis-change gates.
///
/// With `shots`, each Pauli term is estimated from seeded Bernoulli sampling
/// of the rotated sigma_z outcome; the returned stderr combines the per-term
/// sample errors.
pub fn energy_expectation(
    rho_target: &DensityMatrix,
    hamiltonian: &ComplexMatrix,
    shots: Option<u64>,
    seed: u64,
) -> Result<(f64, f64)> {
    if rho_target.dim() != 2 || hamiltonian.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: rho_target.dim(),
            right: 2,
        });
    }
    let dev = hamiltonian.hermiticity_deviation();
    if dev > crate::linalg::HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            deviation: dev,
            tolerance: crate::linalg::HERMITIAN_TOL,
        });
    }
    let half = Complex64::new(0.5, 0.0);
    let c_i = (hamiltonian.trace() * half).re;
    let coeff = |axis: PauliAxis| ((hamiltonian * &pauli(axis)).trace() * half).re;
    let terms = [
        (coeff(PauliAxis::X), Some(l_gate())),
        (coeff(PauliAxis::Y), Some(k_gate())),
        (coeff(PauliAxis::Z), None),
    ];
    let sz = pauli(PauliAxis::Z);
    let mut value = c_i;
    let mut var = 0.0;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for (c, rot) in terms {
        if c.abs() < 1e-14 {
            continue;
        }
        let rotated = match &rot {
            Some(g) => rho_target.matrix().conjugate_by(&g.dagger()),
            None => rho_target.matrix().clone(),
        };
        let mean = (&rotated * &sz).trace().re;
        match shots {
            None => value += c * mean,
            Some(n) => {
                if n == 0 {
                    return Err(Error::ParamOutOfRange {
                        name: "shots",
                        value: 0.0,
                        range: "[1, inf)",
                    });
                }
                let p_plus = ((1.0 + mean) / 2.0).clamp(0.0, 1.0);
                let mut hits = 0u64;
                for _ in 0..n {
                    if rng.random::<f64>() < p_plus {
                        hits += 1;
                    }
                }
                let phat = hits as f64 / n as f64;
                let est = 2.0 * phat - 1.0;
                let se = 2.0 * (phat * (1.0 - phat) / n as f64).sqrt();
                value += c * est;
                var += (c * se) * (c * se);
            }
        }
    }
    Ok((value, var.sqrt()))
}

/// Stroke-boundary energies of the target qubit and the works they imply.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CircuitWork {
    /// Tr[rho H_c] after preparation.
    pub e_prepared: f64,
    /// Tr[rho H_h] after the expansion stroke.
    pub e_expanded: f64,
    /// Tr[rho H_h] after the partial-SWAP block.
    pub e_thermalized: f64,
    /// Tr[rho H_c] after the compression stroke.
    pub e_compressed: f64,
    pub w_exp: f64,
    pub w_comp: f64,
    pub w_total: f64,
}

/// Runs the circuit under the noise model and measures the four checkpoint
/// energies on the target qubit.
pub fn circuit_work(params: &CycleParams, noise: &NoiseModel) -> Result<CircuitWork> {
    let program = build_otto_circuit(params)?;
    let kinds: Vec<GateKind> = program.ops.iter().map(|o| o.kind).collect();
    let i_uexp = kinds
        .iter()
        .position(|&k| k == GateKind::Uexp)
        .expect("builder emits UEXP");
    let i_ucomp = program.ops.len() - 1;
    // end of the swap block in the lab frame: the closing K for xy, the last
    // CNOT for zbasis
    let i_swap = i_ucomp - 1;
    let i_prep = i_uexp - 1;
    let checkpoints = [i_prep, i_uexp, i_swap, i_ucomp];
    let rho0 = DensityMatrix::basis_state(DIM, 0);
    let (_, marks) = simulate_with_checkpoints(&program, noise, &rho0, &checkpoints)?;

    let (h_c, h_h) = params.stroke_hamiltonians();
    let (h_c_meas, h_h_meas) = match params.basis_mode {
        BasisMode::Xy => (h_c, h_h),
        BasisMode::Zbasis => {
            let x = pauli(PauliAxis::X);
            (&(&x * &h_c) * &x, &(&x * &h_h) * &x)
        }
    };
    let energy = |mark: &ComplexMatrix, h: &ComplexMatrix| -> Result<f64> {
        let reduced = DensityMatrix::new(partial_trace_raw(mark, 1))
            .map_err(|e| Error::ChannelBrokeState(e.to_string()))?;
        Ok(energy_expectation(&reduced, h, None, 0)?.0)
    };
    let e_prepared = energy(&marks[0], &h_c_meas)?;
    let e_expanded = energy(&marks[1], &h_h_meas)?;
    let e_thermalized = energy(&marks[2], &h_h_meas)?;
    let e_compressed = energy(&marks[3], &h_c_meas)?;
    let w_exp = e_expanded - e_prepared;
    let w_comp = e_compressed - e_thermalized;
    Ok(CircuitWork {
        e_prepared,
        e_expanded,
        e_thermalized,
        e_compressed,
        w_exp,
        w_comp,
        w_total: w_exp + w_comp,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CostReport {
    /// Work from the density-matrix cycle with its configured channels.
    pub w_numeric: f64,
    /// Work from the noisy circuit realization.
    pub w_circuit: f64,
    /// C^T = w_numeric - w_circuit.
    pub ct: f64,
    /// Closed-form upper bound; only defined in the zbasis mode.
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
}

/// Thermodynamic cost of the circuit realization: the gap between the
/// channel-level cycle's work and the gate-noise circuit's work, compared
/// against the closed-form bound when the zbasis mode makes one available.
pub fn thermodynamic_cost(params: &CycleParams, noise: &NoiseModel) -> Result<CostReport> {
    let w_numeric = run_cycle(params)?.w_total;
    let w_circuit = circuit_work(params, noise)?.w_total;
    let ct = w_numeric - w_circuit;
    let bound = match params.basis_mode {
        BasisMode::Zbasis => {
            let inputs = OracleInputs::new(
                params.beta_c,
                params.beta_h,
                params.omega_c,
                params.omega_h,
                params.lambda,
                params.gamma,
                params.p,
                params.t_noise(),
            )?;
            Some(cost_bound(&inputs))
        }
        BasisMode::Xy => None,
    };
    Ok(CostReport {
        w_numeric,
        w_circuit,
        ct,
        bound,
        within_bound: bound.map(|b| ct < b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PropagatorSettings;

    fn params(basis_mode: BasisMode, lambda: f64, gamma: f64, p: f64, tau: f64) -> CycleParams {
        CycleParams {
            lambda,
            gamma,
            p,
            tau: Some(tau),
            basis_mode,
            propagator: PropagatorSettings {
                n_steps: 256,
                richardson: false,
            },
            ..Default::default()
        }
    }

    #[test]
    fn empty_program_is_identity() {
        let program = CircuitProgram {
            schema: 1,
            n_qubits: 4,
            ops: vec![],
        };
        let rho0 = DensityMatrix::basis_state(DIM, 5);
        let out = simulate(&program, &NoiseModel::none(), &rho0).unwrap();
        assert!(out.matrix().max_abs_diff(rho0.matrix()) < 1e-15);
    }

    #[test]
    fn cnot_flips_conditionally() {
        // |q1 q0> = |10>: control q0... here control = q1 (bit 1), so state
        // index 2 (bit1 set) flips bit 0 -> index 3
        let program = CircuitProgram {
            schema: 1,
            n_qubits: 4,
            ops: vec![GateOp {
                kind: GateKind::Cnot,
                qubits: vec![1, 0],
                params: None,
            }],
        };
        let rho0 = DensityMatrix::basis_state(DIM, 0b0010);
        let out = simulate(&program, &NoiseModel::none(), &rho0).unwrap();
        let expected = DensityMatrix::basis_state(DIM, 0b0011);
        assert!(out.matrix().max_abs_diff(expected.matrix()) < 1e-15);
    }

    #[test]
    fn all_gate_matrices_unitary() {
        let p = params(BasisMode::Xy, 0.37, 0.2, 0.1, 1.3);
        let program = build_otto_circuit(&p).unwrap();
        for op in &program.ops {
            let u = gate_matrix(op).unwrap();
            assert!(u.is_unitary(1e-10), "{:?} not unitary", op.kind);
        }
    }

    #[test]
    fn printed_lambda_matrix_is_not_unitary() {
        let m = lambda_gate_paper_literal(0.5);
        assert!(!m.is_unitary(1e-6));
        // its polar unitary degenerates to the identity for lambda < 1/2,
        // so the printed form cannot be the intended gate
        let u = polar_unitary(&lambda_gate_paper_literal(0.3)).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-9);
        // the unitary reading is a proper rotation
        assert!(lambda_gate(0.5).is_unitary(1e-12));
        assert!(lambda_gate(0.5).max_abs_diff(&ComplexMatrix::identity(2)) > 0.5);
    }

    #[test]
    fn theta_angles_reference_values() {
        let p = params(BasisMode::Xy, 0.5, 0.0, 0.0, 1.0);
        let program = build_otto_circuit(&p).unwrap();
        let angles: Vec<f64> = program
            .ops
            .iter()
            .filter_map(|op| match (&op.kind, &op.params) {
                (GateKind::Rx, Some(GateParams::Angle { theta })) => Some(*theta),
                _ => None,
            })
            .collect();
        assert_eq!(angles.len(), 2);
        assert!((angles[0] - 2.6580461535712894).abs() < 1e-12); // cold
        assert!((angles[1] - 1.749832126645868).abs() < 1e-12); // hot
    }

    #[test]
    fn lambda_zero_block_acts_as_identity_on_target() {
        let p0 = params(BasisMode::Xy, 0.0, 0.0, 0.0, 1.2);
        let w0 = circuit_work(&p0, &NoiseModel::none()).unwrap();
        // no thermalization: no heat, so the two works cancel at the seam
        assert!((w0.e_thermalized - w0.e_expanded).abs() < 1e-9);
    }

    #[test]
    fn noiseless_circuit_matches_dynamics_target_state() {
        for mode in [BasisMode::Xy, BasisMode::Zbasis] {
            for lambda in [0.0, 0.5, 1.0] {
                let p = params(mode, lambda, 0.0, 0.0, 2.0);
                let program = build_otto_circuit(&p).unwrap();
                let rho0 = DensityMatrix::basis_state(DIM, 0);
                let out = simulate(&program, &NoiseModel::none(), &rho0).unwrap();
                let target = partial_trace(&out, 1).unwrap();
                let reference = run_cycle(&p).unwrap();
                let rho_comp = &reference.states.as_ref().unwrap().rho_comp;
                let target_lab = match mode {
                    BasisMode::Xy => target.matrix().clone(),
                    BasisMode::Zbasis => {
                        let x = pauli(PauliAxis::X);
                        (&(&x * target.matrix()) * &x).clone()
                    }
                };
                let dev = target_lab.max_abs_diff(rho_comp.matrix());
                assert!(dev < 1e-9, "mode {mode:?} lambda {lambda}: dev {dev:.2e}");
            }
        }
    }

    #[test]
    fn partial_trace_product_state() {
        let mut a = ComplexMatrix::zeros(2);
        a.set(0, 0, Complex64::new(0.7, 0.0));
        a.set(1, 1, Complex64::new(0.3, 0.0));
        a.set(0, 1, Complex64::new(0.1, 0.2));
        a.set(1, 0, Complex64::new(0.1, -0.2));
        // q1 carries `a`, others |0>: full state = sum over q1 indices
        let mut full = ComplexMatrix::zeros(DIM);
        for r in 0..2 {
            for c in 0..2 {
                full.set(r << 1, c << 1, a.get(r, c));
            }
        }
        let rho = DensityMatrix::new(full).unwrap();
        let red = partial_trace(&rho, 1).unwrap();
        assert!(red.matrix().max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn partial_trace_bell_pair_is_mixed() {
        let s = 1.0 / 2.0_f64.sqrt();
        let mut ket = vec![Complex64::ZERO; DIM];
        ket[0b0000] = Complex64::new(s, 0.0); // |q2 q1> = |00>
        ket[0b0110] = Complex64::new(s, 0.0); // |q2 q1> = |11>
        let rho = DensityMatrix::from_pure(&ket).unwrap();
        let red = partial_trace(&rho, 1).unwrap();
        assert!(
            red.matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(2).matrix())
                < 1e-12
        );
    }

    #[test]
    fn energy_expectation_exact_values() {
        let rho = DensityMatrix::basis_state(2, 0);
        let (v, se) = energy_expectation(&rho, &pauli(PauliAxis::Z), None, 0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(se, 0.0);

        // thermal state against H = w_c sigma_x: -w_c tanh(beta_c w_c)
        let h = pauli(PauliAxis::X);
        let rho = crate::state::gibbs_of(1.4, &h);
        let (v, _) = energy_expectation(&rho, &h, None, 0).unwrap();
        assert!((v - (-0.88535164820226251)).abs() < 1e-9);
    }

    #[test]
    fn shot_sampling_seeded_and_within_error() {
        let h = pauli(PauliAxis::X);
        let rho = crate::state::gibbs_of(1.4, &h);
        let exact = energy_expectation(&rho, &h, None, 0).unwrap().0;
        let (v1, se1) = energy_expectation(&rho, &h, Some(10_000), 42).unwrap();
        let (v2, _) = energy_expectation(&rho, &h, Some(10_000), 42).unwrap();
        assert_eq!(v1.to_bits(), v2.to_bits(), "same seed, same bits");
        assert!((v1 - exact).abs() < 4.0 * se1, "within 4 sigma");
        let (v3, _) = energy_expectation(&rho, &h, Some(10_000), 43).unwrap();
        assert_ne!(v1.to_bits(), v3.to_bits(), "different seed moves the draw");
    }

    #[test]
    fn shot_estimator_unbiased_over_seeds() {
        let h = pauli(PauliAxis::Y).scale(Complex64::new(1.8, 0.0));
        let rho = crate::state::gibbs_of(0.4, &h);
        let exact = energy_expectation(&rho, &h, None, 0).unwrap().0;
        let n_seeds = 50;
        let mut sum = 0.0;
        let mut var_sum = 0.0;
        for seed in 0..n_seeds {
            let (v, se) = energy_expectation(&rho, &h, Some(4000), seed).unwrap();
            sum += v;
            var_sum += se * se;
        }
        let mean = sum / n_seeds as f64;
        let combined_se = (var_sum / (n_seeds as f64 * n_seeds as f64)).sqrt();
        assert!(
            (mean - exact).abs() < 3.0 * combined_se,
            "mean {mean} vs {exact} (3 sigma = {:.2e})",
            3.0 * combined_se
        );
    }

    #[test]
    fn trace_and_psd_survive_random_noisy_programs() {
        use rand::Rng;
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mut ops = Vec::new();
            for _ in 0..20 {
                let qa = rng.random_range(0..4usize);
                let mut qb = rng.random_range(0..4usize);
                while qb == qa {
                    qb = rng.random_range(0..4usize);
                }
                let pick = rng.random_range(0..4u8);
                ops.push(match pick {
                    0 => GateOp {
                        kind: GateKind::Rx,
                        qubits: vec![qa],
                        params: Some(GateParams::Angle {
                            theta: rng.random_range(0.0..std::f64::consts::TAU),
                        }),
                    },
                    1 => GateOp {
                        kind: GateKind::Cnot,
                        qubits: vec![qa, qb],
                        params: None,
                    },
                    2 => GateOp {
                        kind: GateKind::Clambda,
                        qubits: vec![qa, qb],
                        params: Some(GateParams::Lambda {
                            lambda: rng.random_range(0.0..1.0),
                        }),
                    },
                    _ => GateOp {
                        kind: GateKind::Lgate,
                        qubits: vec![qa],
                        params: None,
                    },
                });
            }
            let program = CircuitProgram {
                schema: 1,
                n_qubits: 4,
                ops,
            };
            let noise = NoiseModel {
                policy: NoisePolicy::AllGates,
                gamma_prime: rng.random_range(0.0..0.5),
                p: rng.random_range(0.0..0.5),
                per_class: BTreeMap::new(),
            };
            let rho0 = DensityMatrix::basis_state(DIM, 0);
            // simulate validates trace and PSD on the way out
            simulate(&program, &noise, &rho0).unwrap();
        }
    }

    #[test]
    fn json_roundtrip() {
        let p = params(BasisMode::Xy, 0.6, 0.3, 0.1, 1.4);
        let program = build_otto_circuit(&p).unwrap();
        let json = program.to_json();
        assert!(json.contains("\"schema\": 1"));
        let back = CircuitProgram::from_json(&json).unwrap();
        assert_eq!(program, back);
    }

    #[test]
    fn json_rejects_bad_schema_and_qubits() {
        let bad_schema = r#"{"schema":2,"n_qubits":4,"ops":[]}"#;
        assert!(CircuitProgram::from_json(bad_schema).is_err());
        let bad_qubit =
            r#"{"schema":1,"n_qubits":4,"ops":[{"kind":"CNOT","qubits":[0,7]}]}"#;
        assert!(CircuitProgram::from_json(bad_qubit).is_err());
    }

    #[test]
    fn zbasis_noiseless_circuit_work_matches_closed_form() {
        for lambda in [0.2, 0.5, 1.0] {
            let p = params(BasisMode::Zbasis, lambda, 0.0, 0.0, 1.0);
            let w = circuit_work(&p, &NoiseModel::none()).unwrap();
            let inputs = OracleInputs::new(1.4, 0.1, 1.0, 1.8, lambda, 0.0, 0.0, 1.0).unwrap();
            let expect = crate::zbasis::exact_work(&inputs);
            assert!(
                (w.w_total - expect).abs() < 1e-9,
                "lambda {lambda}: {} vs {expect}",
                w.w_total
            );
        }
    }

    #[test]
    fn cost_within_bound_on_zbasis_grid() {
        for lambda in [0.2, 0.5, 0.8] {
            for gamma in [0.2, 0.5] {
                let p = params(BasisMode::Zbasis, lambda, gamma, 0.1, 1.0);
                let noise = NoiseModel::from_cycle(&p, NoisePolicy::AllGates);
                let report = thermodynamic_cost(&p, &noise).unwrap();
                assert_eq!(report.within_bound, Some(true));
                assert!(report.ct < report.bound.unwrap());
            }
        }
    }

    #[test]
    fn cost_decreases_with_thermalization() {
        let ct_of = |lambda: f64| {
            let p = CycleParams {
                gamma: 0.6,
                p: 0.1,
                ..params(BasisMode::Zbasis, lambda, 0.6, 0.1, 1.0)
            };
            let noise = NoiseModel::from_cycle(&p, NoisePolicy::AllGates);
            thermodynamic_cost(&p, &noise).unwrap().ct
        };
        let (a, b, c) = (ct_of(0.2), ct_of(0.5), ct_of(0.8));
        assert!(a > b && b > c, "C^T should fall with lambda: {a} {b} {c}");
    }

    #[test]
    fn noiseless_cost_is_negligible() {
        let p = params(BasisMode::Zbasis, 0.5, 0.0, 0.0, 1.0);
        let report = thermodynamic_cost(&p, &NoiseModel::none()).unwrap();
        assert!(report.ct.abs() < 1e-6);
    }

    #[test]
    fn except_cnot_tracks_numeric_closer_than_all() {
        // the CNOT-sensitivity ordering on a small time grid
        let mut dev_all: f64 = 0.0;
        let mut dev_exc: f64 = 0.0;
        for i in 0..6 {
            let tau = 0.6 + 0.6 * i as f64;
            let p = params(BasisMode::Xy, 0.6, 0.6, 0.0, tau);
            let w_num = run_cycle(&p).unwrap().w_total;
            let mut noisy = p.clone();
            noisy.p = 0.6;
            let all = circuit_work(&noisy, &NoiseModel::from_cycle(&noisy, NoisePolicy::AllGates))
                .unwrap()
                .w_total;
            let exc = circuit_work(
                &noisy,
                &NoiseModel::from_cycle(&noisy, NoisePolicy::AllExceptCnot),
            )
            .unwrap()
            .w_total;
            dev_all = dev_all.max((all - w_num).abs());
            dev_exc = dev_exc.max((exc - w_num).abs());
        }
        assert!(
            dev_exc < dev_all,
            "except-CNOT {dev_exc} should beat all-gates {dev_all}"
        );
    }
}
