//! CPTP maps of the model: amplitude damping, phase damping, and partial-SWAP
//! thermalization, plus composition and basis-conjugated application.
//!
//! Kraus matrices are stored in the channel's own 2x2 working basis; `apply`
//! conjugates the state into a caller-supplied eigenbasis first. Which
//! physical basis (and which ordering of its columns) a channel acts in is
//! the caller's choice, so the same `amplitude_damping` channel decays toward
//! either energy eigenstate depending on the basis handed to `apply`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, ComplexMatrix};
use crate::state::DensityMatrix;

/// CPTP certificate tolerance for sum E^dagger E = I.
pub const CPTP_TOL: f64 = 1e-10;

/// A Kraus-operator channel with a completeness certificate.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    ops: Vec<ComplexMatrix>,
    label: String,
}

impl KrausChannel {
    /// Validates the trace-preservation certificate and the operator count
    /// (1..=dim^2 after canonical reduction; dim 2 channels carry at most 4).
    pub fn new(ops: Vec<ComplexMatrix>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if ops.is_empty() {
            return Err(Error::BadShape(format!("channel `{label}` has no Kraus operators")));
        }
        let dim = ops[0].dim();
        if ops.iter().any(|e| e.dim() != dim) {
            return Err(Error::BadShape(format!(
                "channel `{label}` mixes operator dimensions"
            )));
        }
        if ops.len() > dim * dim {
            return Err(Error::BadShape(format!(
                "channel `{label}` has {} operators; max {} for dim {}",
                ops.len(),
                dim * dim,
                dim
            )));
        }
        let mut sum = ComplexMatrix::zeros(dim);
        for e in &ops {
            sum = &sum + &(&e.dagger() * e);
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if dev > CPTP_TOL {
            return Err(Error::InvalidState(format!(
                "channel `{label}` violates trace preservation: |sum E^t E - I| = {dev:.3e}"
            )));
        }
        Ok(Self { ops, label })
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }
}

/// Parameter bundle for the stroke-2 noise stack.
#[derive(Debug, Clone, Copy)]
pub struct ChannelParams {
    /// Amplitude-damping strength gamma' = 1 - e^{-gamma t / 2}.
    pub gamma_prime: f64,
    /// Dephasing strength.
    pub p: f64,
    /// Thermalization (partial-SWAP) strength.
    pub lambda: f64,
    /// Excited-state population of the reservoir's thermal state.
    pub p0: f64,
}

impl ChannelParams {
    pub fn new(gamma_prime: f64, p: f64, lambda: f64, p0: f64) -> Result<Self> {
        check_unit("gamma_prime", gamma_prime)?;
        check_unit("p", p)?;
        check_unit("lambda", lambda)?;
        check_unit("p0", p0)?;
        Ok(Self {
            gamma_prime,
            p,
            lambda,
            p0,
        })
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(Error::ParamOutOfRange {
            name,
            value,
            range: "[0, 1]",
        });
    }
    Ok(())
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Amplitude damping: E0 = diag(1, sqrt(1-gamma')), E1 = sqrt(gamma') |0><1|.
///
/// Decays basis state |1> toward |0> of whatever basis it is applied in.
pub fn amplitude_damping(gamma_prime: f64) -> Result<KrausChannel> {
    check_unit("gamma_prime", gamma_prime)?;
    let z = Complex64::ZERO;
    let e0 = ComplexMatrix::from_rows2([[c(1.0), z], [z, c((1.0 - gamma_prime).sqrt())]]);
    let e1 = ComplexMatrix::from_rows2([[z, c(gamma_prime.sqrt())], [z, z]]);
    KrausChannel::new(vec![e0, e1], "amplitude-damping")
}

/// Phase damping: scales off-diagonals by sqrt(1-p), populations untouched.
pub fn phase_damping(p: f64) -> Result<KrausChannel> {
    check_unit("p", p)?;
    let z = Complex64::ZERO;
    let e0 = ComplexMatrix::from_rows2([[c(1.0), z], [z, c((1.0 - p).sqrt())]]);
    let e1 = ComplexMatrix::from_rows2([[z, z], [z, c(p.sqrt())]]);
    KrausChannel::new(vec![e0, e1], "phase-damping")
}

/// Partial-SWAP thermalization toward the reservoir state diag(1-p0, p0),
/// in (ground, excited) ordering: lambda = 0 is the identity, lambda = 1
/// replaces any input with the reservoir's thermal populations.
pub fn partial_swap_thermalization(lambda: f64, p0: f64) -> Result<KrausChannel> {
    check_unit("lambda", lambda)?;
    check_unit("p0", p0)?;
    let z = Complex64::ZERO;
    let cs = c((1.0 - lambda).sqrt());
    let sl = lambda.sqrt();
    let wg = (1.0 - p0).sqrt();
    let we = p0.sqrt();
    let ops = vec![
        ComplexMatrix::from_rows2([[c(wg), z], [z, c(wg) * cs]]),
        ComplexMatrix::from_rows2([[z, c(wg * sl)], [z, z]]),
        ComplexMatrix::from_rows2([[c(we) * cs, z], [z, c(we)]]),
        ComplexMatrix::from_rows2([[z, z], [c(we * sl), z]]),
    ];
    KrausChannel::new(ops, "partial-swap")
}

/// The same thermalization map with the operator weights in the raw printed
/// ordering (p0 multiplying the branch that keeps slot 0). Provided for A/B
/// comparison; equals `partial_swap_thermalization` applied in a basis with
/// the two columns swapped.
pub fn partial_swap_paper_literal(lambda: f64, p0: f64) -> Result<KrausChannel> {
    check_unit("lambda", lambda)?;
    check_unit("p0", p0)?;
    let z = Complex64::ZERO;
    let cs = c((1.0 - lambda).sqrt());
    let sl = lambda.sqrt();
    let w0 = p0.sqrt();
    let w1 = (1.0 - p0).sqrt();
    let ops = vec![
        ComplexMatrix::from_rows2([[c(w0), z], [z, c(w0) * cs]]),
        ComplexMatrix::from_rows2([[z, c(w0 * sl)], [z, z]]),
        ComplexMatrix::from_rows2([[c(w1) * cs, z], [z, c(w1)]]),
        ComplexMatrix::from_rows2([[z, z], [c(w1 * sl), z]]),
    ];
    KrausChannel::new(ops, "partial-swap-literal")
}

/// Applies the channel in the given eigenbasis: conjugates rho into the basis
/// (columns of `basis`), applies sum E rho E^dagger, conjugates back.
///
/// The output is re-validated; a violation indicates a broken certificate and
/// surfaces as `ChannelBrokeState`.
pub fn apply(
    channel: &KrausChannel,
    rho: &DensityMatrix,
    basis: &ComplexMatrix,
) -> Result<DensityMatrix> {
    if channel.dim() != rho.dim() || basis.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            left: channel.dim(),
            right: rho.dim(),
        });
    }
    if !basis.is_unitary(1e-9) {
        return Err(Error::InvalidState("channel basis is not unitary".into()));
    }
    let in_basis = rho.matrix().conjugate_by(basis);
    let mut out = ComplexMatrix::zeros(rho.dim());
    for e in channel.ops() {
        let term = &(e * &in_basis) * &e.dagger();
        out = &out + &term;
    }
    let back = &(basis * &out) * &basis.dagger();
    DensityMatrix::new(back).map_err(|e| Error::ChannelBrokeState(e.to_string()))
}

/// Composite channel b-after-a... ordering note: `compose(a, b)` applies `b`
/// first, then `a`, i.e. Kraus set {A_i B_j}, matching usual map composition
/// (a ∘ b).
pub fn compose(a: &KrausChannel, b: &KrausChannel) -> Result<KrausChannel> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mut ops = Vec::with_capacity(a.ops().len() * b.ops().len());
    for ai in a.ops() {
        for bj in b.ops() {
            ops.push(ai * bj);
        }
    }
    let dim = a.dim();
    if ops.len() > dim * dim {
        ops = reduce_kraus(&ops, dim)?;
    }
    KrausChannel::new(ops, format!("{}∘{}", a.label(), b.label()))
}

/// Canonical Kraus form via the Choi matrix: at most dim^2 operators.
fn reduce_kraus(ops: &[ComplexMatrix], dim: usize) -> Result<Vec<ComplexMatrix>> {
    let d2 = dim * dim;
    let mut choi = ComplexMatrix::zeros(d2);
    for e in ops {
        // vec(E): row-major flattening
        let v: Vec<Complex64> = (0..d2).map(|k| e.get(k / dim, k % dim)).collect();
        for r in 0..d2 {
            for cc in 0..d2 {
                let cur = choi.get(r, cc);
                choi.set(r, cc, cur + v[r] * v[cc].conj());
            }
        }
    }
    let eig = herm_eig(&choi)?;
    let mut reduced = Vec::new();
    for k in (0..d2).rev() {
        let l = eig.eigenvalues[k];
        if l > 1e-12 {
            let mut e = ComplexMatrix::zeros(dim);
            for idx in 0..d2 {
                e.set(idx / dim, idx % dim, eig.eigenvectors.get(idx, k) * c(l.sqrt()));
            }
            reduced.push(e);
        }
    }
    if reduced.is_empty() {
        return Err(Error::SingularInput);
    }
    Ok(reduced)
}
