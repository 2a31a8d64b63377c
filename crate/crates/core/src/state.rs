//! Density matrices, Gibbs states, entropies, and coherence measures.
//!
//! Natural units hbar = k_B = 1 throughout. Eigenbasis ordering for
//! ground/excited labels is ascending eigenvalue of the relevant Hamiltonian.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, mat_log, ComplexMatrix};

/// Hermiticity/trace tolerance for state validation.
pub const STATE_TOL: f64 = 1e-9;

/// Hermitian, unit-trace, PSD (up to tolerance) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-9), unit trace (1e-9), and PSD (eigenvalues
    /// >= -1e-9).
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let dev = mat.hermiticity_deviation();
        if dev > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian: deviation {dev:.3e}"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace = {tr} != 1")));
        }
        let eig = herm_eig(&mat)?;
        if let Some(l) = eig.eigenvalues.iter().find(|&&l| l < -STATE_TOL) {
            return Err(Error::InvalidState(format!("negative eigenvalue {l:.3e}")));
        }
        Ok(Self { mat })
    }

    /// Skips validation; for internal steps whose output is checked later.
    pub(crate) fn new_unchecked(mat: ComplexMatrix) -> Self {
        Self { mat }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        let w = Complex64::new(1.0 / dim as f64, 0.0);
        for i in 0..dim {
            m.set(i, i, w);
        }
        Self { mat: m }
    }

    /// |ket><ket| from a normalized state vector.
    pub fn from_pure(ket: &[Complex64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("ket norm^2 = {norm}")));
        }
        let n = ket.len();
        let mut m = ComplexMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                m.set(r, c, ket[r] * ket[c].conj());
            }
        }
        Ok(Self { mat: m })
    }

    /// Computational basis state |k><k|.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        m.set(k, k, Complex64::ONE);
        Self { mat: m }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// Tr[rho * op] as a real number (op must be Hermitian for this to be
    /// meaningful).
    pub fn expectation(&self, op: &ComplexMatrix) -> f64 {
        (&self.mat * op).trace().re
    }

    /// Bloch vector (x, y, z) = Tr[rho sigma_i], dim 2 only.
    pub fn bloch_vector(&self) -> Result<[f64; 3]> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: 2,
            });
        }
        use crate::linalg::{pauli, PauliAxis};
        Ok([
            self.expectation(&pauli(PauliAxis::X)),
            self.expectation(&pauli(PauliAxis::Y)),
            self.expectation(&pauli(PauliAxis::Z)),
        ])
    }
}

/// Inverse temperature paired with the Hamiltonian it thermalizes.
#[derive(Debug, Clone)]
pub struct ThermalSpec {
    beta: f64,
    hamiltonian: ComplexMatrix,
}

impl ThermalSpec {
    pub fn new(beta: f64, hamiltonian: ComplexMatrix) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::ParamOutOfRange {
                name: "beta",
                value: beta,
                range: "(0, inf)",
            });
        }
        let dev = hamiltonian.hermiticity_deviation();
        if dev > crate::linalg::HERMITIAN_TOL {
            return Err(Error::NotHermitian {
                deviation: dev,
                tolerance: crate::linalg::HERMITIAN_TOL,
            });
        }
        Ok(Self { beta, hamiltonian })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }
}

/// Gibbs state e^{-beta H} / Tr(e^{-beta H}).
///
/// The exponent is shifted by the smallest eigenvalue before exponentiating
/// so large beta stays finite.
pub fn gibbs(spec: &ThermalSpec) -> DensityMatrix {
    let eig = herm_eig(&spec.hamiltonian).expect("ThermalSpec guarantees Hermitian");
    let l0 = eig.eigenvalues[0];
    let shifted = eig.assemble(|l| Complex64::new((-spec.beta * (l - l0)).exp(), 0.0));
    let z = shifted.trace().re;
    DensityMatrix::new_unchecked(shifted.scale(Complex64::new(1.0 / z, 0.0)))
}

/// Convenience: Gibbs state without building a ThermalSpec; panics on
/// invalid inputs (internal use on validated parameters).
pub(crate) fn gibbs_of(beta: f64, h: &ComplexMatrix) -> DensityMatrix {
    gibbs(&ThermalSpec::new(beta, h.clone()).expect("validated upstream"))
}

/// Von Neumann entropy in nats, with the 0 ln 0 = 0 convention.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let eig = herm_eig(rho.matrix()).expect("density matrix is Hermitian");
    -eig.eigenvalues
        .iter()
        .map(|&l| if l > 1e-14 { l * l.ln() } else { 0.0 })
        .sum::<f64>()
}

/// Quantum relative entropy D[rho||sigma] = Tr(rho ln rho) - Tr(rho ln sigma),
/// in nats.
///
/// Errors with `SupportMismatch` when sigma has a zero eigenvalue carrying
/// rho-weight above 1e-9.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let sig_eig = herm_eig(sigma.matrix())?;
    let n = sigma.dim();
    for k in 0..n {
        if sig_eig.eigenvalues[k] < 1e-14 {
            // weight of rho on this eigenvector
            let mut w = 0.0;
            for r in 0..n {
                for c in 0..n {
                    w += (sig_eig.eigenvectors.get(r, k).conj()
                        * rho.matrix().get(r, c)
                        * sig_eig.eigenvectors.get(c, k))
                    .re;
                }
            }
            if w > 1e-9 {
                return Err(Error::SupportMismatch { weight: w });
            }
        }
    }
    let ln_rho = mat_log(rho.matrix())?;
    let ln_sigma = mat_log(sigma.matrix())?;
    let d = (rho.matrix() * &(&ln_rho - &ln_sigma)).trace().re;
    Ok(d)
}

/// Dephase rho in the basis given by the (unitary) eigenvector columns:
/// keep only the diagonal after conjugating into that basis.
pub fn dephase(rho: &DensityMatrix, basis: &ComplexMatrix) -> Result<DensityMatrix> {
    check_basis(rho, basis)?;
    let in_basis = rho.matrix().conjugate_by(basis);
    let n = rho.dim();
    let mut diag = ComplexMatrix::zeros(n);
    for i in 0..n {
        diag.set(i, i, Complex64::new(in_basis.get(i, i).re, 0.0));
    }
    // conjugate back: V diag V^dagger
    let back = &(basis * &diag) * &basis.dagger();
    Ok(DensityMatrix::new_unchecked(back))
}

/// Relative entropy of coherence C = S(Delta(rho)) - S(rho) in the given
/// basis.
pub fn coherence_relent(rho: &DensityMatrix, basis: &ComplexMatrix) -> Result<f64> {
    let dephased = dephase(rho, basis)?;
    Ok(von_neumann_entropy(&dephased) - von_neumann_entropy(rho))
}

/// The (ground, excited) off-diagonal element of rho expressed in the given
/// eigenbasis (columns ordered by ascending eigenvalue). Dim 2 only.
pub fn offdiag_coherence(rho: &DensityMatrix, basis: &ComplexMatrix) -> Result<Complex64> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: 2,
        });
    }
    check_basis(rho, basis)?;
    Ok(rho.matrix().conjugate_by(basis).get(0, 1))
}

fn check_basis(rho: &DensityMatrix, basis: &ComplexMatrix) -> Result<()> {
    if basis.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            left: basis.dim(),
            right: rho.dim(),
        });
    }
    if !basis.is_unitary(1e-9) {
        return Err(Error::InvalidState("basis is not unitary".into()));
    }
    Ok(())
}

/// Unitary conjugation rho -> U rho U^dagger, re-wrapped without validation
/// (exact unitarity of U preserves all invariants).
pub fn evolve_unitary(rho: &DensityMatrix, u: &ComplexMatrix) -> DensityMatrix {
    DensityMatrix::new_unchecked(&(u * rho.matrix()) * &u.dagger())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat_exp, pauli, PauliAxis};

    const LN2: f64 = std::f64::consts::LN_2;

    fn half_sz() -> ComplexMatrix {
        pauli(PauliAxis::Z).scale(Complex64::new(-0.5, 0.0))
    }

    #[test]
    fn gibbs_infinite_temperature_is_maximally_mixed() {
        let spec = ThermalSpec::new(1e-12, pauli(PauliAxis::X)).unwrap();
        let rho = gibbs(&spec);
        assert!(
            rho.matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(2).matrix())
                < 1e-9
        );
    }

    #[test]
    fn gibbs_half_sz_sz_expectation() {
        // H = -sigma_z/2 at beta = 1.4: <sigma_z> = tanh(0.7)
        let spec = ThermalSpec::new(1.4, half_sz()).unwrap();
        let rho = gibbs(&spec);
        let sz = rho.expectation(&pauli(PauliAxis::Z));
        assert!((sz - 0.6043677771171635).abs() < 1e-12);
    }

    #[test]
    fn gibbs_commutes_with_hamiltonian() {
        let h = pauli(PauliAxis::Y).scale(Complex64::new(1.8, 0.0));
        let spec = ThermalSpec::new(0.1, h.clone()).unwrap();
        let rho = gibbs(&spec);
        let comm = &(rho.matrix() * &h) - &(&h * rho.matrix());
        assert!(comm.max_abs() < 1e-10);
    }

    #[test]
    fn gibbs_sigma_x_populations() {
        // H = omega_c sigma_x, beta_c = 1.4: populations (e^{1.4}, e^{-1.4})/Z
        // in ascending (ground-first) sigma_x eigenbasis.
        let h = pauli(PauliAxis::X);
        let spec = ThermalSpec::new(1.4, h.clone()).unwrap();
        let rho = gibbs(&spec);
        let eig = herm_eig(&h).unwrap();
        let in_basis = rho.matrix().conjugate_by(&eig.eigenvectors);
        let z = (1.4f64).exp() + (-1.4f64).exp();
        assert!((in_basis.get(0, 0).re - (1.4f64).exp() / z).abs() < 1e-12);
        assert!((in_basis.get(1, 1).re - (-1.4f64).exp() / z).abs() < 1e-12);
        assert!(in_basis.get(0, 1).norm() < 1e-12);
    }

    #[test]
    fn entropy_pure_and_mixed() {
        let pure = DensityMatrix::basis_state(2, 0);
        assert!(von_neumann_entropy(&pure).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((von_neumann_entropy(&mixed) - LN2).abs() < 1e-12);
    }

    #[test]
    fn entropy_thermal_binary() {
        // gibbs(-sz/2, beta=1.4): binary entropy of p = 1/(1+e^{-1.4})
        let spec = ThermalSpec::new(1.4, half_sz()).unwrap();
        let s = von_neumann_entropy(&gibbs(&spec));
        assert!((s - 0.49735996593643648).abs() < 1e-12);
    }

    #[test]
    fn relent_self_is_zero() {
        let spec = ThermalSpec::new(1.4, half_sz()).unwrap();
        let rho = gibbs(&spec);
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-10);
    }

    #[test]
    fn relent_pure_vs_mixed() {
        let pure = DensityMatrix::basis_state(2, 0);
        let mixed = DensityMatrix::maximally_mixed(2);
        let d = relative_entropy(&pure, &mixed).unwrap();
        assert!((d - LN2).abs() < 1e-10);
    }

    #[test]
    fn relent_thermal_scalar_oracle() {
        // D(gibbs(b1)||gibbs(b2)) = (b2-b1)<H>_1 + ln(Z2/Z1) for H = -sz/2
        let h = half_sz();
        let r1 = gibbs(&ThermalSpec::new(1.4, h.clone()).unwrap());
        let r2 = gibbs(&ThermalSpec::new(0.1, h.clone()).unwrap());
        let d = relative_entropy(&r1, &r2).unwrap();
        assert!((d - 0.16681830528127624).abs() < 1e-11);
    }

    #[test]
    fn relent_support_mismatch() {
        let pure0 = DensityMatrix::basis_state(2, 0);
        let pure1 = DensityMatrix::basis_state(2, 1);
        assert!(matches!(
            relative_entropy(&pure0, &pure1),
            Err(Error::SupportMismatch { .. })
        ));
    }

    #[test]
    fn coherence_diagonal_state_zero() {
        let rho = gibbs(&ThermalSpec::new(1.4, half_sz()).unwrap());
        let basis = ComplexMatrix::identity(2);
        assert!(coherence_relent(&rho, &basis).unwrap().abs() < 1e-12);
        assert!(offdiag_coherence(&rho, &basis).unwrap().norm() < 1e-12);
    }

    #[test]
    fn coherence_plus_state_in_z_basis() {
        let s = 1.0 / 2.0_f64.sqrt();
        let plus =
            DensityMatrix::from_pure(&[Complex64::new(s, 0.0), Complex64::new(s, 0.0)]).unwrap();
        let basis = ComplexMatrix::identity(2);
        let c = coherence_relent(&plus, &basis).unwrap();
        assert!((c - LN2).abs() < 1e-12);
        let od = offdiag_coherence(&plus, &basis).unwrap();
        assert!((od - Complex64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn coherence_equals_relent_to_dephased() {
        // C(rho) = D(rho || Delta(rho))
        let s = 0.6f64.sqrt();
        let t = 0.4f64.sqrt();
        let rho =
            DensityMatrix::from_pure(&[Complex64::new(s, 0.0), Complex64::new(0.2, t * t)]).ok();
        let rho = match rho {
            Some(r) => r,
            // fall back to a mixed state if the ad-hoc ket wasn't normalized
            None => {
                let mut m = ComplexMatrix::zeros(2);
                m.set(0, 0, Complex64::new(0.7, 0.0));
                m.set(1, 1, Complex64::new(0.3, 0.0));
                m.set(0, 1, Complex64::new(0.3, 0.2));
                m.set(1, 0, Complex64::new(0.3, -0.2));
                DensityMatrix::new(m).unwrap()
            }
        };
        let basis = ComplexMatrix::identity(2);
        let c = coherence_relent(&rho, &basis).unwrap();
        let d = relative_entropy(&rho, &dephase(&rho, &basis).unwrap()).unwrap();
        assert!((c - d).abs() < 1e-9);
    }

    #[test]
    fn entropy_unitary_invariance() {
        let mut m = ComplexMatrix::zeros(2);
        m.set(0, 0, Complex64::new(0.8, 0.0));
        m.set(1, 1, Complex64::new(0.2, 0.0));
        m.set(0, 1, Complex64::new(0.1, 0.15));
        m.set(1, 0, Complex64::new(0.1, -0.15));
        let rho = DensityMatrix::new(m).unwrap();
        let s0 = von_neumann_entropy(&rho);
        for theta in [0.3, 1.1, 2.7] {
            let h = pauli(PauliAxis::Y).scale(Complex64::new(theta, 0.0));
            let u = mat_exp(&h.scale(Complex64::new(0.0, -1.0))).unwrap();
            let s1 = von_neumann_entropy(&evolve_unitary(&rho, &u));
            assert!((s0 - s1).abs() < 1e-9);
        }
    }

    #[test]
    fn density_matrix_rejects_bad_inputs() {
        let mut m = ComplexMatrix::zeros(2);
        m.set(0, 0, Complex64::new(2.0, 0.0));
        assert!(DensityMatrix::new(m).is_err()); // trace 2
        let mut m = ComplexMatrix::zeros(2);
        m.set(0, 0, Complex64::new(1.5, 0.0));
        m.set(1, 1, Complex64::new(-0.5, 0.0));
        assert!(DensityMatrix::new(m).is_err()); // negative eigenvalue
    }
}
