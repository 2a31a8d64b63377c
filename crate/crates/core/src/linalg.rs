//! Dense complex matrices sized for one to four qubits (2x2 through 16x16).
//!
//! The eigensolver is a cyclic Jacobi iteration for Hermitian matrices. At
//! these dimensions performance is irrelevant; determinism and a fixed
//! eigenvector phase convention are what matter, so that matrix logarithms
//! and relative entropies are bit-stable across runs.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 16;

/// Tolerance used when classifying a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Off-diagonal norm threshold for Jacobi convergence.
const JACOBI_TOL: f64 = 1e-13;

const MAX_SWEEPS: usize = 64;

/// Dense square complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::ONE);
        }
        m
    }

    /// Build from row-major complex entries; length must be a perfect square.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::BadShape(format!(
                "expected {} entries for dim {}, got {}",
                dim * dim,
                dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    /// Build a 2x2 matrix from rows.
    pub fn from_rows2(rows: [[Complex64; 2]; 2]) -> Self {
        Self {
            dim: 2,
            data: vec![rows[0][0], rows[0][1], rows[1][0], rows[1][1]],
        }
    }

    /// Real diagonal matrix.
    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m.set(i, i, Complex64::new(v, 0.0));
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max elementwise |m - m^dagger|.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in r..self.dim {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// Checks U U^dagger = I within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = self * &self.dagger();
        prod.max_abs_diff(&Self::identity(self.dim)) <= tol
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += aik * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// U^dagger * self * U.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        &u.dagger() * &(self * u)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        debug_assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        debug_assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Standard 2x2 Pauli matrix in the computational (sigma_z-eigen) basis.
pub fn pauli(which: PauliAxis) -> ComplexMatrix {
    let z = Complex64::ZERO;
    let one = Complex64::ONE;
    let i = Complex64::I;
    match which {
        PauliAxis::X => ComplexMatrix::from_rows2([[z, one], [one, z]]),
        PauliAxis::Y => ComplexMatrix::from_rows2([[z, -i], [i, z]]),
        PauliAxis::Z => ComplexMatrix::from_rows2([[one, z], [z, -one]]),
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues ascend; eigenvectors are the corresponding columns of
/// `eigenvectors`, each phase-fixed so its first component of magnitude
/// above 1e-12 is positive real.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// Reassemble V diag(f(lambda)) V^dagger.
    pub fn assemble(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n);
        for k in 0..n {
            let fk = f(self.eigenvalues[k]);
            if fk == Complex64::ZERO {
                continue;
            }
            for r in 0..n {
                let vr = v.get(r, k);
                for c in 0..n {
                    let add = fk * vr * v.get(c, k).conj();
                    let cur = out.get(r, c);
                    out.set(r, c, cur + add);
                }
            }
        }
        out
    }
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.dim();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += m.get(r, c).norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Hermitian eigendecomposition via cyclic Jacobi with complex rotations.
pub fn herm_eig(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    let dev = m.hermiticity_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            deviation: dev,
            tolerance: HERMITIAN_TOL,
        });
    }
    let n = m.dim();
    let mut a = m.clone();
    // Symmetrize away representation noise below the tolerance.
    for r in 0..n {
        for c in 0..n {
            if r == c {
                let v = a.get(r, c);
                a.set(r, c, Complex64::new(v.re, 0.0));
            } else if r < c {
                let v = (a.get(r, c) + a.get(c, r).conj()) * 0.5;
                a.set(r, c, v);
                a.set(c, r, v.conj());
            }
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(1.0);
    let threshold = JACOBI_TOL * scale;

    let mut sweeps = 0;
    while off_diagonal_norm(&a) > threshold {
        if sweeps >= MAX_SWEEPS {
            return Err(Error::EigNoConvergence {
                sweeps,
                off_norm: off_diagonal_norm(&a),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let h = apq.norm();
                if h <= threshold / (n as f64) {
                    continue;
                }
                let phase = apq / h;
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * h);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Column rotation: unitary with columns
                //   u_p = (c, -s*phase), u_q = (s, c*phase) in the (p,q) plane.
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, aip * c - aiq * phase * s);
                    a.set(i, q, aip * s + aiq * phase * c);
                }
                for j in 0..n {
                    let apj = a.get(p, j);
                    let aqj = a.get(q, j);
                    a.set(p, j, apj * c - aqj * phase.conj() * s);
                    a.set(q, j, apj * s + aqj * phase.conj() * c);
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, vip * c - viq * phase * s);
                    v.set(i, q, vip * s + viq * phase * c);
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|k| {
            let lambda = a.get(k, k).re;
            let mut col: Vec<Complex64> = (0..n).map(|r| v.get(r, k)).collect();
            fix_phase(&mut col);
            (lambda, col)
        })
        .collect();
    pairs.sort_by(|(la, ca), (lb, cb)| {
        la.partial_cmp(lb)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| lex_cmp(ca, cb))
    });

    let eigenvalues = pairs.iter().map(|(l, _)| *l).collect();
    let mut vecs = ComplexMatrix::zeros(n);
    for (k, (_, col)) in pairs.iter().enumerate() {
        for r in 0..n {
            vecs.set(r, k, col[r]);
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: vecs,
    })
}

fn fix_phase(col: &mut [Complex64]) {
    if let Some(first) = col.iter().find(|z| z.norm() > 1e-12) {
        let phase = first / first.norm();
        let corr = phase.conj();
        for z in col.iter_mut() {
            *z *= corr;
        }
    }
}

fn lex_cmp(a: &[Complex64], b: &[Complex64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x
            .re
            .partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
        {
            std::cmp::Ordering::Equal => continue,
            ord => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

/// Matrix exponential for Hermitian or anti-Hermitian input, via
/// eigendecomposition. Other inputs are rejected.
pub fn mat_exp(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let scale = m.max_abs().max(1.0);
    if m.is_hermitian(HERMITIAN_TOL * scale) {
        let eig = herm_eig(m)?;
        return Ok(eig.assemble(|l| Complex64::new(l.exp(), 0.0)));
    }
    // Anti-Hermitian: m = iH with H Hermitian, exp(m) = V e^{i lambda} V^dagger.
    let h = m.scale(-Complex64::I);
    if h.is_hermitian(HERMITIAN_TOL * scale) {
        let eig = herm_eig(&h)?;
        return Ok(eig.assemble(|l| Complex64::new(0.0, l).exp()));
    }
    Err(Error::NotHermitian {
        deviation: m.hermiticity_deviation(),
        tolerance: HERMITIAN_TOL * scale,
    })
}

/// Matrix logarithm of a Hermitian PSD matrix. Eigenvalues below 1e-14 are
/// clamped to 1e-14 (the 0*log 0 -> 0 convention for entropies).
pub fn mat_log(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(m)?;
    if eig.eigenvalues.iter().all(|&l| l < 1e-14) {
        return Err(Error::SingularInput);
    }
    Ok(eig.assemble(|l| Complex64::new(l.max(1e-14).ln(), 0.0)))
}

/// Kronecker product; the result dimension must stay within 16.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = a.dim() * b.dim();
    if dim > MAX_DIM {
        return Err(Error::DimensionOverflow { dim });
    }
    let (na, nb) = (a.dim(), b.dim());
    let mut out = ComplexMatrix::zeros(dim);
    for ra in 0..na {
        for ca in 0..na {
            let f = a.get(ra, ca);
            if f == Complex64::ZERO {
                continue;
            }
            for rb in 0..nb {
                for cb in 0..nb {
                    out.set(ra * nb + rb, ca * nb + cb, f * b.get(rb, cb));
                }
            }
        }
    }
    Ok(out)
}
