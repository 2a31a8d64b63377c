//! Hamiltonian schedules for the work strokes, time-ordered unitary
//! propagation, and a fixed-step RK4 Lindblad integrator used as the
//! independent oracle for the Kraus channels.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{pauli, ComplexMatrix, PauliAxis};
use crate::state::{evolve_unitary, DensityMatrix};

/// Which stroke Hamiltonian the schedule generates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// -w(t) [sy sin(pi t / 2 tau) + sx cos(pi t / 2 tau)]
    Expansion,
    /// +w_r(t) [sy cos(pi t / 2 tau) + sx sin(pi t / 2 tau)]
    Compression,
    /// -(1/2) w(t) sz
    ZbasisExpansion,
    /// -(1/2) w(tau - t) sz
    ZbasisCompression,
}

/// Frequency ramp used by the `Compression` kind: the literal increasing
/// ramp w(t), or the reversed ramp w(tau - t).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompressionRamp {
    #[default]
    AsWritten,
    Reversed,
}

#[derive(Debug, Clone)]
pub struct HamiltonianSchedule {
    pub kind: ScheduleKind,
    pub omega_c: f64,
    pub omega_h: f64,
    pub tau: f64,
    pub ramp: CompressionRamp,
}

impl HamiltonianSchedule {
    pub fn new(kind: ScheduleKind, omega_c: f64, omega_h: f64, tau: f64) -> Result<Self> {
        if !(omega_c > 0.0) || !(omega_h > omega_c) {
            return Err(Error::ParamOutOfRange {
                name: "omega_c/omega_h",
                value: omega_c,
                range: "0 < omega_c < omega_h",
            });
        }
        if !(tau > 0.0) {
            return Err(Error::ParamOutOfRange {
                name: "tau",
                value: tau,
                range: "(0, inf)",
            });
        }
        Ok(Self {
            kind,
            omega_c,
            omega_h,
            tau,
            ramp: CompressionRamp::default(),
        })
    }

    pub fn with_ramp(mut self, ramp: CompressionRamp) -> Self {
        self.ramp = ramp;
        self
    }

    fn omega(&self, t: f64) -> f64 {
        self.omega_c + (self.omega_h - self.omega_c) * t / self.tau
    }
}

/// Trotterization settings for the time-ordered propagator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PropagatorSettings {
    pub n_steps: usize,
    pub richardson: bool,
}

impl Default for PropagatorSettings {
    fn default() -> Self {
        Self {
            n_steps: 2048,
            richardson: false,
        }
    }
}

impl PropagatorSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 16 {
            return Err(Error::ParamOutOfRange {
                name: "n_steps",
                value: self.n_steps as f64,
                range: "[16, inf)",
            });
        }
        Ok(())
    }
}

/// Adiabatic-time scale pi / (8 (omega_h - omega_c)); the default stroke
/// duration is ten times this bound.
pub fn adiabatic_bound(omega_c: f64, omega_h: f64) -> f64 {
    std::f64::consts::PI / (8.0 * (omega_h - omega_c))
}

pub fn default_tau(omega_c: f64, omega_h: f64) -> f64 {
    10.0 * adiabatic_bound(omega_c, omega_h)
}

/// Instantaneous Hamiltonian of the schedule at time t in [0, tau].
pub fn hamiltonian_at(s: &HamiltonianSchedule, t: f64) -> Result<ComplexMatrix> {
    if !(0.0..=s.tau * (1.0 + 1e-12)).contains(&t) {
        return Err(Error::TimeOutOfRange { t, max: s.tau });
    }
    let alpha = std::f64::consts::FRAC_PI_2 * t / s.tau;
    let sx = pauli(PauliAxis::X);
    let sy = pauli(PauliAxis::Y);
    let m = match s.kind {
        ScheduleKind::Expansion => {
            let w = s.omega(t);
            &sy.scale(re(-w * alpha.sin())) + &sx.scale(re(-w * alpha.cos()))
        }
        ScheduleKind::Compression => {
            let w = match s.ramp {
                CompressionRamp::AsWritten => s.omega(t),
                CompressionRamp::Reversed => s.omega(s.tau - t),
            };
            &sy.scale(re(w * alpha.cos())) + &sx.scale(re(w * alpha.sin()))
        }
        ScheduleKind::ZbasisExpansion => pauli(PauliAxis::Z).scale(re(-0.5 * s.omega(t))),
        ScheduleKind::ZbasisCompression => {
            pauli(PauliAxis::Z).scale(re(-0.5 * s.omega(s.tau - t)))
        }
    };
    Ok(m)
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Exact exp(-i H dt) for a 2x2 Hermitian H via the su(2) closed form.
fn u_slice(h: &ComplexMatrix, dt: f64) -> ComplexMatrix {
    debug_assert_eq!(h.dim(), 2);
    let a = (h.get(0, 0).re + h.get(1, 1).re) / 2.0;
    let bz = (h.get(0, 0).re - h.get(1, 1).re) / 2.0;
    let bx = h.get(0, 1).re;
    let by = -h.get(0, 1).im;
    let b = (bx * bx + by * by + bz * bz).sqrt();
    let phase = Complex64::new(0.0, -a * dt).exp();
    if b < 1e-300 {
        return ComplexMatrix::identity(2).scale(phase);
    }
    let (cos_b, sin_b) = ((b * dt).cos(), (b * dt).sin());
    let f = -sin_b / b;
    // cos I - i sin (n . sigma)
    let m = ComplexMatrix::from_rows2([
        [
            Complex64::new(cos_b, f * bz),
            Complex64::new(f * by, f * bx),
        ],
        [
            Complex64::new(-f * by, f * bx),
            Complex64::new(cos_b, -f * bz),
        ],
    ]);
    m.scale(phase)
}

fn build_propagator(s: &HamiltonianSchedule, t0: f64, t1: f64, n_steps: usize) -> Result<ComplexMatrix> {
    let dt = (t1 - t0) / n_steps as f64;
    let mut u = ComplexMatrix::identity(2);
    for k in 0..n_steps {
        let tm = t0 + (k as f64 + 0.5) * dt;
        let h = hamiltonian_at(s, tm.min(s.tau))?;
        u = &u_slice(&h, dt) * &u;
    }
    Ok(u)
}

/// Evolves rho0 through the full stroke: U is the ordered product of
/// midpoint-sampled slice exponentials, exact per slice.
pub fn propagate_unitary(
    s: &HamiltonianSchedule,
    rho0: &DensityMatrix,
    settings: &PropagatorSettings,
) -> Result<(DensityMatrix, ComplexMatrix)> {
    propagate_unitary_interval(s, 0.0, s.tau, rho0, settings)
}

/// Same as [`propagate_unitary`] over a sub-interval [t0, t1] of the stroke.
pub fn propagate_unitary_interval(
    s: &HamiltonianSchedule,
    t0: f64,
    t1: f64,
    rho0: &DensityMatrix,
    settings: &PropagatorSettings,
) -> Result<(DensityMatrix, ComplexMatrix)> {
    settings.validate()?;
    if t1 < t0 {
        return Err(Error::TimeOrdering { t_i: t0, t_j: t1 });
    }
    if t1 - t0 < 1e-15 {
        return Ok((rho0.clone(), ComplexMatrix::identity(2)));
    }
    let frac = (t1 - t0) / s.tau;
    let n = ((settings.n_steps as f64 * frac).ceil() as usize).max(16);
    let u = build_propagator(s, t0, t1, n)?;
    let rho = evolve_unitary(rho0, &u);
    if settings.richardson {
        let u2 = build_propagator(s, t0, t1, 2 * n)?;
        let rho2 = evolve_unitary(rho0, &u2);
        let delta = rho.matrix().max_abs_diff(rho2.matrix());
        if delta > 1e-7 {
            return Err(Error::ConvergenceFailure {
                delta,
                tolerance: 1e-7,
            });
        }
        return Ok((rho2, u2));
    }
    Ok((rho, u))
}

/// The full-stroke propagator alone, without evolving a state.
pub fn stroke_propagator(s: &HamiltonianSchedule, settings: &PropagatorSettings) -> Result<ComplexMatrix> {
    settings.validate()?;
    build_propagator(s, 0.0, s.tau, settings.n_steps)
}

/// Hamiltonian input for the Lindblad integrator.
#[derive(Debug, Clone)]
pub enum HamiltonianModel {
    Constant(ComplexMatrix),
    Scheduled(HamiltonianSchedule),
}

impl HamiltonianModel {
    fn at(&self, t: f64) -> Result<ComplexMatrix> {
        match self {
            Self::Constant(h) => Ok(h.clone()),
            Self::Scheduled(s) => hamiltonian_at(s, t),
        }
    }
}

/// Fixed-step RK4 integration of
/// drho/dt = -i[H, rho] + sum_k rate_k (L rho L^t - 1/2 {L^t L, rho}).
///
/// Returns the sampled trajectory including t = 0 and t = t_end. Trace drift
/// beyond 1e-8 aborts with `StepTooLarge`.
pub fn lindblad_integrate(
    h: &HamiltonianModel,
    rho0: &DensityMatrix,
    dissipators: &[(ComplexMatrix, f64)],
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, DensityMatrix)>> {
    if !(t_end > 0.0) {
        return Err(Error::ParamOutOfRange {
            name: "t_end",
            value: t_end,
            range: "(0, inf)",
        });
    }
    if dt > t_end / 100.0 {
        return Err(Error::StepTooLarge(format!(
            "dt = {dt} exceeds t_end/100 = {}",
            t_end / 100.0
        )));
    }
    for (_, rate) in dissipators {
        if *rate < 0.0 {
            return Err(Error::ParamOutOfRange {
                name: "rate",
                value: *rate,
                range: "[0, inf)",
            });
        }
    }
    let dim = rho0.dim();
    // Precompute L, L^dagger, and L^dagger L per dissipator.
    let pre: Vec<(ComplexMatrix, ComplexMatrix, ComplexMatrix, f64)> = dissipators
        .iter()
        .map(|(l, rate)| (l.clone(), l.dagger(), &l.dagger() * l, *rate))
        .collect();

    let rhs = |t: f64, rho: &ComplexMatrix| -> Result<ComplexMatrix> {
        let ht = h.at(t)?;
        let comm = &(&ht * rho) - &(rho * &ht);
        let mut out = comm.scale(Complex64::new(0.0, -1.0));
        for (l, ldag, ldl, rate) in &pre {
            if *rate == 0.0 {
                continue;
            }
            let jump = &(l * rho) * ldag;
            let anti = &(ldl * rho) + &(rho * ldl);
            let term = &jump - &anti.scale(Complex64::new(0.5, 0.0));
            out = &out + &term.scale(Complex64::new(*rate, 0.0));
        }
        Ok(out)
    };

    let n_steps = (t_end / dt).round() as usize;
    let dt = t_end / n_steps as f64;
    let mut rho = rho0.matrix().clone();
    let mut traj = Vec::with_capacity(n_steps + 1);
    traj.push((0.0, rho0.clone()));
    for k in 0..n_steps {
        let t = k as f64 * dt;
        let k1 = rhs(t, &rho)?;
        let k2 = rhs(t + dt / 2.0, &(&rho + &k1.scale(re(dt / 2.0))))?;
        let k3 = rhs(t + dt / 2.0, &(&rho + &k2.scale(re(dt / 2.0))))?;
        let k4 = rhs(t + dt, &(&rho + &k3.scale(re(dt))))?;
        let incr = &(&k1 + &k4) + &(&k2 + &k3).scale(re(2.0));
        rho = &rho + &incr.scale(re(dt / 6.0));
        let drift = (rho.trace().re - 1.0).abs().max(rho.trace().im.abs());
        if drift > 1e-8 {
            return Err(Error::StepTooLarge(format!(
                "trace drift {drift:.3e} at t = {:.4}",
                t + dt
            )));
        }
        traj.push(((k + 1) as f64 * dt, DensityMatrix::new_unchecked(rho.clone())));
    }
    debug_assert_eq!(rho.dim(), dim);
    Ok(traj)
}

/// sigma_minus = |0><1| in (ground, excited) ordering.
pub fn sigma_minus() -> ComplexMatrix {
    let z = Complex64::ZERO;
    ComplexMatrix::from_rows2([[z, Complex64::ONE], [z, z]])
}
