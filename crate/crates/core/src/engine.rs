//! The four-stroke cycle: gap expansion, partial-SWAP thermalization with a
//! hot reservoir under amplitude/phase damping, gap compression, and full (or
//! partial) thermalization with the cold reservoir. Computes work, heat,
//! efficiency (both the energy ratio and its entropy-production form), the
//! operating regime, and the checkpoint states.
//!
//! Energy bookkeeping at the stroke seams uses the stroke-defining
//! Hamiltonians H_c and H_h, which is what closes the first law and makes
//! the two efficiency routes agree; the propagators themselves follow the
//! schedule forms literally.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::{amplitude_damping, apply, partial_swap_thermalization, phase_damping};
use crate::dynamics::{
    adiabatic_bound, default_tau, propagate_unitary, CompressionRamp, HamiltonianSchedule,
    PropagatorSettings, ScheduleKind,
};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, mat_log, pauli, ComplexMatrix, PauliAxis};
use crate::state::{gibbs_of, relative_entropy, DensityMatrix};

/// Guard below which eta is reported as undefined rather than divided out.
pub const QH_GUARD: f64 = 1e-12;

/// Sign threshold for regime classification.
pub const REGIME_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisMode {
    /// Stroke Hamiltonians proportional to sigma_x / sigma_y (spectra +-w).
    #[default]
    Xy,
    /// Commuting sigma_z schedules (spectra +-w/2); admits closed forms.
    Zbasis,
}

/// Order of the maps in the hot-reservoir stroke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseOrder {
    /// Partial SWAP first, then dephasing, then amplitude damping. This is
    /// the ordering consistent with the closed-form noisy-work expression.
    #[default]
    SwapThenNoise,
    /// Dephasing, amplitude damping, then the partial SWAP.
    NoiseThenSwap,
}

/// Which state enters the hot-heat bookkeeping Tr[(rho - rho_exp) H_h].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QhState {
    /// The end-of-stroke state, after both the SWAP and the noise channels.
    #[default]
    PostNoise,
    /// The post-SWAP, pre-noise state.
    PreNoise,
}

fn default_beta_c() -> f64 {
    1.4
}
fn default_beta_h() -> f64 {
    0.1
}
fn default_omega_c() -> f64 {
    1.0
}
fn default_omega_h() -> f64 {
    1.8
}
fn default_lambda() -> f64 {
    0.5
}
fn default_lambda_c() -> f64 {
    1.0
}

/// Full configuration of one cycle. Defaults follow the reference working
/// point: beta_c = 1.4, beta_h = 0.1, omega_c = 1.0, omega_h = 1.8,
/// lambda = 0.5, no noise, stroke time ten times the adiabatic bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleParams {
    pub beta_c: f64,
    pub beta_h: f64,
    pub omega_c: f64,
    pub omega_h: f64,
    /// Stroke duration; `None` selects ten times the adiabatic bound.
    pub tau: Option<f64>,
    pub lambda: f64,
    /// Cold-side thermalization strength (1 = full reset, closing the cycle).
    pub lambda_c: f64,
    /// Amplitude decay rate (per unit time).
    pub gamma: f64,
    /// Dephasing strength in [0, 1].
    pub p: f64,
    /// Noise exposure time during the hot stroke; `None` tracks tau.
    pub t_noise: Option<f64>,
    pub basis_mode: BasisMode,
    pub noise_order: NoiseOrder,
    pub qh_state: QhState,
    /// Frequency ramp of the xy compression schedule. `None` keeps the
    /// literal increasing ramp (`as-written`); the zbasis compression always
    /// uses its own literal reversed form.
    pub compression_ramp: Option<CompressionRamp>,
    pub propagator: PropagatorSettings,
}

impl Default for CycleParams {
    fn default() -> Self {
        Self {
            beta_c: default_beta_c(),
            beta_h: default_beta_h(),
            omega_c: default_omega_c(),
            omega_h: default_omega_h(),
            tau: None,
            lambda: default_lambda(),
            lambda_c: default_lambda_c(),
            gamma: 0.0,
            p: 0.0,
            t_noise: None,
            basis_mode: BasisMode::default(),
            noise_order: NoiseOrder::default(),
            qh_state: QhState::default(),
            compression_ramp: None,
            propagator: PropagatorSettings::default(),
        }
    }
}

impl CycleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_h > 0.0) || !(self.beta_c > self.beta_h) {
            return Err(Error::ParamOutOfRange {
                name: "beta_c/beta_h",
                value: self.beta_h,
                range: "beta_c > beta_h > 0 (cold reservoir is colder)",
            });
        }
        if !(self.omega_c > 0.0) || !(self.omega_h > self.omega_c) {
            return Err(Error::ParamOutOfRange {
                name: "omega_c/omega_h",
                value: self.omega_c,
                range: "omega_h > omega_c > 0",
            });
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0) {
                return Err(Error::ParamOutOfRange {
                    name: "tau",
                    value: tau,
                    range: "(0, inf)",
                });
            }
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("lambda_c", self.lambda_c),
            ("p", self.p),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ParamOutOfRange {
                    name,
                    value: v,
                    range: "[0, 1]",
                });
            }
        }
        if self.gamma < 0.0 {
            return Err(Error::ParamOutOfRange {
                name: "gamma",
                value: self.gamma,
                range: "[0, inf)",
            });
        }
        if let Some(tn) = self.t_noise {
            if tn < 0.0 {
                return Err(Error::ParamOutOfRange {
                    name: "t_noise",
                    value: tn,
                    range: "[0, inf)",
                });
            }
        }
        self.propagator.validate()
    }

    pub fn tau(&self) -> f64 {
        self.tau
            .unwrap_or_else(|| default_tau(self.omega_c, self.omega_h))
    }

    pub fn t_noise(&self) -> f64 {
        self.t_noise.unwrap_or_else(|| self.tau())
    }

    /// gamma' = 1 - e^{-gamma t_noise / 2}.
    pub fn gamma_prime(&self) -> f64 {
        1.0 - (-self.gamma * self.t_noise() / 2.0).exp()
    }

    /// Cold and hot stroke Hamiltonians for the active basis mode.
    pub fn stroke_hamiltonians(&self) -> (ComplexMatrix, ComplexMatrix) {
        match self.basis_mode {
            BasisMode::Xy => (
                pauli(PauliAxis::X).scale(Complex64::new(self.omega_c, 0.0)),
                pauli(PauliAxis::Y).scale(Complex64::new(self.omega_h, 0.0)),
            ),
            BasisMode::Zbasis => (
                pauli(PauliAxis::Z).scale(Complex64::new(-0.5 * self.omega_c, 0.0)),
                pauli(PauliAxis::Z).scale(Complex64::new(-0.5 * self.omega_h, 0.0)),
            ),
        }
    }

    pub fn expansion_schedule(&self) -> Result<HamiltonianSchedule> {
        let kind = match self.basis_mode {
            BasisMode::Xy => ScheduleKind::Expansion,
            BasisMode::Zbasis => ScheduleKind::ZbasisExpansion,
        };
        HamiltonianSchedule::new(kind, self.omega_c, self.omega_h, self.tau())
    }

    pub fn compression_schedule(&self) -> Result<HamiltonianSchedule> {
        let kind = match self.basis_mode {
            BasisMode::Xy => ScheduleKind::Compression,
            BasisMode::Zbasis => ScheduleKind::ZbasisCompression,
        };
        let ramp = self.compression_ramp.unwrap_or_default();
        Ok(HamiltonianSchedule::new(kind, self.omega_c, self.omega_h, self.tau())?.with_ramp(ramp))
    }

    /// Excited-state population of the hot reservoir's thermal state, in the
    /// spectrum convention of the active basis mode.
    pub fn p0_hot(&self) -> f64 {
        let (_, hh) = self.stroke_hamiltonians();
        excited_population(self.beta_h, &hh)
    }

    pub fn p0_cold(&self) -> f64 {
        let (hc, _) = self.stroke_hamiltonians();
        excited_population(self.beta_c, &hc)
    }
}

pub(crate) fn excited_population(beta: f64, h: &ComplexMatrix) -> f64 {
    let eig = herm_eig(h).expect("stroke Hamiltonians are Hermitian");
    let gap = eig.eigenvalues[1] - eig.eigenvalues[0];
    1.0 / (1.0 + (beta * gap).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    HeatEngine,
    Refrigerator,
    Other,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::HeatEngine => write!(f, "heat-engine"),
            Regime::Refrigerator => write!(f, "refrigerator"),
            Regime::Other => write!(f, "other"),
        }
    }
}

/// The five checkpoint states of one cycle, in the lab frame.
#[derive(Debug, Clone)]
pub struct CycleStates {
    pub rho_c: DensityMatrix,
    pub rho_exp: DensityMatrix,
    /// Post-SWAP, pre-noise state of the hot stroke.
    pub rho_th: DensityMatrix,
    /// End of the hot stroke (SWAP and noise channels applied).
    pub rho_th_f: DensityMatrix,
    pub rho_comp: DensityMatrix,
    pub rho_tc: DensityMatrix,
}

/// Relative-entropy decomposition entering the entropy form of the
/// efficiency.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EntropyTerms {
    /// D[rho_exp || rho_th_f]
    pub d_exp_th: f64,
    /// D[rho_comp || rho_tc]
    pub d_comp_cold: f64,
    /// Tr[(rho_th_f - rho_exp)(ln rho_th_f - ln rho_h)]
    pub qh_correction: f64,
    /// d_exp_th + d_comp_cold - qh_correction
    pub delta_s_th: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleResult {
    pub w_exp: f64,
    pub w_comp: f64,
    pub w_total: f64,
    pub q_h: f64,
    pub q_c: f64,
    /// -W / Q_h; `None` when |Q_h| is below the division guard. Its meaning
    /// as an efficiency only applies in the heat-engine regime.
    pub eta: Option<f64>,
    /// Entropy-production form of the efficiency.
    pub eta_e: Option<f64>,
    pub eta_otto: f64,
    pub eta_carnot: f64,
    pub regime: Regime,
    /// q_h + q_c + w_total - (U(rho_tc) - U(rho_c)); zero when bookkeeping
    /// telescopes.
    pub first_law_residual: f64,
    /// Internal-energy change over the full cycle, nonzero when lambda_c < 1.
    pub delta_u_cycle: f64,
    pub adiabatic_bound: f64,
    pub tau: f64,
    pub t_noise: f64,
    pub entropy_terms: Option<EntropyTerms>,
    /// Bloch vectors of the checkpoint states (x, y, z).
    pub bloch: BlochCheckpoints,
    #[serde(skip)]
    pub states: Option<CycleStates>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlochCheckpoints {
    pub rho_c: [f64; 3],
    pub rho_exp: [f64; 3],
    pub rho_th_f: [f64; 3],
    pub rho_comp: [f64; 3],
    pub rho_tc: [f64; 3],
}

/// 1 - omega_c / omega_h.
pub fn otto_limit(params: &CycleParams) -> f64 {
    1.0 - params.omega_c / params.omega_h
}

/// 1 - beta_h / beta_c.
pub fn carnot_limit(params: &CycleParams) -> f64 {
    1.0 - params.beta_h / params.beta_c
}

/// Sign-based regime label with threshold 1e-12.
pub fn classify_regime(q_h: f64, w_total: f64, q_c: f64) -> Regime {
    if q_h > REGIME_EPS && w_total < -REGIME_EPS && q_c < -REGIME_EPS {
        Regime::HeatEngine
    } else if q_h < -REGIME_EPS && w_total > REGIME_EPS && q_c > REGIME_EPS {
        Regime::Refrigerator
    } else {
        Regime::Other
    }
}

/// Runs the four strokes and assembles every thermodynamic output.
pub fn run_cycle(params: &CycleParams) -> Result<CycleResult> {
    params.validate()?;
    let tau = params.tau();
    let (h_c, h_h) = params.stroke_hamiltonians();
    let rho_c = gibbs_of(params.beta_c, &h_c);

    // Stroke 1: expansion.
    let exp_schedule = params.expansion_schedule()?;
    let (rho_exp, _u_exp) = propagate_unitary(&exp_schedule, &rho_c, &params.propagator)?;

    // Stroke 2: partial-SWAP thermalization plus damping channels, acting in
    // the hot Hamiltonian's eigenbasis.
    let (rho_th, rho_th_f) = hot_stroke(params, &h_h, &rho_exp)?;

    // Stroke 3: compression.
    let comp_schedule = params.compression_schedule()?;
    let (rho_comp, _u_comp) = propagate_unitary(&comp_schedule, &rho_th_f, &params.propagator)?;

    // Stroke 4: cold thermalization.
    let eig_c = herm_eig(&h_c)?;
    let swap_c = partial_swap_thermalization(params.lambda_c, params.p0_cold())?;
    let rho_tc = apply(&swap_c, &rho_comp, &eig_c.eigenvectors)?;

    // Energy bookkeeping against the stroke-defining Hamiltonians.
    let e = |rho: &DensityMatrix, h: &ComplexMatrix| rho.expectation(h);
    let qh_ref = match params.qh_state {
        QhState::PostNoise => &rho_th_f,
        QhState::PreNoise => &rho_th,
    };
    let w_exp = e(&rho_exp, &h_h) - e(&rho_c, &h_c);
    let q_h = e(qh_ref, &h_h) - e(&rho_exp, &h_h);
    let w_comp = e(&rho_comp, &h_c) - e(&rho_th_f, &h_h);
    let q_c = e(&rho_tc, &h_c) - e(&rho_comp, &h_c);
    let w_total = w_exp + w_comp;

    let delta_u_cycle = e(&rho_tc, &h_c) - e(&rho_c, &h_c);
    // With qh_state = pre-noise the noise channels' energy exchange is
    // deliberately left out of q_h, so the residual reports it.
    let first_law_residual = match params.qh_state {
        QhState::PostNoise => q_h + q_c + w_total - delta_u_cycle,
        QhState::PreNoise => {
            let qh_full = e(&rho_th_f, &h_h) - e(&rho_exp, &h_h);
            qh_full + q_c + w_total - delta_u_cycle
        }
    };

    let eta = if q_h.abs() > QH_GUARD {
        Some(-w_total / q_h)
    } else {
        None
    };
    let regime = classify_regime(q_h, w_total, q_c);

    let states = CycleStates {
        rho_c: rho_c.clone(),
        rho_exp: rho_exp.clone(),
        rho_th,
        rho_th_f: rho_th_f.clone(),
        rho_comp: rho_comp.clone(),
        rho_tc: rho_tc.clone(),
    };
    let entropy_terms = entropy_decomposition(params, &states).ok();
    let eta_e = match (&entropy_terms, eta) {
        (Some(terms), Some(_)) => Some(carnot_limit(params) - terms.delta_s_th / (params.beta_c * q_h)),
        _ => None,
    };

    let bloch = BlochCheckpoints {
        rho_c: rho_c.bloch_vector()?,
        rho_exp: rho_exp.bloch_vector()?,
        rho_th_f: rho_th_f.bloch_vector()?,
        rho_comp: rho_comp.bloch_vector()?,
        rho_tc: rho_tc.bloch_vector()?,
    };

    Ok(CycleResult {
        w_exp,
        w_comp,
        w_total,
        q_h,
        q_c,
        eta,
        eta_e,
        eta_otto: otto_limit(params),
        eta_carnot: carnot_limit(params),
        regime,
        first_law_residual,
        delta_u_cycle,
        adiabatic_bound: adiabatic_bound(params.omega_c, params.omega_h),
        tau,
        t_noise: params.t_noise(),
        entropy_terms,
        bloch,
        states: Some(states),
    })
}

/// Applies the hot-stroke maps. The SWAP acts in the ascending eigenbasis of
/// H_h (fixed point = the hot Gibbs state); the damping channels act in the
/// mode's computational frame: slot 0 is the excited state for the xy mode
/// (the rotating-frame convention the circuit realization also uses) and the
/// ground state for the zbasis mode, whose closed forms fix that direction.
fn hot_stroke(
    params: &CycleParams,
    h_h: &ComplexMatrix,
    rho_exp: &DensityMatrix,
) -> Result<(DensityMatrix, DensityMatrix)> {
    let eig_h = herm_eig(h_h)?;
    let asc = eig_h.eigenvectors.clone();
    let noise_basis = match params.basis_mode {
        BasisMode::Xy => swap_columns(&asc),
        BasisMode::Zbasis => asc.clone(),
    };
    let swap = partial_swap_thermalization(params.lambda, params.p0_hot())?;
    let pd = phase_damping(params.p)?;
    let ad = amplitude_damping(params.gamma_prime())?;
    match params.noise_order {
        NoiseOrder::SwapThenNoise => {
            let rho_th = apply(&swap, rho_exp, &asc)?;
            let after_pd = apply(&pd, &rho_th, &noise_basis)?;
            let rho_th_f = apply(&ad, &after_pd, &noise_basis)?;
            Ok((rho_th, rho_th_f))
        }
        NoiseOrder::NoiseThenSwap => {
            let after_pd = apply(&pd, rho_exp, &noise_basis)?;
            let after_ad = apply(&ad, &after_pd, &noise_basis)?;
            let rho_th_f = apply(&swap, &after_ad, &asc)?;
            Ok((rho_th_f.clone(), rho_th_f))
        }
    }
}

fn swap_columns(v: &ComplexMatrix) -> ComplexMatrix {
    let n = v.dim();
    let mut out = ComplexMatrix::zeros(n);
    for r in 0..n {
        out.set(r, 0, v.get(r, 1));
        out.set(r, 1, v.get(r, 0));
    }
    out
}

fn entropy_decomposition(params: &CycleParams, states: &CycleStates) -> Result<EntropyTerms> {
    let (_, h_h) = params.stroke_hamiltonians();
    let rho_h = gibbs_of(params.beta_h, &h_h);
    let d_exp_th = relative_entropy(&states.rho_exp, &states.rho_th_f)?;
    let d_comp_cold = relative_entropy(&states.rho_comp, &states.rho_tc)?;
    let diff = states.rho_th_f.matrix() - states.rho_exp.matrix();
    let log_gap = &mat_log(states.rho_th_f.matrix())? - &mat_log(rho_h.matrix())?;
    let qh_correction = (&diff * &log_gap).trace().re;
    Ok(EntropyTerms {
        d_exp_th,
        d_comp_cold,
        qh_correction,
        delta_s_th: d_exp_th + d_comp_cold - qh_correction,
    })
}

/// Entropy-production form of the efficiency, recomputed from a finished
/// cycle's checkpoint states. Equals -W/Q_h when the cycle closes
/// (lambda_c = 1).
pub fn efficiency_entropy_form(result: &CycleResult, params: &CycleParams) -> Result<f64> {
    if result.q_h.abs() <= QH_GUARD {
        return Err(Error::ParamOutOfRange {
            name: "q_h",
            value: result.q_h,
            range: "|q_h| > 1e-12",
        });
    }
    let states = result
        .states
        .as_ref()
        .ok_or_else(|| Error::InvalidState("cycle result carries no states".into()))?;
    let terms = entropy_decomposition(params, states)?;
    Ok(carnot_limit(params) - terms.delta_s_th / (params.beta_c * result.q_h))
}
