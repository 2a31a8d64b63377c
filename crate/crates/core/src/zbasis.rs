//! Closed-form results for the sigma_z-basis variant of the engine, where
//! every stroke commutes and the cycle admits exact scalar expressions. Used
//! as independent oracles for the matrix pipeline.
//!
//! Spectra here are +-eps/2 (gap eps), so thermal populations enter through
//! tanh(beta eps / 2).

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OracleInputs {
    pub beta_c: f64,
    pub beta_h: f64,
    pub eps_c: f64,
    pub eps_h: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub p: f64,
    /// Noise exposure time during the hot stroke.
    pub t: f64,
}

impl OracleInputs {
    pub fn new(
        beta_c: f64,
        beta_h: f64,
        eps_c: f64,
        eps_h: f64,
        lambda: f64,
        gamma: f64,
        p: f64,
        t: f64,
    ) -> Result<Self> {
        if !(eps_c > 0.0) || !(eps_h > eps_c) {
            return Err(Error::ParamOutOfRange {
                name: "eps_c/eps_h",
                value: eps_c,
                range: "0 < eps_c < eps_h",
            });
        }
        if !(beta_c > 0.0) || !(beta_h > 0.0) {
            return Err(Error::ParamOutOfRange {
                name: "beta",
                value: beta_c.min(beta_h),
                range: "(0, inf)",
            });
        }
        for (name, v) in [("lambda", lambda), ("p", p)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ParamOutOfRange {
                    name,
                    value: v,
                    range: "[0, 1]",
                });
            }
        }
        if gamma < 0.0 || t < 0.0 {
            return Err(Error::ParamOutOfRange {
                name: "gamma/t",
                value: gamma.min(t),
                range: "[0, inf)",
            });
        }
        Ok(Self {
            beta_c,
            beta_h,
            eps_c,
            eps_h,
            lambda,
            gamma,
            p,
            t,
        })
    }

    fn half_gap_diff(&self) -> f64 {
        (self.eps_c - self.eps_h) / 2.0
    }

    fn tanh_c(&self) -> f64 {
        (self.beta_c * self.eps_c / 2.0).tanh()
    }

    fn tanh_h(&self) -> f64 {
        (self.beta_h * self.eps_h / 2.0).tanh()
    }
}

/// Total work of the noiseless cycle:
/// (delta_eps / 2) lambda [tanh(beta_c eps_c / 2) - tanh(beta_h eps_h / 2)],
/// with delta_eps = eps_c - eps_h (negative for an expanding gap, so
/// extraction shows up as a negative value).
pub fn exact_work(inputs: &OracleInputs) -> f64 {
    inputs.half_gap_diff() * inputs.lambda * (inputs.tanh_c() - inputs.tanh_h())
}

/// (delta_eps / 2) [1 - tanh(beta_c eps_c / 2)]: energy handed to the
/// environment by the damping channel.
pub fn dissipated_energy(inputs: &OracleInputs) -> f64 {
    inputs.half_gap_diff() * (1.0 - inputs.tanh_c())
}

/// Work under amplitude damping with exposure time t:
/// e^{-gamma t/2} W_exact - (1 - e^{-gamma t/2}) E_dis.
/// Phase damping drops out (no energy exchange).
pub fn noisy_work(inputs: &OracleInputs) -> f64 {
    if inputs.gamma == 0.0 {
        return exact_work(inputs);
    }
    let u = (-inputs.gamma * inputs.t / 2.0).exp();
    u * exact_work(inputs) - (1.0 - u) * dissipated_energy(inputs)
}

/// Upper bound on the circuit thermodynamic cost:
/// (delta_eps / 2)(e^{-gamma t/2} - 1)[1 + (lambda - 1) tanh(beta_c eps_c/2)
/// - lambda tanh(beta_h eps_h / 2)].
pub fn cost_bound(inputs: &OracleInputs) -> f64 {
    let u = (-inputs.gamma * inputs.t / 2.0).exp();
    inputs.half_gap_diff()
        * (u - 1.0)
        * (1.0 + (inputs.lambda - 1.0) * inputs.tanh_c() - inputs.lambda * inputs.tanh_h())
}

/// Analytic temporal-correlation combination, evaluated as written over
/// complex arguments:
///
/// K = sech(phi) ( cos(Omega_h t + i phi)
///     + sqrt(1-lambda) sqrt(1-p) sqrt(e^{-gamma t})
///       [cos(Omega_c t + i phi) - cos(Omega t + i phi)] )
///
/// with Omega = w_c + w_h, Omega_h = w(tau - t) + w_h, Omega_c = w(t) + w_c,
/// phi = beta_c eps_c / 2. The expression is complex for generic arguments;
/// callers inspect the real and imaginary parts separately.
pub fn k_analytic(inputs: &OracleInputs, tau: f64) -> Result<Complex64> {
    if !(tau > 0.0) {
        return Err(Error::ParamOutOfRange {
            name: "tau",
            value: tau,
            range: "(0, inf)",
        });
    }
    if inputs.t > tau * (1.0 + 1e-12) {
        return Err(Error::TimeOutOfRange {
            t: inputs.t,
            max: tau,
        });
    }
    let (wc, wh, t) = (inputs.eps_c, inputs.eps_h, inputs.t);
    let w_of = |s: f64| wc + (wh - wc) * s / tau;
    let omega = wc + wh;
    let omega_h = w_of(tau - t) + wh;
    let omega_c = w_of(t) + wc;
    let phi = inputs.beta_c * inputs.eps_c / 2.0;
    let sech = 1.0 / phi.cosh();
    let iphi = Complex64::new(0.0, phi);
    let damp = (1.0 - inputs.lambda).sqrt()
        * (1.0 - inputs.p).sqrt()
        * ((-inputs.gamma * t).exp()).sqrt();
    let k = (Complex64::new(omega_h * t, 0.0) + iphi).cos()
        + Complex64::new(damp, 0.0)
            * ((Complex64::new(omega_c * t, 0.0) + iphi).cos()
                - (Complex64::new(omega * t, 0.0) + iphi).cos());
    Ok(k * Complex64::new(sech, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(lambda: f64, gamma: f64, t: f64) -> OracleInputs {
        OracleInputs::new(1.4, 0.1, 1.0, 1.8, lambda, gamma, 0.0, t).unwrap()
    }

    #[test]
    fn exact_work_vanishes_without_thermalization() {
        assert_eq!(exact_work(&base(0.0, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn exact_work_vanishes_without_gradient() {
        // beta_c eps_c = beta_h eps_h
        let inp = OracleInputs::new(1.8, 1.0, 1.0, 1.8, 0.7, 0.0, 0.0, 1.0).unwrap();
        assert!(exact_work(&inp).abs() < 1e-15);
    }

    #[test]
    fn exact_work_reference_value() {
        let w = exact_work(&base(0.5, 0.0, 1.0));
        assert!((w - (-0.10292199847400068)).abs() < 1e-15);
    }

    #[test]
    fn noisy_work_gamma_zero_is_exact_bitwise() {
        let inp = base(0.31, 0.0, 2.7);
        assert_eq!(noisy_work(&inp), exact_work(&inp));
    }

    #[test]
    fn noisy_work_full_decay_limit() {
        let inp = base(0.5, 50.0, 10.0);
        assert!((noisy_work(&inp) - (-dissipated_energy(&inp))).abs() < 1e-12);
    }

    #[test]
    fn noisy_work_reference_value() {
        let w = noisy_work(&base(0.5, 0.8, 1.0));
        assert!((w - (-0.01681787354443964)).abs() < 1e-14);
    }

    #[test]
    fn cost_bound_zero_without_decay() {
        assert_eq!(cost_bound(&base(0.4, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn cost_bound_full_thermalization_limit() {
        // lambda = 1, large gamma t: (delta_eps/2)(-1)(1 - tanh(beta_h eps_h/2))
        let inp = base(1.0, 400.0, 10.0);
        let expect = -0.4 * (-1.0) * (1.0 - (0.09f64).tanh());
        assert!((cost_bound(&inp) - expect).abs() < 1e-10);
    }

    #[test]
    fn cost_bound_reference_value() {
        let b = cost_bound(&base(0.5, 0.6, 1.0));
        assert!((b - 0.067691772088453311).abs() < 1e-14);
    }

    #[test]
    fn cost_bound_same_sign_as_work_gap() {
        // both equal (e^{-gamma t/2} - 1) times a fixed-sign bracket
        for lambda in [0.1, 0.4, 0.7, 1.0] {
            for gamma in [0.1, 0.4, 0.8] {
                for t in [0.5, 1.5, 3.0] {
                    let inp = base(lambda, gamma, t);
                    let gap = noisy_work(&inp) - exact_work(&inp);
                    let bound = cost_bound(&inp);
                    assert!(gap * bound >= 0.0, "sign mismatch at {lambda} {gamma} {t}");
                    assert!((gap - bound).abs() < 1e-12, "bound equals the gap identity");
                }
            }
        }
    }

    #[test]
    fn k_analytic_second_term_collapses() {
        // lambda = 1 or p = 1 or huge gamma: only sech(phi) cos(Omega_h t + i phi)
        let tau = 2.0;
        let t = 0.7;
        let expect = |inp: &OracleInputs| {
            let w_of = |s: f64| 1.0 + 0.8 * s / tau;
            let omega_h = w_of(tau - t) + 1.8;
            let phi = inp.beta_c * inp.eps_c / 2.0;
            (Complex64::new(omega_h * t, 0.0) + Complex64::new(0.0, phi)).cos()
                * Complex64::new(1.0 / phi.cosh(), 0.0)
        };
        let one = OracleInputs::new(1.4, 0.1, 1.0, 1.8, 1.0, 0.0, 0.0, t).unwrap();
        assert!((k_analytic(&one, tau).unwrap() - expect(&one)).norm() < 1e-14);
        let pd = OracleInputs::new(1.4, 0.1, 1.0, 1.8, 0.3, 0.0, 1.0, t).unwrap();
        assert!((k_analytic(&pd, tau).unwrap() - expect(&pd)).norm() < 1e-14);
        let hot = OracleInputs::new(1.4, 0.1, 1.0, 1.8, 0.3, 500.0, 0.0, t).unwrap();
        assert!((k_analytic(&hot, tau).unwrap() - expect(&hot)).norm() < 1e-12);
    }

    #[test]
    fn k_analytic_reference_values() {
        let a = k_analytic(&base(0.0, 0.0, 1.0), 2.0).unwrap();
        assert!((a.re - (-0.79346615066734042)).abs() < 1e-14);
        assert!((a.im - (-0.17049268597942839)).abs() < 1e-14);
        let b = k_analytic(&base(0.5, 0.8, 1.0), 2.0).unwrap();
        assert!((b.re - (-0.90120849612817359)).abs() < 1e-14);
        assert!((b.im - (-0.062254041660734607)).abs() < 1e-14);
    }

    #[test]
    fn k_analytic_unity_at_t_zero() {
        let k = k_analytic(&base(0.3, 0.5, 0.0), 2.0).unwrap();
        assert!((k.re - 1.0).abs() < 1e-14);
        assert!(k.im.abs() < 1e-14);
    }
}
