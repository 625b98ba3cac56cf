//! Adaptive Dormand–Prince 5(4) integration of the replicator flow.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::params::{ModelVariant, ValidParams};
use crate::replicator::{GapField, PopulationState};

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub atol: f64,
    pub rtol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    /// Record dense-output samples on this grid instead of the accepted steps.
    pub sample_interval: Option<f64>,
    /// Infinity norm of the vector field below which the final state counts as converged.
    pub convergence_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            atol: 1e-9,
            rtol: 1e-7,
            initial_step: 1e-3,
            max_step: f64::INFINITY,
            min_step: 1e-14,
            max_steps: 5_000_000,
            sample_interval: None,
            convergence_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrateError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("exceeded {steps} steps at t = {t}")]
    TooManySteps { steps: usize, t: f64 },
    #[error("invalid integration setup: {0}")]
    InvalidSetup(&'static str),
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

/// Sampled solution of an initial-value problem.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PopulationState>,
    /// `true` when the vector field at the final state is below the convergence tolerance.
    pub converged: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<PopulationState> {
        self.states.last().copied()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Raw solution of a generic system.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    core::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

/// Integrate `dy/dt = f(y)` on `[0, t_end]` with Dormand–Prince 5(4).
///
/// After every accepted step the state is passed through `project`, which is
/// how the replicator integrator keeps frequencies inside `[0, 1]`.
pub fn dopri5<const N: usize, F, P>(
    f: F,
    project: P,
    y0: [f64; N],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Solution<N>, IntegrateError>
where
    F: Fn(&[f64; N]) -> [f64; N],
    P: Fn(&mut [f64; N]),
{
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(IntegrateError::InvalidSetup("t_end must be finite and non-negative"));
    }
    if !(cfg.atol > 0.0 && cfg.rtol >= 0.0 && cfg.initial_step > 0.0) {
        return Err(IntegrateError::InvalidSetup("tolerances and initial step must be positive"));
    }
    if let Some(dt) = cfg.sample_interval {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(IntegrateError::InvalidSetup("sample interval must be positive"));
        }
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(IntegrateError::NonFinite { t: 0.0 });
    }

    let mut sol = Solution { times: Vec::new(), states: Vec::new(), accepted_steps: 0, rejected_steps: 0 };
    let mut t = 0.0;
    let mut y = y0;
    sol.times.push(t);
    sol.states.push(y);
    let mut sample_idx = 1usize;

    let mut h = cfg.initial_step.min(cfg.max_step).min(t_end.max(f64::MIN_POSITIVE));
    let mut k1 = f(&y);
    let mut steps = 0usize;

    while t < t_end {
        if steps >= cfg.max_steps {
            return Err(IntegrateError::TooManySteps { steps, t });
        }
        steps += 1;
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        let k2 = f(&axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(&axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(&axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(&axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(&y_new);

        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.atol + cfg.rtol * f64::max(libm::fabs(y[i]), libm::fabs(y_new[i]));
            err += (e / sc) * (e / sc);
        }
        let err = libm::sqrt(err / N as f64);
        if !err.is_finite() {
            h *= FAC_MIN;
            sol.rejected_steps += 1;
            if h < cfg.min_step {
                return Err(IntegrateError::StepSizeUnderflow { t });
            }
            continue;
        }

        if err <= 1.0 {
            let t_new = if last { t_end } else { t + h };
            if let Some(dt) = cfg.sample_interval {
                loop {
                    let ts = sample_idx as f64 * dt;
                    if ts > t_new {
                        break;
                    }
                    let mut ys = dense(&y, &y_new, &k1, &k3, &k4, &k5, &k6, &k7, h, (ts - t) / h);
                    project(&mut ys);
                    sol.times.push(ts);
                    sol.states.push(ys);
                    sample_idx += 1;
                }
            }

            let mut y_acc = y_new;
            project(&mut y_acc);
            if y_acc.iter().any(|v| !v.is_finite()) {
                return Err(IntegrateError::NonFinite { t: t_new });
            }
            k1 = if y_acc != y_new { f(&y_acc) } else { k7 };
            t = t_new;
            y = y_acc;
            sol.accepted_steps += 1;
            if cfg.sample_interval.is_none() {
                sol.times.push(t);
                sol.states.push(y);
            }
            let fac = if err == 0.0 { 10.0 } else { (SAFETY * libm::pow(err, -0.2)).clamp(FAC_MIN, FAC_MAX) };
            h = (h * fac).min(cfg.max_step);
        } else {
            sol.rejected_steps += 1;
            let fac = (SAFETY * libm::pow(err, -0.2)).clamp(FAC_MIN, 1.0);
            h *= fac;
            if h < cfg.min_step {
                return Err(IntegrateError::StepSizeUnderflow { t });
            }
        }
    }

    if cfg.sample_interval.is_some() && sol.times.last().copied() != Some(t_end) {
        sol.times.push(t_end);
        sol.states.push(y);
    }
    Ok(sol)
}

/// Hairer's fourth-order continuous extension of the Dormand–Prince step.
#[allow(clippy::too_many_arguments)]
#[inline]
fn dense<const N: usize>(
    y0: &[f64; N],
    y1: &[f64; N],
    k1: &[f64; N],
    k3: &[f64; N],
    k4: &[f64; N],
    k5: &[f64; N],
    k6: &[f64; N],
    k7: &[f64; N],
    h: f64,
    theta: f64,
) -> [f64; N] {
    let th1 = 1.0 - theta;
    core::array::from_fn(|i| {
        let dy = y1[i] - y0[i];
        let bspl = h * k1[i] - dy;
        let r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        let r4 = dy - h * k7[i] - bspl;
        y0[i] + theta * (dy + th1 * (bspl + theta * (r4 + th1 * r5)))
    })
}

/// Integrate the replicator flow from `initial` for `t_end` time units.
///
/// `t_end = 0` returns the initial state alone.
pub fn integrate(
    model: ModelVariant,
    params: &ValidParams,
    initial: PopulationState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError> {
    if !initial.to_array().iter().all(|v| v.is_finite()) {
        return Err(IntegrateError::NonFinite { t: 0.0 });
    }
    if !initial.in_unit_cube() {
        return Err(IntegrateError::InvalidSetup("initial state must lie in the unit cube"));
    }
    let field = GapField::new(model, params);
    let sol = dopri5(
        |s| field.rhs(s),
        |s| {
            for v in s.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
        },
        initial.to_array(),
        t_end,
        cfg,
    )?;
    let last = sol.states.last().copied().unwrap_or(initial.to_array());
    let speed = field.rhs(&last).iter().fold(0.0, |m: f64, v| m.max(libm::fabs(*v)));
    Ok(Trajectory {
        times: sol.times,
        states: sol.states.into_iter().map(PopulationState::from_array).collect(),
        converged: speed < cfg.convergence_tol,
        accepted_steps: sol.accepted_steps,
        rejected_steps: sol.rejected_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run1(f: impl Fn(f64, f64) -> f64, y0: f64, t_end: f64, cfg: &IntegratorConfig) -> Solution<2> {
        // Time is carried as a second state component to allow non-autonomous checks.
        dopri5(|s| [f(s[1], s[0]), 1.0], |_| {}, [y0, 0.0], t_end, cfg).unwrap()
    }

    #[test]
    fn exponential_decay() {
        let cfg = IntegratorConfig { atol: 1e-12, rtol: 1e-10, ..Default::default() };
        let sol = run1(|_, y| -y, 1.0, 5.0, &cfg);
        let y = sol.states.last().unwrap()[0];
        assert!((y - libm::exp(-5.0)).abs() < 1e-9);
        assert_eq!(*sol.times.last().unwrap(), 5.0);
    }

    #[test]
    fn dense_output_tracks_logistic() {
        let cfg = IntegratorConfig { atol: 1e-12, rtol: 1e-10, sample_interval: Some(0.25), ..Default::default() };
        let sol = run1(|_, y| y * (1.0 - y), 0.1, 10.0, &cfg);
        assert_eq!(sol.times.len(), 41);
        for (t, s) in sol.times.iter().zip(&sol.states) {
            let exact = 0.1 * libm::exp(*t) / (1.0 - 0.1 + 0.1 * libm::exp(*t));
            assert!((s[0] - exact).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn harmonic_oscillator_period() {
        let cfg = IntegratorConfig { atol: 1e-12, rtol: 1e-11, ..Default::default() };
        let tau = 2.0 * core::f64::consts::PI;
        let sol = dopri5(|s| [s[1], -s[0]], |_| {}, [1.0, 0.0], tau, &cfg).unwrap();
        let last = sol.states.last().unwrap();
        assert!((last[0] - 1.0).abs() < 1e-9 && last[1].abs() < 1e-9);
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let p = crate::params::GovernanceParams::replicator_baseline().validate().unwrap();
        let s = PopulationState::splat(0.5);
        let tr = integrate(ModelVariant::InvestigateDevelopers, &p, s, 0.0, &Default::default()).unwrap();
        assert_eq!(tr.states, [s]);
    }

    #[test]
    fn rejects_states_outside_cube() {
        let p = crate::params::GovernanceParams::replicator_baseline().validate().unwrap();
        let s = PopulationState::new(1.2, 0.5, 0.5, 0.5);
        assert!(integrate(ModelVariant::InvestigateDevelopers, &p, s, 1.0, &Default::default()).is_err());
    }

    #[test]
    fn step_guard_reports_failure() {
        let cfg = IntegratorConfig { max_steps: 3, initial_step: 1e-6, ..Default::default() };
        let r = dopri5(|s| [-s[0]], |_| {}, [1.0], 10.0, &cfg);
        assert!(matches!(r, Err(IntegrateError::TooManySteps { .. })));
    }

    #[test]
    fn stiff_blowup_underflows() {
        let cfg = IntegratorConfig { min_step: 1e-10, ..Default::default() };
        let r = dopri5(|s| [s[0] * s[0]], |_| {}, [1.0], 2.0, &cfg);
        assert!(r.is_err());
    }
}
