//! Explicit ODE integrators used as ground truth: adaptive Dormand–Prince
//! 8(5,3) and a fixed-step eighth-order Adams–Bashforth–Moulton PECE scheme.

use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::dop853_tableau::{A, B, C, E3, E5};

const STAGES: usize = 12;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const MAX_STEPS: usize = 5_000_000;

/// Adams–Bashforth weights for `f_n, f_{n-1}, …, f_{n-7}`.
const ADAMS_BASHFORTH: [f64; 8] = [
    16083.0 / 4480.0,
    -1152169.0 / 120960.0,
    242653.0 / 13440.0,
    -296053.0 / 13440.0,
    2102243.0 / 120960.0,
    -115747.0 / 13440.0,
    32863.0 / 13440.0,
    -5257.0 / 17280.0,
];

/// Adams–Moulton weights for `f_{n+1}, f_n, …, f_{n-6}`.
const ADAMS_MOULTON: [f64; 8] = [
    5257.0 / 17280.0,
    139849.0 / 120960.0,
    -4511.0 / 4480.0,
    123133.0 / 120960.0,
    -88547.0 / 120960.0,
    1537.0 / 4480.0,
    -11351.0 / 120960.0,
    275.0 / 24192.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorMethod {
    /// Adaptive Dormand–Prince 8(5,3).
    RungeKutta,
    /// Fixed-step eighth-order Adams–Bashforth–Moulton predictor-corrector,
    /// started with the Runge–Kutta scheme. Step is `max_step`.
    PredictorCorrector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: IntegratorMethod,
    pub rel_tolerance: f64,
    pub abs_tolerance: f64,
    /// Largest step in the independent variable.
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: IntegratorMethod::RungeKutta,
            rel_tolerance: 1e-14,
            abs_tolerance: 1e-14,
            max_step: f64::INFINITY,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |t: f64| t > 0.0 && t <= 1e-3;
        if !ok(self.rel_tolerance) || !ok(self.abs_tolerance) {
            return Err(Error::InvalidArgument(format!(
                "integrator tolerances must lie in (0, 1e-3], got rel {} abs {}",
                self.rel_tolerance, self.abs_tolerance
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidArgument("max_step must be positive".into()));
        }
        if self.method == IntegratorMethod::PredictorCorrector && !self.max_step.is_finite() {
            return Err(Error::InvalidArgument(
                "the predictor-corrector method needs a finite max_step".into(),
            ));
        }
        Ok(())
    }
}

fn check_cancel(cancel: Option<&AtomicBool>, t: f64) -> Result<()> {
    match cancel {
        Some(flag) if flag.load(Ordering::Relaxed) => Err(Error::Cancelled(t)),
        _ => Ok(()),
    }
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end` (either direction).
/// `observer` sees every accepted step, including the initial point.
pub fn integrate<F, O>(
    f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    config: &IntegratorConfig,
    cancel: Option<&AtomicBool>,
    mut observer: O,
) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    config.validate()?;
    if !t0.is_finite() || !t_end.is_finite() || y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("integration inputs must be finite".into()));
    }
    observer(t0, y0);
    if t0 == t_end {
        return Ok(y0.to_vec());
    }
    match config.method {
        IntegratorMethod::RungeKutta => dop853(&f, t0, y0, t_end, config, cancel, &mut observer),
        IntegratorMethod::PredictorCorrector => abm8(&f, t0, y0, t_end, config, cancel, &mut observer),
    }
}

fn rms_norm(v: &[f64], scale: &[f64]) -> f64 {
    (v.iter().zip(scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

fn initial_step<F>(f: &F, t0: f64, y0: &[f64], f0: &[f64], direction: f64, config: &IntegratorConfig) -> f64
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let scale: Vec<f64> = y0
        .iter()
        .map(|y| config.abs_tolerance + y.abs() * config.rel_tolerance)
        .collect();
    let d0 = rms_norm(y0, &scale);
    let d1 = rms_norm(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, d)| y + h0 * direction * d).collect();
    let mut f1 = vec![0.0; y0.len()];
    f(t0 + h0 * direction, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_norm(&diff, &scale) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    (100.0 * h0).min(h1).min(config.max_step)
}

fn dop853<F, O>(
    f: &F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    config: &IntegratorConfig,
    cancel: Option<&AtomicBool>,
    observer: &mut O,
) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    let n = y0.len();
    let direction = (t_end - t0).signum();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; STAGES + 1];
    f(t, &y, &mut k[0]);
    let mut h = initial_step(f, t0, y0, &k[0].clone(), direction, config);
    let mut y_new = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut rejected = false;
    let mut steps = 0;
    while (t_end - t) * direction > 0.0 {
        check_cancel(cancel, t)?;
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Integration {
                last_good_time: t,
                reason: "step budget exhausted".into(),
            });
        }
        let min_step = 10.0 * (t.abs() * f64::EPSILON).max(f64::MIN_POSITIVE);
        if h < min_step {
            return Err(Error::Integration {
                last_good_time: t,
                reason: format!("step size collapsed to {h:e}"),
            });
        }
        h = h.min(config.max_step).min((t_end - t).abs());
        let hs = h * direction;
        for s in 1..STAGES {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                stage[i] = y[i] + hs * acc;
            }
            f(t + C[s] * hs, &stage, &mut k[s]);
        }
        for i in 0..n {
            let mut acc = 0.0;
            for s in 0..STAGES {
                acc += B[s] * k[s][i];
            }
            y_new[i] = y[i] + hs * acc;
        }
        let t_new = if (t_end - (t + hs)) * direction <= 0.0 {
            t_end
        } else {
            t + hs
        };
        f(t_new, &y_new, &mut k[STAGES]);
        let mut err5 = 0.0;
        let mut err3 = 0.0;
        let mut finite = true;
        for i in 0..n {
            let scale = config.abs_tolerance + y[i].abs().max(y_new[i].abs()) * config.rel_tolerance;
            let mut e5 = 0.0;
            let mut e3 = 0.0;
            for s in 0..=STAGES {
                e5 += E5[s] * k[s][i];
                e3 += E3[s] * k[s][i];
            }
            finite &= y_new[i].is_finite() && k[STAGES][i].is_finite();
            err5 += (e5 / scale).powi(2);
            err3 += (e3 / scale).powi(2);
        }
        let err = if !finite {
            f64::INFINITY
        } else if err5 == 0.0 && err3 == 0.0 {
            0.0
        } else {
            h * err5 / ((err5 + 0.01 * err3) * n as f64).sqrt()
        };
        if err < 1.0 {
            let mut factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                MAX_FACTOR.min(SAFETY * err.powf(-1.0 / 8.0))
            };
            if rejected {
                factor = factor.min(1.0);
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, STAGES);
            observer(t, &y);
            h *= factor;
            rejected = false;
        } else {
            let factor = if err.is_finite() {
                MIN_FACTOR.max(SAFETY * err.powf(-1.0 / 8.0))
            } else {
                MIN_FACTOR
            };
            h *= factor;
            rejected = true;
        }
    }
    Ok(y)
}

fn abm8<F, O>(
    f: &F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    config: &IntegratorConfig,
    cancel: Option<&AtomicBool>,
    observer: &mut O,
) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    let n = y0.len();
    let span = t_end - t0;
    let steps = (span.abs() / config.max_step).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let starter = IntegratorConfig {
        method: IntegratorMethod::RungeKutta,
        rel_tolerance: 1e-14_f64.max(config.rel_tolerance * 1e-2).min(config.rel_tolerance),
        abs_tolerance: 1e-14_f64.max(config.abs_tolerance * 1e-2).min(config.abs_tolerance),
        max_step: f64::INFINITY,
    };
    // history[0] is the newest derivative
    let mut history: std::collections::VecDeque<Vec<f64>> = std::collections::VecDeque::with_capacity(8);
    let mut y = y0.to_vec();
    let mut fy = vec![0.0; n];
    f(t0, &y, &mut fy);
    history.push_front(fy.clone());
    let start_steps = steps.min(7);
    for i in 0..start_steps {
        let ta = t0 + i as f64 * h;
        let tb = if i + 1 == steps { t_end } else { t0 + (i + 1) as f64 * h };
        y = dop853(f, ta, &y, tb, &starter, cancel, &mut |_, _| {})?;
        f(tb, &y, &mut fy);
        history.push_front(fy.clone());
        observer(tb, &y);
    }
    let mut pred = vec![0.0; n];
    let mut fp = vec![0.0; n];
    for i in start_steps..steps {
        let t = t0 + i as f64 * h;
        check_cancel(cancel, t)?;
        let t_next = if i + 1 == steps { t_end } else { t0 + (i + 1) as f64 * h };
        for c in 0..n {
            let acc: f64 = ADAMS_BASHFORTH.iter().zip(&history).map(|(w, fk)| w * fk[c]).sum();
            pred[c] = y[c] + h * acc;
        }
        f(t_next, &pred, &mut fp);
        for c in 0..n {
            let mut acc = ADAMS_MOULTON[0] * fp[c];
            for (w, fk) in ADAMS_MOULTON[1..].iter().zip(&history) {
                acc += w * fk[c];
            }
            y[c] += h * acc;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration {
                last_good_time: t,
                reason: "non-finite state".into(),
            });
        }
        f(t_next, &y, &mut fy);
        history.pop_back();
        history.push_front(fy.clone());
        observer(t_next, &y);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn harmonic_oscillator_runge_kutta() {
        let y = integrate(
            oscillator,
            0.0,
            &[1.0, 0.0],
            20.0,
            &IntegratorConfig::default(),
            None,
            |_, _| {},
        )
        .unwrap();
        assert!((y[0] - 20f64.cos()).abs() < 1e-11);
        assert!((y[1] + 20f64.sin()).abs() < 1e-11);
    }

    #[test]
    fn backwards_integration() {
        let y = integrate(
            oscillator,
            5.0,
            &[1.0, 0.0],
            2.0,
            &IntegratorConfig::default(),
            None,
            |_, _| {},
        )
        .unwrap();
        assert!((y[0] - (-3f64).cos()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_predictor_corrector() {
        let config = IntegratorConfig {
            method: IntegratorMethod::PredictorCorrector,
            max_step: 0.01,
            ..Default::default()
        };
        let mut count = 0;
        let y = integrate(oscillator, 0.0, &[1.0, 0.0], 20.0, &config, None, |_, _| count += 1).unwrap();
        assert_eq!(count, 2001);
        assert!((y[0] - 20f64.cos()).abs() < 1e-11, "{}", y[0] - 20f64.cos());
        assert!((y[1] + 20f64.sin()).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_tolerances() {
        let config = IntegratorConfig {
            rel_tolerance: 0.1,
            ..Default::default()
        };
        assert!(integrate(oscillator, 0.0, &[1.0, 0.0], 1.0, &config, None, |_, _| {}).is_err());
    }

    #[test]
    fn cancellation_reports_time() {
        let flag = AtomicBool::new(true);
        let r = integrate(
            oscillator,
            0.0,
            &[1.0, 0.0],
            10.0,
            &IntegratorConfig::default(),
            Some(&flag),
            |_, _| {},
        );
        assert_eq!(r, Err(Error::Cancelled(0.0)));
    }

    #[test]
    fn blow_up_reports_last_good_time() {
        let f = |_: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0];
        // y = 1/(1 - t) explodes at t = 1
        match integrate(f, 0.0, &[1.0], 2.0, &IntegratorConfig::default(), None, |_, _| {}) {
            Err(Error::Integration { last_good_time, .. }) => assert!(last_good_time > 0.99 && last_good_time < 1.0),
            other => panic!("expected integration failure, got {other:?}"),
        }
    }
}
