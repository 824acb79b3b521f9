//! Explicit adaptive Runge–Kutta integration (Dormand–Prince 5(4), FSAL)
//! with PI step-size control and per-step state monitors.
//!
//! Steps are truncated so that every sample time `k · monitor_period` is
//! hit exactly; samples therefore carry accepted-step values, never an
//! interpolant.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: f64,
    pub t_end: f64,
    pub monitor_period: f64,
}

impl IntegratorConfig {
    /// Defaults: rel_tol 1e-10, abs_tol 1e-12, unbounded step.
    pub fn new(t_end: f64, monitor_period: f64) -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: t_end,
            initial_step: 1e-3_f64.min(t_end),
            t_end,
            monitor_period,
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad(format!(
                "tolerances must be positive (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.max_step > 0.0 && self.initial_step > 0.0 && self.initial_step <= self.max_step) {
            return bad(format!(
                "need 0 < initial_step <= max_step (got {} / {})",
                self.initial_step, self.max_step
            ));
        }
        if !(self.monitor_period > 0.0 && self.monitor_period.is_finite()) {
            return bad(format!(
                "monitor_period must be positive, got {}",
                self.monitor_period
            ));
        }
        Ok(())
    }

    /// 0, p, 2p, ..., ending exactly at `t_end`.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = (self.t_end / self.monitor_period + 1e-9).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * self.monitor_period).collect();
        let last = *times.last().unwrap();
        if (self.t_end - last) > 1e-9 * self.monitor_period {
            times.push(self.t_end);
        } else {
            *times.last_mut().unwrap() = self.t_end;
        }
        times
    }
}

/// A named scalar functional of the state.
pub struct Monitor<'a> {
    pub name: &'a str,
    pub f: &'a dyn Fn(&[f64]) -> f64,
}

impl<'a> Monitor<'a> {
    pub fn new(name: &'a str, f: &'a dyn Fn(&[f64]) -> f64) -> Self {
        Self { name, f }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub monitor_names: Vec<String>,
    /// `diagnostics[k][m]`: monitor `m` at sample `k`.
    pub diagnostics: Vec<Vec<f64>>,
    /// Extremes of each monitor over every accepted step, not only samples.
    pub monitor_min: Vec<f64>,
    pub monitor_max: Vec<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory has at least one sample")
    }

    pub fn monitor_index(&self, name: &str) -> Option<usize> {
        self.monitor_names.iter().position(|n| n == name)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;
const PI_ALPHA: f64 = 0.2 - 0.75 * PI_BETA;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            err: vec![0.0; n],
        }
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// One trial step from (t, y) with `k[0] = f(t, y)` already filled.
/// Returns the scaled error norm (infinite if a stage was non-finite).
fn trial_step<F>(
    rhs: &mut F,
    t: f64,
    y: &[f64],
    h: f64,
    st: &mut Stages,
    cfg: &IntegratorConfig,
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let Stages { k, tmp, y_new, err } = st;
    let [k1, k2, k3, k4, k5, k6, k7] = k;

    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k1[i];
    }
    rhs(t + C2 * h, tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    rhs(t + C3 * h, tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    rhs(t + C4 * h, tmp, k4);
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    rhs(t + C5 * h, tmp, k5);
    for i in 0..n {
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    rhs(t + h, tmp, k6);
    for i in 0..n {
        y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
    }
    rhs(t + h, y_new, k7);

    let mut norm = 0.0_f64;
    for i in 0..n {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
        let r = (err[i] / scale).abs();
        if !r.is_finite() {
            return f64::INFINITY;
        }
        norm = norm.max(r);
    }
    if !all_finite(y_new) || !all_finite(k7) {
        return f64::INFINITY;
    }
    norm
}

/// Integrates y' = rhs(t, y) from t = 0 to `cfg.t_end`.
///
/// Each accepted step satisfies |err_i| ≤ abs_tol + rel_tol·|y_i|
/// componentwise. Monitors run at every accepted step; their values are
/// recorded at the sample times.
pub fn integrate<F>(
    mut rhs: F,
    y0: &[f64],
    cfg: &IntegratorConfig,
    monitors: &[Monitor<'_>],
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    cfg.validate()?;
    if !all_finite(y0) {
        return Err(Error::InvalidInput("initial state is not finite".into()));
    }
    let n = y0.len();
    let samples = cfg.sample_times();
    let h_min = 1e-14 * cfg.t_end;

    let eval_monitors = |y: &[f64]| -> Vec<f64> { monitors.iter().map(|m| (m.f)(y)).collect() };

    let mut traj = Trajectory {
        times: Vec::with_capacity(samples.len()),
        states: Vec::with_capacity(samples.len()),
        monitor_names: monitors.iter().map(|m| m.name.to_string()).collect(),
        diagnostics: Vec::with_capacity(samples.len()),
        monitor_min: vec![f64::INFINITY; monitors.len()],
        monitor_max: vec![f64::NEG_INFINITY; monitors.len()],
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let record_extremes = |traj: &mut Trajectory, values: &[f64]| {
        for (m, v) in values.iter().enumerate() {
            traj.monitor_min[m] = traj.monitor_min[m].min(*v);
            traj.monitor_max[m] = traj.monitor_max[m].max(*v);
        }
    };

    let mut y = y0.to_vec();
    let mut t = 0.0;
    let values = eval_monitors(&y);
    record_extremes(&mut traj, &values);
    traj.times.push(t);
    traj.states.push(y.clone());
    traj.diagnostics.push(values);

    let mut st = Stages::new(n);
    rhs(t, &y, &mut st.k[0]);
    if !all_finite(&st.k[0]) {
        return Err(Error::NumericalBlowup { t });
    }

    let mut next_sample = 1;
    let mut h_proposed = cfg.initial_step;
    let mut err_prev = 1e-4_f64;
    let mut rejected_last = false;

    while next_sample < samples.len() {
        let target = samples[next_sample];
        let remaining = target - t;
        let mut h = h_proposed.min(cfg.max_step);
        let lands = h >= remaining * (1.0 - 1e-12);
        if lands {
            h = remaining;
        }
        if h < h_min && !lands {
            return Err(Error::StiffnessFailure { t, h });
        }

        let err = trial_step(&mut rhs, t, &y, h, &mut st, cfg);

        if err <= 1.0 {
            let err_c = err.max(1e-10);
            let mut fac = SAFETY * err_c.powf(-PI_ALPHA) * err_prev.powf(PI_BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if rejected_last {
                fac = fac.min(1.0);
            }
            err_prev = err.max(1e-4);
            rejected_last = false;
            // a step truncated to hit a sample keeps the controller's proposal
            let h_next = h * fac;
            if !lands || h_next > h_proposed {
                h_proposed = h_next;
            }

            t = if lands { target } else { t + h };
            std::mem::swap(&mut y, &mut st.y_new);
            st.k.swap(0, 6);
            traj.accepted_steps += 1;

            let values = eval_monitors(&y);
            record_extremes(&mut traj, &values);
            if lands {
                traj.times.push(t);
                traj.states.push(y.clone());
                traj.diagnostics.push(values);
                next_sample += 1;
            }
        } else {
            traj.rejected_steps += 1;
            rejected_last = true;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).max(FAC_MIN)
            } else {
                FAC_MIN
            };
            h_proposed = h * fac;
            if h_proposed < h_min {
                if !all_finite(&st.y_new) {
                    return Err(Error::NumericalBlowup { t });
                }
                return Err(Error::StiffnessFailure { t, h: h_proposed });
            }
        }
    }
    Ok(traj)
}
