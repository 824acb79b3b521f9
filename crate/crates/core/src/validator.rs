//! Numerical checks that the full system tracks its replicator reduction:
//! O(ε) frequency error on a slow-time window, O(ε) closeness of the
//! aggregate variables, and the product structure of the neutral limit.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::full::{extract_frequencies, init_on_manifold, simulate_full, FullModel};
use crate::model::{FrequencyState, FullState};
use crate::ode::IntegratorConfig;
use crate::reduction::{LeftEigenvector, NeutralEquilibrium};
use crate::replicator::{simulate_replicator, ReplicatorSetup};

/// Slow-time comparison window [τ₀, T].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauWindow {
    pub tau0: f64,
    pub tau_end: f64,
}

impl TauWindow {
    pub fn new(tau0: f64, tau_end: f64) -> Result<Self> {
        if !(tau_end > 0.0 && tau_end.is_finite() && tau0 >= 0.0 && tau0 < tau_end) {
            return Err(Error::InvalidInput(format!(
                "need 0 <= tau0 < T, got [{tau0}, {tau_end}]"
            )));
        }
        Ok(Self { tau0, tau_end })
    }

    /// T = 10 / (max Θ_p · max |λ|), τ₀ = T/10. Falls back to 10 / max Θ_p
    /// for neutral strains.
    pub fn default_for(setup: &ReplicatorSetup) -> Self {
        let speed = setup.max_theta();
        let fitness = setup.max_fitness();
        let tau_end = if fitness > 0.0 {
            10.0 / (speed * fitness)
        } else {
            10.0 / speed
        };
        Self {
            tau0: 0.1 * tau_end,
            tau_end,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Number of sampling intervals on [0, T].
    pub samples: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            samples: 200,
        }
    }
}

impl ValidationOptions {
    /// Errors at or below this level are integration noise.
    pub fn noise_floor(&self) -> f64 {
        1e3 * (self.rel_tol + self.abs_tol)
    }
}

/// One full-vs-reduced comparison at a single ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionMeasurement {
    pub eps: f64,
    /// sup over sampled τ ∈ [τ₀, T] of max_{p,i} |z̃_p^i(τ/ε) − z_p^i(τ)|.
    pub error: f64,
    /// sup over the same samples of max_p |S_p(τ/ε) − S_p*|.
    pub aggregate_deviation: f64,
}

/// Runs the full model at `eps` from the slow manifold over z0 and the
/// replicator from z0, and measures their distance on the window.
pub fn reduction_error(
    model: &FullModel,
    z0: &FrequencyState,
    eps: f64,
    window: TauWindow,
    opts: &ValidationOptions,
) -> Result<ReductionMeasurement> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be > 0, got {eps}")));
    }
    if opts.samples == 0 {
        return Err(Error::InvalidInput(
            "at least one sample interval required".into(),
        ));
    }
    let model = model.with_eps(eps)?;
    let setup = ReplicatorSetup::from_model(&model)?;
    let red = model.reductions()?;
    let eqs: Vec<NeutralEquilibrium> = red.iter().map(|r| r.equilibrium).collect();
    let omegas: Vec<LeftEigenvector> = red.iter().map(|r| r.omega).collect();

    let samples = opts.samples as f64;
    let tau_cfg = IntegratorConfig::new(window.tau_end, window.tau_end / samples)
        .with_tolerances(opts.rel_tol, opts.abs_tol);
    let t_end = window.tau_end / eps;
    let t_cfg =
        IntegratorConfig::new(t_end, t_end / samples).with_tolerances(opts.rel_tol, opts.abs_tol);

    let y0 = init_on_manifold(z0, &eqs)?;
    let reduced = simulate_replicator(&setup, z0, &tau_cfg)?;
    let full = simulate_full(&model, &y0, &t_cfg)?;
    debug_assert_eq!(reduced.len(), full.len());

    let (np, n) = (model.patches(), model.strains());
    let mut error = 0.0_f64;
    let mut aggregate = 0.0_f64;
    let start = window.tau0 - 1e-9 * window.tau_end;
    for ((tau, zr), y) in reduced.times.iter().zip(&reduced.states).zip(&full.states) {
        if *tau < start {
            continue;
        }
        let state = FullState::from_vec(np, n, y.clone())?;
        let zf = extract_frequencies(&state, &omegas)?;
        let zr = FrequencyState::from_vec(np, n, zr.clone())?;
        error = error.max(zf.max_abs_diff(&zr));
        for (p, eq) in eqs.iter().enumerate() {
            aggregate = aggregate.max((state.s(p) - eq.s).abs());
        }
    }
    Ok(ReductionMeasurement {
        eps,
        error,
        aggregate_deviation: aggregate,
    })
}

/// Least-squares slope of log(y) against log(x); `None` if any value is
/// non-positive or fewer than two points are given.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    /// Strictly decreasing.
    pub eps_values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Slope of log(error) vs log(ε); `None` when not applicable.
    pub fitted_order: Option<f64>,
    /// False when every error sits at integration-noise level (nothing to fit).
    pub slope_applicable: bool,
    pub tau_window: TauWindow,
    pub aggregate_deviations: Vec<f64>,
    pub aggregate_order: Option<f64>,
    /// error(ε_{k+1}) / error(ε_k).
    pub error_ratios: Vec<f64>,
    pub aggregate_ratios: Vec<f64>,
}

fn ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[1] / w[0]).collect()
}

/// Runs [`reduction_error`] for every ε (in parallel) and fits the
/// convergence order. ε values are sorted into decreasing order.
pub fn convergence_study(
    model: &FullModel,
    z0: &FrequencyState,
    eps_list: &[f64],
    window: Option<TauWindow>,
    opts: &ValidationOptions,
) -> Result<ReductionReport> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "a convergence study needs at least 3 eps values, got {}",
            eps_list.len()
        )));
    }
    let mut eps_values = eps_list.to_vec();
    if eps_values.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidInput("eps values must be positive".into()));
    }
    eps_values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if eps_values.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput("eps values must be distinct".into()));
    }
    let window = match window {
        Some(w) => w,
        None => TauWindow::default_for(&ReplicatorSetup::from_model(model)?),
    };

    let runs = eps_values
        .par_iter()
        .map(|&eps| reduction_error(model, z0, eps, window, opts))
        .collect::<Result<Vec<_>>>()?;

    let errors: Vec<f64> = runs.iter().map(|r| r.error).collect();
    let aggregate_deviations: Vec<f64> = runs.iter().map(|r| r.aggregate_deviation).collect();
    let slope_applicable = errors.iter().any(|e| *e > opts.noise_floor());
    let fitted_order = if slope_applicable {
        log_log_slope(&eps_values, &errors)
    } else {
        None
    };
    let aggregate_order = if aggregate_deviations.iter().any(|e| *e > opts.noise_floor()) {
        log_log_slope(&eps_values, &aggregate_deviations)
    } else {
        None
    };
    Ok(ReductionReport {
        error_ratios: ratios(&errors),
        aggregate_ratios: ratios(&aggregate_deviations),
        eps_values,
        errors,
        fitted_order,
        slope_applicable,
        tau_window: window,
        aggregate_deviations,
        aggregate_order,
    })
}

/// Distance of a state from the neutral attractor point selected by its own
/// extracted frequencies:
/// max |D^{ij} − D* z^i z^j| + max |I^i − I* z^i| + max |S − S*|.
pub fn product_structure_residual(
    state: &FullState,
    eqs: &[NeutralEquilibrium],
    omegas: &[LeftEigenvector],
) -> Result<f64> {
    let z = extract_frequencies(state, omegas)?;
    let n = state.strains();
    let (mut rd, mut ri, mut rs) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (p, eq) in eqs.iter().enumerate() {
        rs = rs.max((state.s(p) - eq.s).abs());
        for i in 0..n {
            ri = ri.max((state.i(p, i) - eq.i * z.get(p, i)).abs());
            for j in 0..n {
                rd = rd.max((state.d(p, i, j) - eq.d * z.get(p, i) * z.get(p, j)).abs());
            }
        }
    }
    Ok(rd + ri + rs)
}

/// Integrates the neutral, disconnected system (ε = 0) to `t_end` and returns
/// the product-structure residual of the final state.
pub fn neutral_limit_check(
    model: &FullModel,
    y0: &FullState,
    t_end: f64,
    opts: &ValidationOptions,
) -> Result<f64> {
    if model.scale().eps != 0.0 || model.scale().delta() != 0.0 {
        return Err(Error::InvalidInput(
            "neutral limit check requires eps = 0 and no migration".into(),
        ));
    }
    let red = model.reductions()?;
    let eqs: Vec<_> = red.iter().map(|r| r.equilibrium).collect();
    let omegas: Vec<_> = red.iter().map(|r| r.omega).collect();
    let cfg = IntegratorConfig::new(t_end, t_end / opts.samples.max(1) as f64)
        .with_tolerances(opts.rel_tol, opts.abs_tol);
    let traj = simulate_full(model, y0, &cfg)?;
    let last = FullState::from_vec(
        model.patches(),
        model.strains(),
        traj.final_state().to_vec(),
    )?;
    product_structure_residual(&last, &eqs, &omegas)
}
