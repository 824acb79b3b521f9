//! JSON configuration document.
//!
//! ```json
//! {
//!   "patches": [{"r": 1, "beta": 4, "gamma": 1, "k": 1}],
//!   "strains": {"n": 2, "b": [[0.5, -0.5]]},
//!   "connectivity": {"matrix": [[0]]},
//!   "scale": {"eps": 0.05, "d": 1},
//!   "initial": {"frequencies": [[0.3, 0.7]]},
//!   "run": {"t_end": 200, "samples": 200}
//! }
//! ```
//!
//! Perturbation arrays are optional and default to zero. `connectivity`
//! holds either `matrix` or `volumes` + `weights` (strict upper triangle).

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::full::{init_on_manifold, FullModel};
use crate::model::{
    renormalize_to_density, validate_connectivity, volume_matrix, ConnectivityMatrix,
    FrequencyState, FullState, PatchParams, ScaleParams, StrainPerturbations, TraitDeviations,
};
use crate::ode::IntegratorConfig;
use crate::reduction::NeutralEquilibrium;

/// Seeded generator used for every random initial condition.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.3, seed_from_u64)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub patches: Vec<PatchParams>,
    pub strains: StrainsConfig,
    pub connectivity: ConnectivityConfig,
    pub scale: ScaleParams,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrainsConfig {
    #[serde(alias = "N")]
    pub n: usize,
    /// `b[p][i]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Vec<Vec<f64>>>,
    /// `c_pair[p][i][j]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_pair: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectivityConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volumes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Explicit z0, one row per patch. Takes precedence over `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<Vec<f64>>>,
    /// Seed for random z0 (and for the off-manifold full state).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Start the full system at a random point of Ω₀ instead of the slow
    /// manifold.
    #[serde(default)]
    pub off_manifold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Horizon of full-system runs (fast time t).
    pub t_end: f64,
    /// Slow-time horizon T of reduced runs and comparisons; derived from the
    /// fitness scale when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_end: Option<f64>,
    /// τ₀ = tau0_fraction · T.
    pub tau0_fraction: f64,
    /// Number of output intervals.
    pub samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_step: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_end: 200.0,
            tau_end: None,
            tau0_fraction: 0.1,
            samples: 200,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: None,
            initial_step: None,
        }
    }
}

impl RunConfig {
    pub fn integrator(&self, horizon: f64) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::new(horizon, horizon / self.samples.max(1) as f64)
            .with_tolerances(self.rel_tol, self.abs_tol);
        if let Some(h) = self.max_step {
            cfg.max_step = h;
            cfg.initial_step = cfg.initial_step.min(h);
        }
        if let Some(h) = self.initial_step {
            cfg.initial_step = h;
        }
        cfg
    }
}

fn vectors(name: &str, data: &Option<Vec<Vec<f64>>>, np: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    match data {
        None => Ok(vec![vec![0.0; n]; np]),
        Some(rows) => {
            if rows.len() != np || rows.iter().any(|r| r.len() != n) {
                return Err(Error::DimensionMismatch(format!(
                    "strains.{name} must be {np} x {n}"
                )));
            }
            Ok(rows.clone())
        }
    }
}

fn matrices(
    name: &str,
    data: &Option<Vec<Vec<Vec<f64>>>>,
    np: usize,
    n: usize,
) -> Result<Vec<DMatrix<f64>>> {
    match data {
        None => Ok(vec![DMatrix::zeros(n, n); np]),
        Some(blocks) => {
            let ok = blocks.len() == np
                && blocks
                    .iter()
                    .all(|b| b.len() == n && b.iter().all(|r| r.len() == n));
            if !ok {
                return Err(Error::DimensionMismatch(format!(
                    "strains.{name} must be {np} x {n} x {n}"
                )));
            }
            Ok(blocks
                .iter()
                .map(|b| DMatrix::from_fn(n, n, |i, j| b[i][j]))
                .collect())
        }
    }
}

fn square(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be a non-empty square matrix"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl StrainsConfig {
    pub fn neutral(n: usize) -> Self {
        Self {
            n,
            b: None,
            nu: None,
            c_pair: None,
            w: None,
            alpha: None,
        }
    }

    pub fn perturbations(&self, np: usize) -> Result<StrainPerturbations> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidInput("strains.n must be at least 1".into()));
        }
        let b = vectors("b", &self.b, np, n)?;
        let nu = vectors("nu", &self.nu, np, n)?;
        let c = matrices("c_pair", &self.c_pair, np, n)?;
        let w = matrices("w", &self.w, np, n)?;
        let a = matrices("alpha", &self.alpha, np, n)?;
        let devs = (0..np)
            .map(|p| TraitDeviations {
                b: b[p].clone(),
                nu: nu[p].clone(),
                c_pair: c[p].clone(),
                w: w[p].clone(),
                alpha: a[p].clone(),
            })
            .collect();
        StrainPerturbations::new(devs)
    }
}

impl ConnectivityConfig {
    pub fn matrix(rows: Vec<Vec<f64>>) -> Self {
        Self {
            matrix: Some(rows),
            volumes: None,
            weights: None,
        }
    }

    /// The raw matrix, or the density-renormalized volume construction.
    pub fn raw_matrix(&self) -> Result<DMatrix<f64>> {
        match (&self.matrix, &self.volumes, &self.weights) {
            (Some(rows), None, None) => square(rows, "connectivity.matrix"),
            (None, Some(v), Some(w)) => {
                let m = volume_matrix(v, &square(w, "connectivity.weights")?)?;
                renormalize_to_density(&m, v)
            }
            (None, Some(_), None) | (None, None, Some(_)) => Err(Error::InvalidConnectivity(
                "volumes and weights must be given together".into(),
            )),
            (None, None, None) => Err(Error::InvalidConnectivity(
                "either matrix or volumes+weights is required".into(),
            )),
            (Some(_), _, _) => Err(Error::InvalidConnectivity(
                "give either matrix or volumes+weights, not both".into(),
            )),
        }
    }

    pub fn build(&self) -> Result<ConnectivityMatrix> {
        ConnectivityMatrix::new(self.raw_matrix()?)
    }
}

impl ModelConfig {
    pub fn patch_count(&self) -> usize {
        self.patches.len()
    }

    /// Every problem found, one line each; empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let np = self.patches.len();
        if np == 0 {
            issues.push("no patches defined".to_string());
        }
        for (p, params) in self.patches.iter().enumerate() {
            if let Err(e) = params.check_positivity() {
                issues.push(format!("patch {p}: {e}"));
            } else if !params.is_supercritical() {
                issues.push(format!(
                    "patch {p}: subcritical, beta = {} <= r + gamma = {} (R0 = {:.6})",
                    params.beta,
                    params.r + params.gamma,
                    params.r0()
                ));
            }
        }
        if let Err(e) = ScaleParams::new(self.scale.eps, self.scale.d) {
            issues.push(format!("scale: {e}"));
        }
        let perturbations = match self.strains.perturbations(np.max(1)) {
            Ok(p) => Some(p),
            Err(e) => {
                issues.push(format!("strains: {e}"));
                None
            }
        };
        let connectivity = match self.connectivity.raw_matrix() {
            Ok(m) => {
                let report = validate_connectivity(&m);
                for failure in report.failures() {
                    issues.push(format!("connectivity: {failure}"));
                }
                if m.nrows() != np {
                    issues.push(format!(
                        "connectivity: {}x{0} matrix for {np} patches",
                        m.nrows()
                    ));
                }
                ConnectivityMatrix::new(m).ok()
            }
            Err(e) => {
                issues.push(format!("connectivity: {e}"));
                None
            }
        };
        if let (Some(pert), Some(conn), true) = (perturbations, connectivity, issues.is_empty()) {
            if let Err(e) = FullModel::new(self.patches.clone(), pert, self.scale, conn) {
                issues.push(format!("model: {e}"));
            }
        }
        if let Some(rows) = &self.initial.frequencies {
            match FrequencyState::from_rows(rows) {
                Ok(z) if z.patches() != np || z.strains() != self.strains.n => issues.push(
                    format!("initial.frequencies must be {np} x {}", self.strains.n),
                ),
                Ok(z) if !z.is_on_simplex(1e-12) => {
                    issues.push("initial.frequencies: a row is not on the simplex".into())
                }
                Ok(_) => {}
                Err(e) => issues.push(format!("initial.frequencies: {e}")),
            }
        }
        let run = &self.run;
        if !(run.t_end > 0.0) || run.samples == 0 || !(run.rel_tol > 0.0 && run.abs_tol > 0.0) {
            issues.push("run: need t_end > 0, samples >= 1 and positive tolerances".into());
        }
        if !(0.0..1.0).contains(&run.tau0_fraction) {
            issues.push("run: tau0_fraction must lie in [0, 1)".into());
        }
        if run.tau_end.is_some_and(|t| !(t > 0.0)) {
            issues.push("run: tau_end must be positive".into());
        }
        issues
    }

    /// Full model; fails on the first invalid part. Supercriticality is not
    /// required here.
    pub fn build_model(&self) -> Result<FullModel> {
        let np = self.patches.len();
        let scale = ScaleParams::new(self.scale.eps, self.scale.d)?;
        FullModel::new(
            self.patches.clone(),
            self.strains.perturbations(np)?,
            scale,
            self.connectivity.build()?,
        )
    }

    pub fn initial_frequencies(&self) -> Result<FrequencyState> {
        let np = self.patches.len();
        let z = match (&self.initial.frequencies, self.initial.seed) {
            (Some(rows), _) => FrequencyState::from_rows(rows)?,
            (None, Some(seed)) => {
                FrequencyState::random(np, self.strains.n, &mut ChaCha8Rng::seed_from_u64(seed))
            }
            (None, None) => FrequencyState::uniform(np, self.strains.n),
        };
        if z.patches() != np || z.strains() != self.strains.n {
            return Err(Error::DimensionMismatch(format!(
                "initial frequencies must be {np} x {}",
                self.strains.n
            )));
        }
        Ok(z)
    }

    /// Initial state of the full system: on the slow manifold over the
    /// initial frequencies, or a seeded random point of Ω₀.
    pub fn initial_full_state(&self, eqs: Option<&[NeutralEquilibrium]>) -> Result<FullState> {
        let np = self.patches.len();
        if self.initial.off_manifold {
            let mut rng = ChaCha8Rng::seed_from_u64(self.initial.seed.unwrap_or(0));
            return Ok(FullState::random_interior(np, self.strains.n, &mut rng));
        }
        let eqs = eqs.ok_or_else(|| {
            Error::InvalidInput("manifold initialization needs supercritical patches".into())
        })?;
        init_on_manifold(&self.initial_frequencies()?, eqs)
    }
}
