//! Reduced spatial replicator system on the product of simplices, in slow
//! time τ = ε t.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::full::FullModel;
use crate::model::{ConnectivityMatrix, FrequencyState};
use crate::ode::{integrate, IntegratorConfig, Monitor, Trajectory};
use crate::reduction::{fitness_matrix, migration_matrix, MigrationMatrix};

pub const SIMPLEX_DEFECT: &str = "simplex_defect";
pub const MIN_FREQUENCY: &str = "min_z";

/// Coefficients of the reduced system: speeds Θ_p, fitness matrices Λ_p,
/// migration matrix 𝓜 and the rescaled migration intensity d.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatorSetup {
    pub theta: Vec<f64>,
    pub lambdas: Vec<DMatrix<f64>>,
    pub migration: MigrationMatrix,
    pub connectivity: ConnectivityMatrix,
    pub d: f64,
}

impl ReplicatorSetup {
    pub fn new(
        theta: Vec<f64>,
        lambdas: Vec<DMatrix<f64>>,
        migration: MigrationMatrix,
        connectivity: ConnectivityMatrix,
        d: f64,
    ) -> Result<Self> {
        let np = theta.len();
        if np == 0
            || lambdas.len() != np
            || migration.patches() != np
            || connectivity.patches() != np
        {
            return Err(Error::DimensionMismatch(
                "speeds, fitness matrices and migration must cover the same patches".into(),
            ));
        }
        let n = lambdas[0].nrows();
        if lambdas.iter().any(|l| l.shape() != (n, n)) {
            return Err(Error::DimensionMismatch(
                "fitness matrices must be NxN".into(),
            ));
        }
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::InvalidInput(format!("d must be >= 0, got {d}")));
        }
        Ok(Self {
            theta,
            lambdas,
            migration,
            connectivity,
            d,
        })
    }

    /// Reduction of a full model (independent of its ε).
    pub fn from_model(model: &FullModel) -> Result<Self> {
        let red = model.reductions()?;
        let lambdas = red
            .iter()
            .zip(model.perturbations().iter())
            .enumerate()
            .map(|(p, (r, dev))| {
                fitness_matrix(&r.equilibrium, dev, &r.speed).map_err(|e| e.in_patch(p))
            })
            .collect::<Result<Vec<_>>>()?;
        let eqs: Vec<_> = red.iter().map(|r| r.equilibrium).collect();
        let oms: Vec<_> = red.iter().map(|r| r.omega).collect();
        let migration = migration_matrix(model.connectivity(), &eqs, &oms)?;
        Self::new(
            red.iter().map(|r| r.speed.theta).collect(),
            lambdas,
            migration,
            model.connectivity().clone(),
            model.scale().d,
        )
    }

    pub fn patches(&self) -> usize {
        self.theta.len()
    }

    pub fn strains(&self) -> usize {
        self.lambdas[0].nrows()
    }

    pub fn max_theta(&self) -> f64 {
        self.theta.iter().copied().fold(0.0, f64::max)
    }

    /// Largest |λ_p^{ij}| over all patches.
    pub fn max_fitness(&self) -> f64 {
        self.lambdas.iter().map(|l| l.amax()).fold(0.0, f64::max)
    }

    /// In-place right-hand side, 𝓜 form.
    pub fn eval(&self, z: &[f64], dz: &mut [f64]) {
        self.reaction(z, dz);
        if self.d != 0.0 {
            let m = &self.migration.entries;
            let (np, n) = (self.patches(), self.strains());
            for p in 0..np {
                for k in 0..np {
                    let w = m[(p, k)];
                    if w == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        dz[p * n + i] += self.d * w * z[k * n + i];
                    }
                }
            }
        }
    }

    /// In-place right-hand side, 𝓓 diffusion plus advection form.
    pub fn eval_advection(&self, z: &[f64], dz: &mut [f64]) {
        self.reaction(z, dz);
        if self.d == 0.0 {
            return;
        }
        let dm = self.connectivity.matrix();
        let nu = &self.migration.advection;
        let (np, n) = (self.patches(), self.strains());
        for p in 0..np {
            for k in 0..np {
                let w = dm[(p, k)];
                for i in 0..n {
                    dz[p * n + i] += self.d * w * z[k * n + i];
                    if k != p {
                        dz[p * n + i] += self.d * w * nu[(p, k)] * (z[k * n + i] - z[p * n + i]);
                    }
                }
            }
        }
    }

    /// Θ_p z_p^i ((Λ_p z_p)_i − z_p·Λ_p z_p) for every patch.
    fn reaction(&self, z: &[f64], dz: &mut [f64]) {
        let n = self.strains();
        for (p, (theta, lambda)) in self.theta.iter().zip(&self.lambdas).enumerate() {
            let zp = &z[p * n..(p + 1) * n];
            let mut payoff = vec![0.0; n];
            let mut mean = 0.0;
            for i in 0..n {
                payoff[i] = (0..n).map(|j| lambda[(i, j)] * zp[j]).sum();
                mean += zp[i] * payoff[i];
            }
            for i in 0..n {
                dz[p * n + i] = theta * zp[i] * (payoff[i] - mean);
            }
        }
    }
}

fn check_shape(z: &FrequencyState, setup: &ReplicatorSetup) -> Result<()> {
    if z.patches() != setup.patches() || z.strains() != setup.strains() {
        return Err(Error::DimensionMismatch(format!(
            "frequencies are {}x{}, system is {}x{}",
            z.patches(),
            z.strains(),
            setup.patches(),
            setup.strains()
        )));
    }
    Ok(())
}

pub fn rhs_replicator(z: &FrequencyState, setup: &ReplicatorSetup) -> Result<FrequencyState> {
    check_shape(z, setup)?;
    let mut dz = vec![0.0; z.as_slice().len()];
    setup.eval(z.as_slice(), &mut dz);
    FrequencyState::from_vec(z.patches(), z.strains(), dz)
}

pub fn rhs_replicator_advection(
    z: &FrequencyState,
    setup: &ReplicatorSetup,
) -> Result<FrequencyState> {
    check_shape(z, setup)?;
    let mut dz = vec![0.0; z.as_slice().len()];
    setup.eval_advection(z.as_slice(), &mut dz);
    FrequencyState::from_vec(z.patches(), z.strains(), dz)
}

/// Aspatial replicator written pairwise:
/// Θ z_i (Σ_{j≠i} λ^{ij} z_j − Σ_{k<j} (λ^{jk} + λ^{kj}) z_j z_k).
pub fn rhs_aspatial(z: &[f64], theta: f64, lambda: &DMatrix<f64>) -> Vec<f64> {
    let n = z.len();
    let mut mean = 0.0;
    for k in 0..n {
        for j in (k + 1)..n {
            mean += (lambda[(j, k)] + lambda[(k, j)]) * z[j] * z[k];
        }
    }
    (0..n)
        .map(|i| {
            let gain: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| lambda[(i, j)] * z[j])
                .sum();
            theta * z[i] * (gain - mean)
        })
        .collect()
}

/// Integrates the reduced system over τ ∈ [0, cfg.t_end], monitoring
/// `simplex_defect` = max_p |Σ_i z_p^i − 1| and `min_z`.
pub fn simulate_replicator(
    setup: &ReplicatorSetup,
    z0: &FrequencyState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    check_shape(z0, setup)?;
    let n = setup.strains();
    let defect = move |z: &[f64]| crate::model::state_simplex_defect(n, z);
    let min_z = |z: &[f64]| z.iter().copied().fold(f64::INFINITY, f64::min);
    let monitors = [
        Monitor::new(SIMPLEX_DEFECT, &defect),
        Monitor::new(MIN_FREQUENCY, &min_z),
    ];
    integrate(|_, z, dz| setup.eval(z, dz), z0.as_slice(), cfg, &monitors)
}
