//! The full co-colonization system: S, I^i and ordered coinfections D^{ij}
//! in every patch, coupled by δ·𝓓 migration acting on each compartment.

use crate::error::{Error, Result};
use crate::model::{
    ConnectivityMatrix, FrequencyState, FullState, PatchParams, ScaleParams, StrainPerturbations,
};
use crate::ode::{integrate, IntegratorConfig, Monitor, Trajectory};
use crate::reduction::{reduce_patches, LeftEigenvector, NeutralEquilibrium, PatchReduction};

pub const MASS_DEFECT: &str = "mass_defect";
pub const MIN_ENTRY: &str = "min_entry";

/// Strain-resolved rates of one patch at a given ε.
#[derive(Debug, Clone, PartialEq)]
struct PatchRates {
    r: f64,
    beta: Vec<f64>,
    gamma_single: Vec<f64>,
    /// N×N row-major, as are the remaining pair arrays.
    gamma_pair: Vec<f64>,
    k_pair: Vec<f64>,
    /// Probability that a host infected by i then j transmits i.
    first_transmits: Vec<f64>,
}

impl PatchRates {
    fn assemble(
        params: &PatchParams,
        dev: &crate::model::TraitDeviations,
        eps: f64,
    ) -> Result<Self> {
        let n = dev.strains();
        let beta: Vec<f64> = dev
            .b
            .iter()
            .map(|b| params.beta * (1.0 + eps * b))
            .collect();
        let gamma_single: Vec<f64> = dev
            .nu
            .iter()
            .map(|c| params.gamma * (1.0 + eps * c))
            .collect();
        let mut gamma_pair = Vec::with_capacity(n * n);
        let mut k_pair = Vec::with_capacity(n * n);
        let mut first_transmits = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                gamma_pair.push(params.gamma * (1.0 + eps * dev.c_pair[(i, j)]));
                k_pair.push(params.k + eps * dev.alpha[(i, j)]);
                first_transmits.push(0.5 + eps * dev.w[(i, j)]);
            }
        }
        if let Some(b) = beta.iter().find(|b| **b <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "strain transmission rate {b} is not positive"
            )));
        }
        if gamma_single.iter().chain(&gamma_pair).any(|g| *g < 0.0) {
            return Err(Error::InvalidInput(
                "a strain clearance rate is negative".into(),
            ));
        }
        if k_pair.iter().any(|k| *k < 0.0) {
            return Err(Error::InvalidInput(
                "a coinfection susceptibility is negative".into(),
            ));
        }
        if first_transmits.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::InvalidInput(
                "a transmission probability 1/2 + eps*w leaves [0, 1]".into(),
            ));
        }
        Ok(Self {
            r: params.r,
            beta,
            gamma_single,
            gamma_pair,
            k_pair,
            first_transmits,
        })
    }
}

/// Full model at a fixed scale (ε, d).
#[derive(Debug, Clone, PartialEq)]
pub struct FullModel {
    patches: Vec<PatchParams>,
    perturbations: StrainPerturbations,
    scale: ScaleParams,
    connectivity: ConnectivityMatrix,
    rates: Vec<PatchRates>,
}

impl FullModel {
    pub fn new(
        patches: Vec<PatchParams>,
        perturbations: StrainPerturbations,
        scale: ScaleParams,
        connectivity: ConnectivityMatrix,
    ) -> Result<Self> {
        let np = patches.len();
        if np == 0 {
            return Err(Error::InvalidInput("at least one patch required".into()));
        }
        if perturbations.patches() != np || connectivity.patches() != np {
            return Err(Error::DimensionMismatch(format!(
                "{np} patches, {} perturbation blocks, {}x{0} connectivity",
                perturbations.patches(),
                connectivity.patches()
            )));
        }
        let rates = patches
            .iter()
            .zip(perturbations.iter())
            .enumerate()
            .map(|(p, (params, dev))| {
                params
                    .check_positivity()
                    .and_then(|_| PatchRates::assemble(params, dev, scale.eps))
                    .map_err(|e| e.in_patch(p))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            patches,
            perturbations,
            scale,
            connectivity,
            rates,
        })
    }

    /// Same traits and connectivity at another scale.
    pub fn with_scale(&self, scale: ScaleParams) -> Result<Self> {
        Self::new(
            self.patches.clone(),
            self.perturbations.clone(),
            scale,
            self.connectivity.clone(),
        )
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        self.with_scale(ScaleParams::new(eps, self.scale.d)?)
    }

    /// Patch `p` in isolation (1×1 zero connectivity).
    pub fn isolated_patch(&self, p: usize) -> Result<Self> {
        Self::new(
            vec![self.patches[p]],
            StrainPerturbations::new(vec![self.perturbations.patch(p).clone()])?,
            self.scale,
            ConnectivityMatrix::isolated(),
        )
    }

    pub fn patches(&self) -> usize {
        self.patches.len()
    }

    pub fn strains(&self) -> usize {
        self.perturbations.strains()
    }

    pub fn params(&self) -> &[PatchParams] {
        &self.patches
    }

    pub fn perturbations(&self) -> &StrainPerturbations {
        &self.perturbations
    }

    pub fn scale(&self) -> ScaleParams {
        self.scale
    }

    pub fn connectivity(&self) -> &ConnectivityMatrix {
        &self.connectivity
    }

    pub fn state_len(&self) -> usize {
        self.patches() * FullState::block_len(self.strains())
    }

    /// Per-patch neutral reductions; fails on any subcritical patch.
    pub fn reductions(&self) -> Result<Vec<PatchReduction>> {
        reduce_patches(&self.patches)
    }

    /// In-place right-hand side over the flat state layout of [`FullState`].
    pub fn eval(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.strains();
        let block = FullState::block_len(n);
        let mut j_force = vec![0.0; n];

        for (p, rates) in self.rates.iter().enumerate() {
            let yb = &y[p * block..(p + 1) * block];
            let s = yb[0];
            let inf = &yb[1..1 + n];
            let co = &yb[1 + n..];
            let q = &rates.first_transmits;

            for i in 0..n {
                let mut ji = inf[i];
                for j in 0..n {
                    ji += q[i * n + j] * co[i * n + j] + (1.0 - q[j * n + i]) * co[j * n + i];
                }
                j_force[i] = ji;
            }

            let db = &mut dy[p * block..(p + 1) * block];
            let r = rates.r;
            let mut ds = r * (1.0 - s);
            for i in 0..n {
                let new_primary = rates.beta[i] * j_force[i] * s;
                ds += rates.gamma_single[i] * inf[i] - new_primary;
                let mut lost = 0.0;
                for j in 0..n {
                    let ij = i * n + j;
                    let flux = rates.k_pair[ij] * rates.beta[j] * inf[i] * j_force[j];
                    lost += flux;
                    db[1 + n + ij] = flux - (r + rates.gamma_pair[ij]) * co[ij];
                    ds += rates.gamma_pair[ij] * co[ij];
                }
                db[1 + i] = new_primary - (r + rates.gamma_single[i]) * inf[i] - lost;
            }
            db[0] = ds;
        }

        let delta = self.scale.delta();
        if delta != 0.0 {
            let np = self.patches();
            let dmat = self.connectivity.matrix();
            for p in 0..np {
                for k in 0..np {
                    let w = dmat[(p, k)];
                    if w == 0.0 {
                        continue;
                    }
                    for c in 0..block {
                        dy[p * block + c] += delta * w * y[k * block + c];
                    }
                }
            }
        }
    }
}

pub fn rhs_full(state: &FullState, model: &FullModel) -> FullState {
    let mut dy = vec![0.0; model.state_len()];
    model.eval(state.as_slice(), &mut dy);
    FullState::from_vec(model.patches(), model.strains(), dy).expect("layout matches model")
}

/// Point of the neutral slow manifold: S = S*, I^i = I* z^i, D^{ij} = D* z^i z^j.
pub fn init_on_manifold(z0: &FrequencyState, eqs: &[NeutralEquilibrium]) -> Result<FullState> {
    if eqs.len() != z0.patches() {
        return Err(Error::DimensionMismatch(format!(
            "{} equilibria for {} patches",
            eqs.len(),
            z0.patches()
        )));
    }
    if !z0.is_on_simplex(1e-12) {
        return Err(Error::InvalidInput(
            "initial frequencies are not on the simplex".into(),
        ));
    }
    let n = z0.strains();
    let mut state = FullState::zeros(z0.patches(), n);
    for (p, eq) in eqs.iter().enumerate() {
        *state.s_mut(p) = eq.s;
        let z = z0.patch(p);
        for i in 0..n {
            *state.i_mut(p, i) = eq.i * z[i];
            for j in 0..n {
                *state.d_mut(p, i, j) = eq.d * z[i] * z[j];
            }
        }
    }
    Ok(state)
}

/// Projected frequencies u_p^i = φ_p I_p^i + ψ_p D_p^i, renormalized per patch,
/// where D_p^i = ½ Σ_j (D_p^{ij} + D_p^{ji}).
pub fn extract_frequencies(
    state: &FullState,
    omegas: &[LeftEigenvector],
) -> Result<FrequencyState> {
    if omegas.len() != state.patches() {
        return Err(Error::DimensionMismatch(format!(
            "{} eigenvectors for {} patches",
            omegas.len(),
            state.patches()
        )));
    }
    let n = state.strains();
    let mut z = Vec::with_capacity(state.patches() * n);
    for (p, w) in omegas.iter().enumerate() {
        let start = z.len();
        for i in 0..n {
            let d_i: f64 = (0..n)
                .map(|j| state.d(p, i, j) + state.d(p, j, i))
                .sum::<f64>()
                * 0.5;
            z.push(w.dot(state.i(p, i), d_i));
        }
        let total: f64 = z[start..].iter().sum();
        if !(total >= 1e-300) {
            return Err(Error::ExtinctPatch { patch: p });
        }
        for v in &mut z[start..] {
            *v /= total;
        }
    }
    FrequencyState::from_vec(state.patches(), n, z)
}

/// Integrates the full system, monitoring `mass_defect` = max_p |Σ_p − 1| and
/// `min_entry`.
pub fn simulate_full(
    model: &FullModel,
    y0: &FullState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if y0.patches() != model.patches() || y0.strains() != model.strains() {
        return Err(Error::DimensionMismatch(
            "initial state does not match the model".into(),
        ));
    }
    let (np, n) = (model.patches(), model.strains());
    let mass = move |y: &[f64]| crate::model::state_mass_defect(np, n, y);
    let min_entry = |y: &[f64]| y.iter().copied().fold(f64::INFINITY, f64::min);
    let monitors = [
        Monitor::new(MASS_DEFECT, &mass),
        Monitor::new(MIN_ENTRY, &min_entry),
    ];
    integrate(|_, y, dy| model.eval(y, dy), y0.as_slice(), cfg, &monitors)
}
