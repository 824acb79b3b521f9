//! Closed-form objects of the slow-fast reduction: per-patch neutral
//! equilibria, the 2×2 drift matrix and its left kernel vector, the speed
//! Θ_p with its five trait weights, pairwise fitness matrices Λ_p and the
//! migration matrix 𝓜.

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ConnectivityMatrix, PatchParams, TraitDeviations};

/// Endemic equilibrium of one isolated, fully neutral patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeutralEquilibrium {
    pub s: f64,
    pub i: f64,
    pub d: f64,
    /// Total infected proportion T* = 1 − S* = I* + D*.
    pub t: f64,
}

impl NeutralEquilibrium {
    /// X* = (I*, D*).
    pub fn x(&self) -> Vector2<f64> {
        Vector2::new(self.i, self.d)
    }

    /// 𝓟 = 2 T*² − I* D*, the common denominator of ω* and Θ.
    pub fn denominator(&self) -> f64 {
        2.0 * self.t * self.t - self.i * self.d
    }
}

/// Endemic equilibrium for a supercritical patch (β > r + γ).
pub fn neutral_equilibrium(params: &PatchParams) -> Result<NeutralEquilibrium> {
    params.check_positivity()?;
    if !params.is_supercritical() {
        return Err(Error::SubcriticalPatch { r0: params.r0() });
    }
    let PatchParams { r, beta, gamma, k } = *params;
    let m = r + gamma;
    let s = m / beta;
    let t = 1.0 - s;
    let i = beta * t * s / (m + k * beta * t);
    let d = k * beta * t * i / m;
    Ok(NeutralEquilibrium { s, i, d, t })
}

/// Limit matrix A* of the linear system obeyed by X^i = (I^i, D^i).
pub fn drift_matrix(eq: &NeutralEquilibrium, params: &PatchParams) -> Matrix2<f64> {
    let PatchParams { r, beta, gamma, k } = *params;
    let kb = k * beta;
    Matrix2::new(
        -kb * eq.t,
        beta * eq.s,
        0.5 * kb * (eq.t + eq.i),
        0.5 * kb * eq.i - (r + gamma),
    )
}

/// Positive left eigenvector ω* = (φ, ψ) of A* for eigenvalue 0, normalized
/// so that ω*·X* = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeftEigenvector {
    pub phi: f64,
    pub psi: f64,
}

impl LeftEigenvector {
    pub fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.phi, self.psi)
    }

    /// ω·(I, D)
    pub fn dot(&self, i: f64, d: f64) -> f64 {
        self.phi * i + self.psi * d
    }
}

pub fn left_eigenvector(eq: &NeutralEquilibrium) -> LeftEigenvector {
    let den = eq.denominator();
    LeftEigenvector {
        phi: (eq.t + eq.i) / den,
        psi: 2.0 * eq.t / den,
    }
}

/// Speed Θ_p = Σ_s Θ_{p,s} and weights θ_{p,s} = Θ_{p,s} / Θ_p.
///
/// Order of the five components: transmission, single clearance, coinfection
/// clearance, transmission priority, coinfection susceptibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedWeights {
    pub theta: f64,
    pub components: [f64; 5],
    pub weights: [f64; 5],
}

pub fn speed_and_weights(eq: &NeutralEquilibrium, params: &PatchParams) -> SpeedWeights {
    let PatchParams { r, beta, gamma, .. } = *params;
    let NeutralEquilibrium { i, d, t, .. } = *eq;
    let den = eq.denominator();
    let components = [
        2.0 * (r + gamma) * t * t / den,
        gamma * i * (i + t) / den,
        gamma * t * d / den,
        2.0 * (r + gamma) * t * d / den,
        beta * i * t / den,
    ];
    let theta: f64 = components.iter().sum();
    SpeedWeights {
        theta,
        components,
        weights: components.map(|c| c / theta),
    }
}

/// Pairwise invasion fitness matrix Λ of one patch; λ^{ij} is the
/// advantage of strain i invading a resident j.
pub fn fitness_matrix(
    eq: &NeutralEquilibrium,
    dev: &TraitDeviations,
    weights: &SpeedWeights,
) -> Result<DMatrix<f64>> {
    let n = dev.strains();
    dev.check(n)?;
    let [t1, t2, t3, t4, t5] = weights.weights;
    let (b, nu, c, w, a) = (&dev.b, &dev.nu, &dev.c_pair, &dev.w, &dev.alpha);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        t1 * (b[i] - b[j])
            + t2 * (nu[j] - nu[i])
            + t3 * (2.0 * c[(j, j)] - c[(i, j)] - c[(j, i)])
            + t4 * (w[(i, j)] - w[(j, i)])
            + t5 * (eq.i * (a[(j, i)] - a[(i, j)]) + eq.d * (a[(j, i)] - a[(j, j)]))
    }))
}

/// Speed and fitness matrix of one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessStructure {
    pub speed: SpeedWeights,
    pub lambda: DMatrix<f64>,
}

/// Everything the reduction needs from one isolated patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchReduction {
    pub equilibrium: NeutralEquilibrium,
    pub omega: LeftEigenvector,
    pub speed: SpeedWeights,
}

impl PatchReduction {
    pub fn new(params: &PatchParams) -> Result<Self> {
        let equilibrium = neutral_equilibrium(params)?;
        Ok(Self {
            omega: left_eigenvector(&equilibrium),
            speed: speed_and_weights(&equilibrium, params),
            equilibrium,
        })
    }
}

/// Per-patch reductions; the error names the first subcritical patch.
pub fn reduce_patches(params: &[PatchParams]) -> Result<Vec<PatchReduction>> {
    params
        .iter()
        .enumerate()
        .map(|(p, pp)| PatchReduction::new(pp).map_err(|e| e.in_patch(p)))
        .collect()
}

/// Migration matrix 𝓜 of the reduced system together with the advection
/// coefficients ν_{pk} = ω_p*·(X_k* − X_p*), so that m_{pk} = d_{pk}(1 + ν_{pk}).
#[derive(Debug, Clone, PartialEq)]
pub struct MigrationMatrix {
    pub entries: DMatrix<f64>,
    pub advection: DMatrix<f64>,
}

impl MigrationMatrix {
    pub fn patches(&self) -> usize {
        self.entries.nrows()
    }
}

pub fn migration_matrix(
    connectivity: &ConnectivityMatrix,
    eqs: &[NeutralEquilibrium],
    omegas: &[LeftEigenvector],
) -> Result<MigrationMatrix> {
    let n = connectivity.patches();
    if eqs.len() != n || omegas.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} patches but {} equilibria and {} eigenvectors",
            eqs.len(),
            omegas.len()
        )));
    }
    let mut entries = DMatrix::zeros(n, n);
    let mut advection = DMatrix::zeros(n, n);
    for p in 0..n {
        let self_overlap = omegas[p].dot(eqs[p].i, eqs[p].d);
        for k in (0..n).filter(|&k| k != p) {
            let overlap = omegas[p].dot(eqs[k].i, eqs[k].d);
            entries[(p, k)] = connectivity.get(p, k) * overlap;
            advection[(p, k)] = overlap - self_overlap;
        }
        let off: f64 = (0..n).filter(|&k| k != p).map(|k| entries[(p, k)]).sum();
        entries[(p, p)] = -off;
    }
    Ok(MigrationMatrix { entries, advection })
}
