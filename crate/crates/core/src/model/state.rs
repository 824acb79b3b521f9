use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Full SIDS state: per patch S, I^i and the ordered coinfections D^{ij}.
///
/// Stored flat, one contiguous block of length 1 + N + N² per patch:
/// `[S, I_1..I_N, D_11, D_12, .., D_NN]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    patches: usize,
    strains: usize,
    data: Vec<f64>,
}

impl FullState {
    pub fn block_len(strains: usize) -> usize {
        1 + strains + strains * strains
    }

    pub fn zeros(patches: usize, strains: usize) -> Self {
        Self {
            patches,
            strains,
            data: vec![0.0; patches * Self::block_len(strains)],
        }
    }

    /// Disease-free state: S = 1 everywhere.
    pub fn disease_free(patches: usize, strains: usize) -> Self {
        let mut s = Self::zeros(patches, strains);
        for p in 0..patches {
            *s.s_mut(p) = 1.0;
        }
        s
    }

    pub fn from_vec(patches: usize, strains: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != patches * Self::block_len(strains) {
            return Err(Error::DimensionMismatch(format!(
                "state has {} entries, expected {}",
                data.len(),
                patches * Self::block_len(strains)
            )));
        }
        Ok(Self {
            patches,
            strains,
            data,
        })
    }

    /// A random point of Ω with S < 1: every compartment of every patch is
    /// drawn uniformly on the simplex of its patch.
    pub fn random_interior(patches: usize, strains: usize, rng: &mut ChaCha8Rng) -> Self {
        let block = Self::block_len(strains);
        let mut data = Vec::with_capacity(patches * block);
        for _ in 0..patches {
            data.extend(random_simplex_point(block, rng));
        }
        Self {
            patches,
            strains,
            data,
        }
    }

    pub fn patches(&self) -> usize {
        self.patches
    }

    pub fn strains(&self) -> usize {
        self.strains
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn block(&self, p: usize) -> &[f64] {
        let len = Self::block_len(self.strains);
        &self.data[p * len..(p + 1) * len]
    }

    fn offset(&self, p: usize) -> usize {
        p * Self::block_len(self.strains)
    }

    pub fn s(&self, p: usize) -> f64 {
        self.data[self.offset(p)]
    }

    pub fn i(&self, p: usize, i: usize) -> f64 {
        self.data[self.offset(p) + 1 + i]
    }

    pub fn d(&self, p: usize, i: usize, j: usize) -> f64 {
        self.data[self.offset(p) + 1 + self.strains + i * self.strains + j]
    }

    pub fn s_mut(&mut self, p: usize) -> &mut f64 {
        let o = self.offset(p);
        &mut self.data[o]
    }

    pub fn i_mut(&mut self, p: usize, i: usize) -> &mut f64 {
        let o = self.offset(p) + 1 + i;
        &mut self.data[o]
    }

    pub fn d_mut(&mut self, p: usize, i: usize, j: usize) -> &mut f64 {
        let o = self.offset(p) + 1 + self.strains + i * self.strains + j;
        &mut self.data[o]
    }

    /// Σ_p = S_p + Σ_i I_p^i + Σ_ij D_p^{ij}.
    pub fn patch_mass(&self, p: usize) -> f64 {
        self.block(p).iter().sum()
    }

    /// max_p |Σ_p − 1|.
    pub fn mass_defect(&self) -> f64 {
        mass_defect(self.patches, self.strains, &self.data)
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Membership in Ω up to `tol`: entries in [0,1] and unit mass per patch.
    pub fn is_in_omega(&self, tol: f64) -> bool {
        self.data.iter().all(|v| *v >= -tol && *v <= 1.0 + tol) && self.mass_defect() <= tol
    }
}

/// max_p |Σ_p − 1| over a flat full-state slice.
pub(crate) fn mass_defect(patches: usize, strains: usize, y: &[f64]) -> f64 {
    let block = FullState::block_len(strains);
    (0..patches)
        .map(|p| (y[p * block..(p + 1) * block].iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Strain frequencies z_p^i, one simplex per patch, row-major by patch.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyState {
    patches: usize,
    strains: usize,
    z: Vec<f64>,
}

impl FrequencyState {
    pub fn from_vec(patches: usize, strains: usize, z: Vec<f64>) -> Result<Self> {
        if z.len() != patches * strains || strains == 0 {
            return Err(Error::DimensionMismatch(format!(
                "frequency state has {} entries, expected {patches}x{strains}",
                z.len()
            )));
        }
        Ok(Self {
            patches,
            strains,
            z,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let strains = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != strains) {
            return Err(Error::DimensionMismatch("ragged frequency rows".into()));
        }
        Self::from_vec(rows.len(), strains, rows.concat())
    }

    pub fn uniform(patches: usize, strains: usize) -> Self {
        Self {
            patches,
            strains,
            z: vec![1.0 / strains as f64; patches * strains],
        }
    }

    /// Independent uniform draws on each patch simplex.
    pub fn random(patches: usize, strains: usize, rng: &mut ChaCha8Rng) -> Self {
        let z = (0..patches)
            .flat_map(|_| random_simplex_point(strains, rng))
            .collect();
        Self {
            patches,
            strains,
            z,
        }
    }

    pub fn patches(&self) -> usize {
        self.patches
    }

    pub fn strains(&self) -> usize {
        self.strains
    }

    pub fn get(&self, p: usize, i: usize) -> f64 {
        self.z[p * self.strains + i]
    }

    pub fn patch(&self, p: usize) -> &[f64] {
        &self.z[p * self.strains..(p + 1) * self.strains]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.z
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.z
    }

    /// max_p |Σ_i z_p^i − 1|.
    pub fn simplex_defect(&self) -> f64 {
        simplex_defect(self.strains, &self.z)
    }

    pub fn min_entry(&self) -> f64 {
        self.z.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_on_simplex(&self, tol: f64) -> bool {
        self.z.iter().all(|v| *v >= -tol && *v <= 1.0 + tol) && self.simplex_defect() <= tol
    }

    /// sup-norm distance to another frequency state of the same shape.
    pub fn max_abs_diff(&self, other: &FrequencyState) -> f64 {
        self.z
            .iter()
            .zip(&other.z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn simplex_defect(strains: usize, z: &[f64]) -> f64 {
    z.chunks(strains)
        .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Uniform point on the (n−1)-simplex via normalized exponentials.
fn random_simplex_point(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            -(1.0 - u).ln()
        })
        .collect();
    let total: f64 = x.iter().sum();
    for v in &mut x {
        *v /= total;
    }
    x
}
