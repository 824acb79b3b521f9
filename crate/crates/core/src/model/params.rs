use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neutral (strain-independent) epidemiological rates of one patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchParams {
    /// Birth rate, equal to the death rate.
    pub r: f64,
    /// Transmission rate.
    pub beta: f64,
    /// Clearance rate.
    pub gamma: f64,
    /// Coinfection susceptibility factor.
    pub k: f64,
}

impl PatchParams {
    pub fn new(r: f64, beta: f64, gamma: f64, k: f64) -> Result<Self> {
        let params = Self { r, beta, gamma, k };
        params.check_positivity()?;
        Ok(params)
    }

    /// Sign constraints only. Subcritical patches pass; see [`Self::is_supercritical`].
    pub fn check_positivity(&self) -> Result<()> {
        let Self { r, beta, gamma, k } = *self;
        if ![r, beta, gamma, k].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("patch rates must be finite".into()));
        }
        if r <= 0.0 {
            return Err(Error::InvalidInput(format!("r must be > 0, got {r}")));
        }
        if beta <= 0.0 {
            return Err(Error::InvalidInput(format!("beta must be > 0, got {beta}")));
        }
        if gamma < 0.0 {
            return Err(Error::InvalidInput(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        if k < 0.0 {
            return Err(Error::InvalidInput(format!("k must be >= 0, got {k}")));
        }
        Ok(())
    }

    /// Basic reproduction number β / (r + γ).
    pub fn r0(&self) -> f64 {
        self.beta / (self.r + self.gamma)
    }

    pub fn is_supercritical(&self) -> bool {
        self.beta > self.r + self.gamma
    }
}

/// Unscaled trait deviations of the N strains in one patch.
///
/// `b`, `nu` and `c_pair` are relative to the patch baseline (β and γ);
/// `w` and `alpha` are absolute. The ε factor is applied at assembly time so
/// the same deviations can be reused across an ε sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TraitDeviations {
    /// Transmission deviations b^i.
    pub b: Vec<f64>,
    /// Single-infection clearance deviations.
    pub nu: Vec<f64>,
    /// Coinfection clearance deviations c^{ij}.
    pub c_pair: DMatrix<f64>,
    /// Transmission-priority deviations w^{ij} for hosts infected by i then j.
    pub w: DMatrix<f64>,
    /// Coinfection susceptibility deviations α^{ij}.
    pub alpha: DMatrix<f64>,
}

impl TraitDeviations {
    pub fn neutral(strains: usize) -> Self {
        Self {
            b: vec![0.0; strains],
            nu: vec![0.0; strains],
            c_pair: DMatrix::zeros(strains, strains),
            w: DMatrix::zeros(strains, strains),
            alpha: DMatrix::zeros(strains, strains),
        }
    }

    pub fn strains(&self) -> usize {
        self.b.len()
    }

    /// Checks that every array is sized for `strains` and finite.
    pub fn check(&self, strains: usize) -> Result<()> {
        if self.b.len() != strains || self.nu.len() != strains {
            return Err(Error::DimensionMismatch(format!(
                "b/nu have lengths {}/{}, expected {strains}",
                self.b.len(),
                self.nu.len()
            )));
        }
        for (name, m) in [
            ("c_pair", &self.c_pair),
            ("w", &self.w),
            ("alpha", &self.alpha),
        ] {
            if m.shape() != (strains, strains) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {strains}x{strains}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let finite = self.b.iter().chain(&self.nu).all(|v| v.is_finite())
            && [&self.c_pair, &self.w, &self.alpha]
                .iter()
                .all(|m| m.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::InvalidInput(
                "trait deviations must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn is_neutral(&self) -> bool {
        self.b.iter().chain(&self.nu).all(|v| *v == 0.0)
            && [&self.c_pair, &self.w, &self.alpha]
                .iter()
                .all(|m| m.iter().all(|v| *v == 0.0))
    }
}

/// Trait deviations for every patch.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainPerturbations {
    strains: usize,
    patches: Vec<TraitDeviations>,
}

impl StrainPerturbations {
    pub fn new(patches: Vec<TraitDeviations>) -> Result<Self> {
        let strains = patches
            .first()
            .map(TraitDeviations::strains)
            .ok_or_else(|| Error::InvalidInput("at least one patch required".into()))?;
        if strains == 0 {
            return Err(Error::InvalidInput("at least one strain required".into()));
        }
        for (p, dev) in patches.iter().enumerate() {
            dev.check(strains).map_err(|e| e.in_patch(p))?;
        }
        Ok(Self { strains, patches })
    }

    pub fn neutral(patches: usize, strains: usize) -> Self {
        Self {
            strains,
            patches: vec![TraitDeviations::neutral(strains); patches],
        }
    }

    pub fn strains(&self) -> usize {
        self.strains
    }

    pub fn patches(&self) -> usize {
        self.patches.len()
    }

    pub fn patch(&self, p: usize) -> &TraitDeviations {
        &self.patches[p]
    }

    pub fn iter(&self) -> impl Iterator<Item = &TraitDeviations> {
        self.patches.iter()
    }

    pub fn is_neutral(&self) -> bool {
        self.patches.iter().all(TraitDeviations::is_neutral)
    }
}

/// Quasi-neutrality scale ε and rescaled migration intensity d (δ = ε d).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub eps: f64,
    pub d: f64,
}

impl ScaleParams {
    /// `eps = 0` is accepted: it is the fully neutral, disconnected system.
    pub fn new(eps: f64, d: f64) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidInput(format!("eps must be >= 0, got {eps}")));
        }
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::InvalidInput(format!("d must be >= 0, got {d}")));
        }
        Ok(Self { eps, d })
    }

    /// Physical migration rate δ.
    pub fn delta(&self) -> f64 {
        self.eps * self.d
    }
}
