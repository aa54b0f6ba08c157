//! Chain parameterization and Gaussian impurity profiles.
//!
//! A chain of `n_sites` spins carries three impurity profiles centred at
//! `(N+1)/2`: on the exchange couplings (height `zeta`), on the transverse
//! field (height `xi`) and on the DM strength (height `kappa`). All three
//! share the width `epsilon`.
//!
//! Sites and bonds are 1-based in the public API, matching the usual
//! physics labelling; bond `i` couples sites `i` and `i+1` (bond `N` closes
//! the ring for the periodic boundary). Arrays are stored 0-based.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Functional form of the impurity amplitude as a function of site index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileShape {
    /// `height * exp(-eps * (i - c))`, the literal printed expression.
    ExponentialAsPrinted,
    /// `height * exp(-eps * (i - c)^2)`, symmetric about the centre.
    #[default]
    GaussianSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Open,
    /// Ring closed in the fermion picture without the parity-dependent
    /// boundary term.
    PeriodicCCyclic,
}

/// One chain instance.
///
/// The reduced coupling is `lambda = j_base / h_base`; it is never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub n_sites: usize,
    pub gamma: f64,
    pub j_base: f64,
    pub h_base: f64,
    /// DM strength in units of `|j_base|`.
    pub d_rel: f64,
    pub zeta: f64,
    pub xi: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub profile_shape: ProfileShape,
    pub boundary: Boundary,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_sites: 99,
            gamma: 1.0,
            j_base: 1.0,
            h_base: 1.0,
            d_rel: 0.0,
            zeta: 0.0,
            xi: 0.0,
            kappa: 0.0,
            epsilon: 0.1,
            profile_shape: ProfileShape::GaussianSquared,
            boundary: Boundary::Open,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidConfig(format!("n_sites = {} < 2", self.n_sites)));
        }
        let finite = [self.gamma, self.j_base, self.h_base, self.d_rel, self.zeta, self.xi, self.kappa, self.epsilon];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        if !(self.h_base > 0.0) {
            return Err(Error::InvalidConfig(format!("h_base = {} must be > 0", self.h_base)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon = {} must be > 0", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("gamma = {} outside [0, 1]", self.gamma)));
        }
        Ok(())
    }

    /// Reduced coupling `J / h`; the pure chain is critical at 1.
    pub fn lambda(&self) -> f64 {
        self.j_base / self.h_base
    }

    /// Copy of `self` with `j_base` chosen so that `lambda()` equals `lambda`.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { j_base: lambda * self.h_base, ..self.clone() }
    }

    /// Absolute DM strength `D = d_rel * |J|`.
    pub fn dm_strength(&self) -> f64 {
        self.d_rel * self.j_base.abs()
    }

    /// Site pair used for the concurrence when none is given: `(49, 50)`
    /// for `N = 99`.
    pub fn default_pair(&self) -> (usize, usize) {
        let l = (self.n_sites / 2).max(1);
        (l, l + 1)
    }
}

/// Per-site and per-bond couplings with the impurity profiles applied.
///
/// Entry `k` of `j_bond`/`d_bond` is bond `k+1`; for an open chain the last
/// entry is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteCouplings {
    pub j_bond: Vec<f64>,
    pub h_site: Vec<f64>,
    /// Effective real DM magnitude `D (1 + eta)` per bond.
    pub d_bond: Vec<f64>,
}

impl SiteCouplings {
    pub fn n_sites(&self) -> usize {
        self.h_site.len()
    }
}

/// Impurity amplitude at `site` (1-based) for a profile centred at `(N+1)/2`.
pub fn gaussian_profile(height: f64, epsilon: f64, n_sites: usize, site: usize, shape: ProfileShape) -> Result<f64> {
    if site < 1 || site > n_sites {
        return Err(Error::Domain(format!("site {site} outside 1..={n_sites}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must be > 0")));
    }
    if height == 0.0 {
        return Ok(0.0);
    }
    let offset = site as f64 - (n_sites as f64 + 1.0) / 2.0;
    let exponent = match shape {
        ProfileShape::ExponentialAsPrinted => -epsilon * offset,
        ProfileShape::GaussianSquared => -epsilon * offset * offset,
    };
    Ok(height * libm::exp(exponent))
}

pub fn build_couplings(config: &ChainConfig) -> Result<SiteCouplings> {
    config.validate()?;
    let n = config.n_sites;
    let d = config.dm_strength();
    let profile = |height: f64, index: usize| gaussian_profile(height, config.epsilon, n, index, config.profile_shape);

    let mut j_bond = Vec::with_capacity(n);
    let mut h_site = Vec::with_capacity(n);
    let mut d_bond = Vec::with_capacity(n);
    for i in 1..=n {
        h_site.push(config.h_base * (1.0 + profile(config.xi, i)?));
        if i == n && config.boundary == Boundary::Open {
            j_bond.push(0.0);
            d_bond.push(0.0);
        } else {
            j_bond.push(config.j_base * (1.0 + profile(config.zeta, i)?));
            d_bond.push(d * (1.0 + profile(config.kappa, i)?));
        }
    }
    Ok(SiteCouplings { j_bond, h_site, d_bond })
}
