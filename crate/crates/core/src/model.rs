//! Parameter records and unit conventions.
//!
//! Rates are in units of the optomechanical cavity decay rate `kappa` (of
//! cavity 1 in the interferometer), times in units of `1/kappa`.

use std::f64::consts::TAU;

use crate::error::{ensure, Error, Result};
use crate::fock::recommended_dim;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// One optomechanical cavity fed by a single-photon source cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub kappa: f64,
    pub gamma: f64,
    pub g0: f64,
    pub omega_m: f64,
    pub fock_dim: usize,
}

impl ModelParams {
    pub fn new(kappa: f64, gamma: f64, g0: f64, omega_m: f64, fock_dim: usize) -> Result<Self> {
        let p = Self { kappa, gamma, g0, omega_m, fock_dim };
        p.validate()?;
        Ok(p)
    }

    /// `kappa = 1` and a truncation sized for single-photon displacements.
    pub fn with_default_dim(gamma: f64, g0: f64, omega_m: f64) -> Result<Self> {
        Self::with_photons(gamma, g0, omega_m, 1)
    }

    /// `kappa = 1` and a truncation sized for `photons` sequential kicks:
    /// the conditional amplitude can reach `2 * photons * |beta|`.
    pub fn with_photons(gamma: f64, g0: f64, omega_m: f64, photons: u32) -> Result<Self> {
        ensure(omega_m > 0.0 && omega_m.is_finite(), || format!("omega_m must be > 0, got {omega_m}"))?;
        let beta_eff = 2.0 * photons as f64 * g0 / omega_m;
        Self::new(1.0, gamma, g0, omega_m, recommended_dim(beta_eff))
    }

    pub fn with_fock_dim(mut self, fock_dim: usize) -> Result<Self> {
        self.fock_dim = fock_dim;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.kappa, self.gamma, self.g0, self.omega_m].iter().all(|v| v.is_finite());
        ensure(finite, || format!("non-finite parameter in {self:?}"))?;
        ensure(self.kappa > 0.0, || format!("kappa must be > 0, got {}", self.kappa))?;
        ensure(self.gamma > 0.0, || format!("gamma must be > 0, got {}", self.gamma))?;
        ensure(self.omega_m > 0.0, || format!("omega_m must be > 0, got {}", self.omega_m))?;
        ensure(self.g0 >= 0.0, || format!("g0 must be >= 0, got {}", self.g0))?;
        ensure(self.fock_dim >= 1, || "fock_dim must be >= 1".into())
    }

    pub fn derived(&self) -> DerivedParams {
        derive(self)
    }

    /// Polaron displacement `G0/omega_m` used with the standard
    /// `D(alpha) = exp(alpha b_dag - conj(alpha) b)`; equals `-beta`.
    pub fn polaron_shift(&self) -> f64 {
        self.g0 / self.omega_m
    }

    pub fn mech_period(&self) -> f64 {
        TAU / self.omega_m
    }
}

/// Quantities fixed by a [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// `-G0/omega_m`
    pub beta: f64,
    /// Kerr rate `G0^2/omega_m`
    pub chi: f64,
    /// `2 pi / omega_m`
    pub t_mech: f64,
}

pub fn derive(params: &ModelParams) -> DerivedParams {
    let beta = -params.g0 / params.omega_m;
    DerivedParams { beta, chi: params.g0 * beta.abs(), t_mech: TAU / params.omega_m }
}

/// Two cavities in the arms of a balanced Mach-Zehnder interferometer,
/// sharing one source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MZParams {
    pub cavity1: ModelParams,
    pub cavity2: ModelParams,
}

impl MZParams {
    pub fn new(cavity1: ModelParams, cavity2: ModelParams) -> Result<Self> {
        cavity1.validate()?;
        cavity2.validate()?;
        if cavity1.fock_dim != cavity2.fock_dim {
            return Err(Error::DimensionMismatch { left: cavity1.fock_dim, right: cavity2.fock_dim });
        }
        ensure(cavity1.gamma == cavity2.gamma, || {
            format!("arms must share the source rate, got {} and {}", cavity1.gamma, cavity2.gamma)
        })?;
        Ok(Self { cavity1, cavity2 })
    }

    pub fn identical(cavity: ModelParams) -> Result<Self> {
        Self::new(cavity, cavity)
    }

    pub fn gamma(&self) -> f64 {
        self.cavity1.gamma
    }

    pub fn fock_dim(&self) -> usize {
        self.cavity1.fock_dim
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathValidity {
    pub n_bath: f64,
    pub valid: bool,
}

/// Thermal occupancy `k_B T / (hbar omega_m)`; dissipation is negligible over
/// a period when it is well below the quality factor, taken as `< Q/10`.
pub fn bath_validity(q_factor: f64, temp: f64, omega_m_si: f64) -> Result<BathValidity> {
    for (name, v) in [("q_factor", q_factor), ("temp", temp), ("omega_m_si", omega_m_si)] {
        ensure(v > 0.0 && v.is_finite(), || format!("{name} must be > 0, got {v}"))?;
    }
    let n_bath = K_B * temp / (HBAR * omega_m_si);
    Ok(BathValidity { n_bath, valid: n_bath < q_factor / 10.0 })
}
