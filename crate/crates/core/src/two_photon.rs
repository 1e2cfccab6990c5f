//! Second-photon count rate after a first count at `t1`.
//!
//! The first photon is counted at `t1`, the mechanics then evolves freely for
//! `t_d`, a second photon is released into the source and counted after a
//! further `tau`, at `t2 = t1 + t_d + tau`. Each photon is either reflected
//! (R) or transmitted (T), giving four branches
//!
//! ```text
//! RR = e^{-gamma (t1 + tau)/2} |0>
//! RT = e^{-gamma tau/2} U(t_d + tau) K(t1) |0>
//! TR = e^{-gamma t1/2} K(tau) U(t1 + t_d) |0>
//! TT = K(tau) U(t_d) K(t1) |0>
//! ```
//!
//! with `U(s) = exp(-i omega_m b_dag b s)` and `K` the single-cavity
//! propagator over the elapsed time since release. The doubly conditioned
//! state is `kappa TT + gamma RR + sqrt(kappa gamma)(RT + TR)`.

use rayon::prelude::*;

use nalgebra::DMatrix;

use crate::error::{ensure, Error, Result};
use crate::fock::{dotc, FockVector, ModeOperator, C64};
use crate::model::ModelParams;
use crate::single::SingleCavity;

#[derive(Debug, Clone, PartialEq)]
pub struct HistorySet {
    pub rr: FockVector,
    pub rt: FockVector,
    pub tr: FockVector,
    pub tt: FockVector,
    pub t1: f64,
    pub t_d: f64,
    pub tau: f64,
}

impl HistorySet {
    /// `kappa TT + gamma RR + sqrt(kappa gamma)(RT + TR)`.
    pub fn conditional_state(&self, params: &ModelParams) -> FockVector {
        let (k, g) = (params.kappa, params.gamma);
        let mix = C64::new((k * g).sqrt(), 0.0);
        let mut out = self.tt.scaled(C64::new(k, 0.0));
        out.add_scaled(C64::new(g, 0.0), &self.rr);
        out.add_scaled(mix, &self.rt);
        out.add_scaled(mix, &self.tr);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate2Sample {
    pub t1: f64,
    pub t_d: f64,
    pub tau: f64,
    pub total: f64,
    pub reflected: f64,
    pub transmitted: f64,
    pub interference: f64,
}

/// Rates over `tau` (rows) by `t_d` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct RateGrid {
    pub t1: f64,
    pub tau_axis: Vec<f64>,
    pub td_axis: Vec<f64>,
    pub total: DMatrix<f64>,
    pub reflected: DMatrix<f64>,
    pub transmitted: DMatrix<f64>,
    pub interference: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouterContrast {
    /// Transmitted part at `t_d = T_m/4`.
    pub suppressed: f64,
    /// Transmitted part at `t_d = T_m/2`.
    pub resonant: f64,
    pub contrast: f64,
}

#[derive(Debug, Clone)]
pub struct TwoPhoton {
    cavity: SingleCavity,
}

fn check_times(t1: f64, t_d: f64, tau: f64) -> Result<()> {
    for (name, v) in [("t1", t1), ("t_d", t_d), ("tau", tau)] {
        ensure(v >= 0.0 && v.is_finite(), || format!("{name} must be >= 0, got {v}"))?;
    }
    Ok(())
}

impl TwoPhoton {
    pub fn new(params: ModelParams) -> Result<Self> {
        Ok(Self { cavity: SingleCavity::new(params)? })
    }

    pub fn params(&self) -> &ModelParams {
        self.cavity.params()
    }

    pub fn cavity(&self) -> &SingleCavity {
        &self.cavity
    }

    fn branches(&self, first: &FockVector, k_tau: &ModeOperator, t1: f64, t_d: f64, tau: f64) -> HistorySet {
        let p = self.params();
        let dim = p.fock_dim;
        let decay = |s: f64| C64::new((-0.5 * p.gamma * s).exp(), 0.0);
        let vac = FockVector::vacuum(dim);
        HistorySet {
            rr: vac.scaled(decay(t1 + tau)),
            rt: first.free_evolved(p.omega_m, t_d + tau).scaled(decay(tau)),
            tr: k_tau.apply(&vac.free_evolved(p.omega_m, t1 + t_d)).scaled(decay(t1)),
            tt: k_tau.apply(&first.free_evolved(p.omega_m, t_d)),
            t1,
            t_d,
            tau,
        }
    }

    pub fn histories(&self, t1: f64, t_d: f64, tau: f64) -> Result<HistorySet> {
        check_times(t1, t_d, tau)?;
        let first = self.cavity.propagator_k(t1, 0.0)?.apply(&FockVector::vacuum(self.params().fock_dim));
        let k_tau = self.cavity.propagator_k(t1 + t_d + tau, t1 + t_d)?;
        Ok(self.branches(&first, &k_tau, t1, t_d, tau))
    }

    fn decompose(&self, h: &HistorySet, scale: f64) -> Rate2Sample {
        let p = self.params();
        let (k, g) = (p.kappa, p.gamma);
        let m = (k * g).sqrt();
        let n = |x: &FockVector| x.norm_sqr();
        let x2 = |a: &FockVector, b: &FockVector| 2.0 * dotc(a, b).re;
        let reflected = g * g * n(&h.rr);
        let transmitted = k * k * n(&h.tt) + k * g * (n(&h.rt) + n(&h.tr));
        let interference = k * g * (x2(&h.tt, &h.rr) + x2(&h.rt, &h.tr))
            + k * m * (x2(&h.tt, &h.rt) + x2(&h.tt, &h.tr))
            + g * m * (x2(&h.rr, &h.rt) + x2(&h.rr, &h.tr));
        Rate2Sample {
            t1: h.t1,
            t_d: h.t_d,
            tau: h.tau,
            total: (reflected + transmitted + interference) * scale,
            reflected: reflected * scale,
            transmitted: transmitted * scale,
            interference: interference * scale,
        }
    }

    fn scale(&self, t1: f64, normalize: bool) -> Result<f64> {
        if !normalize {
            return Ok(1.0);
        }
        let r1 = self.cavity.count_rate_1(t1).total;
        if !(r1 >= 1e-300) {
            return Err(Error::DegenerateConditioning { rate: r1 });
        }
        Ok(1.0 / r1)
    }

    /// Second-photon rate; with `normalize` it is divided by `R1(t1)`.
    pub fn rate_2(&self, t1: f64, t_d: f64, tau: f64, normalize: bool) -> Result<Rate2Sample> {
        let h = self.histories(t1, t_d, tau)?;
        Ok(self.decompose(&h, self.scale(t1, normalize)?))
    }

    pub fn rate_2_grid(&self, t1: f64, tau_axis: &[f64], td_axis: &[f64], normalize: bool) -> Result<RateGrid> {
        ensure(!tau_axis.is_empty() && !td_axis.is_empty(), || "grid axes must be nonempty".into())?;
        for axis in [tau_axis, td_axis] {
            ensure(axis.windows(2).all(|w| w[1] > w[0]), || "grid axes must be increasing".into())?;
            check_times(axis[0], axis[0], axis[0])?;
        }
        check_times(t1, 0.0, 0.0)?;
        let scale = self.scale(t1, normalize)?;
        let first = self.cavity.phi1(t1);
        let rows: Vec<Vec<Rate2Sample>> = tau_axis
            .par_iter()
            .map(|&tau| {
                let k_tau = self.cavity.propagator_over(tau);
                td_axis.iter().map(|&t_d| self.decompose(&self.branches(&first, &k_tau, t1, t_d, tau), scale)).collect()
            })
            .collect();
        let pick = |f: fn(&Rate2Sample) -> f64| DMatrix::from_fn(tau_axis.len(), td_axis.len(), |i, j| f(&rows[i][j]));
        Ok(RateGrid {
            t1,
            tau_axis: tau_axis.to_vec(),
            td_axis: td_axis.to_vec(),
            total: pick(|s| s.total),
            reflected: pick(|s| s.reflected),
            transmitted: pick(|s| s.transmitted),
            interference: pick(|s| s.interference),
        })
    }

    /// Transmitted part at a quarter versus half mechanical period of delay.
    pub fn router_contrast(&self, t1: f64, tau: f64) -> Result<RouterContrast> {
        let tm = self.params().mech_period();
        let suppressed = self.rate_2(t1, 0.25 * tm, tau, false)?.transmitted;
        let resonant = self.rate_2(t1, 0.5 * tm, tau, false)?.transmitted;
        if !(suppressed >= 1e-300) {
            return Err(Error::DegenerateConditioning { rate: suppressed });
        }
        Ok(RouterContrast { suppressed, resonant, contrast: resonant / suppressed })
    }
}

/// Biased, mean-removed autocorrelation normalized to 1 at lag 0, for lags `0..len/2`.
pub fn autocorrelation(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let r0: f64 = dev.iter().map(|v| v * v).sum();
    (0..=n / 2)
        .map(|lag| {
            if r0 == 0.0 {
                return if lag == 0 { 1.0 } else { 0.0 };
            }
            dev[..n - lag].iter().zip(&dev[lag..]).map(|(a, b)| a * b).sum::<f64>() / r0
        })
        .collect()
}

/// Lag index of the highest autocorrelation peak after the first negative value.
pub fn dominant_lag(series: &[f64]) -> Option<usize> {
    let ac = autocorrelation(series);
    let start = ac.iter().position(|&v| v < 0.0)?;
    (start..ac.len()).max_by(|&a, &b| ac[a].total_cmp(&ac[b]))
}
