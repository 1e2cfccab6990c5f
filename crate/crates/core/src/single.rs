//! Closed-form single-photon conditional dynamics of one optomechanical cavity.
//!
//! With the mechanics starting in its ground state, the amplitude for "photon
//! inside the cavity, no count yet" is
//!
//! ```text
//! phi1(t) = c * D_dag(p) R(t) D(p) |0>,   p = G0/omega_m,
//! R(t)    = sum_n r_n(t) |n><n|,
//! r_n(t)  = (e^{-gamma t/2} - e^{-(i omega_m n - i chi + kappa/2) t})
//!           / (i omega_m n - i chi + (kappa - gamma)/2),
//! ```
//!
//! and the source amplitude is `e^{-gamma t/2} |0>`. The scalar `c` is the
//! cascaded source-to-cavity amplitude. Eliminating the cascade Hamiltonian
//! against the cross term of `J_dag J` leaves a one-way drive `-sqrt(kappa
//! gamma) a_dag c`, so `c = -sqrt(kappa gamma)`; [`crate::oracle`] fits the same
//! constant numerically and the two are checked against each other.

use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::fock::{displacement_matrix, dotc, lowering_element, FockVector, ModeOperator, C64};
use crate::model::{DerivedParams, ModelParams};
use crate::quad::adaptive_simpson;

/// Below this `|denominator|` the removable-singularity limit is used.
pub const SINGULAR_THRESHOLD: f64 = 1e-9;

/// One sample of the single-photon count rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub t: f64,
    pub total: f64,
    pub reflected: f64,
    pub transmitted: f64,
    pub interference: f64,
}

/// Unnormalized no-count state: `|1>|phi1> + |2> phi2_scale |0>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalState1 {
    pub phi1: FockVector,
    pub phi2_scale: C64,
    pub t: f64,
}

/// Accumulated detection probability `int_0^inf R1 dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionProbability {
    pub integral: f64,
    pub tail_bound: f64,
    pub upper_limit: f64,
}

/// `e^{-a dt} (1 - e^{-mu dt}) / mu`, i.e. `(e^{-a dt} - e^{-(a+mu) dt}) / mu`,
/// switching to `dt e^{-a dt}` when `|mu|` is below [`SINGULAR_THRESHOLD`].
pub(crate) fn exp_difference_quotient(a: C64, mu: C64, dt: f64) -> C64 {
    let lead = (-a * dt).exp();
    if mu.norm() < SINGULAR_THRESHOLD {
        return lead * dt;
    }
    -lead * expm1(-mu * dt) / mu
}

/// `e^z - 1` without cancellation for small `|z|`.
fn expm1(z: C64) -> C64 {
    let (x, y) = (z.re, z.im);
    let half = (0.5 * y).sin();
    C64::new(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin())
}

/// `r_n(t)` for Fock level `n`.
pub fn r_coefficient(n: usize, t: f64, dp: &DerivedParams, params: &ModelParams) -> C64 {
    let mu = C64::new(0.5 * (params.kappa - params.gamma), params.omega_m * n as f64 - dp.chi);
    exp_difference_quotient(C64::new(0.5 * params.gamma, 0.0), mu, t)
}

/// Diagonal operator `R(t)` on `dim` levels.
pub fn rhat_operator(t: f64, dp: &DerivedParams, params: &ModelParams, dim: usize) -> ModeOperator {
    let diag: Vec<C64> = (0..dim).map(|n| r_coefficient(n, t, dp, params)).collect();
    ModeOperator::diagonal(&diag)
}

/// Analytic single-cavity model with its displacement matrices cached.
#[derive(Debug, Clone)]
pub struct SingleCavity {
    params: ModelParams,
    derived: DerivedParams,
    prefactor: C64,
    disp: ModeOperator,
    disp_adj: ModeOperator,
    displaced_vacuum: FockVector,
}

impl SingleCavity {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let dim = params.fock_dim;
        let disp = displacement_matrix(C64::new(params.polaron_shift(), 0.0), dim)?;
        let displaced_vacuum = FockVector::new(disp.matrix().column(0).into_owned())?;
        Ok(Self {
            derived: params.derived(),
            prefactor: Self::cascade_prefactor(&params),
            disp_adj: disp.adjoint(),
            disp,
            displaced_vacuum,
            params,
        })
    }

    /// Source-to-cavity amplitude of the one-way cascade, `-sqrt(kappa gamma)`.
    pub fn cascade_prefactor(params: &ModelParams) -> C64 {
        C64::new(-(params.kappa * params.gamma).sqrt(), 0.0)
    }

    /// Replace the cascade prefactor, e.g. with a value fitted against the oracle.
    pub fn with_prefactor(mut self, prefactor: C64) -> Self {
        self.prefactor = prefactor;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn derived(&self) -> &DerivedParams {
        &self.derived
    }

    pub fn prefactor(&self) -> C64 {
        self.prefactor
    }

    pub fn dim(&self) -> usize {
        self.params.fock_dim
    }

    /// `D(G0/omega_m)` on the truncated space.
    pub fn displacement(&self) -> &ModeOperator {
        &self.disp
    }

    pub fn r_coefficient(&self, n: usize, t: f64) -> C64 {
        r_coefficient(n, t, &self.derived, &self.params)
    }

    pub fn rhat_operator(&self, t: f64) -> ModeOperator {
        rhat_operator(t, &self.derived, &self.params, self.dim())
    }

    /// `D_dag(p) R(t) D(p) |0>` without the cascade prefactor.
    pub fn displaced_branch(&self, t: f64) -> FockVector {
        let amps = self.displaced_vacuum.amps().iter().enumerate().map(|(n, z)| z * self.r_coefficient(n, t)).collect();
        let inner = FockVector::from_vec(amps).expect("dim >= 1");
        self.disp_adj.apply(&inner)
    }

    pub fn phi1(&self, t: f64) -> FockVector {
        self.displaced_branch(t).scaled(self.prefactor)
    }

    /// No-count state at `t` for a photon released at `t = 0` onto ground-state mechanics.
    pub fn conditional_state_no_jump(&self, t: f64) -> ConditionalState1 {
        ConditionalState1 { phi1: self.phi1(t), phi2_scale: C64::new((-0.5 * self.params.gamma * t).exp(), 0.0), t }
    }

    /// Propagator taking a mechanical state at source release `t_i` to the
    /// photon-in-cavity amplitude at `t_f`. Time-translation invariant, so only
    /// `t_f - t_i` enters.
    pub fn propagator_k(&self, t_f: f64, t_i: f64) -> Result<ModeOperator> {
        ensure(t_i >= 0.0 && t_f >= t_i, || format!("propagator needs t_f >= t_i >= 0, got t_f = {t_f}, t_i = {t_i}"))?;
        Ok(self.propagator_over(t_f - t_i))
    }

    /// `K` for an elapsed time `dt >= 0` since source release.
    pub fn propagator_over(&self, dt: f64) -> ModeOperator {
        let dim = self.dim();
        let p = &self.params;
        let d = self.disp.matrix();
        let base_re = 0.5 * (p.kappa - p.gamma);
        let mut w = d.clone();
        for n in 0..dim {
            let a = C64::new(0.5 * p.gamma, p.omega_m * n as f64);
            for m in 0..dim {
                let mu = C64::new(base_re, p.omega_m * (m as f64 - n as f64) - self.derived.chi);
                w[(m, n)] *= exp_difference_quotient(a, mu, dt);
            }
        }
        let k = self.disp_adj.matrix() * w * self.prefactor;
        ModeOperator::new(k).expect("square")
    }

    /// Jump-updated mechanical state `sqrt(kappa) phi1 + sqrt(gamma) e^{-gamma t/2} |0>`.
    pub fn jump_state(&self, t: f64) -> FockVector {
        let p = &self.params;
        let mut out = self.phi1(t).scaled(C64::new(p.kappa.sqrt(), 0.0));
        out.amps_mut()[0] += C64::new(p.gamma.sqrt() * (-0.5 * p.gamma * t).exp(), 0.0);
        out
    }

    pub fn count_rate_1(&self, t: f64) -> RateSample {
        let p = &self.params;
        let phi1 = self.phi1(t);
        let reflected = p.gamma * (-p.gamma * t).exp();
        let transmitted = p.kappa * phi1.norm_sqr();
        let interference = (p.kappa * p.gamma).sqrt() * (-0.5 * p.gamma * t).exp() * 2.0 * phi1.get(0).re;
        RateSample { t, total: reflected + transmitted + interference, reflected, transmitted, interference }
    }

    pub fn rate_series(&self, ts: &[f64]) -> Vec<RateSample> {
        ts.par_iter().map(|&t| self.count_rate_1(t)).collect()
    }

    /// Mean intracavity photon number before the count, `<phi1|phi1>`.
    pub fn mean_photon_number(&self, t: f64) -> f64 {
        self.phi1(t).norm_sqr()
    }

    /// `<b>` in the state conditioned on a count at `t`.
    ///
    /// Evaluated on the full jump-updated state, so the reflected branch and
    /// its cross term with the transmitted branch are included.
    pub fn conditional_mean_b(&self, t: f64) -> Result<C64> {
        let state = self.jump_state(t);
        let rate = state.norm_sqr();
        if !(rate >= 1e-300) {
            return Err(Error::DegenerateConditioning { rate });
        }
        Ok(lowering_element(&state, &state) / rate)
    }

    /// Conditional momentum `-i<b - b_dag> = 2 Im<b>`.
    pub fn conditional_momentum(&self, t: f64) -> Result<f64> {
        Ok(2.0 * self.conditional_mean_b(t)?.im)
    }

    /// `int_0^inf R1 dt`: adaptive Simpson up to `60/kappa` (extended while the
    /// analytic tail bound exceeds `1e-8`) plus that bound.
    pub fn detection_probability(&self, tol: f64) -> DetectionProbability {
        let p = &self.params;
        let mut upper = 60.0 / p.kappa;
        let mut tail = tail_bound(p, upper);
        while tail >= 1e-8 {
            upper += 20.0 / p.kappa;
            tail = tail_bound(p, upper);
        }
        // Split at the source time scale so the early structure gets its own panels.
        let knots = [0.0, 2.0 / p.gamma.max(p.kappa), 10.0 / p.kappa.min(p.gamma), upper];
        let integral: f64 = knots
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| adaptive_simpson(|t| self.count_rate_1(t).total, w[0], w[1], tol, 40))
            .sum();
        DetectionProbability { integral, tail_bound: tail, upper_limit: upper }
    }

    /// `<u|v>` helper exposed for cross-module overlap checks.
    pub fn overlap(u: &FockVector, v: &FockVector) -> C64 {
        dotc(u, v)
    }
}

/// Upper bound on `int_T^inf R1 dt`, from `||phi1|| <= sqrt(kappa gamma) t e^{-m t/2}`
/// with `m = min(kappa, gamma)`.
fn tail_bound(p: &ModelParams, t: f64) -> f64 {
    let m = p.kappa.min(p.gamma);
    let poly = t * t / m + 2.0 * t / (m * m) + 2.0 / (m * m * m);
    2.0 * (-p.gamma * t).exp() + 2.0 * p.kappa * p.kappa * p.gamma * (-m * t).exp() * poly
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_kick() -> SingleCavity {
        SingleCavity::new(ModelParams::new(1.0, 2.0, 0.02, 0.02, 40).unwrap()).unwrap()
    }

    #[test]
    fn r_coefficient_vanishes_at_zero_time() {
        let s = unit_kick();
        for n in [0, 1, 7, 39] {
            assert_eq!(s.r_coefficient(n, 0.0), C64::new(0.0, 0.0));
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn r_coefficient_matches_high_precision_value() {
        // 40-digit evaluation of the defining quotient.
        let s = unit_kick();
        let want0 = C64::new(0.477_266_590_720_542_35, 0.005_168_945_376_939_069_7);
        let want3 = C64::new(0.477_159_060_584_716_55, -0.010_336_789_644_599_04);
        assert!((s.r_coefficient(0, 1.0) - want0).norm() < 1e-15);
        assert!((s.r_coefficient(3, 1.0) - want3).norm() < 1e-15);
    }

    #[test]
    fn r_coefficient_limit_branch() {
        let params = ModelParams::new(1.0, 1.0, 0.0, 0.3, 8).unwrap();
        let dp = params.derived();
        for t in [0.5f64, 2.0, 7.0] {
            let want = t * (-0.5 * t).exp();
            assert!((r_coefficient(0, t, &dp, &params) - want).norm() < 1e-15);
        }
        // Just above the switch point the quotient form still agrees.
        let tiny = C64::new(1e-10, 0.0);
        let v = exp_difference_quotient(C64::new(0.5, 0.0), tiny, 3.0);
        assert!((v - 3.0 * (-1.5f64).exp()).norm() < 1e-6);
        let v = exp_difference_quotient(C64::new(0.5, 0.0), C64::new(0.0, 2e-9), 3.0);
        assert!((v - 3.0 * (-1.5f64).exp()).norm() < 1e-6);
    }

    #[test]
    fn rhat_properties() {
        let s = unit_kick();
        assert_eq!(s.rhat_operator(0.0), ModeOperator::zeros(40));
        let late = s.rhat_operator(50.0);
        assert!(late.matrix().iter().all(|z| z.norm() < 1e-8));

        // G0 = 0: entries differ only through i omega_m n.
        let params = ModelParams::new(1.0, 2.0, 0.0, 0.2, 6).unwrap();
        let dp = params.derived();
        let r = rhat_operator(1.3, &dp, &params, 6);
        for n in 0..6 {
            let lam = C64::new(-0.5, 0.2 * n as f64);
            let want = ((-1.3f64).exp() - (-(C64::new(0.5, 0.2 * n as f64)) * 1.3).exp()) / lam;
            assert!((r.matrix()[(n, n)] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn initial_state_has_photon_in_source() {
        let st = unit_kick().conditional_state_no_jump(0.0);
        assert!(st.phi1.norm() == 0.0);
        assert_eq!(st.phi2_scale, C64::new(1.0, 0.0));
    }

    #[test]
    fn uncoupled_branch_stays_in_vacuum() {
        let s = SingleCavity::new(ModelParams::new(1.0, 2.0, 0.0, 0.02, 16).unwrap()).unwrap();
        for t in [0.3, 1.0, 4.0] {
            let phi = s.phi1(t);
            let off: f64 = (1..16).map(|n| phi.get(n).norm()).sum();
            assert!(off < 1e-15 && phi.get(0).norm() > 0.0);
        }
    }

    #[test]
    fn propagator_basic_properties() {
        let s = unit_kick();
        assert!(s.propagator_k(2.0, 2.0).unwrap().matrix().iter().all(|z| z.norm() == 0.0));
        assert!(s.propagator_k(1.0, 2.0).is_err());
        for t in [0.5, 2.0, 9.0] {
            let k = s.propagator_k(t, 0.0).unwrap();
            let via_k = k.apply(&FockVector::vacuum(40));
            assert!(via_k.max_abs_diff(&s.phi1(t)) < 1e-10);
            // Only elapsed time matters.
            let shifted = s.propagator_k(t + 3.0, 3.0).unwrap();
            assert!(shifted.max_abs_diff_block(&k, 40) < 1e-14);
        }
    }

    #[test]
    fn rate_at_zero_is_pure_reflection() {
        let r = unit_kick().count_rate_1(0.0);
        assert_eq!(r.total, 2.0);
        assert_eq!(r.transmitted, 0.0);
        assert_eq!(r.interference, 0.0);
    }

    #[test]
    fn rate_decomposition_closes() {
        let s = unit_kick();
        for t in [0.1, 0.8, 3.0, 17.0] {
            let r = s.count_rate_1(t);
            let sum = r.reflected + r.transmitted + r.interference;
            assert!((r.total - sum).abs() <= 1e-12 * r.total.abs().max(1e-300));
            assert!(r.total >= 0.0 && r.reflected >= 0.0 && r.transmitted >= 0.0);
            assert_eq!(s.mean_photon_number(t), r.transmitted / s.params().kappa);
        }
    }

    #[test]
    fn rate_matches_coherent_state_sums() {
        // R1 = kappa<beta|R^dag R|beta> + gamma e^{-gamma t} + sqrt(kappa gamma) e^{-gamma t/2} 2Re(c<beta|R|beta>)
        let s = unit_kick();
        let p = *s.params();
        let shift = p.polaron_shift();
        let c2 = s.prefactor().norm_sqr();
        for t in [0.4, 2.0, 11.0] {
            let (mut diag, mut cross) = (0.0, C64::new(0.0, 0.0));
            let mut poisson = (-shift * shift).exp();
            for n in 0..40 {
                if n > 0 {
                    poisson *= shift * shift / n as f64;
                }
                let r = s.r_coefficient(n, t);
                diag += poisson * r.norm_sqr();
                cross += poisson * r;
            }
            let want = p.kappa * c2 * diag
                + p.gamma * (-p.gamma * t).exp()
                + (p.kappa * p.gamma).sqrt() * (-0.5 * p.gamma * t).exp() * 2.0 * (s.prefactor() * cross).re;
            let got = s.count_rate_1(t).total;
            assert!((got - want).abs() < 1e-12, "t = {t}: {got} vs {want}");
        }
    }

    #[test]
    fn cavity_moment_matches_summed_form_up_to_sign() {
        // kappa<phi1|b|phi1> = -kappa |c|^2 (G0/omega_m) sum_n P_n r_n^* (r_n - r_{n+1})
        let s = unit_kick();
        let p = *s.params();
        let shift = p.polaron_shift();
        for t in [1.0, 5.0, 40.0] {
            let phi = s.phi1(t);
            let direct = p.kappa * lowering_element(&phi, &phi);
            let mut sum = C64::new(0.0, 0.0);
            let mut poisson = (-shift * shift).exp();
            for n in 0..39 {
                if n > 0 {
                    poisson *= shift * shift / n as f64;
                }
                let rn = s.r_coefficient(n, t);
                sum += poisson * rn.conj() * (rn - s.r_coefficient(n + 1, t));
            }
            let summed = -p.kappa * s.prefactor().norm_sqr() * shift * sum;
            assert!((direct - summed).norm() < 1e-12 * direct.norm().max(1e-3), "t = {t}");
        }
    }

    #[test]
    fn conditional_mean_starts_at_zero_and_vanishes_without_coupling() {
        assert_eq!(unit_kick().conditional_mean_b(0.0).unwrap(), C64::new(0.0, 0.0));
        let s = SingleCavity::new(ModelParams::new(1.0, 2.0, 0.0, 0.2, 12).unwrap()).unwrap();
        for t in [0.0, 0.7, 3.0, 30.0] {
            assert!(s.conditional_mean_b(t).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn degenerate_conditioning_reported() {
        let s = unit_kick();
        assert!(matches!(s.conditional_mean_b(2000.0), Err(Error::DegenerateConditioning { .. })));
    }

    #[test]
    fn photon_number_rises_then_decays() {
        let s = unit_kick();
        let ts: Vec<f64> = (0..400).map(|i| i as f64 * 0.05).collect();
        let ns: Vec<f64> = ts.iter().map(|&t| s.mean_photon_number(t)).collect();
        let peak = ns.iter().cloned().fold(0.0, f64::max);
        assert!(s.mean_photon_number(0.5) > s.mean_photon_number(0.0));
        assert!(s.mean_photon_number(20.0) < peak);
    }
}
