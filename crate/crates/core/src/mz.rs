//! Two optomechanical cavities in a Mach-Zehnder interferometer.
//!
//! A count at D1 at time `t` leaves the two mechanical modes in
//!
//! ```text
//! c1 |chi1(t)>|0> + c2 |0>|chi2(t)> + sqrt(gamma) e^{-gamma t/2} |0>|0>,
//! chi_i(t) = D_dag(p_i) R_i(t) D(p_i) |0>,   c_i = -kappa_i sqrt(gamma) / 2,
//! ```
//!
//! which has Schmidt rank at most two. D2 receives the antisymmetric
//! combination of the transmitted branches and no reflected part.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{ensure, Error, Result};
use crate::fock::{dotc, lowering_element, FockVector, C64};
use crate::model::{MZParams, ModelParams};
use crate::single::SingleCavity;

/// Relative cutoff for discarding null directions of a Gram matrix.
const GRAM_CUTOFF: f64 = 1e-14;

/// `sum_k c_k |u_k> (x) |v_k>`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteMechState {
    terms: Vec<(C64, FockVector, FockVector)>,
    dim: usize,
}

impl BipartiteMechState {
    pub fn new(terms: Vec<(C64, FockVector, FockVector)>) -> Result<Self> {
        ensure(!terms.is_empty(), || "a bipartite state needs at least one term".into())?;
        let dim = terms[0].1.dim();
        for (_, u, v) in &terms {
            for d in [u.dim(), v.dim()] {
                if d != dim {
                    return Err(Error::DimensionMismatch { left: dim, right: d });
                }
            }
        }
        Ok(Self { terms, dim })
    }

    pub fn product(u: FockVector, v: FockVector) -> Result<Self> {
        Self::new(vec![(C64::new(1.0, 0.0), u, v)])
    }

    /// Schmidt form of the amplitude matrix `psi[(n1, n2)]`.
    pub fn from_dense(psi: &DMatrix<C64>) -> Result<Self> {
        ensure(psi.nrows() == psi.ncols() && psi.nrows() > 0, || "amplitude matrix must be square".into())?;
        let n = psi.nrows();
        let svd = psi.clone().svd(true, true);
        let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        let smax = svd.singular_values.max();
        let mut terms = Vec::new();
        for k in 0..svd.singular_values.len() {
            let s = svd.singular_values[k];
            if s > 0.0 && s > 1e-15 * smax {
                let a = FockVector::new(u.column(k).into_owned())?;
                let b = FockVector::new(vt.row(k).transpose())?;
                terms.push((C64::new(s, 0.0), a, b));
            }
        }
        if terms.is_empty() {
            terms.push((C64::new(0.0, 0.0), FockVector::vacuum(n), FockVector::vacuum(n)));
        }
        Self::new(terms)
    }

    pub fn terms(&self) -> &[(C64, FockVector, FockVector)] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (c, u, v) in &self.terms {
            out += u.amps() * v.amps().transpose() * *c;
        }
        out
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        let mut acc = C64::new(0.0, 0.0);
        for (a, u, v) in &self.terms {
            for (b, x, y) in &other.terms {
                acc += a.conj() * b * dotc(u, x) * dotc(v, y);
            }
        }
        Ok(acc)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self).expect("same dim").re.max(0.0)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::DegenerateInput("zero-norm bipartite state".into()));
        }
        let s = C64::new(1.0 / n.sqrt(), 0.0);
        Ok(Self { terms: self.terms.iter().map(|(c, u, v)| (c * s, u.clone(), v.clone())).collect(), dim: self.dim })
    }

    /// `<b_1>` (`mode = 0`) or `<b_2>` (`mode = 1`) in the normalized state.
    pub fn mean_b(&self, mode: usize) -> Result<C64> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::DegenerateInput("zero-norm bipartite state".into()));
        }
        let mut acc = C64::new(0.0, 0.0);
        for (a, u, v) in &self.terms {
            for (b, x, y) in &self.terms {
                let pair =
                    if mode == 0 { lowering_element(u, x) * dotc(v, y) } else { dotc(u, x) * lowering_element(v, y) };
                acc += a.conj() * b * pair;
            }
        }
        Ok(acc / n)
    }

    pub fn swapped(&self) -> Self {
        Self { terms: self.terms.iter().map(|(c, u, v)| (*c, v.clone(), u.clone())).collect(), dim: self.dim }
    }

    /// Apply `exp(i theta b_dag b)` to both modes, so `<b_i> -> e^{i theta} <b_i>`.
    pub fn rotated(&self, theta: f64) -> Self {
        let rot = |v: &FockVector| v.free_evolved(1.0, -theta);
        Self { terms: self.terms.iter().map(|(c, u, v)| (*c, rot(u), rot(v))).collect(), dim: self.dim }
    }

    /// The same state with unit factor vectors and the norms folded into the
    /// coefficients. Late detection times give factors of norm ~1e-30 next to
    /// unit vacua, which defeats any cutoff relative to the largest entry.
    pub fn unit_terms(&self) -> Vec<(C64, FockVector, FockVector)> {
        let unit = |v: &FockVector| v.normalized().unwrap_or_else(|_| v.clone());
        self.terms.iter().map(|(c, u, v)| (c * u.norm() * v.norm(), unit(u), unit(v))).collect()
    }

    /// Squared Schmidt coefficients of the normalized state, descending.
    pub fn schmidt_weights(&self) -> Result<Vec<f64>> {
        let norm = self.norm_sqr();
        if !(norm > 0.0) {
            return Err(Error::DegenerateInput("zero-norm bipartite state".into()));
        }
        // Unit factors keep the Gram cutoff independent of the overall scale.
        let terms = self.unit_terms();
        let k = terms.len();
        let (bu, lu) = gram_basis(terms.iter().map(|t| &t.1));
        let (bv, lv) = gram_basis(terms.iter().map(|t| &t.2));
        // psi = sum_ab M_ab e_a (x) f_b with <e_a|u_j> = sqrt(l_a) conj(W_ja).
        let mut m = DMatrix::<C64>::zeros(lu.len(), lv.len());
        for a in 0..lu.len() {
            for b in 0..lv.len() {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..k {
                    acc += terms[j].0 * bu[(j, a)].conj() * bv[(j, b)].conj();
                }
                m[(a, b)] = acc * (lu[a] * lv[b]).sqrt();
            }
        }
        let rho = &m * m.adjoint() / C64::new(norm, 0.0);
        let mut w: Vec<f64> = SymmetricEigen::new(rho).eigenvalues.iter().map(|v| v.max(0.0)).collect();
        w.sort_by(|a, b| b.total_cmp(a));
        Ok(w)
    }
}

/// Eigenvectors (columns) and eigenvalues of the Gram matrix of `vs`,
/// restricted to eigenvalues above the cutoff.
fn gram_basis<'a>(vs: impl Iterator<Item = &'a FockVector>) -> (DMatrix<C64>, Vec<f64>) {
    let vs: Vec<&FockVector> = vs.collect();
    let k = vs.len();
    let g = DMatrix::from_fn(k, k, |i, j| dotc(vs[i], vs[j]));
    let eig = SymmetricEigen::new(g);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i] > GRAM_CUTOFF * top.max(f64::MIN_POSITIVE)).collect();
    let cols = DMatrix::from_fn(k, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
    (cols, keep.iter().map(|&i| eig.eigenvalues[i]).collect())
}

/// Von Neumann entropy (nats) of either reduced state, `0 ln 0 = 0`.
pub fn entanglement_entropy(state: &BipartiteMechState) -> Result<f64> {
    Ok(state.schmidt_weights()?.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum())
}

/// How the second arm's coupling follows a frequency detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingPolicy {
    /// `G0_2 / omega_m2 = G0_1 / omega_m1`: both arms receive the same kick.
    #[default]
    FixedRatio,
    /// `G0_2 = G0_1`.
    FixedCoupling,
}

/// Interferometer with both arms' closed-form propagators cached.
#[derive(Debug, Clone)]
pub struct MachZehnder {
    params: MZParams,
    arm1: SingleCavity,
    arm2: SingleCavity,
}

impl MachZehnder {
    pub fn new(params: MZParams) -> Result<Self> {
        Ok(Self { arm1: SingleCavity::new(params.cavity1)?, arm2: SingleCavity::new(params.cavity2)?, params })
    }

    pub fn params(&self) -> &MZParams {
        &self.params
    }

    /// `(c1, c2, c3)` for a D1 count at `t`.
    pub fn d1_coefficients(&self, t: f64) -> (C64, C64, C64) {
        let g = self.params.gamma();
        let c = |p: &ModelParams| C64::new(-p.kappa * g.sqrt() / 2.0, 0.0);
        (c(&self.params.cavity1), c(&self.params.cavity2), C64::new(g.sqrt() * (-0.5 * g * t).exp(), 0.0))
    }

    fn branches(&self, t: f64) -> (FockVector, FockVector, FockVector) {
        let d = self.params.fock_dim();
        (self.arm1.displaced_branch(t), self.arm2.displaced_branch(t), FockVector::vacuum(d))
    }

    /// Unnormalized mechanical state after a D1 count at `t`; its squared norm is the D1 rate.
    pub fn mz_conditional_state(&self, t: f64) -> BipartiteMechState {
        let (c1, c2, c3) = self.d1_coefficients(t);
        let (x1, x2, vac) = self.branches(t);
        BipartiteMechState::new(vec![(c1, x1, vac.clone()), (c2, vac.clone(), x2), (c3, vac.clone(), vac)])
            .expect("arms share fock_dim")
    }

    /// Unnormalized mechanical state after a D2 count at `t`.
    pub fn d2_conditional_state(&self, t: f64) -> BipartiteMechState {
        let (c1, c2, _) = self.d1_coefficients(t);
        let (x1, x2, vac) = self.branches(t);
        BipartiteMechState::new(vec![(c1, x1, vac.clone()), (-c2, vac, x2)]).expect("arms share fock_dim")
    }

    pub fn d1_rate(&self, t: f64) -> f64 {
        self.mz_conditional_state(t).norm_sqr()
    }

    pub fn d2_rate(&self, t: f64) -> f64 {
        self.d2_conditional_state(t).norm_sqr()
    }

    pub fn entanglement_entropy(&self, t: f64) -> Result<f64> {
        entanglement_entropy(&self.mz_conditional_state(t))
    }

    /// Conditional `<b_1>` after a D1 count at each time in `t_grid`.
    pub fn mean_amplitude_trajectory(&self, t_grid: &[f64]) -> Result<Vec<C64>> {
        ensure(!t_grid.is_empty(), || "empty time grid".into())?;
        ensure(t_grid.windows(2).all(|w| w[1] >= w[0]), || "time grid must be nondecreasing".into())?;
        t_grid.iter().map(|&t| self.mz_conditional_state(t).mean_b(0)).collect()
    }

    /// Squared overlap between the identical-arm state and the state with
    /// `omega_m2 = (1 + delta) omega_m1`, both conditioned at half a period of arm 1.
    pub fn fidelity_vs_detuning(&self, delta_grid: &[f64], policy: CouplingPolicy) -> Result<Vec<f64>> {
        let base = self.params.cavity1;
        let t = 0.5 * base.mech_period();
        let ident = MachZehnder::new(MZParams::identical(base)?)?.mz_conditional_state(t).normalized()?;
        delta_grid
            .iter()
            .map(|&delta| {
                ensure(delta > -1.0 && delta.is_finite(), || format!("detuning must be > -1, got {delta}"))?;
                if delta == 0.0 {
                    return Ok(1.0);
                }
                let mut arm2 = base;
                arm2.omega_m = (1.0 + delta) * base.omega_m;
                if policy == CouplingPolicy::FixedRatio {
                    arm2.g0 = base.g0 * (1.0 + delta);
                }
                let detuned = MachZehnder::new(MZParams::new(base, arm2)?)?.mz_conditional_state(t).normalized()?;
                Ok(ident.inner(&detuned)?.norm_sqr().min(1.0))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn interferometer(dim: usize) -> MachZehnder {
        MachZehnder::new(MZParams::identical(ModelParams::new(1.0, 2.0, 0.02, 0.02, dim).unwrap()).unwrap()).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn product_state_has_zero_entropy() {
        let u = FockVector::basis(2, 6);
        let s = BipartiteMechState::product(u.clone(), FockVector::vacuum(6)).unwrap();
        assert!(entanglement_entropy(&s).unwrap().abs() < 1e-14);
        // Same product split across several terms.
        let s = BipartiteMechState::new(vec![
            (c(0.5, 0.0), u.clone(), FockVector::vacuum(6)),
            (c(0.0, 0.5), u, FockVector::vacuum(6)),
        ])
        .unwrap();
        assert!(entanglement_entropy(&s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bell_form_has_ln2() {
        let u = FockVector::basis(3, 8);
        let v = FockVector::vacuum(8);
        let s = BipartiteMechState::new(vec![(c(1.0, 0.0), u.clone(), v.clone()), (c(1.0, 0.0), v, u)]).unwrap();
        assert!((entanglement_entropy(&s).unwrap() - LN_2).abs() < 1e-14);
    }

    #[test]
    fn zero_state_rejected() {
        let s = BipartiteMechState::product(FockVector::zeros(4), FockVector::vacuum(4)).unwrap();
        assert!(matches!(entanglement_entropy(&s), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn dense_round_trip() {
        let s = interferometer(16).mz_conditional_state(40.0);
        let back = BipartiteMechState::from_dense(&s.to_dense()).unwrap();
        assert!((back.to_dense() - s.to_dense()).camax() < 1e-14);
        assert!((entanglement_entropy(&back).unwrap() - entanglement_entropy(&s).unwrap()).abs() < 1e-10);
        assert!(back.terms().len() <= 2);
    }

    #[test]
    fn starts_in_ground_state() {
        let mz = interferometer(16);
        let s = mz.mz_conditional_state(0.0);
        let dense = s.to_dense();
        assert!((dense[(0, 0)] - c(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((dense.camax() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(mz.mean_amplitude_trajectory(&[0.0]).unwrap()[0], c(0.0, 0.0));
        assert!(mz.entanglement_entropy(0.0).unwrap() < 1e-12);
    }

    #[test]
    fn swap_symmetry_for_identical_arms() {
        let s = interferometer(24).mz_conditional_state(50.0);
        let sw = s.swapped();
        assert!((s.norm_sqr() - sw.norm_sqr()).abs() < 1e-14);
        let f = s.normalized().unwrap().inner(&sw.normalized().unwrap()).unwrap().norm_sqr();
        assert!(f > 1.0 - 1e-12);
    }

    #[test]
    fn entropy_bounded_over_a_period() {
        let mz = interferometer(32);
        let tm = mz.params().cavity1.mech_period();
        for k in 0..=32 {
            let e = mz.entanglement_entropy(tm * k as f64 / 32.0).unwrap();
            assert!((-1e-9..=LN_2 + 1e-9).contains(&e), "E = {e}");
        }
    }

    #[test]
    fn d2_dark_without_coupling() {
        let p = ModelParams::new(1.0, 2.0, 0.0, 0.02, 8).unwrap();
        let mz = MachZehnder::new(MZParams::identical(p).unwrap()).unwrap();
        for t in [0.5, 3.0, 20.0] {
            assert!(mz.d2_rate(t) < 1e-12 * mz.d1_rate(t));
        }
        assert!(interferometer(16).d2_rate(50.0) > 0.0);
    }

    #[test]
    fn rotation_turns_mean_amplitude() {
        let s = interferometer(24).mz_conditional_state(60.0);
        let b = s.mean_b(0).unwrap();
        let r = s.rotated(0.7).mean_b(0).unwrap();
        assert!((r - b * C64::from_polar(1.0, 0.7)).norm() < 1e-13);
    }

    #[test]
    fn fidelity_is_one_at_zero_detuning() {
        let mz = interferometer(32);
        for policy in [CouplingPolicy::FixedRatio, CouplingPolicy::FixedCoupling] {
            let f = mz.fidelity_vs_detuning(&[0.0, 0.05, -0.05], policy).unwrap();
            assert_eq!(f[0], 1.0);
            assert!(f[1] < 1.0 && f[1] > 0.9 && f[2] > 0.9);
        }
        assert!(mz.fidelity_vs_detuning(&[-1.0], CouplingPolicy::FixedRatio).is_err());
    }
}
