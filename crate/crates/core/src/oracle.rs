//! Direct integration of the non-Hermitian no-jump equation.
//!
//! The photonic part is restricted to the one-excitation sector, so a joint
//! state is `photonic_dim` mechanical blocks stacked end to end. The generator
//! `-iH - J_dag J / 2` is assembled literally from the optomechanical
//! Hamiltonian, the cascade term `-i sqrt(kappa gamma)(c a_dag - c_dag a)/2`
//! (`/(2 sqrt 2)` per arm in the interferometer) and the detector jump
//! operators. Nothing here uses the closed forms in [`crate::single`].

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure, Error, Result};
use crate::fock::{FockVector, C64};
use crate::model::{MZParams, ModelParams};
use crate::mz::BipartiteMechState;

/// Default step-doubling tolerance, per unit `kappa t`.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Steps below this size abort with [`Error::Stiffness`].
pub const MIN_STEP: f64 = 1e-12;
const NORM_SLACK: f64 = 1e-12;

/// Photonic basis index of "photon in the optomechanical cavity" (single cavity).
pub const SINGLE_CAVITY: usize = 0;
/// Photonic basis index of "photon in the source" (single cavity).
pub const SINGLE_SOURCE: usize = 1;
/// Photonic basis indices for the interferometer.
pub const MZ_SOURCE: usize = 0;
pub const MZ_CAVITY1: usize = 1;
pub const MZ_CAVITY2: usize = 2;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// A detector: `J = sum_p weights[p] * (annihilator of photonic state p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub name: &'static str,
    pub weights: Vec<C64>,
}

/// Which detector clicked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    Single,
    D1,
    D2,
}

/// One-excitation joint state, photonic-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    photonic_dim: usize,
    modes: usize,
    fock_dim: usize,
    amps: DVector<C64>,
    pub t: f64,
}

impl JointState {
    pub fn zeros(photonic_dim: usize, modes: usize, fock_dim: usize) -> Self {
        let len = photonic_dim * fock_dim.pow(modes as u32);
        Self { photonic_dim, modes, fock_dim, amps: DVector::zeros(len), t: 0.0 }
    }

    /// Photon in the source, every mechanical mode in its ground state.
    pub fn single_photon_in_source(generator: &Generator) -> Self {
        let mut s = Self::zeros(generator.photonic_dim(), generator.modes(), generator.fock_dim());
        s.block_mut(generator.source)[0] = re(1.0);
        s
    }

    /// Photon in the source with the given mechanical state (single mode).
    pub fn with_source_mechanics(generator: &Generator, mech: &FockVector) -> Result<Self> {
        ensure(generator.modes() == 1, || "mechanical re-embedding needs a single mode".into())?;
        if mech.dim() != generator.fock_dim() {
            return Err(Error::DimensionMismatch { left: mech.dim(), right: generator.fock_dim() });
        }
        let mut s = Self::zeros(generator.photonic_dim(), 1, generator.fock_dim());
        s.block_mut(generator.source).copy_from_slice(mech.amps().as_slice());
        Ok(s)
    }

    pub fn photonic_dim(&self) -> usize {
        self.photonic_dim
    }

    pub fn mech_len(&self) -> usize {
        self.fock_dim.pow(self.modes as u32)
    }

    pub fn amps(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn block(&self, p: usize) -> &[C64] {
        let m = self.mech_len();
        &self.amps.as_slice()[p * m..(p + 1) * m]
    }

    pub fn block_mut(&mut self, p: usize) -> &mut [C64] {
        let m = self.mech_len();
        &mut self.amps.as_mut_slice()[p * m..(p + 1) * m]
    }

    /// Single-mode mechanical amplitude paired with photonic state `p`.
    pub fn mech_vector(&self, p: usize) -> FockVector {
        FockVector::from_vec(self.block(p).to_vec()).expect("nonempty block")
    }

    /// Two-mode mechanical amplitude `psi[(n1, n2)]` paired with photonic state `p`.
    pub fn mech_matrix(&self, p: usize) -> DMatrix<C64> {
        let n = self.fock_dim;
        DMatrix::from_row_slice(n, n, self.block(p))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }
}

/// Structured no-jump generator on the one-excitation sector.
#[derive(Debug, Clone)]
pub struct Generator {
    fock_dim: usize,
    modes: usize,
    omegas: Vec<f64>,
    /// `(mode, G0)` for photonic states that sit in an optomechanical cavity.
    couplings: Vec<Option<(usize, f64)>>,
    /// Photonic part of `-i H_cas - J_dag J / 2` (includes cavity decay).
    photonic: DMatrix<C64>,
    jumps: Vec<(Detector, Jump)>,
    source: usize,
    sqrt_n: Vec<f64>,
}

impl Generator {
    fn assemble(
        fock_dim: usize,
        omegas: Vec<f64>,
        couplings: Vec<Option<(usize, f64)>>,
        hamiltonian: DMatrix<C64>,
        jumps: Vec<(Detector, Jump)>,
        source: usize,
    ) -> Self {
        let p = couplings.len();
        let mut jdj = DMatrix::<C64>::zeros(p, p);
        for (_, j) in &jumps {
            for a in 0..p {
                for b in 0..p {
                    jdj[(a, b)] += j.weights[a].conj() * j.weights[b];
                }
            }
        }
        let photonic = hamiltonian * (-I) - jdj * re(0.5);
        Self {
            fock_dim,
            modes: omegas.len(),
            omegas,
            couplings,
            photonic,
            jumps,
            source,
            sqrt_n: (0..=fock_dim).map(|n| (n as f64).sqrt()).collect(),
        }
    }

    /// Source cavity cascaded into one optomechanical cavity; detector `J = sqrt(gamma) c + sqrt(kappa) a`.
    pub fn single(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let g = (params.kappa * params.gamma).sqrt();
        let mut h = DMatrix::<C64>::zeros(2, 2);
        // H_cas = -i g (c a_dag - c_dag a)/2
        h[(SINGLE_CAVITY, SINGLE_SOURCE)] = -I * (0.5 * g);
        h[(SINGLE_SOURCE, SINGLE_CAVITY)] = I * (0.5 * g);
        let mut w = vec![re(0.0); 2];
        w[SINGLE_CAVITY] = re(params.kappa.sqrt());
        w[SINGLE_SOURCE] = re(params.gamma.sqrt());
        let mut couplings = vec![None; 2];
        couplings[SINGLE_CAVITY] = Some((0, params.g0));
        Ok(Self::assemble(
            params.fock_dim,
            vec![params.omega_m],
            couplings,
            h,
            vec![(Detector::Single, Jump { name: "D", weights: w })],
            SINGLE_SOURCE,
        ))
    }

    /// Source split by a 50:50 beam splitter into two cavities, recombined on
    /// a second 50:50 splitter with detectors D1 and D2.
    pub fn mach_zehnder(mz: &MZParams) -> Result<Self> {
        let (p1, p2) = (&mz.cavity1, &mz.cavity2);
        let gamma = mz.gamma();
        let s2 = std::f64::consts::SQRT_2;
        let mut h = DMatrix::<C64>::zeros(3, 3);
        for (cav, p) in [(MZ_CAVITY1, p1), (MZ_CAVITY2, p2)] {
            let g = (p.kappa * gamma).sqrt() / (2.0 * s2);
            h[(cav, MZ_SOURCE)] = -I * g;
            h[(MZ_SOURCE, cav)] = I * g;
        }
        let mut d1 = vec![re(0.0); 3];
        d1[MZ_SOURCE] = re(gamma.sqrt());
        d1[MZ_CAVITY1] = re(p1.kappa.sqrt() / s2);
        d1[MZ_CAVITY2] = re(p2.kappa.sqrt() / s2);
        let mut d2 = vec![re(0.0); 3];
        d2[MZ_CAVITY1] = re(p1.kappa.sqrt() / s2);
        d2[MZ_CAVITY2] = re(-p2.kappa.sqrt() / s2);
        let mut couplings = vec![None; 3];
        couplings[MZ_CAVITY1] = Some((0, p1.g0));
        couplings[MZ_CAVITY2] = Some((1, p2.g0));
        Ok(Self::assemble(
            mz.fock_dim(),
            vec![p1.omega_m, p2.omega_m],
            couplings,
            h,
            vec![(Detector::D1, Jump { name: "D1", weights: d1 }), (Detector::D2, Jump { name: "D2", weights: d2 })],
            MZ_SOURCE,
        ))
    }

    pub fn photonic_dim(&self) -> usize {
        self.couplings.len()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn jumps(&self) -> impl Iterator<Item = (Detector, &Jump)> {
        self.jumps.iter().map(|(d, j)| (*d, j))
    }

    pub fn jump(&self, which: Detector) -> Result<&Jump> {
        self.jumps
            .iter()
            .find(|(d, _)| *d == which)
            .map(|(_, j)| j)
            .ok_or_else(|| Error::InvalidInput(format!("no detector {which:?} in this configuration")))
    }

    pub fn len(&self) -> usize {
        self.photonic_dim() * self.fock_dim.pow(self.modes as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `y = L x`.
    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        let n = self.fock_dim;
        let m = n.pow(self.modes as u32);
        let pdim = self.photonic_dim();
        for p in 0..pdim {
            let yb = &mut y[p * m..(p + 1) * m];
            yb.iter_mut().for_each(|v| *v = re(0.0));
            for q in 0..pdim {
                let c = self.photonic[(p, q)];
                if c != re(0.0) {
                    for (yv, xv) in yb.iter_mut().zip(&x[q * m..(q + 1) * m]) {
                        *yv += c * xv;
                    }
                }
            }
            let xb = &x[p * m..(p + 1) * m];
            // -i omega N
            for idx in 0..m {
                let energy = if self.modes == 1 {
                    self.omegas[0] * idx as f64
                } else {
                    self.omegas[0] * (idx / n) as f64 + self.omegas[1] * (idx % n) as f64
                };
                yb[idx] += C64::new(0.0, -energy) * xb[idx];
            }
            // -i G0 (b + b_dag) on the coupled mode
            if let Some((mode, g0)) = self.couplings[p] {
                if g0 != 0.0 {
                    let stride = if self.modes == 1 || mode == 1 { 1 } else { n };
                    let mg = C64::new(0.0, -g0);
                    for idx in 0..m {
                        let level = (idx / stride) % n;
                        let mut acc = re(0.0);
                        if level + 1 < n {
                            acc += xb[idx + stride] * self.sqrt_n[level + 1];
                        }
                        if level > 0 {
                            acc += xb[idx - stride] * self.sqrt_n[level];
                        }
                        yb[idx] += mg * acc;
                    }
                }
            }
        }
    }

    pub fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        let mut y = DVector::zeros(x.len());
        self.apply_into(x.as_slice(), y.as_mut_slice());
        y
    }

    /// Dense generator, for small truncations.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let len = self.len();
        let mut out = DMatrix::zeros(len, len);
        let mut e = DVector::zeros(len);
        for k in 0..len {
            e[k] = re(1.0);
            out.set_column(k, &self.apply(&e));
            e[k] = re(0.0);
        }
        out
    }

    /// Dense `sum_j J_dag J` on the joint space.
    pub fn jump_gram_dense(&self) -> DMatrix<C64> {
        let m = self.fock_dim.pow(self.modes as u32);
        let pdim = self.photonic_dim();
        let mut out = DMatrix::zeros(pdim * m, pdim * m);
        for (_, j) in &self.jumps {
            for a in 0..pdim {
                for b in 0..pdim {
                    let c = j.weights[a].conj() * j.weights[b];
                    for k in 0..m {
                        out[(a * m + k, b * m + k)] += c;
                    }
                }
            }
        }
        out
    }

    fn rk4_step(&self, x: &DVector<C64>, dt: f64, scratch: &mut [DVector<C64>; 5]) -> DVector<C64> {
        let [k1, k2, k3, k4, tmp] = scratch;
        let h = re(dt);
        self.apply_into(x.as_slice(), k1.as_mut_slice());
        tmp.copy_from(x);
        tmp.axpy(h * 0.5, k1, re(1.0));
        self.apply_into(tmp.as_slice(), k2.as_mut_slice());
        tmp.copy_from(x);
        tmp.axpy(h * 0.5, k2, re(1.0));
        self.apply_into(tmp.as_slice(), k3.as_mut_slice());
        tmp.copy_from(x);
        tmp.axpy(h, k3, re(1.0));
        self.apply_into(tmp.as_slice(), k4.as_mut_slice());
        let mut out = x.clone();
        out.axpy(h / 6.0, k1, re(1.0));
        out.axpy(h / 3.0, k2, re(1.0));
        out.axpy(h / 3.0, k3, re(1.0));
        out.axpy(h / 6.0, k4, re(1.0));
        out
    }

    fn scratch(&self) -> [DVector<C64>; 5] {
        let len = self.len();
        std::array::from_fn(|_| DVector::zeros(len))
    }
}

/// Integration statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    pub accepted: usize,
    pub rejected: usize,
    pub min_dt: f64,
}

/// RK4 with step doubling: a step is accepted when one full step and two
/// half steps differ by at most `tol * dt` (max-abs) and the squared norm has
/// not grown; the half-step result is kept.
pub fn integrate_no_jump(
    generator: &Generator,
    state: &JointState,
    t_end: f64,
    tol: f64,
) -> Result<(JointState, StepReport)> {
    ensure(t_end >= state.t, || format!("t_end = {t_end} is before the state time {}", state.t))?;
    ensure(tol > 0.0, || format!("tol must be > 0, got {tol}"))?;
    ensure(state.amps.len() == generator.len(), || "state does not match the generator".into())?;
    let mut x = state.amps.clone();
    let mut t = state.t;
    let mut dt = initial_step(generator);
    let mut report = StepReport { min_dt: f64::INFINITY, ..Default::default() };
    let mut scratch = generator.scratch();
    let mut norm = x.norm_squared();
    while t_end - t > 1e-14 * t_end.abs().max(1.0) {
        let h = dt.min(t_end - t);
        let full = generator.rk4_step(&x, h, &mut scratch);
        let mid = generator.rk4_step(&x, 0.5 * h, &mut scratch);
        let half = generator.rk4_step(&mid, 0.5 * h, &mut scratch);
        let err = (&full - &half).camax();
        let new_norm = half.norm_squared();
        if err <= tol * h && new_norm <= norm + NORM_SLACK {
            x = half;
            t += h;
            norm = new_norm;
            report.accepted += 1;
            report.min_dt = report.min_dt.min(h);
            if err < 0.02 * tol * h {
                dt = h * 2.0;
            } else {
                dt = h;
            }
        } else {
            report.rejected += 1;
            dt = 0.5 * h;
            if dt < MIN_STEP {
                return Err(Error::Stiffness { t, dt });
            }
        }
    }
    Ok((JointState { amps: x, t: t_end, ..state.clone() }, report))
}

/// Fixed-step RK4 with `steps` equal steps.
pub fn integrate_fixed(generator: &Generator, state: &JointState, t_end: f64, steps: usize) -> Result<JointState> {
    ensure(t_end >= state.t, || format!("t_end = {t_end} is before the state time {}", state.t))?;
    ensure(steps >= 1, || "steps must be >= 1".into())?;
    let h = (t_end - state.t) / steps as f64;
    let mut scratch = generator.scratch();
    let mut x = state.amps.clone();
    for _ in 0..steps {
        x = generator.rk4_step(&x, h, &mut scratch);
    }
    Ok(JointState { amps: x, t: t_end, ..state.clone() })
}

fn initial_step(generator: &Generator) -> f64 {
    let top = generator.fock_dim as f64;
    let scale = generator.omegas.iter().map(|w| w * top).sum::<f64>()
        + generator.couplings.iter().flatten().map(|(_, g)| 2.0 * g * top.sqrt()).fold(0.0, f64::max)
        + generator.photonic.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (0.1 / scale.max(1e-3)).min(0.1)
}

/// Flattened mechanical remainder `J psi`; its squared norm is the count rate.
pub fn apply_jump_raw(generator: &Generator, state: &JointState, which: Detector) -> Result<DVector<C64>> {
    let jump = generator.jump(which)?;
    let m = state.mech_len();
    let mut out = DVector::zeros(m);
    for (p, w) in jump.weights.iter().enumerate() {
        if *w != re(0.0) {
            for (o, v) in out.iter_mut().zip(state.block(p)) {
                *o += w * v;
            }
        }
    }
    Ok(out)
}

/// Single-cavity jump: mechanical state after the click.
pub fn apply_jump(generator: &Generator, state: &JointState) -> Result<FockVector> {
    ensure(generator.modes() == 1, || "use apply_jump_mz for the interferometer".into())?;
    FockVector::new(apply_jump_raw(generator, state, Detector::Single)?)
}

/// Interferometer jump at `which` as a dense two-mode state.
pub fn apply_jump_mz(generator: &Generator, state: &JointState, which: Detector) -> Result<BipartiteMechState> {
    ensure(generator.modes() == 2, || "apply_jump_mz needs the interferometer".into())?;
    let n = generator.fock_dim();
    let raw = apply_jump_raw(generator, state, which)?;
    BipartiteMechState::from_dense(&DMatrix::from_row_slice(n, n, raw.as_slice()))
}

/// Sum over detectors of `||J psi||^2`.
pub fn total_count_rate(generator: &Generator, state: &JointState) -> f64 {
    generator
        .jumps
        .iter()
        .map(|(d, _)| apply_jump_raw(generator, state, *d).map(|v| v.norm_squared()).unwrap_or(0.0))
        .sum()
}

/// Photon in the source at `t = 0`, ground-state mechanics, integrated to `t`.
pub fn single_no_jump_state(params: &ModelParams, t: f64, tol: f64) -> Result<(Generator, JointState)> {
    let g = Generator::single(params)?;
    let s0 = JointState::single_photon_in_source(&g);
    let (s, _) = integrate_no_jump(&g, &s0, t, tol)?;
    Ok((g, s))
}

/// Least-squares scalar `c` with `oracle ~ c * unit`.
pub fn calibrate_prefactor(unit: &FockVector, oracle: &FockVector) -> Result<C64> {
    let denom = unit.norm_sqr();
    if !(denom > 0.0) {
        return Err(Error::DegenerateInput("calibration reference branch is zero".into()));
    }
    Ok(crate::fock::inner(unit, oracle)? / denom)
}

/// Two-stage two-photon run.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonOracle {
    pub mech: FockVector,
    pub rate: f64,
    pub first_rate: f64,
}

/// Integrate to `t1`, click, evolve the mechanics freely for `t_d`, inject a
/// fresh photon into the source, integrate for `tau`, click.
pub fn two_photon_oracle(params: &ModelParams, t1: f64, t_d: f64, tau: f64, tol: f64) -> Result<TwoPhotonOracle> {
    for (name, v) in [("t1", t1), ("t_d", t_d), ("tau", tau)] {
        ensure(v >= 0.0 && v.is_finite(), || format!("{name} must be >= 0, got {v}"))?;
    }
    let g = Generator::single(params)?;
    let s0 = JointState::single_photon_in_source(&g);
    let (s1, _) = integrate_no_jump(&g, &s0, t1, tol)?;
    let first = apply_jump(&g, &s1)?;
    let first_rate = first.norm_sqr();
    let waited = first.free_evolved(params.omega_m, t_d);
    let s2 = JointState::with_source_mechanics(&g, &waited)?;
    let (s3, _) = integrate_no_jump(&g, &s2, tau, tol)?;
    let mech = apply_jump(&g, &s3)?;
    Ok(TwoPhotonOracle { rate: mech.norm_sqr(), mech, first_rate })
}

/// The four branches of [`two_photon_oracle`], separated by which photonic
/// block each click is taken from: `[rr, rt, tr, tt]`, where the first letter
/// refers to the second photon (R: counted from the source, T: from the cavity).
/// Jump weights are not included.
pub fn two_photon_oracle_branches(
    params: &ModelParams,
    t1: f64,
    t_d: f64,
    tau: f64,
    tol: f64,
) -> Result<[FockVector; 4]> {
    for (name, v) in [("t1", t1), ("t_d", t_d), ("tau", tau)] {
        ensure(v >= 0.0 && v.is_finite(), || format!("{name} must be >= 0, got {v}"))?;
    }
    let g = Generator::single(params)?;
    let s0 = JointState::single_photon_in_source(&g);
    let (s1, _) = integrate_no_jump(&g, &s0, t1, tol)?;
    let second = |first: FockVector| -> Result<(FockVector, FockVector)> {
        let s2 = JointState::with_source_mechanics(&g, &first.free_evolved(params.omega_m, t_d))?;
        let (s3, _) = integrate_no_jump(&g, &s2, tau, tol)?;
        Ok((s3.mech_vector(SINGLE_SOURCE), s3.mech_vector(SINGLE_CAVITY)))
    };
    let (rr, tr) = second(s1.mech_vector(SINGLE_SOURCE))?;
    let (rt, tt) = second(s1.mech_vector(SINGLE_CAVITY))?;
    Ok([rr, rt, tr, tt])
}
