//! Two-mode Wigner function of sum-of-products states via displaced parity.
//!
//! For a single mode, `W_uv(x, p) = (1/pi) <u|D(a) P D_dag(a)|v>` with
//! `a = (x + i p)/sqrt(2)` and `P` the Fock parity. The displaced vectors are
//! computed from exact matrix elements on a row range wide enough that the
//! parity sum is not truncated. For `psi = sum_k c_k u_k (x) v_k`,
//! `W = sum_jk conj(c_j) c_k W_{u_j u_k}(x1, p1) W_{v_j v_k}(x2, p2)`.

use std::f64::consts::{FRAC_1_PI, FRAC_PI_2, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{displacement_block, FockVector, C64};
use crate::mz::BipartiteMechState;
use crate::quad::linspace;

/// Accepted deviation of `||psi||^2` from one.
pub const NORM_TOL: f64 = 1e-10;

/// Rectangular grid over one mode's `(x, p)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(6.0, 161)
    }
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self { x_min: -half_width, x_max: half_width, nx: n, p_min: -half_width, p_max: half_width, np: n }
    }

    pub fn x_axis(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.nx)
    }

    pub fn p_axis(&self) -> Vec<f64> {
        linspace(self.p_min, self.p_max, self.np)
    }
}

/// Per-mode vectors trimmed to their numerical support.
#[derive(Debug, Clone)]
struct ModeVectors {
    vecs: DMatrix<C64>,
}

impl ModeVectors {
    fn new<'a>(vs: impl Iterator<Item = &'a FockVector>) -> Self {
        let vs: Vec<&FockVector> = vs.collect();
        let support = vs
            .iter()
            .map(|v| {
                let scale = v.amps().camax();
                v.amps().iter().rposition(|z| z.norm() > 1e-18 * scale).map_or(1, |i| i + 1)
            })
            .max()
            .unwrap_or(1);
        let vecs = DMatrix::from_fn(support, vs.len(), |n, k| vs[k].get(n));
        Self { vecs }
    }

    fn support(&self) -> usize {
        self.vecs.nrows()
    }

    /// `W_jk(x, p)` for all vector pairs.
    fn cross(&self, x: f64, p: f64) -> DMatrix<C64> {
        let alpha = C64::new(x, p) / SQRT_2;
        let s = self.support();
        let r = alpha.norm() + (s as f64).sqrt() + 1.0;
        let rows = ((r * r + 10.0 * r + 30.0).ceil() as usize).max(s);
        let d = displacement_block(-alpha, rows, s).expect("finite amplitude");
        let w = d * &self.vecs;
        let mut parity_w = w.clone();
        for n in (1..rows).step_by(2) {
            parity_w.row_mut(n).neg_mut();
        }
        w.adjoint() * parity_w * C64::new(FRAC_1_PI, 0.0)
    }
}

/// Single-mode Wigner function of `u`, which need not be normalized.
pub fn wigner_single(u: &FockVector, x: f64, p: f64) -> f64 {
    ModeVectors::new(std::iter::once(u)).cross(x, p)[(0, 0)].re
}

/// Cross Wigner function `W_uv(x, p)`.
pub fn wigner_cross(u: &FockVector, v: &FockVector, x: f64, p: f64) -> C64 {
    ModeVectors::new([u, v].into_iter()).cross(x, p)[(0, 1)]
}

/// Precomputed evaluator for one normalized two-mode state.
#[derive(Debug, Clone)]
pub struct TwoModeWigner {
    coeffs: DVector<C64>,
    mode1: ModeVectors,
    mode2: ModeVectors,
}

impl TwoModeWigner {
    pub fn new(state: &BipartiteMechState) -> Result<Self> {
        let n = state.norm_sqr();
        if !((n - 1.0).abs() <= NORM_TOL) {
            return Err(Error::Unnormalized(n));
        }
        let terms = state.unit_terms();
        let coeffs = DVector::from_iterator(terms.len(), terms.iter().map(|t| t.0));
        Ok(Self {
            coeffs,
            mode1: ModeVectors::new(terms.iter().map(|t| &t.1)),
            mode2: ModeVectors::new(terms.iter().map(|t| &t.2)),
        })
    }

    fn combine(&self, w1: &DMatrix<C64>, w2: &DMatrix<C64>) -> f64 {
        let k = self.coeffs.len();
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..k {
            for b in 0..k {
                acc += self.coeffs[a].conj() * self.coeffs[b] * w1[(a, b)] * w2[(a, b)];
            }
        }
        acc.re
    }

    pub fn at(&self, x1: f64, p1: f64, x2: f64, p2: f64) -> f64 {
        self.combine(&self.mode1.cross(x1, p1), &self.mode2.cross(x2, p2))
    }

    /// `int W` over `[-L, L]^4`, Simpson's rule with `n` (odd) points per axis.
    /// Separable: only the per-mode cross integrals are needed.
    pub fn box_integral(&self, half_width: f64, n: usize) -> f64 {
        let n = if n.is_multiple_of(2) { n + 1 } else { n };
        let xs = linspace(-half_width, half_width, n);
        let h = xs[1] - xs[0];
        let weight = |i: usize| {
            if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let integrate = |mode: &ModeVectors| -> DMatrix<C64> {
            (0..n * n)
                .into_par_iter()
                .map(|idx| {
                    let (i, j) = (idx / n, idx % n);
                    mode.cross(xs[i], xs[j]) * C64::new(weight(i) * weight(j) * h * h / 9.0, 0.0)
                })
                .reduce(|| DMatrix::zeros(self.coeffs.len(), self.coeffs.len()), |a, b| a + b)
        };
        self.combine(&integrate(&self.mode1), &integrate(&self.mode2))
    }
}

/// `W(x1, p1, x2, p2)` of a normalized two-mode state.
pub fn wigner_two_mode_at(state: &BipartiteMechState, x1: f64, p1: f64, x2: f64, p2: f64) -> Result<f64> {
    Ok(TwoModeWigner::new(state)?.at(x1, p1, x2, p2))
}

/// Wigner values on `x2 = -x1`, `p2 = pi/(2 alpha) + p1 + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerSlice {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[(ix, ip)]`
    pub values: DMatrix<f64>,
    pub alpha: f64,
    pub offset: f64,
    pub min: f64,
    pub argmin: (f64, f64),
    pub max: f64,
}

impl WignerSlice {
    pub fn constraint(&self) -> String {
        format!("x2 = -x1, p2 = pi/(2*{:.6}) + p1 + {:.6}", self.alpha, self.offset)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidProjection(format!("slice needs a finite nonzero alpha, got {alpha}")));
    }
    Ok(())
}

fn slice_with_offset(w: &TwoModeWigner, alpha: f64, grid: &GridSpec, offset: f64) -> WignerSlice {
    let xs = grid.x_axis();
    let ps = grid.p_axis();
    let shift = FRAC_PI_2 / alpha + offset;
    let vals: Vec<f64> = (0..xs.len() * ps.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / ps.len(), idx % ps.len());
            w.at(xs[i], ps[j], -xs[i], shift + ps[j])
        })
        .collect();
    let values = DMatrix::from_row_slice(xs.len(), ps.len(), &vals);
    let (imin, &min) = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty grid");
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    WignerSlice {
        argmin: (xs[imin / ps.len()], ps[imin % ps.len()]),
        x_axis: xs,
        p_axis: ps,
        values,
        alpha,
        offset,
        min,
        max,
    }
}

pub fn wigner_slice(state: &BipartiteMechState, alpha: f64, grid: &GridSpec) -> Result<WignerSlice> {
    check_alpha(alpha)?;
    let w = TwoModeWigner::new(state)?;
    Ok(slice_with_offset(&w, alpha, grid, 0.0))
}

/// Rotate both modes so `<b_1>` lies on the positive imaginary axis; returns
/// the rotated state and `|<b_1>|`, the amplitude that sets the slice.
pub fn align_to_imaginary(state: &BipartiteMechState) -> Result<(BipartiteMechState, f64)> {
    let b = state.mean_b(0)?;
    let rotated = state.rotated(FRAC_PI_2 - b.arg());
    Ok((rotated, b.norm()))
}

/// Minimum over parallel slices `p2 -> p2 + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffSliceScan {
    pub slice_min: f64,
    pub best_offset: f64,
    pub best_min: f64,
    /// Set when an off-slice minimum is deeper than the on-slice one by more
    /// than `threshold` relative.
    pub deeper_off_slice: bool,
}

pub fn off_slice_scan(
    state: &BipartiteMechState,
    alpha: f64,
    grid: &GridSpec,
    offsets: &[f64],
    threshold: f64,
) -> Result<OffSliceScan> {
    check_alpha(alpha)?;
    let w = TwoModeWigner::new(state)?;
    let slice_min = slice_with_offset(&w, alpha, grid, 0.0).min;
    let (mut best_offset, mut best_min) = (0.0, slice_min);
    for &o in offsets {
        let m = slice_with_offset(&w, alpha, grid, o).min;
        if m < best_min {
            best_min = m;
            best_offset = o;
        }
    }
    let deeper = best_min < slice_min - threshold * slice_min.abs().max(1e-12);
    Ok(OffSliceScan { slice_min, best_offset, best_min, deeper_off_slice: deeper })
}
