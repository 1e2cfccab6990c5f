//! Truncated Fock-space kernels for a single mechanical mode.
//!
//! Vectors and operators live on levels `0..=N` with `dim = N + 1`. Nothing
//! here renormalizes implicitly: conditional states carry their count rate in
//! their norm.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{ensure, Error, Result};

pub type C64 = Complex64;

/// Extra levels carried while exponentiating the displacement generator.
/// Truncation error is pushed into the rows and columns that get cropped.
pub const DISPLACEMENT_PAD: usize = 16;

/// Complex amplitudes over Fock levels `0..dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector(DVector<C64>);

impl FockVector {
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        ensure(!amps.is_empty(), || "Fock vector needs dim >= 1".into())?;
        Ok(Self(amps))
    }

    pub fn from_vec(amps: Vec<C64>) -> Result<Self> {
        Self::new(DVector::from_vec(amps))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "Fock vector needs dim >= 1");
        Self(DVector::zeros(dim))
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::basis(0, dim)
    }

    pub fn basis(n: usize, dim: usize) -> Self {
        assert!(n < dim, "level {n} outside dim {dim}");
        let mut v = Self::zeros(dim);
        v.0[n] = C64::new(1.0, 0.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amps(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn amps_mut(&mut self) -> &mut DVector<C64> {
        &mut self.0
    }

    pub fn into_inner(self) -> DVector<C64> {
        self.0
    }

    pub fn get(&self, n: usize) -> C64 {
        self.0[n]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self(self.0.map(|z| z * c))
    }

    /// Unit-norm copy. Fails on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateInput("cannot normalize a zero vector".into()));
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, c: C64, other: &FockVector) {
        assert_eq!(self.dim(), other.dim(), "Fock dimension mismatch");
        self.0.axpy(c, &other.0, C64::new(1.0, 0.0));
    }

    /// Free mechanical evolution `exp(-i omega b_dag b t)`.
    pub fn free_evolved(&self, omega: f64, t: f64) -> Self {
        Self(DVector::from_iterator(
            self.dim(),
            self.0.iter().enumerate().map(|(n, z)| z * C64::from_polar(1.0, -omega * n as f64 * t)),
        ))
    }

    pub fn max_abs_diff(&self, other: &FockVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "Fock dimension mismatch");
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Add for &FockVector {
    type Output = FockVector;
    fn add(self, rhs: &FockVector) -> FockVector {
        assert_eq!(self.dim(), rhs.dim(), "Fock dimension mismatch");
        FockVector(&self.0 + &rhs.0)
    }
}

impl Sub for &FockVector {
    type Output = FockVector;
    fn sub(self, rhs: &FockVector) -> FockVector {
        assert_eq!(self.dim(), rhs.dim(), "Fock dimension mismatch");
        FockVector(&self.0 - &rhs.0)
    }
}

impl Mul<C64> for &FockVector {
    type Output = FockVector;
    fn mul(self, rhs: C64) -> FockVector {
        self.scaled(rhs)
    }
}

/// Dense square operator on the truncated mechanical space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator(DMatrix<C64>);

impl ModeOperator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        ensure(m.is_square() && m.nrows() >= 1, || {
            format!("mode operator must be square with dim >= 1, got {}x{}", m.nrows(), m.ncols())
        })?;
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn apply(&self, v: &FockVector) -> FockVector {
        assert_eq!(self.dim(), v.dim(), "operator/vector dimension mismatch");
        FockVector(&self.0 * &v.0)
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn compose(&self, rhs: &ModeOperator) -> Self {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Self(&self.0 * &rhs.0)
    }

    /// Largest entrywise deviation over the leading `block x block` corner.
    pub fn max_abs_diff_block(&self, other: &ModeOperator, block: usize) -> f64 {
        let b = block.min(self.dim()).min(other.dim());
        let mut worst = 0.0f64;
        for j in 0..b {
            for i in 0..b {
                worst = worst.max((self.0[(i, j)] - other.0[(i, j)]).norm());
            }
        }
        worst
    }
}

fn check_amplitude(beta: C64) -> Result<()> {
    ensure(beta.re.is_finite() && beta.im.is_finite(), || format!("non-finite amplitude {beta}"))
}

/// Truncated coherent state `e^{-|beta|^2/2} beta^n / sqrt(n!)`, not renormalized.
pub fn coherent_state(beta: C64, dim: usize) -> Result<FockVector> {
    check_amplitude(beta)?;
    ensure(dim >= 1, || "dim must be >= 1".into())?;
    if beta == C64::new(0.0, 0.0) {
        return Ok(FockVector::vacuum(dim));
    }
    let ln_mag = beta.norm().ln();
    let phase = beta.arg();
    let mut log_amp = -0.5 * beta.norm_sqr();
    let amps = (0..dim)
        .map(|n| {
            if n > 0 {
                log_amp += ln_mag - 0.5 * (n as f64).ln();
            }
            C64::from_polar(log_amp.exp(), phase * n as f64)
        })
        .collect();
    FockVector::from_vec(amps)
}

/// Lowering operator `b` truncated to `dim` levels.
pub fn annihilation_matrix(dim: usize) -> ModeOperator {
    assert!(dim >= 1, "dim must be >= 1");
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    ModeOperator(m)
}

/// `D(beta) = exp(beta b_dag - conj(beta) b)`, exponentiated on a padded space
/// and cropped back to `dim`.
pub fn displacement_matrix(beta: C64, dim: usize) -> Result<ModeOperator> {
    check_amplitude(beta)?;
    ensure(dim >= 1, || "dim must be >= 1".into())?;
    if beta == C64::new(0.0, 0.0) {
        return Ok(ModeOperator::identity(dim));
    }
    let padded = dim + DISPLACEMENT_PAD;
    let b = annihilation_matrix(padded).into_inner();
    let generator = b.adjoint() * beta - b * beta.conj();
    let full = generator.exp();
    Ok(ModeOperator(full.view((0, 0), (dim, dim)).into_owned()))
}

/// Matrix elements `<m|D(beta)|n>` from the associated-Laguerre closed form,
/// evaluated with a rescaled three-term recurrence along each diagonal.
///
/// Every entry is the element of the untruncated operator, so no padding is
/// needed. Cost is `O(dim^2)`.
pub fn displacement_elements(beta: C64, dim: usize) -> Result<ModeOperator> {
    Ok(ModeOperator(displacement_block(beta, dim, dim)?))
}

/// `<m|D(beta)|n>` for `m < rows`, `n < cols`, exact in the untruncated space.
pub fn displacement_block(beta: C64, rows: usize, cols: usize) -> Result<DMatrix<C64>> {
    check_amplitude(beta)?;
    ensure(rows >= 1 && cols >= 1, || "block dimensions must be >= 1".into())?;
    if beta == C64::new(0.0, 0.0) {
        return Ok(DMatrix::from_fn(rows, cols, |i, j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)));
    }
    let x = beta.norm_sqr();
    let ln_mag = beta.norm().ln();
    let phase = beta.arg();
    let mut m = DMatrix::zeros(rows, cols);
    // log of |beta|^k e^{-x/2} / sqrt(k!)
    let mut log_base = -0.5 * x;
    for k in 0..rows.max(cols) {
        if k > 0 {
            log_base += ln_mag - 0.5 * (k as f64).ln();
        }
        let below = C64::from_polar(1.0, phase * k as f64);
        let above = C64::from_polar(if k % 2 == 0 { 1.0 } else { -1.0 }, -phase * k as f64);
        // m = n + k for n < len_below, n = m + k for m < len_above
        let len_below = if k < rows { cols.min(rows - k) } else { 0 };
        let len_above = if k > 0 && k < cols { rows.min(cols - k) } else { 0 };
        let kf = k as f64;
        let (mut h_prev, mut h, mut log_scale) = (0.0f64, 1.0f64, 0.0f64);
        for n in 0..len_below.max(len_above) {
            let val = (log_base + log_scale).exp() * h;
            if n < len_below {
                m[(n + k, n)] = below * val;
            }
            if n < len_above {
                m[(n, n + k)] = above * val;
            }
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + kf - x) * h - (nf * (nf + kf)).sqrt() * h_prev)
                / ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
            h_prev = h;
            h = next;
            let s = h.abs().max(h_prev.abs());
            if s > 1e100 {
                h /= s;
                h_prev /= s;
                log_scale += s.ln();
            }
        }
    }
    Ok(m)
}

/// `<x|y>`, conjugate-linear in `x`.
pub fn inner(x: &FockVector, y: &FockVector) -> Result<C64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    Ok(x.0.dotc(&y.0))
}

/// `<x|y>` for vectors known to share a dimension.
pub(crate) fn dotc(x: &FockVector, y: &FockVector) -> C64 {
    x.0.dotc(&y.0)
}

/// `<x|b|y>` without materializing `b`.
pub fn lowering_element(x: &FockVector, y: &FockVector) -> C64 {
    assert_eq!(x.dim(), y.dim(), "Fock dimension mismatch");
    (1..y.dim()).map(|n| x.0[n - 1].conj() * y.0[n] * (n as f64).sqrt()).sum()
}

/// Smallest `dim >= 32` whose Poisson tail beyond `dim - 1` at mean
/// `|beta_eff|^2` is below `1e-12`.
pub fn recommended_dim(beta_eff: f64) -> usize {
    const FLOOR: usize = 32;
    const TAIL: f64 = 1e-12;
    let mean = beta_eff * beta_eff;
    if mean == 0.0 {
        return FLOOR;
    }
    // Accumulate the CDF in log space to stay finite for large means.
    let ln_mean = mean.ln();
    let mut log_p = -mean;
    let mut cdf = log_p.exp();
    let mut n = 0usize;
    loop {
        if 1.0 - cdf < TAIL && n as f64 > mean {
            break;
        }
        n += 1;
        log_p += ln_mean - (n as f64).ln();
        cdf += log_p.exp();
        if n > 100_000 {
            break;
        }
    }
    // Guard against round-off in 1 - cdf by adding a fixed margin of levels.
    (n + 1 + (4.0 * beta_eff.abs()).ceil() as usize).max(FLOOR)
}
