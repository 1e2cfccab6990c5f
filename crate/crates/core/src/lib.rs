//! Conditional single-photon optomechanics.
//!
//! A single photon, released from a source cavity, drives one optomechanical
//! cavity (or two, arranged in a Mach-Zehnder interferometer) and is counted
//! at a perfect detector. This crate computes the mechanical state conditioned
//! on the detection time, the count rates with their reflected / transmitted /
//! interference parts, entanglement and two-mode Wigner slices of the
//! interferometer state, and the doubly conditioned rate for a second photon.
//!
//! All rates are in units of the optomechanical cavity decay rate `kappa` and
//! all times in units of `1/kappa`. Quadratures follow
//! `x = (b + b_dag)/sqrt(2)`, `p = -i(b - b_dag)/sqrt(2)`.
//!
//! Every closed-form result has an independent counterpart in [`oracle`],
//! which integrates the non-Hermitian no-jump equation directly.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod model;
pub mod mz;
pub mod oracle;
pub mod quad;
pub mod single;
pub mod two_photon;
pub mod validate;
pub mod wigner;

pub use error::{Error, Result};
pub use fock::{FockVector, ModeOperator, C64};
pub use model::{DerivedParams, MZParams, ModelParams};
pub use mz::{BipartiteMechState, MachZehnder};
pub use single::{ConditionalState1, RateSample, SingleCavity};
pub use two_photon::{HistorySet, Rate2Sample, RateGrid, TwoPhoton};
