//! Embedded J-holomorphic disks, foliations by such disks, charts in which
//! `J` is block triangular along a disk, and holomorphic trivializations of
//! closed anti-invariant forms along disks.

mod chart;
mod disk;
mod family;
mod kernel;
mod trivialize;

pub use chart::{normalize_along_disk, BlockDeviation, ChartOptions, DiskFrame, NormalizedChart};
pub use disk::{solve_disk, Disk, DiskOptions};
pub use family::{fibre_family, FamilyOptions, FibreFamily};
pub use kernel::{closed_kernel, KernelOptions, KernelReport};
pub use trivialize::{trivialize_alpha, trivialize_along, zeros_with_multiplicity, TrivializeOptions, TrivializedSection, ZeroCluster};

use num_complex::Complex64 as C;

use crate::cr_solver::CrError;
use crate::degree::DegreeError;
use crate::forms::FormsError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JDiskError {
    #[error("disk solver did not converge down to radius {rho:.3e} (residual {residual:.3e})")]
    NonConvergence { rho: f64, residual: f64 },
    #[error("J at the centre has no complex line through the requested direction")]
    DegenerateDirection,
    #[error("disk is not embedded (separation ratio {separation:.3e})")]
    NotEmbedded { separation: f64 },
    #[error("family member at w = {w} failed: {reason}")]
    Family { w: C, reason: String },
    #[error("family is not transverse to the disk: angle {degrees:.2} deg")]
    Transversality { degrees: f64 },
    #[error("Newton solve for the chart failed at zeta = {zeta}")]
    Newton { zeta: C },
    #[error("chart block check failed: {what} deviates by {deviation:.3e}")]
    Normalization { what: &'static str, deviation: f64 },
    #[error("form is not closed: |d alpha| = {residual:.3e}")]
    NotClosed { residual: f64 },
    #[error("CR system check failed: residual {residual:.3e} at zeta = {zeta}")]
    CrCheck { residual: f64, zeta: C },
    #[error("frame degenerates: Gram determinant {det:.3e}")]
    Frame { det: f64 },
    #[error(transparent)]
    Carleman(#[from] CrError),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error("zero location failed: {0}")]
    Zeros(DegreeError),
}

pub(crate) type V4 = [f64; 4];

pub(crate) fn axpy(a: f64, x: &V4, y: &V4) -> V4 {
    std::array::from_fn(|i| a * x[i] + y[i])
}

pub(crate) fn sub4(x: &V4, y: &V4) -> V4 {
    std::array::from_fn(|i| x[i] - y[i])
}

pub(crate) fn norm4(x: &V4) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot4(x: &V4, y: &V4) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Real 4-vector of a pair of complex coordinates `(x1 + i x2, x3 + i x4)`.
pub(crate) fn real4(w: [C; 2]) -> V4 {
    [w[0].re, w[0].im, w[1].re, w[1].im]
}

pub(crate) fn complex2(x: &V4) -> [C; 2] {
    [C::new(x[0], x[1]), C::new(x[2], x[3])]
}
