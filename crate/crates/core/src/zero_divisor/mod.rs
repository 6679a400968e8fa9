//! The zero set `Z` of a closed anti-invariant form: intersection indices
//! of disks with `Z`, checks of the axioms of a positive cohomology
//! assignment, continuation of `Z` inside a box and box counting.
//!
//! Along a map into `R^4` the form is written `alpha = f phi + g psi` in the
//! frame of [`anti_frame`](crate::forms::anti_frame) built from a constant
//! seed (`phi0 = dx13 - dx24` by default), so `Z` is the zero set of
//! `(f, g)`.

mod index;
mod trace;

pub use index::{intersection_index, pca_axiom_suite, IntersectionReport, LocalIndex, PcaInputs, SectionMap, TestDisk};
pub use trace::{
    box_counts, box_dimension, interior_emptiness_check, trace_zero_set, write_box_counts_csv, write_points_csv, BoxCount, BoxDimension,
    EmptinessReport, Segment, TraceOptions, ZeroPoint, ZeroSetSample,
};

use crate::degree::DegreeError;
use crate::forms::{anti_frame, frame_coefficients, AlmostComplexStructure, FormsError, Jet, TwoForm};
use crate::linalg::{self, Mat4};

/// `|alpha|` at or below this counts as a zero.
pub const ZERO_TOL: f64 = 1e-7;
/// A form is trivial when `|alpha|` never exceeds this on the sample.
pub const NONTRIVIAL_TOL: f64 = 1e-6;
/// Smallest accepted Gram determinant of the seed frame.
pub const GRAM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ZeroDivisorError {
    #[error("disk is not admissible: {0}")]
    Admissibility(DegreeError),
    #[error("local index computation failed: {0}")]
    Local(DegreeError),
    #[error("seed frame degenerates: Gram determinant {det:.3e}")]
    Frame { det: f64 },
    #[error("form is not closed: |d alpha| = {residual:.3e}")]
    NotClosed { residual: f64 },
    #[error("form is not anti-invariant: residual {residual:.3e}")]
    NotAntiInvariant { residual: f64 },
    #[error("form is trivial on the sample: max |alpha| = {max:.3e}")]
    Trivial { max: f64 },
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error("box-count ladder has {levels} usable levels, need at least 3")]
    DegenerateLadder { levels: usize },
}

impl From<DegreeError> for ZeroDivisorError {
    fn from(e: DegreeError) -> Self {
        ZeroDivisorError::Admissibility(e)
    }
}

pub(crate) type V4 = [f64; 4];

/// The default seed `phi0 = dx13 - dx24`.
pub const DEFAULT_SEED: [f64; 6] = [0.0, 1.0, 0.0, 0.0, -1.0, 0.0];

/// Frame coefficients `(f, g)` of `alpha` at `x` as jets, with the Gram
/// determinant of the frame.
pub(crate) fn section_jets(alpha: &TwoForm, j: &AlmostComplexStructure, seed: &Mat4, x: &V4) -> (Jet, Jet, f64) {
    let (phi, psi) = anti_frame(&j.jet_at(x), seed);
    let dot = |a: &[Jet; 6], b: &[Jet; 6]| -> f64 { (0..6).map(|k| a[k].v * b[k].v).sum() };
    let gram = dot(&phi, &phi) * dot(&psi, &psi) - dot(&phi, &psi).powi(2);
    let (f, g) = frame_coefficients(&alpha.jet_at(x), &phi, &psi);
    (f, g, gram)
}

pub(crate) fn seed_matrix(seed: &[f64; 6]) -> Mat4 {
    linalg::skew_from_coeffs(seed)
}

/// Euclidean norm of the six coefficients of `alpha` at `x`.
pub fn pointwise_norm(alpha: &TwoForm, x: &V4) -> f64 {
    linalg::norm(&alpha.at(x))
}
