//! Planar Cauchy-Riemann machinery on disks: the Cauchy transform, residuals
//! of `dbar v + C1 v + C2 conj(v) = 0`, the similarity factorization
//! `v = Phi sigma` and Laurent-coefficient extension across a puncture.

mod cauchy;
mod grid;
mod hartogs;

pub use cauchy::{cauchy_transform, transform_residual, CauchyOperator};
pub use grid::{bin_of_mode, mode_of_bin, PlanarField, PolarGrid};
pub(crate) use grid::lagrange_weights;
pub use hartogs::{hartogs_extend, holomorphy_residual, laurent_coefficients, HartogsOptions, HartogsReport, LaurentOptions};

use num_complex::Complex64 as C;

/// Precondition on `cr_residual` for the factorization.
pub const CR_RESIDUAL_PRECONDITION: f64 = 1e-3;
/// `|v|` below this fraction of `sup |v|` counts as a zero of `v`.
pub const NEAR_ZERO_FRACTION: f64 = 1e-8;
/// `Phi` with grid modulus below this is treated as vanishing.
pub const PHI_FLOOR: f64 = 1e-8;
/// Relative `dbar sigma` tolerance of an accepted factorization.
pub const SIGMA_RESIDUAL: f64 = 1e-3;
/// Cauchy transforms are accepted at this relative `dbar` residual.
pub const TRANSFORM_RESIDUAL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CrError {
    #[error("Cauchy transform residual {residual:.3e} at {at}")]
    Quadrature { residual: f64, at: C },
    #[error("CR residual {residual:.3e} exceeds the precondition {CR_RESIDUAL_PRECONDITION:.0e}")]
    ResidualPrecondition { residual: f64 },
    #[error("field vanishes identically")]
    ZeroField,
    #[error("Phi modulus {min:.3e} below the floor at {at}")]
    PhiVanishes { min: f64, at: C },
    #[error("dbar sigma residual {residual:.3e} not reached for any delta >= {delta_floor:.3e}")]
    SigmaResidual { residual: f64, delta_floor: f64 },
    #[error("slice not holomorphic: residual {residual:.3e} at xi = {xi}, w = {w}")]
    NotHolomorphic { residual: f64, xi: C, w: C },
    #[error("Laurent coefficient a_{j} = {magnitude:.3e} at w = {w} does not vanish")]
    NonRemovable { j: i32, magnitude: f64, w: C },
    #[error("a_0 is not holomorphic in w: |dbar_w a_0| = {residual:.3e} at w = {w}")]
    NotHolomorphicInW { residual: f64, w: C },
}

/// Coefficients of `dbar v + C1 v + C2 conj(v) = 0` on a common grid.
#[derive(Debug, Clone)]
pub struct CRSystem {
    pub c1: PlanarField,
    pub c2: PlanarField,
}

impl CRSystem {
    pub fn new(c1: PlanarField, c2: PlanarField) -> Self {
        assert_eq!(c1.grid(), c2.grid(), "coefficients on different grids");
        CRSystem { c1, c2 }
    }

    pub fn from_fns(grid: PolarGrid, c1: impl Fn(C) -> C, c2: impl Fn(C) -> C) -> Self {
        Self::new(PlanarField::from_fn(grid, c1), PlanarField::from_fn(grid, c2))
    }

    pub fn zero(grid: PolarGrid) -> Self {
        Self::new(PlanarField::zeros(grid), PlanarField::zeros(grid))
    }

    pub fn rho(&self) -> f64 {
        self.c1.grid().rho
    }

    pub fn sup_norms(&self) -> (f64, f64) {
        (self.c1.sup_norm(), self.c2.sup_norm())
    }
}

/// `sup |dbar v + C1 v + C2 conj(v)| / sup |v|` on the grid.
pub fn cr_residual(v: &PlanarField, sys: &CRSystem) -> f64 {
    let r = v.dbar();
    let mut worst: f64 = 0.0;
    for (i, rv) in r.values().iter().enumerate() {
        let (vv, c1, c2) = (v.values()[i], sys.c1.values()[i], sys.c2.values()[i]);
        worst = worst.max((rv + c1 * vv + c2 * vv.conj()).norm());
    }
    worst / v.sup_norm().max(f64::MIN_POSITIVE)
}

/// `Tf` together with its acceptance check.
pub fn cauchy_transform_checked(f: &PlanarField) -> Result<PlanarField, CrError> {
    let tf = cauchy_transform(f);
    let (residual, at) = transform_residual(&tf, f);
    if residual > TRANSFORM_RESIDUAL {
        return Err(CrError::Quadrature { residual, at });
    }
    Ok(tf)
}

/// Result of [`carleman_factor`]: `v = Phi sigma` on `B_delta`.
#[derive(Debug, Clone)]
pub struct Carleman {
    pub phi: PlanarField,
    pub sigma: PlanarField,
    pub delta: f64,
    pub input_residual: f64,
    pub sigma_residual: f64,
    pub min_abs_phi: f64,
    pub a_sup: f64,
}

/// Factor a solution `v` of the CR system as `Phi sigma` with `Phi` nowhere
/// zero and `sigma` holomorphic near the centre.
///
/// With `A = C1 + C2 conj(v)/v` the field `v` solves `dbar v = -A v`, so
/// `Phi = exp(-T A)` and `sigma = v / Phi`. Where `|v|` is below
/// [`NEAR_ZERO_FRACTION`] of its sup the unit factor is taken from the
/// nearest grid point above that threshold.
pub fn carleman_factor(v: &PlanarField, sys: &CRSystem) -> Result<Carleman, CrError> {
    let input_residual = cr_residual(v, sys);
    if !(input_residual <= CR_RESIDUAL_PRECONDITION) {
        return Err(CrError::ResidualPrecondition { residual: input_residual });
    }
    let vmax = v.sup_norm();
    if vmax == 0.0 {
        return Err(CrError::ZeroField);
    }
    let g = *v.grid();
    let threshold = NEAR_ZERO_FRACTION * vmax;
    let good: Vec<(C, C)> = (0..g.n_r)
        .flat_map(|j| (0..g.n_theta).map(move |l| (j, l)))
        .filter(|&(j, l)| v.at(j, l).norm() > threshold)
        .map(|(j, l)| (g.point(j, l), v.at(j, l).conj() / v.at(j, l)))
        .collect();
    let unit = v.map_with_point(|z, val| {
        if val.norm() > threshold {
            val.conj() / val
        } else {
            good.iter().min_by(|a, b| (a.0 - z).norm().total_cmp(&(b.0 - z).norm())).map(|p| p.1).unwrap()
        }
    });
    let a = PlanarField::new(
        g,
        (0..g.len()).map(|i| sys.c1.values()[i] + sys.c2.values()[i] * unit.values()[i]).collect(),
    );
    let phi_full = cauchy_transform(&a).map(|t| (-t).exp());

    let delta_floor = g.rho / 16.0;
    let mut delta = g.rho / 2.0;
    let mut last = f64::INFINITY;
    while delta >= delta_floor * (1.0 - 1e-12) {
        let gd = g.rescaled(delta);
        let phi = phi_full.resample(gd);
        let (min_abs_phi, at) = phi.min_abs();
        if min_abs_phi < PHI_FLOOR {
            return Err(CrError::PhiVanishes { min: min_abs_phi, at });
        }
        let sigma = PlanarField::from_fn(gd, |z| v.eval(z)).zip_map(&phi, |vv, p| vv / p);
        let sigma_residual = sigma.dbar().sup_norm() / sigma.sup_norm().max(f64::MIN_POSITIVE);
        if sigma_residual <= SIGMA_RESIDUAL {
            return Ok(Carleman { phi, sigma, delta, input_residual, sigma_residual, min_abs_phi, a_sup: a.sup_norm() });
        }
        last = sigma_residual;
        delta /= 2.0;
    }
    Err(CrError::SigmaResidual { residual: last, delta_floor })
}
