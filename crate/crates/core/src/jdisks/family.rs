//! Families of J-holomorphic disks `Q(D_w)` through the points
//! `x0 + Re(w) f + Im(w) J(x0) f`, all tangent to the same complex direction.

use num_complex::Complex64 as C;

use super::disk::{frame_with, st_derivatives};
use super::{complex2, norm4, real4, sub4, solve_disk, Disk, DiskOptions, JDiskError, V4};
use crate::cr_solver::{lagrange_weights, PlanarField};
use crate::forms::AlmostComplexStructure;
use crate::linalg::{self, Mat4};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyOptions {
    /// The `w` lattice has `n_w x n_w` nodes on `[-w_radius, w_radius]^2`.
    pub n_w: usize,
    /// Defaults to the disk radius when `None`.
    pub w_radius: Option<f64>,
    pub disk: DiskOptions,
    /// Smallest accepted `det DQ / det DL` on the sample.
    pub min_jacobian: f64,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        FamilyOptions { n_w: 17, w_radius: None, disk: DiskOptions::coarse(), min_jacobian: 0.1 }
    }
}

#[derive(Debug, Clone)]
struct Member {
    disk: Disk,
    ds: [PlanarField; 2],
    dt: [PlanarField; 2],
}

fn field_pair(grid: crate::cr_solver::PolarGrid, v: &[V4]) -> [PlanarField; 2] {
    let c: Vec<[C; 2]> = v.iter().map(complex2).collect();
    [PlanarField::new(grid, c.iter().map(|p| p[0]).collect()), PlanarField::new(grid, c.iter().map(|p| p[1]).collect())]
}

/// A map `Q(xi, w)` whose slices `xi -> Q(xi, w)` are embedded J-holomorphic
/// disks with `Q(0, w) = L(0, w)`, interpolated bicubically in `w`.
#[derive(Debug, Clone)]
pub struct FibreFamily {
    pub center: V4,
    pub kappa: [C; 2],
    /// Columns `e, J e, f, J f` at the centre; `L(xi, w) = x0 + P (xi, w)`.
    pub frame: Mat4,
    pub rho: f64,
    pub w_radius: f64,
    pub n_w: usize,
    /// Closeness constant: `|L(xi, w) - Q(xi, w)| <= z rho |xi|` on the grid.
    pub z: f64,
    /// Adjacent-disk modulus: `sup |Q(., w) - Q(., w')| <= z_m |w - w'|`.
    pub z_m: f64,
    /// Smallest sampled `det DQ / det P`.
    pub min_jacobian: f64,
    pub max_residual: f64,
    members: Vec<Member>,
}

impl FibreFamily {
    fn spacing(&self) -> f64 {
        2.0 * self.w_radius / (self.n_w - 1) as f64
    }

    pub fn node(&self, a: usize, b: usize) -> C {
        let h = self.spacing();
        C::new(-self.w_radius + a as f64 * h, -self.w_radius + b as f64 * h)
    }

    pub fn member(&self, a: usize, b: usize) -> &Disk {
        &self.members[a * self.n_w + b].disk
    }

    pub fn members(&self) -> impl Iterator<Item = &Disk> {
        self.members.iter().map(|m| &m.disk)
    }

    /// `L(xi, w)`.
    pub fn linear(&self, xi: C, w: C) -> V4 {
        let y = [xi.re, xi.im, w.re, w.im];
        std::array::from_fn(|r| self.center[r] + (0..4).map(|c| self.frame[r][c] * y[c]).sum::<f64>())
    }

    fn stencil(&self, x: f64) -> (usize, Vec<f64>) {
        let h = self.spacing();
        let t = (x + self.w_radius) / h;
        let i0 = ((t.floor() as i64) - 1).clamp(0, self.n_w as i64 - 4) as usize;
        let nodes: Vec<f64> = (i0..i0 + 4).map(|i| i as f64).collect();
        (i0, lagrange_weights(&nodes, t))
    }

    fn blend(&self, w: C, f: impl Fn(&Member) -> V4) -> V4 {
        let (a0, wa) = self.stencil(w.re);
        let (b0, wb) = self.stencil(w.im);
        let mut out = [0.0; 4];
        for (ia, ca) in wa.iter().enumerate() {
            for (ib, cb) in wb.iter().enumerate() {
                let v = f(&self.members[(a0 + ia) * self.n_w + b0 + ib]);
                for k in 0..4 {
                    out[k] += ca * cb * v[k];
                }
            }
        }
        out
    }

    pub fn q(&self, xi: C, w: C) -> V4 {
        self.blend(w, |m| m.disk.eval(xi))
    }

    /// `(d Q / d Re xi, d Q / d Im xi)`.
    pub fn q_xi(&self, xi: C, w: C) -> (V4, V4) {
        let ev = |f: &[PlanarField; 2]| real4([f[0].eval(xi), f[1].eval(xi)]);
        (self.blend(w, |m| ev(&m.ds)), self.blend(w, |m| ev(&m.dt)))
    }

    /// Finite-difference `(d Q / d Re w, d Q / d Im w)`.
    pub fn q_w(&self, xi: C, w: C) -> (V4, V4) {
        let h = 1e-4 * self.spacing();
        let d = |dir: C| {
            let a = self.q(xi, w + dir * h);
            let b = self.q(xi, w - dir * h);
            std::array::from_fn(|k| (a[k] - b[k]) / (2.0 * h))
        };
        (d(C::new(1.0, 0.0)), d(C::new(0.0, 1.0)))
    }

    pub fn jacobian(&self, xi: C, w: C) -> Mat4 {
        let (a, b) = self.q_xi(xi, w);
        let (c, d) = self.q_w(xi, w);
        std::array::from_fn(|r| [a[r], b[r], c[r], d[r]])
    }
}

/// Hermitian-orthogonal complex direction to `kappa`.
pub(crate) fn orthogonal_direction(kappa: [C; 2]) -> [C; 2] {
    [-kappa[1].conj(), kappa[0].conj()]
}

/// Solve the family of disks tangent to `kappa` through the points
/// `L(0, w)` for `w` on the lattice.
pub fn fibre_family(j: &AlmostComplexStructure, x0: &V4, kappa: [C; 2], rho: f64, opts: &FamilyOptions) -> Result<FibreFamily, JDiskError> {
    assert!(opts.n_w >= 4, "bicubic interpolation needs at least 4 nodes per axis");
    let central = solve_disk(j, x0, kappa, rho, &opts.disk)?;
    let rho = central.rho;
    let frame = frame_with(&j.at(x0), kappa, Some(real4(orthogonal_direction(kappa))))?;
    let w_radius = opts.w_radius.unwrap_or(rho);
    let member_opts = DiskOptions { max_halvings: 0, ..opts.disk };
    let mut family = FibreFamily {
        center: *x0,
        kappa,
        frame,
        rho,
        w_radius,
        n_w: opts.n_w,
        z: 0.0,
        z_m: 0.0,
        min_jacobian: f64::INFINITY,
        max_residual: 0.0,
        members: Vec::with_capacity(opts.n_w * opts.n_w),
    };
    for a in 0..opts.n_w {
        for b in 0..opts.n_w {
            let w = family.node(a, b);
            let x = family.linear(C::new(0.0, 0.0), w);
            let disk = solve_disk(j, &x, kappa, rho, &member_opts).map_err(|e| JDiskError::Family { w, reason: e.to_string() })?;
            let (ds, dt) = st_derivatives(&disk.w);
            let g = *disk.grid();
            family.max_residual = family.max_residual.max(disk.residual);
            family.members.push(Member { ds: field_pair(g, &ds), dt: field_pair(g, &dt), disk });
        }
    }

    for a in 0..opts.n_w {
        for b in 0..opts.n_w {
            let w = family.node(a, b);
            let m = &family.members[a * opts.n_w + b].disk;
            let g = *m.grid();
            for jr in 0..g.n_r {
                for l in 0..g.n_theta {
                    let xi = g.point(jr, l);
                    let d = norm4(&sub4(&family.linear(xi, w), &m.point(g.index(jr, l))));
                    family.z = family.z.max(d / (rho * xi.norm()));
                }
            }
            for (na, nb) in [(a + 1, b), (a, b + 1)] {
                if na < opts.n_w && nb < opts.n_w {
                    let other = &family.members[na * opts.n_w + nb].disk;
                    let sup = (0..g.len()).map(|i| norm4(&sub4(&m.point(i), &other.point(i)))).fold(0.0, f64::max);
                    family.z_m = family.z_m.max(sup / family.spacing());
                }
            }
        }
    }

    let det0 = linalg::det(&frame);
    let step = (opts.n_w / 4).max(1);
    let interior = 1..opts.n_w - 1;
    for a in interior.clone().step_by(step) {
        for b in interior.clone().step_by(step) {
            let w = family.node(a, b);
            for q in 0..4 {
                let r = 0.8 * rho * q as f64 / 3.0;
                let n_ang = if q == 0 { 1 } else { 8 };
                for k in 0..n_ang {
                    let xi = C::from_polar(r, std::f64::consts::TAU * k as f64 / n_ang as f64);
                    let ratio = linalg::det(&family.jacobian(xi, w)) / det0;
                    family.min_jacobian = family.min_jacobian.min(ratio);
                }
            }
        }
    }
    if !(family.min_jacobian > opts.min_jacobian) {
        return Err(JDiskError::Family {
            w: C::new(0.0, 0.0),
            reason: format!("Jacobian ratio {:.3e} below {:.1e}", family.min_jacobian, opts.min_jacobian),
        });
    }
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::shear_structure;
    use crate::forms::Domain;

    fn small() -> FamilyOptions {
        FamilyOptions { n_w: 5, ..FamilyOptions::default() }
    }

    #[test]
    fn standard_structure_gives_identity() {
        let j = AlmostComplexStructure::standard(Domain::cube(1.0));
        let f = fibre_family(&j, &[0.0; 4], [C::new(1.0, 0.0), C::new(0.0, 0.0)], 0.2, &small()).unwrap();
        assert!(f.z < 1e-12, "{}", f.z);
        let p = [C::new(0.05, -0.1), C::new(0.1, 0.07)];
        let q = f.q(p[0], p[1]);
        assert!(norm4(&sub4(&q, &real4(p))) < 1e-12);
        assert!((f.min_jacobian - 1.0).abs() < 1e-6);
        assert!((f.z_m - 1.0).abs() < 1e-9);
    }

    #[test]
    fn perturbed_family_is_close_to_linear() {
        let j = shear_structure(0.05, Domain::cube(1.0));
        let f = fibre_family(&j, &[0.0; 4], [C::new(1.0, 0.0), C::new(0.0, 0.0)], 0.1, &small()).unwrap();
        assert!(f.max_residual <= 1e-6);
        assert!(f.z <= 1.0, "{}", f.z);
        assert!(f.min_jacobian > 0.5);
        // Regression value for rho = w_radius = 0.1.
        assert!((f.z - 0.1200).abs() < 1e-3, "{}", f.z);
    }

    #[test]
    fn rotated_direction_family() {
        let j = shear_structure(0.05, Domain::cube(1.0));
        let kappa = [C::new(0.6, 0.0), C::new(0.0, 0.8)];
        let f = fibre_family(&j, &[0.05, 0.0, -0.05, 0.0], kappa, 0.1, &small()).unwrap();
        assert!(f.max_residual <= 1e-6);
        assert!(f.z <= 1.0);
        for d in f.members() {
            assert!(d.separation > 1e-2);
        }
    }
}
