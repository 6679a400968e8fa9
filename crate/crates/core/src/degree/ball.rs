//! Degree of admissible maps `B^n -> R^n`, `n in {2, 3}`, by perturbation and
//! signed-Jacobian counting (no winding shortcut in dimension 3).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use super::{perturb_sign_count, winding_degree, DegreeError, Disk2, PlanarMap, DET_TOL, LIPSCHITZ_SAFETY, MAX_SEEDS, MERGE_TOL, PERTURBATION_FRACTION, ZERO_TOL};

/// A map `R^n -> R^n` given by a closure.
pub struct BallMap<'a> {
    pub dim: usize,
    f: Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>,
}

impl<'a> BallMap<'a> {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> Vec<f64> + 'a) -> Self {
        BallMap { dim, f: Box::new(f) }
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let h = 1e-6;
        let mut j = DMatrix::zeros(n, n);
        for c in 0..n {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[c] += h;
            b[c] -= h;
            let (fa, fb) = (self.value(&a), self.value(&b));
            for r in 0..n {
                j[(r, c)] = (fa[r] - fb[r]) / (2.0 * h);
            }
        }
        j
    }
}

impl PlanarMap for BallMap<'_> {
    fn value(&self, p: [f64; 2]) -> [f64; 2] {
        let v = BallMap::value(self, &p);
        [v[0], v[1]]
    }
}

/// Result of [`degree_ball_n`].
#[derive(Debug, Clone, PartialEq)]
pub struct BallDegree {
    pub degree: i64,
    pub n_zeros: usize,
    pub margin: f64,
    pub delta: f64,
    pub seed: u64,
    /// Winding number cross-check (dimension 2 only).
    pub winding: Option<i64>,
}

fn sphere_margin(u: &BallMap) -> (f64, f64, f64) {
    let (n_lat, n_lon) = (64usize, 128usize);
    let point = |i: usize, k: usize| {
        let th = PI * i as f64 / n_lat as f64;
        let ph = 2.0 * PI * k as f64 / n_lon as f64;
        [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
    };
    let vals: Vec<Vec<Vec<f64>>> = (0..=n_lat).map(|i| (0..n_lon).map(|k| u.value(&point(i, k))).collect()).collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let mut min_abs = f64::INFINITY;
    let mut quot: f64 = 0.0;
    let mut edge: f64 = 0.0;
    for i in 0..=n_lat {
        for k in 0..n_lon {
            min_abs = min_abs.min(vals[i][k].iter().map(|x| x * x).sum::<f64>().sqrt());
            let mut nbrs = vec![(i, (k + 1) % n_lon)];
            if i < n_lat {
                nbrs.push((i + 1, k));
            }
            for (a, b) in nbrs {
                let d = dist(&point(i, k), &point(a, b));
                if d > 0.0 {
                    edge = edge.max(d);
                    quot = quot.max(dist(&vals[i][k], &vals[a][b]) / d);
                }
            }
        }
    }
    let lipschitz = LIPSCHITZ_SAFETY * quot;
    (min_abs - lipschitz * edge, min_abs, lipschitz)
}

/// Degree of `u` on the closed unit ball of dimension `u.dim`.
pub fn degree_ball_n(u: &BallMap, seed: u64) -> Result<BallDegree, DegreeError> {
    match u.dim {
        2 => {
            let count = perturb_sign_count(u, &Disk2::UNIT, seed)?;
            let w = winding_degree(u, &Disk2::UNIT)?;
            if w.degree != count.total {
                return Err(DegreeError::Inconsistent { winding: w.degree, count: count.total });
            }
            Ok(BallDegree {
                degree: count.total,
                n_zeros: count.zeros.len(),
                margin: w.margin,
                delta: count.delta,
                seed: count.seed,
                winding: Some(w.degree),
            })
        }
        3 => degree_ball_3(u, seed),
        n => Err(DegreeError::Dimension(n)),
    }
}

fn degree_ball_3(u: &BallMap, seed: u64) -> Result<BallDegree, DegreeError> {
    let (margin, min_abs, lipschitz) = sphere_margin(u);
    if !(margin > 0.0) {
        return Err(DegreeError::NotAdmissible { margin, min_abs, lipschitz });
    }
    let delta = PERTURBATION_FRACTION * margin;
    'seeds: for attempt in 0..MAX_SEEDS {
        let s = seed.wrapping_add(attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let scale = delta / (a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.norm());
        let pert = |x: &[f64]| -> Vec<f64> {
            let v = u.value(x);
            (0..3).map(|r| v[r] + scale * (a[r] + (0..3).map(|c| b[(r, c)] * x[c]).sum::<f64>())).collect()
        };
        let jac = |x: &[f64]| u.jacobian(x) + &b * scale;
        let grid = 40usize;
        let h = 2.0 / grid as f64;
        let node = |i: usize| -1.0 + i as f64 * h;
        let vals: Vec<Vec<f64>> = (0..(grid + 1).pow(3))
            .map(|idx| {
                let (i, j, k) = (idx / ((grid + 1) * (grid + 1)), (idx / (grid + 1)) % (grid + 1), idx % (grid + 1));
                pert(&[node(i), node(j), node(k)])
            })
            .collect();
        let at = |i: usize, j: usize, k: usize| &vals[(i * (grid + 1) + j) * (grid + 1) + k];
        let mut zeros: Vec<(Vec<f64>, f64)> = Vec::new();
        for i in 0..grid {
            for j in 0..grid {
                for k in 0..grid {
                    let corners: Vec<&Vec<f64>> =
                        (0..8).map(|m| at(i + (m & 1), j + ((m >> 1) & 1), k + ((m >> 2) & 1))).collect();
                    let straddles = (0..3).all(|c| {
                        corners.iter().any(|v| v[c] <= 0.0) && corners.iter().any(|v| v[c] >= 0.0)
                    });
                    if !straddles {
                        continue;
                    }
                    let start = [node(i) + 0.5 * h, node(j) + 0.5 * h, node(k) + 0.5 * h];
                    let Some(z) = newton_n(&pert, &jac, &start) else { continue };
                    if z.iter().map(|x| x * x).sum::<f64>() >= 1.0 {
                        continue;
                    }
                    if zeros.iter().any(|(w, _)| w.iter().zip(&z).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() < MERGE_TOL) {
                        continue;
                    }
                    let det = jac(&z).determinant();
                    if det.abs() <= DET_TOL {
                        continue 'seeds;
                    }
                    zeros.push((z, det));
                }
            }
        }
        let degree = zeros.iter().map(|(_, d)| d.signum() as i64).sum();
        return Ok(BallDegree { degree, n_zeros: zeros.len(), margin, delta, seed: s, winding: None });
    }
    Err(DegreeError::Degenerate { attempts: MAX_SEEDS })
}

fn newton_n(f: &dyn Fn(&[f64]) -> Vec<f64>, jac: &dyn Fn(&[f64]) -> DMatrix<f64>, start: &[f64]) -> Option<Vec<f64>> {
    let mut x = start.to_vec();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut v = f(&x);
    for _ in 0..60 {
        if norm(&v) <= 1e-14 {
            break;
        }
        let step = jac(&x).lu().solve(&DVector::from_vec(v.clone()))?;
        let mut t = 1.0;
        loop {
            let y: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a - t * d).collect();
            let w = f(&y);
            if norm(&w) < norm(&v) || t < 1e-4 {
                x = y;
                v = w;
                break;
            }
            t *= 0.5;
        }
        if step.norm() * t < 1e-15 {
            break;
        }
    }
    (norm(&v) <= ZERO_TOL).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_reflection_in_dimension_three() {
        let id = BallMap::new(3, |x| x.to_vec());
        assert_eq!(degree_ball_n(&id, 0).unwrap().degree, 1);
        let refl = BallMap::new(3, |x| vec![x[0], x[1], -x[2]]);
        assert_eq!(degree_ball_n(&refl, 0).unwrap().degree, -1);
    }

    #[test]
    fn cubic_in_dimension_two_agrees_with_winding() {
        let cube = BallMap::new(2, |x| {
            let z = num_complex::Complex64::new(x[0], x[1]).powi(3);
            vec![z.re, z.im]
        });
        let d = degree_ball_n(&cube, 0).unwrap();
        assert_eq!((d.degree, d.winding), (3, Some(3)));
    }

    #[test]
    fn quadratic_map_of_three_space() {
        // (z^2 - 1/4, x3) has two holomorphic zeros at (+-1/2, 0, 0); the
        // conjugate has two antiholomorphic ones.
        let q = BallMap::new(3, |x| vec![x[0] * x[0] - x[1] * x[1] - 0.25, 2.0 * x[0] * x[1], x[2]]);
        let d = degree_ball_n(&q, 1).unwrap();
        assert_eq!((d.degree, d.n_zeros), (2, 2));
        let qbar = BallMap::new(3, |x| vec![x[0] * x[0] - x[1] * x[1] - 0.25, -2.0 * x[0] * x[1], x[2]]);
        assert_eq!(degree_ball_n(&qbar, 1).unwrap().degree, -2);
        assert!(degree_ball_n(&BallMap::new(4, |x| x.to_vec()), 0).is_err());
    }
}
