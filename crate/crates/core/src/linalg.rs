//! Small dense 4x4 helpers; heavier factorizations go through nalgebra.

use nalgebra::{Matrix4, SymmetricEigen};

pub type Mat4 = [[f64; 4]; 4];

/// Standard structure: block-diag(rot90, rot90) with `J0 e1 = e2`, `J0 e3 = e4`.
pub const J0: Mat4 = [[0.0, -1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, -1.0], [0.0, 0.0, 1.0, 0.0]];

pub fn identity() -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
}

pub fn mul(a: &Mat4, b: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

pub fn mul_vec(a: &Mat4, v: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| (0..4).map(|k| a[i][k] * v[k]).sum())
}

pub fn add(a: &Mat4, b: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] + b[i][j]))
}

pub fn sub(a: &Mat4, b: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] - b[i][j]))
}

pub fn scale(a: &Mat4, s: f64) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] * s))
}

pub fn transpose(a: &Mat4) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

pub fn max_abs(a: &Mat4) -> f64 {
    a.iter().flatten().fold(0.0, |m: f64, v| if v.abs() > m || v.is_nan() { v.abs() } else { m })
}

/// `J^T A J`: matrix of `(u, v) -> A(J u, J v)`.
pub fn pullback(a: &Mat4, j: &Mat4) -> Mat4 {
    mul(&transpose(j), &mul(a, j))
}

fn to_na(a: &Mat4) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| a[i][j])
}

pub fn inverse(a: &Mat4) -> Option<Mat4> {
    let inv = to_na(a).try_inverse()?;
    Some(std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)])))
}

pub fn det(a: &Mat4) -> f64 {
    to_na(a).determinant()
}

pub fn min_sym_eigenvalue(a: &Mat4) -> f64 {
    let s = to_na(a);
    let sym = (s + s.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn skew_from_coeffs(c: &[f64; 6]) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (k, &(i, j)) in crate::forms::PAIRS.iter().enumerate() {
        m[i][j] = c[k];
        m[j][i] = -c[k];
    }
    m
}

pub fn coeffs_from_skew(m: &Mat4) -> [f64; 6] {
    crate::forms::PAIRS.map(|(i, j)| m[i][j])
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn levi_civita(p: [usize; 4]) -> f64 {
    let mut sign = 1.0;
    let mut q = p;
    for i in 0..4 {
        if q[i] >= 4 {
            return 0.0;
        }
        for j in (i + 1)..4 {
            if q[i] == q[j] {
                return 0.0;
            }
        }
    }
    for i in 0..4 {
        while q[i] != i {
            let t = q[i];
            q.swap(i, t);
            sign = -sign;
        }
    }
    sign
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_squares_to_minus_identity() {
        assert_eq!(mul(&J0, &J0), scale(&identity(), -1.0));
    }

    #[test]
    fn levi_civita_signs() {
        assert_eq!(levi_civita([0, 1, 2, 3]), 1.0);
        assert_eq!(levi_civita([1, 0, 2, 3]), -1.0);
        assert_eq!(levi_civita([1, 2, 3, 0]), -1.0);
        assert_eq!(levi_civita([0, 0, 2, 3]), 0.0);
    }
}
