//! Dense helpers for the tiny matrices (dim <= 4 or so) this crate works with.
//!
//! Everything is generic over [`Scalar`] so the same Gauss elimination runs on
//! plain values and on jets; pivot selection always compares point values.

use crate::jet::Scalar;

pub type Mat<S> = Vec<Vec<S>>;

pub fn mat_zero<S: Scalar>(shape: &S, n: usize, m: usize) -> Mat<S> {
    vec![vec![shape.lit(0.0); m]; n]
}

pub fn mat_vec<S: Scalar>(a: &Mat<S>, v: &[S]) -> Vec<S> {
    a.iter()
        .map(|row| {
            let mut acc = row[0].clone() * v[0].clone();
            for (x, y) in row.iter().zip(v).skip(1) {
                acc = acc + x.clone() * y.clone();
            }
            acc
        })
        .collect()
}

pub fn mat_mul<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Mat<S> {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut out = mat_zero(&a[0][0], n, m);
    for i in 0..n {
        for j in 0..m {
            let mut acc = a[i][0].clone() * b[0][j].clone();
            for l in 1..k {
                acc = acc + a[i][l].clone() * b[l][j].clone();
            }
            out[i][j] = acc;
        }
    }
    out
}

pub fn transpose<S: Clone>(a: &Mat<S>) -> Mat<S> {
    let n = a.len();
    let m = a[0].len();
    (0..m)
        .map(|j| (0..n).map(|i| a[i][j].clone()).collect())
        .collect()
}

pub fn dot<S: Scalar>(u: &[S], v: &[S]) -> S {
    let mut acc = u[0].clone() * v[0].clone();
    for (x, y) in u.iter().zip(v).skip(1) {
        acc = acc + x.clone() * y.clone();
    }
    acc
}

/// Determinant by LU elimination with partial pivoting on point values.
pub fn det<S: Scalar>(a: &Mat<S>) -> S {
    let n = a.len();
    let mut m: Mat<S> = a.to_vec();
    let mut sign = 1.0;
    let mut result = a[0][0].lit(1.0);
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| {
                m[i][k]
                    .val()
                    .abs()
                    .partial_cmp(&m[j][k].val().abs())
                    .unwrap()
            })
            .unwrap();
        if piv != k {
            m.swap(k, piv);
            sign = -sign;
        }
        if m[k][k].val() == 0.0 {
            return a[0][0].lit(0.0);
        }
        result = result * m[k][k].clone();
        for i in (k + 1)..n {
            let f = m[i][k].clone() / m[k][k].clone();
            for j in k..n {
                m[i][j] = m[i][j].clone() - f.clone() * m[k][j].clone();
            }
        }
    }
    result.scale(sign)
}

/// Inverse by Gauss-Jordan; fails when a pivot falls below `tol` in value.
pub fn inverse<S: Scalar>(a: &Mat<S>, tol: f64) -> Option<Mat<S>> {
    let n = a.len();
    let mut m: Mat<S> = a.to_vec();
    let mut inv = mat_zero(&a[0][0], n, n);
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = a[0][0].lit(1.0);
    }
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| {
                m[i][k]
                    .val()
                    .abs()
                    .partial_cmp(&m[j][k].val().abs())
                    .unwrap()
            })
            .unwrap();
        if m[piv][k].val().abs() < tol {
            return None;
        }
        m.swap(k, piv);
        inv.swap(k, piv);
        let d = m[k][k].clone();
        for j in 0..n {
            m[k][j] = m[k][j].clone() / d.clone();
            inv[k][j] = inv[k][j].clone() / d.clone();
        }
        for i in 0..n {
            if i == k {
                continue;
            }
            let f = m[i][k].clone();
            if f.val() == 0.0 {
                continue;
            }
            for j in 0..n {
                m[i][j] = m[i][j].clone() - f.clone() * m[k][j].clone();
                inv[i][j] = inv[i][j].clone() - f.clone() * inv[k][j].clone();
            }
        }
    }
    Some(inv)
}

/// Solve `a x = b` for small symmetric positive-ish systems via the inverse.
pub fn solve<S: Scalar>(a: &Mat<S>, b: &[S], tol: f64) -> Option<Vec<S>> {
    inverse(a, tol).map(|inv| mat_vec(&inv, b))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet2;

    #[test]
    fn inverse_of_diag() {
        let a = vec![vec![2.0, 0.0], vec![0.0, -4.0]];
        let inv = inverse(&a, 1e-12).unwrap();
        assert!((inv[0][0] - 0.5).abs() < 1e-15);
        assert!((inv[1][1] + 0.25).abs() < 1e-15);
        assert!((det(&a) + 8.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_in_jets_differentiates() {
        // g(t) = [[1,0],[0,t]]; d/dt g^{-1}[1][1] = -1/t^2.
        let t0 = 2.0;
        let jt = Jet2::lift(0, &[t0]);
        let one = jt.lit(1.0);
        let zero = jt.lit(0.0);
        let g = vec![vec![one, zero.clone()], vec![zero, jt]];
        let inv = inverse(&g, 1e-12).unwrap();
        assert!((inv[1][1].value - 0.5).abs() < 1e-15);
        assert!((inv[1][1].grad[0] + 0.25).abs() < 1e-14);
        assert!((inv[1][1].hess(0, 0) - 0.25).abs() < 1e-13);
    }

    #[test]
    fn eigenvalues_of_indefinite_matrix() {
        let a = vec![
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 3.0],
        ];
        let e = sym_eigenvalues(&a);
        assert!((e[0] + 1.0).abs() < 1e-12);
        assert!((e[1] - 1.0).abs() < 1e-12);
        assert!((e[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_refused() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(inverse(&a, 1e-12).is_none());
    }
}
