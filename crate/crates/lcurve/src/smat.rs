//! Closed-form linear algebra for the 1x1..3x3 symmetric systems produced by
//! the weighted normal equations. A 3x3 is the largest matrix in the crate,
//! so explicit adjugate inverses with an eigenvalue-based conditioning check
//! beat any general-purpose solver on both dependencies and reproducibility.

use crate::error::{Error, Result};

/// Storage for a k x k matrix, k <= 3; only the leading k x k block is used.
pub(crate) type M3 = [[f64; 3]; 3];

pub(crate) const ZERO: M3 = [[0.0; 3]; 3];

/// Relative eigenvalue spread beyond which the normal equations are rejected.
const MAX_CONDITION: f64 = 1e12;

/// Eigenvalues of the leading k x k symmetric block, ascending.
///
/// k = 1 is trivial; k = 2 uses the quadratic formula; k = 3 uses the
/// trigonometric solution of the characteristic cubic, which is stable for
/// the symmetric case.
pub(crate) fn eigenvalues(k: usize, a: &M3) -> Vec<f64> {
    match k {
        1 => vec![a[0][0]],
        2 => {
            let half_tr = 0.5 * (a[0][0] + a[1][1]);
            let half_diff = 0.5 * (a[0][0] - a[1][1]);
            let r = (half_diff * half_diff + a[0][1] * a[0][1]).sqrt();
            vec![half_tr - r, half_tr + r]
        }
        3 => {
            let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
            let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
            let p2 = (a[0][0] - q) * (a[0][0] - q)
                + (a[1][1] - q) * (a[1][1] - q)
                + (a[2][2] - q) * (a[2][2] - q)
                + 2.0 * p1;
            if p2 <= 0.0 {
                // Scalar multiple of the identity (including the zero matrix).
                return vec![q, q, q];
            }
            let p = (p2 / 6.0).sqrt();
            let mut b = ZERO;
            for i in 0..3 {
                for j in 0..3 {
                    b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
                }
            }
            let r = (0.5 * det3(&b)).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
            let e2 = 3.0 * q - e1 - e3;
            let mut eigs = vec![e1, e2, e3];
            eigs.sort_by(f64::total_cmp);
            eigs
        }
        _ => unreachable!("matrix dimension {k} out of range"),
    }
}

fn det2(a: &M3) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

fn det3(a: &M3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Inverse of the leading k x k symmetric positive-definite block.
///
/// Rejects matrices whose eigenvalue ratio exceeds 1e12 (or that are not
/// positive definite at all), which covers every degenerate design: a single
/// distinct size, D < k, or near-collinear n^gamma and n^(2 gamma) columns.
pub(crate) fn invert_spd(k: usize, a: &M3) -> Result<M3> {
    let eigs = eigenvalues(k, a);
    let lambda_max = eigs[k - 1];
    let lambda_min = eigs[0];
    if !(lambda_max > 0.0) || lambda_min <= lambda_max / MAX_CONDITION {
        return Err(Error::IllConditioned(format!(
            "normal equations have eigenvalue range [{lambda_min:.3e}, {lambda_max:.3e}]; \
             the data cannot identify {k} linear parameter(s)"
        )));
    }
    let mut inv = ZERO;
    match k {
        1 => inv[0][0] = 1.0 / a[0][0],
        2 => {
            let d = det2(a);
            inv[0][0] = a[1][1] / d;
            inv[1][1] = a[0][0] / d;
            inv[0][1] = -a[0][1] / d;
            inv[1][0] = inv[0][1];
        }
        3 => {
            let d = det3(a);
            // Adjugate of a symmetric matrix is symmetric.
            inv[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / d;
            inv[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / d;
            inv[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / d;
            inv[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / d;
            inv[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / d;
            inv[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / d;
            inv[1][0] = inv[0][1];
            inv[2][0] = inv[0][2];
            inv[2][1] = inv[1][2];
        }
        _ => unreachable!(),
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat3(rows: [[f64; 3]; 3]) -> M3 {
        rows
    }

    fn mul(k: usize, a: &M3, b: &M3) -> M3 {
        let mut c = ZERO;
        for i in 0..k {
            for j in 0..k {
                for (l, bl) in b.iter().enumerate().take(k) {
                    c[i][j] += a[i][l] * bl[j];
                }
            }
        }
        c
    }

    #[test]
    fn eigenvalues_match_hand_cases() {
        let mut a = ZERO;
        a[0][0] = 4.0;
        assert_eq!(eigenvalues(1, &a), vec![4.0]);

        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let mut a = ZERO;
        a[0][0] = 2.0;
        a[1][1] = 2.0;
        a[0][1] = 1.0;
        a[1][0] = 1.0;
        let e = eigenvalues(2, &a);
        assert_abs_diff_eq!(e[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 3.0, epsilon = 1e-12);

        // diag(1, 2, 3) plus a symmetric perturbation checked against the
        // characteristic polynomial evaluated at each returned eigenvalue.
        let a = mat3([[1.0, 0.2, 0.1], [0.2, 2.0, 0.3], [0.1, 0.3, 3.0]]);
        for lambda in eigenvalues(3, &a) {
            let mut shifted = a;
            for i in 0..3 {
                shifted[i][i] -= lambda;
            }
            assert_abs_diff_eq!(det3(&shifted), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn eigenvalues_of_identity_multiple() {
        let a = mat3([[2.5, 0.0, 0.0], [0.0, 2.5, 0.0], [0.0, 0.0, 2.5]]);
        assert_eq!(eigenvalues(3, &a), vec![2.5, 2.5, 2.5]);
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        for (k, a) in [
            (1, mat3([[5.0, 0.0, 0.0], [0.0; 3], [0.0; 3]])),
            (2, mat3([[2.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0; 3]])),
            (3, mat3([[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]])),
        ] {
            let inv = invert_spd(k, &a).unwrap();
            let prod = mul(k, &inv, &a);
            for i in 0..k {
                for j in 0..k {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(prod[i][j], want, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_singular_and_ill_conditioned() {
        // Rank-1 outer product: singular.
        let a = mat3([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0; 3]]);
        assert!(matches!(invert_spd(2, &a), Err(Error::IllConditioned(_))));

        // Nearly dependent columns: eigenvalue ratio far above 1e12.
        let a = mat3([[1.0, 1.0 - 1e-15, 0.0], [1.0 - 1e-15, 1.0, 0.0], [0.0; 3]]);
        assert!(invert_spd(2, &a).is_err());

        // Zero matrix.
        assert!(invert_spd(3, &ZERO).is_err());

        // Comfortably conditioned matrix passes.
        let a = mat3([[1.0, 0.9, 0.0], [0.9, 1.0, 0.0], [0.0; 3]]);
        assert!(invert_spd(2, &a).is_ok());
    }
}
