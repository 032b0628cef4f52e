//! Dense matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant (Higham, 2005).

use faer::linalg::solvers::Solve;
use faer::Mat;

const THETA_13: f64 = 5.371920351148152;

const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn norm_1(a: &Mat<f64>) -> f64 {
    a.col_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(a * t)`.
pub fn expm_scaled(a: &Mat<f64>, t: f64) -> Mat<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = norm_1(a) * t.abs();
    if norm == 0.0 {
        return Mat::identity(n, n);
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scale = t / 2f64.powi(s);
    let a1 = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let ident = Mat::<f64>::identity(n, n);
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE_13;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = &a1 * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn norm_inf(a: &Mat<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

const ACTION_MAX_TERMS: usize = 60;

/// `b · exp(a t)` for a short, wide `b`, by truncated Taylor series on
/// substeps of unit norm. Never forms the dense exponential.
pub fn expm_action_rows(b: &Mat<f64>, a: &Mat<f64>, t: f64) -> Mat<f64> {
    assert_eq!(a.nrows(), a.ncols(), "expm needs a square matrix");
    assert_eq!(b.ncols(), a.nrows(), "row block width must match the matrix");
    let norm = norm_1(a).max(norm_inf(a)) * t.abs();
    if norm == 0.0 {
        return b.clone();
    }
    let steps = norm.ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut out = b.clone();
    for _ in 0..steps {
        let mut sum = out.clone();
        let mut term = out;
        let mut small = 0;
        for j in 1..=ACTION_MAX_TERMS {
            term = &term * a;
            let scale = h / j as f64;
            for c in 0..term.ncols() {
                for r in 0..term.nrows() {
                    term[(r, c)] *= scale;
                }
            }
            sum += &term;
            // two consecutive negligible terms end the series
            if term.norm_max() <= f64::EPSILON * sum.norm_max() {
                small += 1;
                if small == 2 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        out = sum;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_matches_dense_exponential() {
        let a = Mat::from_fn(6, 6, |i, j| {
            ((i * 7 + j * 3) % 5) as f64 * 0.7 - 1.2 + if i == j { -0.5 } else { 0.0 }
        });
        let b = Mat::from_fn(2, 6, |i, j| (i + 1) as f64 * 0.3 - j as f64 * 0.1);
        for t in [0.0, 0.4, 3.0, -1.5] {
            let dense = &b * expm_scaled(&a, t);
            let action = expm_action_rows(&b, &a, t);
            let scale = dense.norm_max().max(1.0);
            assert!((&dense - &action).norm_max() < 1e-12 * scale, "t = {t}");
        }
    }

    #[test]
    fn rotation_generator_exponentiates_to_rotation() {
        let k = Mat::from_fn(2, 2, |i, j| [[0.0, -1.0], [1.0, 0.0]][i][j]);
        for t in [0.0, 0.3, 2.0, 12.5] {
            let e = expm_scaled(&k, t);
            assert!((e[(0, 0)] - t.cos()).abs() < 1e-13);
            assert!((e[(0, 1)] + t.sin()).abs() < 1e-13);
            assert!((e[(1, 0)] - t.sin()).abs() < 1e-13);
            assert!((e[(1, 1)] - t.cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn nilpotent_jordan_block() {
        // exp([[0,1,0],[0,0,1],[0,0,0]] t) = [[1,t,t²/2],[0,1,t],[0,0,1]]
        let n = Mat::from_fn(3, 3, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
        let t = 7.0;
        let e = expm_scaled(&n, t);
        let expected = [[1.0, t, t * t / 2.0], [0.0, 1.0, t], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((e[(i, j)] - expected[i][j]).abs() < 1e-12 * 25.0);
            }
        }
    }

    #[test]
    fn diagonal_matrix() {
        let d = Mat::from_fn(3, 3, |i, j| if i == j { -(i as f64) - 0.5 } else { 0.0 });
        let e = expm_scaled(&d, 3.0);
        for i in 0..3 {
            let expected = (3.0 * (-(i as f64) - 0.5)).exp();
            assert!((e[(i, i)] - expected).abs() < 1e-14 * expected.max(1.0));
        }
    }
}
