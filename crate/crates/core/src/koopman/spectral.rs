//! Left-eigenvector decomposition `P K = Λ P` of a real generator.

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition number of `P` above which the generator is treated as defective.
pub const MAX_EIGENVECTOR_CONDITION: f64 = 1e12;
/// Relative eigen-residual above which the decomposition is not trusted.
pub const MAX_EIGEN_RESIDUAL: f64 = 1e-8;
/// Relative tolerance for pairing complex eigenvalues with their conjugates.
pub const CONJUGATE_PAIR_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDiagnostics {
    /// 1-norm condition number of the eigenvector matrix.
    pub condition_p: f64,
    /// `‖P K − Λ P‖_F / ‖K‖_F` (absolute when `K = 0`).
    pub residual: f64,
    /// Complex eigenvalues without a conjugate partner.
    pub unpaired: usize,
    pub diagonalizable: bool,
}

#[derive(Debug, Clone)]
pub struct Eigendecomposition {
    pub eigenvalues: Vec<c64>,
    /// Rows are left eigenvectors.
    pub p: Mat<c64>,
    /// `P⁻¹`; columns are right eigenvectors.
    pub p_inv: Mat<c64>,
    pub diagnostics: SpectralDiagnostics,
}

fn norm_1_c(a: &Mat<c64>) -> f64 {
    a.col_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn eigendecompose(k: &Mat<f64>) -> Result<Eigendecomposition> {
    let m = k.nrows();
    if m != k.ncols() {
        return Err(Error::InvalidArgument("generator must be square".into()));
    }
    if k.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
        return Err(Error::Decomposition("generator has non-finite entries".into()));
    }
    let evd = k
        .eigen()
        .map_err(|e| Error::Decomposition(format!("eigensolver did not converge: {e:?}")))?;
    let p_inv: Mat<c64> = evd.U().to_owned();
    let eigenvalues: Vec<c64> = (0..m).map(|i| evd.S()[i]).collect();
    let p = p_inv.partial_piv_lu().inverse();
    let finite = p
        .col_iter()
        .all(|c| c.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
    let condition_p = if finite {
        norm_1_c(&p) * norm_1_c(&p_inv)
    } else {
        f64::INFINITY
    };

    let residual = if finite {
        eigen_residual(k, &p, &eigenvalues)
    } else {
        f64::INFINITY
    };
    let unpaired = unpaired_conjugates(&eigenvalues);
    let diagonalizable = condition_p <= MAX_EIGENVECTOR_CONDITION && residual <= MAX_EIGEN_RESIDUAL;
    Ok(Eigendecomposition {
        eigenvalues,
        p,
        p_inv,
        diagnostics: SpectralDiagnostics {
            condition_p,
            residual,
            unpaired,
            diagonalizable,
        },
    })
}

/// `‖P K − Λ P‖_F / ‖K‖_F`.
pub fn eigen_residual(k: &Mat<f64>, p: &Mat<c64>, eigenvalues: &[c64]) -> f64 {
    let m = k.nrows();
    // real products keep the memory at two real m × m blocks
    let re_pk = Mat::<f64>::from_fn(m, m, |i, j| p[(i, j)].re) * k;
    let im_pk = Mat::<f64>::from_fn(m, m, |i, j| p[(i, j)].im) * k;
    let mut num = 0.0;
    for i in 0..m {
        for j in 0..m {
            num += (c64::new(re_pk[(i, j)], im_pk[(i, j)]) - eigenvalues[i] * p[(i, j)]).norm_sqr();
        }
    }
    let knorm = k.norm_l2();
    if knorm == 0.0 {
        num.sqrt()
    } else {
        num.sqrt() / knorm
    }
}

/// Count complex eigenvalues that cannot be matched to a conjugate partner.
pub fn unpaired_conjugates(eigenvalues: &[c64]) -> usize {
    let scale = eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = CONJUGATE_PAIR_TOLERANCE * scale;
    let mut upper: Vec<c64> = eigenvalues.iter().copied().filter(|z| z.im > tol).collect();
    let mut lower: Vec<c64> = eigenvalues
        .iter()
        .copied()
        .filter(|z| z.im < -tol)
        .map(|z| z.conj())
        .collect();
    let key = |z: &c64| (z.im, z.re);
    upper.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    lower.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    let mut unpaired = 0;
    let mut used = vec![false; lower.len()];
    for z in &upper {
        match lower
            .iter()
            .enumerate()
            .filter(|(i, w)| !used[*i] && (*w - z).norm() <= tol)
            .map(|(i, _)| i)
            .next()
        {
            Some(i) => used[i] = true,
            None => unpaired += 1,
        }
    }
    unpaired + used.iter().filter(|u| !**u).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_matrix() {
        let k = Mat::<f64>::zeros(4, 4);
        let e = eigendecompose(&k).unwrap();
        assert!(e.eigenvalues.iter().all(|z| z.norm() == 0.0));
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((e.p[(i, j)].re - expected).abs() < 1e-15 && e.p[(i, j)].im == 0.0);
            }
        }
        assert!(e.diagnostics.diagonalizable);
    }

    #[test]
    fn rotation_generator() {
        let k = Mat::from_fn(2, 2, |i, j| [[0.0, -1.0], [1.0, 0.0]][i][j]);
        let e = eigendecompose(&k).unwrap();
        let mut ims: Vec<f64> = e.eigenvalues.iter().map(|z| z.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-14 && (ims[1] - 1.0).abs() < 1e-14);
        assert!(e.eigenvalues.iter().all(|z| z.re.abs() < 1e-14));
        assert_eq!(e.diagnostics.unpaired, 0);
        assert!(e.diagnostics.residual < 1e-14);
    }

    #[test]
    fn defective_jordan_block_is_flagged() {
        let k = Mat::from_fn(3, 3, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
        let e = eigendecompose(&k).unwrap();
        assert!(!e.diagnostics.diagonalizable, "{:?}", e.diagnostics);
    }

    #[test]
    fn unpaired_detection() {
        let z = |re, im| c64::new(re, im);
        assert_eq!(unpaired_conjugates(&[z(0.0, 1.0), z(0.0, -1.0), z(2.0, 0.0)]), 0);
        assert_eq!(unpaired_conjugates(&[z(0.0, 1.0), z(0.0, -1.0 + 1e-6)]), 2);
        assert_eq!(unpaired_conjugates(&[z(0.0, 1.0), z(0.0, 1.0), z(0.0, -1.0)]), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn residual_small_on_random_matrices(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 50;
            let k = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let e = eigendecompose(&k).unwrap();
            prop_assert!(e.diagnostics.residual <= 1e-10, "residual {}", e.diagnostics.residual);
            prop_assert_eq!(e.diagnostics.unpaired, 0);
        }
    }
}
