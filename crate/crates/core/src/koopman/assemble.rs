//! Galerkin assembly of the Koopman generator
//! `K_ij = <(∇L_i) · f, L_j>`.
//!
//! Two independent routes are provided. The quadrature route works for any
//! [`DynamicsField`] and sums over a tensor Gauss–Legendre grid. The
//! separable route expands polynomial fields monomial by monomial; since the
//! basis is a tensor product, each term of each entry factors into
//! one-dimensional integrals that are tabulated once per dimension.

use faer::Mat;
use rayon::prelude::*;

use crate::basis::{
    gauss_legendre, orthonormal_legendre_table_with_derivative, BasisSet, EvalScratch, TensorGrid, LEGENDRE_WEIGHT,
};
use crate::error::{Error, Result};

use super::dynamics::{DynamicsField, PolynomialField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssemblyMethod {
    /// Separable route for polynomial fields, quadrature otherwise.
    Auto,
    /// Tensor-grid quadrature; `None` picks the exact order for the field's degree.
    Quadrature { points_per_dim: Option<usize> },
    /// Monomial-by-monomial separable integrals (polynomial fields only).
    Separable,
}

/// Nodes per dimension that integrate `(∇L_i · f) L_j` exactly.
pub fn exact_points_per_dim(max_order: usize, field_degree: usize) -> usize {
    // per-dimension integrand degree is at most 2c - 1 + deg
    (max_order + field_degree.div_ceil(2)).max(1)
}

pub fn build_koopman_matrix(dynamics: &dyn DynamicsField, basis: &BasisSet) -> Result<Mat<f64>> {
    build_koopman_matrix_with(dynamics, basis, AssemblyMethod::Auto)
}

pub fn build_koopman_matrix_with(
    dynamics: &dyn DynamicsField,
    basis: &BasisSet,
    method: AssemblyMethod,
) -> Result<Mat<f64>> {
    if dynamics.dimension() != basis.dimension() {
        return Err(Error::InvalidArgument(format!(
            "dynamics dimension {} does not match basis dimension {}",
            dynamics.dimension(),
            basis.dimension()
        )));
    }
    match method {
        AssemblyMethod::Auto => match dynamics.as_polynomial() {
            Some(poly) => assemble_separable(poly, basis),
            None => assemble_quadrature(dynamics, basis, None),
        },
        AssemblyMethod::Quadrature { points_per_dim } => assemble_quadrature(dynamics, basis, points_per_dim),
        AssemblyMethod::Separable => match dynamics.as_polynomial() {
            Some(poly) => assemble_separable(poly, basis),
            None => Err(Error::InvalidArgument(
                "separable assembly needs a polynomial dynamics field".into(),
            )),
        },
    }
}

const CHUNK_NODES: usize = 1024;
const CHUNKS_PER_BLOCK: usize = 64;

fn assemble_quadrature(
    dynamics: &dyn DynamicsField,
    basis: &BasisSet,
    points_per_dim: Option<usize>,
) -> Result<Mat<f64>> {
    let p = points_per_dim.unwrap_or_else(|| exact_points_per_dim(basis.max_order(), dynamics.polynomial_degree()));
    let grid = TensorGrid::new(basis.domain(), p)?;
    let m = basis.len();
    let d = basis.dimension();
    let n_chunks = grid.len().div_ceil(CHUNK_NODES);

    let chunk = |c: usize| -> Result<Mat<f64>> {
        let start = c * CHUNK_NODES;
        let end = (start + CHUNK_NODES).min(grid.len());
        let n = end - start;
        let mut flux = Mat::<f64>::zeros(m, n);
        let mut values = Mat::<f64>::zeros(m, n);
        let mut scratch = EvalScratch::new(basis);
        let mut x = vec![0.0; d];
        let mut f = vec![0.0; d];
        let mut l = vec![0.0; m];
        let mut df = vec![0.0; m];
        for k in 0..n {
            let w = grid.node(start + k, &mut x, &mut scratch.canonical);
            dynamics.evaluate(&x, &mut f);
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Assembly { node: x.clone() });
            }
            df.iter_mut().for_each(|v| *v = 0.0);
            basis.eval_with_gradient_canonical(&mut scratch, &mut l, |i, j, g| df[i] += g * f[j]);
            for i in 0..m {
                flux[(i, k)] = w * df[i];
                values[(i, k)] = l[i];
            }
        }
        Ok(&flux * values.transpose())
    };

    // Fixed chunk boundaries and in-order reduction keep the sum independent
    // of the worker count.
    let mut k = Mat::<f64>::zeros(m, m);
    let mut c0 = 0;
    while c0 < n_chunks {
        let c1 = (c0 + CHUNKS_PER_BLOCK).min(n_chunks);
        let partials: Vec<Result<Mat<f64>>> = (c0..c1).into_par_iter().map(chunk).collect();
        for part in partials {
            k += part?;
        }
        c0 = c1;
    }
    Ok(k)
}

/// One-dimensional moment tables for a single dimension:
/// `plain[a][e][b] = ∫ P̃_a x^e P̃_b w` and `deriv[a][e][b] = ∫ (dP̃_a/dx) x^e P̃_b w`.
struct MomentTable {
    orders: usize,
    powers: usize,
    plain: Vec<f64>,
    deriv: Vec<f64>,
}

impl MomentTable {
    fn new(center: f64, half_width: f64, max_order: usize, max_power: usize) -> Self {
        let orders = max_order + 1;
        let powers = max_power + 1;
        let n = max_order + max_power.div_ceil(2) + 2;
        let (y, w) = gauss_legendre(n);
        let mut plain = vec![0.0; orders * powers * orders];
        let mut deriv = vec![0.0; orders * powers * orders];
        let mut vals = vec![0.0; orders];
        let mut ders = vec![0.0; orders];
        for (yk, wk) in y.iter().zip(&w) {
            orthonormal_legendre_table_with_derivative(*yk, &mut vals, &mut ders);
            let x = center + half_width * yk;
            let mut xe = 1.0;
            for e in 0..powers {
                let we = wk * LEGENDRE_WEIGHT * xe;
                for a in 0..orders {
                    for b in 0..orders {
                        let idx = (a * powers + e) * orders + b;
                        plain[idx] += we * vals[a] * vals[b];
                        deriv[idx] += we * ders[a] / half_width * vals[b];
                    }
                }
                xe *= x;
            }
        }
        Self {
            orders,
            powers,
            plain,
            deriv,
        }
    }

    #[inline]
    fn plain(&self, a: usize, e: usize, b: usize) -> f64 {
        self.plain[(a * self.powers + e) * self.orders + b]
    }

    #[inline]
    fn deriv(&self, a: usize, e: usize, b: usize) -> f64 {
        self.deriv[(a * self.powers + e) * self.orders + b]
    }
}

struct Term {
    component: usize,
    coeff: f64,
    powers: Vec<usize>,
}

fn assemble_separable(field: &PolynomialField, basis: &BasisSet) -> Result<Mat<f64>> {
    let d = basis.dimension();
    let m = basis.len();
    let c = basis.max_order();
    let domain = basis.domain();
    let tables: Vec<MomentTable> = (0..d)
        .map(|j| {
            let pmax = field.components().iter().map(|p| p.max_power(j)).max().unwrap_or(0) as usize;
            MomentTable::new(domain.center(j), domain.half_width(j), c, pmax)
        })
        .collect();
    let terms: Vec<Term> = field
        .components()
        .iter()
        .enumerate()
        .flat_map(|(k, p)| {
            p.terms().map(move |(powers, coeff)| Term {
                component: k,
                coeff,
                powers: powers.iter().map(|&e| e as usize).collect(),
            })
        })
        .collect();
    let orders: Vec<u8> = basis
        .indices()
        .iter()
        .flat_map(|idx| idx.orders().iter().map(|&n| n as u8))
        .collect();

    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let a = &orders[i * d..(i + 1) * d];
            let mut row = vec![0.0; m];
            for term in terms.iter().filter(|t| a[t.component] > 0) {
                let k = term.component;
                for (j, out) in row.iter_mut().enumerate() {
                    let b = &orders[j * d..(j + 1) * d];
                    let mut v = term.coeff;
                    for l in 0..d {
                        let (al, bl, el) = (a[l] as usize, b[l] as usize, term.powers[l]);
                        let factor = if l == k {
                            if bl + 1 > al + el {
                                0.0
                            } else {
                                tables[l].deriv(al, el, bl)
                            }
                        } else if al.abs_diff(bl) > el {
                            0.0
                        } else {
                            tables[l].plain(al, el, bl)
                        };
                        if factor == 0.0 {
                            v = 0.0;
                            break;
                        }
                        v *= factor;
                    }
                    *out += v;
                }
            }
            row
        })
        .collect();
    let k = Mat::from_fn(m, m, |i, j| rows[i][j]);
    if k.col_iter().any(|col| col.iter().any(|v| !v.is_finite())) {
        return Err(Error::Assembly { node: vec![] });
    }
    Ok(k)
}
