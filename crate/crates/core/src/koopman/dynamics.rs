//! Vector fields that can be projected onto a Legendre basis.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Right-hand side `dx/dθ = f(x)` of an autonomous system.
pub trait DynamicsField: Sync {
    fn dimension(&self) -> usize;

    /// Upper bound on the polynomial degree of every component. Used to pick
    /// a quadrature order that integrates the Galerkin products exactly.
    fn polynomial_degree(&self) -> usize;

    fn evaluate(&self, x: &[f64], out: &mut [f64]);

    /// Exact monomial expansion, when the field has one. Enables the
    /// separable assembly path.
    fn as_polynomial(&self) -> Option<&PolynomialField> {
        None
    }
}

/// Sparse multivariate polynomial with real coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    dimension: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(dimension: usize) -> Self {
        Self {
            dimension,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dimension: usize, value: f64) -> Self {
        let mut p = Self::zero(dimension);
        p.add_term(vec![0; dimension], value);
        p
    }

    pub fn variable(dimension: usize, j: usize) -> Self {
        let mut powers = vec![0; dimension];
        powers[j] = 1;
        let mut p = Self::zero(dimension);
        p.add_term(powers, 1.0);
        p
    }

    pub fn add_term(&mut self, powers: Vec<u32>, coeff: f64) {
        assert_eq!(powers.len(), self.dimension, "monomial dimension mismatch");
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(powers).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.retain(|_, c| *c != 0.0);
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|k| k.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Largest exponent of variable `j` in any term.
    pub fn max_power(&self, j: usize) -> u32 {
        self.terms.keys().map(|k| k[j]).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(powers, c)| {
                powers
                    .iter()
                    .zip(x)
                    .fold(*c, |acc, (&p, &xi)| if p == 0 { acc } else { acc * xi.powi(p as i32) })
            })
            .sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.dimension);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v * s);
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(self.dimension, 1.0);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (k, v) in &rhs.terms {
            out.add_term(k.clone(), *v);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &rhs.scale(-1.0)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dimension, rhs.dimension, "polynomial dimension mismatch");
        let mut out = Polynomial::zero(self.dimension);
        for (ka, va) in &self.terms {
            for (kb, vb) in &rhs.terms {
                let powers = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                out.add_term(powers, va * vb);
            }
        }
        out
    }
}

impl Mul<f64> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: f64) -> Polynomial {
        self.scale(rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: &Polynomial) -> Polynomial {
                (&self).$m(rhs)
            }
        }
    };
}
impl Mul<f64> for Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: f64) -> Polynomial {
        self.scale(rhs)
    }
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// A vector field whose components are explicit polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialField {
    components: Vec<Polynomial>,
}

impl PolynomialField {
    pub fn new(components: Vec<Polynomial>) -> Self {
        let d = components.len();
        assert!(
            components.iter().all(|p| p.dimension() == d),
            "each component must be a polynomial in {d} variables"
        );
        Self { components }
    }

    /// `f(x) = M x + b` for a row-major `d × d` matrix.
    pub fn affine(matrix: &[Vec<f64>], offset: &[f64]) -> Self {
        let d = offset.len();
        let components = (0..d)
            .map(|i| {
                let mut p = Polynomial::constant(d, offset[i]);
                for j in 0..d {
                    p = &p + &Polynomial::variable(d, j).scale(matrix[i][j]);
                }
                p
            })
            .collect();
        Self::new(components)
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }
}

impl DynamicsField for PolynomialField {
    fn dimension(&self) -> usize {
        self.components.len()
    }

    fn polynomial_degree(&self) -> usize {
        self.components.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    fn evaluate(&self, x: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.components) {
            *o = p.eval(x);
        }
    }

    fn as_polynomial(&self) -> Option<&PolynomialField> {
        Some(self)
    }
}

/// Closure-backed field; assembled by quadrature only.
pub struct FnField<F> {
    dimension: usize,
    degree: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    pub fn new(dimension: usize, degree: usize, f: F) -> Self {
        Self { dimension, degree, f }
    }
}

impl<F> DynamicsField for FnField<F>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn polynomial_degree(&self) -> usize {
        self.degree
    }

    fn evaluate(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_algebra() {
        let x = Polynomial::variable(2, 0);
        let y = Polynomial::variable(2, 1);
        let one = Polynomial::constant(2, 1.0);
        // (x + 1)^2 - x^2 - 2x = 1
        let p = (&x + &one).pow(2) - &x * &x - x.scale(2.0);
        assert_eq!(p, one);
        let q = &(&x * &y) * 3.0;
        assert_eq!(q.degree(), 2);
        assert_eq!(q.eval(&[2.0, 5.0]), 30.0);
        assert_eq!((&q - &q).len(), 0);
        assert_eq!(q.max_power(1), 1);
    }

    #[test]
    fn affine_field_evaluates() {
        let f = PolynomialField::affine(&[vec![0.0, -1.0], vec![1.0, 0.0]], &[0.5, 0.0]);
        let mut out = [0.0; 2];
        f.evaluate(&[2.0, 3.0], &mut out);
        assert_eq!(out, [-2.5, 2.0]);
        assert_eq!(f.polynomial_degree(), 1);
    }
}
