//! Multivariate orthonormal Legendre bases on an axis-aligned box.
//!
//! Each basis function is a product of one-dimensional Legendre polynomials
//! in the canonical coordinate `y = (x - center) / half_width`, scaled by
//! `sqrt(2n + 1)` so that the family is orthonormal under the normalized
//! measure (constant weight `1/2` per canonical dimension). The constant
//! function is therefore exactly `1`, and projections of observables reduce
//! to plain weighted sums over a tensor-product Gauss–Legendre grid.
//!
//! Bases are truncated by total order: a multi-index `(n_1, .., n_d)` is kept
//! when `n_1 + .. + n_d <= max_order`, giving `C(d + c, c)` functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest basis the library will build without the caller raising the cap.
pub const DEFAULT_MAX_BASIS_SIZE: usize = 20_000;

/// Largest tensor grid `quadrature_grid` will hand out.
pub const MAX_GRID_NODES: usize = 100_000_000;

/// Constant weight per canonical dimension (probability measure on [-1, 1]).
pub const LEGENDRE_WEIGHT: f64 = 0.5;

/// Canonical coordinates may overshoot [-1, 1] by this much before an
/// evaluation is rejected; within it they are clamped.
pub const DOMAIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(orders: Vec<u32>) -> Self {
        Self(orders)
    }

    pub fn orders(&self) -> &[u32] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn total_order(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// Axis-aligned box `[lower_j, upper_j]` carrying the affine map to the
/// canonical cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidArgument(format!(
                "domain bounds must be nonempty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "domain dimension {j}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The canonical cube `[-1, 1]^d`.
    pub fn unit(dimension: usize) -> Self {
        Self {
            lower: vec![-1.0; dimension],
            upper: vec![1.0; dimension],
        }
    }

    /// Smallest box containing every sample, widened by `inflation` times the
    /// half-width on each side and never narrower than `min_half_width`.
    pub fn envelope<'a, I>(samples: I, inflation: f64, min_half_width: &[f64]) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let d = min_half_width.len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        let mut count = 0usize;
        for sample in samples {
            if sample.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "envelope sample has dimension {}, expected {d}",
                    sample.len()
                )));
            }
            for j in 0..d {
                if !sample[j].is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "envelope sample is non-finite in dimension {j}"
                    )));
                }
                lo[j] = lo[j].min(sample[j]);
                hi[j] = hi[j].max(sample[j]);
            }
            count += 1;
        }
        if count == 0 {
            return Err(Error::InvalidArgument("envelope of zero samples".into()));
        }
        let mut lower = Vec::with_capacity(d);
        let mut upper = Vec::with_capacity(d);
        for j in 0..d {
            let center = 0.5 * (lo[j] + hi[j]);
            let half = (0.5 * (hi[j] - lo[j]) * (1.0 + inflation)).max(min_half_width[j]);
            lower.push(center - half);
            upper.push(center + half);
        }
        Self::new(lower, upper)
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self, j: usize) -> f64 {
        0.5 * (self.lower[j] + self.upper[j])
    }

    pub fn half_width(&self, j: usize) -> f64 {
        0.5 * (self.upper[j] - self.lower[j])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.to_canonical(x).is_ok()
    }

    /// Map a physical point into the canonical cube, clamping coordinates that
    /// overshoot by less than [`DOMAIN_TOLERANCE`].
    pub fn to_canonical(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.dimension()];
        self.to_canonical_into(x, &mut y)?;
        Ok(y)
    }

    pub fn to_canonical_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, domain has {}",
                x.len(),
                self.dimension()
            )));
        }
        for j in 0..x.len() {
            let v = (x[j] - self.center(j)) / self.half_width(j);
            if !(v.abs() <= 1.0 + DOMAIN_TOLERANCE) {
                return Err(Error::DomainViolation {
                    dimension: j,
                    value: x[j],
                    lower: self.lower[j],
                    upper: self.upper[j],
                });
            }
            y[j] = v.clamp(-1.0, 1.0);
        }
        Ok(())
    }

    pub fn from_canonical(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .enumerate()
            .map(|(j, v)| self.center(j) + self.half_width(j) * v)
            .collect()
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] (weights sum to 2).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on the three-term recurrence.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative_raw(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative_raw(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Standard (unnormalized) Legendre `P_n(x)` and `P_n'(x)`.
fn legendre_with_derivative_raw(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

/// Fill `values[n] = sqrt(2n+1) P_n(y)` for `n = 0..values.len()`.
pub fn orthonormal_legendre_table(y: f64, values: &mut [f64]) {
    let nmax = values.len();
    if nmax == 0 {
        return;
    }
    let mut p0 = 1.0;
    values[0] = 1.0;
    if nmax == 1 {
        return;
    }
    let mut p1 = y;
    values[1] = 3f64.sqrt() * y;
    for k in 1..nmax - 1 {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * y * p1 - kf * p0) / (kf + 1.0);
        values[k + 1] = (2.0 * kf + 3.0).sqrt() * p2;
        p0 = p1;
        p1 = p2;
    }
}

/// Values and canonical-coordinate derivatives of the orthonormal family.
pub fn orthonormal_legendre_table_with_derivative(y: f64, values: &mut [f64], derivs: &mut [f64]) {
    let nmax = values.len();
    debug_assert_eq!(derivs.len(), nmax);
    if nmax == 0 {
        return;
    }
    let (mut p_prev, mut p) = (0.0, 1.0);
    let mut d = 0.0;
    for n in 0..nmax {
        let scale = (2.0 * n as f64 + 1.0).sqrt();
        values[n] = scale * p;
        derivs[n] = scale * d;
        // P_{n+1} = ((2n+1) y P_n - n P_{n-1}) / (n+1);  P'_{n+1} = (n+1) P_n + y P'_n
        let nf = n as f64;
        let p_next = ((2.0 * nf + 1.0) * y * p - nf * p_prev) / (nf + 1.0);
        let d_next = (nf + 1.0) * p + y * d;
        p_prev = p;
        p = p_next;
        d = d_next;
    }
}

/// Orthonormal Legendre polynomial of order `order` at canonical `x`.
pub fn eval_orthonormal_legendre(order: usize, x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0 + DOMAIN_TOLERANCE) {
        return Err(Error::DomainViolation {
            dimension: 0,
            value: x,
            lower: -1.0,
            upper: 1.0,
        });
    }
    let mut values = vec![0.0; order + 1];
    orthonormal_legendre_table(x.clamp(-1.0, 1.0), &mut values);
    Ok(values[order])
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of basis functions of total order at most `max_order` in `dimension` variables.
pub fn basis_size(dimension: usize, max_order: usize) -> u128 {
    binomial(dimension + max_order, max_order)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "BasisSpec", into = "BasisSpec")]
pub struct BasisSet {
    dimension: usize,
    max_order: usize,
    indices: Vec<MultiIndex>,
    domain: DomainBox,
    weight: f64,
    // (dimension, order) pairs with nonzero order, per basis function
    factors: Vec<Vec<(usize, usize)>>,
}

#[derive(Serialize, Deserialize)]
struct BasisSpec {
    dimension: usize,
    max_order: usize,
    domain: DomainBox,
}

impl From<BasisSpec> for BasisSet {
    fn from(spec: BasisSpec) -> Self {
        BasisSet::assemble(spec.dimension, spec.max_order, spec.domain)
    }
}

impl From<BasisSet> for BasisSpec {
    fn from(b: BasisSet) -> Self {
        BasisSpec {
            dimension: b.dimension,
            max_order: b.max_order,
            domain: b.domain,
        }
    }
}

impl PartialEq for BasisSet {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension && self.max_order == other.max_order && self.domain == other.domain
    }
}

/// Build the total-order Legendre basis in graded lexicographic order.
pub fn build_basis(dimension: usize, max_order: usize, domain: DomainBox) -> Result<BasisSet> {
    build_basis_with_cap(dimension, max_order, domain, DEFAULT_MAX_BASIS_SIZE)
}

pub fn build_basis_with_cap(dimension: usize, max_order: usize, domain: DomainBox, cap: usize) -> Result<BasisSet> {
    if dimension == 0 {
        return Err(Error::InvalidArgument("basis dimension must be at least 1".into()));
    }
    if domain.dimension() != dimension {
        return Err(Error::InvalidArgument(format!(
            "domain has dimension {}, basis needs {dimension}",
            domain.dimension()
        )));
    }
    let m = basis_size(dimension, max_order);
    if m > cap as u128 {
        return Err(Error::ResourceCap {
            what: "basis size",
            requested: usize::try_from(m).unwrap_or(usize::MAX),
            cap,
        });
    }
    Ok(BasisSet::assemble(dimension, max_order, domain))
}

impl BasisSet {
    fn assemble(dimension: usize, max_order: usize, domain: DomainBox) -> Self {
        let mut indices = Vec::new();
        let mut prefix = Vec::with_capacity(dimension);
        for total in 0..=max_order {
            compositions(dimension, total, &mut prefix, &mut indices);
        }
        let factors = indices
            .iter()
            .map(|idx| {
                idx.orders()
                    .iter()
                    .enumerate()
                    .filter(|(_, &n)| n > 0)
                    .map(|(j, &n)| (j, n as usize))
                    .collect()
            })
            .collect();
        Self {
            dimension,
            max_order,
            indices,
            domain,
            weight: LEGENDRE_WEIGHT,
            factors,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Position of a multi-index in the basis ordering.
    pub fn position(&self, index: &MultiIndex) -> Option<usize> {
        self.indices.iter().position(|i| i == index)
    }

    /// Index of the degree-one function in dimension `j`.
    pub fn linear_position(&self, j: usize) -> usize {
        // graded lex: constant first, then e_0, e_1, ...
        1 + j
    }

    /// All basis functions at a physical point.
    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        let mut scratch = EvalScratch::new(self);
        self.eval_into(point, &mut scratch, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, point: &[f64], scratch: &mut EvalScratch, out: &mut [f64]) -> Result<()> {
        self.domain.to_canonical_into(point, &mut scratch.canonical)?;
        self.eval_canonical_into(scratch, out);
        Ok(())
    }

    /// Evaluate at `scratch.canonical` (already in the cube).
    pub(crate) fn eval_canonical_into(&self, scratch: &mut EvalScratch, out: &mut [f64]) {
        let n = self.max_order + 1;
        for j in 0..self.dimension {
            orthonormal_legendre_table(scratch.canonical[j], &mut scratch.values[j * n..(j + 1) * n]);
        }
        for (i, f) in self.factors.iter().enumerate() {
            let mut v = 1.0;
            for &(j, order) in f {
                v *= scratch.values[j * n + order];
            }
            out[i] = v;
        }
    }

    /// Gradient of every basis function with respect to the physical
    /// coordinates, as a row-major `m × d` matrix.
    pub fn eval_gradient(&self, point: &[f64]) -> Result<faer::Mat<f64>> {
        let mut scratch = EvalScratch::new(self);
        let mut values = vec![0.0; self.len()];
        let mut grad = faer::Mat::zeros(self.len(), self.dimension);
        self.domain.to_canonical_into(point, &mut scratch.canonical)?;
        self.eval_with_gradient_canonical(&mut scratch, &mut values, |i, j, g| grad[(i, j)] = g);
        Ok(grad)
    }

    /// Values plus gradient entries (physical coordinates), delivered through
    /// `sink(row, dim, value)` for the nonzero gradient entries only.
    pub(crate) fn eval_with_gradient_canonical<F>(&self, scratch: &mut EvalScratch, values: &mut [f64], mut sink: F)
    where
        F: FnMut(usize, usize, f64),
    {
        let n = self.max_order + 1;
        for j in 0..self.dimension {
            orthonormal_legendre_table_with_derivative(
                scratch.canonical[j],
                &mut scratch.values[j * n..(j + 1) * n],
                &mut scratch.derivs[j * n..(j + 1) * n],
            );
        }
        for (i, f) in self.factors.iter().enumerate() {
            let mut v = 1.0;
            for &(j, order) in f {
                v *= scratch.values[j * n + order];
            }
            values[i] = v;
            for (slot, &(j, order)) in f.iter().enumerate() {
                let mut g = scratch.derivs[j * n + order] / self.domain.half_width(j);
                for (other, &(k, ok)) in f.iter().enumerate() {
                    if other != slot {
                        g *= scratch.values[k * n + ok];
                    }
                }
                sink(i, j, g);
            }
        }
    }
}

fn compositions(parts: usize, total: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if parts == 1 {
        prefix.push(total as u32);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first as u32);
        compositions(parts - 1, total - first, prefix, out);
        prefix.pop();
    }
}

/// Per-thread scratch buffers for basis evaluation.
#[derive(Debug, Clone)]
pub struct EvalScratch {
    pub(crate) canonical: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl EvalScratch {
    pub fn new(basis: &BasisSet) -> Self {
        let n = basis.max_order + 1;
        Self {
            canonical: vec![0.0; basis.dimension],
            values: vec![0.0; basis.dimension * n],
            derivs: vec![0.0; basis.dimension * n],
        }
    }
}

/// Tensor-product Gauss–Legendre grid over a domain box. Nodes are produced
/// on demand; weights absorb the affine Jacobian and the constant Legendre
/// weight, so they sum to one.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    nodes: Vec<Vec<f64>>,
    canonical: Vec<f64>,
    weights: Vec<f64>,
    len: usize,
}

pub fn quadrature_grid(basis: &BasisSet, points_per_dim: usize) -> Result<TensorGrid> {
    TensorGrid::new(basis.domain(), points_per_dim)
}

impl TensorGrid {
    pub fn new(domain: &DomainBox, points_per_dim: usize) -> Result<Self> {
        if points_per_dim == 0 {
            return Err(Error::InvalidArgument("points_per_dim must be at least 1".into()));
        }
        let d = domain.dimension();
        let len = (points_per_dim as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
        if len > MAX_GRID_NODES as u128 {
            return Err(Error::ResourceCap {
                what: "quadrature grid nodes",
                requested: usize::try_from(len).unwrap_or(usize::MAX),
                cap: MAX_GRID_NODES,
            });
        }
        let (y, w) = gauss_legendre(points_per_dim);
        let nodes = (0..d)
            .map(|j| y.iter().map(|v| domain.center(j) + domain.half_width(j) * v).collect())
            .collect();
        Ok(Self {
            nodes,
            canonical: y,
            weights: w.iter().map(|v| v * LEGENDRE_WEIGHT).collect(),
            len: len as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dimension(&self) -> usize {
        self.nodes.len()
    }

    pub fn points_per_dim(&self) -> usize {
        self.canonical.len()
    }

    /// Write node `idx` (physical and canonical coordinates) and return its weight.
    pub fn node(&self, idx: usize, physical: &mut [f64], canonical: &mut [f64]) -> f64 {
        let p = self.canonical.len();
        let mut rem = idx;
        let mut w = 1.0;
        for j in (0..self.dimension()).rev() {
            let k = rem % p;
            rem /= p;
            physical[j] = self.nodes[j][k];
            canonical[j] = self.canonical[k];
            w *= self.weights[k];
        }
        w
    }

    /// Every `(node, weight)` pair, in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        let d = self.dimension();
        (0..self.len).map(move |idx| {
            let mut x = vec![0.0; d];
            let mut y = vec![0.0; d];
            let w = self.node(idx, &mut x, &mut y);
            (x, w)
        })
    }

    pub fn weights(&self) -> Vec<f64> {
        self.iter().map(|(_, w)| w).collect()
    }
}

/// Weighted dot product of two functions sampled on the same grid.
pub fn inner_product(f: &[f64], g: &[f64], weights: &[f64]) -> Result<f64> {
    if f.len() != g.len() || f.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "inner product length mismatch: {} / {} / {}",
            f.len(),
            g.len(),
            weights.len()
        )));
    }
    Ok(f.iter().zip(g).zip(weights).map(|((a, b), w)| a * b * w).sum())
}
