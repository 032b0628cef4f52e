//! A built Koopman model: generator, spectrum and observable projection, with
//! propagation of observables and their state transition matrices.

use std::cell::Cell;
use std::path::Path;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::basis::{gauss_legendre, quadrature_grid, BasisSet, EvalScratch};
use crate::error::{Error, Result};

use super::assemble::{build_koopman_matrix_with, exact_points_per_dim, AssemblyMethod};
use super::dynamics::DynamicsField;
use super::expm::expm_action_rows;
use super::spectral::{eigendecompose, SpectralDiagnostics};

/// Largest imaginary part tolerated in a propagated observable, relative to
/// the size of the real part.
pub const MAX_IMAGINARY_RESIDUE: f64 = 1e-8;

pub const MODEL_FORMAT: &str = "koopman-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

thread_local! {
    static BUILDS: Cell<usize> = const { Cell::new(0) };
}

/// Number of Koopman matrices assembled on the current thread.
pub fn build_count() -> usize {
    BUILDS.with(Cell::get)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagationRoute {
    /// Spectral when the generator is diagonalizable, matrix exponential otherwise.
    #[default]
    Auto,
    Spectral,
    MatrixExponential,
}

#[derive(Debug, Clone)]
pub struct KoopmanModel {
    basis: BasisSet,
    generator: Mat<f64>,
    eigenvalues: Vec<c64>,
    p: Mat<c64>,
    p_inv: Mat<c64>,
    observables: Mat<f64>,
    // A P⁻¹
    modes: Mat<c64>,
    diagnostics: SpectralDiagnostics,
    route: PropagationRoute,
}

/// Coefficients of the identity observables `g(x) = x` in the basis. Exact
/// whenever the basis has order at least one.
pub fn identity_observables(basis: &BasisSet) -> Mat<f64> {
    let d = basis.dimension();
    let dom = basis.domain();
    Mat::from_fn(d, basis.len(), |j, i| {
        if i == 0 {
            dom.center(j)
        } else if basis.max_order() >= 1 && i == basis.linear_position(j) {
            // x = c + h y and y = P̃₁(y) / √3
            dom.half_width(j) / 3f64.sqrt()
        } else {
            0.0
        }
    })
}

/// Project `q` observables onto the basis by quadrature: `a_il = <g_i, L_l>`.
pub fn project_observables<G>(observables: G, q: usize, basis: &BasisSet, points_per_dim: usize) -> Result<Mat<f64>>
where
    G: Fn(&[f64], &mut [f64]),
{
    let grid = quadrature_grid(basis, points_per_dim)?;
    let m = basis.len();
    let d = basis.dimension();
    let mut a = Mat::<f64>::zeros(q, m);
    let mut physical = vec![0.0; d];
    let mut scratch = EvalScratch::new(basis);
    let mut values = vec![0.0; m];
    let mut g = vec![0.0; q];
    for idx in 0..grid.len() {
        let w = grid.node(idx, &mut physical, &mut scratch.canonical);
        basis.eval_canonical_into(&mut scratch, &mut values);
        observables(&physical, &mut g);
        for (i, gi) in g.iter().enumerate() {
            if !gi.is_finite() {
                return Err(Error::Assembly { node: physical.clone() });
            }
            for (l, v) in values.iter().enumerate() {
                a[(i, l)] += w * gi * v;
            }
        }
    }
    Ok(a)
}

impl KoopmanModel {
    /// Assemble, decompose and attach identity observables.
    pub fn build(dynamics: &dyn DynamicsField, basis: BasisSet) -> Result<Self> {
        let a = identity_observables(&basis);
        Self::build_with(dynamics, basis, a, AssemblyMethod::Auto)
    }

    pub fn build_with(
        dynamics: &dyn DynamicsField,
        basis: BasisSet,
        observables: Mat<f64>,
        method: AssemblyMethod,
    ) -> Result<Self> {
        let k = build_koopman_matrix_with(dynamics, &basis, method)?;
        BUILDS.with(|c| c.set(c.get() + 1));
        Self::from_parts(basis, k, observables)
    }

    /// Decompose an already assembled generator.
    pub fn from_parts(basis: BasisSet, generator: Mat<f64>, observables: Mat<f64>) -> Result<Self> {
        let m = basis.len();
        if generator.nrows() != m || generator.ncols() != m {
            return Err(Error::ModelMismatch(format!(
                "generator is {}x{}, basis has {m} functions",
                generator.nrows(),
                generator.ncols()
            )));
        }
        if observables.ncols() != m {
            return Err(Error::ModelMismatch(format!(
                "observable matrix has {} columns, basis has {m} functions",
                observables.ncols()
            )));
        }
        let e = eigendecompose(&generator)?;
        Ok(Self::assemble(
            basis,
            generator,
            observables,
            e.eigenvalues,
            e.p,
            e.p_inv,
            e.diagnostics,
        ))
    }

    fn assemble(
        basis: BasisSet,
        generator: Mat<f64>,
        observables: Mat<f64>,
        eigenvalues: Vec<c64>,
        p: Mat<c64>,
        p_inv: Mat<c64>,
        diagnostics: SpectralDiagnostics,
    ) -> Self {
        let ac = to_complex(&observables);
        let modes = &ac * &p_inv;
        Self {
            basis,
            generator,
            eigenvalues,
            p,
            p_inv,
            observables,
            modes,
            diagnostics,
            route: PropagationRoute::Auto,
        }
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn generator(&self) -> &Mat<f64> {
        &self.generator
    }

    pub fn eigenvalues(&self) -> &[c64] {
        &self.eigenvalues
    }

    /// Rows are left eigenvectors of the generator.
    pub fn eigenvectors(&self) -> &Mat<c64> {
        &self.p
    }

    pub fn eigenvectors_inverse(&self) -> &Mat<c64> {
        &self.p_inv
    }

    pub fn observables(&self) -> &Mat<f64> {
        &self.observables
    }

    /// Koopman modes `A P⁻¹`.
    pub fn modes(&self) -> &Mat<c64> {
        &self.modes
    }

    pub fn diagnostics(&self) -> &SpectralDiagnostics {
        &self.diagnostics
    }

    pub fn diagonalizable(&self) -> bool {
        self.diagnostics.diagonalizable
    }

    pub fn condition_p(&self) -> f64 {
        self.diagnostics.condition_p
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn observable_count(&self) -> usize {
        self.observables.nrows()
    }

    pub fn route(&self) -> PropagationRoute {
        self.route
    }

    pub fn set_route(&mut self, route: PropagationRoute) {
        self.route = route;
    }

    fn use_spectral(&self) -> bool {
        match self.route {
            PropagationRoute::Auto => self.diagnostics.diagonalizable,
            PropagationRoute::Spectral => true,
            PropagationRoute::MatrixExponential => false,
        }
    }

    /// `A P⁻¹ P L(x)`; differs from `A L(x)` only by the decomposition error.
    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        let l = self.basis.eval(x)?;
        let lc = Mat::<c64>::from_fn(l.len(), 1, |i, _| c64::new(l[i], 0.0));
        let pl = &self.p * &lc;
        let g = &self.modes * &pl;
        Ok((0..g.nrows()).map(|i| g[(i, 0)].re).collect())
    }

    /// Linear map from basis values at `x0` to observables at `x(θ)`.
    pub fn flow(&self, theta: f64) -> Result<FlowMap> {
        if !theta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "propagation angle {theta} is not finite"
            )));
        }
        let matrix = if self.use_spectral() {
            self.spectral_flow(theta)?
        } else {
            expm_action_rows(&self.observables, &self.generator, theta)
        };
        Ok(FlowMap { theta, matrix })
    }

    fn spectral_flow(&self, theta: f64) -> Result<Mat<f64>> {
        let m = self.len();
        let q = self.observable_count();
        let scaled = Mat::<c64>::from_fn(q, m, |i, k| self.modes[(i, k)] * (self.eigenvalues[k] * theta).exp());
        let full = &scaled * &self.p;
        let mut scale = 0.0f64;
        let mut residue = 0.0f64;
        for i in 0..q {
            for j in 0..m {
                scale = scale.max(full[(i, j)].re.abs());
                residue = residue.max(full[(i, j)].im.abs());
            }
        }
        let relative = residue / scale.max(1.0);
        if !(relative <= MAX_IMAGINARY_RESIDUE) {
            return Err(Error::SpectralConsistency { residue: relative });
        }
        Ok(Mat::from_fn(q, m, |i, j| full[(i, j)].re))
    }

    /// Flow maps at each angle of a nondecreasing, nonnegative sequence.
    /// The matrix-exponential route steps from one angle to the next instead
    /// of starting over at zero.
    pub fn flows_at(&self, thetas: &[f64]) -> Result<Vec<FlowMap>> {
        let ordered = thetas.windows(2).all(|w| w[0] <= w[1]);
        if !ordered || thetas.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidArgument(
                "angles must be finite, nonnegative and nondecreasing".into(),
            ));
        }
        if self.use_spectral() {
            return thetas.iter().map(|&t| self.flow(t)).collect();
        }
        let mut rows = self.observables.clone();
        let mut at = 0.0;
        let mut out = Vec::with_capacity(thetas.len());
        for &theta in thetas {
            rows = expm_action_rows(&rows, &self.generator, theta - at);
            at = theta;
            out.push(FlowMap {
                theta,
                matrix: rows.clone(),
            });
        }
        Ok(out)
    }

    /// Flow maps at Gauss–Legendre nodes of `panels` equal panels over
    /// `[0, theta_end]`, plus the map at `theta_end` itself.
    pub fn flows_on_panels(&self, theta_end: f64, panels: usize, nodes_per_panel: usize) -> Result<PanelFlows> {
        if !(theta_end >= 0.0) || !theta_end.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "panel span {theta_end} must be finite and nonnegative"
            )));
        }
        if panels == 0 || nodes_per_panel == 0 {
            return Err(Error::InvalidArgument("need at least one panel and one node".into()));
        }
        let h = theta_end / panels as f64;
        let (gx, gw) = gauss_legendre(nodes_per_panel);
        let offsets: Vec<f64> = gx.iter().map(|x| 0.5 * h * (x + 1.0)).collect();
        let mut nodes = Vec::with_capacity(panels * nodes_per_panel);
        let end;
        if self.use_spectral() {
            for p in 0..panels {
                for (tau, w) in offsets.iter().zip(&gw) {
                    let theta = p as f64 * h + tau;
                    nodes.push(PanelNode {
                        weight: 0.5 * h * w,
                        flow: self.flow(theta)?,
                    });
                }
            }
            end = self.flow(theta_end)?;
        } else {
            // step the observable rows through the nodes in θ order
            let mut rows = self.observables.clone();
            let mut at = 0.0;
            for p in 0..panels {
                for (tau, w) in offsets.iter().zip(&gw) {
                    let theta = p as f64 * h + tau;
                    rows = expm_action_rows(&rows, &self.generator, theta - at);
                    at = theta;
                    nodes.push(PanelNode {
                        weight: 0.5 * h * w,
                        flow: FlowMap {
                            theta,
                            matrix: rows.clone(),
                        },
                    });
                }
            }
            end = FlowMap {
                theta: theta_end,
                matrix: expm_action_rows(&rows, &self.generator, theta_end - at),
            };
        }
        Ok(PanelFlows { nodes, end })
    }

    /// Observables at `x(θ)` starting from `x0`.
    pub fn propagate(&self, x0: &[f64], theta: f64) -> Result<Vec<f64>> {
        self.flow(theta)?.apply(&self.basis, x0)
    }

    /// `∂g(x(θ)) / ∂x0`, `q × d`.
    pub fn state_transition_matrix(&self, x0: &[f64], theta: f64) -> Result<Mat<f64>> {
        self.flow(theta)?.stm(&self.basis, x0)
    }

    /// Eigenvalues as `(re, im)` pairs in decomposition order.
    pub fn eigenvalue_report(&self) -> Vec<(f64, f64)> {
        self.eigenvalues.iter().map(|z| (z.re, z.im)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            basis: self.basis.clone(),
            generator: real_rows(&self.generator),
            eigenvalues: self.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            p: complex_rows(&self.p),
            p_inv: complex_rows(&self.p_inv),
            observables: real_rows(&self.observables),
            diagnostics: self.diagnostics,
        };
        serde_json::to_string(&file).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Serialization(format!("unexpected format tag {:?}", file.format)));
        }
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
                file.version
            )));
        }
        let m = file.basis.len();
        let generator = real_matrix(&file.generator, m, m, "generator")?;
        let q = file.observables.len();
        let observables = real_matrix(&file.observables, q, m, "observables")?;
        let p = complex_matrix(&file.p, m, "p")?;
        let p_inv = complex_matrix(&file.p_inv, m, "p_inv")?;
        if file.eigenvalues.len() != m {
            return Err(Error::Serialization(format!(
                "expected {m} eigenvalues, found {}",
                file.eigenvalues.len()
            )));
        }
        let eigenvalues = file.eigenvalues.iter().map(|[re, im]| c64::new(*re, *im)).collect();
        Ok(Self::assemble(
            file.basis,
            generator,
            observables,
            eigenvalues,
            p,
            p_inv,
            file.diagnostics,
        ))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        std::fs::write(path, text).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Real `q × m` matrix taking `L(x0)` to the observables at angle `theta`.
#[derive(Debug, Clone)]
pub struct FlowMap {
    theta: f64,
    matrix: Mat<f64>,
}

impl FlowMap {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn apply(&self, basis: &BasisSet, x0: &[f64]) -> Result<Vec<f64>> {
        let l = basis.eval(x0)?;
        Ok(self.apply_values(&l))
    }

    pub fn apply_values(&self, l: &[f64]) -> Vec<f64> {
        (0..self.matrix.nrows())
            .map(|i| (0..l.len()).map(|j| self.matrix[(i, j)] * l[j]).sum())
            .collect()
    }

    pub fn stm(&self, basis: &BasisSet, x0: &[f64]) -> Result<Mat<f64>> {
        let grad = basis.eval_gradient(x0)?;
        Ok(&self.matrix * &grad)
    }
}

#[derive(Debug, Clone)]
pub struct PanelNode {
    /// Quadrature weight in θ.
    pub weight: f64,
    pub flow: FlowMap,
}

#[derive(Debug, Clone)]
pub struct PanelFlows {
    pub nodes: Vec<PanelNode>,
    pub end: FlowMap,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    basis: BasisSet,
    generator: Vec<Vec<f64>>,
    eigenvalues: Vec<[f64; 2]>,
    p: Vec<Vec<[f64; 2]>>,
    p_inv: Vec<Vec<[f64; 2]>>,
    observables: Vec<Vec<f64>>,
    diagnostics: SpectralDiagnostics,
}

fn to_complex(a: &Mat<f64>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)], 0.0))
}

fn real_rows(a: &Mat<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

fn complex_rows(a: &Mat<c64>) -> Vec<Vec<[f64; 2]>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

fn real_matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<Mat<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Serialization(format!("{what} must be {nrows}x{ncols}")));
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn complex_matrix(rows: &[Vec<[f64; 2]>], m: usize, what: &str) -> Result<Mat<c64>> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(Error::Serialization(format!("{what} must be {m}x{m}")));
    }
    Ok(Mat::from_fn(m, m, |i, j| c64::new(rows[i][j][0], rows[i][j][1])))
}

/// Points per dimension for projecting degree-`deg` observables exactly.
pub fn observable_points_per_dim(basis: &BasisSet, deg: usize) -> usize {
    exact_points_per_dim(basis.max_order(), deg + 1)
}
