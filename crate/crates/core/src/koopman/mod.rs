//! Galerkin approximation of the Koopman operator on a Legendre basis.

pub mod assemble;
pub mod dynamics;
pub mod expm;
pub mod model;
pub mod spectral;

pub use assemble::{build_koopman_matrix, build_koopman_matrix_with, AssemblyMethod};
pub use dynamics::{DynamicsField, FnField, Polynomial, PolynomialField};
pub use expm::{expm_action_rows, expm_scaled};
pub use model::{
    build_count, identity_observables, project_observables, FlowMap, KoopmanModel, PanelFlows, PanelNode,
    PropagationRoute, MAX_IMAGINARY_RESIDUE, MODEL_FORMAT, MODEL_FORMAT_VERSION,
};
pub use spectral::{eigendecompose, Eigendecomposition, SpectralDiagnostics};
