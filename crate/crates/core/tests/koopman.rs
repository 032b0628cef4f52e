use std::f64::consts::TAU;
use std::sync::OnceLock;

use koopman_lambert::basis::{build_basis, DomainBox, DEFAULT_MAX_BASIS_SIZE};
use koopman_lambert::elements::{cartesian_to_elements, CartesianState, GravityModel};
use koopman_lambert::koopman::{KoopmanModel, PolynomialField};
use koopman_lambert::lambert::{j2_model_for, two_body_model, LambertProblem, OrbitModel, SolverConfig};
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

fn curtis_state() -> [f64; 8] {
    let s = CartesianState::new(
        Vector3::new(5000.0, 10000.0, 2100.0),
        Vector3::new(-5.99249502, 1.92536671, 3.24563805),
    );
    cartesian_to_elements(&s, &GravityModel::earth(false))
        .unwrap()
        .to_array()
}

fn j2_model() -> &'static (OrbitModel, Vector3<f64>) {
    static MODEL: OnceLock<(OrbitModel, Vector3<f64>)> = OnceLock::new();
    MODEL.get_or_init(|| {
        let p = LambertProblem::new(
            Vector3::new(5000.0, 10000.0, 2100.0),
            Vector3::new(-14600.0, 2500.0, 7000.0),
            3600.0,
            0,
            GravityModel::earth(true),
        );
        j2_model_for(&p, 3, DEFAULT_MAX_BASIS_SIZE, &SolverConfig::default()).unwrap()
    })
}

#[test]
fn semigroup_on_the_unperturbed_system() {
    let model = two_body_model(&GravityModel::earth(false)).unwrap().model;
    let x0 = curtis_state();
    for (a, b) in [(0.3, 1.1), (2.0, 2.0), (TAU, 0.7), (5.0, 6.5)] {
        let direct = model.propagate(&x0, a + b).unwrap();
        let mid = model.propagate(&x0, a).unwrap();
        let composed = model.propagate(&mid, b).unwrap();
        for (u, v) in direct.iter().zip(&composed) {
            assert!((u - v).abs() <= 1e-6, "θ₁ = {a}, θ₂ = {b}: {u} vs {v}");
        }
    }
}

#[test]
fn spectral_reconstruction_on_unperturbed_models() {
    let domain = DomainBox::new(
        vec![-0.5, -0.5, -0.5, -0.5, 0.5, -0.5, 0.0, -0.5],
        vec![0.5, 0.5, 0.5, 0.5, 1.5, 0.5, 1.0, 0.5],
    )
    .unwrap();
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for order in 1..=2 {
        let orbit = OrbitModel::build(GravityModel::earth(false), order, domain.clone()).unwrap();
        assert!(orbit.model.diagonalizable());
        let point = proptest::collection::vec(-0.999f64..0.999, 8);
        runner
            .run(&point, |y| {
                let x = domain.from_canonical(&y);
                let back = orbit.model.reconstruct(&x).unwrap();
                for (a, b) in back.iter().zip(&x) {
                    prop_assert!((a - b).abs() <= 1e-10, "order {}: {} vs {}", order, a, b);
                }
                Ok(())
            })
            .unwrap();
    }
}

#[test]
fn eigenvalues_come_in_conjugate_pairs() {
    let (orbit, _) = j2_model();
    let eig = orbit.model.eigenvalue_report();
    assert_eq!(orbit.model.diagnostics().unpaired, 0);
    let scale = eig.iter().map(|e| e.0.hypot(e.1)).fold(1.0, f64::max);
    for &(re, im) in &eig {
        if im.abs() > 1e-10 * scale {
            let partner = eig
                .iter()
                .any(|&(r, i)| (r - re).abs() <= 1e-10 * scale && (i + im).abs() <= 1e-10 * scale);
            assert!(partner, "{re} + {im}i has no conjugate");
        }
    }
}

#[test]
fn state_transition_matrix_at_several_angles() {
    let (orbit, seed) = j2_model();
    let x0 = cartesian_to_elements(
        &CartesianState::new(Vector3::new(5000.0, 10000.0, 2100.0), *seed),
        &orbit.gravity,
    )
    .unwrap()
    .to_array();
    for theta in [0.0, 0.4, 1.0, 1.75] {
        let stm = orbit.model.state_transition_matrix(&x0, theta).unwrap();
        for j in 0..8 {
            let h = 1e-6 * x0[j].abs().max(1e-2);
            let (mut up, mut down) = (x0, x0);
            up[j] += h;
            down[j] -= h;
            let a = orbit.model.propagate(&up, theta).unwrap();
            let b = orbit.model.propagate(&down, theta).unwrap();
            let col: Vec<f64> = a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let scale = col.iter().map(|v| v.abs()).fold(1e-8, f64::max);
            for (i, v) in col.iter().enumerate() {
                assert!(
                    (stm[(i, j)] - v).abs() <= 1e-4 * scale,
                    "θ = {theta}, ({i}, {j}): {} vs {v}",
                    stm[(i, j)]
                );
            }
        }
    }
}

fn linear_model(a: &Matrix3<f64>, order: usize) -> KoopmanModel {
    let rows: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| a[(i, j)]).collect()).collect();
    let field = PolynomialField::affine(&rows, &[0.0; 3]);
    let basis = build_basis(3, order, DomainBox::unit(3)).unwrap();
    KoopmanModel::build(&field, basis).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn linear_dynamics_propagate_exactly(
        entries in proptest::array::uniform9(-0.4f64..0.4),
        x0 in proptest::array::uniform3(-0.9f64..0.9),
        order in 1usize..=2,
        theta in 0.0f64..(2.0 * TAU),
    ) {
        let a = Matrix3::from_row_slice(&entries);
        let model = linear_model(&a, order);
        let got = model.propagate(&x0, theta).unwrap();
        let exact = (a * theta).exp() * Vector3::from(x0);
        let scale = exact.amax().max(1.0);
        for i in 0..3 {
            prop_assert!((got[i] - exact[i]).abs() <= 1e-10 * scale, "{} vs {}", got[i], exact[i]);
        }
    }
}
