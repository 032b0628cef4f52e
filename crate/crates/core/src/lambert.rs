//! Lambert targeting by Levenberg–Marquardt shooting through a Koopman
//! element propagator.
//!
//! The propagation variable is the in-plane angle θ, so the target angle
//! `Δθ + 2πN` is fixed by geometry and the time of flight enters the
//! residual instead: `[r(θ_f) − r_f ; w (t(θ_f) − tof)]`.

use std::f64::consts::{PI, TAU};

use faer::Mat;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::basis::{build_basis_with_cap, DomainBox, DEFAULT_MAX_BASIS_SIZE};
use crate::elements::{
    cartesian_to_elements, element_field, elements_to_cartesian, CartesianState, ElementState, GravityModel,
    ELEMENT_COUNT,
};
use crate::error::{Error, Result};
use crate::koopman::{KoopmanModel, PanelFlows};

/// Width of one time-of-flight quadrature panel in θ.
const PANEL_WIDTH: f64 = PI / 4.0;
const NODES_PER_PANEL: usize = 12;
/// Relative step for finite-differencing the coordinate transforms.
const TRANSFORM_STEP: f64 = 1e-6;
const MAX_DAMPING: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambertProblem {
    /// km
    pub r0: Vector3<f64>,
    /// km
    pub rf: Vector3<f64>,
    /// s
    pub tof: f64,
    pub revolutions: u32,
    pub gravity: GravityModel,
    pub prograde: bool,
}

impl LambertProblem {
    pub fn new(r0: Vector3<f64>, rf: Vector3<f64>, tof: f64, revolutions: u32, gravity: GravityModel) -> Self {
        Self {
            r0,
            rf,
            tof,
            revolutions,
            gravity,
            prograde: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gravity.validate()?;
        if !(self.tof > 0.0) || !self.tof.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time of flight must be positive, got {}",
                self.tof
            )));
        }
        if !self.r0.iter().chain(self.rf.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("position vectors must be finite".into()));
        }
        Ok(())
    }

    pub fn delta_theta(&self) -> Result<f64> {
        delta_theta(&self.r0, &self.rf, self.revolutions, self.prograde)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMode {
    /// Koopman state transition matrix chained with finite-differenced
    /// coordinate transforms.
    SpectralStm,
    /// Central differences of the full residual.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub lm_initial_damping: f64,
    /// km
    pub lm_tolerance_position: f64,
    /// s
    pub lm_tolerance_time: f64,
    pub max_iterations: usize,
    pub jacobian_mode: JacobianMode,
    /// km per second of time error.
    pub time_weight: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lm_initial_damping: 1e-3,
            lm_tolerance_position: 1e-3,
            lm_tolerance_time: 1e-3,
            max_iterations: 100,
            jacobian_mode: JacobianMode::SpectralStm,
            time_weight: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lm_initial_damping", self.lm_initial_damping),
            ("lm_tolerance_position", self.lm_tolerance_position),
            ("lm_tolerance_time", self.lm_tolerance_time),
            ("time_weight", self.time_weight),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferSolution {
    /// km/s
    pub v0: Vector3<f64>,
    /// Target angle including whole revolutions, rad.
    pub delta_theta: f64,
    /// km
    pub position_residual: f64,
    /// Model time of flight minus target, s.
    pub tof_residual: f64,
    /// kJ/kg
    pub specific_energy: f64,
    /// km
    pub semi_major_axis: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Transfer angle from `r0` to `rf` plus `2πN`, measured in the direction of
/// motion (counter-clockwise about +z when `prograde`).
pub fn delta_theta(r0: &Vector3<f64>, rf: &Vector3<f64>, revolutions: u32, prograde: bool) -> Result<f64> {
    let (n0, nf) = (r0.norm(), rf.norm());
    if n0 == 0.0 || nf == 0.0 {
        return Err(Error::InvalidArgument("position vectors must be nonzero".into()));
    }
    let cross = r0.cross(rf);
    let cos = (r0.dot(rf) / (n0 * nf)).clamp(-1.0, 1.0);
    let whole = TAU * revolutions as f64;
    if cross.norm() <= 1e-12 * n0 * nf {
        if cos > 0.0 {
            return Ok(whole);
        }
        return Err(Error::DegenerateGeometry(
            "anti-parallel position vectors leave the transfer plane undefined".into(),
        ));
    }
    let base = cos.acos();
    let long_way = if prograde { cross.z < 0.0 } else { cross.z >= 0.0 };
    Ok(if long_way { TAU - base } else { base } + whole)
}

/// Circular speed at `r0`, perpendicular to it, in the transfer plane.
pub fn circular_velocity_guess(
    r0: &Vector3<f64>,
    rf: &Vector3<f64>,
    gravity: &GravityModel,
    prograde: bool,
) -> Vector3<f64> {
    let r_hat = r0.normalize();
    let mut normal = r0.cross(rf);
    if normal.norm() <= 1e-12 * r0.norm() * rf.norm() {
        // plane undefined: equatorial-prograde perpendicular
        normal = Vector3::z();
        if r_hat.cross(&normal).norm() < 1e-12 {
            normal = Vector3::x();
        }
    }
    let mut normal = normal.normalize();
    if (prograde && normal.z < 0.0) || (!prograde && normal.z > 0.0) {
        normal = -normal;
    }
    normal.cross(&r_hat).normalize() * (gravity.mu / r0.norm()).sqrt()
}

/// `a = 1 / (2/|r0| − |v0|²/μ)`, km.
pub fn semi_major_axis(r0: &Vector3<f64>, v0: &Vector3<f64>, mu: f64) -> f64 {
    1.0 / (2.0 / r0.norm() - v0.norm_squared() / mu)
}

/// `E = v²/2 − μ/r = −μ/(2a)`, kJ/kg.
pub fn transfer_energy(r0: &Vector3<f64>, v0: &Vector3<f64>, mu: f64) -> f64 {
    0.5 * v0.norm_squared() - mu / r0.norm()
}

/// A Koopman element model together with the gravity it was built for.
#[derive(Debug, Clone)]
pub struct OrbitModel {
    pub model: KoopmanModel,
    pub gravity: GravityModel,
}

impl OrbitModel {
    pub fn build(gravity: GravityModel, max_order: usize, domain: DomainBox) -> Result<Self> {
        Self::build_with_cap(gravity, max_order, domain, DEFAULT_MAX_BASIS_SIZE)
    }

    pub fn build_with_cap(gravity: GravityModel, max_order: usize, domain: DomainBox, cap: usize) -> Result<Self> {
        gravity.validate()?;
        let basis = build_basis_with_cap(ELEMENT_COUNT, max_order, domain, cap)?;
        let model = KoopmanModel::build(&element_field(&gravity), basis)?;
        Ok(Self { model, gravity })
    }

    /// Flow maps needed to shoot to `theta_end`: the endpoint plus the
    /// time-of-flight quadrature nodes.
    pub fn transfer_flows(&self, theta_end: f64) -> Result<PanelFlows> {
        let panels = ((theta_end / PANEL_WIDTH).ceil() as usize).max(1);
        self.model.flows_on_panels(theta_end, panels, NODES_PER_PANEL)
    }
}

/// Box that admits any bound, non-polar initial state above the surface.
/// Exact for the unperturbed model, whose order-one expansion is exact
/// everywhere.
pub fn wide_element_domain() -> DomainBox {
    DomainBox::new(
        vec![-4.0, -4.0, -1.05, -1.05, 0.0, -PI - 0.1, -1.0e3, -1.05],
        vec![4.0, 4.0, 1.05, 1.05, 4.0, PI + 0.1, 1.0e3, 1.05],
    )
    .expect("static bounds are ordered")
}

/// Per-element floors on the half-width of a trajectory envelope. The last
/// four elements are constant without J2, so their width is set by these.
pub const ENVELOPE_FLOORS: [f64; ELEMENT_COUNT] = [0.02, 0.02, 0.02, 0.02, 0.02, 0.05, 0.02, 0.02];

/// Envelope of the elements along a trajectory, inflated by `inflation`
/// (0.5 for 50 %), with a floor per element. `χ` gets a floor relative to
/// its own size as well.
pub fn trajectory_domain(samples: &[ElementState], inflation: f64) -> Result<DomainBox> {
    let chi = samples.iter().map(|s| s.chi.abs()).fold(0.0, f64::max);
    let mut floors = ENVELOPE_FLOORS;
    floors[6] = floors[6].max(0.02 * chi);
    let arrays: Vec<[f64; ELEMENT_COUNT]> = samples.iter().map(ElementState::to_array).collect();
    DomainBox::envelope(arrays.iter().map(|a| a.as_slice()), inflation, &floors)
}

/// Element states at evenly spaced angles along a propagated trajectory.
pub fn sample_trajectory(
    model: &OrbitModel,
    x0: &ElementState,
    theta_end: f64,
    samples: usize,
) -> Result<Vec<ElementState>> {
    let n = samples.max(2);
    (0..n)
        .map(|k| {
            let theta = theta_end * k as f64 / (n - 1) as f64;
            model
                .model
                .propagate(&x0.to_array(), theta)
                .map(|x| ElementState::from_array(&x))
        })
        .collect()
}

/// Seconds elapsed while the propagated state sweeps `theta_span`.
pub fn time_of_flight(model: &KoopmanModel, x0: &ElementState, theta_span: f64, gravity: &GravityModel) -> Result<f64> {
    if !(theta_span >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "theta span must be nonnegative, got {theta_span}"
        )));
    }
    if theta_span == 0.0 {
        return Ok(0.0);
    }
    let panels = ((theta_span / PANEL_WIDTH).ceil() as usize).max(1);
    let flows = model.flows_on_panels(theta_span, panels, NODES_PER_PANEL)?;
    let l = model.basis().eval(&x0.to_array())?;
    quadrature_time(&flows, &l, gravity)
}

fn quadrature_time(flows: &PanelFlows, l: &[f64], gravity: &GravityModel) -> Result<f64> {
    let mut t = 0.0;
    for node in &flows.nodes {
        let x = ElementState::from_array(&node.flow.apply_values(l));
        let rate = x.time_rate(gravity);
        if !rate.is_finite() || !(x.kappa > 0.0) || !(x.lambda + x.kappa > 0.0) {
            return Err(Error::Propagation(format!(
                "time rate undefined at θ = {}",
                node.flow.theta()
            )));
        }
        t += node.weight * rate;
    }
    Ok(t)
}

/// Residual and intermediate states for one candidate velocity.
struct Shot {
    residual: [f64; 4],
    initial: ElementState,
    basis_values: Vec<f64>,
    final_elements: ElementState,
}

fn shoot(
    problem: &LambertProblem,
    v0: &Vector3<f64>,
    orbit: &OrbitModel,
    flows: &PanelFlows,
    weight: f64,
) -> Result<Shot> {
    let initial = cartesian_to_elements(&CartesianState::new(problem.r0, *v0), &orbit.gravity)?;
    let basis_values = orbit.model.basis().eval(&initial.to_array())?;
    let final_elements = ElementState::from_array(&flows.end.apply_values(&basis_values));
    let end = elements_to_cartesian(&final_elements, &orbit.gravity)?;
    let t = quadrature_time(flows, &basis_values, &orbit.gravity)?;
    let d = end.position - problem.rf;
    let residual = [d.x, d.y, d.z, weight * (t - problem.tof)];
    if residual.iter().any(|r| !r.is_finite()) {
        return Err(Error::Propagation("non-finite residual".into()));
    }
    Ok(Shot {
        residual,
        initial,
        basis_values,
        final_elements,
    })
}

fn check_model(problem: &LambertProblem, orbit: &OrbitModel) -> Result<()> {
    let (a, b) = (&problem.gravity, &orbit.gravity);
    if a.j2_enabled != b.j2_enabled || a.mu != b.mu || a.radius != b.radius || (a.j2_enabled && a.j2 != b.j2) {
        return Err(Error::ModelMismatch(format!(
            "problem gravity (J2 {}) does not match the model's (J2 {})",
            if a.j2_enabled { "on" } else { "off" },
            if b.j2_enabled { "on" } else { "off" }
        )));
    }
    Ok(())
}

/// `[r(θ_f) − r_f ; w (t(θ_f) − tof)]` for a candidate departure velocity.
pub fn shooting_residual(
    problem: &LambertProblem,
    v0: &Vector3<f64>,
    orbit: &OrbitModel,
    config: &SolverConfig,
) -> Result<[f64; 4]> {
    problem.validate()?;
    check_model(problem, orbit)?;
    let flows = orbit.transfer_flows(problem.delta_theta()?)?;
    shoot(problem, v0, orbit, &flows, config.time_weight).map(|s| s.residual)
}

fn cartesian_to_elements_jacobian(r0: &Vector3<f64>, v0: &Vector3<f64>, gravity: &GravityModel) -> Result<Mat<f64>> {
    let mut jac = Mat::<f64>::zeros(ELEMENT_COUNT, 3);
    for k in 0..3 {
        let h = TRANSFORM_STEP * v0.norm().max(1e-3);
        let mut vp = *v0;
        let mut vm = *v0;
        vp[k] += h;
        vm[k] -= h;
        let ep = cartesian_to_elements(&CartesianState::new(*r0, vp), gravity)?.to_array();
        let em = cartesian_to_elements(&CartesianState::new(*r0, vm), gravity)?.to_array();
        for i in 0..ELEMENT_COUNT {
            let mut diff = ep[i] - em[i];
            if i == 5 {
                // β is wrapped to (-π, π]
                diff = crate::elements::wrap_angle(diff);
            }
            jac[(i, k)] = diff / (2.0 * h);
        }
    }
    Ok(jac)
}

fn elements_to_position_jacobian(x: &ElementState, gravity: &GravityModel) -> Result<Mat<f64>> {
    let base = x.to_array();
    let mut jac = Mat::<f64>::zeros(3, ELEMENT_COUNT);
    for i in 0..ELEMENT_COUNT {
        if i == 6 {
            // χ does not enter the inverse transform
            continue;
        }
        let h = TRANSFORM_STEP * base[i].abs().max(1e-2);
        let mut p = base;
        let mut m = base;
        p[i] += h;
        m[i] -= h;
        let rp = elements_to_cartesian(&ElementState::from_array(&p), gravity)?.position;
        let rm = elements_to_cartesian(&ElementState::from_array(&m), gravity)?.position;
        for k in 0..3 {
            jac[(k, i)] = (rp[k] - rm[k]) / (2.0 * h);
        }
    }
    Ok(jac)
}

fn time_rate_gradient(x: &ElementState, gravity: &GravityModel) -> [f64; ELEMENT_COUNT] {
    let ts = gravity.time_scale();
    let w = x.lambda + x.kappa;
    let d_lambda = -2.0 * ts / (x.kappa * w * w * w);
    let d_kappa = -ts / (x.kappa * x.kappa * w * w) + d_lambda;
    let mut g = [0.0; ELEMENT_COUNT];
    g[0] = d_lambda;
    g[4] = d_kappa;
    g
}

fn spectral_jacobian(
    problem: &LambertProblem,
    v0: &Vector3<f64>,
    orbit: &OrbitModel,
    flows: &PanelFlows,
    shot: &Shot,
    weight: f64,
) -> Result<[[f64; 3]; 4]> {
    let basis = orbit.model.basis();
    let grad_l = basis.eval_gradient(&shot.initial.to_array())?;
    let d_el0 = cartesian_to_elements_jacobian(&problem.r0, v0, &orbit.gravity)?;
    // ∂L/∂v0, m × 3
    let dl_dv = &grad_l * &d_el0;
    let stm_end = flows.end.matrix() * &dl_dv;
    let d_pos = elements_to_position_jacobian(&shot.final_elements, &orbit.gravity)? * &stm_end;
    let mut jac = [[0.0; 3]; 4];
    for (k, row) in jac.iter_mut().take(3).enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = d_pos[(k, c)];
        }
    }
    for node in &flows.nodes {
        let x = ElementState::from_array(&node.flow.apply_values(&shot.basis_values));
        let g = time_rate_gradient(&x, &orbit.gravity);
        let stm = node.flow.matrix() * &dl_dv;
        for c in 0..3 {
            jac[3][c] += weight * node.weight * (g[0] * stm[(0, c)] + g[4] * stm[(4, c)]);
        }
    }
    Ok(jac)
}

fn finite_difference_jacobian(
    problem: &LambertProblem,
    v0: &Vector3<f64>,
    orbit: &OrbitModel,
    flows: &PanelFlows,
    weight: f64,
) -> Result<[[f64; 3]; 4]> {
    let mut jac = [[0.0; 3]; 4];
    for c in 0..3 {
        let h = TRANSFORM_STEP * v0.norm().max(1e-3);
        let mut vp = *v0;
        let mut vm = *v0;
        vp[c] += h;
        vm[c] -= h;
        let rp = shoot(problem, &vp, orbit, flows, weight)?.residual;
        let rm = shoot(problem, &vm, orbit, flows, weight)?.residual;
        for k in 0..4 {
            jac[k][c] = (rp[k] - rm[k]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Solve from the circular-velocity guess.
pub fn solve(problem: &LambertProblem, orbit: &OrbitModel, config: &SolverConfig) -> Result<TransferSolution> {
    let guess = circular_velocity_guess(&problem.r0, &problem.rf, &problem.gravity, problem.prograde);
    solve_from(problem, orbit, config, guess)
}

/// Solve from an explicit initial velocity.
pub fn solve_from(
    problem: &LambertProblem,
    orbit: &OrbitModel,
    config: &SolverConfig,
    guess: Vector3<f64>,
) -> Result<TransferSolution> {
    problem.validate()?;
    config.validate()?;
    check_model(problem, orbit)?;
    let theta = problem.delta_theta()?;
    let flows = orbit.transfer_flows(theta)?;
    solve_with_flows(problem, orbit, config, guess, &flows, theta)
}

fn cost(r: &[f64; 4]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn solve_with_flows(
    problem: &LambertProblem,
    orbit: &OrbitModel,
    config: &SolverConfig,
    guess: Vector3<f64>,
    flows: &PanelFlows,
    theta: f64,
) -> Result<TransferSolution> {
    let weight = config.time_weight;
    let mut v = guess;
    let mut shot = shoot(problem, &v, orbit, flows, weight).map_err(|e| Error::Seed(e.to_string()))?;
    let mut damping = config.lm_initial_damping;
    let done = |r: &[f64; 4]| {
        (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt() <= config.lm_tolerance_position
            && (r[3] / weight).abs() <= config.lm_tolerance_time
    };
    let mut iterations = 0;
    let mut converged = done(&shot.residual);
    while !converged && iterations < config.max_iterations {
        iterations += 1;
        let jac = match config.jacobian_mode {
            JacobianMode::SpectralStm => spectral_jacobian(problem, &v, orbit, flows, &shot, weight),
            JacobianMode::FiniteDifference => finite_difference_jacobian(problem, &v, orbit, flows, weight),
        };
        let jac = match jac {
            Ok(j) => j,
            Err(_) => finite_difference_jacobian(problem, &v, orbit, flows, weight)?,
        };
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for k in 0..4 {
            for a in 0..3 {
                jtr[a] += jac[k][a] * shot.residual[k];
                for b in 0..3 {
                    jtj[(a, b)] += jac[k][a] * jac[k][b];
                }
            }
        }
        let c0 = cost(&shot.residual);
        let mut improved = false;
        while damping <= MAX_DAMPING {
            let mut lhs = jtj;
            for a in 0..3 {
                lhs[(a, a)] += damping * jtj[(a, a)].max(1e-12);
            }
            let step = match lhs.lu().solve(&(-jtr)) {
                Some(s) if s.iter().all(|x| x.is_finite()) => s,
                _ => {
                    damping *= 10.0;
                    continue;
                }
            };
            let candidate = v + step;
            match shoot(problem, &candidate, orbit, flows, weight) {
                Ok(next) if cost(&next.residual) < c0 => {
                    v = candidate;
                    shot = next;
                    damping = (damping / 10.0).max(1e-15);
                    improved = true;
                    break;
                }
                _ => damping *= 10.0,
            }
        }
        converged = done(&shot.residual);
        if !improved {
            break;
        }
    }
    let r = shot.residual;
    let a = semi_major_axis(&problem.r0, &v, problem.gravity.mu);
    Ok(TransferSolution {
        v0: v,
        delta_theta: theta,
        position_residual: (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt(),
        tof_residual: r[3] / weight,
        specific_energy: transfer_energy(&problem.r0, &v, problem.gravity.mu),
        semi_major_axis: a,
        iterations,
        converged,
    })
}

#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub tof: f64,
    pub solution: Result<TransferSolution>,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub points: Vec<ScanPoint>,
    /// Index of the converged point with the lowest specific energy.
    pub argmin: Option<usize>,
}

impl ScanResult {
    pub fn total_iterations(&self) -> usize {
        self.points
            .iter()
            .filter_map(|p| p.solution.as_ref().ok())
            .map(|s| s.iterations)
            .sum()
    }

    pub fn minimum(&self) -> Option<(f64, &TransferSolution)> {
        self.argmin.map(|i| {
            (
                self.points[i].tof,
                self.points[i].solution.as_ref().expect("argmin is a solved point"),
            )
        })
    }
}

/// Solve `template` at each time of flight. With `warm_start`, each
/// converged velocity seeds the next point; otherwise every point starts
/// from the circular guess. Failures are recorded and the scan continues.
pub fn energy_scan(
    template: &LambertProblem,
    tof_grid: &[f64],
    orbit: &OrbitModel,
    config: &SolverConfig,
    warm_start: bool,
) -> Result<ScanResult> {
    if tof_grid.is_empty() {
        return Err(Error::InvalidArgument("time-of-flight grid is empty".into()));
    }
    config.validate()?;
    check_model(template, orbit)?;
    let theta = template.delta_theta()?;
    let flows = orbit.transfer_flows(theta)?;
    let cold = circular_velocity_guess(&template.r0, &template.rf, &template.gravity, template.prograde);
    let mut seed = cold;
    let mut points = Vec::with_capacity(tof_grid.len());
    for &tof in tof_grid {
        let problem = LambertProblem { tof, ..*template };
        let solution = problem.validate().and_then(|_| {
            solve_with_flows(
                &problem,
                orbit,
                config,
                if warm_start { seed } else { cold },
                &flows,
                theta,
            )
        });
        if let Ok(s) = &solution {
            if s.converged && warm_start {
                seed = s.v0;
            }
        }
        points.push(ScanPoint { tof, solution });
    }
    let argmin = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| match &p.solution {
            Ok(s) if s.converged => Some((i, s.specific_energy)),
            _ => None,
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    Ok(ScanResult { points, argmin })
}

/// Model for the unperturbed dynamics: order one over the wide box.
pub fn two_body_model(gravity: &GravityModel) -> Result<OrbitModel> {
    let g = GravityModel {
        j2_enabled: false,
        ..*gravity
    };
    OrbitModel::build(g, 1, wide_element_domain())
}

/// Domain for a J2 model of `problem`: the 50 %-inflated envelope of the
/// unperturbed transfer. Also returns that transfer's velocity, which seeds
/// the perturbed solve.
pub fn j2_domain_for(problem: &LambertProblem, config: &SolverConfig) -> Result<(DomainBox, Vector3<f64>)> {
    let unperturbed = two_body_model(&problem.gravity)?;
    let flat = LambertProblem {
        gravity: unperturbed.gravity,
        ..*problem
    };
    let seed = solve(&flat, &unperturbed, config)?;
    if !seed.converged {
        return Err(Error::Seed(format!(
            "unperturbed transfer did not converge (residual {:.3e} km)",
            seed.position_residual
        )));
    }
    let x0 = cartesian_to_elements(&CartesianState::new(problem.r0, seed.v0), &unperturbed.gravity)?;
    let samples = sample_trajectory(&unperturbed, &x0, seed.delta_theta, 64)?;
    Ok((trajectory_domain(&samples, 0.5)?, seed.v0))
}

/// J2 model over [`j2_domain_for`], plus the seed velocity.
pub fn j2_model_for(
    problem: &LambertProblem,
    max_order: usize,
    cap: usize,
    config: &SolverConfig,
) -> Result<(OrbitModel, Vector3<f64>)> {
    let (domain, seed) = j2_domain_for(problem, config)?;
    let gravity = GravityModel {
        j2_enabled: true,
        ..problem.gravity
    };
    Ok((OrbitModel::build_with_cap(gravity, max_order, domain, cap)?, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::EARTH_MU;

    fn curtis(tof: f64, n: u32) -> LambertProblem {
        LambertProblem::new(
            Vector3::new(5000.0, 10000.0, 2100.0),
            Vector3::new(-14600.0, 2500.0, 7000.0),
            tof,
            n,
            GravityModel::default(),
        )
    }

    #[test]
    fn delta_theta_cases() {
        let p = curtis(3600.0, 0);
        let d = delta_theta(&p.r0, &p.rf, 0, true).unwrap();
        assert!((d - 1.7504347625534349).abs() < 1e-13);
        let d2 = delta_theta(&p.r0, &p.rf, 2, true).unwrap();
        assert!((d2 - d - 4.0 * PI).abs() < 1e-13);
        assert_eq!(delta_theta(&p.r0, &(p.r0 * 2.0), 0, true).unwrap(), 0.0);
        assert!(matches!(
            delta_theta(&p.r0, &(-p.r0), 0, true),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(matches!(
            delta_theta(&Vector3::zeros(), &p.rf, 0, true),
            Err(Error::InvalidArgument(_))
        ));
        let retro = delta_theta(&p.r0, &p.rf, 0, false).unwrap();
        assert!((retro - (TAU - d)).abs() < 1e-13);
    }

    #[test]
    fn circular_guess_properties() {
        let p = curtis(3600.0, 0);
        let v = circular_velocity_guess(&p.r0, &p.rf, &p.gravity, true);
        assert!((v.norm() - (EARTH_MU / p.r0.norm()).sqrt()).abs() < 1e-12);
        assert!((v.norm() - 5.920).abs() < 1e-3);
        assert!(v.dot(&p.r0).abs() < 1e-10 * v.norm() * p.r0.norm());
        assert!(p.r0.cross(&v).z > 0.0);
        // degenerate plane falls back to equatorial prograde
        let w = circular_velocity_guess(&p.r0, &(p.r0 * 3.0), &p.gravity, true);
        assert!(w.dot(&p.r0).abs() < 1e-9 && p.r0.cross(&w).z > 0.0);
    }

    #[test]
    fn two_body_model_solves_curtis() {
        let p = curtis(3600.0, 0);
        let orbit = two_body_model(&p.gravity).unwrap();
        let sol = solve(&p, &orbit, &SolverConfig::default()).unwrap();
        assert!(sol.converged, "{sol:?}");
        let expected = Vector3::new(-5.99249502, 1.92536671, 3.24563805);
        assert!((sol.v0 - expected).norm() < 1e-6, "{}", sol.v0);
        let fd = solve(
            &p,
            &orbit,
            &SolverConfig {
                jacobian_mode: JacobianMode::FiniteDifference,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(fd.converged && (fd.v0 - sol.v0).norm() < 1e-6);
    }

    #[test]
    fn circular_time_of_flight_matches_kepler() {
        let g = GravityModel::default();
        let orbit = two_body_model(&g).unwrap();
        let r = 9000.0;
        let v = (g.mu / r).sqrt();
        let s = CartesianState::new(Vector3::new(r, 0.0, 0.0), Vector3::new(0.0, v * 0.6, v * 0.8));
        let x0 = cartesian_to_elements(&s, &g).unwrap();
        assert_eq!(time_of_flight(&orbit.model, &x0, 0.0, &g).unwrap(), 0.0);
        let t = time_of_flight(&orbit.model, &x0, TAU, &g).unwrap();
        let period = TAU * (r.powi(3) / g.mu).sqrt();
        assert!(((t - period) / period).abs() < 1e-8);
    }

    #[test]
    fn mismatched_model_rejected() {
        let p = curtis(3600.0, 0);
        let orbit = two_body_model(&p.gravity).unwrap();
        let j2 = LambertProblem {
            gravity: GravityModel::earth(true),
            ..p
        };
        assert!(matches!(
            solve(&j2, &orbit, &SolverConfig::default()),
            Err(Error::ModelMismatch(_))
        ));
    }

    #[test]
    fn solution_is_a_local_minimum() {
        let p = curtis(3600.0, 0);
        let orbit = two_body_model(&p.gravity).unwrap();
        let config = SolverConfig::default();
        let sol = solve(&p, &orbit, &config).unwrap();
        let r = shooting_residual(&p, &sol.v0, &orbit, &config).unwrap();
        let base = cost(&r).sqrt();
        assert!(base < 1e-3);
        let in_track = sol.v0.normalize() * 1e-3;
        let pert = shooting_residual(&p, &(sol.v0 + in_track), &orbit, &config).unwrap();
        assert!(cost(&pert).sqrt() > base);
    }
}
