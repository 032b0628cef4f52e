//! Direct numerical propagation in Cartesian and element coordinates.

use std::io::Write;
use std::sync::atomic::AtomicBool;

use nalgebra::Vector3;

use crate::elements::{element_dynamics, CartesianState, ElementState, GravityModel, ELEMENT_COUNT};
use crate::error::{Error, Result};

use super::integrator::{integrate, IntegratorConfig};

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub final_state: CartesianState,
    /// Every accepted integrator step, starting at `t = 0`.
    pub samples: Vec<(f64, CartesianState)>,
    /// Largest relative change of the specific energy along the samples.
    pub energy_drift: f64,
}

/// Point-mass plus (optionally) J2 acceleration, km/s².
pub fn gravity_acceleration(position: &Vector3<f64>, gravity: &GravityModel) -> Vector3<f64> {
    let r = position.norm();
    let mut a = -position * (gravity.mu / (r * r * r));
    let j2 = gravity.active_j2();
    if j2 != 0.0 {
        let z2 = (position.z / r).powi(2);
        let f = 1.5 * j2 * gravity.mu * gravity.radius * gravity.radius / r.powi(5);
        a += Vector3::new(
            position.x * (5.0 * z2 - 1.0),
            position.y * (5.0 * z2 - 1.0),
            position.z * (5.0 * z2 - 3.0),
        ) * f;
    }
    a
}

/// Specific energy including the J2 potential when enabled, km²/s².
pub fn specific_energy(state: &CartesianState, gravity: &GravityModel) -> f64 {
    let r = state.position.norm();
    let z2 = (state.position.z / r).powi(2);
    let j2 = gravity.mu * gravity.active_j2() * gravity.radius * gravity.radius * (3.0 * z2 - 1.0) / (2.0 * r.powi(3));
    0.5 * state.velocity.norm_squared() - gravity.mu / r + j2
}

fn cartesian_rhs(gravity: &GravityModel) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
    move |_, y, dy| {
        let a = gravity_acceleration(&Vector3::new(y[0], y[1], y[2]), gravity);
        dy[..3].copy_from_slice(&y[3..6]);
        dy[3] = a.x;
        dy[4] = a.y;
        dy[5] = a.z;
    }
}

pub fn propagate_numeric(
    state0: &CartesianState,
    tof: f64,
    gravity: &GravityModel,
    config: &IntegratorConfig,
) -> Result<PropagationResult> {
    propagate_numeric_cancellable(state0, tof, gravity, config, None)
}

/// As [`propagate_numeric`], polling `cancel` between steps.
pub fn propagate_numeric_cancellable(
    state0: &CartesianState,
    tof: f64,
    gravity: &GravityModel,
    config: &IntegratorConfig,
    cancel: Option<&AtomicBool>,
) -> Result<PropagationResult> {
    gravity.validate()?;
    if !(tof >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time of flight must be nonnegative, got {tof}"
        )));
    }
    let e0 = specific_energy(state0, gravity);
    let mut samples = Vec::new();
    let mut drift = 0.0f64;
    let y = integrate(
        cartesian_rhs(gravity),
        0.0,
        &state0.to_array(),
        tof,
        config,
        cancel,
        |t, y| {
            let s = CartesianState::from_array(y);
            drift = drift.max(((specific_energy(&s, gravity) - e0) / e0).abs());
            samples.push((t, s));
        },
    )?;
    Ok(PropagationResult {
        final_state: CartesianState::from_array(&y),
        samples,
        energy_drift: drift,
    })
}

#[derive(Debug, Clone)]
pub struct ElementTrajectory {
    /// `(θ, elements, elapsed seconds)` at every accepted step.
    pub samples: Vec<(f64, ElementState, f64)>,
    pub final_state: ElementState,
    /// Time elapsed over the span, from integrating `dt/dθ` alongside.
    pub elapsed: f64,
}

/// Integrate the element equations of motion in θ, carrying time as a ninth
/// component.
pub fn propagate_elements_numeric(
    x0: &ElementState,
    theta_span: f64,
    gravity: &GravityModel,
    config: &IntegratorConfig,
) -> Result<ElementTrajectory> {
    gravity.validate()?;
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
        let el = ElementState::from_array(y);
        dy[..ELEMENT_COUNT].copy_from_slice(&element_dynamics(&el, gravity));
        dy[ELEMENT_COUNT] = el.time_rate(gravity);
    };
    let mut y0 = x0.to_array().to_vec();
    y0.push(0.0);
    let mut samples = Vec::new();
    let y = integrate(rhs, 0.0, &y0, theta_span, config, None, |theta, y| {
        samples.push((theta, ElementState::from_array(y), y[ELEMENT_COUNT]));
    })?;
    Ok(ElementTrajectory {
        samples,
        final_state: ElementState::from_array(&y),
        elapsed: y[ELEMENT_COUNT],
    })
}

/// `t,x,y,z,vx,vy,vz` rows with a header.
pub fn write_trajectory_csv<W: Write>(mut out: W, samples: &[(f64, CartesianState)]) -> std::io::Result<()> {
    writeln!(out, "t,x,y,z,vx,vy,vz")?;
    for (t, s) in samples {
        let a = s.to_array();
        writeln!(
            out,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            t, a[0], a[1], a[2], a[3], a[4], a[5]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{cartesian_to_elements, elements_to_cartesian, EARTH_MU};
    use std::f64::consts::TAU;

    #[test]
    fn circular_orbit_closes_after_one_period() {
        let g = GravityModel::earth(false);
        let r = 7000.0;
        let v = (EARTH_MU / r).sqrt();
        let s0 = CartesianState::new(Vector3::new(r, 0.0, 0.0), Vector3::new(0.0, v * 0.8, v * 0.6));
        let period = TAU * (r.powi(3) / EARTH_MU).sqrt();
        let res = propagate_numeric(&s0, period, &g, &IntegratorConfig::default()).unwrap();
        assert!((res.final_state.position - s0.position).norm() < 1e-8);
        assert!(res.energy_drift < 1e-12);
    }

    #[test]
    fn j2_energy_is_conserved() {
        let g = GravityModel::earth(true);
        let s0 = CartesianState::new(
            Vector3::new(5000.0, 10000.0, 2100.0),
            Vector3::new(-5.99249502, 1.92536671, 3.24563805),
        );
        let res = propagate_numeric(&s0, 30000.0, &g, &IntegratorConfig::default()).unwrap();
        assert!(res.energy_drift < 1e-10, "{}", res.energy_drift);
    }

    #[test]
    fn element_and_cartesian_propagation_agree() {
        let g = GravityModel::earth(true);
        let s0 = CartesianState::new(
            Vector3::new(5000.0, 10000.0, 2100.0),
            Vector3::new(-5.99249502, 1.92536671, 3.24563805),
        );
        let el0 = cartesian_to_elements(&s0, &g).unwrap();
        let traj = propagate_elements_numeric(&el0, 2.5, &g, &IntegratorConfig::default()).unwrap();
        let via_elements = elements_to_cartesian(&traj.final_state, &g).unwrap();
        let direct = propagate_numeric(&s0, traj.elapsed, &g, &IntegratorConfig::default()).unwrap();
        let miss = (via_elements.position - direct.final_state.position).norm();
        assert!(miss < 1e-6, "miss {miss} km");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let s = CartesianState::new(Vector3::new(1.0, 2.0, 3.0), Vector3::new(4.0, 5.0, 6.0));
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &[(0.0, s), (1.5, s)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,y,z,vx,vy,vz");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1.500000000000e0,1.000000000000e0"));
    }
}
