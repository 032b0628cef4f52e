//! Cartesian, spherical and polynomial-element representations of an orbital
//! state, and the element-space equations of motion under J2.
//!
//! The eight elements are all dimensionless (β in radians). With J2 switched
//! off, `(Λ, η)` and `(s, γ)` rotate rigidly in the in-plane angle θ and the
//! other four are constant.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::koopman::{Polynomial, PolynomialField};

pub const EARTH_MU: f64 = 398_600.441_8;
pub const EARTH_RADIUS: f64 = 6_378.137;
pub const EARTH_J2: f64 = 1.082_626_68e-3;

/// Number of polynomial orbital elements.
pub const ELEMENT_COUNT: usize = 8;

pub const ELEMENT_NAMES: [&str; ELEMENT_COUNT] = ["lambda", "eta", "s", "gamma", "kappa", "beta", "chi", "rho"];

/// `cos φ` below which a state is treated as lying on the polar axis.
const POLAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GravityModel {
    /// km³/s²
    pub mu: f64,
    /// km
    pub radius: f64,
    pub j2: f64,
    pub j2_enabled: bool,
}

impl Default for GravityModel {
    fn default() -> Self {
        Self {
            mu: EARTH_MU,
            radius: EARTH_RADIUS,
            j2: EARTH_J2,
            j2_enabled: false,
        }
    }
}

impl GravityModel {
    pub fn earth(j2_enabled: bool) -> Self {
        Self {
            j2_enabled,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0)
            || !(self.radius > 0.0)
            || !(self.j2 >= 0.0)
            || !self.mu.is_finite()
            || !self.radius.is_finite()
        {
            return Err(Error::InvalidArgument(format!(
                "gravity needs mu > 0, radius > 0, j2 >= 0 (got {}, {}, {})",
                self.mu, self.radius, self.j2
            )));
        }
        Ok(())
    }

    /// J2 coefficient as seen by the dynamics (zero when disabled).
    pub fn active_j2(&self) -> f64 {
        if self.j2_enabled {
            self.j2
        } else {
            0.0
        }
    }

    /// Time per radian of θ is `time_scale / (κ (Λ + κ)²)`.
    pub fn time_scale(&self) -> f64 {
        self.radius.powf(1.5) / self.mu.sqrt()
    }

    /// Velocity unit of η and the `Λ` combination, `√(μ/R)`.
    pub fn velocity_scale(&self) -> f64 {
        (self.mu / self.radius).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    /// km
    pub position: Vector3<f64>,
    /// km/s
    pub velocity: Vector3<f64>,
}

impl CartesianState {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>) -> Self {
        Self { position, velocity }
    }

    pub fn to_array(&self) -> [f64; 6] {
        let (r, v) = (self.position, self.velocity);
        [r.x, r.y, r.z, v.x, v.y, v.z]
    }

    pub fn from_array(a: &[f64]) -> Self {
        Self {
            position: Vector3::new(a[0], a[1], a[2]),
            velocity: Vector3::new(a[3], a[4], a[5]),
        }
    }

    /// Two-body specific energy `v²/2 − μ/r`, km²/s².
    pub fn specific_energy(&self, mu: f64) -> f64 {
        0.5 * self.velocity.norm_squared() - mu / self.position.norm()
    }

    pub fn angular_momentum(&self) -> Vector3<f64> {
        self.position.cross(&self.velocity)
    }
}

/// Radius, latitude, longitude and their conjugate momenta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalState {
    /// km
    pub r: f64,
    /// latitude φ, rad
    pub lat: f64,
    /// longitude λ, rad
    pub lon: f64,
    /// radial velocity, km/s
    pub p_r: f64,
    /// `r² φ̇`, km²/s
    pub p_lat: f64,
    /// `r² cos²φ λ̇`, km²/s
    pub p_lon: f64,
}

impl SphericalState {
    /// Angular momentum `p_θ = √(p_φ² + p_λ²/cos²φ)`.
    pub fn angular_momentum(&self) -> f64 {
        let c = self.lat.cos();
        (self.p_lat * self.p_lat + self.p_lon * self.p_lon / (c * c)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementState {
    pub lambda: f64,
    pub eta: f64,
    pub s: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub beta: f64,
    pub chi: f64,
    pub rho: f64,
}

impl ElementState {
    pub fn to_array(&self) -> [f64; ELEMENT_COUNT] {
        [
            self.lambda,
            self.eta,
            self.s,
            self.gamma,
            self.kappa,
            self.beta,
            self.chi,
            self.rho,
        ]
    }

    pub fn from_array(a: &[f64]) -> Self {
        Self {
            lambda: a[0],
            eta: a[1],
            s: a[2],
            gamma: a[3],
            kappa: a[4],
            beta: a[5],
            chi: a[6],
            rho: a[7],
        }
    }

    /// `dt/dθ = r²/p_θ` in seconds per radian.
    pub fn time_rate(&self, gravity: &GravityModel) -> f64 {
        let w = self.lambda + self.kappa;
        gravity.time_scale() / (self.kappa * w * w)
    }
}

pub fn cartesian_to_spherical(state: &CartesianState) -> Result<SphericalState> {
    let [x, y, z] = [state.position.x, state.position.y, state.position.z];
    let [vx, vy, vz] = [state.velocity.x, state.velocity.y, state.velocity.z];
    if !state.to_array().iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("cartesian state has non-finite entries".into()));
    }
    let r = state.position.norm();
    let rxy = x.hypot(y);
    if r == 0.0 || rxy <= POLAR_TOLERANCE * r {
        return Err(Error::SingularGeometry("position lies on the polar axis".into()));
    }
    let lat = (z / r).asin();
    let lon = y.atan2(x);
    let p_r = state.position.dot(&state.velocity) / r;
    let p_lat = (vz * rxy * rxy - z * (x * vx + y * vy)) / rxy;
    let p_lon = x * vy - y * vx;
    Ok(SphericalState {
        r,
        lat,
        lon,
        p_r,
        p_lat,
        p_lon,
    })
}

pub fn spherical_to_cartesian(state: &SphericalState) -> CartesianState {
    let (sl, cl) = state.lat.sin_cos();
    let (so, co) = state.lon.sin_cos();
    let r_hat = Vector3::new(cl * co, cl * so, sl);
    let lat_hat = Vector3::new(-sl * co, -sl * so, cl);
    let lon_hat = Vector3::new(-so, co, 0.0);
    let velocity = r_hat * state.p_r + lat_hat * (state.p_lat / state.r) + lon_hat * (state.p_lon / (state.r * cl));
    CartesianState {
        position: r_hat * state.r,
        velocity,
    }
}

/// Angle from the ascending node direction to the current longitude,
/// measured in the equatorial plane. Continuous along a pass via the sign of
/// the latitude momentum.
fn node_offset(lat: f64, p_lat: f64, p_lon: f64) -> Result<f64> {
    let t = lat.tan();
    let den = (p_lat * p_lat + p_lon * p_lon * t * t).sqrt();
    if den == 0.0 {
        // equatorial: the node is undefined and taken at the current longitude
        return Ok(0.0);
    }
    let arg = t * p_lon / den;
    if !(arg.abs() <= 1.0 + 1e-12) {
        return Err(Error::SingularGeometry(format!(
            "node arcsine argument {arg} outside [-1, 1]"
        )));
    }
    let base = arg.clamp(-1.0, 1.0).asin();
    Ok(if p_lat < 0.0 { std::f64::consts::PI - base } else { base })
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

pub fn spherical_to_elements(state: &SphericalState, gravity: &GravityModel) -> Result<ElementState> {
    let p_theta = state.angular_momentum();
    if !(p_theta > 0.0) || !p_theta.is_finite() {
        return Err(Error::SingularGeometry("angular momentum is zero".into()));
    }
    if state.p_lon == 0.0 {
        return Err(Error::SingularGeometry("polar orbit (zero longitude momentum)".into()));
    }
    let (mu, rad) = (gravity.mu, gravity.radius);
    let s = state.lat.sin();
    let gamma = state.p_lat * state.lat.cos() / p_theta;
    let kappa = (mu * rad).sqrt() / p_theta;
    let rho = state.p_lon / p_theta;
    let incl_sq = s * s + gamma * gamma;
    if incl_sq == 0.0 && rho < 0.0 {
        return Err(Error::SingularGeometry("retrograde equatorial orbit".into()));
    }
    let chi = if incl_sq == 0.0 {
        f64::INFINITY
    } else {
        rho * kappa.powi(3) / incl_sq
    };
    let beta = wrap_angle(state.lon - node_offset(state.lat, state.p_lat, state.p_lon)?);
    Ok(ElementState {
        lambda: (rad / mu).sqrt() * (p_theta / state.r - mu / p_theta),
        eta: state.p_r * (rad / mu).sqrt(),
        s,
        gamma,
        kappa,
        beta,
        chi,
        rho,
    })
}

/// Inverse of [`spherical_to_elements`]. `χ` is redundant given `s, γ, κ, ρ`
/// and is not read.
pub fn elements_to_spherical(state: &ElementState, gravity: &GravityModel) -> Result<SphericalState> {
    if !state
        .to_array()
        .iter()
        .enumerate()
        .all(|(i, v)| i == 6 || v.is_finite())
    {
        return Err(Error::Inversion("element state has non-finite entries".into()));
    }
    if !(state.kappa > 0.0) {
        return Err(Error::Inversion(format!("kappa must be positive, got {}", state.kappa)));
    }
    if !(state.s.abs() <= 1.0) {
        return Err(Error::Inversion(format!("|s| must not exceed 1, got {}", state.s)));
    }
    let (mu, rad) = (gravity.mu, gravity.radius);
    let p_theta = (mu * rad).sqrt() / state.kappa;
    let den = gravity.velocity_scale() * (state.lambda + state.kappa);
    let r = p_theta / den;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Inversion(format!("reconstructed radius {r} is not positive")));
    }
    let lat = state.s.asin();
    let c = lat.cos();
    if c <= POLAR_TOLERANCE {
        return Err(Error::Inversion("latitude reaches the pole".into()));
    }
    let p_lat = state.gamma * p_theta / c;
    let p_lon = state.rho * p_theta;
    let lon = wrap_angle(state.beta + node_offset(lat, p_lat, p_lon)?);
    Ok(SphericalState {
        r,
        lat,
        lon,
        p_r: state.eta * gravity.velocity_scale(),
        p_lat,
        p_lon,
    })
}

pub fn cartesian_to_elements(state: &CartesianState, gravity: &GravityModel) -> Result<ElementState> {
    spherical_to_elements(&cartesian_to_spherical(state)?, gravity)
}

pub fn elements_to_cartesian(state: &ElementState, gravity: &GravityModel) -> Result<CartesianState> {
    Ok(spherical_to_cartesian(&elements_to_spherical(state, gravity)?))
}

/// `H = ½(p_r² + p_φ²/r² + p_λ²/(r² cos²φ)) − μ/r + μ J2 R² (3 sin²φ − 1) / (2 r³)`.
pub fn hamiltonian(state: &SphericalState, gravity: &GravityModel) -> f64 {
    let r = state.r;
    let c = state.lat.cos();
    let kinetic = 0.5
        * (state.p_r * state.p_r + state.p_lat * state.p_lat / (r * r) + state.p_lon * state.p_lon / (r * r * c * c));
    let s = state.lat.sin();
    let j2 =
        gravity.mu * gravity.active_j2() * gravity.radius * gravity.radius * (3.0 * s * s - 1.0) / (2.0 * r.powi(3));
    kinetic - gravity.mu / r + j2
}

/// Derivatives of the eight elements with respect to θ.
pub fn element_dynamics(state: &ElementState, gravity: &GravityModel) -> [f64; ELEMENT_COUNT] {
    let ElementState {
        lambda: l,
        eta,
        s,
        gamma: g,
        kappa: k,
        beta: _,
        chi,
        rho,
    } = *state;
    let j = gravity.active_j2();
    if j == 0.0 {
        return [-eta, l, g, -s, 0.0, 0.0, 0.0, 0.0];
    }
    let k3 = k * k * k;
    let w = l + k;
    [
        -eta - 3.0 * j * s * g * k3 * w * (l + 2.0 * k),
        l + 1.5 * j * k3 * w * w * (3.0 * s * s - 1.0),
        g,
        -s - 3.0 * j * s * rho * rho * k3 * w,
        3.0 * j * s * g * k3 * k * w,
        -3.0 * j * s * s * chi * w,
        12.0 * j * s * g * chi * k3 * w + 6.0 * j * s * g * rho * chi * chi * w,
        3.0 * j * s * g * rho * k3 * w,
    ]
}

/// The element equations of motion as an explicit polynomial field, built
/// term by term from polynomial algebra.
pub fn element_field(gravity: &GravityModel) -> PolynomialField {
    let d = ELEMENT_COUNT;
    let v = |i| Polynomial::variable(d, i);
    let (l, eta, s, g, k, chi, rho) = (v(0), v(1), v(2), v(3), v(4), v(6), v(7));
    let j = gravity.active_j2();
    let zero = Polynomial::zero(d);
    let k3 = k.pow(3);
    let w = &l + &k;
    let sg = &s * &g;
    let j2_terms = [
        // Λ
        (&sg * &k3) * &w * (&l + &k.scale(2.0)) * (-3.0 * j),
        // η
        &(&k3 * &w.pow(2)) * &(s.pow(2).scale(3.0) - Polynomial::constant(d, 1.0)) * (1.5 * j),
        zero.clone(),
        // γ
        &(&s * &rho.pow(2)) * &(&k3 * &w) * (-3.0 * j),
        // κ
        &(&sg * &k.pow(4)) * &w * (3.0 * j),
        // β
        &(&s.pow(2) * &chi) * &w * (-3.0 * j),
        // χ
        &(&(&sg * &chi) * &k3) * &w * (12.0 * j) + &(&(&sg * &rho) * &chi.pow(2)) * &w * (6.0 * j),
        // ρ
        &(&sg * &rho) * &(&k3 * &w) * (3.0 * j),
    ];
    let linear = [
        -&eta,
        l.clone(),
        g.clone(),
        -&s,
        zero.clone(),
        zero.clone(),
        zero.clone(),
        zero,
    ];
    let components = linear.into_iter().zip(j2_terms).map(|(a, b)| a + b).collect();
    PolynomialField::new(components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::koopman::DynamicsField;
    use proptest::prelude::*;

    fn curtis_state() -> CartesianState {
        CartesianState::new(
            Vector3::new(5000.0, 10000.0, 2100.0),
            Vector3::new(-5.99249502, 1.92536671, 3.24563805),
        )
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn equatorial_circular_spherical() {
        let a = 7000.0;
        let v = (EARTH_MU / a).sqrt();
        let sph = cartesian_to_spherical(&CartesianState::new(
            Vector3::new(a, 0.0, 0.0),
            Vector3::new(0.0, v, 0.0),
        ))
        .unwrap();
        assert_eq!((sph.r, sph.lat, sph.lon, sph.p_r, sph.p_lat), (a, 0.0, 0.0, 0.0, 0.0));
        assert!((sph.p_lon - a * v).abs() < 1e-9);
        let el = spherical_to_elements(&sph, &GravityModel::default()).unwrap();
        assert!(el.lambda.abs() < 1e-12 && el.eta == 0.0 && el.s == 0.0 && el.gamma == 0.0);
        assert!((el.rho - 1.0).abs() < 1e-15);
        assert_eq!(el.chi, f64::INFINITY);
        // inverse does not need chi
        let back = elements_to_spherical(&el, &GravityModel::default()).unwrap();
        assert!((back.r - a).abs() < 1e-8 && back.lat == 0.0 && back.p_lat == 0.0);
    }

    #[test]
    fn circular_radius_from_elements() {
        let gravity = GravityModel::default();
        let el = ElementState {
            lambda: 0.0,
            eta: 0.0,
            s: 0.2,
            gamma: 0.1,
            kappa: 0.9,
            beta: 0.3,
            chi: 0.0,
            rho: 0.8,
        };
        let sph = elements_to_spherical(&el, &gravity).unwrap();
        let p_theta = (gravity.mu * gravity.radius).sqrt() / el.kappa;
        assert!(rel_close(sph.r, p_theta * p_theta / gravity.mu, 1e-14));
    }

    #[test]
    fn singular_geometries_rejected() {
        let g = GravityModel::default();
        let polar_pos = CartesianState::new(Vector3::new(0.0, 0.0, 7000.0), Vector3::new(7.0, 0.0, 0.0));
        assert!(matches!(
            cartesian_to_spherical(&polar_pos),
            Err(Error::SingularGeometry(_))
        ));
        let polar_orbit = CartesianState::new(Vector3::new(7000.0, 0.0, 0.0), Vector3::new(0.0, 0.0, 7.5));
        assert!(matches!(
            cartesian_to_elements(&polar_orbit, &g),
            Err(Error::SingularGeometry(_))
        ));
        let retro = CartesianState::new(Vector3::new(7000.0, 0.0, 0.0), Vector3::new(0.0, -7.5, 0.0));
        assert!(matches!(
            cartesian_to_elements(&retro, &g),
            Err(Error::SingularGeometry(_))
        ));
        let bad = ElementState::from_array(&[-2.0, 0.0, 0.1, 0.0, 1.0, 0.0, 0.0, 0.5]);
        assert!(matches!(elements_to_spherical(&bad, &g), Err(Error::Inversion(_))));
    }

    #[test]
    fn curtis_norm_and_momentum() {
        let state = curtis_state();
        let sph = cartesian_to_spherical(&state).unwrap();
        assert!((sph.r - 11375.85).abs() < 0.01);
        let el = cartesian_to_elements(&state, &GravityModel::default()).unwrap();
        let h = state.angular_momentum().norm();
        let p_theta = (EARTH_MU * EARTH_RADIUS).sqrt() / el.kappa;
        assert!(rel_close(p_theta, h, 1e-12));
        assert!(rel_close(sph.angular_momentum(), h, 1e-12));
    }

    #[test]
    fn hamiltonian_matches_cartesian_energy() {
        let g = GravityModel::default();
        let state = curtis_state();
        let sph = cartesian_to_spherical(&state).unwrap();
        assert!(rel_close(hamiltonian(&sph, &g), state.specific_energy(g.mu), 1e-13));
        let r = 8000.0;
        let circ = SphericalState {
            r,
            lat: 0.0,
            lon: 1.0,
            p_r: 0.0,
            p_lat: 0.0,
            p_lon: (g.mu * r).sqrt(),
        };
        assert!(rel_close(hamiltonian(&circ, &g), -g.mu / (2.0 * r), 1e-14));
    }

    #[test]
    fn linear_part_without_j2() {
        let g = GravityModel::earth(false);
        let el = ElementState::from_array(&[0.1, 0.0, 0.0, 0.0, 0.9, 0.2, 0.3, 0.7]);
        assert_eq!(element_dynamics(&el, &g), [0.0, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn j2_rows_vanish_off_the_equator_crossing() {
        let g = GravityModel::earth(true);
        let el = ElementState::from_array(&[0.1, 0.05, 0.0, 0.0, 0.9, 0.2, 0.3, 0.7]);
        let d = element_dynamics(&el, &g);
        assert_eq!(d[4], 0.0);
        assert_eq!(d[7], 0.0);
        assert_eq!(d[6], 0.0);
        assert_eq!(d[0], -0.05);
    }

    /// Element rates from finite differences of the Cartesian J2 flow,
    /// converted to θ-rates through dt/dθ.
    #[test]
    fn dynamics_match_cartesian_finite_differences() {
        let g = GravityModel::earth(true);
        let state = curtis_state();
        let el = cartesian_to_elements(&state, &g).unwrap();
        let accel = |s: &CartesianState| {
            let r = s.position;
            let rn = r.norm();
            let mut a = -r * (g.mu / rn.powi(3));
            let z2 = (r.z / rn).powi(2);
            let f = 1.5 * g.j2 * g.mu * g.radius * g.radius / rn.powi(5);
            a += Vector3::new(r.x * (5.0 * z2 - 1.0), r.y * (5.0 * z2 - 1.0), r.z * (5.0 * z2 - 3.0)) * f;
            a
        };
        let h = 1e-2;
        let shift = |dt: f64| {
            let s = CartesianState::new(
                state.position + state.velocity * dt,
                state.velocity + accel(&state) * dt,
            );
            // second-order correction for the position
            let s = CartesianState::new(s.position + accel(&state) * (0.5 * dt * dt), s.velocity);
            cartesian_to_elements(&s, &g).unwrap().to_array()
        };
        let plus = shift(h);
        let minus = shift(-h);
        let rate = el.time_rate(&g);
        let d = element_dynamics(&el, &g);
        for i in 0..ELEMENT_COUNT {
            let fd = (plus[i] - minus[i]) / (2.0 * h) * rate;
            assert!(
                (fd - d[i]).abs() < 1e-6 * d[i].abs().max(1e-3),
                "element {i}: {fd} vs {}",
                d[i]
            );
        }
    }

    fn random_bound_state() -> impl Strategy<Value = CartesianState> {
        (
            7000.0..40000.0f64,
            0.05..0.95f64,
            -3.0..3.0f64,
            -1.2..1.2f64,
            0.05..1.5f64,
            0.3..1.3f64,
            -0.5..0.5f64,
        )
            .prop_map(|(r, cl_frac, lon, lat, incl, vfrac, fpa)| {
                let lat = lat * cl_frac;
                let pos = Vector3::new(r * lat.cos() * lon.cos(), r * lat.cos() * lon.sin(), r * lat.sin());
                let r_hat = pos / r;
                let east = Vector3::new(-lon.sin(), lon.cos(), 0.0);
                let north = r_hat.cross(&east);
                let dir = east * incl.cos() + north * incl.sin();
                let speed = vfrac * (EARTH_MU / r).sqrt();
                let vel = (dir * fpa.cos() + r_hat * fpa.sin()) * speed;
                CartesianState::new(pos, vel)
            })
    }

    proptest! {
        #[test]
        fn round_trip_through_elements(state in random_bound_state()) {
            let g = GravityModel::default();
            let sph = cartesian_to_spherical(&state).unwrap();
            let back_c = spherical_to_cartesian(&sph);
            for (a, b) in state.to_array().iter().zip(back_c.to_array()) {
                prop_assert!(rel_close(*a, b, 1e-12));
            }
            let el = spherical_to_elements(&sph, &g).unwrap();
            let back = elements_to_cartesian(&el, &g).unwrap();
            for (a, b) in state.to_array().iter().zip(back.to_array()) {
                prop_assert!((a - b).abs() <= 1e-10 * state.position.norm().max(1.0), "{a} vs {b}");
            }
            let h = state.angular_momentum().norm();
            prop_assert!(rel_close((g.mu * g.radius).sqrt() / el.kappa, h, 1e-12));
        }

        #[test]
        fn polynomial_field_matches_hand_coded(x in proptest::collection::vec(-1.5..1.5f64, ELEMENT_COUNT), j2 in proptest::bool::ANY) {
            let g = GravityModel { j2: 0.05, ..GravityModel::earth(j2) };
            let el = ElementState::from_array(&x);
            let direct = element_dynamics(&el, &g);
            let mut poly = [0.0; ELEMENT_COUNT];
            element_field(&g).evaluate(&x, &mut poly);
            for i in 0..ELEMENT_COUNT {
                prop_assert!((direct[i] - poly[i]).abs() <= 1e-13 * direct[i].abs().max(1.0), "{i}: {} vs {}", direct[i], poly[i]);
            }
        }
    }

    #[test]
    fn field_degree_is_seven() {
        assert_eq!(element_field(&GravityModel::earth(true)).polynomial_degree(), 7);
        assert_eq!(element_field(&GravityModel::earth(false)).polynomial_degree(), 1);
    }
}
