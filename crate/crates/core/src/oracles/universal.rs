//! Universal-variables Lambert solver with Stumpff functions, single and
//! multiple revolution.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::elements::GravityModel;
use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 400;
const GOLDEN_ITERATIONS: usize = 200;

/// For `N > 0` two transfers share the time of flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambertBranch {
    /// Larger semi-major axis.
    HighEnergy,
    /// Smaller semi-major axis.
    LowEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniversalSolution {
    pub v0: Vector3<f64>,
    pub vf: Vector3<f64>,
    /// Universal variable `z = α χ²`.
    pub z: f64,
    pub iterations: usize,
}

impl UniversalSolution {
    pub fn specific_energy(&self, r0: &Vector3<f64>, mu: f64) -> f64 {
        0.5 * self.v0.norm_squared() - mu / r0.norm()
    }
}

/// Stumpff functions `C(z)`, `S(z)`.
pub fn stumpff(z: f64) -> (f64, f64) {
    if z.abs() < 1e-3 {
        // alternating series, truncated well below rounding at |z| < 1e-3
        let mut c = 0.0;
        let mut s = 0.0;
        let mut term_c = 0.5;
        let mut term_s = 1.0 / 6.0;
        for k in 0..8 {
            c += term_c;
            s += term_s;
            let k = k as f64;
            term_c *= -z / ((2.0 * k + 3.0) * (2.0 * k + 4.0));
            term_s *= -z / ((2.0 * k + 4.0) * (2.0 * k + 5.0));
        }
        (c, s)
    } else if z > 0.0 {
        let q = z.sqrt();
        ((1.0 - q.cos()) / z, (q - q.sin()) / (q * z))
    } else {
        let q = (-z).sqrt();
        ((q.cosh() - 1.0) / -z, (q.sinh() - q) / (q * -z))
    }
}

/// In-plane transfer angle in `[0, 2π)`, from `atan2` of the cross and dot
/// products, resolved by the direction of motion.
fn transfer_angle(r0: &Vector3<f64>, rf: &Vector3<f64>, prograde: bool) -> f64 {
    let cross = r0.cross(rf);
    let base = cross.norm().atan2(r0.dot(rf));
    let short = if prograde { cross.z >= 0.0 } else { cross.z < 0.0 };
    if short {
        base
    } else {
        TAU - base
    }
}

struct Geometry {
    r1: f64,
    r2: f64,
    a: f64,
    sqrt_mu: f64,
}

impl Geometry {
    fn y(&self, z: f64) -> f64 {
        let (c, s) = stumpff(z);
        self.r1 + self.r2 + self.a * (z * s - 1.0) / c.sqrt()
    }

    /// Time of flight at `z`; `None` where `y < 0`.
    fn time(&self, z: f64) -> Option<f64> {
        let (c, s) = stumpff(z);
        let y = self.r1 + self.r2 + self.a * (z * s - 1.0) / c.sqrt();
        if !(y >= 0.0) || !(c > 0.0) {
            return None;
        }
        Some(((y / c).powf(1.5) * s + self.a * y.sqrt()) / self.sqrt_mu)
    }
}

/// Solve for the departure velocity. For `N > 0` the high-energy branch is
/// returned; see [`universal_lambert_branch`] for the other.
pub fn universal_lambert(
    r0: &Vector3<f64>,
    rf: &Vector3<f64>,
    tof: f64,
    revolutions: u32,
    prograde: bool,
    gravity: &GravityModel,
) -> Result<Vector3<f64>> {
    universal_lambert_branch(
        r0,
        rf,
        tof,
        revolutions,
        prograde,
        LambertBranch::HighEnergy,
        gravity.mu,
    )
    .map(|s| s.v0)
}

fn geometry(r0: &Vector3<f64>, rf: &Vector3<f64>, prograde: bool, mu: f64) -> Result<(Geometry, f64)> {
    let (r1, r2) = (r0.norm(), rf.norm());
    if r1 == 0.0 || r2 == 0.0 {
        return Err(Error::InvalidArgument("position vectors must be nonzero".into()));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument("mu must be positive".into()));
    }
    let sin_rel = r0.cross(rf).norm() / (r1 * r2);
    if sin_rel < 1e-10 {
        return Err(Error::DegenerateGeometry(
            "position vectors are (anti-)parallel; the transfer plane is undefined".into(),
        ));
    }
    let dtheta = transfer_angle(r0, rf, prograde);
    let a = dtheta.sin() * (r1 * r2 / (1.0 - dtheta.cos())).sqrt();
    Ok((
        Geometry {
            r1,
            r2,
            a,
            sqrt_mu: mu.sqrt(),
        },
        dtheta,
    ))
}

/// Shortest time of flight admitting an `N`-revolution solution, with the
/// universal variable at which it occurs.
pub fn minimum_multirev_time(
    r0: &Vector3<f64>,
    rf: &Vector3<f64>,
    revolutions: u32,
    prograde: bool,
    mu: f64,
) -> Result<(f64, f64)> {
    if revolutions == 0 {
        return Err(Error::InvalidArgument(
            "the zero-revolution time of flight has no positive minimum".into(),
        ));
    }
    let (geo, _) = geometry(r0, rf, prograde, mu)?;
    Ok(golden_minimum(&geo, revolutions))
}

fn golden_minimum(geo: &Geometry, n: u32) -> (f64, f64) {
    let n = n as f64;
    let (mut lo, mut hi) = (4.0 * PI * PI * n * n, 4.0 * PI * PI * (n + 1.0) * (n + 1.0));
    let t = |z: f64| geo.time(z).unwrap_or(f64::INFINITY);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (t(x1), t(x2));
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = t(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = t(x2);
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    let z = 0.5 * (lo + hi);
    (t(z), z)
}

/// Bisect `time(z) = tof` on `[lo, hi]`, where `increasing` states the
/// monotonic direction. Points with `y < 0` count as "too short".
fn bisect(geo: &Geometry, tof: f64, mut lo: f64, mut hi: f64, increasing: bool) -> Result<(f64, usize)> {
    let mut trace = Vec::new();
    for it in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok((mid, it));
        }
        let short = match geo.time(mid) {
            Some(t) => t < tof,
            None => true,
        };
        if short == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
        trace.push(mid);
        if trace.len() > 8 {
            trace.remove(0);
        }
    }
    Err(Error::SolverNonConvergence {
        iterations: MAX_BISECTIONS,
        trace,
    })
}

pub fn universal_lambert_branch(
    r0: &Vector3<f64>,
    rf: &Vector3<f64>,
    tof: f64,
    revolutions: u32,
    prograde: bool,
    branch: LambertBranch,
    mu: f64,
) -> Result<UniversalSolution> {
    if !(tof > 0.0) || !tof.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time of flight must be positive, got {tof}"
        )));
    }
    let (geo, _) = geometry(r0, rf, prograde, mu)?;
    let candidates: Vec<(f64, usize)> = if revolutions == 0 {
        // t(z) increases on (-inf, 4π²); find a lower bracket
        let hi = 4.0 * PI * PI * (1.0 - 1e-12);
        let mut lo = -4.0 * PI * PI;
        let mut expansions = 0;
        while geo.time(lo).is_some_and(|t| t > tof) {
            lo *= 2.0;
            expansions += 1;
            if expansions > 60 {
                return Err(Error::NoSolution(format!(
                    "no zero-revolution transfer reaches a flight time of {tof} s"
                )));
            }
        }
        vec![bisect(&geo, tof, lo, hi, true)?]
    } else {
        let n = revolutions as f64;
        let (t_min, z_min) = golden_minimum(&geo, revolutions);
        if tof < t_min {
            return Err(Error::NoSolution(format!(
                "{revolutions}-revolution transfers need at least {t_min:.3} s, requested {tof} s"
            )));
        }
        let lo = 4.0 * PI * PI * n * n * (1.0 + 1e-12);
        let hi = 4.0 * PI * PI * (n + 1.0) * (n + 1.0) * (1.0 - 1e-12);
        vec![
            bisect(&geo, tof, lo, z_min, false)?,
            bisect(&geo, tof, z_min, hi, true)?,
        ]
    };
    let mut solutions: Vec<UniversalSolution> = candidates
        .into_iter()
        .map(|(z, iterations)| {
            let y = geo.y(z);
            let f = 1.0 - y / geo.r1;
            let g = geo.a * (y / mu).sqrt();
            let gdot = 1.0 - y / geo.r2;
            UniversalSolution {
                v0: (rf - r0 * f) / g,
                vf: (rf * gdot - r0) / g,
                z,
                iterations,
            }
        })
        .collect();
    if solutions.iter().any(|s| !s.v0.iter().all(|v| v.is_finite())) {
        return Err(Error::NoSolution("transfer velocity is not finite".into()));
    }
    solutions.sort_by(|a, b| b.specific_energy(r0, mu).total_cmp(&a.specific_energy(r0, mu)));
    Ok(match branch {
        LambertBranch::HighEnergy => solutions[0],
        LambertBranch::LowEnergy => *solutions.last().unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{CartesianState, EARTH_MU};
    use crate::oracles::{propagate_numeric, IntegratorConfig};

    fn curtis() -> (Vector3<f64>, Vector3<f64>) {
        (
            Vector3::new(5000.0, 10000.0, 2100.0),
            Vector3::new(-14600.0, 2500.0, 7000.0),
        )
    }

    #[test]
    fn stumpff_series_and_closed_forms_agree() {
        for z in [-1.1e-3, -0.9e-3, 0.9e-3, 1.1e-3] {
            let (c, s) = stumpff(z);
            let q = z.abs().sqrt();
            let (cc, sc) = if z > 0.0 {
                ((1.0 - q.cos()) / z, (q - q.sin()) / q.powi(3))
            } else {
                ((q.cosh() - 1.0) / -z, (q.sinh() - q) / q.powi(3))
            };
            assert!((c - cc).abs() < 1e-12 && (s - sc).abs() < 1e-12);
        }
        assert_eq!(stumpff(0.0), (0.5, 1.0 / 6.0));
    }

    #[test]
    fn curtis_reference_velocity() {
        let (r0, rf) = curtis();
        let v0 = universal_lambert(&r0, &rf, 3600.0, 0, true, &GravityModel::default()).unwrap();
        let expected = Vector3::new(-5.99249502, 1.92536671, 3.24563805);
        assert!((v0 - expected).norm() < 1e-7, "{v0}");
    }

    #[test]
    fn anti_parallel_rejected() {
        let r0 = Vector3::new(7000.0, 0.0, 0.0);
        let r = universal_lambert(&r0, &(-r0 * 1.5), 3000.0, 0, true, &GravityModel::default());
        assert!(matches!(r, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn perigee_to_known_anomaly_recovers_perigee_speed() {
        // ellipse a = 12000 km, e = 0.3; depart at perigee, arrive at ν = 150°
        let (a, e, mu) = (12000.0f64, 0.3f64, EARTH_MU);
        let p = a * (1.0 - e * e);
        let nu = 150f64.to_radians();
        let r0 = Vector3::new(a * (1.0 - e), 0.0, 0.0);
        let rf_mag = p / (1.0 + e * nu.cos());
        let rf = Vector3::new(rf_mag * nu.cos(), rf_mag * nu.sin(), 0.0);
        let ecc_anom = 2.0 * (((1.0 - e) / (1.0 + e)).sqrt() * (nu / 2.0).tan()).atan();
        let tof = (ecc_anom - e * ecc_anom.sin()) * (a.powi(3) / mu).sqrt();
        let v0 = universal_lambert(&r0, &rf, tof, 0, true, &GravityModel::default()).unwrap();
        let v_perigee = (mu / p).sqrt() * (1.0 + e);
        assert!((v0 - Vector3::new(0.0, v_perigee, 0.0)).norm() <= 1e-10 * v_perigee);
    }

    #[test]
    fn multi_revolution_branches() {
        let (r0, rf) = curtis();
        let mu = EARTH_MU;
        let energy = |n, b| {
            universal_lambert_branch(&r0, &rf, 59952.0, n, true, b, mu)
                .unwrap()
                .specific_energy(&r0, mu)
        };
        assert!((energy(0, LambertBranch::HighEnergy) + 5.801716).abs() < 1e-5);
        assert!((energy(1, LambertBranch::HighEnergy) + 6.243073).abs() < 1e-5);
        assert!((energy(1, LambertBranch::LowEnergy) + 9.176044).abs() < 1e-5);
        assert!((energy(2, LambertBranch::HighEnergy) + 9.958452).abs() < 1e-5);
        assert!((energy(2, LambertBranch::LowEnergy) + 11.968840).abs() < 1e-5);
        let (t1, _) = minimum_multirev_time(&r0, &rf, 1, true, mu).unwrap();
        assert!((t1 - 19665.8).abs() < 0.5, "{t1}");
        let r = universal_lambert_branch(&r0, &rf, 15000.0, 1, true, LambertBranch::HighEnergy, mu);
        assert!(matches!(r, Err(Error::NoSolution(_))));
    }

    #[test]
    fn solutions_land_on_target() {
        let (r0, rf) = curtis();
        let g = GravityModel::default();
        for (tof, n, b) in [
            (3600.0, 0, LambertBranch::HighEnergy),
            (59952.0, 1, LambertBranch::LowEnergy),
            (59952.0, 2, LambertBranch::HighEnergy),
        ] {
            let sol = universal_lambert_branch(&r0, &rf, tof, n, true, b, g.mu).unwrap();
            let res =
                propagate_numeric(&CartesianState::new(r0, sol.v0), tof, &g, &IntegratorConfig::default()).unwrap();
            let miss = (res.final_state.position - rf).norm();
            assert!(miss < 1e-6, "{tof} {n}: miss {miss}");
        }
    }
}
