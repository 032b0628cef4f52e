use std::f64::consts::TAU;
use std::time::Instant;

use koopman_lambert::elements::{
    cartesian_to_elements, elements_to_cartesian, CartesianState, ElementState, GravityModel,
};
use koopman_lambert::lambert::{energy_scan, solve, solve_from, time_of_flight, LambertProblem, TransferSolution};
use koopman_lambert::oracles::{propagate_elements_numeric, propagate_numeric, universal_lambert};
use nalgebra::Vector3;

use crate::cache::{acquire, AcquiredModel};
use crate::config::Scenario;
use crate::error::{CliError, CliResult};
use crate::plot::{LinePlot, Series};
use crate::report::{num, CsvFile, Provenance};

const TRAJECTORY_SAMPLES: usize = 65;
/// Long-arc error level reported by `stress`, km.
const STRESS_THRESHOLD: f64 = 3.0;

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

fn provenance(scenario: &Scenario, model: Option<&AcquiredModel>) -> Provenance {
    Provenance {
        config_hash: scenario.hash(),
        model_key: model.map(|m| m.key.clone()),
    }
}

fn model(scenario: &Scenario, allow_large: bool) -> CliResult<AcquiredModel> {
    let acq = acquire(scenario, allow_large)?;
    let how = if acq.from_cache {
        "loaded from cache, no assembly".to_string()
    } else {
        format!("built in {:.3} s", acq.build_seconds)
    };
    println!(
        "model: m = {}, order {}, J2 {}, {how} (key {})",
        acq.orbit.model.len(),
        scenario.order,
        on_off(acq.orbit.gravity.j2_enabled),
        acq.key
    );
    Ok(acq)
}

fn transfer(problem: &LambertProblem, acq: &AcquiredModel, scenario: &Scenario) -> CliResult<TransferSolution> {
    Ok(match acq.seed {
        Some(seed) => solve_from(problem, &acq.orbit, &scenario.solver, seed)?,
        None => solve(problem, &acq.orbit, &scenario.solver)?,
    })
}

fn vec_fields(v: &Vector3<f64>) -> [String; 3] {
    [num(v.x), num(v.y), num(v.z)]
}

pub fn build_model(scenario: &Scenario, allow_large: bool) -> CliResult<()> {
    let acq = model(scenario, allow_large)?;
    let m = &acq.orbit.model;
    let eig = m.eigenvalue_report();
    let max_re = eig.iter().map(|e| e.0.abs()).fold(0.0, f64::max);
    let max_im = eig.iter().map(|e| e.1.abs()).fold(0.0, f64::max);
    println!(
        "eigenvalues: {}, max |re| {max_re:.3e}, max |im| {max_im:.6}, {} (cond(P) {:.3e})",
        eig.len(),
        if m.diagonalizable() {
            "diagonalizable"
        } else {
            "not diagonalizable, matrix-exponential route"
        },
        m.condition_p()
    );
    let mut csv = CsvFile::create(
        &scenario.out,
        "eigenvalues.csv",
        &provenance(scenario, Some(&acq)),
        &["index", "re", "im"],
    )?;
    for (i, (re, im)) in eig.iter().enumerate() {
        csv.row([i.to_string(), num(*re), num(*im)])?;
    }
    println!("wrote {}", csv.finish()?.display());
    Ok(())
}

pub fn solve_cmd(scenario: &Scenario, allow_large: bool) -> CliResult<()> {
    let start = Instant::now();
    let acq = model(scenario, allow_large)?;
    let p = &scenario.problem;
    let sol = transfer(p, &acq, scenario)?;
    let prov = provenance(scenario, Some(&acq));

    let mut csv = CsvFile::create(
        &scenario.out,
        "solution.csv",
        &prov,
        &[
            "tof",
            "revolutions",
            "v0_x",
            "v0_y",
            "v0_z",
            "specific_energy",
            "semi_major_axis",
            "position_residual",
            "tof_residual",
            "iterations",
            "converged",
        ],
    )?;
    let [vx, vy, vz] = vec_fields(&sol.v0);
    csv.row([
        num(p.tof),
        p.revolutions.to_string(),
        vx,
        vy,
        vz,
        num(sol.specific_energy),
        num(sol.semi_major_axis),
        num(sol.position_residual),
        num(sol.tof_residual),
        sol.iterations.to_string(),
        sol.converged.to_string(),
    ])?;
    let solution_path = csv.finish()?;
    let trajectory_path = write_trajectory(scenario, &acq, &sol, &prov)?;

    println!(
        "v0 = [{:.9}, {:.9}, {:.9}] km/s, E = {:.6} km²/s², a = {:.3} km",
        sol.v0.x, sol.v0.y, sol.v0.z, sol.specific_energy, sol.semi_major_axis
    );
    println!(
        "residuals: position {:.3e} km, time {:.3e} s after {} iterations",
        sol.position_residual, sol.tof_residual, sol.iterations
    );
    println!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    println!("wrote {}", solution_path.display());
    println!("wrote {}", trajectory_path.display());
    if !sol.converged {
        return Err(CliError::NonConvergence(format!(
            "position residual {:.3e} km, time residual {:.3e} s after {} iterations",
            sol.position_residual, sol.tof_residual, sol.iterations
        )));
    }
    Ok(())
}

fn write_trajectory(
    scenario: &Scenario,
    acq: &AcquiredModel,
    sol: &TransferSolution,
    prov: &Provenance,
) -> CliResult<std::path::PathBuf> {
    let g = acq.orbit.gravity;
    let x0 = cartesian_to_elements(&CartesianState::new(scenario.problem.r0, sol.v0), &g)?;
    let mut csv = CsvFile::create(
        &scenario.out,
        "trajectory.csv",
        prov,
        &["theta", "t", "x", "y", "z", "vx", "vy", "vz"],
    )?;
    for k in 0..TRAJECTORY_SAMPLES {
        let theta = sol.delta_theta * k as f64 / (TRAJECTORY_SAMPLES - 1) as f64;
        let x = ElementState::from_array(&acq.orbit.model.propagate(&x0.to_array(), theta)?);
        let s = elements_to_cartesian(&x, &g)?;
        let t = time_of_flight(&acq.orbit.model, &x0, theta, &g)?;
        let mut row = vec![num(theta), num(t)];
        row.extend(s.to_array().iter().map(|v| num(*v)));
        csv.row(row)?;
    }
    csv.finish()
}

pub fn scan(scenario: &Scenario, allow_large: bool, tof_min: f64, tof_max: f64, steps: usize) -> CliResult<()> {
    if !(tof_min > 0.0 && tof_min < tof_max && tof_max.is_finite()) {
        return Err(CliError::Usage(format!(
            "need 0 < tof-min < tof-max, got {tof_min} and {tof_max}"
        )));
    }
    if steps < 2 {
        return Err(CliError::Usage(format!("steps must be at least 2, got {steps}")));
    }
    let start = Instant::now();
    let acq = model(scenario, allow_large)?;
    let grid: Vec<f64> = (0..steps)
        .map(|k| tof_min + (tof_max - tof_min) * k as f64 / (steps - 1) as f64)
        .collect();
    let template = LambertProblem {
        tof: grid[0],
        ..scenario.problem
    };
    let result = energy_scan(&template, &grid, &acq.orbit, &scenario.solver, true)?;
    let prov = provenance(scenario, Some(&acq));

    let mut csv = CsvFile::create(
        &scenario.out,
        "scan.csv",
        &prov,
        &[
            "tof",
            "converged",
            "specific_energy",
            "semi_major_axis",
            "position_residual",
            "tof_residual",
            "iterations",
        ],
    )?;
    let mut curve = Vec::new();
    for point in &result.points {
        match &point.solution {
            Ok(s) => {
                if s.converged {
                    curve.push((point.tof, s.specific_energy));
                }
                csv.row([
                    num(point.tof),
                    s.converged.to_string(),
                    num(s.specific_energy),
                    num(s.semi_major_axis),
                    num(s.position_residual),
                    num(s.tof_residual),
                    s.iterations.to_string(),
                ])?;
            }
            Err(e) => {
                eprintln!("tof {:.3} s failed: {e}", point.tof);
                csv.row([
                    num(point.tof),
                    "false".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ])?;
            }
        }
    }
    let csv_path = csv.finish()?;

    let minimum = result.minimum();
    let plot = LinePlot {
        title: "Specific energy against time of flight",
        x_label: "time of flight (s)",
        y_label: "specific energy (km²/s²)",
        series: vec![Series {
            label: "specific energy",
            points: &curve,
        }],
        marker: minimum.map(|(tof, s)| (tof, s.specific_energy)),
    };
    let svg_path = scenario.out.join("scan.svg");
    std::fs::write(&svg_path, plot.to_svg()).map_err(|e| CliError::io(&svg_path, e))?;

    println!(
        "{} of {} points converged, {} iterations in total",
        curve.len(),
        grid.len(),
        result.total_iterations()
    );
    if let Some((tof, s)) = minimum {
        println!(
            "minimum energy at tof {tof:.3} s: E = {:.6} km²/s², a = {:.3} km",
            s.specific_energy, s.semi_major_axis
        );
    }
    println!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    println!("wrote {}", csv_path.display());
    println!("wrote {}", svg_path.display());
    if minimum.is_none() {
        return Err(CliError::NonConvergence("no scan point converged".into()));
    }
    Ok(())
}

fn miss(scenario: &Scenario, v0: &Vector3<f64>, j2: bool) -> CliResult<f64> {
    let gravity = GravityModel {
        j2_enabled: j2,
        ..scenario.problem.gravity
    };
    let p = &scenario.problem;
    let res = propagate_numeric(&CartesianState::new(p.r0, *v0), p.tof, &gravity, &scenario.integrator)?;
    Ok((res.final_state.position - p.rf).norm())
}

pub fn compare(scenario: &Scenario, allow_large: bool) -> CliResult<()> {
    let start = Instant::now();
    let p = &scenario.problem;
    let universal = universal_lambert(&p.r0, &p.rf, p.tof, p.revolutions, p.prograde, &p.gravity)?;
    let acq = model(scenario, allow_large)?;
    let sol = transfer(p, &acq, scenario)?;
    let ko_label = format!("koopman-j2-{}", on_off(p.gravity.j2_enabled));

    let mut csv = CsvFile::create(
        &scenario.out,
        "compare.csv",
        &provenance(scenario, Some(&acq)),
        &["solution", "world", "v0_x", "v0_y", "v0_z", "miss_km"],
    )?;
    println!("{:<18} {:<10} {:>14}", "solution", "world", "miss (km)");
    for (label, v0) in [("universal", universal), (ko_label.as_str(), sol.v0)] {
        for j2 in [false, true] {
            let d = miss(scenario, &v0, j2)?;
            let world = format!("j2-{}", on_off(j2));
            println!("{label:<18} {world:<10} {d:>14.6e}");
            let [vx, vy, vz] = vec_fields(&v0);
            csv.row([label.to_string(), world, vx, vy, vz, num(d)])?;
        }
    }
    println!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    println!("wrote {}", csv.finish()?.display());
    if !sol.converged {
        return Err(CliError::NonConvergence(format!(
            "Koopman solve stopped at position residual {:.3e} km",
            sol.position_residual
        )));
    }
    Ok(())
}

/// Long-arc check: propagate the universal-variables transfer orbit for many
/// revolutions with the Koopman model and with direct integration of the
/// element equations, and record the position gap after each revolution.
pub fn stress(scenario: &Scenario, allow_large: bool, periods: u32) -> CliResult<()> {
    if periods == 0 {
        return Err(CliError::Usage("periods must be at least 1".into()));
    }
    let start = Instant::now();
    let p = &scenario.problem;
    let acq = model(scenario, allow_large)?;
    let g = acq.orbit.gravity;
    let v0 = universal_lambert(&p.r0, &p.rf, p.tof, p.revolutions, p.prograde, &p.gravity)?;
    let x0 = cartesian_to_elements(&CartesianState::new(p.r0, v0), &g)?;
    let mut reference = x0;
    let mut elapsed = 0.0;
    let mut first_exceed = None;
    let mut csv = CsvFile::create(
        &scenario.out,
        "stress.csv",
        &provenance(scenario, Some(&acq)),
        &["revolution", "theta", "t", "position_error_km"],
    )?;
    let thetas: Vec<f64> = (1..=periods).map(|k| TAU * k as f64).collect();
    let flows = acq.orbit.model.flows_at(&thetas)?;
    let basis_values = acq.orbit.model.basis().eval(&x0.to_array())?;
    for (k, flow) in (1..=periods).zip(&flows) {
        let theta = flow.theta();
        let step = propagate_elements_numeric(&reference, TAU, &g, &scenario.integrator)?;
        reference = step.final_state;
        elapsed += step.elapsed;
        let ko = ElementState::from_array(&flow.apply_values(&basis_values));
        let gap = match (elements_to_cartesian(&ko, &g), elements_to_cartesian(&reference, &g)) {
            (Ok(a), Ok(b)) => (a.position - b.position).norm(),
            _ => f64::INFINITY,
        };
        if first_exceed.is_none() && gap > STRESS_THRESHOLD {
            first_exceed = Some(k);
        }
        csv.row([k.to_string(), num(theta), num(elapsed), num(gap)])?;
    }
    match first_exceed {
        Some(k) => println!("position error first exceeds {STRESS_THRESHOLD} km after {k} revolutions"),
        None => println!("position error stays within {STRESS_THRESHOLD} km for all {periods} revolutions"),
    }
    println!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    println!("wrote {}", csv.finish()?.display());
    Ok(())
}
