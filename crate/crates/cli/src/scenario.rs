//! Initial fields and solver setup for each scenario.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{Context, Result};
use momentlbm::geometry::{icosphere, load_mesh, Affine, SolidState};
use momentlbm::lattice::CS2;
use momentlbm::solver::{FaceBc, Obstacle, Solver, SolverConfig};
use momentlbm::MomentSet;

use crate::config::{ScenarioKind, ScenarioSpec};

/// Analytic initial moments at a lattice node. Stress is always at
/// equilibrium.
pub fn initial_moments(spec: &ScenarioSpec, p: [usize; 3]) -> MomentSet {
    let [nx, ny, _] = spec.dims;
    let (x, y, z) = (p[0] as f64, p[1] as f64, p[2] as f64);
    match spec.kind {
        ScenarioKind::TaylorVortex2d => {
            let (kx, ky) = (2.0 * PI / nx as f64, 2.0 * PI / ny as f64);
            let u0 = spec.amplitude;
            let ux = -u0 * (kx * x).cos() * (ky * y).sin();
            let uy = u0 * (kx * x).sin() * (ky * y).cos();
            let rho = 1.0 - u0 * u0 / (4.0 * CS2) * ((2.0 * kx * x).cos() + (2.0 * ky * y).cos());
            MomentSet::equilibrium(rho, [ux, uy, 0.0])
        }
        ScenarioKind::DoubleLayerVortex2d => {
            let (xs, ys) = (x / nx as f64, y / ny as f64);
            let u = spec.velocity;
            let ux = if ys <= 0.5 {
                u * (spec.kappa * (ys - 0.25)).tanh()
            } else {
                u * (spec.kappa * (0.75 - ys)).tanh()
            };
            let uy = spec.delta * u * (2.0 * PI * (xs + 0.25)).sin();
            MomentSet::equilibrium(1.0, [ux, uy, 0.0])
        }
        ScenarioKind::Plume3d => {
            let (cx, cy) = ((nx as f64 - 1.0) / 2.0, (ny as f64 - 1.0) / 2.0);
            let r2 = (x - cx).powi(2) + (y - cy).powi(2);
            // The column fades out toward the outflow face.
            let taper = 1.0 - z / spec.dims[2] as f64;
            let uz = spec.amplitude * (-r2 / (2.0 * spec.radius * spec.radius)).exp() * taper;
            MomentSet::equilibrium(1.0, [0.0, 0.0, uz])
        }
        ScenarioKind::MeshObstacle3d => MomentSet::equilibrium(1.0, stream_velocity(spec)),
        ScenarioKind::Channel2d => MomentSet::rest(),
    }
}

/// Free-stream velocity: the first inflow face if there is one.
fn stream_velocity(spec: &ScenarioSpec) -> [f64; 3] {
    spec.boundaries
        .faces
        .iter()
        .flatten()
        .find_map(|f| match f {
            FaceBc::Inflow(u) => Some(*u),
            _ => None,
        })
        .unwrap_or([0.0; 3])
}

pub fn build_obstacles(spec: &ScenarioSpec) -> Result<Vec<Obstacle>> {
    let Some(o) = &spec.obstacle else {
        return Ok(Vec::new());
    };
    let mesh = match &o.mesh {
        Some(path) => {
            let t = o.transform.as_deref().map(Affine::from_slice).transpose()?;
            load_mesh(Path::new(path), t.as_ref()).with_context(|| format!("loading obstacle {path}"))?
        }
        None => {
            let base = icosphere(o.center, o.radius, o.subdivisions);
            match &o.transform {
                Some(t) => base.transformed(&Affine::from_slice(t)?)?,
                None => base,
            }
        }
    };
    Ok(vec![Obstacle {
        mesh,
        state: SolidState {
            velocity: o.velocity,
            omega: o.omega,
            center: o.center,
        },
    }])
}

pub fn solver_config(spec: &ScenarioSpec) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::new(spec.lattice, spec.nu);
    cfg.force = spec.force;
    cfg.boundaries = spec.boundaries;
    cfg.precision = spec.precision.to_precision(spec.lattice.dims(), spec.seed)?;
    cfg.obstacles = build_obstacles(spec)?;
    cfg.scheme = spec.scheme;
    cfg.deterministic = spec.deterministic;
    Ok(cfg)
}

/// A solver holding the scenario's initial state.
pub fn build_solver(spec: &ScenarioSpec) -> Result<Solver> {
    let mut solver = Solver::new(solver_config(spec)?, spec.dims)?;
    solver.initialize(|p| initial_moments(spec, p))?;
    Ok(solver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Settings;

    fn spec(kind: ScenarioKind) -> ScenarioSpec {
        Settings::for_scenario(kind).resolve().unwrap()
    }

    #[test]
    fn taylor_vortex_is_divergence_free() {
        let mut s = spec(ScenarioKind::TaylorVortex2d);
        s.dims = [32, 32, 1];
        let u = |x: usize, y: usize| initial_moments(&s, [x % 32, y % 32, 0]).velocity();
        // The central-difference divergence cancels exactly for this field.
        let mut worst: f64 = 0.0;
        for y in 1..31 {
            for x in 1..31 {
                let div = (u(x + 1, y)[0] - u(x - 1, y)[0] + u(x, y + 1)[1] - u(x, y - 1)[1]) / 2.0;
                worst = worst.max(div.abs());
            }
        }
        assert!(worst < 1e-15, "{worst}");
        assert!((u(8, 0)[1] - s.amplitude).abs() < 1e-15);
    }

    #[test]
    fn double_layer_has_two_opposed_shear_layers() {
        let s = spec(ScenarioKind::DoubleLayerVortex2d);
        let u = |y: usize| initial_moments(&s, [0, y, 0]).velocity()[0];
        assert!(u(32) < -0.04 && u(128) > 0.04 && u(224) < -0.04);
        assert!(u(64).abs() < 1e-15);
    }

    #[test]
    fn mesh_obstacle_builds_icosphere() {
        let s = spec(ScenarioKind::MeshObstacle3d);
        let obs = build_obstacles(&s).unwrap();
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].mesh.len(), 20 * 4usize.pow(3));
        assert_eq!(initial_moments(&s, [5, 5, 5]).velocity(), [0.05, 0.0, 0.0]);
    }

    #[test]
    fn every_scenario_steps() {
        for kind in ScenarioKind::ALL {
            let mut s = spec(kind);
            let d = s.lattice.dims();
            for a in 0..d {
                s.dims[a] = 16;
            }
            if let Some(o) = s.obstacle.as_mut() {
                o.center = [8.0; 3];
                o.radius = 3.0;
                o.subdivisions = 1;
            }
            s.radius = 3.0;
            let mut solver = build_solver(&s).unwrap();
            for _ in 0..3 {
                solver.step().unwrap();
            }
        }
    }
}
