use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use momentlbm::io::{vorticity_2d, write_pgm, Snapshot};
use momentlbm::solver::RunEvent;

use crate::config::{preset_version, ScenarioSpec};
use crate::output::{write_toml, RunSummary, StatsRow, StatsWriter};
use crate::scenario::build_solver;

pub const STATS_FILE: &str = "stats.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const SNAPSHOT_DIR: &str = "snapshots";

const BOUNDARY_MODEL: &str = "periodic wrap; inflow = unit-density equilibrium slab; \
    outflow = zero-gradient copy; wall = halfway bounce-back";
const FORCE_MODEL: &str = "constant body force added in moment space during collision";

pub fn snapshot_name(step: u64) -> String {
    format!("snap_{step:06}.bin")
}

pub fn vorticity_name(step: u64) -> String {
    format!("vorticity_{step:06}.pgm")
}

fn max_abs_vorticity(s: &Snapshot) -> f64 {
    let u: Vec<[f64; 3]> = (0..s.nodes()).map(|i| s.velocity(i)).collect();
    let (nx, ny) = (s.dims[0] as usize, s.dims[1] as usize);
    vorticity_2d(nx, ny, &u).iter().fold(0.0, |m, w| m.max(w.abs()))
}

fn write_vorticity(path: &Path, s: &Snapshot, range: f64) -> Result<()> {
    let u: Vec<[f64; 3]> = (0..s.nodes()).map(|i| s.velocity(i)).collect();
    let (nx, ny) = (s.dims[0] as usize, s.dims[1] as usize);
    let w = vorticity_2d(nx, ny, &u);
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_pgm(BufWriter::new(f), nx, ny, &w, -range, range)?;
    Ok(())
}

/// Runs the scenario and writes `stats.csv`, snapshots (plus vorticity
/// images in 2D) and `summary.toml` under `out_dir`. A diverged run still
/// writes everything up to the last good state; the error is carried in
/// the returned summary.
pub fn simulate(spec: &ScenarioSpec, out_dir: &Path) -> Result<RunSummary> {
    let snap_dir = out_dir.join(SNAPSHOT_DIR);
    std::fs::create_dir_all(&snap_dir).with_context(|| format!("creating {}", snap_dir.display()))?;
    let mut solver = build_solver(spec)?;
    let two_d = spec.lattice.dims() == 2;
    let range = match spec.vorticity_range {
        Some(r) => r,
        None if two_d => {
            let w = max_abs_vorticity(&solver.snapshot());
            if w > 0.0 {
                w
            } else {
                1e-3
            }
        }
        None => 0.0,
    };

    let obstacles = solver.config().obstacles.len();
    let mut stats = StatsWriter::create(&out_dir.join(STATS_FILE), obstacles)?;
    let mut snapshots: Vec<String> = Vec::new();
    let mut last = None;
    let timings = !spec.deterministic;
    let res = solver.run_with(spec.steps, spec.snapshot_every, |ev| {
        let io = |e: anyhow::Error| momentlbm::LbmError::InvalidInput(format!("{e:#}"));
        match ev {
            RunEvent::Step(s) => {
                stats.push(&StatsRow::from_stats(s, timings)).map_err(io)?;
                last = Some(s.clone());
            }
            RunEvent::Snapshot(s) => {
                let name = snapshot_name(s.step);
                let path: PathBuf = snap_dir.join(&name);
                let f = File::create(&path)?;
                s.write(BufWriter::new(f))?;
                if snapshots.last() != Some(&name) {
                    snapshots.push(name);
                }
                if two_d {
                    write_vorticity(&snap_dir.join(vorticity_name(s.step)), s, range).map_err(io)?;
                }
            }
        }
        Ok(())
    });
    stats.finish()?;

    let dims_used = spec.lattice.dims();
    let axes = ["x", "y", "z"];
    let boundaries = (0..dims_used)
        .flat_map(|a| {
            let b = spec.boundaries.faces[a];
            [
                format!("{}-low={}", axes[a], b[0]),
                format!("{}-high={}", axes[a], b[1]),
            ]
        })
        .collect();
    let (final_mass, final_max_u) = match &last {
        Some(s) => (s.mass, s.max_u),
        None => {
            let m = solver.moments();
            let mass = m.iter().map(|m| m.rho).sum();
            let max_u = m.iter().fold(0.0f64, |a, m| {
                let u = m.velocity();
                a.max((u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt())
            });
            (mass, max_u)
        }
    };
    let summary = RunSummary {
        scenario: spec.kind.name().into(),
        preset: spec.label.clone(),
        preset_version: preset_version()?,
        initial_condition: format!("{} (reconstructed preset)", spec.kind),
        lattice: spec.lattice.to_string(),
        dims: spec.dims[..dims_used].to_vec(),
        nu: spec.nu,
        tau: solver.config().tau(),
        reynolds: spec.reynolds,
        scheme: spec.scheme.to_string(),
        precision: spec.precision.to_string(),
        bytes_per_node: solver.grid().bytes_per_node(),
        boundaries,
        boundary_model: BOUNDARY_MODEL.into(),
        force: spec.force[..dims_used].to_vec(),
        force_model: FORCE_MODEL.into(),
        obstacle_triangles: solver.scene().map_or(0, |s| s.mesh().len()),
        marked_nodes: solver.scene().map_or(0, |s| s.mask().marked_count()),
        seed: spec.seed,
        deterministic: spec.deterministic,
        steps_requested: spec.steps,
        steps_completed: last.as_ref().map_or(0, |s| s.step),
        snapshots,
        vorticity_range: range,
        final_mass,
        final_max_u,
        saturations: solver.grid().saturations().iter().sum(),
        error: res.err().map(|e| e.to_string()),
    };
    write_toml(&out_dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}
