use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use momentlbm::io::{vorticity_2d, write_pgm};
use momentlbm::moments::component_count;
use serde::{Deserialize, Serialize};

use crate::config::{PrecisionChoice, ScenarioSpec};
use crate::output::write_rows;
use crate::scenario::build_solver;

pub const SWEEP_FILE: &str = "quant_sweep.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub preset: String,
    pub l2_error: f64,
    pub bytes_per_node: usize,
    /// Bytes per node relative to the 64-bit store.
    pub memory_ratio: f64,
    /// Clamped ρ samples over all stored ρ samples.
    pub rho_saturation: f64,
    pub finite: bool,
    pub steps_completed: u64,
}

/// Outcome of one precision run.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub row: SweepRow,
    pub velocity: Vec<[f64; 3]>,
    pub dims: [usize; 3],
}

/// `‖a − b‖₂ / ‖b‖₂` over all velocity components.
pub fn relative_l2(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        for k in 0..3 {
            num += (x[k] - y[k]).powi(2);
            den += y[k] * y[k];
        }
    }
    (num / den).sqrt()
}

fn run_one(spec: &ScenarioSpec, precision: PrecisionChoice) -> Result<(SweepRow, Vec<[f64; 3]>)> {
    let mut s = spec.clone();
    s.precision = precision;
    let mut solver = build_solver(&s)?;
    let mut completed = 0;
    let mut finite = true;
    for _ in 0..s.steps {
        match solver.step() {
            Ok(st) => completed = st.step,
            Err(_) => {
                finite = false;
                break;
            }
        }
    }
    let grid = solver.grid();
    let stored = grid.stored_samples();
    let rho_saturation = if stored == 0 {
        0.0
    } else {
        grid.saturations()[0] as f64 / stored as f64
    };
    let full = component_count(s.lattice.dims()) * 8;
    let row = SweepRow {
        preset: precision.to_string(),
        l2_error: f64::NAN,
        bytes_per_node: grid.bytes_per_node(),
        memory_ratio: grid.bytes_per_node() as f64 / full as f64,
        rho_saturation,
        finite,
        steps_completed: completed,
    };
    Ok((row, solver.velocity_field()))
}

/// Runs the 64-bit reference and then every preset; errors are measured
/// on the final velocity field against the reference. A diverged run is
/// reported with `finite = false` and infinite error.
pub fn sweep(spec: &ScenarioSpec, presets: &[PrecisionChoice]) -> Result<Vec<SweepRun>> {
    if presets.is_empty() {
        bail!("preset list is empty");
    }
    let (ref_row, reference) = run_one(spec, PrecisionChoice::F64)?;
    if !ref_row.finite {
        bail!("64-bit reference diverged after {} steps", ref_row.steps_completed);
    }
    let mut out = Vec::with_capacity(presets.len());
    for &p in presets {
        let (mut row, velocity) = if p == PrecisionChoice::F64 {
            (ref_row.clone(), reference.clone())
        } else {
            run_one(spec, p)?
        };
        row.l2_error = if row.finite {
            relative_l2(&velocity, &reference)
        } else {
            f64::INFINITY
        };
        out.push(SweepRun {
            row,
            velocity,
            dims: spec.dims,
        });
    }
    Ok(out)
}

pub fn image_name(preset: &str) -> String {
    format!("vorticity_{}.pgm", preset.replace('/', "_"))
}

/// Writes the sweep table and, for 2D runs, a final vorticity image per
/// preset on a shared colour range.
pub fn write(runs: &[SweepRun], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let rows: Vec<SweepRow> = runs.iter().map(|r| r.row.clone()).collect();
    write_rows(&out_dir.join(SWEEP_FILE), &rows)?;
    let Some(first) = runs.first() else { return Ok(()) };
    let [nx, ny, nz] = first.dims;
    if nz != 1 {
        return Ok(());
    }
    let fields: Vec<Vec<f64>> = runs.iter().map(|r| vorticity_2d(nx, ny, &r.velocity)).collect();
    let range = fields[0].iter().fold(0.0f64, |m, w| m.max(w.abs())).max(1e-12);
    for (r, w) in runs.iter().zip(&fields) {
        let path = out_dir.join(image_name(&r.row.preset));
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_pgm(BufWriter::new(f), nx, ny, w, -range, range)?;
    }
    Ok(())
}
