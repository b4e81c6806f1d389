//! CSV and TOML artifacts plus their readers.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use momentlbm::geometry::Vec3;
use momentlbm::solver::StepStats;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .with_context(|| format!("reading {}", path.display()))
}

/// Header and numeric body of a CSV whose columns are only known at run
/// time. Empty cells read back as NaN.
pub fn read_numeric_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|c| if c.is_empty() { Ok(f64::NAN) } else { c.parse::<f64>() })
            .collect::<std::result::Result<Vec<f64>, _>>()
            .with_context(|| format!("non-numeric cell in {}", path.display()))?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).map_err(|e| anyhow!("{}: {}", path.display(), e.message()))
}

/// One line of `stats.csv`. Timings are `None` in deterministic mode so
/// repeated runs produce identical files.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub step: u64,
    pub t_fluid_ms: Option<f64>,
    pub t_copy_ms: Option<f64>,
    pub t_solid_ms: Option<f64>,
    pub mass: f64,
    pub momentum: [f64; 3],
    pub max_u: f64,
    pub saturations: u64,
    pub forces: Vec<(Vec3, Vec3)>,
}

impl StatsRow {
    pub fn from_stats(s: &StepStats, with_timings: bool) -> Self {
        let t = |v: f64| with_timings.then_some(v);
        StatsRow {
            step: s.step,
            t_fluid_ms: t(s.t_fluid_ms),
            t_copy_ms: t(s.t_copy_ms),
            t_solid_ms: t(s.t_solid_ms),
            mass: s.mass,
            momentum: s.momentum,
            max_u: s.max_u,
            saturations: s.saturations,
            forces: s.forces.clone(),
        }
    }
}

const STATS_FIXED: [&str; 10] = [
    "step",
    "t_fluid_ms",
    "t_copy_ms",
    "t_solid_ms",
    "mass",
    "momentum_x",
    "momentum_y",
    "momentum_z",
    "max_u",
    "saturations",
];

pub fn stats_header(obstacles: usize) -> Vec<String> {
    let mut h: Vec<String> = STATS_FIXED.iter().map(|s| s.to_string()).collect();
    for k in 0..obstacles {
        for kind in ["force", "torque"] {
            for a in ["x", "y", "z"] {
                h.push(format!("{kind}_{a}_{k}"));
            }
        }
    }
    h
}

pub struct StatsWriter {
    w: csv::Writer<BufWriter<File>>,
    obstacles: usize,
}

impl StatsWriter {
    pub fn create(path: &Path, obstacles: usize) -> Result<Self> {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(f));
        w.write_record(stats_header(obstacles))?;
        Ok(StatsWriter { w, obstacles })
    }

    pub fn push(&mut self, r: &StatsRow) -> Result<()> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut rec = vec![
            r.step.to_string(),
            opt(r.t_fluid_ms),
            opt(r.t_copy_ms),
            opt(r.t_solid_ms),
            r.mass.to_string(),
            r.momentum[0].to_string(),
            r.momentum[1].to_string(),
            r.momentum[2].to_string(),
            r.max_u.to_string(),
            r.saturations.to_string(),
        ];
        if r.forces.len() != self.obstacles {
            bail!("row has {} obstacles, header {}", r.forces.len(), self.obstacles);
        }
        for (f, t) in &r.forces {
            rec.extend(f.iter().chain(t).map(|v| v.to_string()));
        }
        self.w.write_record(rec)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

pub fn read_stats(path: &Path) -> Result<Vec<StatsRow>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = csv::Reader::from_reader(BufReader::new(f));
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.len() < STATS_FIXED.len()
        || header[..STATS_FIXED.len()] != STATS_FIXED
        || !(header.len() - STATS_FIXED.len()).is_multiple_of(6)
    {
        bail!("{} is not a stats file", path.display());
    }
    let obstacles = (header.len() - STATS_FIXED.len()) / 6;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().with_context(|| format!("column {} in {}", header[i], path.display()))
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let mut forces = Vec::with_capacity(obstacles);
        for k in 0..obstacles {
            let b = STATS_FIXED.len() + 6 * k;
            forces.push((
                [num(b)?, num(b + 1)?, num(b + 2)?],
                [num(b + 3)?, num(b + 4)?, num(b + 5)?],
            ));
        }
        rows.push(StatsRow {
            step: rec[0].parse()?,
            t_fluid_ms: opt(1)?,
            t_copy_ms: opt(2)?,
            t_solid_ms: opt(3)?,
            mass: num(4)?,
            momentum: [num(5)?, num(6)?, num(7)?],
            max_u: num(8)?,
            saturations: rec[9].parse()?,
            forces,
        });
    }
    Ok(rows)
}

/// `summary.toml` written at the end of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub preset: String,
    pub preset_version: i64,
    pub initial_condition: String,
    pub lattice: String,
    pub dims: Vec<usize>,
    pub nu: f64,
    pub tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reynolds: Option<f64>,
    pub scheme: String,
    pub precision: String,
    pub bytes_per_node: usize,
    /// `axis-side=rule` for every face.
    pub boundaries: Vec<String>,
    pub boundary_model: String,
    pub force: Vec<f64>,
    pub force_model: String,
    pub obstacle_triangles: usize,
    pub marked_nodes: usize,
    pub seed: u64,
    pub deterministic: bool,
    pub steps_requested: u64,
    pub steps_completed: u64,
    pub snapshots: Vec<String>,
    pub vorticity_range: f64,
    pub final_mass: f64,
    pub final_max_u: f64,
    pub saturations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}
