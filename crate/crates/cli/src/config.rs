//! TOML run configuration layered over the bundled scenario presets.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use momentlbm::quant::{BitPreset, DitherMode, QuantSpec, RangeSet};
use momentlbm::solver::{Boundaries, FaceBc, Precision, Scheme};
use momentlbm::LatticeKind;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

const PRESETS: &str = include_str!("../presets/scenarios.toml");

/// Relative slack when both `nu` and `reynolds` are given.
const RE_NU_TOL: f64 = 1e-9;

/// Raw settings as written in a config file. Every field is optional here;
/// the preset for `scenario` fills the gaps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub scenario: Option<String>,
    pub label: Option<String>,
    pub lattice: Option<String>,
    pub dims: Option<Vec<usize>>,
    pub nu: Option<f64>,
    pub reynolds: Option<f64>,
    /// Characteristic speed for the Reynolds number.
    pub velocity: Option<f64>,
    /// Characteristic length; defaults to the first grid extent.
    pub length: Option<f64>,
    pub steps: Option<u64>,
    pub snapshot_every: Option<u64>,
    pub seed: Option<u64>,
    pub scheme: Option<String>,
    /// `f64`, `f32` or a `b_rhou/b_s` bit allocation.
    pub precision: Option<String>,
    pub force: Option<Vec<f64>>,
    pub deterministic: Option<bool>,
    /// Half-width of the vorticity colour range in PGM output.
    pub vorticity_range: Option<f64>,
    pub boundaries: Option<BoundarySettings>,
    pub init: Option<InitSettings>,
    pub obstacle: Option<ObstacleSettings>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySettings {
    pub x: Option<Vec<String>>,
    pub y: Option<Vec<String>>,
    pub z: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSettings {
    pub amplitude: Option<f64>,
    pub kappa: Option<f64>,
    pub delta: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSettings {
    /// OBJ file; a generated icosphere is used when absent.
    pub mesh: Option<String>,
    /// Row-major 3x4 affine map applied to the OBJ vertices.
    pub transform: Option<Vec<f64>>,
    pub center: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub subdivisions: Option<usize>,
    pub velocity: Option<Vec<f64>>,
    pub omega: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    TaylorVortex2d,
    DoubleLayerVortex2d,
    Plume3d,
    MeshObstacle3d,
    Channel2d,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::TaylorVortex2d,
        ScenarioKind::DoubleLayerVortex2d,
        ScenarioKind::Plume3d,
        ScenarioKind::MeshObstacle3d,
        ScenarioKind::Channel2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::TaylorVortex2d => "taylor_vortex_2d",
            ScenarioKind::DoubleLayerVortex2d => "double_layer_vortex_2d",
            ScenarioKind::Plume3d => "plume_3d",
            ScenarioKind::MeshObstacle3d => "mesh_obstacle_3d",
            ScenarioKind::Channel2d => "channel_2d",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| anyhow!("unknown scenario `{s}`"))
    }
}

/// Storage precision as named in configs and CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecisionChoice {
    F64,
    F32,
    Bits(BitPreset),
}

impl PrecisionChoice {
    /// The sweep order used by `quant-sweep`: reference first, then
    /// decreasing bit budgets.
    pub fn sweep() -> Vec<PrecisionChoice> {
        let mut v = vec![PrecisionChoice::F64, PrecisionChoice::F32];
        v.extend(BitPreset::PRESETS.iter().map(|p| PrecisionChoice::Bits(*p)));
        v
    }

    pub fn to_precision(self, dims: usize, seed: u64) -> Result<Precision> {
        Ok(match self {
            PrecisionChoice::F64 => Precision::F64,
            PrecisionChoice::F32 => Precision::F32,
            PrecisionChoice::Bits(p) => {
                Precision::Packed(QuantSpec::new(dims, p, RangeSet::default(), DitherMode::All, seed)?)
            }
        })
    }
}

impl fmt::Display for PrecisionChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecisionChoice::F64 => f.write_str("f64"),
            PrecisionChoice::F32 => f.write_str("f32"),
            PrecisionChoice::Bits(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for PrecisionChoice {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "f64" | "64" => Ok(PrecisionChoice::F64),
            "f32" | "32" => Ok(PrecisionChoice::F32),
            other => Ok(PrecisionChoice::Bits(other.parse()?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSpec {
    pub mesh: Option<String>,
    pub transform: Option<Vec<f64>>,
    pub center: [f64; 3],
    pub radius: f64,
    pub subdivisions: usize,
    pub velocity: [f64; 3],
    pub omega: [f64; 3],
}

/// Fully resolved scenario: every value the run needs, nothing optional
/// except the obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub label: String,
    pub lattice: LatticeKind,
    pub dims: [usize; 3],
    pub nu: f64,
    pub reynolds: Option<f64>,
    pub velocity: f64,
    pub length: f64,
    pub steps: u64,
    pub snapshot_every: u64,
    pub seed: u64,
    pub scheme: Scheme,
    pub precision: PrecisionChoice,
    pub force: [f64; 3],
    pub deterministic: bool,
    pub vorticity_range: Option<f64>,
    pub boundaries: Boundaries,
    pub amplitude: f64,
    pub kappa: f64,
    pub delta: f64,
    pub radius: f64,
    pub obstacle: Option<ObstacleSpec>,
}

/// Version number of the bundled preset file.
pub fn preset_version() -> Result<i64> {
    let t: Table = PRESETS.parse().context("bundled presets")?;
    t.get("version")
        .and_then(Value::as_integer)
        .ok_or_else(|| anyhow!("bundled presets carry no version"))
}

fn preset_table(kind: ScenarioKind) -> Result<Table> {
    let mut t: Table = PRESETS.parse().context("bundled presets")?;
    match t.remove(kind.name()) {
        Some(Value::Table(p)) => Ok(p),
        _ => bail!("no preset for `{kind}`"),
    }
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl Settings {
    /// Parses config text, rejecting unknown keys.
    pub fn parse(text: &str) -> Result<Settings> {
        toml::from_str(text).map_err(|e| anyhow!("invalid config: {}", e.message()))
    }

    pub fn load(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Settings::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Settings with only `scenario` set.
    pub fn for_scenario(kind: ScenarioKind) -> Settings {
        Settings {
            scenario: Some(kind.name().into()),
            ..Default::default()
        }
    }

    /// Overlays these settings on the scenario preset and resolves them.
    pub fn resolve(&self) -> Result<ScenarioSpec> {
        let name = self
            .scenario
            .as_deref()
            .ok_or_else(|| anyhow!("config must name a `scenario`"))?;
        let kind: ScenarioKind = name.parse()?;
        let mut base = preset_table(kind)?;
        let over = Table::try_from(self).context("re-encoding settings")?;
        // A user-given nu or Reynolds number replaces the preset's choice
        // instead of being checked against it.
        if over.contains_key("nu") && !over.contains_key("reynolds") {
            base.remove("reynolds");
        }
        if over.contains_key("reynolds") && !over.contains_key("nu") {
            base.remove("nu");
        }
        merge(&mut base, over);
        let merged: Settings = Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| anyhow!("invalid preset overlay: {}", e.message()))?;
        merged.build(kind)
    }

    fn build(&self, kind: ScenarioKind) -> Result<ScenarioSpec> {
        let lattice: LatticeKind = self.lattice.as_deref().unwrap_or("D2Q9").parse()?;
        let d = lattice.dims();
        let raw = self.dims.clone().ok_or_else(|| anyhow!("`dims` missing"))?;
        if raw.len() != d {
            bail!("`dims` has {} entries but {lattice} needs {d}", raw.len());
        }
        if raw.contains(&0) {
            bail!("`dims` entries must be positive");
        }
        let mut dims = [1usize; 3];
        dims[..d].copy_from_slice(&raw);

        let velocity = self.velocity.unwrap_or(0.05);
        let length = self.length.unwrap_or(dims[0] as f64);
        let nu = match (self.nu, self.reynolds) {
            (Some(nu), None) => nu,
            (None, Some(re)) => {
                if self.velocity.is_none() {
                    bail!("`reynolds` needs a characteristic `velocity`");
                }
                velocity * length / re
            }
            (Some(nu), Some(re)) => {
                let implied = velocity * length / re;
                if ((nu - implied) / implied).abs() > RE_NU_TOL {
                    bail!("`nu` = {nu} disagrees with U*L/Re = {implied} (U = {velocity}, L = {length}, Re = {re})");
                }
                nu
            }
            (None, None) => bail!("either `nu` or `reynolds` is required"),
        };
        if !(nu > 0.0) || !nu.is_finite() {
            bail!("`nu` must be positive, got {nu}");
        }

        let scheme: Scheme = self.scheme.as_deref().unwrap_or("split").parse()?;
        let precision: PrecisionChoice = self.precision.as_deref().unwrap_or("f64").parse()?;

        let mut force = [0.0; 3];
        if let Some(f) = &self.force {
            if f.len() != d && f.len() != 3 {
                bail!("`force` needs {d} components");
            }
            force[..f.len()].copy_from_slice(f);
        }

        let mut boundaries = Boundaries::periodic();
        if let Some(b) = &self.boundaries {
            for (axis, faces) in [&b.x, &b.y, &b.z].into_iter().enumerate() {
                let Some(faces) = faces else { continue };
                if faces.len() != 2 {
                    bail!("boundary entry for axis {axis} needs [low, high]");
                }
                for side in 0..2 {
                    boundaries.faces[axis][side] = faces[side].parse::<FaceBc>()?;
                }
            }
        }
        boundaries.validate(d)?;

        let init = self.init.clone().unwrap_or_default();
        let obstacle = match &self.obstacle {
            None => None,
            Some(o) => {
                if d != 3 {
                    bail!("obstacles need a 3D lattice");
                }
                if let Some(t) = &o.transform {
                    if t.len() != 12 {
                        bail!("obstacle `transform` needs 12 numbers, got {}", t.len());
                    }
                }
                let vec3 = |v: &Option<Vec<f64>>, what: &str, default: [f64; 3]| -> Result<[f64; 3]> {
                    match v {
                        None => Ok(default),
                        Some(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
                        Some(_) => bail!("obstacle `{what}` needs 3 numbers"),
                    }
                };
                let mid = [dims[0] as f64 / 2.0, dims[1] as f64 / 2.0, dims[2] as f64 / 2.0];
                Some(ObstacleSpec {
                    mesh: o.mesh.clone(),
                    transform: o.transform.clone(),
                    center: vec3(&o.center, "center", mid)?,
                    radius: o.radius.unwrap_or(dims[1] as f64 / 6.0),
                    subdivisions: o.subdivisions.unwrap_or(3),
                    velocity: vec3(&o.velocity, "velocity", [0.0; 3])?,
                    omega: vec3(&o.omega, "omega", [0.0; 3])?,
                })
            }
        };

        Ok(ScenarioSpec {
            kind,
            label: self.label.clone().unwrap_or_else(|| kind.name().into()),
            lattice,
            dims,
            nu,
            reynolds: self.reynolds,
            velocity,
            length,
            steps: self.steps.unwrap_or(100),
            snapshot_every: self.snapshot_every.unwrap_or(0),
            seed: self.seed.unwrap_or(0),
            scheme,
            precision,
            force,
            deterministic: self.deterministic.unwrap_or(false),
            vorticity_range: self.vorticity_range,
            boundaries,
            amplitude: init.amplitude.unwrap_or(velocity),
            kappa: init.kappa.unwrap_or(80.0),
            delta: init.delta.unwrap_or(0.05),
            radius: init.radius.unwrap_or(dims[0] as f64 / 8.0),
            obstacle,
        })
    }
}
