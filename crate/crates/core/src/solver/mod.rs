//! Time integration: the fused reference kernel and the split fluid-update /
//! solid-correction scheme over tiled moment storage.
//!
//! The two schemes store different halves of the step. The fused kernel
//! keeps post-collision moments and streams at the start of each step; the
//! split scheme keeps post-streaming moments and collides first. Starting
//! the split solver from the streamed fused state makes the trajectories
//! coincide: `(S∘C)ⁿ∘S = S∘(C∘S)ⁿ`.

pub mod grid;
pub mod solid;
pub mod stream;

use std::time::Instant;

use rayon::prelude::*;

use crate::collision::{moment_collide_unchecked, tau_from_nu};
use crate::error::{LbmError, Result};
use crate::geometry::{boundary_moments, Vec3};
use crate::io::{PrecisionFlag, Snapshot};
use crate::lattice::{Lattice, LatticeKind, CS2, SYM2};
use crate::moments::{HermiteClosure, MomentSet};

pub use grid::{Precision, SimGrid, StateStore, TiledLayout, TILE};
pub use solid::{Obstacle, SolidScene};
pub use stream::{Boundaries, FaceBc};

use stream::{inflow_tables, Streamer};

/// Speed at which a run is declared diverged.
pub const DIVERGENCE_SPEED: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    Fused,
    #[default]
    Split,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Fused => "fused",
            Scheme::Split => "split",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = LbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fused" => Ok(Scheme::Fused),
            "split" => Ok(Scheme::Split),
            _ => Err(LbmError::InvalidInput(format!("unknown scheme `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lattice: LatticeKind,
    pub nu: f64,
    pub force: [f64; 3],
    pub boundaries: Boundaries,
    pub precision: Precision,
    pub obstacles: Vec<Obstacle>,
    pub scheme: Scheme,
    /// Sequential solid correction in triangle order.
    pub deterministic: bool,
}

impl SolverConfig {
    /// Periodic, force-free, full precision, split scheme.
    pub fn new(lattice: LatticeKind, nu: f64) -> Self {
        SolverConfig {
            lattice,
            nu,
            force: [0.0; 3],
            boundaries: Boundaries::periodic(),
            precision: Precision::F64,
            obstacles: Vec::new(),
            scheme: Scheme::Split,
            deterministic: false,
        }
    }

    pub fn tau(&self) -> f64 {
        tau_from_nu(self.nu)
    }
}

/// Per-step timings and totals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub step: u64,
    pub t_fluid_ms: f64,
    pub t_copy_ms: f64,
    pub t_solid_ms: f64,
    pub mass: f64,
    pub momentum: [f64; 3],
    pub max_u: f64,
    /// Cumulative clamped samples over all components.
    pub saturations: u64,
    /// Momentum-exchange force and torque per obstacle.
    pub forces: Vec<(Vec3, Vec3)>,
}

pub enum RunEvent<'a> {
    Step(&'a StepStats),
    Snapshot(&'a Snapshot),
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub stats: Vec<StepStats>,
    pub snapshots: Vec<Snapshot>,
    /// Set when the run stopped early; the last snapshot is the last good state.
    pub error: Option<String>,
}

/// One corrected link found during a step.
#[derive(Debug, Clone, Copy)]
struct LinkCorrection {
    slot: usize,
    dir: usize,
    delta_f: f64,
    p: Vec3,
    obstacle: usize,
}

pub struct Solver {
    cfg: SolverConfig,
    lat: Lattice,
    closure: HermiteClosure,
    tau: f64,
    grid: SimGrid,
    scene: Option<SolidScene>,
    inflow: [[Vec<f64>; 2]; 3],
    /// Link directions pointing upstream (`−c_i`).
    upstream_dirs: Vec<[f64; 3]>,
    step: u64,
    post_m: Vec<MomentSet>,
    post_f: Vec<f64>,
    next: Vec<MomentSet>,
    last_forces: Vec<(Vec3, Vec3)>,
    timings: [f64; 3],
}

impl Solver {
    /// Grid `dims` with `dims[2] == 1` for 2D lattices; starts at rest.
    pub fn new(cfg: SolverConfig, dims: [usize; 3]) -> Result<Self> {
        let lat = Lattice::new(cfg.lattice);
        let d = lat.dims();
        if (d == 2) != (dims[2] == 1) {
            return Err(LbmError::InvalidInput(format!(
                "{} needs {} grid, got {dims:?}",
                cfg.lattice,
                if d == 2 { "an nx×ny×1" } else { "a 3D" }
            )));
        }
        if !(cfg.nu > 0.0) || !cfg.nu.is_finite() {
            return Err(LbmError::InvalidInput(format!("viscosity {} must be positive", cfg.nu)));
        }
        if cfg.force.iter().any(|f| !f.is_finite()) {
            return Err(LbmError::InvalidInput("non-finite body force".into()));
        }
        cfg.boundaries.validate(d)?;
        if d == 2 && !cfg.obstacles.is_empty() {
            return Err(LbmError::InvalidInput("mesh obstacles need a 3D lattice".into()));
        }
        let grid = SimGrid::new(dims, &cfg.precision)?;
        let closure = HermiteClosure::new(&lat);
        let inflow = inflow_tables(&lat, &closure, &cfg.boundaries);
        let scene = (!cfg.obstacles.is_empty()).then(|| SolidScene::new(&cfg.obstacles, dims));
        let slots = grid.layout().slots();
        let q = lat.q();
        let upstream_dirs = (0..q)
            .map(|i| {
                let c = lat.c(i);
                [-c[0], -c[1], -c[2]]
            })
            .collect();
        Ok(Solver {
            tau: cfg.tau(),
            last_forces: vec![([0.0; 3], [0.0; 3]); cfg.obstacles.len()],
            cfg,
            lat,
            closure,
            grid,
            scene,
            inflow,
            upstream_dirs,
            step: 0,
            post_m: vec![MomentSet::rest(); slots],
            post_f: vec![0.0; slots * q],
            next: vec![MomentSet::rest(); slots],
            timings: [0.0; 3],
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lat
    }

    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    pub fn scene(&self) -> Option<&SolidScene> {
        self.scene.as_ref()
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims()
    }

    /// Replaces the state from a per-node function of the coordinates.
    pub fn initialize(&mut self, f: impl Fn([usize; 3]) -> MomentSet + Sync) -> Result<()> {
        let layout = self.grid.layout().clone();
        let state: Vec<MomentSet> = (0..layout.slots())
            .into_par_iter()
            .map(|s| layout.coords(s).map_or(MomentSet::rest(), &f))
            .collect();
        self.store_checked(state)
    }

    /// Replaces the state from row-major moments.
    pub fn set_moments(&mut self, moments: &[MomentSet]) -> Result<()> {
        let layout = self.grid.layout().clone();
        if moments.len() != layout.nodes() {
            return Err(LbmError::InvalidInput(format!(
                "expected {} nodes, got {}",
                layout.nodes(),
                moments.len()
            )));
        }
        self.initialize(|p| moments[layout.linear(p)])
    }

    fn store_checked(&mut self, state: Vec<MomentSet>) -> Result<()> {
        let layout = self.grid.layout();
        for (s, m) in state.iter().enumerate() {
            if layout.coords(s).is_some() {
                m.validate()?;
            }
        }
        self.grid.store_all(&state, self.step)
    }

    /// Row-major moments of the authoritative state.
    pub fn moments(&self) -> Vec<MomentSet> {
        self.grid.moments()
    }

    pub fn velocity_field(&self) -> Vec<[f64; 3]> {
        self.moments().iter().map(|m| m.velocity()).collect()
    }

    pub fn snapshot(&self) -> Snapshot {
        let flag = match self.grid.store() {
            StateStore::F64(_) => PrecisionFlag::F64,
            StateStore::F32(_) => PrecisionFlag::F32,
            StateStore::Packed(_) => PrecisionFlag::Packed,
        };
        Snapshot::from_moments(self.step, self.dims(), flag, &self.moments())
    }

    /// Advances one step with the configured scheme.
    pub fn step(&mut self) -> Result<StepStats> {
        match self.cfg.scheme {
            Scheme::Fused => self.fused_step(),
            Scheme::Split => {
                self.fluid_update_step();
                self.solid_correction_step();
                self.finish_step()
            }
        }
    }

    /// Reference kernel: stream (testing every link against the obstacle),
    /// extract, collide.
    pub fn fused_step(&mut self) -> Result<StepStats> {
        let t0 = Instant::now();
        self.grid.load_all(&mut self.post_m);
        self.reconstruct_post();
        let corrections = self.stream_into_next(true);
        let collide = |m: &mut MomentSet| *m = moment_collide_unchecked(self.lat.dims(), m, self.cfg.force, self.tau);
        let layout = self.grid.layout();
        self.next
            .par_iter_mut()
            .enumerate()
            .filter(|(s, _)| layout.coords(*s).is_some())
            .for_each(|(_, m)| collide(m));
        self.last_forces = self.forces_from(&corrections);
        self.timings = [t0.elapsed().as_secs_f64() * 1e3, 0.0, 0.0];
        self.finish_step()
    }

    /// Obstacle-free collision → reconstruction → streaming → extraction.
    /// The result stays in the working buffer until [`finish_step`](Self::finish_step).
    pub fn fluid_update_step(&mut self) {
        let t0 = Instant::now();
        self.grid.load_all(&mut self.post_m);
        let layout = self.grid.layout();
        let (dims, force, tau) = (self.lat.dims(), self.cfg.force, self.tau);
        self.post_m
            .par_iter_mut()
            .enumerate()
            .filter(|(s, _)| layout.coords(*s).is_some())
            .for_each(|(_, m)| *m = moment_collide_unchecked(dims, m, force, tau));
        self.reconstruct_post();
        self.stream_into_next(false);
        self.timings = [t0.elapsed().as_secs_f64() * 1e3, 0.0, 0.0];
    }

    /// Adds the boundary corrections of every triangle to the working buffer.
    pub fn solid_correction_step(&mut self) {
        let t0 = Instant::now();
        let Some(scene) = &self.scene else {
            self.timings[2] = t0.elapsed().as_secs_f64() * 1e3;
            return;
        };
        let links = scene.all_links(&self.upstream_dirs, !self.cfg.deterministic);
        let layout = self.grid.layout();
        let streamer = self.streamer();
        let corrections: Vec<LinkCorrection> = links
            .iter()
            .map(|&(x, i, hit)| {
                let slot = layout.slot(x);
                let (obstacle, state) = scene.state_of(hit.tri);
                let mb = boundary_moments(hit.point, state, &self.post_m[slot]);
                let delta_f = self.closure.population(&mb, i) - streamer.upstream_population(x, i);
                LinkCorrection {
                    slot,
                    dir: i,
                    delta_f,
                    p: hit.point,
                    obstacle,
                }
            })
            .collect();
        let c: Vec<[f64; 3]> = (0..self.lat.q()).map(|i| self.lat.c(i)).collect();
        let dims = self.lat.dims();
        for k in &corrections {
            let m = &mut self.next[k.slot];
            let ci = c[k.dir];
            m.rho += k.delta_f;
            for a in 0..dims {
                m.mom[a] += ci[a] * k.delta_f;
            }
            for &j in crate::lattice::sym2_slots(dims) {
                let (a, b) = SYM2[j];
                let h = ci[a] * ci[b] - if a == b { CS2 } else { 0.0 };
                m.stress[j] += h * k.delta_f;
            }
        }
        self.last_forces = self.forces_from(&corrections);
        self.timings[2] = t0.elapsed().as_secs_f64() * 1e3;
    }

    /// Checks the working buffer, applies inflow slabs and commits it to
    /// storage (requantizing when packed).
    pub fn finish_step(&mut self) -> Result<StepStats> {
        let t0 = Instant::now();
        self.apply_inflow_slabs();
        let layout = self.grid.layout();
        let step = self.step + 1;
        let mut max_u: f64 = 0.0;
        let mut mass = 0.0;
        let mut momentum = [0.0; 3];
        for (s, m) in self.next.iter().enumerate() {
            let Some(p) = layout.coords(s) else { continue };
            let u = m.velocity();
            let speed = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
            let finite = m.rho.is_finite() && m.stress.iter().all(|v| v.is_finite());
            if !finite || !(m.rho > 0.0) || !(speed < DIVERGENCE_SPEED) {
                return Err(LbmError::Diverged {
                    step,
                    node: layout.linear(p),
                    reason: format!("rho {} speed {speed}", m.rho),
                });
            }
            max_u = max_u.max(speed);
            mass += m.rho;
            for a in 0..3 {
                momentum[a] += m.mom[a];
            }
        }
        self.grid.store_all(&self.next, step)?;
        self.step = step;
        self.timings[1] = t0.elapsed().as_secs_f64() * 1e3;
        Ok(StepStats {
            step,
            t_fluid_ms: self.timings[0],
            t_copy_ms: self.timings[1],
            t_solid_ms: self.timings[2],
            mass,
            momentum,
            max_u,
            saturations: self.grid.saturations().iter().sum(),
            forces: self.last_forces.clone(),
        })
    }

    /// Streaming alone (with obstacle links) applied to the current state,
    /// row-major. On a fused solver this is the split-scheme state at the
    /// same step.
    pub fn streamed_state(&mut self) -> Vec<MomentSet> {
        self.grid.load_all(&mut self.post_m);
        self.reconstruct_post();
        self.stream_into_next(true);
        let layout = self.grid.layout();
        (0..layout.nodes())
            .map(|i| self.next[layout.slot(layout.from_linear(i))])
            .collect()
    }

    /// Advances `steps` steps, reporting stats and snapshots through `sink`.
    /// The initial state is always emitted; later snapshots every
    /// `snapshot_every` steps (0 disables them). On divergence the last good
    /// state is emitted before the error is returned.
    pub fn run_with(
        &mut self,
        steps: u64,
        snapshot_every: u64,
        mut sink: impl FnMut(RunEvent<'_>) -> Result<()>,
    ) -> Result<()> {
        sink(RunEvent::Snapshot(&self.snapshot()))?;
        for _ in 0..steps {
            match self.step() {
                Ok(stats) => {
                    sink(RunEvent::Step(&stats))?;
                    if snapshot_every > 0 && self.step.is_multiple_of(snapshot_every) {
                        sink(RunEvent::Snapshot(&self.snapshot()))?;
                    }
                }
                Err(e) => {
                    sink(RunEvent::Snapshot(&self.snapshot()))?;
                    return Err(e);
                }
            }
        }
        Ok(())
    }

    /// Collects everything [`run_with`](Self::run_with) emits.
    pub fn run(&mut self, steps: u64, snapshot_every: u64) -> RunReport {
        let mut report = RunReport::default();
        let res = self.run_with(steps, snapshot_every, |ev| {
            match ev {
                RunEvent::Step(s) => report.stats.push(s.clone()),
                RunEvent::Snapshot(s) => report.snapshots.push(s.clone()),
            }
            Ok(())
        });
        report.error = res.err().map(|e| e.to_string());
        report
    }

    fn streamer(&self) -> Streamer<'_> {
        Streamer {
            layout: self.grid.layout(),
            q: self.lat.q(),
            dims: self.lat.dims(),
            c: self.lat.velocities(),
            opposite: self.lat.opposite(),
            faces: &self.cfg.boundaries.faces,
            inflow: &self.inflow,
            post_f: &self.post_f,
        }
    }

    fn reconstruct_post(&mut self) {
        let q = self.lat.q();
        let layout = self.grid.layout();
        let closure = &self.closure;
        let post_m = &self.post_m;
        self.post_f
            .par_chunks_mut(q)
            .enumerate()
            .filter(|(s, _)| layout.coords(*s).is_some())
            .for_each(|(s, f)| closure.reconstruct(&post_m[s], f));
    }

    /// Pulls populations into `next` and extracts moments. With
    /// `obstacles`, links cut by the mesh take the boundary population
    /// instead; the returned corrections feed the force readout.
    fn stream_into_next(&mut self, obstacles: bool) -> Vec<LinkCorrection> {
        let q = self.lat.q();
        let tn = self.grid.layout().tile_nodes();
        let mut next = std::mem::take(&mut self.next);
        let scene = if obstacles { self.scene.as_ref() } else { None };
        let streamer = self.streamer();
        let layout = self.grid.layout();
        let closure = &self.closure;
        let post_m = &self.post_m;
        let dirs = &self.upstream_dirs;
        let per_tile: Vec<Vec<LinkCorrection>> = next
            .par_chunks_mut(tn)
            .enumerate()
            .map(|(t, chunk)| {
                let mut f = [0.0; 27];
                let mut scratch = Vec::new();
                let mut corr = Vec::new();
                for (l, out) in chunk.iter_mut().enumerate() {
                    let slot = t * tn + l;
                    let Some(x) = layout.coords(slot) else { continue };
                    for (i, fi) in f.iter_mut().enumerate().take(q) {
                        *fi = streamer.upstream_population(x, i);
                    }
                    if let Some(scene) = scene {
                        if scene.mask().is_marked(x) {
                            scene.mask().candidates(x, &mut scratch);
                            for i in 1..q {
                                if let Some(hit) = scene.first_hit_in(&scratch, x, dirs[i]) {
                                    let (obstacle, state) = scene.state_of(hit.tri);
                                    let mb = boundary_moments(hit.point, state, &post_m[slot]);
                                    let fp = closure.population(&mb, i);
                                    corr.push(LinkCorrection {
                                        slot,
                                        dir: i,
                                        delta_f: fp - f[i],
                                        p: hit.point,
                                        obstacle,
                                    });
                                    f[i] = fp;
                                }
                            }
                        }
                    }
                    *out = closure.extract(&f[..q]);
                }
                corr
            })
            .collect();
        self.next = next;
        per_tile.into_iter().flatten().collect()
    }

    fn forces_from(&self, corrections: &[LinkCorrection]) -> Vec<(Vec3, Vec3)> {
        let Some(scene) = &self.scene else {
            return Vec::new();
        };
        let mut out = vec![([0.0; 3], [0.0; 3]); scene.obstacle_count()];
        for k in corrections {
            let c = self.lat.c(k.dir);
            let link = crate::geometry::LinkContribution {
                delta_f: k.delta_f,
                c,
                p: k.p,
            };
            let (f, t) = crate::geometry::accumulate_force_torque(&[link], scene.center(k.obstacle));
            for a in 0..3 {
                out[k.obstacle].0[a] += f[a];
                out[k.obstacle].1[a] += t[a];
            }
        }
        out
    }

    fn apply_inflow_slabs(&mut self) {
        let layout = self.grid.layout().clone();
        let n = layout.dims();
        for a in 0..self.lat.dims() {
            for face in 0..2 {
                let FaceBc::Inflow(u) = self.cfg.boundaries.faces[a][face] else {
                    continue;
                };
                let eq = MomentSet::equilibrium(1.0, u);
                let layer = if face == 0 { 0 } else { n[a] - 1 };
                for i in 0..layout.nodes() {
                    let p = layout.from_linear(i);
                    if p[a] == layer {
                        self.next[layout.slot(p)] = eq;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg2(nu: f64) -> SolverConfig {
        SolverConfig::new(LatticeKind::D2Q9, nu)
    }

    #[test]
    fn rest_is_a_fixed_point() {
        for scheme in [Scheme::Fused, Scheme::Split] {
            let mut c = cfg2(0.05);
            c.scheme = scheme;
            let mut s = Solver::new(c, [16, 12, 1]).unwrap();
            for _ in 0..5 {
                s.step().unwrap();
            }
            let worst = s
                .moments()
                .iter()
                .map(|m| m.max_abs_diff(&MomentSet::rest()))
                .fold(0.0, f64::max);
            assert!(worst < 1e-15, "{scheme}: {worst}");
        }
    }

    #[test]
    fn uniform_flow_is_invariant() {
        let u0 = [0.05, -0.03, 0.0];
        let eq = MomentSet::equilibrium(1.0, u0);
        for scheme in [Scheme::Fused, Scheme::Split] {
            let mut c = cfg2(0.02);
            c.scheme = scheme;
            let mut s = Solver::new(c, [8, 8, 1]).unwrap();
            s.initialize(|_| eq).unwrap();
            for _ in 0..10 {
                s.step().unwrap();
            }
            let worst = s.moments().iter().map(|m| m.max_abs_diff(&eq)).fold(0.0, f64::max);
            assert!(worst < 1e-14, "{scheme}: {worst}");
        }
    }

    #[test]
    fn padded_grid_conserves_mass() {
        let mut s = Solver::new(cfg2(0.05), [10, 13, 1]).unwrap();
        s.initialize(|p| MomentSet::equilibrium(1.0 + 0.01 * ((p[0] * 7 + p[1] * 3) % 5) as f64, [0.0; 3]))
            .unwrap();
        let m0: f64 = s.moments().iter().map(|m| m.rho).sum();
        let mut last = StepStats::default();
        for _ in 0..20 {
            last = s.step().unwrap();
        }
        assert!(((last.mass - m0) / m0).abs() < 1e-13);
    }

    #[test]
    fn walls_hold_mass_and_inflow_sets_inlet() {
        let mut c = cfg2(0.05);
        c.boundaries.faces[1] = [FaceBc::Wall, FaceBc::Wall];
        let mut s = Solver::new(c.clone(), [16, 8, 1]).unwrap();
        s.initialize(|p| MomentSet::equilibrium(1.0, [0.02 * (p[1] as f64 / 8.0), 0.0, 0.0]))
            .unwrap();
        let m0: f64 = s.moments().iter().map(|m| m.rho).sum();
        let mut last = StepStats::default();
        for _ in 0..30 {
            last = s.step().unwrap();
        }
        assert!(((last.mass - m0) / m0).abs() < 1e-12);

        c.boundaries.faces[0] = [FaceBc::Inflow([0.05, 0.0, 0.0]), FaceBc::Outflow];
        let mut s = Solver::new(c, [16, 8, 1]).unwrap();
        for _ in 0..10 {
            s.step().unwrap();
            for y in 0..8 {
                let u = s.grid().get([0, y, 0]).velocity();
                assert!((u[0] - 0.05).abs() < 1e-15 && u[1].abs() < 1e-15);
            }
        }
    }

    #[test]
    fn divergence_is_reported_with_last_good_snapshot() {
        let mut c = cfg2(0.05);
        c.force = [0.2, 0.0, 0.0];
        let mut s = Solver::new(c, [8, 8, 1]).unwrap();
        let report = s.run(50, 0);
        let err = report.error.expect("must diverge");
        assert!(err.contains("diverged"), "{err}");
        let last = report.snapshots.last().unwrap();
        assert_eq!(last.step, report.stats.len() as u64);
        assert!(last.velocity(0)[0] < DIVERGENCE_SPEED);
    }

    #[test]
    fn zero_steps_yield_initial_snapshot() {
        let mut s = Solver::new(cfg2(0.05), [8, 8, 1]).unwrap();
        let r = s.run(0, 10);
        assert_eq!(r.snapshots.len(), 1);
        assert!(r.stats.is_empty() && r.error.is_none());
        let r = s.run(20, 10);
        assert_eq!(r.snapshots.iter().map(|s| s.step).collect::<Vec<_>>(), vec![0, 10, 20]);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(Solver::new(cfg2(0.05), [8, 8, 8]).is_err());
        assert!(Solver::new(SolverConfig::new(LatticeKind::D3Q19, 0.05), [8, 8, 1]).is_err());
        assert!(Solver::new(cfg2(-1.0), [8, 8, 1]).is_err());
        let mut s = Solver::new(cfg2(0.05), [4, 4, 1]).unwrap();
        assert!(s.set_moments(&[MomentSet::rest(); 3]).is_err());
        assert!(s.initialize(|_| MomentSet::equilibrium(1.0, [1.2, 0.0, 0.0])).is_err());
    }
}
