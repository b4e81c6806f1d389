use std::f64::consts::PI;

use momentlbm::geometry::{SolidState, TriangleMesh};
use momentlbm::lattice::CS2;
use momentlbm::quant::{BitPreset, QuantSpec};
use momentlbm::solver::{Obstacle, Precision, Scheme, Solver, SolverConfig};
use momentlbm::{LatticeKind, MomentSet};

fn taylor_green(n: usize, u0: f64) -> impl Fn([usize; 3]) -> MomentSet + Sync {
    let k = 2.0 * PI / n as f64;
    move |p| {
        let (x, y) = (p[0] as f64, p[1] as f64);
        let ux = -u0 * (k * x).cos() * (k * y).sin();
        let uy = u0 * (k * x).sin() * (k * y).cos();
        let rho = 1.0 - u0 * u0 / (4.0 * CS2) * ((2.0 * k * x).cos() + (2.0 * k * y).cos());
        MomentSet::equilibrium(rho, [ux, uy, 0.0])
    }
}

fn max_diff(a: &[MomentSet], b: &[MomentSet]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max)
}

fn kinetic_energy(ms: &[MomentSet]) -> f64 {
    ms.iter()
        .map(|m| {
            let u = m.velocity();
            0.5 * m.rho * (u[0] * u[0] + u[1] * u[1])
        })
        .sum()
}

#[test]
fn split_tracks_streamed_fused_state() {
    let n = 32;
    let mut cfg = SolverConfig::new(LatticeKind::D2Q9, 0.01);
    cfg.scheme = Scheme::Fused;
    let mut fused = Solver::new(cfg.clone(), [n, n, 1]).unwrap();
    fused.initialize(taylor_green(n, 0.05)).unwrap();
    cfg.scheme = Scheme::Split;
    let mut split = Solver::new(cfg, [n, n, 1]).unwrap();
    split.set_moments(&fused.streamed_state()).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        fused.step().unwrap();
        split.step().unwrap();
        worst = worst.max(max_diff(&split.moments(), &fused.streamed_state()));
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn periodic_run_conserves_mass_and_momentum() {
    let n = 32;
    let mut cfg = SolverConfig::new(LatticeKind::D2Q9, 0.02);
    cfg.scheme = Scheme::Split;
    let mut s = Solver::new(cfg, [n, n, 1]).unwrap();
    let drift = [0.01, -0.02, 0.0];
    let tg = taylor_green(n, 0.05);
    s.initialize(|p| {
        let m = tg(p);
        let u = m.velocity();
        MomentSet::equilibrium(m.rho, [u[0] + drift[0], u[1] + drift[1], 0.0])
    })
    .unwrap();
    let m0 = s.moments();
    let mass0: f64 = m0.iter().map(|m| m.rho).sum();
    let p0: Vec<f64> = (0..2).map(|a| m0.iter().map(|m| m.mom[a]).sum()).collect();
    let scale: f64 = m0.iter().map(|m| m.mom[0].hypot(m.mom[1])).sum();
    let report = s.run(1000, 0);
    assert!(report.error.is_none());
    let last = report.stats.last().unwrap();
    assert!(((last.mass - mass0) / mass0).abs() < 1e-10);
    for a in 0..2 {
        assert!(((last.momentum[a] - p0[a]) / scale).abs() < 1e-10, "{a}");
    }
}

#[test]
fn taylor_vortex_decays_at_viscous_rate() {
    let n = 32;
    let nu = 0.02;
    let k2 = 2.0 * (2.0 * PI / n as f64).powi(2);
    for scheme in [Scheme::Fused, Scheme::Split] {
        let mut cfg = SolverConfig::new(LatticeKind::D2Q9, nu);
        cfg.scheme = scheme;
        let mut s = Solver::new(cfg, [n, n, 1]).unwrap();
        s.initialize(taylor_green(n, 0.02)).unwrap();
        let e0 = kinetic_energy(&s.moments());
        let steps = 400;
        for _ in 0..steps {
            s.step().unwrap();
        }
        let rate = -(kinetic_energy(&s.moments()) / e0).ln() / steps as f64;
        let expect = 2.0 * nu * k2;
        assert!(((rate - expect) / expect).abs() < 0.02, "{scheme}: {rate} vs {expect}");
    }
}

fn blocker_scene() -> Obstacle {
    Obstacle {
        mesh: TriangleMesh::new(
            vec![[7.5, 5.3, 5.2], [7.5, 10.6, 5.4], [7.5, 8.1, 10.7]],
            vec![[0, 1, 2]],
        )
        .unwrap(),
        state: SolidState {
            center: [7.5, 8.0, 8.0],
            ..Default::default()
        },
    }
}

#[test]
fn obstacle_scene_fused_equals_split() {
    let n = 16;
    for lattice in [LatticeKind::D3Q19, LatticeKind::D3Q27] {
        let mut cfg = SolverConfig::new(lattice, 0.05);
        cfg.obstacles = vec![blocker_scene()];
        cfg.deterministic = true;
        cfg.scheme = Scheme::Fused;
        let init = |_p: [usize; 3]| MomentSet::equilibrium(1.0, [0.03, 0.005, -0.002]);
        let mut fused = Solver::new(cfg.clone(), [n, n, n]).unwrap();
        fused.initialize(init).unwrap();
        cfg.scheme = Scheme::Split;
        let mut split = Solver::new(cfg, [n, n, n]).unwrap();
        split.set_moments(&fused.streamed_state()).unwrap();
        let mut worst: f64 = 0.0;
        let mut fused_force = Vec::new();
        let mut split_force = Vec::new();
        for _ in 0..10 {
            fused_force.push(fused.step().unwrap().forces[0].0);
            split_force.push(split.step().unwrap().forces[0].0);
            worst = worst.max(max_diff(&split.moments(), &fused.streamed_state()));
        }
        assert!(worst < 1e-12, "{lattice}: {worst}");
        // Split step n streams the state fused step n + 1 streams.
        for (f, s) in fused_force[1..].iter().zip(&split_force) {
            for a in 0..3 {
                assert!((f[a] - s[a]).abs() < 1e-12, "{f:?} {s:?}");
            }
        }
        assert!(split_force[9][0] > 0.0, "flow along +x should push the plate downstream");
        let rest = MomentSet::equilibrium(1.0, [0.03, 0.005, -0.002]);
        let disturbed = split.moments().iter().filter(|m| m.max_abs_diff(&rest) > 1e-6).count();
        assert!(disturbed > 0);
    }
}

#[test]
fn outside_obstacle_is_identity() {
    let mut far = blocker_scene();
    for v in far.mesh.vertices.iter_mut() {
        v[0] += 50.0;
    }
    let mut cfg = SolverConfig::new(LatticeKind::D3Q19, 0.05);
    cfg.obstacles = vec![far];
    let mut with = Solver::new(cfg.clone(), [8, 8, 8]).unwrap();
    cfg.obstacles.clear();
    let mut without = Solver::new(cfg, [8, 8, 8]).unwrap();
    let init = |p: [usize; 3]| MomentSet::equilibrium(1.0, [0.01 * (p[1] as f64 / 8.0), 0.0, 0.0]);
    with.initialize(init).unwrap();
    without.initialize(init).unwrap();
    for _ in 0..3 {
        with.step().unwrap();
        without.step().unwrap();
    }
    assert_eq!(max_diff(&with.moments(), &without.moments()), 0.0);
}

#[test]
fn sixteen_bit_state_stays_finite() {
    let n = 32;
    let mut cfg = SolverConfig::new(LatticeKind::D2Q9, 0.01);
    cfg.precision = Precision::Packed(QuantSpec::bit_allocation(2, BitPreset::new(16, 16)).unwrap());
    let mut s = Solver::new(cfg, [n, n, 1]).unwrap();
    s.initialize(taylor_green(n, 0.05)).unwrap();
    let report = s.run(300, 0);
    assert!(report.error.is_none(), "{:?}", report.error);
    let rho_sat = s.grid().saturations()[0];
    assert_eq!(rho_sat, 0);
    assert_eq!(s.grid().bytes_per_node(), 12);
}
