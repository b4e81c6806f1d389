use momentlbm::collision::{nocm_mrt_collide, NocmEquilibrium, RelaxationConfig};
use momentlbm::moments::{moments_from_distributions, HermiteClosure};
use momentlbm::stability::{collision_jacobian, LinearizationPoint, Model};
use momentlbm::{EquilibriumOrder, Lattice, LatticeKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORDERS: [EquilibriumOrder; 4] = [
    EquilibriumOrder::Second,
    EquilibriumOrder::Third,
    EquilibriumOrder::Fourth,
    EquilibriumOrder::FourthAsPrinted,
];

#[test]
fn equilibrium_jacobians_match_central_differences() {
    let lat = Lattice::new(LatticeKind::D2Q9);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-6;
    for _ in 0..20 {
        let rho = rng.gen_range(0.8..1.5);
        let u = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        for order in ORDERS {
            let jac = lat.equilibrium_jacobians(rho, &u, order).unwrap();
            let plus = lat.equilibrium(rho + h, &u, order).unwrap();
            let minus = lat.equilibrium(rho - h, &u, order).unwrap();
            for i in 0..9 {
                let fd = (plus[i] - minus[i]) / (2.0 * h);
                assert!((fd - jac.d_rho[i]).abs() < 1e-7, "{order:?} d_rho[{i}]");
            }
            for a in 0..2 {
                let mut up = u;
                let mut um = u;
                up[a] += h;
                um[a] -= h;
                let plus = lat.equilibrium(rho, &up, order).unwrap();
                let minus = lat.equilibrium(rho, &um, order).unwrap();
                for i in 0..9 {
                    let fd = (plus[i] - minus[i]) / (2.0 * h);
                    assert!((fd - jac.d_u[a][i]).abs() < 1e-7, "{order:?} d_u{a}[{i}]");
                }
            }
        }
    }
}

/// The HOME collision Jacobian assembled from the Hermite matrices equals a
/// finite-difference Jacobian of the actual map: central-moment collision,
/// moment extraction, third-order reconstruction.
#[test]
fn home_jacobian_matches_composite_map() {
    let lat = Lattice::new(LatticeKind::D2Q9);
    let closure = HermiteClosure::new(&lat);
    for (u, nu) in [([0.0, 0.0], 1e-3), ([0.1, -0.05], 1e-4), ([0.2, 0.15], 0.02)] {
        let point = LinearizationPoint::new(u, nu);
        let j = collision_jacobian(Model::Home, &lat, &point, EquilibriumOrder::Third).unwrap();
        let rates = RelaxationConfig::central_moment(nu).rates;
        let map = |f: &[f64]| -> Vec<f64> {
            let m = moments_from_distributions(&lat, f).unwrap();
            let v = m.velocity();
            let post = nocm_mrt_collide(&lat, f, m.rho, &v[..2], &rates, NocmEquilibrium::CentralMaxwellian).unwrap();
            let mp = moments_from_distributions(&lat, &post).unwrap();
            let mut out = vec![0.0; 9];
            closure.reconstruct(&mp, &mut out);
            out
        };
        let f0 = lat.equilibrium(1.0, &u, EquilibriumOrder::Third).unwrap();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for col in 0..9 {
            let mut fp = f0.clone();
            let mut fm = f0.clone();
            fp[col] += h;
            fm[col] -= h;
            let (gp, gm) = (map(&fp), map(&fm));
            for row in 0..9 {
                let fd = (gp[row] - gm[row]) / (2.0 * h);
                worst = worst.max((fd - j[(row, col)]).abs());
            }
        }
        assert!(worst < 1e-8, "u {u:?}: {worst}");
    }
}
