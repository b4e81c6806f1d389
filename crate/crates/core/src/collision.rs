//! Collision operators: BGK, raw-moment MRT and central-moment MRT in
//! population space (D2Q9), and the moment-space collision used by the
//! solver.

use nalgebra::{SMatrix, SVector};

use crate::error::{LbmError, Result};
use crate::lattice::{EquilibriumOrder, Lattice, LatticeKind, CS2, SYM2};
use crate::moments::{moments_from_distributions, reconstruct_distributions, MomentSet};

pub type Mat9 = SMatrix<f64, 9, 9>;
pub type Vec9 = SVector<f64, 9>;

/// Relaxation rate controlling the shear viscosity, `1 / (0.5 + ν/cs²)`.
pub fn rate_from_nu(nu: f64) -> f64 {
    1.0 / (0.5 + nu / CS2)
}

/// Relaxation time `τ = 0.5 + ν/cs²`.
pub fn tau_from_nu(nu: f64) -> f64 {
    0.5 + nu / CS2
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.5) || !tau.is_finite() {
        return Err(LbmError::InvalidInput(format!(
            "relaxation time {tau} must exceed 0.5"
        )));
    }
    Ok(())
}

fn require_d2q9(lat: &Lattice) -> Result<()> {
    if lat.kind() != LatticeKind::D2Q9 {
        return Err(LbmError::InvalidInput(format!(
            "population-space MRT is defined for D2Q9 only, got {}",
            lat.kind()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationConfig {
    pub nu: f64,
    pub tau: f64,
    pub rates: [f64; 9],
}

impl RelaxationConfig {
    /// Raw-moment MRT rates `(0, 0, 0, 1.64, r_ν, r_ν, 1.9, 1.9, 1.54)`.
    pub fn raw_moment(nu: f64) -> Self {
        let r = rate_from_nu(nu);
        RelaxationConfig {
            nu,
            tau: tau_from_nu(nu),
            rates: [0.0, 0.0, 0.0, 1.64, r, r, 1.9, 1.9, 1.54],
        }
    }

    /// Central-moment MRT rates `(0, 0, 0, s_ν, s_ν, s_ν, 1, 1, 1)`.
    pub fn central_moment(nu: f64) -> Self {
        let s = rate_from_nu(nu);
        RelaxationConfig {
            nu,
            tau: tau_from_nu(nu),
            rates: [0.0, 0.0, 0.0, s, s, s, 1.0, 1.0, 1.0],
        }
    }

    /// Every rate equal to 1/τ.
    pub fn uniform(nu: f64) -> Self {
        let r = rate_from_nu(nu);
        RelaxationConfig {
            nu,
            tau: tau_from_nu(nu),
            rates: [r; 9],
        }
    }
}

/// Raw-moment transformation matrix for D2Q9.
pub fn rm_matrix() -> Mat9 {
    #[rustfmt::skip]
    let rows = [
        1.0, 1.0,  1.0,  1.0,  1.0, 1.0,  1.0,  1.0,  1.0,
        0.0, 1.0,  0.0, -1.0,  0.0, 1.0, -1.0, -1.0,  1.0,
        0.0, 0.0,  1.0,  0.0, -1.0, 1.0,  1.0, -1.0, -1.0,
        0.0, 1.0,  1.0,  1.0,  1.0, 2.0,  2.0,  2.0,  2.0,
        0.0, 1.0, -1.0,  1.0, -1.0, 0.0,  0.0,  0.0,  0.0,
        0.0, 0.0,  0.0,  0.0,  0.0, 1.0, -1.0,  1.0, -1.0,
        0.0, 1.0,  0.0, -1.0,  0.0, 2.0, -2.0, -2.0,  2.0,
        0.0, 0.0,  1.0,  0.0, -1.0, 2.0,  2.0, -2.0, -2.0,
        0.0, 0.0,  0.0,  0.0,  0.0, 1.0,  1.0,  1.0,  1.0,
    ];
    Mat9::from_row_slice(&rows)
}

/// Central-moment transformation matrix M(u) for D2Q9.
pub fn nocm_matrix(lat: &Lattice, u: [f64; 2]) -> Mat9 {
    let mut m = Mat9::zeros();
    for i in 0..9 {
        let c = lat.c(i);
        let x = c[0] - u[0];
        let y = c[1] - u[1];
        let col = [
            1.0,
            x,
            y,
            x * x + y * y,
            x * x - y * y,
            x * y,
            x * x * y,
            x * y * y,
            x * x * y * y,
        ];
        for (r, v) in col.iter().enumerate() {
            m[(r, i)] = *v;
        }
    }
    m
}

/// Dense LU inverse with a residual check.
pub fn checked_inverse(m: &Mat9) -> Result<Mat9> {
    let inv = m
        .lu()
        .try_inverse()
        .ok_or_else(|| LbmError::Numerical("moment matrix is singular".into()))?;
    let resid = (m * inv - Mat9::identity()).abs().max();
    if resid > 1e-8 {
        return Err(LbmError::Numerical(format!(
            "moment matrix inversion residual {resid:e}"
        )));
    }
    Ok(inv)
}

fn to_vec9(f: &[f64]) -> Vec9 {
    Vec9::from_column_slice(f)
}

/// `f' = f − (f − f^eq)/τ`.
pub fn bgk_collide(
    lat: &Lattice,
    f: &[f64],
    rho: f64,
    u: &[f64],
    tau: f64,
    order: EquilibriumOrder,
) -> Result<Vec<f64>> {
    check_tau(tau)?;
    let feq = lat.equilibrium(rho, u, order)?;
    Ok(f.iter()
        .zip(&feq)
        .map(|(fi, ei)| fi - (fi - ei) / tau)
        .collect())
}

/// `f' = f − M⁻¹ R M (f − f^eq)` in the raw-moment basis.
pub fn rm_mrt_collide(
    lat: &Lattice,
    f: &[f64],
    rho: f64,
    u: &[f64],
    rates: &[f64; 9],
    order: EquilibriumOrder,
) -> Result<Vec<f64>> {
    require_d2q9(lat)?;
    let feq = lat.equilibrium(rho, u, order)?;
    let m = rm_matrix();
    let inv = checked_inverse(&m)?;
    let r = Mat9::from_diagonal(&Vec9::from_column_slice(rates));
    let fv = to_vec9(f);
    let out = fv - inv * r * m * (fv - to_vec9(&feq));
    Ok(out.iter().copied().collect())
}

/// Equilibrium used by the central-moment collision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NocmEquilibrium {
    /// Discrete Maxwellian central moments `(ρ, 0, 0, 2ρcs², 0, 0, 0, 0, ρcs⁴)`.
    #[default]
    CentralMaxwellian,
    /// `M(u) f^eq` for the given polynomial equilibrium.
    Distribution(EquilibriumOrder),
}

/// Central-moment MRT collision with M(u) built at the local velocity.
pub fn nocm_mrt_collide(
    lat: &Lattice,
    f: &[f64],
    rho: f64,
    u: &[f64],
    rates: &[f64; 9],
    eq: NocmEquilibrium,
) -> Result<Vec<f64>> {
    require_d2q9(lat)?;
    if u.len() != 2 {
        return Err(LbmError::InvalidInput("D2Q9 expects a 2D velocity".into()));
    }
    let m = nocm_matrix(lat, [u[0], u[1]]);
    let inv = checked_inverse(&m)?;
    let meq = match eq {
        NocmEquilibrium::CentralMaxwellian => {
            let mut v = Vec9::zeros();
            v[0] = rho;
            v[3] = 2.0 * rho * CS2;
            v[8] = rho * CS2 * CS2;
            v
        }
        NocmEquilibrium::Distribution(order) => m * to_vec9(&lat.equilibrium(rho, u, order)?),
    };
    let fv = to_vec9(f);
    let mom = m * fv;
    let mut post = mom;
    for k in 0..9 {
        post[k] -= rates[k] * (mom[k] - meq[k]);
    }
    Ok((inv * post).iter().copied().collect())
}

/// Moment-space collision of a post-streaming state `m*` under body force `force`.
///
/// 3D follows the deviatoric/trace split, relaxing the trace at rate one.
/// 2D relaxes all three stress components at `1/τ`, which is what the
/// central-moment MRT with `s_ν` on every second-order moment produces.
pub fn moment_collide(
    dims: usize,
    m: &MomentSet,
    force: [f64; 3],
    tau: f64,
) -> Result<MomentSet> {
    check_tau(tau)?;
    let out = moment_collide_unchecked(dims, m, force, tau);
    let u = out.velocity();
    let speed = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if !speed.is_finite() || speed >= 1.0 {
        return Err(LbmError::InvalidState(format!(
            "post-collision velocity magnitude {speed}"
        )));
    }
    Ok(out)
}

/// [`moment_collide`] without the τ and velocity checks, for hot loops.
#[inline]
pub fn moment_collide_unchecked(dims: usize, m: &MomentSet, force: [f64; 3], tau: f64) -> MomentSet {
    let rho = m.rho;
    let inv_rho = 1.0 / rho;
    let u = [m.mom[0] * inv_rho, m.mom[1] * inv_rho, m.mom[2] * inv_rho];
    let s_rate = 1.0 / tau;
    let mut out = MomentSet {
        rho,
        mom: [0.0; 3],
        stress: [0.0; 6],
    };
    for a in 0..dims {
        out.mom[a] = rho * (u[a] + force[a] * 0.5 * inv_rho);
    }
    let s = |k: usize| m.stress[k] * inv_rho;
    let force_coef = (2.0 * tau - 1.0) / (2.0 * tau);
    if dims == 2 {
        for &(k, a, b) in &[(0usize, 0usize, 0usize), (1, 0, 1), (3, 1, 1)] {
            let sab = (1.0 - s_rate) * s(k)
                + s_rate * u[a] * u[b]
                + force_coef * inv_rho * (force[a] * u[b] + force[b] * u[a]);
            out.stress[k] = rho * sab;
        }
        return out;
    }
    for (k, &(a, b)) in SYM2.iter().enumerate() {
        if a == b {
            continue;
        }
        let sab = (1.0 - s_rate) * s(k)
            + s_rate * u[a] * u[b]
            + force_coef * inv_rho * (force[a] * u[b] + force[b] * u[a]);
        out.stress[k] = rho * sab;
    }
    let diag = [s(0), s(3), s(5)];
    let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    let fu = [force[0] * u[0], force[1] * u[1], force[2] * u[2]];
    for a in 0..3 {
        let b = (a + 1) % 3;
        let g = (a + 2) % 3;
        let saa = (tau - 1.0) / (3.0 * tau) * (2.0 * diag[a] - diag[b] - diag[g])
            + u2 / 3.0
            + (2.0 * u[a] * u[a] - u[b] * u[b] - u[g] * u[g]) / (3.0 * tau)
            + fu[a] * inv_rho
            + (tau - 1.0) / (3.0 * tau * rho) * (2.0 * fu[a] - fu[b] - fu[g]);
        out.stress[[0, 3, 5][a]] = rho * saa;
    }
    out
}

/// Largest componentwise gap between the moment collision and the moments of
/// a central-moment MRT collision applied to the reconstructed populations.
pub fn reference_collision_equivalence(lat: &Lattice, m: &MomentSet, tau: f64) -> Result<f64> {
    require_d2q9(lat)?;
    let nu = (tau - 0.5) * CS2;
    let direct = moment_collide(2, m, [0.0; 3], tau)?;
    let f = reconstruct_distributions(lat, m);
    let u = m.velocity();
    let rates = RelaxationConfig::central_moment(nu).rates;
    let post = nocm_mrt_collide(
        lat,
        &f,
        m.rho,
        &u[..2],
        &rates,
        NocmEquilibrium::CentralMaxwellian,
    )?;
    let reference = moments_from_distributions(lat, &post)?;
    Ok(direct.max_abs_diff(&reference))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::neq_recompose;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn lat() -> Lattice {
        Lattice::new(LatticeKind::D2Q9)
    }

    fn perturbed(seed: u64) -> (Vec<f64>, f64, [f64; 2]) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let l = lat();
        let u = [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)];
        let rho = rng.gen_range(0.9..1.1);
        let mut f = l.equilibrium(rho, &u, EquilibriumOrder::Fourth).unwrap();
        for fi in f.iter_mut() {
            *fi *= 1.0 + rng.gen_range(-0.02..0.02);
        }
        let m = moments_from_distributions(&l, &f).unwrap();
        let u = m.velocity();
        (f, m.rho, [u[0], u[1]])
    }

    #[test]
    fn tau_law() {
        assert_abs_diff_eq!(tau_from_nu(1e-3), 0.503, epsilon = 1e-15);
        assert_abs_diff_eq!(rate_from_nu(1e-3) * tau_from_nu(1e-3), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bgk_fixed_point_and_full_relaxation() {
        let l = lat();
        let feq = l.equilibrium(1.05, &[0.05, -0.02], EquilibriumOrder::Fourth).unwrap();
        let out = bgk_collide(&l, &feq, 1.05, &[0.05, -0.02], 0.8, EquilibriumOrder::Fourth).unwrap();
        for i in 0..9 {
            assert_abs_diff_eq!(out[i], feq[i], epsilon = 1e-16);
        }
        let (f, rho, u) = perturbed(3);
        let out = bgk_collide(&l, &f, rho, &u, 1.0, EquilibriumOrder::Fourth).unwrap();
        let feq = l.equilibrium(rho, &u, EquilibriumOrder::Fourth).unwrap();
        for i in 0..9 {
            assert_abs_diff_eq!(out[i], feq[i], epsilon = 1e-16);
        }
        let out = bgk_collide(&l, &f, rho, &u, 0.8, EquilibriumOrder::Fourth).unwrap();
        for i in 0..9 {
            assert_abs_diff_eq!(out[i], f[i] - (f[i] - feq[i]) / 0.8, epsilon = 1e-16);
        }
        assert!(bgk_collide(&l, &f, rho, &u, 0.5, EquilibriumOrder::Fourth).is_err());
    }

    #[test]
    fn uniform_rm_rates_match_bgk() {
        let l = lat();
        for seed in 0..20 {
            let (f, rho, u) = perturbed(seed);
            let cfg = RelaxationConfig::uniform(0.02);
            let a = rm_mrt_collide(&l, &f, rho, &u, &cfg.rates, EquilibriumOrder::Fourth).unwrap();
            let b = bgk_collide(&l, &f, rho, &u, cfg.tau, EquilibriumOrder::Fourth).unwrap();
            for i in 0..9 {
                assert_abs_diff_eq!(a[i], b[i], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn rm_matches_dense_oracle() {
        let l = lat();
        let (f, rho, u) = perturbed(11);
        let cfg = RelaxationConfig::raw_moment(1e-3);
        let out = rm_mrt_collide(&l, &f, rho, &u, &cfg.rates, EquilibriumOrder::Fourth).unwrap();
        // Oracle: relax raw moments one at a time then solve M f' = m'.
        let m = rm_matrix();
        let feq = l.equilibrium(rho, &u, EquilibriumOrder::Fourth).unwrap();
        let mf = m * to_vec9(&f);
        let me = m * to_vec9(&feq);
        let mut post = mf;
        for k in 0..9 {
            post[k] = mf[k] - cfg.rates[k] * (mf[k] - me[k]);
        }
        let sol = m.lu().solve(&post).unwrap();
        for i in 0..9 {
            assert_abs_diff_eq!(out[i], sol[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn nocm_at_rest_matches_raw_basis() {
        let l = lat();
        let m0 = nocm_matrix(&l, [0.0, 0.0]);
        let rm = rm_matrix();
        // Row-equivalent bases: same span, operator action agrees for
        // rates that are equal within each mixed block.
        let (mut f, rho, u) = perturbed(5);
        // Remove net momentum so u = 0 is the true local velocity.
        f[1] -= 0.5 * rho * u[0];
        f[3] += 0.5 * rho * u[0];
        f[2] -= 0.5 * rho * u[1];
        f[4] += 0.5 * rho * u[1];
        let rates = [0.0, 0.0, 0.0, 1.3, 1.3, 1.3, 1.0, 1.0, 1.0];
        let feq = l.equilibrium(rho, &[0.0, 0.0], EquilibriumOrder::Fourth).unwrap();
        let a = nocm_mrt_collide(
            &l,
            &f,
            rho,
            &[0.0, 0.0],
            &rates,
            NocmEquilibrium::Distribution(EquilibriumOrder::Fourth),
        )
        .unwrap();
        let inv = checked_inverse(&rm).unwrap();
        let r = Mat9::from_diagonal(&Vec9::from_column_slice(&rates));
        let b = to_vec9(&f) - inv * r * rm * (to_vec9(&f) - to_vec9(&feq));
        for i in 0..9 {
            assert_abs_diff_eq!(a[i], b[i], epsilon = 1e-14);
        }
        // Rows 0..3 and 5.. coincide at u = 0 up to the raw basis' row 3/4 recombination.
        for j in 0..9 {
            assert_eq!(m0[(0, j)], rm[(0, j)]);
            assert_eq!(m0[(5, j)], rm[(5, j)]);
            assert_eq!(m0[(8, j)], rm[(8, j)]);
        }
    }

    #[test]
    fn mrt_conserves_mass_and_momentum() {
        let l = lat();
        for seed in 0..20 {
            let (f, rho, u) = perturbed(100 + seed);
            let rm = RelaxationConfig::raw_moment(1e-4);
            let cm = RelaxationConfig::central_moment(1e-4);
            for out in [
                rm_mrt_collide(&l, &f, rho, &u, &rm.rates, EquilibriumOrder::Fourth).unwrap(),
                nocm_mrt_collide(&l, &f, rho, &u, &cm.rates, NocmEquilibrium::default()).unwrap(),
                bgk_collide(&l, &f, rho, &u, cm.tau, EquilibriumOrder::Fourth).unwrap(),
            ] {
                let a = moments_from_distributions(&l, &f).unwrap();
                let b = moments_from_distributions(&l, &out).unwrap();
                assert_abs_diff_eq!(a.rho, b.rho, epsilon = 1e-13);
                assert_abs_diff_eq!(a.mom[0], b.mom[0], epsilon = 1e-13);
                assert_abs_diff_eq!(a.mom[1], b.mom[1], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn nocm_fixed_point() {
        let l = lat();
        let m = MomentSet::equilibrium(1.1, [0.08, -0.05, 0.0]);
        let f = reconstruct_distributions(&l, &m);
        let cm = RelaxationConfig::central_moment(1e-4);
        let out = nocm_mrt_collide(&l, &f, m.rho, &[0.08, -0.05], &cm.rates, NocmEquilibrium::default())
            .unwrap();
        let back = moments_from_distributions(&l, &out).unwrap();
        assert!(back.max_abs_diff(&m) < 1e-14);
        assert!(reference_collision_equivalence(&l, &m, 0.6).unwrap() < 1e-14);
    }

    #[test]
    fn moment_collide_tau_one() {
        let m = neq_recompose(1.1, [0.11, -0.055, 0.033], &[0.01, -0.02, 0.03, 0.004, 0.005, -0.006]);
        let u = m.velocity();
        let out = moment_collide(3, &m, [0.0; 3], 1.0).unwrap();
        for (k, &(a, b)) in SYM2.iter().enumerate() {
            assert_abs_diff_eq!(out.stress[k] / out.rho, u[a] * u[b], epsilon = 1e-15);
        }
        let out = moment_collide(2, &m, [0.0; 3], 1.0).unwrap();
        assert_abs_diff_eq!(out.stress[1] / out.rho, u[0] * u[1], epsilon = 1e-15);
    }

    #[test]
    fn moment_collide_force_shifts_velocity() {
        let m = MomentSet::equilibrium(1.2, [0.1, 0.0, 0.0]);
        let out = moment_collide(3, &m, [1e-3, 2e-3, -1e-3], 0.7).unwrap();
        assert_eq!(out.rho, 1.2);
        let u = out.velocity();
        assert_abs_diff_eq!(u[0], 0.1 + 1e-3 / 2.4, epsilon = 1e-15);
        assert_abs_diff_eq!(u[1], 2e-3 / 2.4, epsilon = 1e-15);
        assert!(moment_collide(3, &MomentSet::equilibrium(1.0, [0.99, 0.0, 0.0]), [0.1, 0.0, 0.0], 0.7).is_err());
    }

    proptest! {
        #[test]
        fn moment_collide_preserves_mass_and_momentum(
            rho in 0.8f64..1.5,
            u in prop::array::uniform3(-0.2f64..0.2),
            sn in prop::array::uniform6(-0.05f64..0.05),
            tau in 0.51f64..1.8,
        ) {
            let m = neq_recompose(rho, [rho * u[0], rho * u[1], rho * u[2]], &sn);
            for dims in [2, 3] {
                let out = moment_collide(dims, &m, [0.0; 3], tau).unwrap();
                prop_assert_eq!(out.rho, m.rho);
                for a in 0..dims {
                    prop_assert!((out.mom[a] - m.mom[a]).abs() < 1e-15);
                }
            }
        }

        #[test]
        fn equivalence_with_central_moment_mrt(
            rho in 0.8f64..1.5,
            u in prop::array::uniform2(-0.14f64..0.14),
            sn in prop::array::uniform3(-0.05f64..0.05),
            nu in 1e-5f64..0.1,
        ) {
            let m = neq_recompose(rho, [rho * u[0], rho * u[1], 0.0], &[sn[0], sn[1], 0.0, sn[2], 0.0, 0.0]);
            let dev = reference_collision_equivalence(&lat(), &m, tau_from_nu(nu)).unwrap();
            prop_assert!(dev < 1e-10, "deviation {dev}");
        }
    }
}
