//! Discrete velocity sets, Hermite tensors and equilibrium distributions.
//!
//! Velocity ordering for D2Q9 is
//! ```text
//!   6   2   5
//!    \  |  /
//!   3 - 0 - 1
//!    /  |  \
//!   7   4   8
//! ```
//! The 3D sets list the rest direction first, then the six axis links,
//! the face diagonals and (D3Q27 only) the eight space diagonals.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;

use crate::error::{LbmError, Result};

/// Lattice sound speed squared.
pub const CS2: f64 = 1.0 / 3.0;

/// Symmetric rank-2 component order used everywhere: xx, xy, xz, yy, yz, zz.
pub const SYM2: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Symmetric rank-3 component order: xxx, xxy, xxz, xyy, xyz, xzz, yyy, yyz, yzz, zzz.
pub const SYM3: [(usize, usize, usize); 10] = [
    (0, 0, 0),
    (0, 0, 1),
    (0, 0, 2),
    (0, 1, 1),
    (0, 1, 2),
    (0, 2, 2),
    (1, 1, 1),
    (1, 1, 2),
    (1, 2, 2),
    (2, 2, 2),
];

/// Index of `xyz` inside [`SYM3`].
pub const SYM3_XYZ: usize = 4;

/// Position of the (α, β) component inside [`SYM2`].
pub const fn sym2_index(a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

/// Stress component slots that are live for a given dimension.
pub fn sym2_slots(dims: usize) -> &'static [usize] {
    if dims == 2 {
        &[0, 1, 3]
    } else {
        &[0, 1, 2, 3, 4, 5]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    D2Q9,
    D3Q19,
    D3Q27,
}

impl LatticeKind {
    pub const fn dims(self) -> usize {
        match self {
            LatticeKind::D2Q9 => 2,
            LatticeKind::D3Q19 | LatticeKind::D3Q27 => 3,
        }
    }

    pub const fn q(self) -> usize {
        match self {
            LatticeKind::D2Q9 => 9,
            LatticeKind::D3Q19 => 19,
            LatticeKind::D3Q27 => 27,
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LatticeKind::D2Q9 => "D2Q9",
            LatticeKind::D3Q19 => "D3Q19",
            LatticeKind::D3Q27 => "D3Q27",
        };
        f.write_str(s)
    }
}

impl FromStr for LatticeKind {
    type Err = LbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "D2Q9" => Ok(LatticeKind::D2Q9),
            "D3Q19" => Ok(LatticeKind::D3Q19),
            "D3Q27" => Ok(LatticeKind::D3Q27),
            other => Err(LbmError::InvalidInput(format!("unknown lattice `{other}`"))),
        }
    }
}

/// Which equilibrium polynomial to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumOrder {
    /// Standard second-order truncation.
    Second,
    /// Third-order Hermite equilibrium. Equals the moment reconstruction
    /// evaluated at an equilibrium state (`S = uu`) on D2Q9.
    Third,
    /// Fourth-order expansion, Hermite-consistent form. Conserves mass and
    /// momentum exactly on every supported lattice.
    Fourth,
    /// The fourth-order polynomial with the axis-wise cubic term
    /// `Σ_α c_α u_α³` and the `|c|²|u|⁴` quartic term. Kept for comparison;
    /// it does not conserve mass or momentum at O(|u|³).
    FourthAsPrinted,
}

/// Result of the exact (rational) isotropy checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsotropyReport {
    pub weights_sum_to_one: bool,
    pub first_order: bool,
    pub second_order: bool,
    pub fourth_order: bool,
    /// `Σ w c_x² c_y² c_z² = cs⁶`. Always true in 2D.
    pub xxyyzz_moment: bool,
    /// Whether the lattice can carry the `xyz` third-order Hermite mode.
    pub xyz_mode: bool,
}

/// Per-direction Hermite tensors.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    /// H^[2]_αβ(c_i) in [`SYM2`] order.
    pub h2: Vec<[f64; 6]>,
    /// H^[3]_αβγ(c_i) in [`SYM3`] order.
    pub h3: Vec<[f64; 10]>,
    /// Third-order components used by the moment reconstruction.
    pub recon_terms: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Lattice {
    kind: LatticeKind,
    velocities: Vec<[i32; 3]>,
    weights_exact: Vec<Rational64>,
    weights: Vec<f64>,
    opposite: Vec<usize>,
    isotropy: IsotropyReport,
    hermite: HermiteBasis,
}

impl Lattice {
    pub fn new(kind: LatticeKind) -> Self {
        let (velocities, weights_exact) = match kind {
            LatticeKind::D2Q9 => d2q9(),
            LatticeKind::D3Q19 => d3_set(false),
            LatticeKind::D3Q27 => d3_set(true),
        };
        let weights = weights_exact
            .iter()
            .map(|w| *w.numer() as f64 / *w.denom() as f64)
            .collect();
        let opposite = velocities
            .iter()
            .map(|c| {
                velocities
                    .iter()
                    .position(|d| d[0] == -c[0] && d[1] == -c[1] && d[2] == -c[2])
                    .expect("velocity sets are symmetric")
            })
            .collect();
        let isotropy = check_isotropy(kind.dims(), &velocities, &weights_exact);
        let hermite = hermite_basis(kind, &velocities);
        Lattice {
            kind,
            velocities,
            weights_exact,
            weights,
            opposite,
            isotropy,
            hermite,
        }
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dims(&self) -> usize {
        self.kind.dims()
    }

    pub fn q(&self) -> usize {
        self.velocities.len()
    }

    pub fn cs2(&self) -> f64 {
        CS2
    }

    pub fn velocities(&self) -> &[[i32; 3]] {
        &self.velocities
    }

    /// Velocity `i` as floating components (z = 0 in 2D).
    #[inline]
    pub fn c(&self, i: usize) -> [f64; 3] {
        let c = self.velocities[i];
        [c[0] as f64, c[1] as f64, c[2] as f64]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_exact(&self) -> &[Rational64] {
        &self.weights_exact
    }

    pub fn opposite(&self) -> &[usize] {
        &self.opposite
    }

    pub fn isotropy(&self) -> IsotropyReport {
        self.isotropy
    }

    pub fn hermite(&self) -> &HermiteBasis {
        &self.hermite
    }

    fn check_velocity(&self, u: &[f64]) -> Result<[f64; 3]> {
        if u.len() != self.dims() {
            return Err(LbmError::InvalidInput(format!(
                "velocity has {} components, lattice {} expects {}",
                u.len(),
                self.kind,
                self.dims()
            )));
        }
        let mut v = [0.0; 3];
        v[..u.len()].copy_from_slice(u);
        let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !speed.is_finite() || speed >= 1.0 {
            return Err(LbmError::InvalidState(format!(
                "velocity magnitude {speed} is not sub-lattice"
            )));
        }
        Ok(v)
    }

    /// Equilibrium distribution for density `rho` and velocity `u`.
    pub fn equilibrium(&self, rho: f64, u: &[f64], order: EquilibriumOrder) -> Result<Vec<f64>> {
        let u = self.check_velocity(u)?;
        let mut out = vec![0.0; self.q()];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = rho * self.weights[i] * eq_bracket(self.c(i), u, order);
        }
        Ok(out)
    }

    /// Analytic derivatives of the equilibrium with respect to ρ and each u_α.
    pub fn equilibrium_jacobians(
        &self,
        rho: f64,
        u: &[f64],
        order: EquilibriumOrder,
    ) -> Result<EquilibriumJacobian> {
        let u = self.check_velocity(u)?;
        let q = self.q();
        let dims = self.dims();
        let mut d_rho = vec![0.0; q];
        let mut d_u = vec![vec![0.0; q]; dims];
        for i in 0..q {
            let c = self.c(i);
            let w = self.weights[i];
            d_rho[i] = w * eq_bracket(c, u, order);
            for (beta, row) in d_u.iter_mut().enumerate() {
                row[i] = rho * w * eq_bracket_du(c, u, beta, order);
            }
        }
        Ok(EquilibriumJacobian { d_rho, d_u })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumJacobian {
    pub d_rho: Vec<f64>,
    /// `d_u[α][i] = ∂f^eq_i / ∂u_α`.
    pub d_u: Vec<Vec<f64>>,
}

#[inline]
fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// The bracket `f^eq_i / (ρ w_i)`.
fn eq_bracket(c: [f64; 3], u: [f64; 3], order: EquilibriumOrder) -> f64 {
    let cs4 = CS2 * CS2;
    let cs6 = cs4 * CS2;
    let cs8 = cs4 * cs4;
    let cu = dot3(c, u);
    let u2 = dot3(u, u);
    let second = 1.0 + cu / CS2 + cu * cu / (2.0 * cs4) - u2 / (2.0 * CS2);
    match order {
        EquilibriumOrder::Second => second,
        EquilibriumOrder::Third => second - cu * u2 / (2.0 * cs4) + cu.powi(3) / (6.0 * cs6),
        EquilibriumOrder::Fourth => {
            second - cu * u2 / (2.0 * cs4) + cu.powi(3) / (6.0 * cs6) + u2 * u2 / (8.0 * cs4)
                - cu * cu * u2 / (4.0 * cs6)
                + cu.powi(4) / (24.0 * cs8)
        }
        EquilibriumOrder::FourthAsPrinted => {
            let cu3 = c[0] * u[0].powi(3) + c[1] * u[1].powi(3) + c[2] * u[2].powi(3);
            let c2 = dot3(c, c);
            second - cu3 / (2.0 * cs4) + cu.powi(3) / (6.0 * cs6) + u2 * u2 / (8.0 * cs4)
                - c2 * u2 * u2 / (4.0 * cs6)
                + cu.powi(4) / (24.0 * cs8)
        }
    }
}

/// `∂/∂u_β` of [`eq_bracket`].
fn eq_bracket_du(c: [f64; 3], u: [f64; 3], beta: usize, order: EquilibriumOrder) -> f64 {
    let cs4 = CS2 * CS2;
    let cs6 = cs4 * CS2;
    let cs8 = cs4 * cs4;
    let cu = dot3(c, u);
    let u2 = dot3(u, u);
    let cb = c[beta];
    let ub = u[beta];
    let second = cb / CS2 + cu * cb / cs4 - ub / CS2;
    match order {
        EquilibriumOrder::Second => second,
        EquilibriumOrder::Third => {
            second - (cb * u2 + 2.0 * cu * ub) / (2.0 * cs4) + cu * cu * cb / (2.0 * cs6)
        }
        EquilibriumOrder::Fourth => {
            second - (cb * u2 + 2.0 * cu * ub) / (2.0 * cs4) + cu * cu * cb / (2.0 * cs6)
                + u2 * ub / (2.0 * cs4)
                - (cu * cb * u2 + cu * cu * ub) / (2.0 * cs6)
                + cu.powi(3) * cb / (6.0 * cs8)
        }
        EquilibriumOrder::FourthAsPrinted => {
            let c2 = dot3(c, c);
            second - 3.0 * cb * ub * ub / (2.0 * cs4) + cu * cu * cb / (2.0 * cs6)
                + u2 * ub / (2.0 * cs4)
                - c2 * u2 * ub / cs6
                + cu.powi(3) * cb / (6.0 * cs8)
        }
    }
}

fn d2q9() -> (Vec<[i32; 3]>, Vec<Rational64>) {
    let cx = [0, 1, 0, -1, 0, 1, -1, -1, 1];
    let cy = [0, 0, 1, 0, -1, 1, 1, -1, -1];
    let vel = (0..9).map(|i| [cx[i], cy[i], 0]).collect();
    let w = (0..9)
        .map(|i| match i {
            0 => Rational64::new(4, 9),
            1..=4 => Rational64::new(1, 9),
            _ => Rational64::new(1, 36),
        })
        .collect();
    (vel, w)
}

fn d3_set(with_corners: bool) -> (Vec<[i32; 3]>, Vec<Rational64>) {
    let mut vel = vec![[0, 0, 0]];
    for axis in 0..3 {
        for s in [1, -1] {
            let mut c = [0; 3];
            c[axis] = s;
            vel.push(c);
        }
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        for (sa, sb) in [(1, 1), (-1, -1), (1, -1), (-1, 1)] {
            let mut c = [0; 3];
            c[a] = sa;
            c[b] = sb;
            vel.push(c);
        }
    }
    if with_corners {
        for sx in [1, -1] {
            for sy in [1, -1] {
                for sz in [1, -1] {
                    vel.push([sx, sy, sz]);
                }
            }
        }
    }
    let weights = vel
        .iter()
        .map(|c| {
            let n = c.iter().filter(|v| **v != 0).count();
            match (with_corners, n) {
                (true, 0) => Rational64::new(8, 27),
                (true, 1) => Rational64::new(2, 27),
                (true, 2) => Rational64::new(1, 54),
                (true, _) => Rational64::new(1, 216),
                (false, 0) => Rational64::new(1, 3),
                (false, 1) => Rational64::new(1, 18),
                (false, _) => Rational64::new(1, 36),
            }
        })
        .collect();
    (vel, weights)
}

fn check_isotropy(dims: usize, vel: &[[i32; 3]], w: &[Rational64]) -> IsotropyReport {
    let cs2 = Rational64::new(1, 3);
    let zero = Rational64::from_integer(0);
    let one = Rational64::from_integer(1);
    let delta = |a: usize, b: usize| if a == b { one } else { zero };
    let moment = |idx: &[usize]| -> Rational64 {
        vel.iter().zip(w).fold(zero, |acc, (c, wi)| {
            let p = idx.iter().fold(1i64, |p, &a| p * c[a] as i64);
            acc + *wi * Rational64::from_integer(p)
        })
    };

    let weights_sum_to_one = w.iter().fold(zero, |a, b| a + *b) == one;
    let mut first_order = true;
    let mut second_order = true;
    let mut fourth_order = true;
    for a in 0..dims {
        first_order &= moment(&[a]) == zero;
        for b in 0..dims {
            second_order &= moment(&[a, b]) == cs2 * delta(a, b);
            for c in 0..dims {
                for d in 0..dims {
                    let iso = cs2
                        * cs2
                        * (delta(a, b) * delta(c, d)
                            + delta(a, c) * delta(b, d)
                            + delta(a, d) * delta(b, c));
                    fourth_order &= moment(&[a, b, c, d]) == iso;
                }
            }
        }
    }
    let xxyyzz_moment = dims == 2 || moment(&[0, 0, 1, 1, 2, 2]) == cs2 * cs2 * cs2;
    let xyz_mode = dims == 2 || moment(&[0, 0, 1, 1, 2, 2]) != zero;
    IsotropyReport {
        weights_sum_to_one,
        first_order,
        second_order,
        fourth_order,
        xxyyzz_moment,
        xyz_mode,
    }
}

fn hermite_basis(kind: LatticeKind, vel: &[[i32; 3]]) -> HermiteBasis {
    let dims = kind.dims();
    let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut h2 = Vec::with_capacity(vel.len());
    let mut h3 = Vec::with_capacity(vel.len());
    for v in vel {
        let c = [v[0] as f64, v[1] as f64, v[2] as f64];
        let mut t2 = [0.0; 6];
        for (k, &(a, b)) in SYM2.iter().enumerate() {
            if b < dims {
                t2[k] = c[a] * c[b] - CS2 * dl(a, b);
            }
        }
        let mut t3 = [0.0; 10];
        for (k, &(a, b, g)) in SYM3.iter().enumerate() {
            if g >= dims {
                continue;
            }
            t3[k] = c[a] * c[b] * c[g]
                - CS2 * (c[g] * dl(a, b) + c[b] * dl(a, g) + c[a] * dl(b, g));
        }
        h2.push(t2);
        h3.push(t3);
    }
    // xxx / yyy are identically zero on these lattices; the 2D set keeps them
    // so the closure spans the full 2D third-order basis.
    let recon_terms = match kind {
        LatticeKind::D2Q9 => vec![0, 1, 3, 6],
        LatticeKind::D3Q27 => vec![1, 3, 2, 5, 8, 7, SYM3_XYZ],
        LatticeKind::D3Q19 => vec![1, 3, 2, 5, 8, 7],
    };
    HermiteBasis {
        h2,
        h3,
        recon_terms,
    }
}
