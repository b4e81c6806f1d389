//! Moment extraction, Hermite reconstruction and the equilibrium /
//! non-equilibrium split of the stored stress.
//!
//! `stress` always means ρS with the `cs² δ` part already removed, so an
//! equilibrium state has `stress = ρ u u`.

use crate::error::{LbmError, Result};
use crate::lattice::{sym2_index, sym2_slots, Lattice, CS2, SYM2, SYM3};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentSet {
    pub rho: f64,
    /// ρu. Unused trailing components are zero in 2D.
    pub mom: [f64; 3],
    /// ρS in `SYM2` order (xx, xy, xz, yy, yz, zz).
    pub stress: [f64; 6],
}

impl MomentSet {
    /// Density one, at rest.
    pub fn rest() -> Self {
        MomentSet {
            rho: 1.0,
            ..Default::default()
        }
    }

    /// Equilibrium moments for density `rho` and velocity `u`.
    pub fn equilibrium(rho: f64, u: [f64; 3]) -> Self {
        let mut stress = [0.0; 6];
        for (k, &(a, b)) in SYM2.iter().enumerate() {
            stress[k] = rho * u[a] * u[b];
        }
        MomentSet {
            rho,
            mom: [rho * u[0], rho * u[1], rho * u[2]],
            stress,
        }
    }

    pub fn velocity(&self) -> [f64; 3] {
        [
            self.mom[0] / self.rho,
            self.mom[1] / self.rho,
            self.mom[2] / self.rho,
        ]
    }

    /// Checks ρ > 0 and sub-lattice velocity.
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(LbmError::InvalidState(format!(
                "non-positive density {}",
                self.rho
            )));
        }
        let u = self.velocity();
        if u.iter().any(|v| !v.is_finite() || v.abs() >= 1.0) {
            return Err(LbmError::InvalidState(format!("velocity {u:?} out of range")));
        }
        if self.stress.iter().any(|s| !s.is_finite()) {
            return Err(LbmError::InvalidState("non-finite stress".into()));
        }
        Ok(())
    }

    /// Raw component vector (ρ, ρu…, ρS…) for a `dims`-dimensional lattice.
    pub fn to_components(&self, dims: usize) -> Vec<f64> {
        let mut out = vec![self.rho];
        out.extend_from_slice(&self.mom[..dims]);
        out.extend(sym2_slots(dims).iter().map(|&k| self.stress[k]));
        out
    }

    pub fn from_components(dims: usize, c: &[f64]) -> Self {
        let mut m = MomentSet {
            rho: c[0],
            ..Default::default()
        };
        m.mom[..dims].copy_from_slice(&c[1..1 + dims]);
        for (j, &k) in sym2_slots(dims).iter().enumerate() {
            m.stress[k] = c[1 + dims + j];
        }
        m
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &MomentSet) -> f64 {
        let mut d = (self.rho - other.rho).abs();
        for a in 0..3 {
            d = d.max((self.mom[a] - other.mom[a]).abs());
        }
        for k in 0..6 {
            d = d.max((self.stress[k] - other.stress[k]).abs());
        }
        d
    }
}

/// Number of stored components per node: 6 in 2D, 10 in 3D.
pub const fn component_count(dims: usize) -> usize {
    1 + dims + dims * (dims + 1) / 2
}

/// Extracts (ρ, ρu, ρS) from a population vector.
pub fn moments_from_distributions(lat: &Lattice, f: &[f64]) -> Result<MomentSet> {
    if f.len() != lat.q() {
        return Err(LbmError::InvalidInput(format!(
            "expected {} populations, got {}",
            lat.q(),
            f.len()
        )));
    }
    let mut m = MomentSet::default();
    let h2 = &lat.hermite().h2;
    for (i, &fi) in f.iter().enumerate() {
        let c = lat.c(i);
        m.rho += fi;
        for a in 0..3 {
            m.mom[a] += c[a] * fi;
        }
        for k in 0..6 {
            m.stress[k] += h2[i][k] * fi;
        }
    }
    if !(m.rho > 0.0) || !m.rho.is_finite() {
        return Err(LbmError::InvalidState(format!(
            "non-positive density {} from populations",
            m.rho
        )));
    }
    Ok(m)
}

/// Rebuilds populations from moments with the third-order Hermite closure.
pub fn reconstruct_distributions(lat: &Lattice, m: &MomentSet) -> Vec<f64> {
    let mut f = vec![0.0; lat.q()];
    HermiteClosure::new(lat).reconstruct(m, &mut f);
    f
}

/// Precomputed linear form of the reconstruction:
/// `f_i = ρ (w_i + Σ_k coef[i][k] · feature_k)` where the features are u,
/// S (stress / ρ) and the third-order closure terms T.
#[derive(Debug, Clone)]
pub struct HermiteClosure {
    q: usize,
    dims: usize,
    nfeat: usize,
    weights: Vec<f64>,
    coef: Vec<f64>,
    slots: &'static [usize],
    terms: Vec<usize>,
    c: Vec<[f64; 3]>,
    h2: Vec<[f64; 6]>,
}

impl HermiteClosure {
    pub fn new(lat: &Lattice) -> Self {
        let q = lat.q();
        let dims = lat.dims();
        let slots = sym2_slots(dims);
        let terms = lat.hermite().recon_terms.clone();
        let nfeat = dims + slots.len() + terms.len();
        let cs4 = CS2 * CS2;
        let cs6 = cs4 * CS2;
        let mut coef = vec![0.0; q * nfeat];
        for i in 0..q {
            let w = lat.weights()[i];
            let c = lat.c(i);
            let row = &mut coef[i * nfeat..(i + 1) * nfeat];
            for a in 0..dims {
                row[a] = w * c[a] / CS2;
            }
            for (j, &k) in slots.iter().enumerate() {
                let (a, b) = SYM2[k];
                let mult = if a == b { 1.0 } else { 2.0 };
                row[dims + j] = w * mult * lat.hermite().h2[i][k] / (2.0 * cs4);
            }
            for (j, &t) in terms.iter().enumerate() {
                row[dims + slots.len() + j] = w * lat.hermite().h3[i][t] / (2.0 * cs6);
            }
        }
        HermiteClosure {
            q,
            dims,
            nfeat,
            weights: lat.weights().to_vec(),
            coef,
            slots,
            terms,
            c: (0..q).map(|i| lat.c(i)).collect(),
            h2: lat.hermite().h2.clone(),
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Writes the closure features for `m` into `feat` (length `nfeat`).
    #[inline]
    fn features(&self, m: &MomentSet, feat: &mut [f64; 16]) {
        let inv = 1.0 / m.rho;
        let u = [m.mom[0] * inv, m.mom[1] * inv, m.mom[2] * inv];
        let mut s = [0.0; 6];
        for &k in self.slots {
            s[k] = m.stress[k] * inv;
        }
        feat[..self.dims].copy_from_slice(&u[..self.dims]);
        for (j, &k) in self.slots.iter().enumerate() {
            feat[self.dims + j] = s[k];
        }
        let off = self.dims + self.slots.len();
        for (j, &t) in self.terms.iter().enumerate() {
            let (a, b, g) = SYM3[t];
            feat[off + j] = s[sym2_index(a, b)] * u[g] + s[sym2_index(a, g)] * u[b]
                + s[sym2_index(b, g)] * u[a]
                - 2.0 * u[a] * u[b] * u[g];
        }
    }

    /// Reconstructs populations into `f` (length q).
    #[inline]
    pub fn reconstruct(&self, m: &MomentSet, f: &mut [f64]) {
        let mut feat = [0.0; 16];
        self.features(m, &mut feat);
        let feat = &feat[..self.nfeat];
        for (i, fi) in f.iter_mut().enumerate().take(self.q) {
            let row = &self.coef[i * self.nfeat..(i + 1) * self.nfeat];
            let mut acc = self.weights[i];
            for (c, x) in row.iter().zip(feat) {
                acc += c * x;
            }
            *fi = m.rho * acc;
        }
    }

    /// Single population `i` of the reconstruction.
    #[inline]
    pub fn population(&self, m: &MomentSet, i: usize) -> f64 {
        let mut feat = [0.0; 16];
        self.features(m, &mut feat);
        let row = &self.coef[i * self.nfeat..(i + 1) * self.nfeat];
        let mut acc = self.weights[i];
        for (c, x) in row.iter().zip(&feat[..self.nfeat]) {
            acc += c * x;
        }
        m.rho * acc
    }

    /// Moment extraction without validation, for hot loops.
    #[inline]
    pub fn extract(&self, f: &[f64]) -> MomentSet {
        let mut m = MomentSet::default();
        for (i, &fi) in f.iter().enumerate().take(self.q) {
            let c = self.c[i];
            m.rho += fi;
            for a in 0..self.dims {
                m.mom[a] += c[a] * fi;
            }
            for &k in self.slots {
                m.stress[k] += self.h2[i][k] * fi;
            }
        }
        m
    }
}

/// How the diagonal of the non-equilibrium stress is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeqConvention {
    /// `sneq = ρS − ρuu` for every component.
    #[default]
    Consistent,
    /// Diagonal taken from the raw second moment minus 1/3:
    /// `Σc_α²f − ρu_α² − 1/3`, which equals `sneq_αα + (ρ − 1)/3`.
    RawMinusThird,
}

/// Non-equilibrium stress ρS^neq in `SYM2` order.
pub type NeqStress = [f64; 6];

/// `sneq = stress − mom ⊗ mom / ρ`.
pub fn neq_decompose(m: &MomentSet) -> NeqStress {
    neq_decompose_with(m, NeqConvention::Consistent)
}

pub fn neq_recompose(rho: f64, mom: [f64; 3], sneq: &NeqStress) -> MomentSet {
    neq_recompose_with(rho, mom, sneq, NeqConvention::Consistent)
}

pub fn neq_decompose_with(m: &MomentSet, conv: NeqConvention) -> NeqStress {
    let mut out = [0.0; 6];
    for (k, &(a, b)) in SYM2.iter().enumerate() {
        out[k] = m.stress[k] - m.mom[a] * m.mom[b] / m.rho;
        if a == b && conv == NeqConvention::RawMinusThird {
            out[k] += (m.rho - 1.0) * CS2;
        }
    }
    out
}

pub fn neq_recompose_with(
    rho: f64,
    mom: [f64; 3],
    sneq: &NeqStress,
    conv: NeqConvention,
) -> MomentSet {
    let mut stress = [0.0; 6];
    for (k, &(a, b)) in SYM2.iter().enumerate() {
        let mut s = sneq[k];
        if a == b && conv == NeqConvention::RawMinusThird {
            s -= (rho - 1.0) * CS2;
        }
        stress[k] = s + mom[a] * mom[b] / rho;
    }
    MomentSet { rho, mom, stress }
}
