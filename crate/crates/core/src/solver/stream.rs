//! Pull streaming with domain boundary rules.

use std::fmt;
use std::str::FromStr;

use crate::error::{LbmError, Result};
use crate::lattice::Lattice;
use crate::moments::{HermiteClosure, MomentSet};

use super::grid::TiledLayout;

/// Rule applied to links that leave the domain through one face.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FaceBc {
    #[default]
    Periodic,
    /// Equilibrium at unit density and the given velocity.
    Inflow([f64; 3]),
    /// Zero-gradient copy of the nearest interior node.
    Outflow,
    /// Halfway bounce-back.
    Wall,
}

impl fmt::Display for FaceBc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaceBc::Periodic => write!(f, "periodic"),
            FaceBc::Inflow(u) => write!(f, "inflow({}, {}, {})", u[0], u[1], u[2]),
            FaceBc::Outflow => write!(f, "outflow"),
            FaceBc::Wall => write!(f, "wall"),
        }
    }
}

impl FromStr for FaceBc {
    type Err = LbmError;

    /// `periodic`, `outflow`, `wall` or `inflow:ux,uy[,uz]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "periodic" => return Ok(FaceBc::Periodic),
            "outflow" => return Ok(FaceBc::Outflow),
            "wall" => return Ok(FaceBc::Wall),
            _ => {}
        }
        let rest = s
            .strip_prefix("inflow:")
            .ok_or_else(|| LbmError::InvalidInput(format!("unknown boundary `{s}`")))?;
        let vals: Vec<f64> = rest
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| LbmError::InvalidInput(format!("bad inflow velocity in `{s}`")))?;
        if vals.len() < 2 || vals.len() > 3 {
            return Err(LbmError::InvalidInput(format!("inflow needs 2 or 3 components in `{s}`")));
        }
        let mut u = [0.0; 3];
        u[..vals.len()].copy_from_slice(&vals);
        Ok(FaceBc::Inflow(u))
    }
}

/// Boundary rule per face, indexed `[axis][low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Boundaries {
    pub faces: [[FaceBc; 2]; 3],
}

impl Boundaries {
    pub fn periodic() -> Self {
        Self::default()
    }

    pub fn validate(&self, space_dims: usize) -> Result<()> {
        for a in 0..space_dims {
            let [lo, hi] = self.faces[a];
            if (lo == FaceBc::Periodic) != (hi == FaceBc::Periodic) {
                return Err(LbmError::InvalidInput(format!(
                    "axis {a}: periodic boundaries must be set on both faces"
                )));
            }
            for bc in [lo, hi] {
                if let FaceBc::Inflow(u) = bc {
                    let speed = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
                    if !(speed < 0.9) {
                        return Err(LbmError::InvalidInput(format!("inflow speed {speed} too large")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_periodic(&self, space_dims: usize) -> bool {
        self.faces[..space_dims]
            .iter()
            .all(|f| f[0] == FaceBc::Periodic && f[1] == FaceBc::Periodic)
    }
}

/// Everything the pull kernel needs to fetch `f_i` arriving at a node.
pub(crate) struct Streamer<'a> {
    pub layout: &'a TiledLayout,
    pub q: usize,
    pub dims: usize,
    pub c: &'a [[i32; 3]],
    pub opposite: &'a [usize],
    pub faces: &'a [[FaceBc; 2]; 3],
    /// Inflow populations per `[axis][face]`, empty when unused.
    pub inflow: &'a [[Vec<f64>; 2]; 3],
    pub post_f: &'a [f64],
}

impl Streamer<'_> {
    /// Post-collision population `i` arriving at `x` from `x − c_i`.
    #[inline]
    pub fn upstream_population(&self, x: [usize; 3], i: usize) -> f64 {
        let c = self.c[i];
        let n = self.layout.dims();
        let mut y = x;
        let mut inflow: Option<(usize, usize)> = None;
        let mut wall = false;
        for a in 0..self.dims {
            let ya = x[a] as isize - c[a] as isize;
            if ya >= 0 && (ya as usize) < n[a] {
                y[a] = ya as usize;
                continue;
            }
            let face = usize::from(ya >= 0);
            match self.faces[a][face] {
                FaceBc::Periodic => y[a] = ya.rem_euclid(n[a] as isize) as usize,
                FaceBc::Outflow => y[a] = x[a],
                FaceBc::Wall => wall = true,
                FaceBc::Inflow(_) => {
                    if inflow.is_none() {
                        inflow = Some((a, face));
                    }
                }
            }
        }
        if wall {
            return self.post_f[self.layout.slot(x) * self.q + self.opposite[i]];
        }
        if let Some((a, face)) = inflow {
            return self.inflow[a][face][i];
        }
        self.post_f[self.layout.slot(y) * self.q + i]
    }
}

/// Inflow populations for every inflow face.
pub(crate) fn inflow_tables(lat: &Lattice, closure: &HermiteClosure, b: &Boundaries) -> [[Vec<f64>; 2]; 3] {
    let mut out: [[Vec<f64>; 2]; 3] = Default::default();
    for a in 0..lat.dims() {
        for face in 0..2 {
            if let FaceBc::Inflow(u) = b.faces[a][face] {
                let mut f = vec![0.0; lat.q()];
                closure.reconstruct(&MomentSet::equilibrium(1.0, u), &mut f);
                out[a][face] = f;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_face_rules() {
        assert_eq!("wall".parse::<FaceBc>().unwrap(), FaceBc::Wall);
        assert_eq!(
            "inflow:0.05, 0".parse::<FaceBc>().unwrap(),
            FaceBc::Inflow([0.05, 0.0, 0.0])
        );
        assert!("inflow:1".parse::<FaceBc>().is_err());
        assert!("slip".parse::<FaceBc>().is_err());
        let bc = FaceBc::Inflow([0.1, 0.0, 0.0]);
        assert_eq!(bc.to_string().replace("inflow(", "inflow:").replace(')', "").parse::<FaceBc>().unwrap(), bc);
    }

    #[test]
    fn periodic_pairs_enforced() {
        let mut b = Boundaries::periodic();
        assert!(b.validate(2).is_ok());
        b.faces[0][0] = FaceBc::Wall;
        assert!(b.validate(2).is_err());
        b.faces[0][1] = FaceBc::Outflow;
        assert!(b.validate(2).is_ok());
        assert!(!b.is_periodic(2));
        b.faces[0][0] = FaceBc::Inflow([0.95, 0.0, 0.0]);
        assert!(b.validate(2).is_err());
    }
}
