//! Snapshot files and greyscale vorticity images.

use std::io::{Read, Write};

use crate::error::{LbmError, Result};
use crate::moments::{component_count, MomentSet};
use crate::quant::{read_u32, read_u64};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"MLBMSNP1";

/// Storage precision recorded in a snapshot header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum PrecisionFlag {
    F64 = 0,
    F32 = 1,
    Packed = 2,
}

impl PrecisionFlag {
    fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(PrecisionFlag::F64),
            1 => Ok(PrecisionFlag::F32),
            2 => Ok(PrecisionFlag::Packed),
            _ => Err(LbmError::Format(format!("unknown precision flag {v}"))),
        }
    }
}

/// Node-major moment components `(ρ, ρu…, ρS…)` as 32-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub dims: [u32; 3],
    pub components: u32,
    pub precision: PrecisionFlag,
    pub data: Vec<f32>,
}

impl Snapshot {
    /// `moments` in row-major node order.
    pub fn from_moments(step: u64, dims: [usize; 3], precision: PrecisionFlag, moments: &[MomentSet]) -> Self {
        let space = if dims[2] == 1 { 2 } else { 3 };
        let c = component_count(space);
        let mut data = Vec::with_capacity(moments.len() * c);
        for m in moments {
            data.extend(m.to_components(space).into_iter().map(|v| v as f32));
        }
        Snapshot {
            step,
            dims: [dims[0] as u32, dims[1] as u32, dims[2] as u32],
            components: c as u32,
            precision,
            data,
        }
    }

    pub fn nodes(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }

    pub fn space_dims(&self) -> usize {
        if self.dims[2] == 1 {
            2
        } else {
            3
        }
    }

    pub fn moment(&self, node: usize) -> MomentSet {
        let c = self.components as usize;
        let vals: Vec<f64> = self.data[node * c..(node + 1) * c].iter().map(|&v| v as f64).collect();
        MomentSet::from_components(self.space_dims(), &vals)
    }

    pub fn velocity(&self, node: usize) -> [f64; 3] {
        self.moment(node).velocity()
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&self.step.to_le_bytes())?;
        for d in self.dims {
            w.write_all(&d.to_le_bytes())?;
        }
        w.write_all(&self.components.to_le_bytes())?;
        w.write_all(&[self.precision as u8])?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(LbmError::Format("not a snapshot file".into()));
        }
        let step = read_u64(&mut r)?;
        let dims = [read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?];
        let components = read_u32(&mut r)?;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let precision = PrecisionFlag::from_u8(flag[0])?;
        let space = if dims[2] == 1 { 2 } else { 3 };
        if components as usize != component_count(space) {
            return Err(LbmError::Format(format!(
                "{components} components does not match {space}D dims"
            )));
        }
        let n = dims.iter().map(|&d| d as usize).product::<usize>() * components as usize;
        let mut bytes = vec![0u8; n * 4];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok(Snapshot {
            step,
            dims,
            components,
            precision,
            data,
        })
    }
}

/// z-vorticity `∂u_y/∂x − ∂u_x/∂y` by periodic central differences on an
/// `nx × ny` velocity field in row-major order.
pub fn vorticity_2d(nx: usize, ny: usize, u: &[[f64; 3]]) -> Vec<f64> {
    let at = |x: usize, y: usize| u[y * nx + x];
    let mut out = vec![0.0; nx * ny];
    for y in 0..ny {
        for x in 0..nx {
            let xp = (x + 1) % nx;
            let xm = (x + nx - 1) % nx;
            let yp = (y + 1) % ny;
            let ym = (y + ny - 1) % ny;
            out[y * nx + x] = 0.5 * (at(xp, y)[1] - at(xm, y)[1]) - 0.5 * (at(x, yp)[0] - at(x, ym)[0]);
        }
    }
    out
}

/// Binary 8-bit PGM, linear map of `[lo, hi]` onto `[0, 255]` with
/// clamping. Row 0 of the image is the top (largest y).
pub fn write_pgm<W: Write>(mut w: W, nx: usize, ny: usize, values: &[f64], lo: f64, hi: f64) -> Result<()> {
    if values.len() != nx * ny {
        return Err(LbmError::InvalidInput(format!(
            "{} values for a {nx}x{ny} image",
            values.len()
        )));
    }
    if !(hi > lo) {
        return Err(LbmError::InvalidInput(format!("empty PGM range [{lo}, {hi}]")));
    }
    write!(w, "P5\n{nx} {ny}\n255\n")?;
    let mut row = vec![0u8; nx];
    for y in (0..ny).rev() {
        for x in 0..nx {
            let t = ((values[y * nx + x] - lo) / (hi - lo)).clamp(0.0, 1.0);
            row[x] = (t * 255.0).round() as u8;
        }
        w.write_all(&row)?;
    }
    Ok(())
}

/// Reads a binary PGM written by [`write_pgm`]; returns `(nx, ny, pixels)`
/// with pixels in file order.
pub fn read_pgm<R: Read>(mut r: R) -> Result<(usize, usize, Vec<u8>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(LbmError::Format("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(LbmError::Format("expected an 8-bit P5 image".into()));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| LbmError::Format(format!("bad PGM size `{s}`")))
    };
    let (nx, ny) = (parse(&fields[1])?, parse(&fields[2])?);
    let pixels = bytes.get(pos..pos + nx * ny).ok_or_else(|| LbmError::Format("truncated PGM data".into()))?;
    Ok((nx, ny, pixels.to_vec()))
}
