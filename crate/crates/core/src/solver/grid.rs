//! Tiled structure-of-arrays moment storage.

use rayon::prelude::*;

use crate::error::{LbmError, Result};
use crate::moments::{component_count, neq_decompose, neq_recompose, MomentSet};
use crate::quant::{PackedMomentBuffer, QuantSpec};

/// Tile edge length along every active axis.
pub const TILE: usize = 8;

/// Maps logical node coordinates to storage slots. Nodes are grouped in
/// `TILE^D` tiles; dimensions are padded up to a tile multiple and padding
/// slots are never read or written by the solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TiledLayout {
    dims: [usize; 3],
    space_dims: usize,
    tiles: [usize; 3],
    tile_edge: [usize; 3],
    /// log2 of `tile_edge`.
    shift: [u32; 3],
}

impl TiledLayout {
    /// `dims[2] == 1` selects the 2D layout.
    pub fn new(dims: [usize; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(LbmError::InvalidInput(format!("grid dims {dims:?} must be positive")));
        }
        let space_dims = if dims[2] == 1 { 2 } else { 3 };
        let tile_edge = [TILE, TILE, if space_dims == 3 { TILE } else { 1 }];
        let tiles = [
            dims[0].div_ceil(tile_edge[0]),
            dims[1].div_ceil(tile_edge[1]),
            dims[2].div_ceil(tile_edge[2]),
        ];
        Ok(TiledLayout {
            dims,
            space_dims,
            tiles,
            tile_edge,
            shift: tile_edge.map(|e| e.trailing_zeros()),
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn space_dims(&self) -> usize {
        self.space_dims
    }

    pub fn tile_nodes(&self) -> usize {
        self.tile_edge.iter().product()
    }

    pub fn tile_count(&self) -> usize {
        self.tiles.iter().product()
    }

    /// Storage slots including padding.
    pub fn slots(&self) -> usize {
        self.tile_count() * self.tile_nodes()
    }

    /// Logical nodes.
    pub fn nodes(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_padded(&self) -> bool {
        self.slots() != self.nodes()
    }

    #[inline]
    pub fn slot(&self, p: [usize; 3]) -> usize {
        let sh = self.shift;
        let t = [p[0] >> sh[0], p[1] >> sh[1], p[2] >> sh[2]];
        let l = [
            p[0] - (t[0] << sh[0]),
            p[1] - (t[1] << sh[1]),
            p[2] - (t[2] << sh[2]),
        ];
        let tile = (t[2] * self.tiles[1] + t[1]) * self.tiles[0] + t[0];
        let local = (((l[2] << sh[1]) + l[1]) << sh[0]) + l[0];
        (tile << (sh[0] + sh[1] + sh[2])) + local
    }

    /// Coordinates of a slot, `None` for padding.
    #[inline]
    pub fn coords(&self, slot: usize) -> Option<[usize; 3]> {
        let e = self.tile_edge;
        let tn = self.tile_nodes();
        let (tile, local) = (slot / tn, slot % tn);
        let t = [
            tile % self.tiles[0],
            (tile / self.tiles[0]) % self.tiles[1],
            tile / (self.tiles[0] * self.tiles[1]),
        ];
        let l = [local % e[0], (local / e[0]) % e[1], local / (e[0] * e[1])];
        let p = [t[0] * e[0] + l[0], t[1] * e[1] + l[1], t[2] * e[2] + l[2]];
        (p[0] < self.dims[0] && p[1] < self.dims[1] && p[2] < self.dims[2]).then_some(p)
    }

    /// Row-major logical index, x fastest.
    #[inline]
    pub fn linear(&self, p: [usize; 3]) -> usize {
        (p[2] * self.dims[1] + p[1]) * self.dims[0] + p[0]
    }

    #[inline]
    pub fn from_linear(&self, i: usize) -> [usize; 3] {
        [
            i % self.dims[0],
            (i / self.dims[0]) % self.dims[1],
            i / (self.dims[0] * self.dims[1]),
        ]
    }
}

/// Storage precision of the authoritative moment state.
#[derive(Debug, Clone, PartialEq)]
pub enum Precision {
    F64,
    F32,
    Packed(QuantSpec),
}

impl Precision {
    pub fn label(&self) -> String {
        match self {
            Precision::F64 => "f64".into(),
            Precision::F32 => "f32".into(),
            Precision::Packed(spec) => {
                let b = spec.bits();
                format!("packed {}/{}", b[0], b[b.len() - 1])
            }
        }
    }
}

/// Authoritative per-node moments. Full-precision variants hold
/// (ρ, ρu, ρS) component planes; the packed variant holds (ρ, ρu, sneq)
/// codes node by node.
#[derive(Debug, Clone)]
pub enum StateStore {
    F64(Vec<f64>),
    F32(Vec<f32>),
    Packed(PackedMomentBuffer),
}

/// Moment grid: layout plus authoritative store.
#[derive(Debug, Clone)]
pub struct SimGrid {
    layout: TiledLayout,
    components: usize,
    store: StateStore,
    stored_samples: u64,
}

impl SimGrid {
    pub fn new(dims: [usize; 3], precision: &Precision) -> Result<Self> {
        let layout = TiledLayout::new(dims)?;
        let d = layout.space_dims();
        let components = component_count(d);
        let slots = layout.slots();
        let store = match precision {
            Precision::F64 => StateStore::F64(vec![0.0; components * slots]),
            Precision::F32 => StateStore::F32(vec![0.0; components * slots]),
            Precision::Packed(spec) => {
                if spec.dims != d {
                    return Err(LbmError::InvalidInput(format!(
                        "quantization spec is {}D but grid is {d}D",
                        spec.dims
                    )));
                }
                StateStore::Packed(PackedMomentBuffer::new(spec.clone(), slots))
            }
        };
        let mut grid = SimGrid {
            layout,
            components,
            store,
            stored_samples: 0,
        };
        let rest = vec![MomentSet::rest(); slots];
        grid.store_all(&rest, 0)?;
        grid.stored_samples = 0;
        Ok(grid)
    }

    pub fn layout(&self) -> &TiledLayout {
        &self.layout
    }

    pub fn dims(&self) -> [usize; 3] {
        self.layout.dims()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn store(&self) -> &StateStore {
        &self.store
    }

    /// Bytes of authoritative state per node.
    pub fn bytes_per_node(&self) -> usize {
        match &self.store {
            StateStore::F64(_) => 8 * self.components,
            StateStore::F32(_) => 4 * self.components,
            StateStore::Packed(b) => b.spec().bytes_per_node(),
        }
    }

    /// Node values written per component since creation, initial rest fill excluded.
    pub fn stored_samples(&self) -> u64 {
        self.stored_samples
    }

    /// Per-component saturation counts (zero for full precision).
    pub fn saturations(&self) -> Vec<u64> {
        match &self.store {
            StateStore::Packed(b) => b.saturations().to_vec(),
            _ => vec![0; self.components],
        }
    }

    #[inline]
    pub fn load_slot(&self, slot: usize) -> MomentSet {
        let d = self.layout.space_dims();
        let n = self.layout.slots();
        let mut c = [0.0; 10];
        match &self.store {
            StateStore::F64(v) => {
                for (k, x) in c.iter_mut().enumerate().take(self.components) {
                    *x = v[k * n + slot];
                }
            }
            StateStore::F32(v) => {
                for (k, x) in c.iter_mut().enumerate().take(self.components) {
                    *x = v[k * n + slot] as f64;
                }
            }
            StateStore::Packed(b) => {
                b.load(slot, &mut c[..self.components]);
                let m = MomentSet::from_components(d, &c[..self.components]);
                return neq_recompose(m.rho, m.mom, &m.stress);
            }
        }
        MomentSet::from_components(d, &c[..self.components])
    }

    pub fn get(&self, p: [usize; 3]) -> MomentSet {
        self.load_slot(self.layout.slot(p))
    }

    /// Loads every slot (padding included) into `out`.
    pub fn load_all(&self, out: &mut [MomentSet]) {
        out.par_iter_mut()
            .enumerate()
            .for_each(|(s, m)| *m = self.load_slot(s));
    }

    /// Writes every slot from `src`; `step` keys the dither.
    pub fn store_all(&mut self, src: &[MomentSet], step: u64) -> Result<()> {
        let d = self.layout.space_dims();
        let n = self.layout.slots();
        let nc = self.components;
        match &mut self.store {
            StateStore::F64(v) => {
                v.par_chunks_mut(n).enumerate().for_each(|(k, plane)| {
                    for (s, x) in plane.iter_mut().enumerate() {
                        *x = component(&src[s], d, k);
                    }
                });
            }
            StateStore::F32(v) => {
                v.par_chunks_mut(n).enumerate().for_each(|(k, plane)| {
                    for (s, x) in plane.iter_mut().enumerate() {
                        *x = component(&src[s], d, k) as f32;
                    }
                });
            }
            StateStore::Packed(b) => {
                let spec = b.spec().clone();
                let wpn = spec.words_per_node();
                let counts = b
                    .words_mut()
                    .par_chunks_mut(wpn)
                    .enumerate()
                    .try_fold(
                        || vec![0u64; nc],
                        |mut acc, (s, words)| -> Result<Vec<u64>> {
                            let m = &src[s];
                            let mut vals = [0.0; 10];
                            vals[0] = m.rho;
                            vals[1..1 + d].copy_from_slice(&m.mom[..d]);
                            let sn = neq_decompose(m);
                            for (j, &k) in crate::lattice::sym2_slots(d).iter().enumerate() {
                                vals[1 + d + j] = sn[k];
                            }
                            let sat = spec.encode_node(&vals[..nc], step, s as u64, words)?;
                            for (k, a) in acc.iter_mut().enumerate() {
                                *a += ((sat >> k) & 1) as u64;
                            }
                            Ok(acc)
                        },
                    )
                    .try_reduce(
                        || vec![0u64; nc],
                        |mut a, b| {
                            for (x, y) in a.iter_mut().zip(b) {
                                *x += y;
                            }
                            Ok(a)
                        },
                    )?;
                b.add_saturations(&counts);
            }
        }
        self.stored_samples += self.layout.nodes() as u64;
        Ok(())
    }

    /// Moments of every logical node in row-major order.
    pub fn moments(&self) -> Vec<MomentSet> {
        (0..self.layout.nodes())
            .map(|i| self.get(self.layout.from_linear(i)))
            .collect()
    }
}

#[inline]
fn component(m: &MomentSet, dims: usize, k: usize) -> f64 {
    if k == 0 {
        m.rho
    } else if k <= dims {
        m.mom[k - 1]
    } else {
        m.stress[crate::lattice::sym2_slots(dims)[k - 1 - dims]]
    }
}
