//! Obstacle scene shared by the fused kernel and the split correction pass.

use rayon::prelude::*;

use crate::geometry::{
    first_hit, link_intersect, voxelize_surface, Hit, SolidState, SurfaceMask, TriangleMesh, Vec3,
};

/// One rigid obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub mesh: TriangleMesh,
    pub state: SolidState,
}

/// All obstacles merged into one mesh, with the owning obstacle per triangle.
#[derive(Debug, Clone)]
pub struct SolidScene {
    mesh: TriangleMesh,
    owner: Vec<u32>,
    states: Vec<SolidState>,
    mask: SurfaceMask,
}

impl SolidScene {
    pub fn new(obstacles: &[Obstacle], dims: [usize; 3]) -> Self {
        let mut mesh = TriangleMesh::default();
        let mut owner = Vec::new();
        for (k, o) in obstacles.iter().enumerate() {
            mesh = mesh.merged(&o.mesh);
            owner.extend(std::iter::repeat_n(k as u32, o.mesh.len()));
        }
        let mask = voxelize_surface(&mesh, dims);
        SolidScene {
            mesh,
            owner,
            states: obstacles.iter().map(|o| o.state).collect(),
            mask,
        }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn mask(&self) -> &SurfaceMask {
        &self.mask
    }

    pub fn obstacle_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_of(&self, tri: usize) -> (usize, &SolidState) {
        let k = self.owner[tri] as usize;
        (k, &self.states[k])
    }

    pub fn center(&self, obstacle: usize) -> Vec3 {
        self.states[obstacle].center
    }

    /// Earliest triangle cut by the link from `x` along `d`, or `None` when
    /// `x` is unmarked.
    #[inline]
    pub fn link_hit(&self, x: [usize; 3], d: Vec3, scratch: &mut Vec<u32>) -> Option<Hit> {
        if !self.mask.is_marked(x) {
            return None;
        }
        self.mask.candidates(x, scratch);
        self.first_hit_in(scratch, x, d)
    }

    /// Like [`link_hit`](Self::link_hit) with a candidate list already gathered.
    #[inline]
    pub fn first_hit_in(&self, candidates: &[u32], x: [usize; 3], d: Vec3) -> Option<Hit> {
        let xf = [x[0] as f64, x[1] as f64, x[2] as f64];
        first_hit(&self.mesh, candidates.iter().map(|&t| t as usize), xf, d)
    }

    /// Links `(node, direction, hit)` owned by triangle `tri`: those whose
    /// earliest hit is `tri`. Nodes come from the triangle's bounding box
    /// grown by one cell; unmarked nodes are skipped.
    pub fn triangle_links(&self, tri: usize, dirs: &[[f64; 3]]) -> Vec<([usize; 3], usize, Hit)> {
        let dims = self.mask.dims;
        let t = self.mesh.triangle(tri);
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            let mn = t[0][a].min(t[1][a]).min(t[2][a]);
            let mx = t[0][a].max(t[1][a]).max(t[2][a]);
            let l = (mn - 1.0).ceil().max(0.0);
            let h = (mx + 1.0).floor().min(dims[a] as f64 - 1.0);
            if l > h {
                return Vec::new();
            }
            lo[a] = l as usize;
            hi[a] = h as usize;
        }
        let mut out = Vec::new();
        let mut scratch = Vec::new();
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    let p = [x, y, z];
                    if !self.mask.is_marked(p) {
                        continue;
                    }
                    let xf = [x as f64, y as f64, z as f64];
                    let mut gathered = false;
                    for (i, d) in dirs.iter().enumerate() {
                        if link_intersect(xf, *d, &t).is_none() {
                            continue;
                        }
                        if !gathered {
                            self.mask.candidates(p, &mut scratch);
                            gathered = true;
                        }
                        if let Some(h) = self.first_hit_in(&scratch, p, *d) {
                            if h.tri == tri {
                                out.push((p, i, h));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// All owned links, triangle by triangle in index order.
    pub fn all_links(&self, dirs: &[[f64; 3]], parallel: bool) -> Vec<([usize; 3], usize, Hit)> {
        if parallel {
            (0..self.mesh.len())
                .into_par_iter()
                .flat_map_iter(|t| self.triangle_links(t, dirs))
                .collect()
        } else {
            (0..self.mesh.len())
                .flat_map(|t| self.triangle_links(t, dirs))
                .collect()
        }
    }
}
