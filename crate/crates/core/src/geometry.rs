//! Triangle meshes, lattice-link intersection, surface voxelization and the
//! boundary moment / momentum-exchange rules used by the solid correction.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{LbmError, Result};
use crate::lattice::SYM2;
use crate::moments::MomentSet;

pub type Vec3 = [f64; 3];

/// Barycentric / parametric tolerance of the ray–triangle test.
pub const HIT_EPS: f64 = 1e-9;
/// Minimum accepted triangle area.
pub const AREA_EPS: f64 = 1e-12;

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Row-major 3×4 affine map `p ↦ A p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine(pub [f64; 12]);

impl Affine {
    pub const IDENTITY: Affine = Affine([
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0,
    ]);

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let arr: [f64; 12] = v.try_into().map_err(|_| {
            LbmError::InvalidInput(format!("affine transform needs 12 numbers, got {}", v.len()))
        })?;
        Ok(Affine(arr))
    }

    pub fn scale_translate(s: f64, t: Vec3) -> Self {
        Affine([s, 0.0, 0.0, t[0], 0.0, s, 0.0, t[1], 0.0, 0.0, s, t[2]])
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        let m = &self.0;
        [
            m[0] * p[0] + m[1] * p[1] + m[2] * p[2] + m[3],
            m[4] * p[0] + m[5] * p[1] + m[6] * p[2] + m[7],
            m[8] * p[0] + m[9] * p[1] + m[10] * p[2] + m[11],
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Validates indices and rejects degenerate faces.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = TriangleMesh { vertices, faces };
        for (fi, f) in mesh.faces.iter().enumerate() {
            if f.iter().any(|&v| v >= mesh.vertices.len()) {
                return Err(LbmError::InvalidInput(format!(
                    "face {fi} references a missing vertex"
                )));
            }
            let area = mesh.area(fi);
            if !(area > AREA_EPS) {
                return Err(LbmError::InvalidInput(format!(
                    "face {fi} is degenerate (area {area:e})"
                )));
            }
        }
        Ok(mesh)
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    #[inline]
    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let f = self.faces[i];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    pub fn area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle(i);
        let n = cross(sub(b, a), sub(c, a));
        0.5 * dot(n, n).sqrt()
    }

    pub fn transformed(&self, t: &Affine) -> Result<Self> {
        TriangleMesh::new(
            self.vertices.iter().map(|v| t.apply(*v)).collect(),
            self.faces.clone(),
        )
    }

    /// Concatenates two meshes.
    pub fn merged(&self, other: &TriangleMesh) -> TriangleMesh {
        let off = self.vertices.len();
        let mut out = self.clone();
        out.vertices.extend_from_slice(&other.vertices);
        out.faces
            .extend(other.faces.iter().map(|f| [f[0] + off, f[1] + off, f[2] + off]));
        out
    }

    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {:?} {:?} {:?}", v[0], v[1], v[2])?;
        }
        for f in &self.faces {
            writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        Ok(())
    }
}

/// Loads a Wavefront OBJ (vertex and face records) and applies `transform`.
pub fn load_mesh(path: &Path, transform: Option<&Affine>) -> Result<TriangleMesh> {
    let file = File::open(path)?;
    let mesh = parse_obj(BufReader::new(file), &path.display().to_string())?;
    match transform {
        Some(t) => mesh.transformed(t),
        None => Ok(mesh),
    }
}

/// Parses OBJ text. Polygons are fan-triangulated; texture/normal indices and
/// non-geometry records are ignored.
pub fn parse_obj<R: BufRead>(reader: R, name: &str) -> Result<TriangleMesh> {
    let err = |line: usize, msg: String| LbmError::Parse {
        path: name.to_string(),
        line,
        msg,
    };
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = ln + 1;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let nums: Vec<f64> = toks
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| err(lineno, format!("bad vertex coordinate: {e}")))?;
                if nums.len() < 3 || nums.len() > 4 {
                    return Err(err(lineno, format!("vertex needs 3 coordinates, got {}", nums.len())));
                }
                if nums.iter().any(|v| !v.is_finite()) {
                    return Err(err(lineno, "non-finite vertex coordinate".into()));
                }
                vertices.push([nums[0], nums[1], nums[2]]);
            }
            Some("f") => {
                let mut idx = Vec::new();
                for t in toks {
                    let first = t.split('/').next().unwrap_or("");
                    let raw: i64 = first
                        .parse()
                        .map_err(|_| err(lineno, format!("bad face index `{t}`")))?;
                    let n = vertices.len() as i64;
                    let resolved = if raw > 0 { raw - 1 } else { n + raw };
                    if raw == 0 || resolved < 0 || resolved >= n {
                        return Err(err(lineno, format!("face index {raw} out of range")));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(err(lineno, "face needs at least 3 vertices".into()));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces).map_err(|e| match e {
        LbmError::InvalidInput(msg) => LbmError::Parse {
            path: name.to_string(),
            line: 0,
            msg,
        },
        other => other,
    })
}

/// Latitude/longitude sphere with `n_lat` bands and `n_lon` sectors.
pub fn uv_sphere(center: Vec3, radius: f64, n_lat: usize, n_lon: usize) -> TriangleMesh {
    use std::f64::consts::PI;
    let n_lat = n_lat.max(2);
    let n_lon = n_lon.max(3);
    let mut vertices = vec![add(center, [0.0, 0.0, radius])];
    for i in 1..n_lat {
        let th = PI * i as f64 / n_lat as f64;
        for j in 0..n_lon {
            let ph = 2.0 * PI * j as f64 / n_lon as f64;
            vertices.push(add(
                center,
                [radius * th.sin() * ph.cos(), radius * th.sin() * ph.sin(), radius * th.cos()],
            ));
        }
    }
    vertices.push(add(center, [0.0, 0.0, -radius]));
    let south = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * n_lon + (j % n_lon);
    let mut faces = Vec::new();
    for j in 0..n_lon {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..n_lat - 1 {
        for j in 0..n_lon {
            faces.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
            faces.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    for j in 0..n_lon {
        faces.push([south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)]);
    }
    TriangleMesh { vertices, faces }
}

/// Subdivided icosahedron.
pub fn icosphere(center: Vec3, radius: f64, subdivisions: usize) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let normalize = |v: Vec3| scale(v, 1.0 / dot(v, v).sqrt());
    for v in verts.iter_mut() {
        *v = normalize(*v);
    }
    for _ in 0..subdivisions {
        let mut cache = std::collections::HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(normalize(scale(add(verts[a], verts[b]), 0.5)));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriangleMesh {
        vertices: verts.into_iter().map(|v| add(center, scale(v, radius))).collect(),
        faces,
    }
}

/// Rigid kinematics of an obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolidState {
    pub velocity: Vec3,
    pub omega: Vec3,
    pub center: Vec3,
}

impl SolidState {
    pub fn velocity_at(&self, p: Vec3) -> Vec3 {
        add(self.velocity, cross(self.omega, sub(p, self.center)))
    }
}

/// Parametric hit of segment `[x, x + d]` with a triangle, `t ∈ (0, 1]`.
#[inline]
pub fn link_intersect(x: Vec3, d: Vec3, tri: &[Vec3; 3]) -> Option<(f64, Vec3)> {
    let e1 = sub(tri[1], tri[0]);
    let e2 = sub(tri[2], tri[0]);
    let p = cross(d, e2);
    let det = dot(e1, p);
    if det.abs() < 1e-12 {
        return None;
    }
    let inv = 1.0 / det;
    let s = sub(x, tri[0]);
    let u = dot(s, p) * inv;
    if !(-HIT_EPS..=1.0 + HIT_EPS).contains(&u) {
        return None;
    }
    let q = cross(s, e1);
    let v = dot(d, q) * inv;
    if v < -HIT_EPS || u + v > 1.0 + HIT_EPS {
        return None;
    }
    let t = dot(e2, q) * inv;
    if t <= 0.0 || t > 1.0 + HIT_EPS {
        return None;
    }
    let t = t.min(1.0);
    Some((t, add(x, scale(d, t))))
}

/// Earliest hit over a set of triangles; ties go to the lowest index.
pub fn first_hit(
    mesh: &TriangleMesh,
    candidates: impl IntoIterator<Item = usize>,
    x: Vec3,
    d: Vec3,
) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for tri in candidates {
        if let Some((t, p)) = link_intersect(x, d, &mesh.triangle(tri)) {
            let better = match &best {
                None => true,
                Some(b) => t < b.t || (t == b.t && tri < b.tri),
            };
            if better {
                best = Some(Hit { t, point: p, tri });
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    pub tri: usize,
}

/// Per-node flag marking surface cells plus a one-cell dilation, together
/// with the triangles overlapping each undilated cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMask {
    pub dims: [usize; 3],
    pub mask: Vec<bool>,
    bin_start: Vec<u32>,
    bin_items: Vec<u32>,
}

impl SurfaceMask {
    pub fn empty(dims: [usize; 3]) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        SurfaceMask {
            dims,
            mask: vec![false; n],
            bin_start: vec![0; n + 1],
            bin_items: Vec::new(),
        }
    }

    #[inline]
    pub fn index(&self, p: [usize; 3]) -> usize {
        (p[2] * self.dims[1] + p[1]) * self.dims[0] + p[0]
    }

    #[inline]
    pub fn is_marked(&self, p: [usize; 3]) -> bool {
        self.mask[self.index(p)]
    }

    pub fn marked_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Triangles overlapping the cell of node `p` (before dilation).
    pub fn bin(&self, p: [usize; 3]) -> &[u32] {
        let i = self.index(p);
        &self.bin_items[self.bin_start[i] as usize..self.bin_start[i + 1] as usize]
    }

    /// Deduplicated triangles overlapping the 3×3(×3) neighbourhood of `p`.
    pub fn candidates(&self, p: [usize; 3], out: &mut Vec<u32>) {
        out.clear();
        let lo = |a: usize| a.saturating_sub(1);
        for z in lo(p[2])..=(p[2] + 1).min(self.dims[2] - 1) {
            for y in lo(p[1])..=(p[1] + 1).min(self.dims[1] - 1) {
                for x in lo(p[0])..=(p[0] + 1).min(self.dims[0] - 1) {
                    out.extend_from_slice(self.bin([x, y, z]));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

/// Conservative triangle vs axis-aligned box overlap (separating axis test).
pub fn tri_box_overlap(center: Vec3, half: Vec3, tri: &[Vec3; 3]) -> bool {
    let v = [sub(tri[0], center), sub(tri[1], center), sub(tri[2], center)];
    for a in 0..3 {
        let mn = v[0][a].min(v[1][a]).min(v[2][a]);
        let mx = v[0][a].max(v[1][a]).max(v[2][a]);
        if mn > half[a] || mx < -half[a] {
            return false;
        }
    }
    let e = [sub(v[1], v[0]), sub(v[2], v[1]), sub(v[0], v[2])];
    let n = cross(e[0], e[1]);
    let r = half[0] * n[0].abs() + half[1] * n[1].abs() + half[2] * n[2].abs();
    if dot(n, v[0]).abs() > r {
        return false;
    }
    let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for edge in &e {
        for ax in &axes {
            let a = cross(*edge, *ax);
            if dot(a, a) < 1e-24 {
                continue;
            }
            let p = [dot(a, v[0]), dot(a, v[1]), dot(a, v[2])];
            let r = half[0] * a[0].abs() + half[1] * a[1].abs() + half[2] * a[2].abs();
            let mn = p[0].min(p[1]).min(p[2]);
            let mx = p[0].max(p[1]).max(p[2]);
            if mn > r || mx < -r {
                return false;
            }
        }
    }
    true
}

/// Node-index range `[lo, hi]` covered by the cells overlapping `[a, b]`.
fn cell_range(a: f64, b: f64, n: usize) -> Option<(usize, usize)> {
    let lo = (a - 0.5).ceil().max(0.0);
    let hi = (b + 0.5).floor().min(n as f64 - 1.0);
    (lo <= hi).then_some((lo as usize, hi as usize))
}

/// Integer bounding box of a triangle's overlapping cells, clipped to the grid.
pub fn triangle_cell_bounds(tri: &[Vec3; 3], dims: [usize; 3]) -> Option<([usize; 3], [usize; 3])> {
    let mut lo = [0; 3];
    let mut hi = [0; 3];
    for a in 0..3 {
        let mn = tri[0][a].min(tri[1][a]).min(tri[2][a]);
        let mx = tri[0][a].max(tri[1][a]).max(tri[2][a]);
        let (l, h) = cell_range(mn, mx, dims[a])?;
        lo[a] = l;
        hi[a] = h;
    }
    Some((lo, hi))
}

/// Marks every node whose unit cell overlaps a triangle, then dilates by one
/// cell. Node `(i, j, k)` sits at integer coordinates.
pub fn voxelize_surface(mesh: &TriangleMesh, dims: [usize; 3]) -> SurfaceMask {
    let mut out = SurfaceMask::empty(dims);
    let n = dims[0] * dims[1] * dims[2];
    let half = [0.5 + HIT_EPS; 3];
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for ti in 0..mesh.len() {
        let tri = mesh.triangle(ti);
        let Some((lo, hi)) = triangle_cell_bounds(&tri, dims) else {
            continue;
        };
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    if tri_box_overlap([x as f64, y as f64, z as f64], half, &tri) {
                        pairs.push((out.index([x, y, z]) as u32, ti as u32));
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    let mut start = vec![0u32; n + 1];
    for &(node, _) in &pairs {
        start[node as usize + 1] += 1;
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    out.bin_items = pairs.iter().map(|p| p.1).collect();
    out.bin_start = start;
    let surface: Vec<bool> = (0..n).map(|i| out.bin_start[i + 1] > out.bin_start[i]).collect();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                if !surface[out.index([x, y, z])] {
                    continue;
                }
                for zz in z.saturating_sub(1)..=(z + 1).min(dims[2] - 1) {
                    for yy in y.saturating_sub(1)..=(y + 1).min(dims[1] - 1) {
                        for xx in x.saturating_sub(1)..=(x + 1).min(dims[0] - 1) {
                            let i = out.index([xx, yy, zz]);
                            out.mask[i] = true;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Moments at a boundary point: density copied, velocity from the rigid
/// motion, non-equilibrium stress carried over from the fluid node.
pub fn boundary_moments(p: Vec3, solid: &SolidState, fluid: &MomentSet) -> MomentSet {
    let rho = fluid.rho;
    let ux = fluid.velocity();
    let up = solid.velocity_at(p);
    let mut stress = [0.0; 6];
    for (k, &(a, b)) in SYM2.iter().enumerate() {
        let sx = fluid.stress[k] / rho;
        stress[k] = rho * (up[a] * up[b] + sx - ux[a] * ux[b]);
    }
    MomentSet {
        rho,
        mom: scale(up, rho),
        stress,
    }
}

/// One corrected link: population change `delta_f` along `c` at boundary point `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkContribution {
    pub delta_f: f64,
    pub c: Vec3,
    pub p: Vec3,
}

/// Momentum-exchange force and torque: `ΔP = −Δf c`, summed.
pub fn accumulate_force_torque(links: &[LinkContribution], center: Vec3) -> (Vec3, Vec3) {
    let mut force = [0.0; 3];
    let mut torque = [0.0; 3];
    for l in links {
        let dp = scale(l.c, -l.delta_f);
        force = add(force, dp);
        torque = add(torque, cross(sub(l.p, center), dp));
    }
    (force, torque)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{neq_decompose, neq_recompose};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn orient(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
        dot(cross(sub(b, a), sub(c, a)), sub(d, a))
    }

    /// Sign-of-volume segment/triangle oracle (strict interior).
    fn oracle(x: Vec3, d: Vec3, tri: &[Vec3; 3]) -> Option<bool> {
        let y = add(x, d);
        let s0 = orient(tri[0], tri[1], tri[2], x);
        let s1 = orient(tri[0], tri[1], tri[2], y);
        let e = [
            orient(x, y, tri[0], tri[1]),
            orient(x, y, tri[1], tri[2]),
            orient(x, y, tri[2], tri[0]),
        ];
        let band = 1e-6;
        if s0.abs() < band || s1.abs() < band || e.iter().any(|v| v.abs() < band) {
            return None;
        }
        let crosses = (s0 > 0.0) != (s1 > 0.0);
        let inside = e.iter().all(|v| *v > 0.0) || e.iter().all(|v| *v < 0.0);
        Some(crosses && inside)
    }

    #[test]
    fn axis_link_hits_midpoint() {
        let tri = [[0.5, -1.0, -1.0], [0.5, 2.0, -1.0], [0.5, 0.0, 2.0]];
        let (t, p) = link_intersect([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], &tri).unwrap();
        assert_abs_diff_eq!(t, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        let coplanar = [[0.0, -1.0, 0.0], [2.0, -1.0, 0.0], [0.0, 2.0, 0.0]];
        assert!(link_intersect([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], &coplanar).is_none());
        assert!(link_intersect([0.0, 0.0, 0.0], [-1.0, 0.0, 0.0], &tri).is_none());
    }

    #[test]
    fn random_links_agree_with_orientation_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let dirs = crate::lattice::Lattice::new(crate::lattice::LatticeKind::D3Q27);
        let mut checked = 0;
        for _ in 0..100_000 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let d = dirs.c(rng.gen_range(1..27));
            let mut tri = [[0.0; 3]; 3];
            for v in tri.iter_mut() {
                *v = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            }
            if let Some(expect) = oracle(x, d, &tri) {
                assert_eq!(link_intersect(x, d, &tri).is_some(), expect, "{x:?} {d:?} {tri:?}");
                checked += 1;
            }
        }
        assert!(checked > 90_000);
    }

    #[test]
    fn obj_parsing() {
        let text = "# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2//1 3\n";
        let m = parse_obj(text.as_bytes(), "t.obj").unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.faces, vec![[0, 1, 2]]);
        let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4 -3 -2 -1\n";
        assert_eq!(parse_obj(quad.as_bytes(), "q").unwrap().len(), 2);
        let bad = "v 0 0 0\nv 1 0 x\n";
        match parse_obj(bad.as_bytes(), "b.obj") {
            Err(LbmError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let degenerate = "v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n";
        let e = parse_obj(degenerate.as_bytes(), "d").unwrap_err();
        assert!(e.to_string().contains("face 0"));
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n".as_bytes(), "r").is_err());
    }

    #[test]
    fn obj_write_read_round_trip() {
        let m = icosphere([1.0, 2.0, 3.0], 2.5, 1);
        let mut buf = Vec::new();
        m.write_obj(&mut buf).unwrap();
        let back = parse_obj(buf.as_slice(), "ico").unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn sphere_sizes() {
        assert_eq!(icosphere([0.0; 3], 1.0, 2).len(), 320);
        let uv = uv_sphere([0.0; 3], 10.0, 225, 225);
        assert_eq!(uv.len(), 2 * 225 * 224);
        assert!(TriangleMesh::new(uv.vertices.clone(), uv.faces.clone()).is_ok());
    }

    #[test]
    fn single_triangle_mask() {
        let tri = TriangleMesh::new(
            vec![[4.9, 5.0, 5.0], [5.1, 5.0, 5.0], [5.0, 5.1, 5.1]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let m = voxelize_surface(&tri, [10, 10, 10]);
        assert_eq!(m.marked_count(), 27);
        assert_eq!(m.bin([5, 5, 5]), &[0]);
        assert!(m.is_marked([4, 4, 4]) && m.is_marked([6, 6, 6]) && !m.is_marked([7, 5, 5]));
        assert_eq!(voxelize_surface(&TriangleMesh::default(), [4, 4, 4]).marked_count(), 0);
        let outside = TriangleMesh::new(
            vec![[40.0, 5.0, 5.0], [41.0, 5.0, 5.0], [40.0, 6.0, 5.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(voxelize_surface(&outside, [10, 10, 10]).marked_count(), 0);
    }

    #[test]
    fn quad_marks_at_least_four_cells() {
        let quad = TriangleMesh::new(
            vec![[2.0, 2.0, 3.2], [4.0, 2.0, 3.2], [4.0, 4.0, 3.2], [2.0, 4.0, 3.2]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let m = voxelize_surface(&quad, [8, 8, 8]);
        let surface = (0..512).filter(|&i| m.bin_start[i + 1] > m.bin_start[i]).count();
        assert!(surface >= 4);
    }

    #[test]
    fn mask_is_conservative() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let lat = crate::lattice::Lattice::new(crate::lattice::LatticeKind::D3Q27);
        for _ in 0..20 {
            let mut v = [[0.0; 3]; 3];
            for p in v.iter_mut() {
                *p = [rng.gen_range(2.0..10.0), rng.gen_range(2.0..10.0), rng.gen_range(2.0..10.0)];
            }
            let Ok(mesh) = TriangleMesh::new(v.to_vec(), vec![[0, 1, 2]]) else { continue };
            let mask = voxelize_surface(&mesh, [12, 12, 12]);
            let tri = mesh.triangle(0);
            for z in 1..11 {
                for y in 1..11 {
                    for x in 1..11 {
                        for i in 1..27 {
                            let c = lat.c(i);
                            let o = [x as f64, y as f64, z as f64];
                            if link_intersect(o, c, &tri).is_some() {
                                let t = [(x as f64 + c[0]) as usize, (y as f64 + c[1]) as usize, (z as f64 + c[2]) as usize];
                                assert!(mask.is_marked([x, y, z]) || mask.is_marked(t));
                                let mut cand = Vec::new();
                                mask.candidates([x, y, z], &mut cand);
                                assert_eq!(cand, vec![0]);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn boundary_moment_examples() {
        let still = SolidState::default();
        let rest = MomentSet::rest();
        let b = boundary_moments([1.0, 2.0, 3.0], &still, &rest);
        assert_eq!(b, rest);
        let sn = [0.01, -0.002, 0.003, 0.004, 0.0, -0.005];
        let fluid = neq_recompose(1.1, [0.05, 0.02, -0.01], &sn);
        let b = boundary_moments([0.0; 3], &still, &fluid);
        for k in 0..6 {
            assert_abs_diff_eq!(b.stress[k], sn[k], epsilon = 1e-16);
        }
        assert_eq!(b.mom, [0.0; 3]);
        let spin = SolidState {
            omega: [0.0, 0.0, 0.01],
            ..Default::default()
        };
        let up = spin.velocity_at([1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(up[1], 0.01, epsilon = 1e-18);
        assert_eq!(up[0], 0.0);
        let b = boundary_moments([1.0, 0.0, 0.0], &spin, &fluid);
        let back = neq_decompose(&b);
        for k in 0..6 {
            assert_abs_diff_eq!(back[k], sn[k], epsilon = 1e-15);
        }
    }

    #[test]
    fn force_torque_examples() {
        assert_eq!(accumulate_force_torque(&[], [0.0; 3]), ([0.0; 3], [0.0; 3]));
        let zero = LinkContribution {
            delta_f: 0.0,
            c: [1.0, 0.0, 0.0],
            p: [3.0, 0.0, 0.0],
        };
        assert_eq!(accumulate_force_torque(&[zero], [0.0; 3]), ([0.0; 3], [0.0; 3]));
        let one = LinkContribution {
            delta_f: 0.5,
            c: [0.0, 1.0, 0.0],
            p: [2.0, 0.0, 0.0],
        };
        let (f, t) = accumulate_force_torque(&[one], [0.0; 3]);
        assert_eq!(f, [0.0, -0.5, 0.0]);
        assert_eq!(t, [0.0, 0.0, -1.0]);
    }

    proptest! {
        #[test]
        fn affine_identity_is_noop(x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
            prop_assert_eq!(Affine::IDENTITY.apply([x, y, z]), [x, y, z]);
            let a = Affine::scale_translate(2.0, [1.0, 0.0, -1.0]).apply([x, y, z]);
            prop_assert_eq!(a, [2.0 * x + 1.0, 2.0 * y, 2.0 * z - 1.0]);
        }
    }
}
