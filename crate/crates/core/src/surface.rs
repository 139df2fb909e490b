//! Marching-cubes surfaces of binary label masks.
//!
//! The indicator is 0/1, so every crossing sits at an edge midpoint. The
//! per-configuration triangle table is derived at call time from face
//! segments: on each cube face the crossing edges are paired so that inside
//! corners end up separated (the usual convention for ambiguous faces),
//! each segment is oriented with the inside on a fixed side, and the
//! resulting closed loops are triangulated with minimal area. Neighbouring cubes see the
//! same face pairing with opposite orientation, which makes the surface
//! closed and consistently wound.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::affine::Affine;
use crate::error::{Error, Result};
use crate::segment::{Label, LabelMap};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TriMesh {
    /// World-space positions (mm).
    pub vertices: Vec<[f64; 3]>,
    /// Counter-clockwise seen from outside.
    pub triangles: Vec<[u32; 3]>,
    pub label: Label,
}

impl TriMesh {
    pub fn empty(label: Label) -> Self {
        TriMesh {
            vertices: Vec::new(),
            triangles: Vec::new(),
            label,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    fn corners(&self, t: &[u32; 3]) -> [[f64; 3]; 3] {
        t.map(|i| self.vertices[i as usize])
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = self.corners(t);
                let n = cross(sub(b, a), sub(c, a));
                crate::math::sqrt(dot(n, n)) / 2.0
            })
            .sum()
    }

    /// Divergence-theorem volume; positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = self.corners(t);
                dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }

    /// Number of distinct undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edge_uses().len()
    }

    fn edge_uses(&self) -> BTreeMap<(u32, u32), usize> {
        let mut uses = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *uses.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        uses
    }

    /// Every edge is shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        self.edge_uses().values().all(|&n| n == 2)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    /// `u32 nv, u32 nt, nv×3 f32 positions, nt×3 u32 indices`, little-endian.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 12 * (self.vertices.len() + self.triangles.len()));
        out.extend_from_slice(&(self.vertices.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.triangles.len() as u32).to_le_bytes());
        for v in &self.vertices {
            for c in v {
                out.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        for t in &self.triangles {
            for i in t {
                out.extend_from_slice(&i.to_le_bytes());
            }
        }
        out
    }

    /// Inverse of [`to_le_bytes`](Self::to_le_bytes); positions come back at f32 precision.
    pub fn from_le_bytes(bytes: &[u8], label: Label) -> Result<Self> {
        let word = |i: usize| -> Result<[u8; 4]> {
            bytes
                .get(4 * i..4 * i + 4)
                .map(|b| [b[0], b[1], b[2], b[3]])
                .ok_or_else(|| Error::invalid("mesh buffer truncated"))
        };
        let nv = u32::from_le_bytes(word(0)?) as usize;
        let nt = u32::from_le_bytes(word(1)?) as usize;
        if bytes.len() != 8 + 12 * (nv + nt) {
            return Err(Error::invalid(alloc::format!(
                "mesh buffer is {} bytes, header implies {}",
                bytes.len(),
                8 + 12 * (nv + nt)
            )));
        }
        let mut vertices = Vec::with_capacity(nv);
        for v in 0..nv {
            let p: [f64; 3] = core::array::from_fn(|c| f32::from_le_bytes(word(2 + 3 * v + c).unwrap()) as f64);
            vertices.push(p);
        }
        let base = 2 + 3 * nv;
        let mut triangles = Vec::with_capacity(nt);
        for t in 0..nt {
            let tri: [u32; 3] = core::array::from_fn(|c| u32::from_le_bytes(word(base + 3 * t + c).unwrap()));
            if tri.iter().any(|&i| i as usize >= nv) {
                return Err(Error::invalid("mesh index out of range"));
            }
            triangles.push(tri);
        }
        Ok(TriMesh { vertices, triangles, label })
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

// Corner i sits at (i&1, i>>1&1, i>>2&1).
fn corner_pos(i: usize) -> [f64; 3] {
    [(i & 1) as f64, (i >> 1 & 1) as f64, (i >> 2 & 1) as f64]
}

/// Edge k joins corner `EDGES[k].0` to the corner one step along axis `EDGES[k].1`.
const EDGES: [(usize, usize); 12] = [
    (0, 0), (2, 0), (4, 0), (6, 0),
    (0, 1), (1, 1), (4, 1), (5, 1),
    (0, 2), (1, 2), (2, 2), (3, 2),
];

fn edge_between(a: usize, b: usize) -> usize {
    let lo = a.min(b);
    let axis = (a ^ b).trailing_zeros() as usize;
    EDGES.iter().position(|&e| e == (lo, axis)).expect("corners share an edge")
}

fn edge_mid(e: usize) -> [f64; 3] {
    let (a, axis) = EDGES[e];
    let mut p = corner_pos(a);
    p[axis] += 0.5;
    p
}

/// Faces as cyclic corner quadruples with their outward normals.
const FACES: [([usize; 4], [f64; 3]); 6] = [
    ([0, 2, 6, 4], [-1.0, 0.0, 0.0]),
    ([1, 3, 7, 5], [1.0, 0.0, 0.0]),
    ([0, 1, 5, 4], [0.0, -1.0, 0.0]),
    ([2, 3, 7, 6], [0.0, 1.0, 0.0]),
    ([0, 1, 3, 2], [0.0, 0.0, -1.0]),
    ([4, 5, 7, 6], [0.0, 0.0, 1.0]),
];

/// Triangles (as local edge ids) for one inside/outside corner pattern.
fn case_triangles(config: u8) -> Vec<[u8; 3]> {
    let inside = |c: usize| config >> c & 1 == 1;
    let mut next = [None::<usize>; 12];
    for (corners, normal) in FACES {
        // face edge k joins corners[k] and corners[k+1]
        let crossing: Vec<usize> = (0..4)
            .filter(|&k| inside(corners[k]) != inside(corners[(k + 1) % 4]))
            .collect();
        let pairs: Vec<(usize, usize)> = match crossing.len() {
            0 => Vec::new(),
            2 => vec![(crossing[0], crossing[1])],
            4 if inside(corners[0]) => vec![(3, 0), (1, 2)],
            4 => vec![(0, 1), (2, 3)],
            _ => unreachable!("a face has an even number of sign changes"),
        };
        for (p, q) in pairs {
            let (ca, cb) = (corners[p], corners[(p + 1) % 4]);
            let reference = corner_pos(if inside(ca) { ca } else { cb });
            let ep = edge_between(ca, cb);
            let eq = edge_between(corners[q], corners[(q + 1) % 4]);
            let (mp, mq) = (edge_mid(ep), edge_mid(eq));
            // inside lies to the side where this is negative
            let s = dot(cross(sub(mq, mp), sub(reference, mp)), normal);
            let (from, to) = if s < 0.0 { (ep, eq) } else { (eq, ep) };
            debug_assert!(next[from].is_none());
            next[from] = Some(to);
        }
    }
    let mut tris = Vec::new();
    let mut seen = [false; 12];
    for start in 0..12 {
        if seen[start] || next[start].is_none() {
            continue;
        }
        let mut ring = Vec::new();
        let mut e = start;
        while !seen[e] {
            seen[e] = true;
            ring.push(e as u8);
            e = next[e].expect("face segments form closed loops");
        }
        triangulate(&ring, &mut tris);
    }
    tris
}

/// Minimum-area triangulation of a closed loop of edge midpoints (no three
/// of which are ever collinear), keeping the loop's orientation.
fn triangulate(ring: &[u8], out: &mut Vec<[u8; 3]>) {
    let k = ring.len();
    let pos: Vec<[f64; 3]> = ring.iter().map(|&e| edge_mid(e as usize)).collect();
    let area = |a: usize, b: usize, c: usize| {
        let n = cross(sub(pos[b], pos[a]), sub(pos[c], pos[a]));
        crate::math::sqrt(dot(n, n))
    };
    // cost[i][j]: best triangulation of the sub-polygon i..=j
    let mut cost = vec![vec![0.0f64; k]; k];
    let mut split = vec![vec![0usize; k]; k];
    for len in 2..k {
        for i in 0..k - len {
            let j = i + len;
            let mut best = (f64::INFINITY, 0);
            for m in i + 1..j {
                let c = cost[i][m] + cost[m][j] + area(i, m, j);
                if c < best.0 - 1e-12 {
                    best = (c, m);
                }
            }
            cost[i][j] = best.0;
            split[i][j] = best.1;
        }
    }
    let mut stack = vec![(0, k - 1)];
    while let Some((i, j)) = stack.pop() {
        if j < i + 2 {
            continue;
        }
        let m = split[i][j];
        out.push([ring[i], ring[m], ring[j]]);
        stack.push((i, m));
        stack.push((m, j));
    }
}

fn case_table() -> Vec<Vec<[u8; 3]>> {
    (0..=255u8).map(case_triangles).collect()
}

/// Surface of `map == label` with vertices mapped through `affine`
/// (default: the map's spacing). One voxel of zero padding keeps the mesh
/// closed even where the label touches the grid border.
pub fn marching_cubes(map: &LabelMap, label: Label, affine: Option<&Affine>) -> Result<TriMesh> {
    if label == 0 {
        return Err(Error::invalid("cannot mesh the background label 0"));
    }
    let affine = affine.copied().unwrap_or_else(|| Affine::from_spacing(map.spacing()));
    affine.validate()?;
    let dims = map.dims();
    let data = map.data();

    let mut lo = dims;
    let mut hi = [0usize; 3];
    let mut any = false;
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                if data[x + dims[0] * (y + dims[1] * z)] == label {
                    any = true;
                    for (a, c) in [x, y, z].into_iter().enumerate() {
                        lo[a] = lo[a].min(c);
                        hi[a] = hi[a].max(c);
                    }
                }
            }
        }
    }
    if !any {
        return Ok(TriMesh::empty(label));
    }

    let table = case_table();
    // padded coordinate q holds original voxel q − 1
    let pdims = [dims[0] + 2, dims[1] + 2, dims[2] + 2];
    let at = |q: [usize; 3]| -> bool {
        (0..3).all(|a| q[a] >= 1 && q[a] <= dims[a])
            && data[(q[0] - 1) + dims[0] * ((q[1] - 1) + dims[1] * (q[2] - 1))] == label
    };

    let mut mesh = TriMesh::empty(label);
    let mut vertex_of: BTreeMap<u64, u32> = BTreeMap::new();
    let flip = affine.determinant3() < 0.0;
    for z in lo[2]..=hi[2] + 1 {
        for y in lo[1]..=hi[1] + 1 {
            for x in lo[0]..=hi[0] + 1 {
                let mut config = 0u8;
                for c in 0..8 {
                    if at([x + (c & 1), y + (c >> 1 & 1), z + (c >> 2 & 1)]) {
                        config |= 1 << c;
                    }
                }
                if config == 0 || config == 0xff {
                    continue;
                }
                for tri in &table[config as usize] {
                    let ids = tri.map(|e| {
                        let (c, axis) = EDGES[e as usize];
                        let q = [x + (c & 1), y + (c >> 1 & 1), z + (c >> 2 & 1)];
                        let key = ((q[0] + pdims[0] * (q[1] + pdims[1] * q[2])) * 3 + axis) as u64;
                        *vertex_of.entry(key).or_insert_with(|| {
                            let mut p = [q[0] as f64 - 1.0, q[1] as f64 - 1.0, q[2] as f64 - 1.0];
                            p[axis] += 0.5;
                            mesh.vertices.push(affine.apply(p));
                            (mesh.vertices.len() - 1) as u32
                        })
                    });
                    mesh.triangles.push(if flip { [ids[0], ids[2], ids[1]] } else { ids });
                }
            }
        }
    }
    Ok(mesh)
}
