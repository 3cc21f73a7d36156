//! Cell-list neighbor search with ellipsoidal support tests.
//!
//! Lists are built once from the initial configuration and never rebuilt.
//! Every entry caches the separation `r_ij = r_i − r_j` and the symmetrized
//! kernel sample, so operator passes never touch the kernel again.
//!
//! [`build_neighbor_lists_mirrored`] additionally inserts mirror images of
//! particles across the walls of an axis-aligned box. A mirror entry refers
//! to its source particle through `j`, so field lookups stay in the real
//! particle arrays while the separation points at the image.

use rayon::prelude::*;

use crate::kernel::{symmetrized_pair, KernelSample, SmoothingTensor, SUPPORT_RADIUS};
use crate::particles::ParticleSet;
use crate::tensor::SpatialVector;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    /// Index of the (source) particle in the particle set.
    pub j: usize,
    /// `r_i − r_j`, towards `i` from the neighbor or its mirror image.
    pub r_ij: SpatialVector,
    pub kernel: KernelSample,
    pub mirrored: bool,
}

/// Frozen per-particle neighbor lists in compressed-row form.
#[derive(Clone, Debug)]
pub struct NeighborLists {
    offsets: Vec<usize>,
    entries: Vec<Neighbor>,
}

impl NeighborLists {
    fn from_rows(rows: Vec<Vec<Neighbor>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut entries = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for row in rows {
            entries.extend(row);
            offsets.push(entries.len());
        }
        NeighborLists { offsets, entries }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn total_pairs(&self) -> usize {
        self.entries.len()
    }

    pub fn mean_neighbors(&self) -> f64 {
        self.entries.len() as f64 / self.len().max(1) as f64
    }
}

/// Uniform grid over a point cloud, with per-axis cell edges.
#[derive(Clone, Debug)]
pub struct CellGrid {
    dim: usize,
    origin: [f64; 3],
    cell: [f64; 3],
    dims: [usize; 3],
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl CellGrid {
    pub fn build(points: &[SpatialVector], dim: usize, cell: [f64; 3]) -> Self {
        let mut origin = [0.0; 3];
        let mut dims = [1usize; 3];
        for k in 0..dim {
            let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            let (lo, hi) = if points.is_empty() { (0.0, 0.0) } else { (lo, hi) };
            origin[k] = lo;
            dims[k] = ((hi - lo) / cell[k]).floor() as usize + 1;
        }
        let mut grid = CellGrid { dim, origin, cell, dims, starts: Vec::new(), items: Vec::new() };
        let n_cells = dims.iter().product::<usize>();
        let keys: Vec<usize> = points.iter().map(|p| grid.flat(grid.cell_of(p))).collect();
        let mut counts = vec![0usize; n_cells + 1];
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for c in 0..n_cells {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut items = vec![0usize; points.len()];
        for (idx, &k) in keys.iter().enumerate() {
            items[fill[k]] = idx;
            fill[k] += 1;
        }
        grid.starts = counts;
        grid.items = items;
        grid
    }

    fn cell_of(&self, p: &SpatialVector) -> [usize; 3] {
        let mut c = [0usize; 3];
        for k in 0..self.dim {
            let f = ((p[k] - self.origin[k]) / self.cell[k]).floor();
            c[k] = (f.max(0.0) as usize).min(self.dims[k] - 1);
        }
        c
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]
    }

    pub fn cell_edges(&self) -> [f64; 3] {
        self.cell
    }

    /// Appends the indices stored in the 3^dim block of cells around `p`.
    pub fn candidates(&self, p: &SpatialVector, out: &mut Vec<usize>) {
        let c = self.cell_of(p);
        let range = |k: usize| {
            if k < self.dim {
                c[k].saturating_sub(1)..=(c[k] + 1).min(self.dims[k] - 1)
            } else {
                0..=0
            }
        };
        for x in range(0) {
            for y in range(1) {
                for z in range(2) {
                    let f = self.flat([x, y, z]);
                    out.extend_from_slice(&self.items[self.starts[f]..self.starts[f + 1]]);
                }
            }
        }
    }
}

/// Per-axis cell edge covering every particle's support bounding box.
pub fn support_cell_edges(smoothing: &[SmoothingTensor], dim: usize) -> [f64; 3] {
    let mut edges = [1.0; 3];
    for (k, e) in edges.iter_mut().enumerate().take(dim) {
        *e = smoothing.iter().map(|g| g.support_half_extent(k)).fold(0.0, f64::max);
        if *e == 0.0 {
            *e = 1.0;
        }
    }
    edges
}

pub fn particle_grid(ps: &ParticleSet) -> CellGrid {
    CellGrid::build(ps.positions(), ps.dim(), support_cell_edges(ps.smoothing(), ps.dim()))
}

/// Candidate neighbors of particle `i`: a superset of its true neighbors.
pub fn cell_grid_query(ps: &ParticleSet, grid: &CellGrid, i: usize) -> Vec<usize> {
    let mut out = Vec::new();
    grid.candidates(&ps.position(i), &mut out);
    out
}

#[inline]
fn in_support(gi: &SmoothingTensor, gj: &SmoothingTensor, r: &SpatialVector) -> bool {
    gi.eta(r).min(gj.eta(r)) < SUPPORT_RADIUS
}

/// Exact neighbor sets: `j ≠ i` with `min(|G_i r_ij|, |G_j r_ij|) < 2`.
pub fn build_neighbor_lists(ps: &ParticleSet) -> NeighborLists {
    let grid = particle_grid(ps);
    let g = ps.smoothing();
    let rows = (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let mut cand = Vec::new();
            grid.candidates(&ps.position(i), &mut cand);
            cand.sort_unstable();
            let pi = ps.position(i);
            cand.into_iter()
                .filter(|&j| j != i)
                .filter_map(|j| {
                    let r_ij = pi - ps.position(j);
                    in_support(&g[i], &g[j], &r_ij).then(|| Neighbor {
                        j,
                        r_ij,
                        kernel: symmetrized_pair(&g[i], &g[j], &r_ij),
                        mirrored: false,
                    })
                })
                .collect()
        })
        .collect();
    NeighborLists::from_rows(rows)
}

/// Axis-aligned box whose walls reflect particles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MirrorBox {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    /// Axes that carry a wall pair.
    pub walls: [bool; 3],
}

impl MirrorBox {
    pub fn new(lower: &[f64], upper: &[f64]) -> Self {
        let mut b = MirrorBox { lower: [0.0; 3], upper: [0.0; 3], walls: [false; 3] };
        for k in 0..lower.len().min(3) {
            b.lower[k] = lower[k];
            b.upper[k] = upper[k];
            b.walls[k] = true;
        }
        b
    }
}

struct Image {
    position: SpatialVector,
    smoothing: SmoothingTensor,
    source: usize,
}

fn mirror_images(ps: &ParticleSet, walls: &MirrorBox, reach: [f64; 3]) -> Vec<Image> {
    let dim = ps.dim();
    let mut images = Vec::new();
    for (i, p) in ps.positions().iter().enumerate() {
        // 0 = stay, 1 = reflect at lower wall, 2 = reflect at upper wall
        let mut options: [Vec<u8>; 3] = [vec![0], vec![0], vec![0]];
        for k in 0..dim {
            if !walls.walls[k] {
                continue;
            }
            if p[k] - walls.lower[k] < reach[k] {
                options[k].push(1);
            }
            if walls.upper[k] - p[k] < reach[k] {
                options[k].push(2);
            }
        }
        for &a in &options[0] {
            for &b in &options[1] {
                for &c in &options[2] {
                    if a == 0 && b == 0 && c == 0 {
                        continue;
                    }
                    let mut q = *p;
                    let mut flip = [false; 3];
                    for (k, choice) in [a, b, c].into_iter().enumerate() {
                        match choice {
                            1 => q[k] = 2.0 * walls.lower[k] - p[k],
                            2 => q[k] = 2.0 * walls.upper[k] - p[k],
                            _ => continue,
                        }
                        flip[k] = true;
                    }
                    images.push(Image { position: q, smoothing: ps.smoothing()[i].reflected(flip), source: i });
                }
            }
        }
    }
    images
}

/// Neighbor lists with even mirror images across the walls of `walls`.
///
/// A particle's own image can appear in its list (with `j == i`).
pub fn build_neighbor_lists_mirrored(ps: &ParticleSet, walls: &MirrorBox) -> NeighborLists {
    let dim = ps.dim();
    let edges = support_cell_edges(ps.smoothing(), dim);
    let images = mirror_images(ps, walls, edges);
    let n = ps.len();
    let mut points: Vec<SpatialVector> = ps.positions().to_vec();
    points.extend(images.iter().map(|m| m.position));
    let grid = CellGrid::build(&points, dim, edges);
    let g = ps.smoothing();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand = Vec::new();
            grid.candidates(&ps.position(i), &mut cand);
            cand.sort_unstable();
            let pi = ps.position(i);
            cand.into_iter()
                .filter(|&k| k != i)
                .filter_map(|k| {
                    let (source, pos, gk, mirrored) = if k < n {
                        (k, points[k], &g[k], false)
                    } else {
                        let m = &images[k - n];
                        (m.source, m.position, &m.smoothing, true)
                    };
                    let r_ij = pi - pos;
                    (r_ij.norm_squared() > 0.0 && in_support(&g[i], gk, &r_ij)).then(|| Neighbor {
                        j: source,
                        r_ij,
                        kernel: symmetrized_pair(&g[i], gk, &r_ij),
                        mirrored,
                    })
                })
                .collect()
        })
        .collect();
    NeighborLists::from_rows(rows)
}
