//! Structured hexahedral box meshes, face adjacency, element partitioning and
//! the plain-text mesh dump.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{config_err, Result, SemError};

/// Face order used throughout: `-x, +x, -y, +y, -z, +z`.
pub const FACES: usize = 6;

/// Parameters of an axis-aligned box mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSpec {
    pub counts: [usize; 3],
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub periodic: [bool; 3],
}

impl BoxSpec {
    /// Unit cube `[0,1]^3` with the given element counts and no periodicity.
    pub fn unit(counts: [usize; 3]) -> Self {
        Self {
            counts,
            lower: [0.0; 3],
            upper: [1.0; 3],
            periodic: [false; 3],
        }
    }

    pub fn with_bounds(mut self, lower: [f64; 3], upper: [f64; 3]) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_periodic(mut self, periodic: [bool; 3]) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn extents(&self) -> [f64; 3] {
        [0, 1, 2].map(|d| self.upper[d] - self.lower[d])
    }
}

/// Hexahedral mesh with trilinear element geometry on a structured index
/// lattice. Elements are ordered lexicographically, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct HexMesh {
    spec: BoxSpec,
    /// Corner coordinates of every lattice vertex, `(Ex+1)(Ey+1)(Ez+1)` of them.
    vertices: Vec<[f64; 3]>,
}

/// Builds an axis-aligned structured box mesh.
pub fn build_box_mesh(spec: &BoxSpec) -> Result<HexMesh> {
    if spec.counts.iter().any(|&c| c == 0) {
        return Err(config_err("mesh.counts", "element counts must be >= 1"));
    }
    if spec.extents().iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(config_err("mesh.extents", "extents must be positive and finite"));
    }
    let [ex, ey, ez] = spec.counts;
    let h = [0, 1, 2].map(|d| spec.extents()[d] / spec.counts[d] as f64);
    let mut vertices = Vec::with_capacity((ex + 1) * (ey + 1) * (ez + 1));
    for k in 0..=ez {
        for j in 0..=ey {
            for i in 0..=ex {
                let idx = [i, j, k];
                vertices.push([0, 1, 2].map(|d| {
                    if idx[d] == spec.counts[d] {
                        spec.upper[d]
                    } else {
                        spec.lower[d] + idx[d] as f64 * h[d]
                    }
                }));
            }
        }
    }
    Ok(HexMesh {
        spec: spec.clone(),
        vertices,
    })
}

impl HexMesh {
    pub fn spec(&self) -> &BoxSpec {
        &self.spec
    }

    pub fn counts(&self) -> [usize; 3] {
        self.spec.counts
    }

    pub fn periodic(&self) -> [bool; 3] {
        self.spec.periodic
    }

    pub fn num_elements(&self) -> usize {
        self.spec.counts.iter().product()
    }

    pub fn element_index(&self, e: usize) -> [usize; 3] {
        let [ex, ey, _] = self.spec.counts;
        [e % ex, (e / ex) % ey, e / (ex * ey)]
    }

    pub fn element_at(&self, idx: [usize; 3]) -> usize {
        let [ex, ey, _] = self.spec.counts;
        idx[0] + ex * (idx[1] + ey * idx[2])
    }

    fn lattice_vertex(&self, idx: [usize; 3]) -> usize {
        let [ex, ey, _] = self.spec.counts;
        idx[0] + (ex + 1) * (idx[1] + (ey + 1) * idx[2])
    }

    /// Corner `c = a + 2b + 4c'` of element `e`, where `a,b,c' ∈ {0,1}`
    /// select the low/high side in r, s, t.
    pub fn corner_lattice_index(&self, e: usize, corner: usize) -> [usize; 3] {
        let base = self.element_index(e);
        [
            base[0] + (corner & 1),
            base[1] + ((corner >> 1) & 1),
            base[2] + ((corner >> 2) & 1),
        ]
    }

    pub fn corners(&self, e: usize) -> [[f64; 3]; 8] {
        std::array::from_fn(|c| self.vertices[self.lattice_vertex(self.corner_lattice_index(e, c))])
    }

    pub fn centroid(&self, e: usize) -> [f64; 3] {
        let c = self.corners(e);
        [0, 1, 2].map(|d| c.iter().map(|p| p[d]).sum::<f64>() / 8.0)
    }

    /// Applies `f` to every vertex coordinate; used to build distorted
    /// (non-affine) trilinear meshes with the same topology. The periodic
    /// wrap stays topological, so `f` should keep periodic faces congruent.
    pub fn map_vertices(&mut self, f: impl Fn([f64; 3]) -> [f64; 3]) {
        for v in &mut self.vertices {
            *v = f(*v);
        }
    }

    /// Face neighbour of `e` across `face` (order `-x,+x,-y,+y,-z,+z`),
    /// honouring periodic wrap.
    pub fn face_neighbor(&self, e: usize, face: usize) -> Option<usize> {
        let axis = face / 2;
        let upper = face % 2 == 1;
        let mut idx = self.element_index(e);
        let count = self.spec.counts[axis];
        if upper {
            if idx[axis] + 1 < count {
                idx[axis] += 1;
            } else if self.spec.periodic[axis] {
                idx[axis] = 0;
            } else {
                return None;
            }
        } else if idx[axis] > 0 {
            idx[axis] -= 1;
        } else if self.spec.periodic[axis] {
            idx[axis] = count - 1;
        } else {
            return None;
        }
        Some(self.element_at(idx))
    }

    pub fn face_neighbors(&self, e: usize) -> [Option<usize>; FACES] {
        std::array::from_fn(|f| self.face_neighbor(e, f))
    }

    /// Global vertex numbering (periodic vertices identified). Returns the id
    /// of each element corner and the vertex count.
    pub fn vertex_numbering(&self) -> (Vec<[usize; 8]>, usize) {
        let dims = self.lattice_dims(1);
        let ids = (0..self.num_elements())
            .map(|e| {
                std::array::from_fn(|c| {
                    let l = self.corner_lattice_index(e, c);
                    self.wrap_lattice(l, dims)
                })
            })
            .collect();
        (ids, dims.iter().product())
    }

    /// Number of distinct lattice points per direction for order `order`.
    pub(crate) fn lattice_dims(&self, order: usize) -> [usize; 3] {
        [0, 1, 2].map(|d| {
            let n = self.spec.counts[d] * order;
            if self.spec.periodic[d] {
                n
            } else {
                n + 1
            }
        })
    }

    /// Linear global id of lattice point `l` (already scaled by order).
    pub(crate) fn wrap_lattice(&self, l: [usize; 3], dims: [usize; 3]) -> usize {
        let w = [0, 1, 2].map(|d| if self.spec.periodic[d] { l[d] % dims[d] } else { l[d] });
        w[0] + dims[0] * (w[1] + dims[1] * w[2])
    }

    /// Writes the mesh dump: one line per element holding the 8 corner
    /// coordinates (24 numbers, corner order as in [`HexMesh::corners`]).
    pub fn write_dump(&self, mut out: impl Write) -> std::io::Result<()> {
        for e in 0..self.num_elements() {
            let line: Vec<String> = self
                .corners(e)
                .iter()
                .flat_map(|p| p.iter().map(|x| format!("{x:.17e}")))
                .collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Reads a mesh dump written by [`HexMesh::write_dump`].
pub fn read_mesh_dump(path: &Path) -> Result<Vec<[[f64; 3]; 8]>> {
    let file = std::fs::File::open(path)?;
    let mut elements = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| SemError::Format {
                path: path.to_owned(),
                reason: format!("line {}: {e}", lineno + 1),
            })?;
        if nums.len() != 24 {
            return Err(SemError::Format {
                path: path.to_owned(),
                reason: format!("line {}: expected 24 coordinates, found {}", lineno + 1, nums.len()),
            });
        }
        elements.push(std::array::from_fn(|c| [nums[3 * c], nums[3 * c + 1], nums[3 * c + 2]]));
    }
    Ok(elements)
}

/// Assignment of elements to ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    ranks: usize,
    owner: Vec<usize>,
}

impl Partition {
    pub fn new(ranks: usize, owner: Vec<usize>) -> Result<Self> {
        if ranks == 0 {
            return Err(config_err("ranks", "rank count must be >= 1"));
        }
        if let Some(&bad) = owner.iter().find(|&&r| r >= ranks) {
            return Err(config_err("partition", format!("rank {bad} >= rank count {ranks}")));
        }
        Ok(Self { ranks, owner })
    }

    /// Everything on rank 0.
    pub fn single(num_elements: usize) -> Self {
        Self {
            ranks: 1,
            owner: vec![0; num_elements],
        }
    }

    /// One element per rank.
    pub fn per_element(num_elements: usize) -> Self {
        Self {
            ranks: num_elements,
            owner: (0..num_elements).collect(),
        }
    }

    pub fn ranks(&self) -> usize {
        self.ranks
    }

    pub fn owner(&self, e: usize) -> usize {
        self.owner[e]
    }

    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.ranks];
        for &r in &self.owner {
            c[r] += 1;
        }
        c
    }

    pub fn elements_of(&self, rank: usize) -> Vec<usize> {
        (0..self.owner.len()).filter(|&e| self.owner[e] == rank).collect()
    }
}

/// Recursive coordinate bisection over element centroids.
pub fn partition_rcb(mesh: &HexMesh, ranks: usize) -> Result<Partition> {
    let centroids: Vec<[f64; 3]> = (0..mesh.num_elements()).map(|e| mesh.centroid(e)).collect();
    partition_rcb_points(&centroids, ranks)
}

/// Recursive coordinate bisection of a point cloud into `ranks` parts.
///
/// Each cut splits along the longest axis of the current bounding box (ties
/// go to the lowest axis) at the position that divides the points in
/// proportion to the ranks on each side.
pub fn partition_rcb_points(points: &[[f64; 3]], ranks: usize) -> Result<Partition> {
    if ranks == 0 {
        return Err(config_err("ranks", "rank count must be >= 1"));
    }
    if ranks > points.len() {
        return Err(config_err(
            "ranks",
            format!("{ranks} ranks exceed {} elements", points.len()),
        ));
    }
    let mut owner = vec![0; points.len()];
    let ids: Vec<usize> = (0..points.len()).collect();
    bisect(points, ids, 0, ranks, &mut owner);
    Partition::new(ranks, owner)
}

fn bisect(points: &[[f64; 3]], mut ids: Vec<usize>, first_rank: usize, ranks: usize, owner: &mut [usize]) {
    if ranks == 1 {
        for i in ids {
            owner[i] = first_rank;
        }
        return;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in &ids {
        for d in 0..3 {
            lo[d] = lo[d].min(points[i][d]);
            hi[d] = hi[d].max(points[i][d]);
        }
    }
    let mut axis = 0;
    for d in 1..3 {
        if hi[d] - lo[d] > hi[axis] - lo[axis] {
            axis = d;
        }
    }
    ids.sort_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b)));
    let left_ranks = ranks / 2;
    let split = (ids.len() * left_ranks + ranks / 2) / ranks;
    let right = ids.split_off(split);
    bisect(points, ids, first_rank, left_ranks, owner);
    bisect(points, right, first_rank + left_ranks, ranks - left_ranks, owner);
}
