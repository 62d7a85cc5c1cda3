//! Communication-volume accounting for partitioned meshes: edge cuts, face
//! message volumes, virtual-node aggregation and block-merge traffic factors.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{config_err, Result};
use crate::mesh::{HexMesh, Partition, FACES};

/// Element face adjacency with a per-face message size and rank assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    /// `(face, neighbour)` pairs per element; self-adjacency is dropped.
    adjacency: Vec<Vec<(usize, usize)>>,
    face_size: usize,
    owner: Vec<usize>,
    ranks: usize,
}

impl CommGraph {
    /// Graph of a box mesh; faces carry `(N+1)^2` velocity nodes.
    pub fn from_mesh(mesh: &HexMesh, partition: &Partition, order: usize) -> Result<Self> {
        let adjacency = (0..mesh.num_elements())
            .map(|e| {
                (0..FACES)
                    .filter_map(|f| mesh.face_neighbor(e, f).filter(|&n| n != e).map(|n| (f, n)))
                    .collect()
            })
            .collect();
        Self::new(adjacency, partition, (order + 1) * (order + 1))
    }

    /// Graph of a dumped element list; faces are matched by their corner
    /// coordinates, so periodic wrap is not recovered.
    pub fn from_corners(elements: &[[[f64; 3]; 8]], partition: &Partition, order: usize) -> Result<Self> {
        let key = |p: [f64; 3]| p.map(|x| (x * 1e9).round() as i64);
        let mut faces: HashMap<Vec<[i64; 3]>, (usize, usize)> = HashMap::new();
        let mut adjacency = vec![Vec::new(); elements.len()];
        for (e, corners) in elements.iter().enumerate() {
            for f in 0..FACES {
                let (axis, side) = (f / 2, f % 2);
                let mut k: Vec<[i64; 3]> = (0..8).filter(|c| (c >> axis) & 1 == side).map(|c| key(corners[c])).collect();
                k.sort_unstable();
                if let Some((e2, f2)) = faces.remove(&k) {
                    adjacency[e].push((f, e2));
                    adjacency[e2].push((f2, e));
                } else {
                    faces.insert(k, (e, f));
                }
            }
        }
        Self::new(adjacency, partition, (order + 1) * (order + 1))
    }

    pub fn new(adjacency: Vec<Vec<(usize, usize)>>, partition: &Partition, face_size: usize) -> Result<Self> {
        if adjacency.len() != partition.owners().len() {
            return Err(config_err(
                "partition",
                format!("{} owners for {} elements", partition.owners().len(), adjacency.len()),
            ));
        }
        if face_size == 0 {
            return Err(config_err("face_size", "message size must be positive"));
        }
        let pairs = |a: &[(usize, usize)], n: usize| a.iter().filter(|&&(_, m)| m == n).count();
        for (e, list) in adjacency.iter().enumerate() {
            for &(_, n) in list {
                if n >= adjacency.len() || pairs(&adjacency[n], e) != pairs(list, n) {
                    return Err(config_err("adjacency", format!("element {e} and {n} are not mutually adjacent")));
                }
            }
        }
        Ok(Self {
            adjacency,
            face_size,
            owner: partition.owners().to_vec(),
            ranks: partition.ranks(),
        })
    }

    pub fn ranks(&self) -> usize {
        self.ranks
    }

    pub fn face_size(&self) -> usize {
        self.face_size
    }

    pub fn num_elements(&self) -> usize {
        self.adjacency.len()
    }

    /// Every cut face once, as `(rank_a, rank_b)` with `a < b`.
    fn cut_faces(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(move |(e, list)| {
            list.iter().filter_map(move |&(_, n)| {
                let (ra, rb) = (self.owner[e], self.owner[n]);
                (e < n && ra != rb).then_some((ra.min(rb), ra.max(rb)))
            })
        })
    }
}

/// Edge cuts, face-node volume and distinct rank-pair messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CutVolume {
    pub edge_cuts: usize,
    pub volume: usize,
    pub messages: usize,
}

pub fn count_cut_volume(graph: &CommGraph) -> CutVolume {
    let mut edge_cuts = 0;
    let mut pairs = BTreeSet::new();
    for p in graph.cut_faces() {
        edge_cuts += 1;
        pairs.insert(p);
    }
    CutVolume {
        edge_cuts,
        volume: edge_cuts * graph.face_size,
        messages: pairs.len(),
    }
}

/// Traffic split for ranks grouped into virtual nodes of `n` consecutive ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VirtualNodeReport {
    pub n: usize,
    pub intra_msgs: usize,
    pub inter_msgs: usize,
    pub intra_volume: usize,
    pub inter_volume: usize,
}

impl VirtualNodeReport {
    pub fn total_volume(&self) -> usize {
        self.intra_volume + self.inter_volume
    }
}

pub fn virtual_node_sweep(graph: &CommGraph, sizes: &[usize]) -> Result<Vec<VirtualNodeReport>> {
    let cuts: Vec<(usize, usize)> = graph.cut_faces().collect();
    let pairs: BTreeSet<(usize, usize)> = cuts.iter().copied().collect();
    sizes
        .iter()
        .map(|&n| {
            if n == 0 || graph.ranks % n != 0 {
                return Err(config_err(
                    "sizes",
                    format!("virtual node size {n} does not divide {} ranks", graph.ranks),
                ));
            }
            let inter = |&(a, b): &(usize, usize)| a / n != b / n;
            let inter_faces = cuts.iter().filter(|p| inter(p)).count();
            let inter_msgs = pairs.iter().filter(|p| inter(p)).count();
            Ok(VirtualNodeReport {
                n,
                intra_msgs: pairs.len() - inter_msgs,
                inter_msgs,
                intra_volume: (cuts.len() - inter_faces) * graph.face_size,
                inter_volume: inter_faces * graph.face_size,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decomposition {
    OneD,
    ThreeD,
}

/// Ratios after merging `n` neighbouring blocks into one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeFactors {
    /// Message size between merged neighbours relative to before.
    pub neighbor_message: f64,
    /// Total traffic relative to before.
    pub total_traffic: f64,
}

/// Slabs merge along one axis: neighbour messages keep their size while the
/// number of cut planes drops by `n`. Cubes of `m^3` blocks merge into a block
/// with `m` times the edge: faces grow by `m^2` and total surface shrinks by `m`.
pub fn analytic_merge_factors(decomposition: Decomposition, n: usize) -> Result<MergeFactors> {
    if n == 0 {
        return Err(config_err("n", "merge factor must be >= 1"));
    }
    match decomposition {
        Decomposition::OneD => Ok(MergeFactors {
            neighbor_message: 1.0,
            total_traffic: 1.0 / n as f64,
        }),
        Decomposition::ThreeD => {
            let m = (1..=n).find(|m| m * m * m >= n).expect("n >= 1");
            if m * m * m != n {
                return Err(config_err("n", format!("3d merge factor {n} is not a cube")));
            }
            Ok(MergeFactors {
                neighbor_message: (m * m) as f64,
                total_traffic: 1.0 / m as f64,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, partition_rcb, BoxSpec};

    fn graph(counts: [usize; 3], periodic: [bool; 3], ranks: usize, order: usize) -> CommGraph {
        let mesh = build_box_mesh(&BoxSpec::unit(counts).with_periodic(periodic)).unwrap();
        let part = partition_rcb(&mesh, ranks).unwrap();
        CommGraph::from_mesh(&mesh, &part, order).unwrap()
    }

    #[test]
    fn single_rank_has_no_traffic() {
        let g = graph([3, 2, 2], [true, false, false], 1, 5);
        assert_eq!(
            count_cut_volume(&g),
            CutVolume {
                edge_cuts: 0,
                volume: 0,
                messages: 0
            }
        );
    }

    #[test]
    fn two_elements_share_one_face() {
        let g = graph([2, 1, 1], [false; 3], 2, 7);
        let c = count_cut_volume(&g);
        assert_eq!((c.edge_cuts, c.volume, c.messages), (1, 64, 1));
    }

    #[test]
    fn rcb_octants_of_a_cube() {
        let g = graph([4, 4, 4], [false; 3], 8, 7);
        assert_eq!(count_cut_volume(&g).volume, 3 * 16 * 64);
    }

    #[test]
    fn periodic_pair_shares_two_faces() {
        let g = graph([2, 1, 1], [true, false, false], 2, 1);
        let c = count_cut_volume(&g);
        assert_eq!((c.edge_cuts, c.messages), (2, 1));
    }

    #[test]
    fn sweep_extremes_and_divisibility() {
        let g = graph([4, 2, 2], [false; 3], 4, 3);
        let total = count_cut_volume(&g).volume;
        let r = virtual_node_sweep(&g, &[1, 2, 4]).unwrap();
        assert_eq!(r[0].inter_volume, total);
        assert_eq!(r[2].inter_volume, 0);
        assert!(r.iter().all(|x| x.total_volume() == total));
        assert!(virtual_node_sweep(&g, &[3]).is_err());
        assert!(virtual_node_sweep(&g, &[0]).is_err());
    }

    #[test]
    fn merge_factors() {
        let f = analytic_merge_factors(Decomposition::OneD, 4).unwrap();
        assert_eq!((f.neighbor_message, f.total_traffic), (1.0, 0.25));
        let f = analytic_merge_factors(Decomposition::OneD, 1).unwrap();
        assert_eq!((f.neighbor_message, f.total_traffic), (1.0, 1.0));
        let f = analytic_merge_factors(Decomposition::ThreeD, 8).unwrap();
        assert_eq!((f.neighbor_message, f.total_traffic), (4.0, 0.5));
        assert!(analytic_merge_factors(Decomposition::ThreeD, 4).is_err());
        assert!(analytic_merge_factors(Decomposition::OneD, 0).is_err());
    }

    #[test]
    fn dump_graph_matches_mesh_graph() {
        let mesh = build_box_mesh(&BoxSpec::unit([3, 2, 2])).unwrap();
        let part = partition_rcb(&mesh, 4).unwrap();
        let a = CommGraph::from_mesh(&mesh, &part, 4).unwrap();
        let corners: Vec<_> = (0..mesh.num_elements()).map(|e| mesh.corners(e)).collect();
        let b = CommGraph::from_corners(&corners, &part, 4).unwrap();
        assert_eq!(count_cut_volume(&a), count_cut_volume(&b));
    }

    #[test]
    fn asymmetric_adjacency_is_rejected() {
        let part = Partition::single(2);
        assert!(CommGraph::new(vec![vec![(1, 1)], vec![]], &part, 4).is_err());
        assert!(CommGraph::new(vec![vec![], vec![]], &part, 0).is_err());
    }
}
