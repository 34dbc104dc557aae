//! Recursive level-set bisection and the interior/interface reordering.
//!
//! Each bisection runs a breadth-first sweep from a pseudo-peripheral vertex
//! and cuts between two whole level sets, taking the boundary whose running
//! count is closest to the target size. Cutting between levels keeps the
//! separator aligned with a BFS wavefront; when no level boundary is within
//! [`LEVEL_SLACK`] of the target (coarse levels, tiny graphs) the cut falls
//! inside a level at the exact target count instead.

use crate::error::{Error, Result};
use crate::graph::{components, pseudo_peripheral, Graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest tolerated imbalance of a whole-level cut, as a fraction of the
/// vertices being split.
pub const LEVEL_SLACK: f64 = 0.1;

/// Subdomain assignment and the permutation realizing the arrowhead ordering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMeta {
    pub p: usize,
    /// Subdomain of each original vertex, `0..p`.
    pub labels: Vec<usize>,
    pub is_interface: Vec<bool>,
    /// `perm[new] = old`.
    pub perm: Vec<usize>,
    /// `iperm[old] = new`.
    pub iperm: Vec<usize>,
    /// Interior counts `d_j`.
    pub d: Vec<usize>,
    /// Interface counts `s_j`.
    pub s: Vec<usize>,
    /// Interface window offsets `ℓ_j = s_0 + … + s_{j-1}`.
    pub offsets: Vec<usize>,
}

impl PartitionMeta {
    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn d_total(&self) -> usize {
        self.d.iter().sum()
    }

    pub fn s_total(&self) -> usize {
        self.s.iter().sum()
    }

    /// Start of subdomain `j`'s interior rows in the new ordering.
    pub fn interior_start(&self, j: usize) -> usize {
        self.d[..j].iter().sum()
    }

    /// Interior rows of subdomain `j` in the new ordering.
    pub fn interior_range(&self, j: usize) -> std::ops::Range<usize> {
        let start = self.interior_start(j);
        start..start + self.d[j]
    }

    /// Interface window of subdomain `j`, local to the interface block.
    pub fn window(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j] + self.s[j]
    }

    /// Number of interface rows after window `j` (`ν_j`).
    pub fn nu(&self, j: usize) -> usize {
        self.s_total() - self.offsets[j] - self.s[j]
    }
}

/// Labels the vertices of `g` with `p` parts by recursive bisection.
pub fn partition_graph(g: &Graph, p: usize, seed: u64) -> Result<Vec<usize>> {
    let n = g.n();
    if p == 0 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    if p > n {
        return Err(Error::InvalidArgument(format!("p={p} exceeds n={n}")));
    }
    let mut labels = vec![0usize; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![0u32; n];
    let mut next_tag = 1u32;
    let mut seen = vec![false; n];
    // Work items: (tag of the vertex set, its vertices, first label, part count).
    let mut stack = vec![(0u32, (0..n).collect::<Vec<usize>>(), 0usize, p)];
    while let Some((tag, verts, first, parts)) = stack.pop() {
        if parts == 1 {
            for &v in &verts {
                labels[v] = first;
            }
            continue;
        }
        let left_parts = parts / 2;
        let right_parts = parts - left_parts;
        let target = ((verts.len() * left_parts) as f64 / parts as f64).round() as usize;
        let target = target.clamp(left_parts, verts.len() - right_parts);
        let left = bisect(
            g,
            &verts,
            &mask,
            tag,
            target,
            left_parts,
            right_parts,
            &mut rng,
            &mut seen,
        );
        let (lt, rt) = (next_tag, next_tag + 1);
        next_tag += 2;
        let mut in_left = vec![false; n];
        for &v in &left {
            in_left[v] = true;
        }
        let right: Vec<usize> = verts.iter().copied().filter(|&v| !in_left[v]).collect();
        let mut left_sorted = left;
        left_sorted.sort_unstable();
        for &v in &left_sorted {
            mask[v] = lt;
        }
        for &v in &right {
            mask[v] = rt;
        }
        stack.push((rt, right, first + left_parts, right_parts));
        stack.push((lt, left_sorted, first, left_parts));
    }
    Ok(labels)
}

/// Chooses `target` vertices of `verts` for the left side.
#[allow(clippy::too_many_arguments)]
fn bisect(
    g: &Graph,
    verts: &[usize],
    mask: &[u32],
    tag: u32,
    target: usize,
    min_left: usize,
    min_right: usize,
    rng: &mut ChaCha8Rng,
    seen: &mut [bool],
) -> Vec<usize> {
    let comps = components(g, verts, mask, tag);
    let mut left = Vec::with_capacity(target);
    for comp in comps {
        let need = target - left.len();
        if need == 0 {
            break;
        }
        if comp.len() <= need {
            left.extend_from_slice(&comp);
            continue;
        }
        // Split this component; bounds keep both sides able to host their parts.
        let lo = min_left.saturating_sub(left.len()).max(1);
        let hi = comp.len() - min_right.min(comp.len() - 1);
        let start = comp[rng.random_range(0..comp.len())];
        let (_, ls) = pseudo_peripheral(g, start, mask, tag, seen);
        let mut best: Option<(usize, usize)> = None;
        for l in 1..ls.depth() {
            let count = ls.level_ptr[l];
            if count < lo || count > hi {
                continue;
            }
            let gap = count.abs_diff(need);
            if best.is_none_or(|(_, g0)| gap < g0) {
                best = Some((count, gap));
            }
        }
        let cut = match best {
            Some((count, gap)) if (gap as f64) <= LEVEL_SLACK * verts.len() as f64 => count,
            _ => need.clamp(lo, hi),
        };
        left.extend_from_slice(&ls.order[..cut]);
        break;
    }
    left
}

/// Marks interface vertices and builds the arrowhead permutation: interiors of
/// each subdomain in turn, then interfaces grouped by subdomain, each group in
/// original order.
pub fn classify_and_permute(g: &Graph, labels: &[usize], p: usize) -> Result<PartitionMeta> {
    let n = g.n();
    if labels.len() != n {
        return Err(Error::Dimension(format!(
            "{} labels for {n} vertices",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= p) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} outside 0..{p}"
        )));
    }
    let is_interface: Vec<bool> = (0..n)
        .map(|v| g.neighbors(v).iter().any(|&w| labels[w] != labels[v]))
        .collect();
    let mut d = vec![0usize; p];
    let mut s = vec![0usize; p];
    for v in 0..n {
        if is_interface[v] {
            s[labels[v]] += 1;
        } else {
            d[labels[v]] += 1;
        }
    }
    let mut perm = Vec::with_capacity(n);
    for j in 0..p {
        perm.extend((0..n).filter(|&v| labels[v] == j && !is_interface[v]));
    }
    for j in 0..p {
        perm.extend((0..n).filter(|&v| labels[v] == j && is_interface[v]));
    }
    let mut iperm = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        iperm[old] = new;
    }
    let offsets = s
        .iter()
        .scan(0usize, |acc, &x| {
            let o = *acc;
            *acc += x;
            Some(o)
        })
        .collect();
    Ok(PartitionMeta {
        p,
        labels: labels.to_vec(),
        is_interface,
        perm,
        iperm,
        d,
        s,
        offsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_adjacency;
    use crate::mesh::gen_fd_laplacian;
    use crate::sparse::SparseSym;
    use proptest::prelude::*;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1)))
    }

    fn grid(nx: usize, ny: usize) -> Graph {
        let a = gen_fd_laplacian(nx, ny).unwrap();
        build_adjacency(&a, &SparseSym::identity(nx * ny)).unwrap()
    }

    #[test]
    fn single_part() {
        let g = grid(4, 4);
        let labels = partition_graph(&g, 1, 0).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
        let meta = classify_and_permute(&g, &labels, 1).unwrap();
        assert_eq!(meta.s_total(), 0);
        assert_eq!(meta.d, vec![16]);
    }

    #[test]
    fn path_halves() {
        let g = path(10);
        let labels = partition_graph(&g, 2, 3).unwrap();
        let first = labels[0];
        assert!(labels[..5].iter().all(|&l| l == first));
        assert!(labels[5..].iter().all(|&l| l != first));
    }

    #[test]
    fn four_vertex_path_interfaces() {
        let g = path(4);
        let meta = classify_and_permute(&g, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(meta.is_interface, vec![false, true, true, false]);
        assert_eq!(meta.d, vec![1, 1]);
        assert_eq!(meta.s, vec![1, 1]);
        assert_eq!(meta.perm, vec![0, 3, 1, 2]);
        assert_eq!(meta.offsets, vec![0, 1]);
        assert_eq!(meta.nu(0), 1);
    }

    #[test]
    fn grid_balance_four_parts() {
        let g = grid(16, 16);
        let labels = partition_graph(&g, 4, 11).unwrap();
        for j in 0..4 {
            let c = labels.iter().filter(|&&l| l == j).count() as f64;
            assert!((c - 64.0).abs() <= 16.0, "part {j} has {c}");
        }
    }

    #[test]
    fn too_many_parts() {
        assert!(partition_graph(&path(3), 4, 0).is_err());
        assert!(partition_graph(&path(3), 3, 0).is_ok());
    }

    #[test]
    fn disconnected_graph_gets_nonempty_parts() {
        let g = Graph::from_edges(7, [(0, 1), (2, 3), (3, 4), (5, 6)]);
        let labels = partition_graph(&g, 3, 1).unwrap();
        for j in 0..3 {
            assert!(labels.contains(&j));
        }
    }

    #[test]
    fn seeded_determinism() {
        let g = grid(20, 13);
        let a = partition_graph(&g, 3, 42).unwrap();
        let b = partition_graph(&g, 3, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            classify_and_permute(&g, &a, 3).unwrap(),
            classify_and_permute(&g, &b, 3).unwrap()
        );
    }

    proptest! {
        #[test]
        fn meta_invariants(nx in 2usize..12, ny in 2usize..12, p in 1usize..5, seed in 0u64..1000) {
            let g = grid(nx, ny);
            let n = nx * ny;
            prop_assume!(p <= n);
            let labels = partition_graph(&g, p, seed).unwrap();
            for j in 0..p {
                prop_assert!(labels.contains(&j));
            }
            let meta = classify_and_permute(&g, &labels, p).unwrap();
            prop_assert_eq!(meta.d_total() + meta.s_total(), n);
            for (new, &old) in meta.perm.iter().enumerate() {
                prop_assert_eq!(meta.iperm[old], new);
            }
            // interior rows couple only to their own interior and interface window
            let d = meta.d_total();
            for j in 0..p {
                let win = meta.window(j);
                for r in meta.interior_range(j) {
                    for &w in g.neighbors(meta.perm[r]) {
                        let c = meta.iperm[w];
                        let ok = meta.interior_range(j).contains(&c)
                            || (c >= d && win.contains(&(c - d)));
                        prop_assert!(ok);
                    }
                }
            }
        }
    }
}
