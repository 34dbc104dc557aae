//! Undirected adjacency graphs and breadth-first utilities shared by the
//! partitioner and the envelope ordering.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::{CsrMatrix, SparseSym};
use std::collections::VecDeque;

/// Symmetric adjacency structure without self loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    xadj: Vec<usize>,
    adjncy: Vec<usize>,
}

impl Graph {
    /// Builds from an edge list; duplicates and self loops are dropped and
    /// both directions are inserted.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, j) in edges {
            if i != j {
                lists[i].push(j);
                lists[j].push(i);
            }
        }
        let mut xadj = Vec::with_capacity(n + 1);
        xadj.push(0);
        let mut adjncy = Vec::new();
        for l in &mut lists {
            l.sort_unstable();
            l.dedup();
            adjncy.extend_from_slice(l);
            xadj.push(adjncy.len());
        }
        Self { xadj, adjncy }
    }

    /// Off-diagonal pattern of a structurally symmetric matrix.
    pub fn from_pattern<T: Scalar>(a: &CsrMatrix<T>) -> Self {
        let n = a.nrows();
        let mut xadj = Vec::with_capacity(n + 1);
        xadj.push(0);
        let mut adjncy = Vec::with_capacity(a.nnz());
        for i in 0..n {
            adjncy.extend(a.row(i).0.iter().copied().filter(|&j| j != i));
            xadj.push(adjncy.len());
        }
        Self { xadj, adjncy }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.xadj.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjncy[self.xadj[v]..self.xadj[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.xadj[v + 1] - self.xadj[v]
    }

    pub fn num_edges(&self) -> usize {
        self.adjncy.len() / 2
    }
}

/// Graph of `|A| + |M|`: an edge `(i, j)`, `i != j`, wherever either matrix
/// stores a nonzero.
pub fn build_adjacency(a: &SparseSym, m: &SparseSym) -> Result<Graph> {
    if a.n() != m.n() {
        return Err(Error::Dimension(format!(
            "A is {} but M is {}",
            a.n(),
            m.n()
        )));
    }
    let n = a.n();
    let mut xadj = Vec::with_capacity(n + 1);
    xadj.push(0);
    let mut adjncy = Vec::with_capacity(a.nnz().max(m.nnz()));
    for i in 0..n {
        let (ca, va) = a.csr().row(i);
        let (cm, vm) = m.csr().row(i);
        let (mut p, mut q) = (0, 0);
        while p < ca.len() || q < cm.len() {
            let ja = ca.get(p).copied().unwrap_or(usize::MAX);
            let jm = cm.get(q).copied().unwrap_or(usize::MAX);
            let (j, nz) = if ja < jm {
                p += 1;
                (ja, va[p - 1] != 0.0)
            } else if jm < ja {
                q += 1;
                (jm, vm[q - 1] != 0.0)
            } else {
                p += 1;
                q += 1;
                (ja, va[p - 1] != 0.0 || vm[q - 1] != 0.0)
            };
            if nz && j != i {
                adjncy.push(j);
            }
        }
        xadj.push(adjncy.len());
    }
    Ok(Graph { xadj, adjncy })
}

/// Result of a breadth-first sweep restricted to a vertex subset.
#[derive(Debug, Clone)]
pub(crate) struct LevelStructure {
    /// Vertices in visiting order.
    pub order: Vec<usize>,
    /// `level_ptr[l]..level_ptr[l + 1]` indexes `order` for level `l`.
    pub level_ptr: Vec<usize>,
}

impl LevelStructure {
    pub fn depth(&self) -> usize {
        self.level_ptr.len() - 1
    }

    pub fn level(&self, l: usize) -> &[usize] {
        &self.order[self.level_ptr[l]..self.level_ptr[l + 1]]
    }
}

/// BFS from `start` over vertices with `mask[v] == tag`. `seen` is scratch
/// space of length `n` that must be all-`false` on entry and is restored.
pub(crate) fn bfs_levels(
    g: &Graph,
    start: usize,
    mask: &[u32],
    tag: u32,
    seen: &mut [bool],
) -> LevelStructure {
    let mut order = vec![start];
    let mut level_ptr = vec![0, 1];
    seen[start] = true;
    let mut head = 0;
    loop {
        let end = order.len();
        while head < end {
            let v = order[head];
            head += 1;
            for &w in g.neighbors(v) {
                if !seen[w] && mask[w] == tag {
                    seen[w] = true;
                    order.push(w);
                }
            }
        }
        if order.len() == end {
            break;
        }
        level_ptr.push(order.len());
    }
    for &v in &order {
        seen[v] = false;
    }
    LevelStructure { order, level_ptr }
}

/// George-Liu pseudo-peripheral vertex search starting from `start`.
pub(crate) fn pseudo_peripheral(
    g: &Graph,
    start: usize,
    mask: &[u32],
    tag: u32,
    seen: &mut [bool],
) -> (usize, LevelStructure) {
    let mut root = start;
    let mut ls = bfs_levels(g, root, mask, tag, seen);
    loop {
        let last = ls.level(ls.depth() - 1);
        let cand = *last
            .iter()
            .min_by_key(|&&v| (g.degree(v), v))
            .expect("last level is never empty");
        let ls2 = bfs_levels(g, cand, mask, tag, seen);
        if ls2.depth() > ls.depth() {
            root = cand;
            ls = ls2;
        } else {
            return (root, ls);
        }
    }
}

/// Connected components of the subgraph induced by `mask[v] == tag`, each
/// listed in BFS order from its smallest vertex; components ordered by that
/// vertex.
pub(crate) fn components(g: &Graph, vertices: &[usize], mask: &[u32], tag: u32) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.n()];
    let mut sorted = vertices.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    for &v in &sorted {
        if seen[v] {
            continue;
        }
        let mut comp = vec![v];
        seen[v] = true;
        let mut q = VecDeque::from([v]);
        while let Some(x) = q.pop_front() {
            for &w in g.neighbors(x) {
                if !seen[w] && mask[w] == tag {
                    seen[w] = true;
                    comp.push(w);
                    q.push_back(w);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Reverse Cuthill-McKee ordering, `perm[new] = old`.
pub fn reverse_cuthill_mckee(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mask = vec![0u32; n];
    let mut scratch = vec![false; n];
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let all: Vec<usize> = (0..n).collect();
    for comp in components(g, &all, &mask, 0) {
        let seed = *comp.iter().min_by_key(|&&v| (g.degree(v), v)).unwrap();
        let (root, _) = pseudo_peripheral(g, seed, &mask, 0, &mut scratch);
        let base = order.len();
        order.push(root);
        placed[root] = true;
        let mut head = base;
        let mut nbrs = Vec::new();
        while head < order.len() {
            let v = order[head];
            head += 1;
            nbrs.clear();
            nbrs.extend(g.neighbors(v).iter().copied().filter(|&w| !placed[w]));
            nbrs.sort_by_key(|&w| (g.degree(w), w));
            for &w in &nbrs {
                placed[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_fd_laplacian;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1)))
    }

    #[test]
    fn union_semantics() {
        let tri = SparseSym::from_triangle(
            4,
            [
                (0, 0, 2.0),
                (1, 0, 1.0),
                (1, 1, 2.0),
                (2, 1, 1.0),
                (2, 2, 2.0),
                (3, 2, 1.0),
                (3, 3, 2.0),
            ],
        )
        .unwrap();
        let diag = SparseSym::identity(4);
        assert_eq!(build_adjacency(&tri, &diag).unwrap(), path(4));
        assert_eq!(build_adjacency(&diag, &tri).unwrap(), path(4));
    }

    #[test]
    fn grid_edge_count() {
        let a = gen_fd_laplacian(3, 3).unwrap();
        let g = build_adjacency(&a, &SparseSym::identity(9)).unwrap();
        assert_eq!(g.num_edges(), 12);
    }

    #[test]
    fn adjacency_dimension_mismatch() {
        assert!(build_adjacency(&SparseSym::identity(3), &SparseSym::identity(4)).is_err());
    }

    #[test]
    fn peripheral_vertex_of_path_is_an_end() {
        let g = path(9);
        let mask = vec![0; 9];
        let mut seen = vec![false; 9];
        let (root, ls) = pseudo_peripheral(&g, 4, &mask, 0, &mut seen);
        assert!(root == 0 || root == 8);
        assert_eq!(ls.depth(), 9);
    }

    #[test]
    fn rcm_is_a_permutation_with_small_bandwidth() {
        let a = gen_fd_laplacian(12, 5).unwrap();
        let g = Graph::from_pattern(a.csr());
        let perm = reverse_cuthill_mckee(&g);
        let mut inv = vec![usize::MAX; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        assert!(inv.iter().all(|&x| x != usize::MAX));
        let bw = (0..g.n())
            .flat_map(|v| g.neighbors(v).iter().map(move |&w| (v, w)))
            .map(|(v, w)| inv[v].abs_diff(inv[w]))
            .max()
            .unwrap();
        assert!(bw <= 6, "bandwidth {bw}");
    }
}
