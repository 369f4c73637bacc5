//! Exact counting of connected induced subgraphs.

use rayon::prelude::*;

use crate::model::ConceptualGraph;

/// Largest graph the bitmask enumeration can represent.
pub const MAX_SUBSET_NODES: usize = 64;

/// Neighbour bitmask per node. Requires at most 64 nodes.
pub fn neighbour_masks(g: &ConceptualGraph) -> Vec<u64> {
    assert!(g.node_count() <= MAX_SUBSET_NODES);
    let mut masks = vec![0u64; g.node_count()];
    for key in g.edge_keys() {
        let (a, b) = key.endpoints();
        masks[a] |= 1 << b;
        masks[b] |= 1 << a;
    }
    masks
}

/// Number of node subsets of size at least `min_size` that induce a
/// connected subgraph.
///
/// Each connected set is generated once, rooted at its smallest node:
/// the recursion keeps `ext` equal to the neighbourhood of the current
/// set minus everything already decided against, and branches on the
/// lowest extension node. Roots are counted in parallel.
pub fn count_connected_subsets(neighbours: &[u64], min_size: usize) -> u64 {
    let n = neighbours.len();
    (0..n)
        .into_par_iter()
        .map(|root| {
            let below = if root == 0 { 0 } else { u64::MAX >> (64 - root) };
            let sub = 1u64 << root;
            let ext = neighbours[root] & !below & !sub;
            grow(neighbours, sub, 1, ext, below, min_size)
        })
        .sum()
}

fn grow(neighbours: &[u64], sub: u64, size: usize, mut ext: u64, mut excluded: u64, min_size: usize) -> u64 {
    let mut count = u64::from(size >= min_size);
    while ext != 0 {
        let w = ext.trailing_zeros() as usize;
        let bit = 1u64 << w;
        ext &= !bit;
        let next_sub = sub | bit;
        let next_ext = (ext | neighbours[w]) & !next_sub & !excluded;
        count += grow(neighbours, next_sub, size + 1, next_ext, excluded, min_size);
        excluded |= bit;
    }
    count
}

/// Whether the node set `mask` induces a connected subgraph.
pub fn mask_is_connected(neighbours: &[u64], mask: u64) -> bool {
    if mask == 0 {
        return true;
    }
    let mut seen = 1u64 << mask.trailing_zeros();
    let mut frontier = seen;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let fresh = neighbours[v] & mask & !seen;
        seen |= fresh;
        frontier |= fresh;
    }
    seen == mask
}

#[cfg(test)]
mod tests {
    use super::*;

    fn masks(n: usize, edges: &[(usize, usize)]) -> Vec<u64> {
        let mut m = vec![0u64; n];
        for &(a, b) in edges {
            m[a] |= 1 << b;
            m[b] |= 1 << a;
        }
        m
    }

    #[test]
    fn complete_triangle() {
        let m = masks(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(count_connected_subsets(&m, 2), 4);
        assert_eq!(count_connected_subsets(&m, 1), 7);
    }

    #[test]
    fn path_of_three() {
        let m = masks(3, &[(0, 1), (1, 2)]);
        assert_eq!(count_connected_subsets(&m, 2), 3);
        assert!(!mask_is_connected(&m, 0b101));
        assert!(mask_is_connected(&m, 0b111));
    }

    #[test]
    fn path_intervals() {
        // a path on n nodes has n(n-1)/2 connected subsets of size >= 2
        for n in 2..12 {
            let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            let m = masks(n, &edges);
            assert_eq!(count_connected_subsets(&m, 2), (n * (n - 1) / 2) as u64);
        }
    }

    #[test]
    fn complete_graph_counts_all_subsets() {
        let n = 10;
        let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let m = masks(n, &edges);
        assert_eq!(count_connected_subsets(&m, 2), (1u64 << n) - 1 - n as u64);
    }
}
