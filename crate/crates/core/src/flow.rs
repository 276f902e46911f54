//! Edge-disjoint path counting by unit-capacity max-flow.

use std::collections::VecDeque;

/// Number of edge-disjoint directed paths from `s` to `t`, counted up to
/// `limit` (the search stops as soon as `limit` augmenting paths exist).
///
/// Parallel edges are distinct edges. By convention `s == t` returns
/// `limit`.
pub fn edge_disjoint_paths(
    n_nodes: usize,
    edges: &[(usize, usize)],
    s: usize,
    t: usize,
    limit: usize,
) -> usize {
    if s == t {
        return limit;
    }
    // residual graph: edge 2i forward (cap 1), 2i+1 backward (cap 0)
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    let mut head = Vec::with_capacity(2 * edges.len());
    let mut cap = Vec::with_capacity(2 * edges.len());
    for (i, &(u, v)) in edges.iter().enumerate() {
        adj[u].push(2 * i);
        adj[v].push(2 * i + 1);
        head.push(v);
        cap.push(1u8);
        head.push(u);
        cap.push(0u8);
    }
    let mut flow = 0;
    let mut parent_edge = vec![usize::MAX; n_nodes];
    let mut queue = VecDeque::new();
    while flow < limit {
        parent_edge.iter_mut().for_each(|p| *p = usize::MAX);
        queue.clear();
        queue.push_back(s);
        let mut found = false;
        'bfs: while let Some(u) = queue.pop_front() {
            for &e in &adj[u] {
                let v = head[e];
                if cap[e] == 1 && v != s && parent_edge[v] == usize::MAX {
                    parent_edge[v] = e;
                    if v == t {
                        found = true;
                        break 'bfs;
                    }
                    queue.push_back(v);
                }
            }
        }
        if !found {
            break;
        }
        let mut v = t;
        while v != s {
            let e = parent_edge[v];
            cap[e] -= 1;
            cap[e ^ 1] += 1;
            v = head[e ^ 1];
        }
        flow += 1;
    }
    flow
}

/// A DAG of at most 64 nodes and 64 edges with per-node edge masks, for
/// allocation-free flow queries on many edge subsets.
#[derive(Debug, Clone)]
pub struct MaskGraph {
    tail: Vec<u8>,
    head: Vec<u8>,
    out: Vec<u64>,
    inn: Vec<u64>,
}

impl MaskGraph {
    pub fn new(n_nodes: usize, edges: &[(usize, usize)]) -> Self {
        assert!(n_nodes <= 64 && edges.len() <= 64);
        let mut out = vec![0u64; n_nodes];
        let mut inn = vec![0u64; n_nodes];
        for (i, &(u, v)) in edges.iter().enumerate() {
            out[u] |= 1 << i;
            inn[v] |= 1 << i;
        }
        MaskGraph {
            tail: edges.iter().map(|e| e.0 as u8).collect(),
            head: edges.iter().map(|e| e.1 as u8).collect(),
            out,
            inn,
        }
    }

    /// [`edge_disjoint_paths`] restricted to the edges set in `present`.
    pub fn disjoint_paths(&self, present: u64, s: usize, t: usize, limit: usize) -> usize {
        if s == t {
            return limit;
        }
        let mut used = 0u64;
        let mut flow = 0;
        // parent: edge index, high bit set when traversed backwards
        let mut parent = [0u8; 64];
        let mut queue = [0u8; 64];
        while flow < limit {
            let mut seen = 1u64 << s;
            let (mut qh, mut qt) = (0usize, 1usize);
            queue[0] = s as u8;
            let mut found = false;
            'bfs: while qh < qt {
                let u = queue[qh] as usize;
                qh += 1;
                let mut fwd = self.out[u] & present & !used;
                while fwd != 0 {
                    let e = fwd.trailing_zeros() as usize;
                    fwd &= fwd - 1;
                    let v = self.head[e] as usize;
                    if seen >> v & 1 == 0 {
                        seen |= 1 << v;
                        parent[v] = e as u8;
                        if v == t {
                            found = true;
                            break 'bfs;
                        }
                        queue[qt] = v as u8;
                        qt += 1;
                    }
                }
                let mut back = self.inn[u] & used;
                while back != 0 {
                    let e = back.trailing_zeros() as usize;
                    back &= back - 1;
                    let v = self.tail[e] as usize;
                    if seen >> v & 1 == 0 {
                        seen |= 1 << v;
                        parent[v] = e as u8 | 0x80;
                        queue[qt] = v as u8;
                        qt += 1;
                    }
                }
            }
            if !found {
                break;
            }
            let mut v = t;
            while v != s {
                let p = parent[v];
                let e = (p & 0x7f) as usize;
                if p & 0x80 == 0 {
                    used |= 1 << e;
                    v = self.tail[e] as usize;
                } else {
                    used &= !(1 << e);
                    v = self.head[e] as usize;
                }
            }
            flow += 1;
        }
        flow
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn masked_flow_matches_general_flow(
            raw in proptest::collection::vec((0usize..10, 1usize..4), 1..30),
            present in any::<u64>(),
            t in 1usize..12,
        ) {
            // forward edges u -> u + k keep the graph acyclic
            let edges: Vec<(usize, usize)> = raw.iter().map(|&(u, k)| (u, (u + k).min(11))).filter(|e| e.0 != e.1).collect();
            let g = MaskGraph::new(12, &edges);
            let kept: Vec<(usize, usize)> = edges.iter().enumerate().filter(|(i, _)| present >> i & 1 == 1).map(|(_, e)| *e).collect();
            for limit in 1..4 {
                prop_assert_eq!(g.disjoint_paths(present, 0, t, limit), edge_disjoint_paths(12, &kept, 0, t, limit));
            }
        }
    }

    #[test]
    fn diamond_has_two_paths() {
        let e = [(0, 1), (0, 2), (1, 3), (2, 3)];
        assert_eq!(edge_disjoint_paths(4, &e, 0, 3, 5), 2);
        assert_eq!(edge_disjoint_paths(4, &e, 0, 3, 1), 1);
    }

    #[test]
    fn shared_bond_blocks_second_path() {
        // two routes that both use 3 -> 4
        let e = [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)];
        assert_eq!(edge_disjoint_paths(5, &e, 0, 4, 2), 1);
    }

    #[test]
    fn shared_site_is_allowed() {
        // bond-disjoint paths may pass through the same site
        let e = [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (3, 5), (4, 6), (5, 6)];
        assert_eq!(edge_disjoint_paths(7, &e, 0, 6, 2), 2);
    }

    #[test]
    fn needs_flow_reversal() {
        // greedy first path 0-1-2-3 must be undone to find two
        let e = [(0, 1), (1, 2), (2, 3), (0, 2), (1, 3)];
        assert_eq!(edge_disjoint_paths(4, &e, 0, 3, 2), 2);
    }

    #[test]
    fn source_equals_sink() {
        assert_eq!(edge_disjoint_paths(1, &[], 0, 0, 2), 2);
        assert_eq!(edge_disjoint_paths(2, &[], 0, 1, 2), 0);
    }
}
