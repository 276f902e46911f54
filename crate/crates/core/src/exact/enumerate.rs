//! Brute-force sums over every occupied/vacant assignment of the bonds that
//! can be reached from `(o, 0)` inside the window.

use rayon::prelude::*;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::flow::MaskGraph;
use crate::model::ModelParams;

/// Largest bond count accepted for enumeration by default.
pub const DEFAULT_BOND_CAP: usize = 24;

const MAX_NODES: usize = 64;
const CHUNKS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub tail: usize,
    pub head: usize,
    pub prob: f64,
}

/// Space-time sites reachable from `(o, 0)` and the bonds between them.
///
/// Nodes are ordered by slice, so every bond points to a larger node index;
/// bonds are ordered by tail. A configuration is a bitmask over bonds.
#[derive(Debug, Clone)]
pub struct BondGraph {
    /// `(slice, window index)` per node; node 0 is `(0, o)`.
    pub nodes: Vec<(usize, usize)>,
    pub bonds: Vec<Bond>,
    index: HashMap<(usize, usize), usize>,
    flow: MaskGraph,
}

impl BondGraph {
    pub fn build(params: &ModelParams, cap: usize) -> Result<Self> {
        // configurations are u64 bitmasks
        let cap = cap.min(63);
        let w = params.window();
        let entries = params.bond_entries();
        let mut nodes = vec![(0usize, w.origin())];
        let mut index = HashMap::new();
        index.insert((0, w.origin()), 0);
        let mut bonds = Vec::new();
        let mut frontier = vec![w.origin()];
        for n in 0..params.n_max {
            let mut next: Vec<usize> = Vec::new();
            let mut pending = Vec::new();
            for &x in &frontier {
                for (z, p) in &entries {
                    if let Some(y) = w.shifted(x, z) {
                        pending.push((x, y, *p));
                        next.push(y);
                    }
                }
            }
            next.sort_unstable();
            next.dedup();
            for &y in &next {
                index.insert((n + 1, y), nodes.len());
                nodes.push((n + 1, y));
            }
            pending.sort_by_key(|&(x, y, _)| (index[&(n, x)], index[&(n + 1, y)]));
            for (x, y, p) in pending {
                bonds.push(Bond {
                    tail: index[&(n, x)],
                    head: index[&(n + 1, y)],
                    prob: p,
                });
            }
            if bonds.len() > cap {
                return Err(Error::CapExceeded {
                    what: "enumerated bond count",
                    value: bonds.len(),
                    cap,
                });
            }
            frontier = next;
        }
        if nodes.len() > MAX_NODES {
            return Err(Error::CapExceeded {
                what: "enumerated space-time sites",
                value: nodes.len(),
                cap: MAX_NODES,
            });
        }
        let edges: Vec<(usize, usize)> = bonds.iter().map(|b| (b.tail, b.head)).collect();
        Ok(BondGraph {
            flow: MaskGraph::new(nodes.len(), &edges),
            nodes,
            bonds,
            index,
        })
    }

    pub fn node(&self, slice: usize, site: usize) -> Option<usize> {
        self.index.get(&(slice, site)).copied()
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    pub fn weight(&self, config: u64) -> f64 {
        self.bonds
            .iter()
            .enumerate()
            .map(|(i, b)| {
                if config >> i & 1 == 1 {
                    b.prob
                } else {
                    1.0 - b.prob
                }
            })
            .product()
    }

    /// Sites reached from `start` (a node mask) using occupied bonds in
    /// `config`, skipping bonds that touch `blocked`.
    pub fn reach(&self, start: u64, config: u64, blocked: u64) -> u64 {
        let mut r = start;
        for (i, b) in self.bonds.iter().enumerate() {
            if config >> i & 1 == 1
                && r >> b.tail & 1 == 1
                && (blocked >> b.tail | blocked >> b.head) & 1 == 0
            {
                r |= 1 << b.head;
            }
        }
        r
    }

    /// Whether `s` has two bond-disjoint occupied paths to `t`.
    pub fn doubly_connected(&self, config: u64, s: usize, t: usize) -> bool {
        self.flow.disjoint_paths(config, s, t, 2) >= 2
    }

    /// Same relation decided without max-flow: `s -> t` and no occupied bond
    /// is pivotal (by Menger, a single-bond cut is the only obstruction).
    pub fn doubly_connected_by_pivots(&self, config: u64, s: usize, t: usize) -> bool {
        if s == t {
            return true;
        }
        if self.reach(1 << s, config, 0) >> t & 1 == 0 {
            return false;
        }
        (0..self.bonds.len())
            .filter(|i| config >> i & 1 == 1)
            .all(|i| self.reach(1 << s, config & !(1 << i), 0) >> t & 1 == 1)
    }

    /// Sums `f(config)` weighted by configuration probability into a
    /// per-node accumulator. Chunks are reduced in a fixed order.
    fn accumulate<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(u64, f64, &mut [f64]) + Sync,
    {
        let total: u64 = 1 << self.bonds.len();
        let chunk = total.div_ceil(CHUNKS as u64).max(1);
        let n_chunks = total.div_ceil(chunk);
        let parts: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = vec![0.0; self.nodes.len()];
                let lo = c * chunk;
                let hi = (lo + chunk).min(total);
                for config in lo..hi {
                    let w = self.weight(config);
                    if w != 0.0 {
                        f(config, w, &mut acc);
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; self.nodes.len()];
        for p in parts {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        out
    }

    fn to_field(&self, params: &ModelParams, per_node: &[f64]) -> SpaceTimeField {
        let mut f = SpaceTimeField::zeros(params.d(), params.eps, params.n_max, params.radius);
        for (i, &(n, x)) in self.nodes.iter().enumerate() {
            f.slice_mut(n)[x] = per_node[i];
        }
        f
    }
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

pub fn brute_force_two_point(params: &ModelParams) -> Result<SpaceTimeField> {
    brute_force_two_point_capped(params, DEFAULT_BOND_CAP)
}

pub fn brute_force_two_point_capped(params: &ModelParams, cap: usize) -> Result<SpaceTimeField> {
    let g = BondGraph::build(params, cap)?;
    let acc = g.accumulate(|config, w, acc| {
        for v in bits(g.reach(1, config, 0)) {
            acc[v] += w;
        }
    });
    Ok(g.to_field(params, &acc))
}

/// `pi^(N)` for `N` in `{0, 1}`.
pub fn brute_force_pi_n(params: &ModelParams, order: usize) -> Result<SpaceTimeField> {
    brute_force_pi_n_capped(params, order, DEFAULT_BOND_CAP)
}

pub fn brute_force_pi_n_capped(
    params: &ModelParams,
    order: usize,
    cap: usize,
) -> Result<SpaceTimeField> {
    let g = BondGraph::build(params, cap)?;
    let acc = match order {
        0 => g.accumulate(|config, w, acc| {
            for v in bits(g.reach(1, config, 0)) {
                if g.doubly_connected(config, 0, v) {
                    acc[v] += w;
                }
            }
        }),
        1 => g.accumulate(|config, w, acc| pi1_config(&g, config, w, acc)),
        _ => {
            return Err(Error::validation(
                "N",
                format!("brute force supports N in {{0, 1}}, got {order}"),
            ))
        }
    };
    Ok(g.to_field(params, &acc))
}

/// Nodes `y` with `v` connected to `y` through `c`: every occupied path
/// from `v` to `y` has a bond with an endpoint in `c`. For `y = v` the
/// empty path decides, so `v` counts exactly when `v` lies in `c`.
fn through(g: &BondGraph, config: u64, v: usize, c: u64) -> u64 {
    let all = g.reach(1 << v, config, 0);
    if c >> v & 1 == 1 {
        return all;
    }
    let avoid = g.reach(1 << v, config, c);
    all & !avoid
}

/// Contribution of one configuration to `pi^(1)`: sum over bonds `b` of
/// `{o => b_} cap {b occupied} cap E'(b^-, x; C~^b(o))`.
fn pi1_config(g: &BondGraph, config: u64, w: f64, acc: &mut [f64]) {
    let reached = g.reach(1, config, 0);
    let double: u64 = bits(reached)
        .filter(|&u| g.doubly_connected(config, 0, u))
        .fold(0, |m, u| m | 1 << u);
    for (i, b) in g.bonds.iter().enumerate() {
        if config >> i & 1 == 0 || double >> b.tail & 1 == 0 {
            continue;
        }
        let c = g.reach(1, config & !(1 << i), 0);
        let v = b.head;
        let thr = through(g, config, v, c);
        if thr == 0 {
            continue;
        }
        let from_v = g.reach(1 << v, config, 0);
        // targets y for which some pivotal bond b' of v -> y has v through C to b'_
        let mut bad = 0u64;
        for (j, b2) in g.bonds.iter().enumerate() {
            if config >> j & 1 == 0 || from_v >> b2.tail & 1 == 0 {
                continue;
            }
            if thr >> b2.tail & 1 == 0 {
                continue;
            }
            let without = g.reach(1 << v, config & !(1 << j), 0);
            bad |= from_v & !without;
        }
        for y in bits(thr & !bad) {
            acc[y] += w;
        }
    }
}
