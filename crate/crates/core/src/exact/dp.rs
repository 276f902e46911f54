//! Exact two-point function by evolving the law of the occupied set
//! `C_n` over all subsets of the window.

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::model::ModelParams;

/// Largest window accepted by the subset chain by default.
pub const DEFAULT_SITE_CAP: usize = 20;

/// Law of `C_n` over subsets of the window sites, indexed by bitmask
/// (bit `i` is window index `i`).
#[derive(Debug, Clone)]
pub struct SubsetState {
    pub n_sites: usize,
    pub probs: Vec<f64>,
}

impl SubsetState {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `P(x in C_n)` for every site.
    pub fn marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_sites];
        for (mask, p) in self.probs.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            let mut m = mask;
            while m != 0 {
                let i = m.trailing_zeros() as usize;
                out[i] += p;
                m &= m - 1;
            }
        }
        out
    }
}

/// Markov chain of the occupied set restricted to the window: sites that
/// would be infected outside the window are dropped.
#[derive(Debug, Clone)]
pub struct SubsetChain {
    n_sites: usize,
    /// `(1 - p(x - y))` for every ordered pair, row `x`.
    survive: Vec<f64>,
}

impl SubsetChain {
    pub fn new(params: &ModelParams, cap: usize) -> Result<Self> {
        let w = params.window();
        let n_sites = w.size();
        if n_sites > cap {
            return Err(Error::CapExceeded {
                what: "subset-chain window sites",
                value: n_sites,
                cap,
            });
        }
        let offsets = w.offsets();
        let mut survive = vec![1.0; n_sites * n_sites];
        for x in 0..n_sites {
            for y in 0..n_sites {
                let z: Vec<i64> = offsets[x]
                    .iter()
                    .zip(&offsets[y])
                    .map(|(a, b)| a - b)
                    .collect();
                survive[x * n_sites + y] = 1.0 - params.bond_probability(&z);
            }
        }
        Ok(SubsetChain { n_sites, survive })
    }

    pub fn initial(&self, origin: usize) -> SubsetState {
        let mut probs = vec![0.0; 1 << self.n_sites];
        probs[1 << origin] = 1.0;
        SubsetState {
            n_sites: self.n_sites,
            probs,
        }
    }

    /// `q_x(S) = 1 - prod_{y in S} (1 - p(x - y))` for every site `x`.
    pub fn infection_probs(&self, set: usize) -> Vec<f64> {
        (0..self.n_sites)
            .map(|x| {
                let row = &self.survive[x * self.n_sites..(x + 1) * self.n_sites];
                let mut m = set;
                let mut prod = 1.0;
                while m != 0 {
                    let y = m.trailing_zeros() as usize;
                    prod *= row[y];
                    m &= m - 1;
                }
                1.0 - prod
            })
            .collect()
    }

    pub fn step(&self, state: &SubsetState) -> SubsetState {
        let mut next = vec![0.0; state.probs.len()];
        let mut branch: Vec<(usize, f64)> = Vec::new();
        for (set, &p) in state.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let q = self.infection_probs(set);
            branch.clear();
            branch.push((0, p));
            for (x, &qx) in q.iter().enumerate() {
                if qx <= 0.0 {
                    continue;
                }
                if qx >= 1.0 {
                    branch.iter_mut().for_each(|b| b.0 |= 1 << x);
                    continue;
                }
                let len = branch.len();
                for i in 0..len {
                    let (m, w) = branch[i];
                    branch[i].1 = w * (1.0 - qx);
                    branch.push((m | 1 << x, w * qx));
                }
            }
            for &(m, w) in &branch {
                next[m] += w;
            }
        }
        SubsetState {
            n_sites: self.n_sites,
            probs: next,
        }
    }
}

/// `tau_{n eps}(x)` for every slice up to the horizon and every window site.
pub fn exact_two_point_dp(params: &ModelParams) -> Result<SpaceTimeField> {
    exact_two_point_dp_capped(params, DEFAULT_SITE_CAP)
}

pub fn exact_two_point_dp_capped(params: &ModelParams, cap: usize) -> Result<SpaceTimeField> {
    let chain = SubsetChain::new(params, cap)?;
    let w = params.window();
    let mut tau = SpaceTimeField::zeros(params.d(), params.eps, params.n_max, params.radius);
    let mut state = chain.initial(w.origin());
    tau.slice_mut(0).copy_from_slice(&state.marginals());
    for n in 1..=params.n_max {
        state = chain.step(&state);
        let total = state.total();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invariant(format!(
                "subset law sums to {total} at slice {n}"
            )));
        }
        tau.slice_mut(n).copy_from_slice(&state.marginals());
    }
    Ok(tau)
}
