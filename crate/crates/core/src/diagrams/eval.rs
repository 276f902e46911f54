//! Generic sum-product evaluation of a [`DiagramGraph`] by variable
//! elimination over the space-time points of a window.

use super::bounds::Ingredients;
use super::graph::{DiagramGraph, LineFactor, Pin};
use crate::error::{Error, Result};

/// Largest intermediate table.
const MAX_TABLE: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EliminationOrder {
    MinDegree,
    Topological,
    ReverseTopological,
    Given(Vec<usize>),
}

#[derive(Debug, Clone)]
struct Factor {
    vars: Vec<usize>,
    data: Vec<f64>,
}

impl Factor {
    fn scalar(v: f64) -> Self {
        Factor {
            vars: Vec::new(),
            data: vec![v],
        }
    }
}

/// Product of `factors` over the union of their scopes, with `drop`
/// summed out (if given).
fn combine(factors: &[Factor], drop: Option<usize>, w: usize) -> Result<Factor> {
    let mut vars: Vec<usize> = Vec::new();
    for f in factors {
        for v in &f.vars {
            if !vars.contains(v) && Some(*v) != drop {
                vars.push(*v);
            }
        }
    }
    let mut all = vars.clone();
    if let Some(d) = drop {
        all.push(d);
    }
    let size = w
        .checked_pow(all.len() as u32)
        .filter(|s| *s <= MAX_TABLE)
        .ok_or(Error::CapExceeded {
            what: "diagram elimination table",
            value: usize::MAX.min(w.saturating_pow(all.len() as u32)),
            cap: MAX_TABLE,
        })?;
    // stride of each `all` position inside each factor
    let strides: Vec<Vec<usize>> = factors
        .iter()
        .map(|f| {
            all.iter()
                .map(|v| match f.vars.iter().position(|u| u == v) {
                    Some(p) => w.pow((f.vars.len() - 1 - p) as u32),
                    None => 0,
                })
                .collect()
        })
        .collect();
    let out_len = w.pow(vars.len() as u32);
    let mut out = vec![0.0; out_len];
    let k = all.len();
    let mut assign = vec![0usize; k];
    let mut idx: Vec<usize> = vec![0; factors.len()];
    for flat in 0..size {
        let mut prod = 1.0;
        for (fi, f) in factors.iter().enumerate() {
            prod *= f.data[idx[fi]];
            if prod == 0.0 {
                break;
            }
        }
        if prod != 0.0 {
            let o = if drop.is_some() { flat / w } else { flat };
            out[o] += prod;
        }
        // increment the mixed-radix counter, last position fastest
        let mut p = k;
        while p > 0 {
            p -= 1;
            assign[p] += 1;
            for (fi, s) in strides.iter().enumerate() {
                idx[fi] += s[p];
            }
            if assign[p] < w {
                break;
            }
            for (fi, s) in strides.iter().enumerate() {
                idx[fi] -= s[p] * w;
            }
            assign[p] = 0;
        }
    }
    Ok(Factor { vars, data: out })
}

fn edge_table(ing: &Ingredients, factor: LineFactor) -> Vec<f64> {
    let g = &ing.grid;
    let w = g.w;
    if factor == LineFactor::NotEqual {
        let mut t = vec![1.0; w * w];
        for a in 0..w {
            t[a * w + a] = 0.0;
        }
        return t;
    }
    let f: Vec<f64> = match factor {
        LineFactor::Tau => ing.tau.clone(),
        LineFactor::PStarTau => ing.at[1].clone(),
        LineFactor::LamEpsD => ing.lam_eps_d.clone(),
        LineFactor::LamEpsDStarTau => ing.at[2].clone(),
        LineFactor::Delta => ing.delta.clone(),
        LineFactor::TemporalBond => {
            let mut v = vec![0.0; w];
            if g.n_max >= 1 {
                v[g.s + g.window.origin()] = ing.temporal;
            }
            v
        }
        LineFactor::NotEqual => unreachable!(),
    };
    let mut t = vec![0.0; w * w];
    for a in 0..w {
        for b in 0..w {
            if let Some(r) = g.diff(a, b) {
                t[a * w + b] = f[r];
            }
        }
    }
    t
}

/// Value of the diagram as a function of the output point.
pub fn evaluate(
    graph: &DiagramGraph,
    ing: &Ingredients,
    order: &EliminationOrder,
) -> Result<Vec<f64>> {
    graph.validate()?;
    let g = &ing.grid;
    let w = g.w;
    let n = graph.n_vertices();
    let mut fixed: Vec<Option<usize>> = vec![None; n];
    let mut factors: Vec<Factor> = Vec::new();
    for (v, pin) in graph.pins.iter().enumerate() {
        match pin {
            Pin::Origin => fixed[v] = Some(g.origin()),
            Pin::Point(p) => fixed[v] = Some(*p),
            Pin::Slice(s) => {
                let data = (0..w).map(|a| f64::from(g.slice_of(a) == *s)).collect();
                factors.push(Factor {
                    vars: vec![v],
                    data,
                });
            }
            Pin::Output | Pin::Free => {}
        }
    }
    let mut cache: std::collections::HashMap<LineFactor, Vec<f64>> = Default::default();
    for e in &graph.edges {
        let t = cache
            .entry(e.factor)
            .or_insert_with(|| edge_table(ing, e.factor));
        let f = match (fixed[e.from], fixed[e.to]) {
            (Some(a), Some(b)) => Factor::scalar(t[a * w + b]),
            (Some(a), None) => Factor {
                vars: vec![e.to],
                data: t[a * w..(a + 1) * w].to_vec(),
            },
            (None, Some(b)) => Factor {
                vars: vec![e.from],
                data: (0..w).map(|a| t[a * w + b]).collect(),
            },
            (None, None) if e.from == e.to => Factor {
                vars: vec![e.from],
                data: (0..w).map(|a| t[a * w + a]).collect(),
            },
            (None, None) => Factor {
                vars: vec![e.from, e.to],
                data: t.clone(),
            },
        };
        factors.push(f);
    }

    let mut pending: Vec<usize> = match order {
        EliminationOrder::MinDegree => Vec::new(),
        EliminationOrder::Topological => graph.topological_order(),
        EliminationOrder::ReverseTopological => {
            let mut o = graph.topological_order();
            o.reverse();
            o
        }
        EliminationOrder::Given(o) => o.clone(),
    };
    pending.retain(|&v| v != 1 && fixed[v].is_none());
    let mut free: Vec<usize> = (0..n).filter(|&v| v != 1 && fixed[v].is_none()).collect();
    if *order != EliminationOrder::MinDegree {
        let mut a = pending.clone();
        a.sort_unstable();
        if a != free {
            return Err(Error::validation(
                "elimination order",
                "must list every summed vertex once",
            ));
        }
    }
    while !free.is_empty() {
        let v = if *order == EliminationOrder::MinDegree {
            *free
                .iter()
                .min_by_key(|&&v| {
                    let mut scope: Vec<usize> = Vec::new();
                    for f in factors.iter().filter(|f| f.vars.contains(&v)) {
                        for u in &f.vars {
                            if !scope.contains(u) {
                                scope.push(*u);
                            }
                        }
                    }
                    (scope.len(), v)
                })
                .unwrap()
        } else {
            pending.remove(0)
        };
        free.retain(|&u| u != v);
        let (with, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = rest;
        if with.is_empty() {
            return Err(Error::Invariant(format!("summed vertex {v} carries no factor")));
        }
        factors.push(combine(&with, Some(v), w)?);
    }
    let last = combine(&factors, None, w)?;
    let mut out = if last.vars.is_empty() {
        vec![last.data[0]; w]
    } else {
        last.data
    };
    for o in &mut out {
        *o *= graph.prefactor;
    }
    Ok(out)
}

/// Sum of [`evaluate`] over a list of graphs.
pub fn evaluate_sum(
    graphs: &[DiagramGraph],
    ing: &Ingredients,
    order: &EliminationOrder,
) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    let parts: Vec<Vec<f64>> = graphs
        .par_iter()
        .map(|g| evaluate(g, ing, order))
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; ing.grid.w];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    Ok(out)
}
