//! Symbolic diagrams: vertices are space-time summation variables and each
//! edge carries a factor of the displacement between its endpoints.
//!
//! Vertex 0 is the origin `(o, 0)` and vertex 1 the output point `x`.
//! Admissible lines are tagged by their `tau`-carrying edge and an optional
//! closing `lamEpsD` edge. Constructions split the tagged edge; the
//! endpoint-side piece stays tagged, so nested constructions act
//! innermost-first.

use super::bounds::{Line, Step, Variant, SAME_VERTEX_PAIRS, TWO_VERTEX_PAIRS};
use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineFactor {
    Tau,
    /// `phi` minus its delta part.
    PStarTau,
    LamEpsD,
    LamEpsDStarTau,
    Delta,
    /// The temporal bond `(c, c + eps)`, weight `1 - eps`.
    TemporalBond,
    /// Constraint `u != v`; not a time-ordered factor.
    NotEqual,
}

impl LineFactor {
    fn for_opening(a: Step) -> Self {
        match a {
            Step::Delta => LineFactor::Tau,
            Step::P => LineFactor::PStarTau,
            Step::LamEpsD => LineFactor::LamEpsDStarTau,
        }
    }

    pub fn carries_tau(self) -> bool {
        matches!(
            self,
            LineFactor::Tau | LineFactor::PStarTau | LineFactor::LamEpsDStarTau
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pin {
    Origin,
    Output,
    /// Fixed space-time point (grid index).
    Point(usize),
    /// Summed over one time slice.
    Slice(usize),
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub factor: LineFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineTag {
    pub generation: usize,
    pub edge: usize,
    pub closing: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramGraph {
    pub pins: Vec<Pin>,
    pub edges: Vec<Edge>,
    pub prefactor: f64,
    pub lines: Vec<LineTag>,
    /// Generation of the lines ending at the output.
    pub generation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// `y` is the diagram endpoint: the `2 lamEps P` convention.
    Endpoint,
    Vertex(usize),
    Point(usize),
    Slice(usize),
    Free,
}

impl DiagramGraph {
    fn bare() -> Self {
        DiagramGraph {
            pins: vec![Pin::Origin, Pin::Output],
            edges: Vec::new(),
            prefactor: 1.0,
            lines: Vec::new(),
            generation: 0,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.pins.len()
    }

    pub fn add_vertex(&mut self, pin: Pin) -> usize {
        self.pins.push(pin);
        self.pins.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, to: usize, factor: LineFactor) -> usize {
        self.edges.push(Edge { from, to, factor });
        self.edges.len() - 1
    }

    /// Tags of the lines a construction may act on.
    pub fn admissible(&self) -> Vec<usize> {
        (0..self.lines.len())
            .filter(|&i| self.lines[i].generation == self.generation)
            .collect()
    }

    /// Acyclicity of the time-ordered edges and consistency of the tags.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_vertices();
        if self.edges.iter().any(|e| e.from >= n || e.to >= n) {
            return Err(Error::Invariant("edge endpoint out of range".into()));
        }
        if self.topological_order().len() != n {
            return Err(Error::Invariant("diagram graph has a cycle".into()));
        }
        for t in &self.lines {
            let e = self.edges.get(t.edge).ok_or_else(|| {
                Error::Invariant("line tag points at a missing edge".into())
            })?;
            if !e.factor.carries_tau() {
                return Err(Error::Invariant("line tag on a tau-free edge".into()));
            }
            if let Some(c) = t.closing {
                let ce = self.edges[c];
                if ce.factor != LineFactor::LamEpsD || ce.from != e.to {
                    return Err(Error::Invariant("malformed closing edge".into()));
                }
            }
        }
        Ok(())
    }

    /// Kahn order of the time-ordered edges, lowest index first.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.n_vertices();
        let mut indeg = vec![0usize; n];
        for e in &self.edges {
            if e.factor != LineFactor::NotEqual {
                indeg[e.to] += 1;
            }
        }
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for e in &self.edges {
                if e.factor != LineFactor::NotEqual && e.from == v {
                    indeg[e.to] -= 1;
                    if indeg[e.to] == 0 {
                        ready.insert(e.to);
                    }
                }
            }
        }
        order
    }

    /// Appends a line `from -> to`; one graph per additive part.
    fn with_line(&self, from: usize, to: usize, l: Line) -> Vec<DiagramGraph> {
        let mut out = Vec::with_capacity(2);
        if let Some(h) = l.head {
            let mut g = self.clone();
            let f = match h {
                Step::Delta => LineFactor::Delta,
                Step::LamEpsD => LineFactor::LamEpsD,
                Step::P => unreachable!("no p-only heads occur"),
            };
            g.add_edge(from, to, f);
            out.push(g);
        }
        let mut g = self.clone();
        let kind = LineFactor::for_opening(l.a);
        let (edge, closing) = match l.b {
            Step::Delta => (g.add_edge(from, to, kind), None),
            _ => {
                let m = g.add_vertex(Pin::Free);
                let e = g.add_edge(from, m, kind);
                (e, Some(g.add_edge(m, to, LineFactor::LamEpsD)))
            }
        };
        g.lines.push(LineTag {
            generation: g.generation,
            edge,
            closing,
        });
        out.push(g);
        out
    }

    /// Moves the output to a fresh internal vertex `v` and returns
    /// `(graph, v)` with a new output vertex.
    fn open_output(&self) -> (DiagramGraph, usize) {
        let mut g = self.clone();
        let v = g.add_vertex(Pin::Free);
        for e in &mut g.edges {
            if e.from == 1 {
                e.from = v;
            }
            if e.to == 1 {
                e.to = v;
            }
        }
        g.generation += 1;
        (g, v)
    }
}

/// `P^(0)`: `delta` plus the two terms of `lamEps L(o, o; x)`.
pub fn p0_graphs() -> Vec<DiagramGraph> {
    let mut delta = DiagramGraph::bare();
    delta.add_edge(0, 1, LineFactor::Delta);
    let mut out = vec![delta];
    out.extend(same_vertex_terms(&DiagramGraph::bare(), 0));
    out
}

fn same_vertex_terms(base: &DiagramGraph, v: usize) -> Vec<DiagramGraph> {
    let mut out = Vec::new();
    for (l1, l2) in SAME_VERTEX_PAIRS {
        for g in base.with_line(v, 1, l1) {
            out.extend(g.with_line(v, 1, l2));
        }
    }
    out
}

fn two_vertex_terms(base: &DiagramGraph, v: usize, y: usize) -> Vec<DiagramGraph> {
    let mut b = base.clone();
    b.add_edge(v, y, LineFactor::NotEqual);
    let mut out = Vec::new();
    for (l1, l2) in TWO_VERTEX_PAIRS {
        for g in b.with_line(v, 1, l1) {
            out.extend(g.with_line(y, 1, l2));
        }
    }
    out
}

/// `2 lamEps P(v) L(v, v; x)` for one graph of `P`.
pub fn extend_same_vertex(g: &DiagramGraph) -> Vec<DiagramGraph> {
    let (mut b, v) = g.open_output();
    b.prefactor *= 2.0;
    same_vertex_terms(&b, v)
}

/// `P(v, B(y)) L(v, y; x)` for a constructed graph whose target is vertex
/// `y`.
pub fn extend_two_vertex(g: &DiagramGraph, y: usize) -> Vec<DiagramGraph> {
    let (b, v) = g.open_output();
    two_vertex_terms(&b, v, y)
}

/// Construction B on admissible line `line` of `g`.
pub fn apply_construction_b(
    g: &DiagramGraph,
    line: usize,
    target: Target,
    variant: Variant,
    params: &ModelParams,
) -> Result<Vec<DiagramGraph>> {
    let tag = *g
        .lines
        .get(line)
        .filter(|t| t.generation == g.generation)
        .ok_or_else(|| Error::NotAdmissible(format!("{line}")))?;
    if target == Target::Endpoint {
        let mut out = g.clone();
        out.prefactor *= params.lambda * params.eps;
        return Ok(vec![out]);
    }
    let mut out = Vec::new();
    let place = |h: &mut DiagramGraph| -> usize {
        match target {
            Target::Vertex(v) => v,
            Target::Point(p) => h.add_vertex(Pin::Point(p)),
            Target::Slice(s) => h.add_vertex(Pin::Slice(s)),
            Target::Free | Target::Endpoint => h.add_vertex(Pin::Free),
        }
    };
    if matches!(variant, Variant::Spat | Variant::Both) {
        let mut h = g.clone();
        let y = place(&mut h);
        let m = h.edges[tag.edge].to;
        h.edges[tag.edge].to = y;
        let e = h.add_edge(y, m, LineFactor::LamEpsDStarTau);
        h.lines[line] = LineTag { edge: e, ..tag };
        out.push(h);
    }
    if matches!(variant, Variant::Temp | Variant::Both) {
        let mut h = g.clone();
        let y = place(&mut h);
        let m = h.edges[tag.edge].to;
        let c = h.add_vertex(Pin::Free);
        let c1 = h.add_vertex(Pin::Free);
        h.edges[tag.edge].to = c;
        h.add_edge(c, y, LineFactor::LamEpsD);
        h.add_edge(c, c1, LineFactor::TemporalBond);
        let e = h.add_edge(c1, m, LineFactor::Tau);
        h.lines[line] = LineTag { edge: e, ..tag };
        out.push(h);
    }
    Ok(out)
}

/// One recursion step applied to a list of graphs.
pub fn next_generation(prev: &[DiagramGraph], params: &ModelParams) -> Result<Vec<DiagramGraph>> {
    let mut out = Vec::new();
    for g in prev {
        out.extend(extend_same_vertex(g));
        for l in g.admissible() {
            let mut h = g.clone();
            let y = h.add_vertex(Pin::Free);
            for c in apply_construction_b(&h, l, Target::Vertex(y), Variant::Both, params)? {
                out.extend(extend_two_vertex(&c, y));
            }
        }
    }
    Ok(out)
}

/// Graphs of `P^(0) ... P^(order)`.
pub fn build_p_graphs(order: usize, params: &ModelParams) -> Result<Vec<Vec<DiagramGraph>>> {
    let mut all = vec![p0_graphs()];
    for n in 1..=order {
        let next = next_generation(&all[n - 1], params)?;
        all.push(next);
    }
    Ok(all)
}

/// Graphs of `P~^(order; line_generation)`.
pub fn build_tilde_graphs(
    order: usize,
    line_generation: usize,
    params: &ModelParams,
) -> Result<Vec<DiagramGraph>> {
    if line_generation == 0 || line_generation > order {
        return Err(Error::validation(
            "line_generation",
            "must satisfy 1 <= n <= N",
        ));
    }
    let all = build_p_graphs(line_generation, params)?;
    let mut cur = Vec::new();
    for g in &all[line_generation] {
        for l in g.admissible() {
            cur.extend(apply_construction_b(g, l, Target::Free, Variant::Spat, params)?);
        }
    }
    for _ in line_generation..order {
        cur = next_generation(&cur, params)?;
    }
    Ok(cur)
}
