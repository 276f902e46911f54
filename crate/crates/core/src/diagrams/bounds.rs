//! Dynamic-programming evaluation of the diagram bounds.
//!
//! Every generation of `P^(N)` is a sum of products of two lines ending at
//! `x`. The lines start either both at one vertex `v` (weight `cA(v)`) or at
//! two distinct vertices `v`, `y` (weight `cB(v, y)`). A generation is
//! therefore fixed by `(cA, cB)`:
//!
//! * `P^(0)`: `cA = delta_o`, `cB = 0`, plus the extra `delta_{o,x}`;
//! * `P^(N)`: `cA = 2 P^(N-1)`, `cB = Q^(N-1)`,
//!
//! where `Q^(N)(x, y) = sum_l P^(N)(x, B^l(y))` sums Constructions B (both
//! variants) over the `N`-th lines, for `y != x`. The `y = v` term of the
//! recursion is the endpoint convention and sits in `cA`.
//!
//! A line is `head(X) + (A * tau * B)(X)` with `A in {delta, p, lamEpsD}`,
//! `B in {delta, lamEpsD}` and a bond-only `head` that no construction
//! touches.

use rayon::prelude::*;

use super::grid::StGrid;
use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::model::ModelParams;

/// Largest supported `N`.
pub const MAX_ORDER: usize = 3;
/// Largest number of space-time points; tables are `W x W`.
pub const MAX_POINTS: usize = 1600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    Delta,
    P,
    LamEpsD,
}

impl Step {
    fn index(self) -> usize {
        match self {
            Step::Delta => 0,
            Step::P => 1,
            Step::LamEpsD => 2,
        }
    }
}

/// `head + A * tau * B`; `b` is `Delta` or `LamEpsD`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Line {
    pub head: Option<Step>,
    pub a: Step,
    pub b: Step,
}

const fn line(head: Option<Step>, a: Step, b: Step) -> Line {
    Line { head, a, b }
}

/// Line pairs from a single vertex: `lamEpsL(v, v; x)`.
pub const SAME_VERTEX_PAIRS: [(Line, Line); 2] = [
    (
        line(None, Step::LamEpsD, Step::Delta),
        line(None, Step::Delta, Step::LamEpsD),
    ),
    (
        line(None, Step::LamEpsD, Step::LamEpsD),
        line(None, Step::Delta, Step::Delta),
    ),
];

/// Line pairs of `L(v, y; x)`, `v != y`; the first line starts at `v`.
pub const TWO_VERTEX_PAIRS: [(Line, Line); 2] = [
    (
        line(Some(Step::Delta), Step::P, Step::Delta),
        line(None, Step::Delta, Step::LamEpsD),
    ),
    (
        line(Some(Step::LamEpsD), Step::P, Step::LamEpsD),
        line(None, Step::Delta, Step::Delta),
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Spat,
    Temp,
    Both,
}

/// The building blocks: one-step functions, `A * tau * B` and the
/// construction tables.
pub struct Ingredients {
    pub grid: StGrid,
    pub tau: Vec<f64>,
    pub delta: Vec<f64>,
    pub p: Vec<f64>,
    pub lam_eps_d: Vec<f64>,
    /// Unscaled `D` at time `eps`.
    pub d: Vec<f64>,
    /// `A * tau`, indexed by `Step::index`.
    pub at: [Vec<f64>; 3],
    /// `A * tau * B`, `[A][B]` with `B` in `{delta, lamEpsD}`.
    pub atb: [[Vec<f64>; 2]; 3],
    pub temporal: f64,
}

fn b_slot(b: Step) -> usize {
    match b {
        Step::Delta => 0,
        Step::LamEpsD => 1,
        Step::P => panic!("p is not a closing step"),
    }
}

impl Ingredients {
    pub fn new(tau: &SpaceTimeField, params: &ModelParams) -> Result<Self> {
        let l = params.kernel.range();
        if tau.radius < l * tau.n_max {
            return Err(Error::WindowTooSmall {
                radius: tau.radius,
                required: l * tau.n_max,
                slices: tau.n_max,
            });
        }
        if tau.d != params.d() || (tau.eps - params.eps).abs() > 1e-15 {
            return Err(Error::Mismatch(format!(
                "tau field (d={}, eps={}) vs model (d={}, eps={})",
                tau.d,
                tau.eps,
                params.d(),
                params.eps
            )));
        }
        let grid = StGrid::new(tau.d, tau.radius, tau.n_max, tau.eps);
        if grid.w > MAX_POINTS {
            return Err(Error::CapExceeded {
                what: "diagram space-time points",
                value: grid.w,
                cap: MAX_POINTS,
            });
        }
        let lam_eps = params.lambda * params.eps;
        let d_entries: Vec<(Vec<i64>, f64)> = params.kernel.entries().to_vec();
        let scaled: Vec<(Vec<i64>, f64)> =
            d_entries.iter().map(|(z, m)| (z.clone(), lam_eps * m)).collect();
        let tau_v = tau.data.clone();
        let delta = grid.delta();
        let p = grid.bond_function(&params.bond_entries());
        let lam_eps_d = grid.bond_function(&scaled);
        let d = grid.bond_function(&d_entries);
        let at = [
            tau_v.clone(),
            grid.conv(&p, &tau_v),
            grid.conv(&lam_eps_d, &tau_v),
        ];
        let atb = [0, 1, 2].map(|a| {
            let with_d = grid.conv(&at[a], &lam_eps_d);
            [at[a].clone(), with_d]
        });
        Ok(Ingredients {
            tau: tau_v,
            delta,
            p,
            lam_eps_d,
            d,
            at,
            atb,
            temporal: 1.0 - params.eps,
            grid,
        })
    }

    fn step_fn(&self, s: Step) -> &[f64] {
        match s {
            Step::Delta => &self.delta,
            Step::P => &self.p,
            Step::LamEpsD => &self.lam_eps_d,
        }
    }

    /// `head(X) + (A * tau * B)(X)`.
    pub fn line_value(&self, l: Line) -> Vec<f64> {
        let mut v = self.atb[l.a.index()][b_slot(l.b)].clone();
        if let Some(h) = l.head {
            for (o, hv) in v.iter_mut().zip(self.step_fn(h)) {
                *o += hv;
            }
        }
        v
    }

    /// `sum_Y spat(X, Y) = (A * tau * lamEpsD * tau * B)(X)`.
    pub fn spat_summed(&self, l: Line) -> Vec<f64> {
        self.grid
            .conv(&self.at[l.a.index()], &self.atb[2][b_slot(l.b)])
    }

    /// Construction table `T[X * W + Y]` for a line started at the origin,
    /// with `X` the displacement to `x` and `Y` the one to `y`.
    pub fn construction_table(&self, l: Line, variant: Variant) -> Vec<f64> {
        let g = &self.grid;
        let w = g.w;
        let at = &self.at[l.a.index()];
        let dtb = &self.atb[2][b_slot(l.b)];
        let tb = &self.atb[0][b_slot(l.b)];
        let bonds: Vec<(Vec<i64>, f64)> = (0..g.s)
            .filter_map(|i| {
                let m = if g.n_max >= 1 { self.lam_eps_d[g.s + i] } else { 0.0 };
                (m != 0.0).then(|| (g.site_coords(i).to_vec(), m))
            })
            .collect();
        let spat = matches!(variant, Variant::Spat | Variant::Both);
        let temp = matches!(variant, Variant::Temp | Variant::Both);
        let mut out = vec![0.0; w * w];
        out.par_chunks_mut(w).enumerate().for_each(|(x, row)| {
            for (y, o) in row.iter_mut().enumerate() {
                if y == x {
                    continue;
                }
                let mut acc = 0.0;
                if spat && at[y] != 0.0 {
                    if let Some(r) = g.diff(y, x) {
                        acc += at[y] * dtb[r];
                    }
                }
                if temp {
                    for (z, m) in &bonds {
                        let nz: Vec<i64> = z.iter().map(|c| -c).collect();
                        let Some(c) = g.shift(y, -1, &nz) else { continue };
                        if at[c] == 0.0 {
                            continue;
                        }
                        let Some(c1) = g.shift(c, 1, &vec![0; g.d]) else { continue };
                        if let Some(r) = g.diff(c1, x) {
                            acc += at[c] * m * self.temporal * tb[r];
                        }
                    }
                }
                *o = acc;
            }
        });
        out
    }

    /// `C(X, Y) = sum_Z (A * tau)(Z) B_{lamEpsD,B}(X - Z, Y - Z)`: a
    /// construction on the endpoint piece left by a spatial construction.
    pub fn nested_table(&self, l: Line, inner: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let w = g.w;
        let at = &self.at[l.a.index()];
        let support: Vec<usize> = (0..w).filter(|&z| at[z] != 0.0).collect();
        let mut out = vec![0.0; w * w];
        out.par_chunks_mut(w).enumerate().for_each(|(x, row)| {
            for &z in &support {
                let Some(xz) = g.diff(z, x) else { continue };
                let base = &inner[xz * w..(xz + 1) * w];
                for (y, o) in row.iter_mut().enumerate() {
                    if let Some(yz) = g.diff(z, y) {
                        *o += at[z] * base[yz];
                    }
                }
            }
        });
        out
    }
}

/// Contraction primitives over `(cA, cB)`.
struct Contract<'a> {
    g: &'a StGrid,
}

impl Contract<'_> {
    /// `out(x) += sum_v cA(v) f1(x - v) f2(x - v)`.
    fn pair_a(&self, ca: &[f64], f1: &[f64], f2: &[f64], out: &mut [f64]) {
        let g = self.g;
        for (v, c) in ca.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            for (x, o) in out.iter_mut().enumerate() {
                if let Some(r) = g.diff(v, x) {
                    *o += c * f1[r] * f2[r];
                }
            }
        }
    }

    /// `H(v, x) = sum_y cB(v, y) f(x - y)`.
    fn fold_second(&self, cb: &[f64], f: &[f64]) -> Vec<f64> {
        let g = self.g;
        let w = g.w;
        let mut h = vec![0.0; w * w];
        h.par_chunks_mut(w).enumerate().for_each(|(v, row)| {
            for y in 0..w {
                let c = cb[v * w + y];
                if c == 0.0 {
                    continue;
                }
                for (x, o) in row.iter_mut().enumerate() {
                    if let Some(r) = g.diff(y, x) {
                        *o += c * f[r];
                    }
                }
            }
        });
        h
    }

    /// `H(y, x) = sum_v cB(v, y) f(x - v)`.
    fn fold_first(&self, cb: &[f64], f: &[f64]) -> Vec<f64> {
        let w = self.g.w;
        let mut t = vec![0.0; w * w];
        for v in 0..w {
            for y in 0..w {
                t[y * w + v] = cb[v * w + y];
            }
        }
        self.fold_second(&t, f)
    }

    /// `out(x) += sum_{v,y} cB(v, y) f1(x - v) f2(x - y)`.
    fn pair_b(&self, cb: &[f64], f1: &[f64], f2: &[f64], out: &mut [f64]) {
        let g = self.g;
        let w = g.w;
        let h = self.fold_second(cb, f2);
        for v in 0..w {
            for (x, o) in out.iter_mut().enumerate() {
                let hv = h[v * w + x];
                if hv == 0.0 {
                    continue;
                }
                if let Some(r) = g.diff(v, x) {
                    *o += f1[r] * hv;
                }
            }
        }
    }

    /// `out(x, y') += sum_u H(u, x) t(x - u, y' - u)`.
    fn spread(&self, h: &[f64], t: &[f64], out: &mut [f64]) {
        let g = self.g;
        let w = g.w;
        out.par_chunks_mut(w).enumerate().for_each(|(x, row)| {
            for u in 0..w {
                let hv = h[u * w + x];
                if hv == 0.0 {
                    continue;
                }
                let Some(xu) = g.diff(u, x) else { continue };
                let base = &t[xu * w..(xu + 1) * w];
                for (y, o) in row.iter_mut().enumerate() {
                    if let Some(yu) = g.diff(u, y) {
                        *o += hv * base[yu];
                    }
                }
            }
        });
    }

    /// `out(x, y') += sum_v cA(v) f(x - v) t(x - v, y' - v)`.
    fn q_a(&self, ca: &[f64], f: &[f64], t: &[f64], out: &mut [f64]) {
        let g = self.g;
        let w = g.w;
        let mut h = vec![0.0; w * w];
        for (v, c) in ca.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            for x in 0..w {
                if let Some(r) = g.diff(v, x) {
                    h[v * w + x] = c * f[r];
                }
            }
        }
        self.spread(&h, t, out);
    }

    /// `f` at `v`, table at `y`.
    fn q_b_at_y(&self, cb: &[f64], f_v: &[f64], t_y: &[f64], out: &mut [f64]) {
        let h = self.fold_first(cb, f_v);
        self.spread(&h, t_y, out);
    }

    /// `f` at `y`, table at `v`.
    fn q_b_at_v(&self, cb: &[f64], f_y: &[f64], t_v: &[f64], out: &mut [f64]) {
        let h = self.fold_second(cb, f_y);
        self.spread(&h, t_v, out);
    }
}

/// Per-line data for one evaluation.
struct LineData {
    full: Vec<f64>,
    summed: Vec<f64>,
    table: Vec<f64>,
    nested: Option<Vec<f64>>,
}

struct Evaluator<'a> {
    ing: &'a Ingredients,
    same: Vec<(LineData, LineData)>,
    two: Vec<(LineData, LineData)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Plain,
    /// This generation carries the summed spatial construction.
    Marked,
}

impl<'a> Evaluator<'a> {
    fn new(ing: &'a Ingredients, with_nested: bool) -> Self {
        let data = |l: Line| {
            let table = ing.construction_table(l, Variant::Both);
            let nested = with_nested.then(|| {
                let inner = ing.construction_table(
                    Line {
                        head: None,
                        a: Step::LamEpsD,
                        b: l.b,
                    },
                    Variant::Both,
                );
                ing.nested_table(l, &inner)
            });
            LineData {
                full: ing.line_value(l),
                summed: ing.spat_summed(l),
                table,
                nested,
            }
        };
        let same = SAME_VERTEX_PAIRS
            .iter()
            .map(|(a, b)| (data(*a), data(*b)))
            .collect();
        let two = TWO_VERTEX_PAIRS
            .iter()
            .map(|(a, b)| (data(*a), data(*b)))
            .collect();
        Evaluator { ing, same, two }
    }

    /// One generation: returns `(P, Q)`.
    fn generation(&self, ca: &[f64], cb: Option<&[f64]>, mode: Mode) -> (Vec<f64>, Vec<f64>) {
        let g = &self.ing.grid;
        let w = g.w;
        let c = Contract { g };
        let mut p = vec![0.0; w];
        let mut q = vec![0.0; w * w];
        for (l1, l2) in &self.same {
            match mode {
                Mode::Plain => {
                    c.pair_a(ca, &l1.full, &l2.full, &mut p);
                    c.q_a(ca, &l1.full, &l2.table, &mut q);
                    c.q_a(ca, &l2.full, &l1.table, &mut q);
                }
                Mode::Marked => {
                    c.pair_a(ca, &l1.summed, &l2.full, &mut p);
                    c.pair_a(ca, &l1.full, &l2.summed, &mut p);
                    c.q_a(ca, &l1.summed, &l2.table, &mut q);
                    c.q_a(ca, &l2.full, l1.nested.as_ref().unwrap(), &mut q);
                    c.q_a(ca, &l2.summed, &l1.table, &mut q);
                    c.q_a(ca, &l1.full, l2.nested.as_ref().unwrap(), &mut q);
                }
            }
        }
        if let Some(cb) = cb {
            for (l1, l2) in &self.two {
                match mode {
                    Mode::Plain => {
                        c.pair_b(cb, &l1.full, &l2.full, &mut p);
                        c.q_b_at_y(cb, &l1.full, &l2.table, &mut q);
                        c.q_b_at_v(cb, &l2.full, &l1.table, &mut q);
                    }
                    Mode::Marked => {
                        c.pair_b(cb, &l1.summed, &l2.full, &mut p);
                        c.pair_b(cb, &l1.full, &l2.summed, &mut p);
                        c.q_b_at_y(cb, &l1.summed, &l2.table, &mut q);
                        c.q_b_at_v(cb, &l2.full, l1.nested.as_ref().unwrap(), &mut q);
                        c.q_b_at_v(cb, &l2.summed, &l1.table, &mut q);
                        c.q_b_at_y(cb, &l1.full, l2.nested.as_ref().unwrap(), &mut q);
                    }
                }
            }
        }
        for x in 0..w {
            q[x * w + x] = 0.0;
        }
        (p, q)
    }
}

/// `P^(N;n)` with its orders.
#[derive(Debug, Clone)]
pub struct TildeBound {
    pub order: usize,
    pub line_generation: usize,
    pub field: SpaceTimeField,
}

#[derive(Debug, Clone)]
pub struct DiagramBounds {
    /// `P^(0) ... P^(N_max)`.
    pub p: Vec<SpaceTimeField>,
    pub tilde: Vec<TildeBound>,
}

impl DiagramBounds {
    pub fn tilde(&self, order: usize, line_generation: usize) -> Option<&SpaceTimeField> {
        self.tilde
            .iter()
            .find(|t| t.order == order && t.line_generation == line_generation)
            .map(|t| &t.field)
    }

    /// `sum_x P^(N)_{s}(x)` for every `N` at slice `s`.
    pub fn masses(&self, s: usize) -> Vec<f64> {
        self.p.iter().map(|f| f.mass(s)).collect()
    }
}

/// Diagram bounds and the construction-summed tables `Q^(N)`.
pub fn build_diagram_bounds(
    tau: &SpaceTimeField,
    params: &ModelParams,
    n_max: usize,
    with_tilde: bool,
) -> Result<DiagramBounds> {
    if n_max > MAX_ORDER {
        return Err(Error::CapExceeded {
            what: "diagram order",
            value: n_max,
            cap: MAX_ORDER,
        });
    }
    let ing = Ingredients::new(tau, params)?;
    let ev = Evaluator::new(&ing, with_tilde);
    let g = &ing.grid;
    let origin = g.origin();

    let mut ps: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    let mut qs: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    let (mut p0, q0) = ev.generation(&ing.delta, None, Mode::Plain);
    p0[origin] += 1.0;
    ps.push(p0);
    qs.push(q0);
    for n in 1..=n_max {
        let ca: Vec<f64> = ps[n - 1].iter().map(|v| 2.0 * v).collect();
        let (p, q) = ev.generation(&ca, Some(&qs[n - 1]), Mode::Plain);
        ps.push(p);
        qs.push(q);
    }

    let mut tilde = Vec::new();
    if with_tilde {
        for m in 1..=n_max {
            let ca: Vec<f64> = ps[m - 1].iter().map(|v| 2.0 * v).collect();
            let (mut pm, mut qm) = ev.generation(&ca, Some(&qs[m - 1]), Mode::Marked);
            tilde.push(TildeBound {
                order: m,
                line_generation: m,
                field: g.to_field(pm.clone()),
            });
            for n in m + 1..=n_max {
                let ca: Vec<f64> = pm.iter().map(|v| 2.0 * v).collect();
                let (p, q) = ev.generation(&ca, Some(&qm), Mode::Plain);
                tilde.push(TildeBound {
                    order: n,
                    line_generation: m,
                    field: g.to_field(p.clone()),
                });
                pm = p;
                qm = q;
            }
        }
    }
    let p = ps.into_iter().map(|v| g.to_field(v)).collect();
    Ok(DiagramBounds { p, tilde })
}

/// `Q^(N)(x, y)` tables, `W x W`, for `N = 0..=n_max` (diagonal zero).
pub fn construction_sums(
    tau: &SpaceTimeField,
    params: &ModelParams,
    n_max: usize,
) -> Result<(StGrid, Vec<Vec<f64>>)> {
    let ing = Ingredients::new(tau, params)?;
    let ev = Evaluator::new(&ing, false);
    let (_, q0) = ev.generation(&ing.delta, None, Mode::Plain);
    let mut p_prev = {
        let (mut p0, _) = ev.generation(&ing.delta, None, Mode::Plain);
        p0[ing.grid.origin()] += 1.0;
        p0
    };
    let mut qs = vec![q0];
    for n in 1..=n_max {
        let ca: Vec<f64> = p_prev.iter().map(|v| 2.0 * v).collect();
        let (p, q) = ev.generation(&ca, Some(&qs[n - 1]), Mode::Plain);
        p_prev = p;
        qs.push(q);
    }
    Ok((ing.grid.clone(), qs))
}

/// Space-time point `(n, x)` of a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StPoint {
    pub n: usize,
    pub x: Vec<i64>,
}

impl StPoint {
    pub fn new(n: usize, x: Vec<i64>) -> Self {
        StPoint { n, x }
    }

    pub fn origin(d: usize) -> Self {
        StPoint { n: 0, x: vec![0; d] }
    }
}

/// The line function `L(u, v; x)` as a field in `x`.
///
/// For `u != v` it is `phi(x-u)(tau * lamEpsD)(x-v) + (phi * lamEpsD)(x-u)
/// tau(x-v)` with `phi = delta + p * tau`; for `u = v` it is
/// `(D * tau)(x-u)(tau * lamEpsD)(x-u) + (D * tau * lamEpsD)(x-u) tau(x-u)`.
pub fn line_function_l(
    u: &StPoint,
    v: &StPoint,
    tau: &SpaceTimeField,
    params: &ModelParams,
) -> Result<SpaceTimeField> {
    let ing = Ingredients::new(tau, params)?;
    let g = &ing.grid;
    let locate = |p: &StPoint| -> Result<usize> {
        if p.n > g.n_max || p.x.len() != g.d {
            return Err(Error::validation("point", "outside the space-time window"));
        }
        g.window
            .index(&p.x)
            .map(|i| p.n * g.s + i)
            .ok_or_else(|| Error::validation("point", "outside the space-time window"))
    };
    let ui = locate(u)?;
    let vi = locate(v)?;
    let mut out = vec![0.0; g.w];
    if ui == vi {
        let dt = g.conv(&ing.d, &ing.tau);
        let dtd = g.conv(&dt, &ing.lam_eps_d);
        let tld = &ing.atb[0][1];
        for (x, o) in out.iter_mut().enumerate() {
            if let Some(r) = g.diff(ui, x) {
                *o = dt[r] * tld[r] + dtd[r] * ing.tau[r];
            }
        }
    } else {
        let phi: Vec<f64> = ing.delta.iter().zip(&ing.at[1]).map(|(a, b)| a + b).collect();
        let phi_d: Vec<f64> = ing
            .lam_eps_d
            .iter()
            .zip(&ing.atb[1][1])
            .map(|(a, b)| a + b)
            .collect();
        let tld = &ing.atb[0][1];
        for (x, o) in out.iter_mut().enumerate() {
            let (Some(ru), Some(rv)) = (g.diff(ui, x), g.diff(vi, x)) else {
                continue;
            };
            *o = phi[ru] * tld[rv] + phi_d[ru] * ing.tau[rv];
        }
    }
    Ok(g.to_field(out))
}
