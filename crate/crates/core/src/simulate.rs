//! Monte Carlo estimation of the two-point function and of the
//! double-connection probability `pi^(0)`.
//!
//! Every uniform is addressed by `(replica, slice, site)` (or by bond for
//! `pi^(0)`): replica `r` reads ChaCha stream `r` at a word position fixed
//! by the address. Runs at different `lambda` therefore threshold the same
//! uniforms, which makes the estimates monotone in `lambda` replica by
//! replica, and results do not depend on how replicas are split across
//! threads.

use std::ops::Range;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::flow::edge_disjoint_paths;
use crate::lattice::norm2;
use crate::model::ModelParams;

/// Replicas handled per parallel task.
const CHUNK: u64 = 512;
/// Address space offset separating bond uniforms from site uniforms.
const BOND_DOMAIN: u128 = 1 << 60;

/// Uniforms addressed by a 64-bit key within one replica stream.
struct AddressedUniforms {
    rng: ChaCha8Rng,
}

impl AddressedUniforms {
    fn new(seed: u64, replica: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replica);
        AddressedUniforms { rng }
    }

    fn at(&mut self, key: u128) -> f64 {
        let pos = 2 * key;
        if self.rng.get_word_pos() != pos {
            self.rng.set_word_pos(pos);
        }
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Occupied sets `C_n` of one cluster, as offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterTrace {
    pub slices: Vec<Vec<Vec<i64>>>,
    /// First slice at which the occupied set is empty.
    pub extinction: Option<usize>,
}

/// Per-offset linear index shift inside the window, with `p` and `ln(1 - p)`.
fn index_shifts(params: &ModelParams) -> Vec<(isize, f64, f64)> {
    let w = params.window();
    let side = w.side() as isize;
    params
        .bond_entries()
        .into_iter()
        .map(|(z, p)| {
            let shift = z.iter().fold(0isize, |acc, &zi| acc * side + zi as isize);
            (shift, p, (-p).ln_1p())
        })
        .collect()
}

/// Scratch space for the site-wise frontier update.
struct Frontier {
    log_survive: Vec<f64>,
    touched: Vec<usize>,
}

impl Frontier {
    fn new(size: usize) -> Self {
        Frontier {
            log_survive: vec![0.0; size],
            touched: Vec::new(),
        }
    }

    /// Samples `C_{n+1}` given `C_n = current` (sorted window indices).
    fn step(
        &mut self,
        current: &[usize],
        shifts: &[(isize, f64, f64)],
        slice: usize,
        size: usize,
        u: &mut AddressedUniforms,
    ) -> Vec<usize> {
        self.touched.clear();
        for &y in current {
            for &(s, _, lq) in shifts {
                let x = (y as isize + s) as usize;
                debug_assert!(x < size);
                if self.log_survive[x] == 0.0 {
                    self.touched.push(x);
                }
                // p == 1 gives -inf, i.e. certain infection
                self.log_survive[x] += lq;
            }
        }
        // one sorted run per parent; the stable sort merges runs cheaply
        if current.len() > 1 {
            self.touched.sort();
        }
        let mut next = Vec::new();
        for &x in &self.touched {
            let q = 1.0 - self.log_survive[x].exp();
            self.log_survive[x] = 0.0;
            let key = (slice + 1) as u128 * size as u128 + x as u128;
            if u.at(key) < q {
                next.push(x);
            }
        }
        next
    }
}

fn simulate_indices(
    params: &ModelParams,
    shifts: &[(isize, f64, f64)],
    frontier: &mut Frontier,
    seed: u64,
    replica: u64,
    mut visit: impl FnMut(usize, &[usize]),
) {
    let w = params.window();
    let size = w.size();
    let mut u = AddressedUniforms::new(seed, replica);
    let mut cur = vec![w.origin()];
    visit(0, &cur);
    for n in 0..params.n_max {
        if cur.is_empty() {
            break;
        }
        cur = frontier.step(&cur, shifts, n, size, &mut u);
        visit(n + 1, &cur);
    }
}

pub fn run_cluster(params: &ModelParams, seed: u64) -> Result<ClusterTrace> {
    run_cluster_replica(params, seed, 0)
}

/// Cluster of replica `replica` of the stream `seed`.
pub fn run_cluster_replica(params: &ModelParams, seed: u64, replica: u64) -> Result<ClusterTrace> {
    params.check_window()?;
    let w = params.window();
    let shifts = index_shifts(params);
    let mut frontier = Frontier::new(w.size());
    let mut slices = Vec::new();
    simulate_indices(params, &shifts, &mut frontier, seed, replica, |_, set| {
        slices.push(set.iter().map(|&i| w.offset(i)).collect::<Vec<_>>());
    });
    let extinction = slices.iter().position(|s| s.is_empty());
    while slices.len() <= params.n_max {
        slices.push(Vec::new());
    }
    Ok(ClusterTrace { slices, extinction })
}

/// Hit counts over a block of replicas. Integer sums merge exactly in any
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Tally {
    hits: Vec<u64>,
    /// Per slice: sum of `|C_n|` and of `|C_n|^2`.
    size_sum: Vec<u64>,
    size_sq: Vec<u128>,
    alive: Vec<u64>,
}

impl Tally {
    fn new(entries: usize, slices: usize) -> Self {
        Tally {
            hits: vec![0; entries],
            size_sum: vec![0; slices],
            size_sq: vec![0; slices],
            alive: vec![0; slices],
        }
    }

    fn add(mut self, other: &Tally) -> Self {
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            *a += b;
        }
        for n in 0..self.size_sum.len() {
            self.size_sum[n] += other.size_sum[n];
            self.size_sq[n] += other.size_sq[n];
            self.alive[n] += other.alive[n];
        }
        self
    }
}

/// Mean and standard error per space-time entry of an indicator estimate.
#[derive(Debug, Clone)]
pub struct EstimatorResult {
    pub mean: SpaceTimeField,
    /// Sample standard deviation over `sqrt(samples)`.
    pub stderr: SpaceTimeField,
    pub samples: u64,
    pub seeds: Vec<u64>,
    pub hits: Vec<u64>,
}

impl EstimatorResult {
    fn from_hits(template: &SpaceTimeField, hits: Vec<u64>, samples: u64, seeds: Vec<u64>) -> Self {
        let mut mean = template.zeros_like();
        let mut stderr = template.zeros_like();
        let n = samples as f64;
        for (i, &h) in hits.iter().enumerate() {
            let p = h as f64 / n;
            mean.data[i] = p;
            stderr.data[i] = if samples > 1 {
                (p * (1.0 - p) * n / (n - 1.0)).sqrt() / n.sqrt()
            } else {
                0.0
            };
        }
        EstimatorResult {
            mean,
            stderr,
            samples,
            seeds,
            hits,
        }
    }

    /// Pools two estimates of the same quantity on the same window.
    pub fn merge(&self, other: &EstimatorResult) -> Result<EstimatorResult> {
        self.mean.check_same_shape(&other.mean)?;
        let hits = self.hits.iter().zip(&other.hits).map(|(a, b)| a + b).collect();
        let mut seeds = self.seeds.clone();
        seeds.extend(&other.seeds);
        Ok(Self::from_hits(
            &self.mean,
            hits,
            self.samples + other.samples,
            seeds,
        ))
    }
}

/// Two-point estimate together with per-slice summaries.
#[derive(Debug, Clone)]
pub struct TwoPointEstimate {
    pub result: EstimatorResult,
    /// Mean `|C_n|`, i.e. `tau^_n(0)`, and its standard error.
    pub mass: Vec<f64>,
    pub mass_stderr: Vec<f64>,
    /// `sum_x |x|^2 tau_n(x)`.
    pub second_moment: Vec<f64>,
    pub sup: Vec<f64>,
    /// Fraction of replicas with `C_n` nonempty.
    pub survival: Vec<f64>,
    /// `eps sum_n tau^_n(0)` up to the horizon.
    pub susceptibility: f64,
}

pub fn estimate_two_point(params: &ModelParams, samples: u64, seed: u64) -> Result<TwoPointEstimate> {
    estimate_two_point_replicas(params, seed, 0..samples)
}

/// Two-point estimate over an explicit replica range of stream `seed`.
pub fn estimate_two_point_replicas(
    params: &ModelParams,
    seed: u64,
    replicas: Range<u64>,
) -> Result<TwoPointEstimate> {
    params.check_window()?;
    let samples = replicas.end.saturating_sub(replicas.start);
    if samples == 0 {
        return Err(Error::validation("samples", "need at least one sample"));
    }
    let template = SpaceTimeField::zeros(params.d(), params.eps, params.n_max, params.radius);
    let size = template.slice_len();
    let slices = params.n_max + 1;
    let shifts = index_shifts(params);
    let chunks: Vec<Range<u64>> = chunk_ranges(replicas);
    let tally = chunks
        .into_par_iter()
        .map(|range| {
            let mut t = Tally::new(size * slices, slices);
            let mut frontier = Frontier::new(size);
            for r in range {
                simulate_indices(params, &shifts, &mut frontier, seed, r, |n, set| {
                    for &x in set {
                        t.hits[n * size + x] += 1;
                    }
                    let k = set.len() as u64;
                    t.size_sum[n] += k;
                    t.size_sq[n] += (k as u128) * (k as u128);
                    if k > 0 {
                        t.alive[n] += 1;
                    }
                });
            }
            t
        })
        .reduce(|| Tally::new(size * slices, slices), |a, b| a.add(&b));
    let result = EstimatorResult::from_hits(&template, tally.hits.clone(), samples, vec![seed]);
    let nf = samples as f64;
    let mass: Vec<f64> = tally.size_sum.iter().map(|s| *s as f64 / nf).collect();
    let mass_stderr = (0..slices)
        .map(|n| {
            if samples < 2 {
                return 0.0;
            }
            let m = mass[n];
            let var = (tally.size_sq[n] as f64 / nf - m * m) * nf / (nf - 1.0);
            (var.max(0.0) / nf).sqrt()
        })
        .collect();
    let second_moment = (0..slices).map(|n| result.mean.second_moment(n)).collect();
    let sup = (0..slices).map(|n| result.mean.sup(n)).collect();
    let survival = tally.alive.iter().map(|a| *a as f64 / nf).collect();
    let susceptibility = params.eps * mass.iter().sum::<f64>();
    Ok(TwoPointEstimate {
        result,
        mass,
        mass_stderr,
        second_moment,
        sup,
        survival,
        susceptibility,
    })
}

/// Monte Carlo `tau^_n(k) = E sum_{x in C_n} cos(k.x)` at a few wave
/// vectors, without storing the space-time field.
#[derive(Debug, Clone, Serialize)]
pub struct FourierEstimate {
    pub ks: Vec<Vec<f64>>,
    /// `mean[n][j]` at `ks[j]`.
    pub mean: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub samples: u64,
}

pub fn estimate_fourier(
    params: &ModelParams,
    ks: &[Vec<f64>],
    samples: u64,
    seed: u64,
) -> Result<FourierEstimate> {
    params.check_window()?;
    if samples == 0 {
        return Err(Error::validation("samples", "need at least one sample"));
    }
    if ks.iter().any(|k| k.len() != params.d()) {
        return Err(Error::validation("ks", "wave vectors must have d components"));
    }
    let w = params.window();
    let size = w.size();
    let slices = params.n_max + 1;
    let nk = ks.len();
    let shifts = index_shifts(params);
    // per (n, j): sum and sum of squares over replicas
    let (sum, sq) = chunk_ranges(0..samples)
        .into_par_iter()
        .map(|range| {
            let mut sum = vec![0.0; slices * nk];
            let mut sq = vec![0.0; slices * nk];
            let mut frontier = Frontier::new(size);
            let mut row = vec![0.0; nk];
            for r in range {
                simulate_indices(params, &shifts, &mut frontier, seed, r, |n, set| {
                    row.iter_mut().for_each(|v| *v = 0.0);
                    for &i in set {
                        let x = w.offset(i);
                        for (v, k) in row.iter_mut().zip(ks) {
                            let ph: f64 = x.iter().zip(k).map(|(a, b)| *a as f64 * b).sum();
                            *v += ph.cos();
                        }
                    }
                    for (j, v) in row.iter().enumerate() {
                        sum[n * nk + j] += v;
                        sq[n * nk + j] += v * v;
                    }
                });
            }
            (sum, sq)
        })
        .reduce(
            || (vec![0.0; slices * nk], vec![0.0; slices * nk]),
            |mut a, b| {
                a.0.iter_mut().zip(&b.0).for_each(|(x, y)| *x += y);
                a.1.iter_mut().zip(&b.1).for_each(|(x, y)| *x += y);
                a
            },
        );
    let nf = samples as f64;
    let mut mean = vec![vec![0.0; nk]; slices];
    let mut stderr = vec![vec![0.0; nk]; slices];
    for n in 0..slices {
        for j in 0..nk {
            let m = sum[n * nk + j] / nf;
            mean[n][j] = m;
            if samples > 1 {
                let var = (sq[n * nk + j] / nf - m * m) * nf / (nf - 1.0);
                stderr[n][j] = (var.max(0.0) / nf).sqrt();
            }
        }
    }
    Ok(FourierEstimate {
        ks: ks.to_vec(),
        mean,
        stderr,
        samples,
    })
}

fn chunk_ranges(replicas: Range<u64>) -> Vec<Range<u64>> {
    let mut out = Vec::new();
    let mut lo = replicas.start;
    while lo < replicas.end {
        let hi = (lo + CHUNK).min(replicas.end);
        out.push(lo..hi);
        lo = hi;
    }
    out
}

/// Explicit bond sample of one replica: occupied bonds out of every reached
/// site, as `(tail node, head node)` with nodes `(slice, window index)`.
struct BondSample {
    nodes: Vec<(usize, usize)>,
    edges: Vec<(usize, usize)>,
}

fn sample_bonds(
    params: &ModelParams,
    shifts: &[(isize, f64, f64)],
    seed: u64,
    replica: u64,
    node_of: &mut [usize],
) -> BondSample {
    let w = params.window();
    let size = w.size();
    let n_off = shifts.len() as u128;
    let mut u = AddressedUniforms::new(seed, replica);
    let mut nodes = vec![(0usize, w.origin())];
    let mut edges = Vec::new();
    let mut cur = vec![(w.origin(), 0usize)];
    for n in 0..params.n_max {
        let mut next: Vec<(usize, usize)> = Vec::new();
        for &(y, ny) in &cur {
            for (j, &(s, p, _)) in shifts.iter().enumerate() {
                let key = BOND_DOMAIN + ((n as u128 * size as u128 + y as u128) * n_off + j as u128);
                if u.at(key) < p {
                    let x = (y as isize + s) as usize;
                    let nx = if node_of[x] == usize::MAX {
                        let id = nodes.len();
                        nodes.push((n + 1, x));
                        node_of[x] = id;
                        next.push((x, id));
                        id
                    } else {
                        node_of[x]
                    };
                    edges.push((ny, nx));
                }
            }
        }
        for &(x, _) in &next {
            node_of[x] = usize::MAX;
        }
        if next.is_empty() {
            break;
        }
        cur = next;
    }
    BondSample { nodes, edges }
}

/// Estimate of `P((o,0) => (x, n eps))`: per replica, every reached
/// space-time site is tested for two bond-disjoint occupied paths from the
/// origin by max-flow.
pub fn estimate_pi0(params: &ModelParams, samples: u64, seed: u64) -> Result<EstimatorResult> {
    estimate_pi0_replicas(params, seed, 0..samples)
}

pub fn estimate_pi0_replicas(
    params: &ModelParams,
    seed: u64,
    replicas: Range<u64>,
) -> Result<EstimatorResult> {
    params.check_window()?;
    let samples = replicas.end.saturating_sub(replicas.start);
    if samples == 0 {
        return Err(Error::validation("samples", "need at least one sample"));
    }
    let template = SpaceTimeField::zeros(params.d(), params.eps, params.n_max, params.radius);
    let size = template.slice_len();
    let total = size * (params.n_max + 1);
    let shifts = index_shifts(params);
    let hits = chunk_ranges(replicas)
        .into_par_iter()
        .map(|range| {
            let mut hits = vec![0u64; total];
            let mut node_of = vec![usize::MAX; size];
            for r in range {
                let b = sample_bonds(params, &shifts, seed, r, &mut node_of);
                hits[b.nodes[0].1] += 1;
                for (id, &(n, x)) in b.nodes.iter().enumerate().skip(1) {
                    if edge_disjoint_paths(b.nodes.len(), &b.edges, 0, id, 2) >= 2 {
                        hits[n * size + x] += 1;
                    }
                }
            }
            hits
        })
        .reduce(
            || vec![0u64; total],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                a
            },
        );
    Ok(EstimatorResult::from_hits(&template, hits, samples, vec![seed]))
}

/// `sum_x |x|^2 f(x)` of a single slice of offsets (test helper for traces).
pub fn trace_second_moment(slice: &[Vec<i64>]) -> f64 {
    slice.iter().map(|x| norm2(x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_uniform_kernel;

    fn nn(eps: f64, lambda: f64, n: usize) -> ModelParams {
        ModelParams::new(make_uniform_kernel(1, 1).unwrap(), eps, lambda, n).unwrap()
    }

    #[test]
    fn extinct_without_infection() {
        let t = run_cluster(&nn(1.0, 0.0, 3), 7).unwrap();
        assert_eq!(t.slices[0], vec![vec![0]]);
        assert!(t.slices[1].is_empty());
        assert_eq!(t.extinction, Some(1));
    }

    #[test]
    fn first_step_stays_in_support() {
        for seed in 0..50 {
            let t = run_cluster(&nn(1.0, 1.9, 2), seed).unwrap();
            assert!(t.slices[1].iter().all(|x| x[0].abs() == 1));
        }
    }

    #[test]
    fn deterministic_trace() {
        let p = nn(0.5, 1.5, 6);
        assert_eq!(run_cluster(&p, 42).unwrap(), run_cluster(&p, 42).unwrap());
    }

    #[test]
    fn slice_zero_is_exact() {
        let e = estimate_two_point(&nn(0.5, 1.0, 3), 200, 1).unwrap();
        assert_eq!(e.result.mean.get(0, &[0]), 1.0);
        assert_eq!(e.result.stderr.get(0, &[0]), 0.0);
        let e = estimate_pi0(&nn(0.5, 1.0, 3), 200, 1).unwrap();
        assert_eq!(e.mean.get(0, &[0]), 1.0);
        assert!(e.mean.slice(1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn split_replicas_merge_to_whole() {
        let p = nn(0.5, 1.2, 5);
        let whole = estimate_two_point_replicas(&p, 9, 0..1500).unwrap();
        let a = estimate_two_point_replicas(&p, 9, 0..700).unwrap();
        let b = estimate_two_point_replicas(&p, 9, 700..1500).unwrap();
        let m = a.result.merge(&b.result).unwrap();
        assert_eq!(m.hits, whole.result.hits);
        assert_eq!(m.samples, 1500);
    }

    #[test]
    fn fourier_estimate_matches_field_estimate() {
        let p = nn(0.5, 1.1, 6);
        let ks = vec![vec![0.0], vec![0.7], vec![2.0]];
        let f = estimate_fourier(&p, &ks, 800, 5).unwrap();
        let e = estimate_two_point(&p, 800, 5).unwrap();
        for n in 0..=6 {
            for (j, k) in ks.iter().enumerate() {
                let direct = e.result.mean.fourier_at(n, k).re;
                assert!((f.mean[n][j] - direct).abs() < 1e-9);
            }
            assert!((f.mean[n][0] - e.mass[n]).abs() < 1e-9);
            assert!((f.stderr[n][0] - e.mass_stderr[n]).abs() < 1e-9);
        }
    }

    #[test]
    fn coupled_in_lambda() {
        let lo = estimate_two_point(&nn(0.5, 0.8, 5), 300, 3).unwrap();
        let hi = estimate_two_point(&nn(0.5, 1.4, 5), 300, 3).unwrap();
        for (a, b) in lo.result.hits.iter().zip(&hi.result.hits) {
            assert!(a <= b);
        }
    }
}
