//! Dispatch of an experiment config to its pipeline.
//!
//! Every run writes its artifacts plus `summary.json` into the output
//! directory. Nothing time- or host-dependent is recorded, so identical
//! configs give byte-identical directories.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use super::cache::{cache_key, Store, StoreExtractor};
use super::config::{BackendKind, ExperimentConfig, Kind, CODE_VERSION};
use super::field_file::{common_hash, FieldFile, FieldMeta};
use crate::analysis::{
    continuum_study, exact_levels, gaussian_fit, moment_profile, rw_continuum, scaled_range_experiment,
    scaled_samples, susceptibility, susceptibility_fit, triangle_direct, triangle_estimate, Backend,
    ContinuumLevel, FitOptions,
};
use crate::diagrams::build_diagram_bounds;
use crate::error::{Error, Result};
use crate::exact::{brute_force_two_point, exact_two_point_dp};
use crate::field::SpaceTimeField;
use crate::induction::{lambda_sequence, InductionState};
use crate::kernel::{kernel_moments, make_uniform_kernel};
use crate::lace::{
    find_lambda_c, forward_solve, invert_to_pi, lace_constants, rw_hat_continuum, rw_hat_discrete,
    ExactExtractor, PiExtractor, RandomWalkExtractor,
};
use crate::model::ModelParams;
use crate::simulate::{estimate_pi0, estimate_two_point};

/// Tolerance of the two-route checks on exact objects.
const ROUTE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub summary: Value,
}

/// `pi` from a Monte Carlo two-point estimate; the fixed seed couples the
/// estimates across `lambda`.
pub struct McExtractor {
    pub base: ModelParams,
    pub samples: u64,
    pub seed: u64,
}

impl PiExtractor for McExtractor {
    fn extract(&self, lambda: f64) -> Result<SpaceTimeField> {
        let p = self.params(lambda)?;
        let tau = estimate_two_point(&p, self.samples, self.seed)?.result.mean;
        invert_to_pi(&tau, &p)
    }

    fn params(&self, lambda: f64) -> Result<ModelParams> {
        self.base.with_lambda(lambda)
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
    dir: PathBuf,
    store: &'a Store,
    artifacts: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn meta(&self, p: &ModelParams, kind: &str) -> FieldMeta {
        let mc = self.cfg.backend == BackendKind::Mc;
        FieldMeta {
            d: p.d(),
            range: p.kernel.range(),
            eps: p.eps,
            lambda: p.lambda,
            n_max: p.n_max,
            radius: p.radius,
            seed: mc.then_some(self.cfg.seed),
            samples: mc.then_some(self.cfg.samples),
            kind: kind.into(),
            config_hash: Some(self.hash.clone()),
            code_version: Some(CODE_VERSION.into()),
        }
    }

    fn write_field(&mut self, name: &str, file: &FieldFile) -> Result<()> {
        let path = self.dir.join(name);
        file.write(&path)?;
        self.artifacts.push(path.with_extension("json"));
        self.artifacts.push(path);
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text)?;
        self.artifacts.push(path);
        Ok(())
    }

    fn extractor(&self, base: ModelParams) -> Box<dyn PiExtractor + '_> {
        let hash = self.hash.clone();
        let store = self.store;
        match self.cfg.backend {
            BackendKind::Exact => Box::new(StoreExtractor {
                inner: ExactExtractor { base },
                store,
                config_hash: hash,
            }),
            BackendKind::RandomWalk => Box::new(RandomWalkExtractor { base }),
            BackendKind::Mc => Box::new(StoreExtractor {
                inner: McExtractor {
                    base,
                    samples: self.cfg.samples,
                    seed: self.cfg.seed,
                },
                store,
                config_hash: hash,
            }),
        }
    }

    /// `tau` at the given model through the configured backend, cached.
    fn tau(&self, p: &ModelParams) -> Result<FieldFile> {
        let stage = format!("tau@{:016x}", p.lambda.to_bits());
        let key = cache_key(&self.hash, &stage);
        if let Some(f) = self.store.lookup(&key) {
            return Ok(f);
        }
        let file = match self.cfg.backend {
            BackendKind::Exact => FieldFile::new(self.meta(p, "tau"), exact_two_point_dp(p)?),
            BackendKind::RandomWalk => {
                let delta = SpaceTimeField::delta(p.d(), p.eps, p.n_max, p.radius);
                FieldFile::new(self.meta(p, "tau"), forward_solve(&delta, p)?)
            }
            BackendKind::Mc => {
                let est = estimate_two_point(p, self.cfg.samples, self.cfg.seed)?;
                FieldFile {
                    meta: self.meta(p, "tau"),
                    field: est.result.mean,
                    stderr: Some(est.result.stderr),
                }
            }
        };
        self.store.store(&key, &file)?;
        Ok(file)
    }
}

fn sigma2(p: &ModelParams) -> f64 {
    kernel_moments(&p.kernel, 1.0).sigma2
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

/// Runs `cfg`, writing into `out` (or the configured output directory).
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>, store: &Store) -> Result<RunOutcome> {
    cfg.validate()?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    let mut ctx = Ctx {
        cfg,
        hash: cfg.hash(),
        dir: dir.clone(),
        store,
        artifacts: Vec::new(),
    };
    info!("running {:?} ({})", cfg.kind, ctx.hash);
    let result = match cfg.kind {
        Kind::Simulate => run_simulate(&mut ctx)?,
        Kind::Exact => run_exact(&mut ctx)?,
        Kind::Invert => run_invert(&mut ctx)?,
        Kind::Diagrams => run_diagrams(&mut ctx)?,
        Kind::Induct => run_induct(&mut ctx)?,
        Kind::Critical => run_critical(&mut ctx)?,
        Kind::Fit => run_fit(&mut ctx)?,
        Kind::Rw => run_rw(&mut ctx)?,
        Kind::Continuum => run_continuum(&mut ctx)?,
        Kind::ScaledRange => run_scaled_range(&mut ctx)?,
        Kind::Triangle => run_triangle(&mut ctx)?,
    };
    let names: Vec<String> = ctx
        .artifacts
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let summary = json!({
        "kind": cfg.kind,
        "backend": cfg.backend,
        "config_hash": ctx.hash,
        "code_version": CODE_VERSION,
        "seed": cfg.seed,
        "samples": cfg.samples,
        "artifacts": names,
        "result": result,
    });
    let path = dir.join("summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
    ctx.artifacts.push(path);
    Ok(RunOutcome {
        dir,
        artifacts: ctx.artifacts,
        summary,
    })
}

fn run_simulate(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let p = cfg.model.params()?;
    let est = estimate_two_point(&p, cfg.samples, cfg.seed)?;
    let mut meta = ctx.meta(&p, "tau");
    meta.seed = Some(cfg.seed);
    meta.samples = Some(cfg.samples);
    let file = FieldFile {
        meta: meta.clone(),
        field: est.result.mean.clone(),
        stderr: Some(est.result.stderr.clone()),
    };
    ctx.write_field("tau.csv", &file)?;
    if cfg.simulate.pi0 {
        let pi0 = estimate_pi0(&p, cfg.samples, cfg.seed)?;
        meta.kind = "pi0".into();
        ctx.write_field(
            "pi0.csv",
            &FieldFile {
                meta,
                field: pi0.mean,
                stderr: Some(pi0.stderr),
            },
        )?;
    }
    Ok(json!({
        "mass": est.mass,
        "mass_stderr": est.mass_stderr,
        "second_moment": est.second_moment,
        "survival": est.survival,
        "susceptibility": est.susceptibility,
    }))
}

fn run_exact(ctx: &mut Ctx) -> Result<Value> {
    let p = ctx.cfg.model.params()?;
    let tau = exact_two_point_dp(&p)?;
    let mut check = Value::Null;
    if ctx.cfg.exact.brute_force {
        let bf = brute_force_two_point(&p)?;
        let diff = tau.max_abs_diff(&bf)?;
        if diff > 1e-12 {
            return Err(Error::Mismatch(format!("subset chain and enumeration differ by {diff:e}")));
        }
        check = json!(diff);
    }
    let mass: Vec<f64> = (0..=tau.n_max).map(|n| tau.mass(n)).collect();
    let mut meta = ctx.meta(&p, "tau");
    meta.seed = None;
    meta.samples = None;
    ctx.write_field("tau.csv", &FieldFile::new(meta, tau))?;
    Ok(json!({ "mass": mass, "brute_force_diff": check }))
}

fn run_invert(ctx: &mut Ctx) -> Result<Value> {
    let input = &ctx.cfg.invert.as_ref().expect("validated").input;
    let src = FieldFile::read(input)?;
    let m = &src.meta;
    let kernel = make_uniform_kernel(m.d, m.range)?;
    let p = ModelParams::with_radius(kernel, m.eps, m.lambda, m.n_max, m.radius)?;
    let pi = invert_to_pi(&src.field, &p)?;
    let w = pi.window();
    let origin = w.origin();
    for (i, v) in pi.slice(0).iter().enumerate() {
        let want = if i == origin { 1.0 } else { 0.0 };
        if (v - want).abs() > 1e-12 {
            return Err(Error::Invariant(format!("pi slice 0 is not delta at {:?}", w.offset(i))));
        }
    }
    if pi.n_max >= 1 {
        if let Some((i, v)) = pi.slice(1).iter().enumerate().find(|(_, v)| v.abs() > 1e-12) {
            return Err(Error::Invariant(format!("pi slice 1 is {v:e} at {:?}", w.offset(i))));
        }
    }
    let mass: Vec<f64> = (0..=pi.n_max).map(|n| pi.mass(n)).collect();
    let mut meta = m.clone();
    meta.kind = "pi".into();
    meta.config_hash = Some(ctx.hash.clone());
    meta.code_version = Some(CODE_VERSION.into());
    ctx.write_field("pi.csv", &FieldFile::new(meta, pi))?;
    Ok(json!({ "input_hash": m.config_hash, "mass": mass }))
}

fn run_diagrams(ctx: &mut Ctx) -> Result<Value> {
    let p = ctx.cfg.model.params()?;
    let tau = ctx.tau(&p)?.field;
    let order = ctx.cfg.diagrams.order;
    let b = build_diagram_bounds(&tau, &p, order, ctx.cfg.diagrams.tilde)?;
    for (n, f) in b.p.iter().enumerate() {
        let file = FieldFile::new(ctx.meta(&p, &format!("P{n}")), f.clone());
        ctx.write_field(&format!("p{n}.csv"), &file)?;
    }
    for t in &b.tilde {
        let kind = format!("P{}~{}", t.order, t.line_generation);
        let file = FieldFile::new(ctx.meta(&p, &kind), t.field.clone());
        ctx.write_field(&format!("ptilde{}_{}.csv", t.order, t.line_generation), &file)?;
    }
    let mut csv = String::from("s");
    for n in 0..=order {
        write!(csv, ",P{n}").unwrap();
    }
    csv.push('\n');
    let mut totals = vec![0.0; order + 1];
    for s in 0..=p.n_max {
        write!(csv, "{s}").unwrap();
        for (n, m) in b.masses(s).into_iter().enumerate() {
            write!(csv, ",{m:.16e}").unwrap();
            totals[n] += m;
        }
        csv.push('\n');
    }
    ctx.write_text("masses.csv", &csv)?;
    Ok(json!({ "order": order, "total_mass": totals }))
}

fn run_induct(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let p = cfg.model.params()?;
    let s2 = sigma2(&p);
    let ex = ctx.extractor(p.clone());
    let pi = ex.extract(p.lambda)?;
    let mut state = InductionState::from_pi(&pi, &p, s2, cfg.induct.side, cfg.constants.clone())?;
    if cfg.induct.lambda_steps > 0 {
        state = state.with_lambda_sequence(lambda_sequence(ex.as_ref(), cfg.induct.lambda_steps)?);
    }
    let n = cfg.induct.n.unwrap_or(p.n_max).min(state.n_max);
    let report = state.check_hypotheses(n)?;
    drop(ex);
    ctx.write_text("hypotheses.csv", &report.to_csv())?;
    Ok(json!({
        "n": n,
        "passes": report.passes(0.0),
        "worst": report.worst(),
        "nested": report.nested,
        "lambda_n": state.lambda_n,
        "v": state.v,
        "reconstruction_error": state.reconstruction_error(n),
        "excluded": state.excluded.len(),
        "max_imaginary": state.max_imaginary,
    }))
}

fn run_critical(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let p = cfg.model.params()?;
    let ex = ctx.extractor(p.clone());
    let c = &cfg.critical;
    let cp = find_lambda_c(ex.as_ref(), sigma2(&p), (c.lo, c.hi), c.tol)?;
    Ok(to_value(&cp))
}

fn run_fit(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let fb = &cfg.fit;
    // (lambda, tau) pairs, from files or from the backend
    let mut taus: Vec<(f64, SpaceTimeField)> = Vec::new();
    let mut input_hash = Value::Null;
    if fb.inputs.is_empty() {
        for l in cfg.model.lambdas() {
            taus.push((l, ctx.tau(&cfg.model.params_at(l)?)?.field));
        }
    } else {
        let files: Vec<FieldFile> = fb.inputs.iter().map(|p| FieldFile::read(p)).collect::<Result<_>>()?;
        input_hash = json!(common_hash(&files.iter().map(|f| &f.meta).collect::<Vec<_>>())?);
        for f in files {
            taus.push((f.meta.lambda, f.field));
        }
    }
    let main = taus
        .iter()
        .position(|(l, _)| *l == cfg.model.lambda)
        .unwrap_or(0);
    let (lambda, tau) = &taus[main];
    let kernel = make_uniform_kernel(tau.d, cfg.model.range)?;
    let p = ModelParams::with_radius(kernel, tau.eps, *lambda, tau.n_max, tau.radius)?;
    let s2 = sigma2(&p);
    let slices: Vec<usize> = if fb.slices.is_empty() {
        ((tau.n_max / 2).max(1)..=tau.n_max).collect()
    } else {
        fb.slices.clone()
    };
    let opts = FitOptions {
        smallness: fb.smallness,
        ..FitOptions::default()
    };
    let samples = scaled_samples(
        |n, k| tau.fourier_at(n, k).re,
        &slices,
        tau.eps,
        tau.d,
        s2,
        fb.k_count,
        opts,
    );
    let fit = gaussian_fit(&samples, s2, opts)?;
    let mut csv = String::from("t,k,observed,model,residual\n");
    for r in crate::analysis::fit_rows(&samples, s2, &fit) {
        writeln!(csv, "{},{:.16e},{:.16e},{:.16e},{:.16e}", r.t, r.k, r.observed, r.model, r.residual).unwrap();
    }
    ctx.write_text("fit.csv", &csv)?;
    let prof = moment_profile(tau, cfg.model.range);
    let mut mcsv = String::from("n,t,mass,gyration,sup,envelope\n");
    for r in &prof.rows {
        writeln!(mcsv, "{},{},{:.16e},{:.16e},{:.16e},{:.16e}", r.n, r.t, r.mass, r.gyration, r.sup, r.envelope).unwrap();
    }
    ctx.write_text("moments.csv", &mcsv)?;
    let pi = invert_to_pi(tau, &p)?;
    let constants = lace_constants(&pi, &p, s2)?;
    let chi: Vec<(f64, f64)> = taus.iter().map(|(l, t)| (*l, susceptibility(t))).collect();
    let chi_fit = match fb.lambda_c {
        Some(lc) if chi.len() >= 2 => Some(susceptibility_fit(&chi, lc)?),
        _ => None,
    };
    Ok(json!({
        "input_hash": input_hash,
        "lambda": lambda,
        "gaussian": fit,
        "moments_c2": prof.c2,
        "lace_constants": constants,
        "susceptibility": chi,
        "susceptibility_fit": chi_fit,
    }))
}

/// A few wave vectors spread over the Brillouin zone.
fn probe_vectors(d: usize) -> Vec<Vec<f64>> {
    let mut ks: Vec<Vec<f64>> = (0..=4)
        .map(|j| {
            let mut k = vec![0.0; d];
            k[0] = j as f64 * std::f64::consts::PI / 4.0;
            k
        })
        .collect();
    ks.push((0..d).map(|i| 0.3 + 0.4 * i as f64).collect());
    ks
}

fn run_rw(ctx: &mut Ctx) -> Result<Value> {
    let p = ctx.cfg.model.params()?;
    let delta = SpaceTimeField::delta(p.d(), p.eps, p.n_max, p.radius);
    let tau = forward_solve(&delta, &p)?;
    let ks = probe_vectors(p.d());
    let mut csv = String::from("n,k_index,discrete,continuum,forward\n");
    let mut worst = 0.0f64;
    for n in 0..=p.n_max {
        for (j, k) in ks.iter().enumerate() {
            let closed = rw_hat_discrete(&p, k, n);
            let cont = rw_hat_continuum(&p, k, n as f64 * p.eps);
            let fwd = tau.fourier_at(n, k).re;
            worst = worst.max((closed - fwd).abs());
            writeln!(csv, "{n},{j},{closed:.16e},{cont:.16e},{fwd:.16e}").unwrap();
        }
    }
    ctx.write_text("rw.csv", &csv)?;
    if worst > ROUTE_TOL {
        return Err(Error::Mismatch(format!("closed form and forward solve differ by {worst:e}")));
    }
    Ok(json!({ "max_abs_diff": worst, "wave_vectors": ks }))
}

fn run_continuum(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let c = &cfg.continuum;
    let kernel = make_uniform_kernel(cfg.model.d, cfg.model.range)?;
    let lambda = cfg.model.lambda;
    let radius = cfg.model.radius();
    let levels: Vec<ContinuumLevel> = match cfg.backend {
        BackendKind::Exact => exact_levels(&kernel, lambda, c.t, &c.eps, radius)?,
        BackendKind::RandomWalk | BackendKind::Mc => c
            .eps
            .iter()
            .map(|&eps| {
                let n = (c.t / eps).round() as usize;
                let p = ModelParams::with_radius(kernel.clone(), eps, lambda, n, radius)?;
                let (tau, pi) = if cfg.backend == BackendKind::Mc {
                    let tau = estimate_two_point(&p, cfg.samples, cfg.seed)?.result.mean;
                    let pi = invert_to_pi(&tau, &p)?;
                    (tau, Some(pi))
                } else {
                    let delta = SpaceTimeField::delta(p.d(), eps, n, radius);
                    (forward_solve(&delta, &p)?, None)
                };
                Ok(ContinuumLevel { eps, tau, pi })
            })
            .collect::<Result<_>>()?,
    };
    let study = continuum_study(c.t, &levels)?;
    let mut csv = String::from("eps_coarse,eps_fine,tau_diff,pi_diff\n");
    for r in &study.rows {
        let pd = r.pi_diff.map(|v| format!("{v:.16e}")).unwrap_or_default();
        writeln!(csv, "{},{},{:.16e},{pd}", r.eps_coarse, r.eps_fine, r.tau_diff).unwrap();
    }
    ctx.write_text("continuum.csv", &csv)?;
    let fourier = if cfg.backend == BackendKind::RandomWalk {
        let (diffs, ratios) = rw_continuum(&kernel, lambda, c.t, &c.eps, &probe_vectors(cfg.model.d))?;
        json!({ "diffs": diffs, "ratios": ratios })
    } else {
        Value::Null
    };
    Ok(json!({ "study": study, "fourier": fourier }))
}

fn run_scaled_range(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let backend = match cfg.backend {
        BackendKind::Mc => Backend::MonteCarlo {
            samples: cfg.samples,
            seed: cfg.seed,
        },
        BackendKind::RandomWalk => Backend::RandomWalk,
        BackendKind::Exact => {
            return Err(Error::validation("backend", "scaled-range runs need mc or random-walk"));
        }
    };
    let report = scaled_range_experiment(&cfg.scaled_range_config(), backend)?;
    let mut csv = String::from("t,k,value\n");
    for s in &report.samples {
        let k: f64 = s.k.iter().map(|v| v * v).sum::<f64>().sqrt();
        writeln!(csv, "{},{:.16e},{:.16e}", s.t, k, s.value).unwrap();
    }
    ctx.write_text("scaled_range.csv", &csv)?;
    Ok(to_value(&report))
}

fn run_triangle(ctx: &mut Ctx) -> Result<Value> {
    let p = ctx.cfg.model.params()?;
    let tau = ctx.tau(&p)?.field;
    let fourier = triangle_estimate(&tau)?;
    let direct = triangle_direct(&tau);
    let diff = (fourier.value - direct.value).abs();
    if diff > 1e-8 * fourier.value.abs().max(1.0) {
        return Err(Error::Mismatch(format!("triangle routes differ by {diff:e}")));
    }
    let mut csv = String::from("n,cumulative\n");
    for (n, v) in fourier.rows.iter().enumerate() {
        writeln!(csv, "{n},{v:.16e}").unwrap();
    }
    ctx.write_text("triangle.csv", &csv)?;
    Ok(json!({ "fourier": fourier, "direct_value": direct.value, "route_diff": diff }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::ExperimentConfig;

    fn cfg(kind: &str, extra: &str) -> ExperimentConfig {
        let text = format!(
            "kind = \"{kind}\"\nseed = 5\nsamples = 200\n{extra}\n[model]\nd = 1\nL = 1\neps = 0.5\nlambda = 1.0\nn_max = 4\n"
        );
        ExperimentConfig::from_toml_str(&text, Path::new("t.toml")).unwrap()
    }

    fn run(c: &ExperimentConfig) -> (tempfile::TempDir, RunOutcome) {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path().join("store"));
        let out = run_experiment(c, Some(&dir.path().join("out")), &store).unwrap();
        (dir, out)
    }

    #[test]
    fn rw_routes_agree() {
        let (_d, out) = run(&cfg("rw", ""));
        assert!(out.summary["result"]["max_abs_diff"].as_f64().unwrap() <= 1e-10);
        assert_eq!(out.summary["config_hash"], json!(cfg("rw", "").hash()));
    }

    #[test]
    fn exact_then_invert() {
        let mut c = cfg("exact", "[exact]\nbrute_force = true");
        c.model.n_max = 3;
        c.model.eps = 1.0;
        let (d, out) = run(&c);
        let tau = out.dir.join("tau.csv");
        let mut c = cfg("invert", "");
        c.model.n_max = 3;
        c.model.eps = 1.0;
        c.invert = Some(super::super::config::InvertBlock { input: tau });
        let store = Store::new(d.path().join("store"));
        let inv = run_experiment(&c, Some(&d.path().join("inv")), &store).unwrap();
        let pi = FieldFile::read(&inv.dir.join("pi.csv")).unwrap();
        assert_eq!(pi.field.slice(1).iter().map(|v| v.abs()).fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn scaled_range_echoes_alpha() {
        let mut c = cfg("scaled-range", "backend = \"random-walk\"");
        c.model.d = 2;
        c.scaled_range.times = vec![0.5, 1.0];
        let (_d, out) = run(&c);
        assert_eq!(out.summary["result"]["alpha"].as_f64().unwrap(), 1.0);
    }

    #[test]
    fn mc_runs_are_byte_identical() {
        let c = cfg("simulate", "backend = \"mc\"");
        let (_a, x) = run(&c);
        let (_b, y) = run(&c);
        for (p, q) in x.artifacts.iter().zip(&y.artifacts) {
            assert_eq!(std::fs::read(p).unwrap(), std::fs::read(q).unwrap(), "{}", p.display());
        }
    }

    #[test]
    fn mixed_hash_fit_inputs_refused() {
        let (d1, a) = run(&cfg("exact", ""));
        let mut other = cfg("exact", "");
        other.model.lambda = 0.9;
        let (d2, b) = run(&other);
        let mut c = cfg("fit", "");
        c.fit.inputs = vec![a.dir.join("tau.csv"), b.dir.join("tau.csv")];
        let store = Store::new(d1.path().join("store"));
        let e = run_experiment(&c, Some(&d2.path().join("fit")), &store).unwrap_err();
        assert!(matches!(e, Error::Mismatch(_)), "{e:?}");
    }
}
