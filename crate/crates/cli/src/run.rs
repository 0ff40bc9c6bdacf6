//! Experiment drivers.
//!
//! Per-realization work goes through [`Checkpoint::stage`], which appends one
//! JSON line per realization to `.progress/<stage>.jsonl`. A rerun with the
//! same config reads the completed prefix back and only computes the rest, so
//! the final artifacts are the same whether or not the run was interrupted.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use deltalab::disorder::{sample_couplings, CouplingField, DistributionSpec, StreamKey};
use deltalab::ensemble::par_map_ordered;
use deltalab::oracles::{rank_one_verify, shoot_spectrum, RankOnePair, RankOneReport, ShootingProblem};
use deltalab::spectra::{solve_spectrum, SolverConfig, Spectrum};
use deltalab::stats::estimators::{
    count_intervals, count_scan_from, dos_from_counts, dos_intervals, frac_moment_fit, frac_moment_row, propose_e0,
    DosPoint,
};
use deltalab::stats::gof::poisson_pmf;
use deltalab::stats::{
    build_zeta, laplace_functional, les_sample, poisson_laplace, poisson_tests, xi_zeta_gap, Estimate, LesWindow,
    PointSample, PoissonReport, SubcubeArray, TestFunction,
};
use deltalab::DomainSpec;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Config, E0Spec, Experiment};
use crate::output::{self, Failure};

/// Offset between the main stream and the stream of auxiliary DOS passes.
const DOS_SEED_SALT: u64 = 0x6a09_e667_f3bc_c909;

/// Resumable per-realization results under `<output_dir>/.progress`.
pub struct Checkpoint {
    dir: PathBuf,
    chunk: u64,
    resumed: BTreeMap<String, u64>,
}

#[derive(Serialize, Deserialize)]
struct Line<T> {
    i: u64,
    v: T,
}

impl Checkpoint {
    /// Opens the progress directory, discarding it if it belongs to a
    /// different config.
    pub fn open(out: &Path, cfg: &Config) -> Result<Self, Failure> {
        let dir = out.join(".progress");
        let fingerprint = serde_json::to_string(cfg)?;
        let stamp = dir.join("config.json");
        if fs::read_to_string(&stamp).ok().as_deref() != Some(fingerprint.as_str()) && dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        fs::write(&stamp, fingerprint)?;
        let chunk = (4 * rayon::current_num_threads()).max(8) as u64;
        Ok(Checkpoint { dir, chunk, resumed: BTreeMap::new() })
    }

    /// `f(i)` for `i in 0..n`, reusing the results recorded by an earlier run.
    pub fn stage<T, F>(&mut self, name: &str, n: u64, f: F) -> Result<Vec<T>, Failure>
    where
        T: Serialize + DeserializeOwned + Send,
        F: Fn(u64) -> deltalab::Result<T> + Sync + Send,
    {
        let path = self.dir.join(format!("{name}.jsonl"));
        let mut done: Vec<T> = Vec::new();
        let mut keep = 0u64;
        if let Ok(file) = File::open(&path) {
            let mut reader = BufReader::new(file);
            let mut line = String::new();
            while (done.len() as u64) < n {
                line.clear();
                if reader.read_line(&mut line)? == 0 || !line.ends_with('\n') {
                    break;
                }
                match serde_json::from_str::<Line<T>>(&line) {
                    Ok(l) if l.i == done.len() as u64 => {
                        done.push(l.v);
                        keep += line.len() as u64;
                    }
                    _ => break,
                }
            }
        }
        self.resumed.insert(name.to_string(), done.len() as u64);
        let file = OpenOptions::new().create(true).write(true).truncate(false).open(&path)?;
        file.set_len(keep)?;
        let mut file = OpenOptions::new().append(true).open(&path)?;
        let mut start = done.len() as u64;
        while start < n {
            let end = (start + self.chunk).min(n);
            let batch = par_map_ordered(start..end, None, &f)?;
            let mut buf = String::new();
            for (k, v) in batch.iter().enumerate() {
                buf.push_str(&serde_json::to_string(&Line { i: start + k as u64, v })?);
                buf.push('\n');
            }
            file.write_all(buf.as_bytes())?;
            file.sync_data()?;
            done.extend(batch);
            start = end;
        }
        Ok(done)
    }
}

struct Ctx<'a> {
    cfg: &'a Config,
    out: PathBuf,
    plots: PathBuf,
    domain: DomainSpec,
    dist: DistributionSpec,
    solver: SolverConfig,
    seed: u64,
    n: u64,
}

impl Ctx<'_> {
    fn field(&self, seed: u64, r: u64) -> deltalab::Result<CouplingField> {
        sample_couplings(&self.dist, self.domain.num_sites(), StreamKey::new(seed, r))
    }

    fn volume(&self) -> f64 {
        self.domain.volume()
    }

    /// Per-realization counts in each interval over the auxiliary DOS stream.
    fn dos_counts(&self, ck: &mut Checkpoint, stage: &str, intervals: &[(f64, f64)]) -> Result<Vec<Vec<usize>>, Failure> {
        let n = self.cfg.dos_realizations();
        let seed = self.seed ^ DOS_SEED_SALT;
        let (domain, solver) = (self.domain.clone(), self.solver);
        let dist = self.dist.clone();
        ck.stage(stage, n, |r| {
            let field = sample_couplings(&dist, domain.num_sites(), StreamKey::new(seed, r))?;
            interval_counts(&domain, &field, solver, intervals)
        })
    }

    /// `E_0` and `n̂(E_0)` with a record of how they were obtained.
    fn reference(&self, ck: &mut Checkpoint) -> Result<(f64, Estimate, Value), Failure> {
        let delta = self.cfg.delta();
        match self.cfg.e0.expect("validated") {
            E0Spec::Value(e0) => {
                let counts = self.dos_counts(ck, "dos", &dos_intervals(&[e0], delta)?)?;
                let dos = dos_from_counts(&counts, &[e0], delta, self.volume())[0].dos;
                Ok((e0, dos, json!({ "mode": "value", "value": e0, "dos": dos, "delta": delta })))
            }
            E0Spec::Auto(_) => {
                let grid = self.cfg.dos_grid();
                let counts = self.dos_counts(ck, "dos-scan", &dos_intervals(&grid, delta)?)?;
                let scan = dos_from_counts(&counts, &grid, delta, self.volume());
                let (e0, dos) = pick_e0(&scan)?;
                Ok((e0, dos, json!({ "mode": "auto-dos-scan", "value": e0, "dos": dos, "delta": delta, "scan": scan })))
            }
        }
    }

    /// The rescaling window. Unless configured, the extension is `9.2 / n̂`,
    /// which leaves the last gap censored with probability about `1e-4`.
    fn les_window(&self, e0: f64, dos: f64) -> Result<LesWindow, Failure> {
        let w = self.cfg.w.expect("validated");
        let ext = self.cfg.extension.unwrap_or(if dos > 0.0 { 9.2 / dos } else { 0.0 });
        let vol = self.volume();
        // an automatic extension shrinks to fit below 0
        let ext = if self.cfg.extension.is_none() { ext.min(0.5 * (-e0 * vol - w).max(0.0)) } else { ext };
        LesWindow::extended(e0, vol, w, ext).map_err(|e| Failure::config(Some("w".into()), e.to_string()))
    }
}

fn pick_e0(scan: &[DosPoint]) -> Result<(f64, Estimate), Failure> {
    let e0 = propose_e0(scan).ok_or_else(|| Failure::from(deltalab::Error::InsufficientData("empty DOS scan".into())))?;
    let dos = scan.iter().find(|p| p.energy == e0).expect("proposed from scan").dos;
    if !(dos.mean > 0.0) {
        return Err(deltalab::Error::InsufficientData("the DOS scan found no eigenvalues".into()).into());
    }
    Ok((e0, dos))
}

fn interval_counts(
    domain: &DomainSpec,
    field: &CouplingField,
    solver: SolverConfig,
    intervals: &[(f64, f64)],
) -> deltalab::Result<Vec<usize>> {
    let cf = deltalab::spectra::CountingFunction::new(domain, field, solver)?;
    let mut cache: BTreeMap<u64, usize> = BTreeMap::new();
    let mut at = |e: f64| -> deltalab::Result<usize> {
        if let Some(&c) = cache.get(&e.to_bits()) {
            return Ok(c);
        }
        let c = cf.count(e)?.count;
        cache.insert(e.to_bits(), c);
        Ok(c)
    };
    intervals.iter().map(|&(a, b)| Ok(at(b)? - at(a)?)).collect()
}

/// Runs the configured experiment and writes every artifact. Returns the
/// summary that was written.
pub fn run(cfg: &Config) -> Result<Value, Failure> {
    let started = Instant::now();
    let out = cfg.output_dir.clone().expect("validated");
    fs::create_dir_all(&out)?;
    let mut ck = Checkpoint::open(&out, cfg)?;
    let ctx = Ctx {
        cfg,
        plots: out.join("plotdata"),
        out,
        domain: cfg.domain()?,
        dist: cfg.distribution_spec()?,
        solver: cfg.solver(),
        seed: cfg.seed(),
        n: cfg.realizations(),
    };
    let (results, e0) = match cfg.experiment {
        Experiment::Spectrum => (spectrum(&ctx, &mut ck)?, None),
        Experiment::OracleCompare => (oracle_compare(&ctx, &mut ck)?, None),
        Experiment::Les => les(&ctx, &mut ck)?,
        Experiment::Zeta => zeta(&ctx, &mut ck)?,
        Experiment::UanaGap => uana_gap(&ctx, &mut ck)?,
        Experiment::Dos => (dos(&ctx, &mut ck)?, None),
        Experiment::Wegner | Experiment::Minami => count_moments(&ctx, &mut ck)?,
        Experiment::Fracmom => fracmom(&ctx, &mut ck)?,
        Experiment::Rankone => (rankone(&ctx, &mut ck)?, None),
    };
    let mut summary = json!({
        "experiment": cfg.experiment_name(),
        "config": cfg,
        "seed": ctx.seed,
        "build": {
            "version": env!("CARGO_PKG_VERSION"),
            "git_describe": env!("DELTALAB_GIT_DESCRIBE"),
        },
        "resumed": ck.resumed,
        "results": results,
    });
    if let Some(e0) = e0 {
        summary["E0"] = e0;
    }
    summary["wall_time_s"] = json!(started.elapsed().as_secs_f64());
    fs::write(ctx.out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

fn spectrum_rows(spectra: &[Spectrum]) -> Vec<(u64, f64, usize)> {
    spectra
        .iter()
        .enumerate()
        .flat_map(|(r, s)| s.eigenvalues.iter().map(move |e| (r as u64, e.energy, e.multiplicity)))
        .collect()
}

fn spectrum(ctx: &Ctx, ck: &mut Checkpoint) -> Result<Value, Failure> {
    let [lo, hi] = ctx.cfg.window.expect("validated");
    let spectra = {
        let c = ctx;
        let (domain, solver, seed) = (&c.domain, c.solver, c.seed);
        let f = |r| solve_spectrum(domain, &c.field(seed, r)?, (lo, hi), solver);
        ck.stage("spectrum", ctx.n, f)?
    };
    output::write_eigenvalues(&ctx.out.join("eigenvalues.csv"), &spectrum_rows(&spectra))?;
    let counts: Vec<usize> = spectra.iter().map(|s| s.total_count).collect();
    output::write_dat(&ctx.plots, "count_histogram.dat", ("count", "frequency"), output::count_histogram(&counts))?;
    Ok(json!({
        "window": [lo, hi],
        "sites": ctx.domain.num_sites(),
        "eigenvalues": counts.iter().sum::<usize>(),
        "count": Estimate::from_samples(counts.iter().map(|&c| c as f64)),
        "unresolved": spectra.iter().flat_map(|s| &s.eigenvalues).filter(|e| e.unresolved).count(),
        "jittered_probes": spectra.iter().map(|s| s.jitters.len()).sum::<usize>(),
    }))
}

#[derive(Serialize, Deserialize)]
struct OracleRecord {
    solver: Spectrum,
    oracle: Spectrum,
}

fn oracle_compare(ctx: &Ctx, ck: &mut Checkpoint) -> Result<Value, Failure> {
    let [lo, hi] = ctx.cfg.window.expect("validated");
    let records = {
        let c = ctx;
        let (domain, solver, seed) = (&c.domain, c.solver, c.seed);
        let positions: Vec<f64> = domain.lattice().iter().map(|p| p.0[0]).collect();
        let length = domain.sides()[0];
        let f = |r| {
            let field = c.field(seed, r)?;
            let problem = ShootingProblem::new(length, positions.clone(), field.values().to_vec())?;
            Ok(OracleRecord {
                solver: solve_spectrum(domain, &field, (lo, hi), solver)?,
                oracle: shoot_spectrum(&problem, (lo, hi))?,
            })
        };
        ck.stage("oracle-compare", ctx.n, f)?
    };
    let solver: Vec<Spectrum> = records.iter().map(|r| r.solver.clone()).collect();
    let oracle: Vec<Spectrum> = records.iter().map(|r| r.oracle.clone()).collect();
    output::write_eigenvalues(&ctx.out.join("eigenvalues.csv"), &spectrum_rows(&solver))?;
    output::write_eigenvalues(&ctx.out.join("oracle.csv"), &spectrum_rows(&oracle))?;
    let mut mismatched = 0;
    let mut max_rel = 0.0f64;
    for r in &records {
        let (a, b) = (r.solver.energies(), r.oracle.energies());
        if a.len() != b.len() {
            mismatched += 1;
            continue;
        }
        for (x, y) in a.iter().zip(&b) {
            max_rel = max_rel.max((x - y).abs() / y.abs());
        }
    }
    Ok(json!({
        "window": [lo, hi],
        "realizations": records.len(),
        "count_mismatches": mismatched,
        "max_relative_difference": max_rel,
    }))
}

fn rescaled_rows(samples: &[PointSample]) -> Vec<(u64, f64)> {
    samples.iter().flat_map(|s| s.points.iter().map(move |&x| (s.realization, x))).collect()
}

fn physical_rows(samples: &[PointSample]) -> Vec<(u64, f64, usize)> {
    samples
        .iter()
        .flat_map(|s| output::group_equal(&s.physical()).into_iter().map(move |(e, m)| (s.realization, e, m)))
        .collect()
}

/// Poisson tests plus spacing and count plots.
fn point_process_report(ctx: &Ctx, samples: &[PointSample], intensity: f64, prefix: &str) -> Result<PoissonReport, Failure> {
    let report = poisson_tests(samples, intensity, 1)?;
    let gaps: Vec<f64> = samples.iter().flat_map(|s| s.successor_gaps().0).collect();
    if intensity > 0.0 {
        let hi = 5.0 / intensity;
        let hist = output::density_histogram(&gaps, hi, 40);
        let exp: Vec<(f64, f64)> = hist.iter().map(|&(x, _)| (x, intensity * (-intensity * x).exp())).collect();
        output::write_dat(&ctx.plots, &format!("{prefix}spacing_histogram.dat"), ("gap", "density"), hist)?;
        output::write_dat(&ctx.plots, &format!("{prefix}spacing_exponential.dat"), ("gap", "density"), exp)?;
    }
    let counts: Vec<usize> = samples.iter().map(|s| s.len()).collect();
    let hist = output::count_histogram(&counts);
    let pmf = poisson_pmf(intensity * 2.0 * samples[0].halfwidth, hist.len());
    output::write_dat(&ctx.plots, &format!("{prefix}count_histogram.dat"), ("count", "frequency"), hist)?;
    output::write_dat(
        &ctx.plots,
        &format!("{prefix}count_poisson.dat"),
        ("count", "probability"),
        pmf.into_iter().enumerate().map(|(k, p)| (k as f64, p)),
    )?;
    Ok(report)
}

fn les(ctx: &Ctx, ck: &mut Checkpoint) -> Result<(Value, Option<Value>), Failure> {
    let (e0, dos, e0_info) = ctx.reference(ck)?;
    let win = ctx.les_window(e0, dos.mean)?;
    let samples = {
        let c = ctx;
        let (domain, solver, seed) = (&c.domain, c.solver, c.seed);
        let f = |r| les_sample(r, domain, &c.field(seed, r)?, &win, solver);
        ck.stage("les", ctx.n, f)?
    };
    output::write_eigenvalues(&ctx.out.join("eigenvalues.csv"), &physical_rows(&samples))?;
    output::write_rescaled(&ctx.out.join("rescaled.csv"), &rescaled_rows(&samples))?;
    let report = point_process_report(ctx, &samples, dos.mean, "")?;
    Ok((json!({ "window": win, "intensity": dos, "poisson": report }), Some(e0_info)))
}

/// `Ê[count]` against `n̂ 2w`, in units of the combined standard error.
fn intensity_check(samples: &[PointSample], dos: Estimate, w: f64) -> Value {
    let count = Estimate::from_samples(samples.iter().map(|s| s.len() as f64));
    let expected = dos.scaled(2.0 * w);
    let sigma = (count.stderr.powi(2) + expected.stderr.powi(2)).sqrt();
    json!({ "count": count, "expected": expected, "z": (count.mean - expected.mean) / sigma })
}

fn zeta(ctx: &Ctx, ck: &mut Checkpoint) -> Result<(Value, Option<Value>), Failure> {
    let (e0, dos, e0_info) = ctx.reference(ck)?;
    let win = ctx.les_window(e0, dos.mean)?;
    let array = SubcubeArray::new(&ctx.domain, ctx.cfg.alpha.expect("validated"), ctx.cfg.tiling.unwrap_or_default())?;
    let samples = {
        let c = ctx;
        let (array, solver, seed) = (&array, c.solver, c.seed);
        let f = |r| build_zeta(r, &c.field(seed, r)?, array, &win, solver);
        ck.stage("zeta", ctx.n, f)?
    };
    output::write_eigenvalues(&ctx.out.join("eigenvalues.csv"), &physical_rows(&samples))?;
    output::write_rescaled(&ctx.out.join("rescaled.csv"), &rescaled_rows(&samples))?;
    let report = point_process_report(ctx, &samples, dos.mean, "")?;
    Ok((
        json!({
            "window": win,
            "blocks": array.len(),
            "ell": array.ell(),
            "intensity": dos,
            "intensity_check": intensity_check(&samples, dos, win.halfwidth),
            "poisson": report,
        }),
        Some(e0_info),
    ))
}

#[derive(Serialize, Deserialize)]
struct GapRecord {
    xi: PointSample,
    zeta: PointSample,
}

fn uana_gap(ctx: &Ctx, ck: &mut Checkpoint) -> Result<(Value, Option<Value>), Failure> {
    let (e0, dos, e0_info) = ctx.reference(ck)?;
    let win = ctx.les_window(e0, dos.mean)?;
    let array = SubcubeArray::new(&ctx.domain, ctx.cfg.alpha.expect("validated"), ctx.cfg.tiling.unwrap_or_default())?;
    let fns: Vec<TestFunction> = ctx
        .cfg
        .test_functions()
        .iter()
        .map(|t| TestFunction::single(t[0], t[1], t[2]))
        .collect::<deltalab::Result<_>>()?;
    let records = {
        let c = ctx;
        let (domain, array, solver, seed) = (&c.domain, &array, c.solver, c.seed);
        let f = |r| {
            let field = c.field(seed, r)?;
            Ok(GapRecord {
                xi: les_sample(r, domain, &field, &win, solver)?,
                zeta: build_zeta(r, &field, array, &win, solver)?,
            })
        };
        ck.stage("uana-gap", ctx.n, f)?
    };
    let (xi, zeta): (Vec<PointSample>, Vec<PointSample>) = records.into_iter().map(|r| (r.xi, r.zeta)).unzip();
    output::write_eigenvalues(&ctx.out.join("eigenvalues.csv"), &physical_rows(&xi))?;
    output::write_rescaled(&ctx.out.join("rescaled.csv"), &rescaled_rows(&xi))?;
    let mut gaps = Vec::new();
    for (f, t) in fns.iter().zip(ctx.cfg.test_functions()) {
        gaps.push(json!({
            "a": t[0], "sigma": t[1], "tau": t[2],
            "gap": xi_zeta_gap(&xi, &zeta, f)?,
            "xi": laplace_functional(&xi, f)?,
            "zeta": laplace_functional(&zeta, f)?,
            "poisson": poisson_laplace(f, dos.mean, Some(win.halfwidth)),
        }));
    }
    Ok((
        json!({
            "window": win,
            "blocks": array.len(),
            "ell": array.ell(),
            "intensity": dos,
            "gaps": gaps,
            "xi_intensity_check": intensity_check(&xi, dos, win.halfwidth),
            "zeta_intensity_check": intensity_check(&zeta, dos, win.halfwidth),
        }),
        Some(e0_info),
    ))
}

fn dos(ctx: &Ctx, ck: &mut Checkpoint) -> Result<Value, Failure> {
    let grid = ctx.cfg.dos_grid();
    let delta = ctx.cfg.delta();
    let intervals = dos_intervals(&grid, delta)?;
    let counts = {
        let c = ctx;
        let (domain, solver, seed) = (&c.domain, c.solver, c.seed);
        let f = |r| interval_counts(domain, &c.field(seed, r)?, solver, &intervals);
        ck.stage("dos", ctx.n, f)?
    };
    let scan = dos_from_counts(&counts, &grid, delta, ctx.volume());
    output::write_dat(&ctx.plots, "dos.dat", ("energy", "dos"), scan.iter().map(|p| (p.energy, p.dos.mean)))?;
    Ok(json!({ "delta": delta, "scan": scan, "proposed_E0": pick_e0(&scan).ok().map(|p| p.0) }))
}

fn count_moments(ctx: &Ctx, ck: &mut Checkpoint) -> Result<(Value, Option<Value>), Failure> {
    let (e0, e0_info) = match ctx.cfg.e0.expect("validated") {
        E0Spec::Value(e) => (e, json!({ "mode": "value", "value": e })),
        E0Spec::Auto(_) => {
            let (e, _, info) = ctx.reference(ck)?;
            (e, info)
        }
    };
    let etas = ctx.cfg.etas();
    let intervals = count_intervals(e0, &etas).map_err(|e| Failure::config(Some("etas".into()), e.to_string()))?;
    let counts = {
        let c = ctx;
        let (domain, solver, seed) = (&c.domain, c.solver, c.seed);
        let f = |r| interval_counts(domain, &c.field(seed, r)?, solver, &intervals);
        ck.stage("counts", ctx.n, f)?
    };
    let scan = count_scan_from(&counts, e0, &etas, ctx.volume());
    let log_rows = |pick: fn(&deltalab::stats::estimators::CountRow) -> f64| -> Vec<(f64, f64)> {
        scan.rows.iter().filter(|r| pick(r) > 0.0).map(|r| (r.eta.ln(), pick(r).ln())).collect()
    };
    output::write_dat(&ctx.plots, "wegner.dat", ("ln_eta", "ln_mean_count"), log_rows(|r| r.mean.mean))?;
    output::write_dat(&ctx.plots, "minami.dat", ("ln_eta", "ln_factorial_moment"), log_rows(|r| r.factorial.mean))?;
    Ok((serde_json::to_value(&scan)?, Some(e0_info)))
}

fn fracmom(ctx: &Ctx, ck: &mut Checkpoint) -> Result<(Value, Option<Value>), Failure> {
    let (e0, e0_info) = match ctx.cfg.e0.expect("validated") {
        E0Spec::Value(e) => (e, json!({ "mode": "value", "value": e })),
        E0Spec::Auto(_) => {
            let (e, _, info) = ctx.reference(ck)?;
            (e, info)
        }
    };
    let s = ctx.cfg.s.expect("validated");
    let z = Complex64::new(e0, 0.0);
    let tol = ctx.cfg.tolerances();
    let rows = {
        let c = ctx;
        let (domain, seed, maxd) = (&c.domain, c.seed, c.cfg.max_distance);
        let f = |r| frac_moment_row(domain, &c.field(seed, r)?, z, s, maxd, tol.image_tol, tol.cond_cap);
        ck.stage("fracmom", ctx.n, f)?
    };
    let report = frac_moment_fit(&rows, z, s)?;
    output::write_dat(
        &ctx.plots,
        "log_moment_vs_distance.dat",
        ("distance", "ln_moment"),
        report.bins.iter().filter(|b| b.moment.mean > 0.0).map(|b| (b.distance, b.moment.mean.ln())),
    )?;
    Ok((serde_json::to_value(&report)?, Some(e0_info)))
}

#[derive(Serialize, Deserialize)]
struct RankOneRecord {
    n: usize,
    report: RankOneReport,
}

fn rankone(ctx: &Ctx, ck: &mut Checkpoint) -> Result<Value, Failure> {
    let trials = ctx.cfg.trials.expect("validated");
    let max_n = ctx.cfg.max_n.unwrap_or(8);
    let grid = ctx.cfg.grid.unwrap_or(200);
    let seed = ctx.seed;
    let records = ck.stage("rankone", trials, |t| {
        let n = 1 + (t as usize % max_n);
        let mut rng = StreamKey::new(seed, t).site_rng(0);
        let pair = RankOnePair::random(n, &mut rng)?;
        Ok(RankOneRecord { n, report: rank_one_verify(&pair, grid) })
    })?;
    let sum = |f: fn(&RankOneReport) -> usize| records.iter().map(|r| f(&r.report)).sum::<usize>();
    Ok(json!({
        "trials": trials,
        "violations": sum(RankOneReport::violations),
        "count_violations": sum(|r| usize::from(r.count_violation)),
        "lower_violations": sum(|r| usize::from(r.lower_violation)),
        "monotonicity_violations": sum(|r| r.monotonicity_violations),
        "interlacing_violations": sum(|r| r.interlacing_violations),
        "max_formula_error": records.iter().map(|r| r.report.formula_error).fold(0.0, f64::max),
        "cyclic_fraction": records.iter().filter(|r| r.report.cyclic).count() as f64 / records.len() as f64,
    }))
}
