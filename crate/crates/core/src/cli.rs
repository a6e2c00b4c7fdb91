//! The `psskit` command line.
//!
//! A job is described by flags, by a JSON spec file (`--spec`), or both, with
//! flags taking precedence. Paths inside a spec are relative to the spec's
//! directory. Every run writes `manifest.json` to the output directory.
//!
//! Exit codes: 0 success, 2 input error, 3 solver failure, 4 a containment
//! or positivity check failed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::approx::{
    bounding_box, containment_check, default_grid, fit_points, inner_pss, monte_carlo_volumes, outer_pss,
    ApproxSettings, CheckOptions, PssResult, SemialgSet, SetDescription,
};
use crate::error::{Error, Result};
use crate::io::{eval_grid, read_points, write_grid, write_points};
use crate::moments::BoundingBox;
use crate::sampler::{uniform_sample, PolyDensity};
use crate::solve::SolverSettings;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Bbox,
    Outer,
    Inner,
    Fit,
    Sample,
    EvalGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnOff {
    On,
    Off,
}

#[derive(Parser, Debug, Clone, Default)]
#[command(name = "psskit", version, about = "Polynomial superlevel-set approximation and uniform sampling of semialgebraic sets")]
pub struct Args {
    #[arg(long, value_enum)]
    pub task: Option<Task>,
    /// JSON job description; flags override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Set description JSON (generators and box).
    #[arg(long)]
    pub set: Option<PathBuf>,
    /// Point cloud CSV for `fit`.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// A previously written result JSON (for `sample` and `eval-grid`).
    #[arg(long)]
    pub poly: Option<PathBuf>,
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub order: Option<usize>,
    /// Points per axis of the containment / output grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Points per axis of the positivity grid used by `fit`.
    #[arg(long)]
    pub fit_grid: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of accepted samples for `sample`.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Monte-Carlo points for volume estimates.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Feasibility and gap tolerance of the conic solver.
    #[arg(long)]
    pub solver_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub rescale: Option<OnOff>,
    /// Skip writing grid.csv.
    #[arg(long)]
    pub no_grid_csv: bool,
}

/// JSON job description. `set`, `points` and `poly` are file paths.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub task: Option<Task>,
    pub set: Option<PathBuf>,
    pub points: Option<PathBuf>,
    pub poly: Option<PathBuf>,
    pub degree: Option<usize>,
    pub order: Option<usize>,
    pub grid: Option<usize>,
    pub fit_grid: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub mc_samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub solver: Option<SolverSettings>,
    pub rescale: Option<OnOff>,
}

#[derive(Debug)]
struct Job {
    task: Task,
    set: Option<SetDescription>,
    points: Option<Vec<Vec<f64>>>,
    poly: Option<PssResult>,
    degree: Option<usize>,
    order: Option<usize>,
    grid: Option<usize>,
    fit_grid: usize,
    seed: u64,
    samples: usize,
    mc_samples: usize,
    out: PathBuf,
    solver: SolverSettings,
    rescale: Option<bool>,
    write_grid: bool,
    inputs: Vec<InputRecord>,
}

#[derive(Clone, Debug, Serialize)]
struct InputRecord {
    role: &'static str,
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    task: Task,
    seed: u64,
    inputs: Vec<InputRecord>,
    outputs: Vec<String>,
    exit_code: i32,
    timings_seconds: BTreeMap<String, f64>,
    created_unix: u64,
}

/// Maps an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Solver { .. } | Error::SamplerStalled { .. } | Error::DegenerateFiber { .. } => EXIT_SOLVER,
        _ => EXIT_INPUT,
    }
}

fn read_input(path: &Path, role: &'static str, inputs: &mut Vec<InputRecord>) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    inputs.push(InputRecord {
        role,
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    });
    Ok(bytes)
}

fn json_input<T: for<'de> Deserialize<'de>>(bytes: &[u8], path: &Path) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

fn resolve(args: &Args) -> Result<Job> {
    let mut inputs = Vec::new();
    let (spec, base) = match &args.spec {
        Some(p) => {
            let bytes = read_input(p, "spec", &mut inputs)?;
            let spec: ProblemSpec = json_input(&bytes, p)?;
            (spec, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (ProblemSpec::default(), PathBuf::new()),
    };
    let from_spec = |p: &Option<PathBuf>| p.as_ref().map(|p| base.join(p));
    let task = args
        .task
        .or(spec.task)
        .ok_or_else(|| Error::invalid("no task given (--task or \"task\" in the spec)"))?;

    let set_path = args.set.clone().or_else(|| from_spec(&spec.set));
    let set = match &set_path {
        Some(p) => {
            let bytes = read_input(p, "set", &mut inputs)?;
            let d: SetDescription = json_input(&bytes, p)?;
            d.validate()?;
            Some(d)
        }
        None => None,
    };
    let points_path = args.points.clone().or_else(|| from_spec(&spec.points));
    let points = match &points_path {
        Some(p) => Some(read_points(read_input(p, "points", &mut inputs)?.as_slice())?),
        None => None,
    };
    let poly_path = args.poly.clone().or_else(|| from_spec(&spec.poly));
    let poly = match &poly_path {
        Some(p) => Some(json_input::<PssResult>(&read_input(p, "poly", &mut inputs)?, p)?),
        None => None,
    };

    let mut solver = spec.solver.clone().unwrap_or_default();
    if let Some(t) = args.solver_tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::invalid(format!("solver tolerance {t} must lie in (0, 1)")));
        }
        solver.tol_feas = t;
        solver.tol_gap = t;
    }
    let job = Job {
        task,
        set,
        points,
        poly,
        degree: args.degree.or(spec.degree),
        order: args.order.or(spec.order),
        grid: args.grid.or(spec.grid),
        fit_grid: args.fit_grid.or(spec.fit_grid).unwrap_or(50),
        seed: args.seed.or(spec.seed).unwrap_or(0),
        samples: args.samples.or(spec.samples).unwrap_or(10_000),
        mc_samples: args.mc_samples.or(spec.mc_samples).unwrap_or(1_000_000),
        out: args.out.clone().or_else(|| from_spec(&spec.out)).unwrap_or_else(|| PathBuf::from(".")),
        solver,
        rescale: args.rescale.or(spec.rescale).map(|r| r == OnOff::On),
        write_grid: !args.no_grid_csv,
        inputs,
    };
    validate(&job)?;
    Ok(job)
}

fn validate(job: &Job) -> Result<()> {
    let need_set_box = |what: &str| -> Result<()> {
        match &job.set {
            Some(SetDescription { bbox: Some(_), .. }) => Ok(()),
            Some(_) => Err(Error::invalid(format!("{what} needs a set with a box"))),
            None => Err(Error::invalid(format!("{what} needs --set"))),
        }
    };
    if let Some(g) = job.grid {
        if g < 2 {
            return Err(Error::invalid("--grid must be at least 2"));
        }
    }
    match job.task {
        Task::Bbox => {
            if job.set.is_none() {
                return Err(Error::invalid("bbox needs --set"));
            }
        }
        Task::Outer | Task::Inner => {
            need_set_box("outer/inner")?;
            if job.degree.is_none() {
                return Err(Error::invalid("outer/inner needs --degree"));
            }
        }
        Task::Fit => {
            need_set_box("fit (the box is read from the set file)")?;
            if job.points.is_none() {
                return Err(Error::invalid("fit needs --points"));
            }
            if job.degree.is_none() {
                return Err(Error::invalid("fit needs --degree"));
            }
        }
        Task::Sample => {
            need_set_box("sample")?;
            if job.poly.is_none() && job.degree.is_none() {
                return Err(Error::invalid("sample needs --poly or --degree"));
            }
            if job.samples == 0 {
                return Err(Error::invalid("--samples must be positive"));
            }
        }
        Task::EvalGrid => {
            if job.poly.is_none() {
                return Err(Error::invalid("eval-grid needs --poly"));
            }
        }
    }
    Ok(())
}

struct Run {
    out: PathBuf,
    outputs: Vec<String>,
    timings: BTreeMap<String, f64>,
}

impl Run {
    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.out.join(name), text)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_with<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut std::io::BufWriter<fs::File>) -> Result<()>,
    {
        let mut w = std::io::BufWriter::new(fs::File::create(self.out.join(name))?);
        f(&mut w)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let v = f();
        self.timings.insert(phase.to_string(), t.elapsed().as_secs_f64());
        v
    }
}

fn settings(job: &Job, degree: usize) -> ApproxSettings {
    ApproxSettings {
        degree,
        order: job.order,
        rescale: job.rescale,
        solver: job.solver.clone(),
    }
}

#[derive(Serialize)]
struct FitReport {
    points: usize,
    min_p_at_points: f64,
    min_p_on_grid: f64,
    grid_per_axis: usize,
    w: f64,
    passed: bool,
}

#[derive(Serialize)]
struct SampleReport {
    samples: usize,
    proposals: u64,
    accepted: u64,
    empirical_rate: f64,
    rejected_outside: u64,
    rejected_inside: u64,
    vol_set_estimate: f64,
    vol_set_std_error: f64,
    mass: f64,
    gamma_estimate: f64,
    degree: usize,
    seed: u64,
}

fn execute(job: &Job, run: &mut Run) -> Result<i32> {
    let set = || -> Result<SemialgSet> { job.set.as_ref().expect("validated").to_set() };
    let check = CheckOptions {
        grid_per_axis: job.grid,
        mc_samples: job.mc_samples,
        seed: job.seed,
        ..CheckOptions::default()
    };
    let grid_res = |n: usize| job.grid.or_else(|| default_grid(n));
    match job.task {
        Task::Bbox => {
            let d = job.set.as_ref().expect("validated");
            let b = run.time("solve", || bounding_box(&d.generators, d.dim, job.order, &job.solver))?;
            run.write_json("box.json", &b)?;
            Ok(EXIT_OK)
        }
        Task::Outer | Task::Inner => {
            let k = set()?;
            let s = settings(job, job.degree.expect("validated"));
            let r = run.time("solve", || {
                if job.task == Task::Outer {
                    outer_pss(&k, &s)
                } else {
                    inner_pss(&k, &s)
                }
            })?;
            run.write_json("result.json", &r)?;
            let report = run.time("check", || containment_check(&r, &k, &check))?;
            run.write_json("report.json", &report)?;
            if job.write_grid {
                if let Some(g) = grid_res(k.dim()) {
                    let rows = run.time("grid", || eval_grid(&r.poly, &r.bbox, g, Some(&k)))?;
                    run.write_with("grid.csv", |w| write_grid(w, &rows))?;
                }
            }
            Ok(if report.passed { EXIT_OK } else { EXIT_CHECK })
        }
        Task::Fit => {
            let b: BoundingBox = job.set.as_ref().and_then(|s| s.bbox.clone()).expect("validated");
            let pts = job.points.as_ref().expect("validated");
            let s = settings(job, job.degree.expect("validated"));
            let r = run.time("solve", || fit_points(pts, &b, job.fit_grid, &s))?;
            run.write_json("result.json", &r)?;
            let min_pts = pts.iter().map(|x| r.eval(x)).fold(f64::INFINITY, f64::min);
            let fit_rows = eval_grid(&r.poly, &b, job.fit_grid, None)?;
            let min_grid = fit_rows.iter().map(|g| g.p).fold(f64::INFINITY, f64::min);
            let tol = check.tolerance;
            let report = FitReport {
                points: pts.len(),
                min_p_at_points: min_pts,
                min_p_on_grid: min_grid,
                grid_per_axis: job.fit_grid,
                w: r.w,
                passed: min_pts >= 1.0 - tol && min_grid >= -tol,
            };
            run.write_json("report.json", &report)?;
            if job.write_grid {
                if let Some(g) = grid_res(b.dim()) {
                    let rows = run.time("grid", || eval_grid(&r.poly, &b, g, None))?;
                    run.write_with("grid.csv", |w| write_grid(w, &rows))?;
                }
            }
            Ok(if report.passed { EXIT_OK } else { EXIT_CHECK })
        }
        Task::Sample => {
            let k = set()?;
            let r = match &job.poly {
                Some(r) => {
                    if r.bbox != *k.bbox() {
                        return Err(Error::invalid("the result's box differs from the set's box"));
                    }
                    r.clone()
                }
                None => {
                    let s = settings(job, job.degree.expect("validated"));
                    let r = run.time("solve", || outer_pss(&k, &s))?;
                    run.write_json("result.json", &r)?;
                    r
                }
            };
            let pd = PolyDensity::from_result(&r)?;
            let batch = run.time("sample", || uniform_sample(&k, &pd, job.samples, job.seed))?;
            run.write_with("samples.csv", |w| write_points(w, &batch.samples))?;
            let vol = run.time("volume", || {
                monte_carlo_volumes(k.bbox(), job.mc_samples, job.seed, 1, |x, f| f[0] = k.contains(x))[0]
            });
            let report = SampleReport {
                samples: batch.samples.len(),
                proposals: batch.proposals,
                accepted: batch.accepted,
                empirical_rate: batch.empirical_rate,
                rejected_outside: batch.rejected_outside,
                rejected_inside: batch.rejected_inside,
                vol_set_estimate: vol.value,
                vol_set_std_error: vol.std_error,
                mass: pd.mass(),
                gamma_estimate: vol.value / pd.mass(),
                degree: r.degree,
                seed: job.seed,
            };
            run.write_json("sample_report.json", &report)?;
            Ok(EXIT_OK)
        }
        Task::EvalGrid => {
            let r = job.poly.as_ref().expect("validated");
            let k = match &job.set {
                Some(d) => Some(d.to_set()?),
                None => None,
            };
            let g = grid_res(r.bbox.dim())
                .ok_or_else(|| Error::invalid("--grid is required in dimension 4 and above"))?;
            let rows = run.time("grid", || eval_grid(&r.poly, &r.bbox, g, k.as_ref()))?;
            run.write_with("grid.csv", |w| write_grid(w, &rows))?;
            Ok(EXIT_OK)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("PSSKIT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // fails only if a pool already exists, in which case it is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs one job and returns the exit code. Errors are printed to stderr.
pub fn run(args: &Args) -> i32 {
    configure_threads();
    let job = match resolve(args) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("psskit: {e}");
            return exit_code(&e);
        }
    };
    if let Err(e) = fs::create_dir_all(&job.out) {
        eprintln!("psskit: cannot create {}: {e}", job.out.display());
        return EXIT_INPUT;
    }
    let mut run = Run {
        out: job.out.clone(),
        outputs: Vec::new(),
        timings: BTreeMap::new(),
    };
    let code = match execute(&job, &mut run) {
        Ok(c) => {
            if c == EXIT_CHECK {
                eprintln!("psskit: check failed, see report.json");
            }
            c
        }
        Err(e) => {
            eprintln!("psskit: {e}");
            exit_code(&e)
        }
    };
    let manifest = Manifest {
        tool: "psskit",
        version: env!("CARGO_PKG_VERSION"),
        task: job.task,
        seed: job.seed,
        inputs: job.inputs.clone(),
        outputs: run.outputs.clone(),
        exit_code: code,
        timings_seconds: run.timings.clone(),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    if let Err(e) = run.write_json("manifest.json", &manifest) {
        eprintln!("psskit: cannot write manifest: {e}");
        return EXIT_INPUT;
    }
    code
}
