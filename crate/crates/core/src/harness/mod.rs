//! Experiment sweeps, trace files and the saved-time metric.
//!
//! Every run writes `out/<experiment>/<run-id>.csv` with the columns
//! `iter,elapsed_s,cost,psnr,inner_iters,sketch_s`; the sweep also writes
//! `summary.csv`.

mod diag;

pub use diag::{
    half_quadratic_check, nystrom_oracle_check, run_diagnostics, theorem2_check, DiagnosticResult, IdentityGrid,
};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problems::{make_ct, make_deblur, make_sr, BlurKernel, PhantomKind, ProblemInstance, Regularizer};
use crate::rng::Rng;
use crate::solvers::{irm_solve, wapg_solve, IrmConfig, SolverTrace, WapgConfig};

/// Environment variable overriding the default output root `out`.
pub const OUT_DIR_ENV: &str = "RNP_OUT_DIR";

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from)
}

/// `(t_without − t_with) / t_without`.
pub fn saved_time(t_without: f64, t_with: f64) -> Result<f64> {
    if !(t_without > 0.0) {
        return Err(Error::InvalidArgument(format!("baseline time must be positive, got {t_without}")));
    }
    Ok((t_without - t_with) / t_without)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Deblur {
        phantom: PhantomKind,
        kernel: BlurKernel,
        n: usize,
        noise_frac: f64,
    },
    Sr {
        phantom: PhantomKind,
        n: usize,
        factor: usize,
        noise_frac: f64,
    },
    Ct {
        phantom: PhantomKind,
        n: usize,
        views: usize,
        regularizer: Regularizer,
        noise_sigma: f64,
    },
}

impl ProblemSpec {
    /// Builds the instance; the degradation depends only on `seed`.
    pub fn build(&self, seed: u64) -> Result<ProblemInstance> {
        let mut rng = Rng::new(seed);
        match *self {
            ProblemSpec::Deblur {
                phantom,
                kernel,
                n,
                noise_frac,
            } => make_deblur(phantom, kernel, n, noise_frac, &mut rng),
            ProblemSpec::Sr {
                phantom,
                n,
                factor,
                noise_frac,
            } => make_sr(phantom, n, factor, noise_frac, &mut rng),
            ProblemSpec::Ct {
                phantom,
                n,
                views,
                regularizer,
                noise_sigma,
            } => make_ct(phantom, n, views, regularizer, noise_sigma, &mut rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverChoice {
    Irm(IrmConfig),
    Wapg(WapgConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub problem: ProblemSpec,
    pub solver: SolverChoice,
    /// 0 means no preconditioner.
    pub sketch_sizes: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::InvalidArgument(format!("bad experiment name {:?}", self.name)));
        }
        if self.sketch_sizes.is_empty() || self.lambdas.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidArgument("sketch sizes, λ grid and seeds must be nonempty".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(Error::InvalidArgument("seeds must be distinct".into()));
        }
        if self.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidArgument("λ values must be positive".into()));
        }
        Ok(())
    }

    pub fn experiment_dir(&self) -> PathBuf {
        self.out_dir.join(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_id: String,
    pub lambda: f64,
    pub k: usize,
    pub seed: u64,
    pub csv_path: Option<PathBuf>,
    pub trace: Option<SolverTrace>,
    pub error: Option<String>,
}

impl RunResult {
    pub fn final_psnr(&self) -> Option<f64> {
        self.trace.as_ref().and_then(|t| t.last()).map(|r| r.psnr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub k: usize,
    pub seed: u64,
    pub best_lambda: Option<f64>,
    pub psnr: f64,
    pub cost: f64,
    pub elapsed_s: f64,
    pub inner_iters: usize,
    /// Saved time against the `K = 0` run with the same `λ` and seed.
    pub st: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub runs: Vec<RunResult>,
    pub summary: Vec<SummaryRow>,
    pub summary_path: PathBuf,
}

pub fn run_id(lambda: f64, k: usize, seed: u64) -> String {
    format!("lam{lambda:e}-k{k}-s{seed}")
}

fn solve_one(spec: &ExperimentSpec, lambda: f64, k: usize, seed: u64) -> Result<SolverTrace> {
    let problem = spec.problem.build(seed)?;
    // solver randomness is independent of the degradation draw
    let mut rng = Rng::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let trace = match &spec.solver {
        SolverChoice::Irm(base) => {
            let cfg = IrmConfig {
                lambda,
                sketch_k: k,
                ..base.clone()
            };
            irm_solve(&problem, &cfg, &mut rng)?.1
        }
        SolverChoice::Wapg(base) => {
            let cfg = WapgConfig {
                lambda,
                sketch_k: k,
                ..base.clone()
            };
            wapg_solve(&problem, &cfg, &mut rng)?.1
        }
    };
    Ok(trace)
}

fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    fs::write(&tmp, body)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs every `(λ, K, seed)` combination, writing one CSV per run and a
/// summary with the best-PSNR `λ` per `(K, seed)`. Failed runs are
/// reported in the summary instead of aborting the sweep.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let dir = spec.experiment_dir();
    fs::create_dir_all(&dir)?;
    let mut combos = Vec::new();
    for &k in &spec.sketch_sizes {
        for &seed in &spec.seeds {
            for &lambda in &spec.lambdas {
                combos.push((lambda, k, seed));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    let runs: Vec<RunResult> = pool.install(|| {
        combos
            .par_iter()
            .map(|&(lambda, k, seed)| {
                let id = run_id(lambda, k, seed);
                let mut res = RunResult {
                    run_id: id.clone(),
                    lambda,
                    k,
                    seed,
                    csv_path: None,
                    trace: None,
                    error: None,
                };
                match solve_one(spec, lambda, k, seed) {
                    Ok(trace) => {
                        let path = dir.join(format!("{id}.csv"));
                        match write_atomic(&path, &trace.to_csv()) {
                            Ok(()) => res.csv_path = Some(path),
                            Err(e) => res.error = Some(e.to_string()),
                        }
                        res.trace = Some(trace);
                    }
                    Err(e) => res.error = Some(e.to_string()),
                }
                res
            })
            .collect()
    });
    let summary = summarize(&runs, spec);
    let summary_path = dir.join("summary.csv");
    write_atomic(&summary_path, &summary_csv(&summary))?;
    Ok(ExperimentReport {
        runs,
        summary,
        summary_path,
    })
}

fn summarize(runs: &[RunResult], spec: &ExperimentSpec) -> Vec<SummaryRow> {
    let find = |lambda: f64, k: usize, seed: u64| {
        runs.iter()
            .find(|r| r.lambda == lambda && r.k == k && r.seed == seed && r.error.is_none())
    };
    let mut rows = Vec::new();
    for &k in &spec.sketch_sizes {
        for &seed in &spec.seeds {
            let best = runs
                .iter()
                .filter(|r| r.k == k && r.seed == seed && r.error.is_none())
                .filter_map(|r| r.final_psnr().map(|p| (p, r)))
                .fold(None::<(f64, &RunResult)>, |acc, (p, r)| match acc {
                    Some((bp, _)) if bp >= p => acc,
                    _ => Some((p, r)),
                });
            let row = match best {
                Some((psnr, r)) => {
                    let trace = r.trace.as_ref().expect("successful run has a trace");
                    let last = trace.last().expect("nonempty trace");
                    let st = if k == 0 {
                        None
                    } else {
                        find(r.lambda, 0, seed)
                            .and_then(|b| saved_time(b.trace.as_ref()?.elapsed_s(), trace.elapsed_s()).ok())
                    };
                    SummaryRow {
                        k,
                        seed,
                        best_lambda: Some(r.lambda),
                        psnr,
                        cost: last.cost,
                        elapsed_s: trace.elapsed_s(),
                        inner_iters: trace.total_inner_iters(),
                        st,
                        status: "ok".into(),
                    }
                }
                None => {
                    let msg = runs
                        .iter()
                        .find(|r| r.k == k && r.seed == seed && r.error.is_some())
                        .and_then(|r| r.error.clone())
                        .unwrap_or_else(|| "no runs".into());
                    SummaryRow {
                        k,
                        seed,
                        best_lambda: None,
                        psnr: f64::NAN,
                        cost: f64::NAN,
                        elapsed_s: f64::NAN,
                        inner_iters: 0,
                        st: None,
                        status: format!("error: {}", msg.replace([',', '\n'], ";")),
                    }
                }
            };
            rows.push(row);
        }
    }
    rows
}

pub const SUMMARY_HEADER: &str = "k,seed,best_lambda,final_psnr,final_cost,elapsed_s,inner_iters,st,status";

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        let lam = r.best_lambda.map(|l| format!("{l:e}")).unwrap_or_default();
        let st = r.st.map(|v| format!("{v:.6}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.10e},{:.6},{},{},{}",
            r.k, r.seed, lam, r.psnr, r.cost, r.elapsed_s, r.inner_iters, st, r.status
        );
    }
    s
}

/// Inner-iteration counts with and without preconditioning for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedComparison {
    pub seed: u64,
    pub baseline: Vec<usize>,
    pub preconditioned: Vec<usize>,
    /// `1 − Σ preconditioned / Σ baseline`.
    pub reduction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerIterationComparison {
    pub per_seed: Vec<SeedComparison>,
    pub median_reduction: f64,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Runs IRM with `K = 0` and with `K = k` under identical seeds and
/// tolerances.
pub fn compare_inner_iterations(
    problem: &ProblemInstance,
    cfg: &IrmConfig,
    k: usize,
    seeds: &[u64],
) -> Result<InnerIterationComparison> {
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let counts = |kk: usize| -> Result<Vec<usize>> {
            let c = IrmConfig {
                sketch_k: kk,
                compare: false,
                ..cfg.clone()
            };
            let (_, trace) = irm_solve(problem, &c, &mut Rng::new(seed))?;
            Ok(trace.records.iter().map(|r| r.inner_iters).collect())
        };
        let baseline = counts(0)?;
        let preconditioned = counts(k)?;
        let b: usize = baseline.iter().sum();
        let p: usize = preconditioned.iter().sum();
        let reduction = if b == 0 { 0.0 } else { 1.0 - p as f64 / b as f64 };
        per_seed.push(SeedComparison {
            seed,
            baseline,
            preconditioned,
            reduction,
        });
    }
    let median_reduction = median(&per_seed.iter().map(|s| s.reduction).collect::<Vec<_>>());
    Ok(InnerIterationComparison {
        per_seed,
        median_reduction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saved_time_examples() {
        assert!((saved_time(100.0, 5.0).unwrap() - 0.95).abs() < 1e-15);
        assert_eq!(saved_time(3.0, 3.0).unwrap(), 0.0);
        assert!(saved_time(0.0, 1.0).is_err());
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    fn small_spec(dir: &Path, ks: Vec<usize>, lambdas: Vec<f64>) -> ExperimentSpec {
        ExperimentSpec {
            name: "unit".into(),
            problem: ProblemSpec::Deblur {
                phantom: PhantomKind::Blocks,
                kernel: BlurKernel::Gauss9,
                n: 32,
                noise_frac: 0.05,
            },
            solver: SolverChoice::Irm(IrmConfig {
                outer_max: 3,
                ..IrmConfig::default()
            }),
            sketch_sizes: ks,
            lambdas,
            seeds: vec![1],
            out_dir: dir.to_path_buf(),
            jobs: 2,
        }
    }

    fn body_without_timing(csv: &str) -> Vec<String> {
        csv.lines()
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                format!("{},{},{},{}", f[0], f[2], f[3], f[4])
            })
            .collect()
    }

    #[test]
    fn baseline_only_sweep_has_no_saved_time() {
        let tmp = tempfile::tempdir().unwrap();
        let rep = run_experiment(&small_spec(tmp.path(), vec![0], vec![1e-2])).unwrap();
        assert_eq!(rep.runs.len(), 1);
        assert!(rep.summary.iter().all(|r| r.st.is_none()));
        let text = fs::read_to_string(&rep.summary_path).unwrap();
        assert!(text.starts_with(SUMMARY_HEADER));
        let csv = fs::read_to_string(rep.runs[0].csv_path.as_ref().unwrap()).unwrap();
        assert!(csv.starts_with(SolverTrace::CSV_HEADER));
    }

    #[test]
    fn reruns_reproduce_and_best_lambda_is_argmax() {
        let tmp = tempfile::tempdir().unwrap();
        let spec = small_spec(tmp.path(), vec![0, 8], vec![1e-3, 1e-1]);
        let a = run_experiment(&spec).unwrap();
        let first: Vec<String> = a
            .runs
            .iter()
            .map(|r| fs::read_to_string(r.csv_path.as_ref().unwrap()).unwrap())
            .collect();
        let b = run_experiment(&spec).unwrap();
        for (r, body) in b.runs.iter().zip(&first) {
            let again = fs::read_to_string(r.csv_path.as_ref().unwrap()).unwrap();
            assert_eq!(body_without_timing(&again), body_without_timing(body));
        }
        for row in &a.summary {
            let best = a
                .runs
                .iter()
                .filter(|r| r.k == row.k && r.seed == row.seed)
                .max_by(|x, y| x.final_psnr().unwrap().total_cmp(&y.final_psnr().unwrap()))
                .unwrap();
            assert_eq!(row.best_lambda, Some(best.lambda));
            if row.k == 8 {
                let base = a.runs.iter().find(|r| r.k == 0 && r.lambda == best.lambda).unwrap();
                let expect = saved_time(
                    base.trace.as_ref().unwrap().elapsed_s(),
                    best.trace.as_ref().unwrap().elapsed_s(),
                )
                .unwrap();
                assert_eq!(row.st, Some(expect));
            }
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let mut s = small_spec(tmp.path(), vec![0], vec![1e-2]);
        s.seeds = vec![1, 1];
        assert!(run_experiment(&s).is_err());
        let s = small_spec(tmp.path(), vec![], vec![1e-2]);
        assert!(run_experiment(&s).is_err());
    }

    #[test]
    fn failed_runs_are_recorded() {
        let tmp = tempfile::tempdir().unwrap();
        let mut s = small_spec(tmp.path(), vec![0], vec![1e-2]);
        s.problem = ProblemSpec::Deblur {
            phantom: PhantomKind::Blocks,
            kernel: BlurKernel::Gauss9,
            n: 8,
            noise_frac: 0.0,
        };
        let rep = run_experiment(&s).unwrap();
        assert!(rep.runs[0].error.is_some());
        assert!(rep.summary[0].status.starts_with("error"));
    }

    #[test]
    fn identical_sketch_sizes_give_zero_reduction() {
        let p = ProblemSpec::Deblur {
            phantom: PhantomKind::Blocks,
            kernel: BlurKernel::Gauss9,
            n: 32,
            noise_frac: 0.05,
        }
        .build(1)
        .unwrap();
        let cfg = IrmConfig {
            outer_max: 3,
            lambda: 1e-2,
            ..IrmConfig::default()
        };
        let c = compare_inner_iterations(&p, &cfg, 0, &[1, 2]).unwrap();
        assert_eq!(c.median_reduction, 0.0);
    }

    #[test]
    fn full_sketch_nearly_removes_inner_iterations() {
        use crate::grid::ImageGrid;
        use crate::linops::{GroupKind, GroupStructure, IdentityOperator, MatrixOperator};
        use crate::prox::BoxConstraint;
        use std::sync::Arc;
        let n = 40;
        let mut rng = Rng::new(7);
        let q = crate::dense::random_orthogonal(n, &mut rng);
        let d: Vec<f64> = (0..n).map(|i| 10f64.powf(-3.0 * i as f64 / n as f64)).collect();
        let a = &q * crate::DenseMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)) * q.transpose();
        let y = rng.normal_vec(n);
        let p = ProblemInstance {
            a: Arc::new(MatrixOperator(a)),
            l: Arc::new(IdentityOperator(n)),
            groups: GroupStructure::new(GroupKind::Scalar, n),
            regularizer: Regularizer::Tv,
            l_norm_sq: 1.0,
            y,
            ground_truth: ImageGrid::zeros(n, 1),
            peak: 1.0,
            constraint: BoxConstraint::unbounded(),
            label: "dense".into(),
        };
        let cfg = IrmConfig {
            p: 1.0,
            q: 1.0,
            lambda: 1e-4,
            outer_max: 5,
            inner_tol: 1e-8,
            ..IrmConfig::default()
        };
        let c = compare_inner_iterations(&p, &cfg, n, &[1, 2, 3]).unwrap();
        assert!(c.median_reduction >= 0.9, "{c:?}");
    }
}
