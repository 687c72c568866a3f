mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rnp_core::harness::{
    default_out_dir, run_diagnostics, run_experiment, ExperimentReport, ExperimentSpec, IdentityGrid, ProblemSpec,
    SolverChoice,
};
use rnp_core::problems::{BlurKernel, PhantomKind, Regularizer, CT_DEFAULT_NOISE, CT_DEFAULT_VIEWS};
use rnp_core::prox::GroupNorm;
use rnp_core::solvers::{IrmConfig, WapgConfig};
use rnp_core::Error;

#[derive(Parser, Debug)]
#[command(name = "rnp", version, about = "Randomized Nyström preconditioned image reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Deblurring with salt-and-pepper noise, solved by IRM
    Deblur(DeblurArgs),
    /// 2x super-resolution, solved by IRM
    Sr(SrArgs),
    /// Sparse-view CT, solved by weighted APG
    Ct(CtArgs),
    /// Dense-oracle diagnostics
    Diag(DiagArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GridArg {
    Coarse,
    Fine,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat key = value file; explicit flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Image side length
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Ground-truth phantom: shepp_logan or blocks
    #[arg(long, default_value = "shepp_logan")]
    phantom: PhantomKind,
    /// Grid of regularization weights; overrides --lambda
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Random seeds, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seed: Vec<u64>,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output root [default: $RNP_OUT_DIR or ./out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Experiment directory name under the output root
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args, Debug)]
struct IrmArgs {
    /// Data-fidelity exponent
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Regularizer exponent
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Regularization weight
    #[arg(long, default_value_t = IrmConfig::default().lambda)]
    lambda: f64,
    /// Sketch sizes, comma separated; 0 runs plain CG
    #[arg(long = "K", value_delimiter = ',', default_value = "0,100")]
    k: Vec<usize>,
    /// Inner PCG relative tolerance
    #[arg(long, default_value_t = IrmConfig::default().inner_tol)]
    tol: f64,
    /// Outer IRM iterations
    #[arg(long, default_value_t = IrmConfig::default().outer_max)]
    max_iter: usize,
    /// Use the square root of the tail eigenvalue in the preconditioner
    #[arg(long, value_enum, default_value = "off")]
    sqrt_tail: OnOff,
    /// Salt-and-pepper fraction per polarity
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
}

#[derive(Args, Debug)]
struct DeblurArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    irm: IrmArgs,
    /// Blur kernel: uniform9 or gauss9
    #[arg(long, default_value = "uniform9")]
    kernel: BlurKernel,
}

#[derive(Args, Debug)]
struct SrArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    irm: IrmArgs,
    /// Downsampling factor
    #[arg(long, default_value_t = 2)]
    factor: usize,
}

#[derive(Args, Debug)]
struct CtArgs {
    #[command(flatten)]
    common: Common,
    /// Regularizer: tv, hs or wavelet
    #[arg(long, default_value = "tv")]
    reg: Regularizer,
    /// Mixed-norm inner exponent: 1, 2 or inf
    #[arg(long, default_value = "2")]
    phi: GroupNorm,
    /// Regularization weight
    #[arg(long, default_value_t = WapgConfig::default().lambda)]
    lambda: f64,
    /// Sketch sizes, comma separated [default: 0,20; 0,100 for hs]
    #[arg(long = "K", value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Projection views
    #[arg(long, default_value_t = CT_DEFAULT_VIEWS)]
    views: usize,
    /// Relative Gaussian noise level on the sinogram
    #[arg(long, default_value_t = CT_DEFAULT_NOISE)]
    noise: f64,
    /// Inner dual-solver tolerance
    #[arg(long, default_value_t = WapgConfig::default().inner_tol)]
    tol: f64,
    /// Outer APG iterations
    #[arg(long, default_value_t = WapgConfig::default().outer_max)]
    max_iter: usize,
    /// Use the square root of the tail eigenvalue in the preconditioner
    #[arg(long, value_enum, default_value = "on")]
    sqrt_tail: OnOff,
}

#[derive(Args, Debug)]
struct DiagArgs {
    /// Flat key = value file; explicit flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Radius grid for the half-quadratic identity check
    #[arg(long, value_enum, default_value = "coarse")]
    identity_grid: GridArg,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn irm_config(a: &IrmArgs) -> IrmConfig {
    IrmConfig {
        p: a.p,
        q: a.q,
        lambda: a.lambda,
        inner_tol: a.tol,
        outer_max: a.max_iter,
        sqrt_tail: a.sqrt_tail == OnOff::On,
        ..IrmConfig::default()
    }
}

fn spec_from(
    common: &Common,
    default_name: &str,
    problem: ProblemSpec,
    solver: SolverChoice,
    lambda: f64,
    k: Vec<usize>,
) -> ExperimentSpec {
    ExperimentSpec {
        name: common.name.clone().unwrap_or_else(|| default_name.to_string()),
        problem,
        solver,
        sketch_sizes: k,
        lambdas: common.lambda_grid.clone().unwrap_or_else(|| vec![lambda]),
        seeds: common.seed.clone(),
        out_dir: common.out.clone().unwrap_or_else(default_out_dir),
        jobs: common.jobs,
    }
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

fn print_report(report: &ExperimentReport) {
    println!(
        "{:>6} {:>6} {:>11} {:>9} {:>13} {:>10} {:>8} {:>8}  status",
        "K", "seed", "best_lambda", "psnr", "cost", "time_s", "inner", "ST"
    );
    for r in &report.summary {
        println!(
            "{:>6} {:>6} {:>11} {:>9.3} {:>13.6e} {:>10.3} {:>8} {:>8}  {}",
            r.k,
            r.seed,
            r.best_lambda.map_or_else(|| "-".to_string(), |l| format!("{l:.3e}")),
            r.psnr,
            r.cost,
            r.elapsed_s,
            r.inner_iters,
            fmt_opt(r.st, 3),
            r.status
        );
    }
    println!("summary: {}", report.summary_path.display());
}

fn run_spec(spec: ExperimentSpec) -> Result<(), Failure> {
    spec.validate()?;
    // surface malformed problem parameters as usage errors
    spec.problem.build(spec.seeds[0])?;
    let report = run_experiment(&spec)?;
    print_report(&report);
    let failed = report.runs.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} of {} runs failed", report.runs.len())));
    }
    Ok(())
}

fn cmd_deblur(a: DeblurArgs) -> Result<(), Failure> {
    let problem = ProblemSpec::Deblur {
        phantom: a.common.phantom,
        kernel: a.kernel,
        n: a.common.n,
        noise_frac: a.irm.noise,
    };
    let cfg = irm_config(&a.irm);
    cfg.validate()?;
    run_spec(spec_from(&a.common, "deblur", problem, SolverChoice::Irm(cfg), a.irm.lambda, a.irm.k.clone()))
}

fn cmd_sr(a: SrArgs) -> Result<(), Failure> {
    let problem = ProblemSpec::Sr {
        phantom: a.common.phantom,
        n: a.common.n,
        factor: a.factor,
        noise_frac: a.irm.noise,
    };
    let cfg = irm_config(&a.irm);
    cfg.validate()?;
    run_spec(spec_from(&a.common, "sr", problem, SolverChoice::Irm(cfg), a.irm.lambda, a.irm.k.clone()))
}

fn cmd_ct(a: CtArgs) -> Result<(), Failure> {
    let problem = ProblemSpec::Ct {
        phantom: a.common.phantom,
        n: a.common.n,
        views: a.views,
        regularizer: a.reg,
        noise_sigma: a.noise,
    };
    let cfg = WapgConfig {
        lambda: a.lambda,
        phi: a.phi,
        inner_tol: a.tol,
        outer_max: a.max_iter,
        sqrt_tail: a.sqrt_tail == OnOff::On,
        ..WapgConfig::default()
    };
    let k = a.k.clone().unwrap_or_else(|| match a.reg {
        Regularizer::Hessian => vec![0, 100],
        _ => vec![0, 20],
    });
    run_spec(spec_from(&a.common, "ct", problem, SolverChoice::Wapg(cfg), a.lambda, k))
}

fn cmd_diag(a: DiagArgs) -> Result<(), Failure> {
    let grid = match a.identity_grid {
        GridArg::Coarse => IdentityGrid::Coarse,
        GridArg::Fine => IdentityGrid::Fine,
    };
    let results = run_diagnostics(a.seed, grid)?;
    for r in &results {
        println!("{r}");
    }
    if let Some(t) = results.iter().find(|r| r.name.contains("condition")) {
        println!("median kappa {:.4} (threshold {})", t.value, t.threshold);
    }
    if results.iter().any(|r| !r.passed) {
        return Err(Failure::Runtime("diagnostics failed".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let root = Cli::command();
    let args = match config::merge_args(std::env::args().collect(), &root) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        // help and version exit 0, usage errors exit 2
        Err(e) => e.exit(),
    };
    let outcome = match cli.command {
        Cmd::Deblur(a) => cmd_deblur(a),
        Cmd::Sr(a) => cmd_sr(a),
        Cmd::Ct(a) => cmd_ct(a),
        Cmd::Diag(a) => cmd_diag(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
