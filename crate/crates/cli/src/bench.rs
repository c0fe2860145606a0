//! Benchmark suites: fixed grids of runs executed in parallel, one history CSV
//! per run and a `manifest.json` describing all of them.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{self, Series};
use crate::run::{execute, Report};
use crate::spec::{fmt_num, ProblemSpec, RunSpec, SolverKind};
use crate::CliError;

/// Environment variable naming the directory of SuiteSparse `.mtx` files.
pub const SUITESPARSE_ENV: &str = "BERR_SUITESPARSE_DIR";

/// Tolerance for suite runs: the smallest that MINBERR still detects with its
/// Cholesky/dqds test (just above `√u`).
pub const BENCH_TOL: f64 = 2e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Richardson, CG, MINRES and MINBERR on symmetric positive definite instances.
    PsdSynthetic,
    /// Richardson-NE, LSQR and MINBERR-NE on Ill-Conditioned(2000, κ), κ ∈ {1e2, 1e4, 1e6}.
    NonsymSynthetic,
    /// MINRES against MINBERR on Small-Outlier(2000, κ, σ) over a κ × σ grid.
    MinresWorstcase,
    /// MINBERR-NE with and without perturbation on Small-Outlier(500, κ, 1e-2).
    Stagnation,
    /// Perturbed MINBERR-NE on the stagnation instances over a grid of perturbation sizes.
    Perturbed,
    /// The six SuiteSparse matrices, read from a local directory.
    Suitesparse,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Self::PsdSynthetic => "psd-synthetic",
            Self::NonsymSynthetic => "nonsym-synthetic",
            Self::MinresWorstcase => "minres-worstcase",
            Self::Stagnation => "stagnation",
            Self::Perturbed => "perturbed",
            Self::Suitesparse => "suitesparse",
        }
    }
}

/// One run of a suite. Runs sharing a `group` solve the same problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub name: String,
    pub group: String,
    pub label: String,
    pub spec: RunSpec,
}

fn bench_run(problem: ProblemSpec, solver: SolverKind, max_iter: usize) -> BenchRun {
    let group = problem.slug();
    let mut spec = RunSpec::new(problem, solver);
    spec.tol = BENCH_TOL;
    spec.max_iter = max_iter;
    spec.reorth = true;
    spec.full_trace = true;
    BenchRun {
        name: format!("{group}__{solver}"),
        group,
        label: solver.name().into(),
        spec,
    }
}

fn perturbed_run(problem: ProblemSpec, eps: f64, max_iter: usize) -> BenchRun {
    let mut r = bench_run(problem, SolverKind::MinberrNePerturbed, max_iter);
    r.spec.perturb_eps = eps;
    r.name = format!("{}__eps{}", r.name, fmt_num(eps));
    r.label = format!("{} eps={}", r.label, fmt_num(eps));
    r
}

/// SuiteSparse matrices with their symmetry class.
pub const SUITESPARSE_MATRICES: [(&str, bool); 6] = [
    ("Pres_Poisson", true),
    ("olafu", true),
    ("raefsky4", true),
    ("sherman3", false),
    ("bayer03", false),
    ("cyl6", false),
];

fn find_matrix(dir: &Path, name: &str) -> Option<PathBuf> {
    let file = format!("{name}.mtx");
    [dir.join(&file), dir.join(name).join(&file)]
        .into_iter()
        .find(|p| p.is_file())
}

/// The grid of runs making up `suite`.
pub fn suite_runs(suite: Suite, suitesparse_dir: Option<&Path>) -> Result<Vec<BenchRun>, CliError> {
    use SolverKind::*;
    let ill = |n, kappa| ProblemSpec::IllConditioned { n, kappa };
    let outlier = |n, kappa, sigma| ProblemSpec::SmallOutlier { n, kappa, sigma };
    let mut runs = Vec::new();
    match suite {
        Suite::PsdSynthetic => {
            for p in [
                ill(2000, 1e8),
                outlier(2000, 1e10, 1e-3),
                ProblemSpec::RandomPsd { n: 300, seed: 1 },
            ] {
                runs.push(bench_run(p.clone(), Richardson, 2000));
                for s in [Cg, Minres, Minberr] {
                    runs.push(bench_run(p.clone(), s, 300));
                }
            }
        }
        Suite::NonsymSynthetic => {
            for kappa in [1e2, 1e4, 1e6] {
                runs.push(bench_run(ill(2000, kappa), RichardsonNe, 1000));
                runs.push(bench_run(ill(2000, kappa), Lsqr, 300));
                runs.push(bench_run(ill(2000, kappa), MinberrNe, 300));
            }
        }
        Suite::MinresWorstcase => {
            for kappa in [1e6, 1e10, 1e14] {
                for sigma in [1e-2, 1e-3, 1e-4] {
                    runs.push(bench_run(outlier(2000, kappa, sigma), Minres, 200));
                    runs.push(bench_run(outlier(2000, kappa, sigma), Minberr, 200));
                }
            }
        }
        Suite::Stagnation => {
            for kappa in [1e6, 1e10, 1e14] {
                runs.push(bench_run(outlier(500, kappa, 1e-2), MinberrNe, 300));
                runs.push(perturbed_run(outlier(500, kappa, 1e-2), 1e-3, 300));
            }
        }
        Suite::Perturbed => {
            for kappa in [1e6, 1e10, 1e14] {
                runs.push(bench_run(outlier(500, kappa, 1e-2), MinberrNe, 300));
                for eps in [1e-2, 1e-3, 1e-4] {
                    runs.push(perturbed_run(outlier(500, kappa, 1e-2), eps, 300));
                }
            }
        }
        Suite::Suitesparse => {
            let dir = suitesparse_dir.ok_or_else(|| {
                CliError::Spec(format!(
                    "suitesparse needs --dir or the {SUITESPARSE_ENV} environment variable"
                ))
            })?;
            if !dir.is_dir() {
                return Err(CliError::Spec(format!(
                    "{} is not a directory",
                    dir.display()
                )));
            }
            for (name, symmetric) in SUITESPARSE_MATRICES {
                let Some(path) = find_matrix(dir, name) else {
                    log::warn!("{name}.mtx not found under {}, skipping", dir.display());
                    continue;
                };
                let solvers: &[SolverKind] = if symmetric {
                    &[Richardson, Cg, Minres, Minberr]
                } else {
                    &[RichardsonNe, Lsqr, MinberrNe]
                };
                for &s in solvers {
                    let mut r = bench_run(ProblemSpec::File(path.clone()), s, 500);
                    r.spec.reorth = false;
                    runs.push(r);
                }
            }
        }
    }
    Ok(runs)
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub suite: Suite,
    pub out_dir: PathBuf,
    pub suitesparse_dir: Option<PathBuf>,
    /// Also write one SVG per problem group.
    pub plots: bool,
    /// Worker threads; rayon's default when absent.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub group: String,
    pub label: String,
    /// History file name, relative to the manifest.
    pub history: Option<String>,
    pub spec: RunSpec,
    #[serde(flatten)]
    pub report: Option<Report>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub suite: Suite,
    pub runs: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.error.is_some()).count()
    }
}

/// `bench`: runs every spec of the suite and writes histories, plots and the manifest.
/// Individual failures are recorded in the manifest and reported afterwards.
pub fn cmd_bench(opts: &BenchOptions) -> Result<Manifest, CliError> {
    let runs = suite_runs(opts.suite, opts.suitesparse_dir.as_deref())?;
    std::fs::create_dir_all(&opts.out_dir)
        .map_err(|e| CliError::io("cannot create", &opts.out_dir, e))?;
    log::info!("{}: {} runs", opts.suite.name(), runs.len());

    let one = |r: &BenchRun| {
        let mut spec = r.spec.clone();
        let file = format!("{}.csv", r.name);
        spec.outputs.history = Some(opts.out_dir.join(&file));
        let res = execute(&spec).and_then(|out| {
            output::write_history(&opts.out_dir.join(&file), &out.trace)?;
            Ok(out)
        });
        match res {
            Ok(out) => {
                let series = Series::from_trace(&r.label, &out.trace);
                let entry = ManifestEntry {
                    name: r.name.clone(),
                    group: r.group.clone(),
                    label: r.label.clone(),
                    history: Some(file),
                    report: Some(Report::from(&out)),
                    spec,
                    error: None,
                };
                (entry, Some(series))
            }
            Err(e) => {
                log::error!("{}: {e}", r.name);
                let entry = ManifestEntry {
                    name: r.name.clone(),
                    group: r.group.clone(),
                    label: r.label.clone(),
                    history: None,
                    report: None,
                    spec,
                    error: Some(e.to_string()),
                };
                (entry, None)
            }
        }
    };
    let results: Vec<(ManifestEntry, Option<Series>)> = match opts.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CliError::Spec(format!("cannot start {j} workers: {e}")))?
            .install(|| runs.par_iter().map(one).collect()),
        None => runs.par_iter().map(one).collect(),
    };

    if opts.plots {
        let mut groups: Vec<&str> = results.iter().map(|(e, _)| e.group.as_str()).collect();
        groups.dedup();
        for g in groups {
            let series: Vec<Series> = results
                .iter()
                .filter(|(e, _)| e.group == g)
                .filter_map(|(_, s)| s.clone())
                .collect();
            output::write_plot(&opts.out_dir.join(format!("{g}.svg")), g, &series)?;
        }
    }
    let manifest = Manifest {
        suite: opts.suite,
        runs: results.into_iter().map(|(e, _)| e).collect(),
    };
    output::write_json(&opts.out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
