//! Problem construction and solver dispatch for a single [`RunSpec`].

use std::collections::HashMap;
use std::io::BufReader;
use std::path::Path;

use berr_core::classical::InnerSolver;
use berr_core::problems::{self, Symmetry};
use berr_core::{
    cg, lsqr, minberr_ne_perturbed, minberr_ne_solve, minberr_solve, minres, regularized_solve,
    richardson, richardson_ne, Config, LinearOperator, MinberrOptions, MinberrSolution, Problem,
    ProblemMeta, Reorthogonalization, Solution, Termination, Trace,
};
use serde::{Deserialize, Serialize};

use crate::output;
use crate::spec::{Disguise, ProblemSpec, RhsSpec, RunSpec, SolverKind};
use crate::CliError;

fn spec_err(e: berr_core::Error) -> CliError {
    CliError::Spec(e.to_string())
}

fn entries_symmetric(entries: &[(usize, usize, f64)]) -> bool {
    let mut sums: HashMap<(usize, usize), f64> = HashMap::with_capacity(entries.len());
    for &(i, j, v) in entries {
        *sums.entry((i, j)).or_insert(0.0) += v;
    }
    sums.iter()
        .all(|(&(i, j), &v)| i == j || sums.get(&(j, i)).copied().unwrap_or(0.0) == v)
}

/// Loads a square Matrix Market matrix. Generally stored files whose entries are
/// exactly symmetric are flagged symmetric.
pub fn load_matrix(path: &Path) -> Result<Problem, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io("cannot open", path, e))?;
    let mm = problems::parse_matrix_market::<f64>(BufReader::new(file))
        .map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?;
    if mm.rows != mm.cols {
        return Err(CliError::Spec(format!(
            "{}: matrix is {}x{}, a square system is required",
            path.display(),
            mm.rows,
            mm.cols
        )));
    }
    let symmetric = mm.symmetry == Symmetry::Symmetric || entries_symmetric(&mm.entries);
    let op = LinearOperator::csr(mm.to_csr().map_err(spec_err)?, symmetric);
    let b = problems::default_rhs(&op).map_err(spec_err)?;
    Ok(Problem {
        op,
        b,
        meta: ProblemMeta {
            name: path
                .file_stem()
                .map_or_else(|| "matrix".into(), |s| s.to_string_lossy().into_owned()),
            n: mm.rows,
            kappa: None,
            sigma_list: None,
            source: problems::Source::File(path.to_path_buf()),
            seed: None,
        },
    })
}

/// The instance named by `problem`, disguised as requested, with the generator's own `b`.
pub fn build_instance(
    problem: &ProblemSpec,
    disguise: Disguise,
    seed: u64,
) -> Result<Problem, CliError> {
    let p = match problem {
        ProblemSpec::IllConditioned { n, kappa } => {
            problems::ill_conditioned(*n, *kappa).map_err(spec_err)?
        }
        ProblemSpec::SmallOutlier { n, kappa, sigma } => {
            problems::small_outlier(*n, *kappa, *sigma).map_err(spec_err)?
        }
        ProblemSpec::RandomPsd { n, seed } => {
            problems::random_dense_psd(*n, *seed).map_err(spec_err)?
        }
        ProblemSpec::RandomGeneral { n, seed } => {
            problems::random_dense_general(*n, *seed).map_err(spec_err)?
        }
        ProblemSpec::File(path) => load_matrix(path)?,
    };
    match disguise {
        Disguise::None => Ok(p),
        Disguise::OneSided => problems::disguise(&p, false, seed).map_err(spec_err),
        Disguise::TwoSided => problems::disguise(&p, true, seed).map_err(spec_err),
    }
}

/// The full problem of `spec`, right-hand side included.
pub fn build_problem(spec: &RunSpec) -> Result<Problem, CliError> {
    let p = build_instance(&spec.problem, spec.disguise, spec.seed)?;
    let b = match &spec.rhs {
        RhsSpec::Default => return Ok(p),
        RhsSpec::Ones => vec![1.0; p.n()],
        RhsSpec::File(path) => {
            let file =
                std::fs::File::open(path).map_err(|e| CliError::io("cannot open", path, e))?;
            problems::read_matrix_market_vector(BufReader::new(file))
                .map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?
        }
        RhsSpec::SmallestLeftSingular => {
            problems::rhs_smallest_left_singular(&p).map_err(spec_err)?
        }
    };
    p.with_rhs(b).map_err(spec_err)
}

/// Solver-independent view of a finished run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub trace: Trace,
    pub termination: Termination,
    pub certified_bound: Option<f64>,
    pub iterations: usize,
    pub opnorm: f64,
    pub matvecs: usize,
}

impl From<Solution> for Outcome {
    fn from(r: Solution) -> Self {
        Self {
            trace: r.trace,
            termination: r.termination,
            certified_bound: r.certified_berr_bound,
            iterations: r.iterations,
            opnorm: r.opnorm,
            matvecs: r.matvecs,
        }
    }
}

impl From<MinberrSolution> for Outcome {
    /// Perturbed runs report their composed bound; the others the certificate `‖Mv‖/‖v‖`.
    fn from(r: MinberrSolution) -> Self {
        Self {
            trace: r.trace,
            termination: r.termination,
            certified_bound: r.certified_berr_bound.or(Some(r.sigma_min_certificate)),
            iterations: r.iterations,
            opnorm: r.opnorm,
            matvecs: r.matvecs,
        }
    }
}

/// Runs the solver of `spec` on an already built problem.
pub fn solve_problem(spec: &RunSpec, p: &Problem) -> Result<Outcome, CliError> {
    if spec.solver.needs_symmetric() && !p.op.is_symmetric() {
        return Err(CliError::Spec(format!(
            "{} needs a symmetric matrix; {} is not",
            spec.solver, p.meta.name
        )));
    }
    let reorthogonalization = if spec.reorth {
        Reorthogonalization::Full
    } else {
        Reorthogonalization::None
    };
    let cfg = Config {
        step_constant: spec.step_constant,
        max_iterations: spec.max_iter,
        berr_tolerance: spec.tol,
        trace_every: 1,
        seed: spec.seed,
        reorthogonalization,
        opnorm: spec.opnorm,
        kappa: p.meta.kappa,
    };
    let mcfg = MinberrOptions {
        eps: spec.tol,
        k_max: Some(spec.max_iter),
        delta: spec.delta,
        seed: spec.seed,
        reorthogonalization,
        opnorm: spec.opnorm,
        trace_every_iteration: spec.full_trace,
    };
    let (op, b) = (&p.op, p.b.as_slice());
    log::info!("{} on {} (n = {})", spec.solver, p.meta.name, p.n());
    let res: berr_core::Result<Outcome> = match spec.solver {
        SolverKind::Richardson => richardson(op, b, &cfg).map(Outcome::from),
        SolverKind::RichardsonNe => richardson_ne(op, b, &cfg).map(Outcome::from),
        SolverKind::Cg => cg(op, b, &cfg).map(Outcome::from),
        SolverKind::Minres => minres(op, b, &cfg).map(Outcome::from),
        SolverKind::Lsqr => lsqr(op, b, &cfg).map(Outcome::from),
        SolverKind::RegularizedCg => {
            regularized_solve(InnerSolver::Cg, op, b, spec.max_iter, &cfg).map(Outcome::from)
        }
        SolverKind::RegularizedMinres => {
            regularized_solve(InnerSolver::Minres, op, b, spec.max_iter, &cfg).map(Outcome::from)
        }
        SolverKind::Minberr => minberr_solve(op, b, &mcfg).map(Outcome::from),
        SolverKind::MinberrNe => minberr_ne_solve(op, b, &mcfg).map(Outcome::from),
        SolverKind::MinberrNePerturbed => {
            minberr_ne_perturbed(op, b, spec.perturb_eps, &mcfg).map(Outcome::from)
        }
    };
    let mut out = res.map_err(CliError::Solver)?;
    if !spec.timing {
        out.trace.points.iter_mut().for_each(|pt| pt.wall_nanos = 0);
    }
    log::info!(
        "{}: {} after {} iterations, berr {:e}",
        spec.solver,
        out.termination.as_str(),
        out.iterations,
        out.trace.final_berr().unwrap_or(f64::NAN)
    );
    Ok(out)
}

/// Builds the problem of `spec` and runs its solver.
pub fn execute(spec: &RunSpec) -> Result<Outcome, CliError> {
    spec.validate()?;
    let p = build_problem(spec)?;
    solve_problem(spec, &p)
}

/// Result fields shared by run summaries and bench manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub termination: String,
    pub final_berr: Option<f64>,
    pub certified_bound: Option<f64>,
    pub iterations: usize,
    pub opnorm_estimate: f64,
    pub total_matvecs: usize,
}

impl From<&Outcome> for Report {
    fn from(out: &Outcome) -> Self {
        Self {
            termination: out.termination.as_str().into(),
            final_berr: out.trace.final_berr(),
            certified_bound: out.certified_bound,
            iterations: out.iterations,
            opnorm_estimate: out.opnorm,
            total_matvecs: out.matvecs,
        }
    }
}

/// JSON report of one run; `spec` reproduces the run on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub spec: RunSpec,
    #[serde(flatten)]
    pub report: Report,
}

impl Summary {
    pub fn new(spec: &RunSpec, out: &Outcome) -> Self {
        Self {
            spec: spec.clone(),
            report: out.into(),
        }
    }
}

/// `solve`: runs `spec` and writes the outputs it names.
pub fn cmd_solve(spec: &RunSpec) -> Result<Summary, CliError> {
    let out = execute(spec)?;
    let summary = Summary::new(spec, &out);
    if let Some(path) = &spec.outputs.history {
        output::write_history(path, &out.trace)?;
    }
    if let Some(path) = &spec.outputs.plot {
        let series = [output::Series::from_trace(spec.solver.name(), &out.trace)];
        output::write_plot(path, &spec.problem.to_string(), &series)?;
    }
    if let Some(path) = &spec.outputs.summary {
        output::write_summary(path, &summary)?;
    }
    Ok(summary)
}
