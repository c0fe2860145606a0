//! Run specifications: what to solve, with which solver, and where results go.
//!
//! A [`RunSpec`] is assembled from up to four layers, highest priority first:
//! command-line flags, a `key=value` config file, a previously echoed JSON spec,
//! and built-in defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Shortest decimal form of `v` that parses back to the same `f64`.
pub fn fmt_num(v: f64) -> String {
    let plain = format!("{v}");
    let sci = format!("{v:e}");
    if sci.len() < plain.len() {
        sci
    } else {
        plain
    }
}

/// Test problem, written `name:key=value,...` or `file:PATH` (a bare `*.mtx` path also works).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProblemSpec {
    IllConditioned { n: usize, kappa: f64 },
    SmallOutlier { n: usize, kappa: f64, sigma: f64 },
    RandomPsd { n: usize, seed: u64 },
    RandomGeneral { n: usize, seed: u64 },
    File(PathBuf),
}

impl ProblemSpec {
    pub fn is_file(&self) -> bool {
        matches!(self, Self::File(_))
    }

    /// File-name friendly rendering.
    pub fn slug(&self) -> String {
        let s = match self {
            Self::File(p) => p
                .file_stem()
                .map_or_else(|| "file".into(), |s| s.to_string_lossy().into_owned()),
            other => other.to_string(),
        };
        let mut out = String::with_capacity(s.len());
        for c in s.chars() {
            if c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-' {
                out.push(c);
            } else if !out.ends_with('_') {
                out.push('_');
            }
        }
        out.trim_matches('_').to_string()
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::IllConditioned { n, kappa } => {
                write!(f, "ill-conditioned:n={n},kappa={}", fmt_num(*kappa))
            }
            Self::SmallOutlier { n, kappa, sigma } => {
                write!(
                    f,
                    "small-outlier:n={n},kappa={},sigma={}",
                    fmt_num(*kappa),
                    fmt_num(*sigma)
                )
            }
            Self::RandomPsd { n, seed } => write!(f, "random-psd:n={n},seed={seed}"),
            Self::RandomGeneral { n, seed } => write!(f, "random-general:n={n},seed={seed}"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

struct Params<'a> {
    what: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Params<'a> {
    fn parse(what: &'a str, s: &'a str, allowed: &[&str]) -> Result<Self, String> {
        let mut pairs = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| format!("{what}: expected key=value, got {item:?}"))?;
            let k = k.trim();
            if !allowed.contains(&k) {
                return Err(format!(
                    "{what}: unknown parameter {k:?} (expected one of {})",
                    allowed.join(", ")
                ));
            }
            if pairs.iter().any(|&(q, _)| q == k) {
                return Err(format!("{what}: parameter {k:?} given twice"));
            }
            pairs.push((k, v.trim()));
        }
        Ok(Self { what, pairs })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.pairs.iter().find(|&&(k, _)| k == key) {
            None => Ok(None),
            Some(&(_, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| format!("{}: invalid value {v:?} for {key}", self.what)),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, String> {
        self.get(key)?
            .ok_or_else(|| format!("{}: missing parameter {key}", self.what))
    }
}

impl FromStr for ProblemSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        match name {
            "file" => {
                if rest.is_empty() {
                    return Err("file: missing path".into());
                }
                Ok(Self::File(PathBuf::from(rest)))
            }
            "ill-conditioned" => {
                let p = Params::parse(name, rest, &["n", "kappa"])?;
                Ok(Self::IllConditioned { n: p.require("n")?, kappa: p.require("kappa")? })
            }
            "small-outlier" => {
                let p = Params::parse(name, rest, &["n", "kappa", "sigma"])?;
                Ok(Self::SmallOutlier { n: p.require("n")?, kappa: p.require("kappa")?, sigma: p.require("sigma")? })
            }
            "random-psd" => {
                let p = Params::parse(name, rest, &["n", "seed"])?;
                Ok(Self::RandomPsd { n: p.require("n")?, seed: p.get("seed")?.unwrap_or(0) })
            }
            "random-general" => {
                let p = Params::parse(name, rest, &["n", "seed"])?;
                Ok(Self::RandomGeneral { n: p.require("n")?, seed: p.get("seed")?.unwrap_or(0) })
            }
            _ if s.ends_with(".mtx") => Ok(Self::File(PathBuf::from(s))),
            _ => Err(format!(
                "unknown problem {name:?} (expected ill-conditioned, small-outlier, random-psd, random-general or file:PATH)"
            )),
        }
    }
}

impl TryFrom<String> for ProblemSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<ProblemSpec> for String {
    fn from(p: ProblemSpec) -> String {
        p.to_string()
    }
}

/// Right-hand side selection.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RhsSpec {
    /// The generator's own `b`, or `A·1/‖A·1‖₂` for files.
    #[default]
    Default,
    Ones,
    /// Matrix Market vector file.
    File(PathBuf),
    SmallestLeftSingular,
}

impl fmt::Display for RhsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Default => f.write_str("default"),
            Self::Ones => f.write_str("ones"),
            Self::File(p) => write!(f, "file:{}", p.display()),
            Self::SmallestLeftSingular => f.write_str("smallest-left-singular"),
        }
    }
}

impl FromStr for RhsSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "default" => Ok(Self::Default),
            "ones" => Ok(Self::Ones),
            "smallest-left-singular" => Ok(Self::SmallestLeftSingular),
            t => match t.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Self::File(PathBuf::from(p))),
                _ => Err(format!(
                    "unknown rhs {t:?} (expected default, ones, file:PATH or smallest-left-singular)"
                )),
            },
        }
    }
}

impl TryFrom<String> for RhsSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<RhsSpec> for String {
    fn from(r: RhsSpec) -> String {
        r.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Richardson,
    RichardsonNe,
    Cg,
    Minres,
    Lsqr,
    RegularizedCg,
    RegularizedMinres,
    Minberr,
    MinberrNe,
    MinberrNePerturbed,
}

impl SolverKind {
    pub const ALL: [Self; 10] = [
        Self::Richardson,
        Self::RichardsonNe,
        Self::Cg,
        Self::Minres,
        Self::Lsqr,
        Self::RegularizedCg,
        Self::RegularizedMinres,
        Self::Minberr,
        Self::MinberrNe,
        Self::MinberrNePerturbed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Richardson => "richardson",
            Self::RichardsonNe => "richardson-ne",
            Self::Cg => "cg",
            Self::Minres => "minres",
            Self::Lsqr => "lsqr",
            Self::RegularizedCg => "regularized-cg",
            Self::RegularizedMinres => "regularized-minres",
            Self::Minberr => "minberr",
            Self::MinberrNe => "minberr-ne",
            Self::MinberrNePerturbed => "minberr-ne-perturbed",
        }
    }

    /// Solvers defined only for symmetric operators.
    pub fn needs_symmetric(self) -> bool {
        matches!(
            self,
            Self::Cg | Self::Minres | Self::RegularizedCg | Self::RegularizedMinres | Self::Minberr
        )
    }

    pub fn is_regularized(self) -> bool {
        matches!(self, Self::RegularizedCg | Self::RegularizedMinres)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| format!("unknown solver {s:?}"))
    }
}

/// Random orthogonal change of basis applied to the problem before solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Disguise {
    #[default]
    None,
    /// `U A Uᵀ`
    OneSided,
    /// `U A Vᵀ`
    TwoSided,
}

impl FromStr for Disguise {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "none" => Ok(Self::None),
            "one-sided" => Ok(Self::OneSided),
            "two-sided" => Ok(Self::TwoSided),
            t => Err(format!(
                "unknown disguise {t:?} (expected none, one-sided or two-sided)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub history: Option<PathBuf>,
    /// `-` writes the summary to stdout.
    pub summary: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

/// One fully specified run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    pub rhs: RhsSpec,
    pub solver: SolverKind,
    /// Backward-error tolerance (`ε` for the MINBERR family).
    pub tol: f64,
    /// Iteration cap; the exact step count for the regularized solvers.
    pub max_iter: usize,
    /// Richardson step constant.
    #[serde(rename = "C")]
    pub step_constant: f64,
    /// Failure probability of the MINBERR recovery step.
    pub delta: f64,
    /// Relative size of the random perturbation in `minberr-ne-perturbed`.
    pub perturb_eps: f64,
    pub seed: u64,
    pub disguise: Disguise,
    /// Full reorthogonalization of the Krylov basis.
    pub reorth: bool,
    /// Value for `‖A‖₂`; estimated when absent.
    pub opnorm: Option<f64>,
    /// MINBERR runs recover `x` and record its backward error at every iteration.
    pub full_trace: bool,
    /// Record wall-clock time in the history; otherwise the column is zero.
    pub timing: bool,
    pub outputs: Outputs,
}

impl RunSpec {
    pub const DEFAULT_TOL: f64 = 1e-6;
    pub const DEFAULT_MAX_ITER: usize = 1000;
    pub const DEFAULT_DELTA: f64 = 1e-6;
    pub const DEFAULT_PERTURB_EPS: f64 = 1e-3;

    /// Spec with default settings for `problem` and `solver`.
    pub fn new(problem: ProblemSpec, solver: SolverKind) -> Self {
        Self {
            problem,
            rhs: RhsSpec::Default,
            solver,
            tol: Self::DEFAULT_TOL,
            max_iter: Self::DEFAULT_MAX_ITER,
            step_constant: 1.0,
            delta: Self::DEFAULT_DELTA,
            perturb_eps: Self::DEFAULT_PERTURB_EPS,
            seed: 0,
            disguise: Disguise::None,
            reorth: false,
            opnorm: None,
            full_trace: true,
            timing: false,
            outputs: Outputs::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Spec(msg));
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol must lie in (0,1), got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if self.solver.is_regularized() && self.max_iter < 9 {
            return bad(format!(
                "{} runs exactly max_iter steps and needs max_iter >= 9",
                self.solver
            ));
        }
        if !(self.step_constant >= 1.0 && self.step_constant.is_finite()) {
            return bad(format!("C must be at least 1, got {}", self.step_constant));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0,1), got {}", self.delta));
        }
        if !(self.perturb_eps >= 0.0 && self.perturb_eps < 1.0) {
            return bad(format!(
                "perturb_eps must lie in [0,1), got {}",
                self.perturb_eps
            ));
        }
        if let Some(v) = self.opnorm {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("opnorm must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Partial spec: one configuration layer. Doubles as the `solve` flag set.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct SpecLayer {
    /// Problem: ill-conditioned:n=..,kappa=.. | small-outlier:n=..,kappa=..,sigma=.. |
    /// random-psd:n=..,seed=.. | random-general:n=..,seed=.. | file:PATH
    #[arg(long)]
    pub problem: Option<ProblemSpec>,
    /// Right-hand side: default | ones | file:PATH | smallest-left-singular
    #[arg(long)]
    pub rhs: Option<RhsSpec>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverKind>,
    /// Backward-error tolerance [default: 1e-6]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap [default: 1000]
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Richardson step constant [default: 1]
    #[arg(long = "C", value_name = "C")]
    pub step_constant: Option<f64>,
    /// Failure probability of the MINBERR recovery [default: 1e-6]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Perturbation size for minberr-ne-perturbed [default: 1e-3]
    #[arg(long)]
    pub perturb_eps: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub disguise: Option<Disguise>,
    /// Full reorthogonalization of the Krylov basis
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub reorth: Option<bool>,
    /// Use this value for ‖A‖₂ instead of estimating it
    #[arg(long)]
    pub opnorm: Option<f64>,
    /// Per-iteration backward error for MINBERR runs [default: true]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub full_trace: Option<bool>,
    /// Record wall-clock nanoseconds in the history
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timing: Option<bool>,
    /// History CSV path
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Summary JSON path (`-` for stdout)
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// SVG convergence plot path
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::Spec(format!("{key}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        v => Err(CliError::Spec(format!(
            "{key}: expected a boolean, got {v:?}"
        ))),
    }
}

impl SpecLayer {
    /// Sets one field from its textual form. Keys match the long flag names;
    /// `-` and `_` are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let norm = key.trim().replace('-', "_");
        let path = || Some(PathBuf::from(value.trim()));
        match norm.as_str() {
            "problem" => self.problem = Some(parse_value(key, value)?),
            "rhs" => self.rhs = Some(parse_value(key, value)?),
            "solver" => self.solver = Some(parse_value(key, value)?),
            "tol" => self.tol = Some(parse_value(key, value)?),
            "max_iter" => self.max_iter = Some(parse_value(key, value)?),
            "C" | "step_constant" => self.step_constant = Some(parse_value(key, value)?),
            "delta" => self.delta = Some(parse_value(key, value)?),
            "perturb_eps" => self.perturb_eps = Some(parse_value(key, value)?),
            "seed" => self.seed = Some(parse_value(key, value)?),
            "disguise" => self.disguise = Some(parse_value(key, value)?),
            "reorth" => self.reorth = Some(parse_bool(key, value)?),
            "opnorm" => self.opnorm = Some(parse_value(key, value)?),
            "full_trace" => self.full_trace = Some(parse_bool(key, value)?),
            "timing" => self.timing = Some(parse_bool(key, value)?),
            "history" => self.history = path(),
            "summary" => self.summary = path(),
            "plot" => self.plot = path(),
            _ => return Err(CliError::Spec(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Parses a plain-text `key=value` file; blank lines and `#` comments are ignored.
    pub fn parse_config(text: &str) -> Result<Self, CliError> {
        let mut layer = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Spec(format!("config line {}: expected key=value", i + 1))
            })?;
            layer
                .set(k, v)
                .map_err(|e| CliError::Spec(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(layer)
    }

    pub fn read_config(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Spec(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_config(&text)
    }

    /// Every field set, from a complete spec.
    pub fn from_spec(s: &RunSpec) -> Self {
        Self {
            problem: Some(s.problem.clone()),
            rhs: Some(s.rhs.clone()),
            solver: Some(s.solver),
            tol: Some(s.tol),
            max_iter: Some(s.max_iter),
            step_constant: Some(s.step_constant),
            delta: Some(s.delta),
            perturb_eps: Some(s.perturb_eps),
            seed: Some(s.seed),
            disguise: Some(s.disguise),
            reorth: Some(s.reorth),
            opnorm: s.opnorm,
            full_trace: Some(s.full_trace),
            timing: Some(s.timing),
            history: s.outputs.history.clone(),
            summary: s.outputs.summary.clone(),
            plot: s.outputs.plot.clone(),
        }
    }

    /// Field-wise `self` where set, otherwise `lower`.
    pub fn over(self, lower: Self) -> Self {
        Self {
            problem: self.problem.or(lower.problem),
            rhs: self.rhs.or(lower.rhs),
            solver: self.solver.or(lower.solver),
            tol: self.tol.or(lower.tol),
            max_iter: self.max_iter.or(lower.max_iter),
            step_constant: self.step_constant.or(lower.step_constant),
            delta: self.delta.or(lower.delta),
            perturb_eps: self.perturb_eps.or(lower.perturb_eps),
            seed: self.seed.or(lower.seed),
            disguise: self.disguise.or(lower.disguise),
            reorth: self.reorth.or(lower.reorth),
            opnorm: self.opnorm.or(lower.opnorm),
            full_trace: self.full_trace.or(lower.full_trace),
            timing: self.timing.or(lower.timing),
            history: self.history.or(lower.history),
            summary: self.summary.or(lower.summary),
            plot: self.plot.or(lower.plot),
        }
    }

    /// Fills unset fields with defaults and validates.
    pub fn build(self) -> Result<RunSpec, CliError> {
        let problem = self
            .problem
            .ok_or_else(|| CliError::Spec("no problem given (use --problem)".into()))?;
        let solver = self
            .solver
            .ok_or_else(|| CliError::Spec("no solver given (use --solver)".into()))?;
        let d = RunSpec::new(problem, solver);
        let spec = RunSpec {
            rhs: self.rhs.unwrap_or(d.rhs),
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            step_constant: self.step_constant.unwrap_or(d.step_constant),
            delta: self.delta.unwrap_or(d.delta),
            perturb_eps: self.perturb_eps.unwrap_or(d.perturb_eps),
            seed: self.seed.unwrap_or(d.seed),
            disguise: self.disguise.unwrap_or(d.disguise),
            reorth: self.reorth.unwrap_or(d.reorth),
            opnorm: self.opnorm.or(d.opnorm),
            full_trace: self.full_trace.unwrap_or(d.full_trace),
            timing: self.timing.unwrap_or(d.timing),
            outputs: Outputs {
                history: self.history,
                summary: self.summary,
                plot: self.plot,
            },
            ..d
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Reads a spec echoed into a summary file, or a bare serialized spec.
pub fn read_spec_json(path: &Path) -> Result<RunSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Spec(format!("cannot read spec {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?;
    let inner = match value.get("spec") {
        Some(s) => s.clone(),
        None => value,
    };
    serde_json::from_value(inner).map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))
}
