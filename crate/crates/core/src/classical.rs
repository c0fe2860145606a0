//! Baseline solvers with backward-error tracing: Richardson (plain and on the
//! normal equations), CG, MINRES, LSQR, and the shifted CG/MINRES wrapper.
//!
//! All solvers start from `x₀ = 0`; the first trace point is iteration 1.

use std::time::Instant;

use crate::backward_error::BerrValue;
use crate::error::{check_len, Error, Result};
use crate::krylov::{BidiagState, LanczosState, Reorthogonalization};
use crate::linalg::vector::{axpy_in_place, dot_unchecked, norm2};
use crate::linalg::LinearOperator;
use crate::scalar::Scalar;

/// Iterations between from-scratch residual recomputations.
pub const RESIDUAL_REFRESH: usize = 1000;

/// Shared solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    /// Richardson step constant `C ≥ 1`.
    pub step_constant: T,
    pub max_iterations: usize,
    pub berr_tolerance: T,
    /// Backward error is evaluated (and the stopping rule checked) every `trace_every` iterations.
    pub trace_every: usize,
    pub seed: u64,
    pub reorthogonalization: Reorthogonalization,
    /// Use this value for `‖A‖₂` instead of the operator's own.
    pub opnorm: Option<T>,
    /// Condition number, when known; enables Richardson-NE's `Cκ/k` bound.
    pub kappa: Option<T>,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            step_constant: T::one(),
            max_iterations: 1000,
            berr_tolerance: T::lit(1e-6),
            trace_every: 1,
            seed: 0,
            reorthogonalization: Reorthogonalization::None,
            opnorm: None,
            kappa: None,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_constant >= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "C must be at least 1, got {}",
                self.step_constant
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.berr_tolerance > T::zero() && self.berr_tolerance < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "berr_tolerance must lie in (0,1), got {}",
                self.berr_tolerance
            )));
        }
        if self.trace_every == 0 {
            return Err(Error::InvalidParameter(
                "trace_every must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn resolve_opnorm(&self, op: &LinearOperator<T>) -> Result<T> {
        match self.opnorm {
            Some(v) if v > T::zero() => Ok(v),
            Some(v) => Err(Error::NonPositiveOpnorm(v.to_f64_lossy())),
            None => op.opnorm(),
        }
    }
}

/// One recorded iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint<T> {
    pub k: usize,
    pub berr: T,
    pub residual_norm: T,
    pub x_norm: T,
    pub wall_nanos: u64,
}

/// Convergence history of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace<T> {
    pub opnorm: T,
    pub points: Vec<TracePoint<T>>,
}

impl<T: Scalar> SolveTrace<T> {
    pub fn new(opnorm: T) -> Self {
        Self {
            opnorm,
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, p: TracePoint<T>) {
        debug_assert!(self.points.last().is_none_or(|q| q.k < p.k));
        self.points.push(p);
    }

    pub fn last(&self) -> Option<&TracePoint<T>> {
        self.points.last()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TracePoint<T>> {
        self.points.iter()
    }

    /// Point recorded at iteration `k`, if any.
    pub fn at(&self, k: usize) -> Option<&TracePoint<T>> {
        self.points
            .binary_search_by_key(&k, |p| p.k)
            .ok()
            .map(|i| &self.points[i])
    }

    pub fn final_berr(&self) -> Option<T> {
        self.last().map(|p| p.berr)
    }
}

/// Why a solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ToleranceReached,
    MaxIterations,
    Breakdown,
    ExactSolution,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ToleranceReached => "tolerance_reached",
            Self::MaxIterations => "max_iterations",
            Self::Breakdown => "breakdown",
            Self::ExactSolution => "exact_solution",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub x: Vec<T>,
    pub trace: SolveTrace<T>,
    pub termination: Termination,
    pub certified_berr_bound: Option<T>,
    pub iterations: usize,
    pub opnorm: T,
    pub matvecs: usize,
}

/// Inner solver of [`regularized_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSolver {
    Cg,
    Minres,
}

enum Flow {
    Continue,
    Stop(Termination),
}

/// Evaluates and records backward errors against the original operator.
///
/// Solvers hand over `r = b − Ãx` for the system they iterate on; with a shift
/// `Ã = A + δI` the residual for `A` is `r + δx`.
struct Monitor<T> {
    opnorm: T,
    shift: T,
    trace_every: usize,
    max_iterations: usize,
    tol: Option<T>,
    start: Instant,
    trace: SolveTrace<T>,
    matvecs: usize,
    scratch: Vec<T>,
}

impl<T: Scalar> Monitor<T> {
    fn new(opnorm: T, cfg: &SolverConfig<T>, tol: Option<T>) -> Self {
        Self {
            opnorm,
            shift: T::zero(),
            trace_every: cfg.trace_every,
            max_iterations: cfg.max_iterations,
            tol,
            start: Instant::now(),
            trace: SolveTrace::new(opnorm),
            matvecs: 0,
            scratch: Vec::new(),
        }
    }

    fn record(&mut self, k: usize, x: &[T], r: &[T]) -> Result<T> {
        let residual_norm = if self.shift == T::zero() {
            norm2(r)
        } else {
            self.scratch.clear();
            self.scratch.extend_from_slice(r);
            axpy_in_place(self.shift, x, &mut self.scratch);
            norm2(&self.scratch)
        };
        let e = BerrValue::from_parts(residual_norm, norm2(x), self.opnorm)?;
        self.trace.push(TracePoint {
            k,
            berr: e.value,
            residual_norm,
            x_norm: e.x_norm,
            wall_nanos: self.start.elapsed().as_nanos() as u64,
        });
        Ok(e.value)
    }

    fn after_step(&mut self, k: usize, x: &[T], r: &[T], end: Option<Termination>) -> Result<Flow> {
        let last = k >= self.max_iterations;
        if k.is_multiple_of(self.trace_every) || end.is_some() || last {
            let berr = self.record(k, x, r)?;
            if self.tol.is_some_and(|t| berr < t) {
                return Ok(Flow::Stop(Termination::ToleranceReached));
            }
        }
        Ok(match end {
            Some(t) => Flow::Stop(t),
            None if last => Flow::Stop(Termination::MaxIterations),
            None => Flow::Continue,
        })
    }

    fn finish(self, x: Vec<T>, termination: Termination, iterations: usize) -> SolveResult<T> {
        SolveResult {
            x,
            trace: self.trace,
            termination,
            certified_berr_bound: None,
            iterations,
            opnorm: self.opnorm,
            matvecs: self.matvecs,
        }
    }
}

fn check_rhs<T: Scalar>(op: &LinearOperator<T>, b: &[T]) -> Result<()> {
    check_len(op.rows(), b.len())?;
    if op.rows() != op.cols() {
        return Err(Error::InvalidParameter(format!(
            "square system required, got {}x{}",
            op.rows(),
            op.cols()
        )));
    }
    if b.iter().all(|&v| v == T::zero()) {
        return Err(Error::ZeroRhs);
    }
    Ok(())
}

/// `r ← b − A x`
fn refresh_residual<T: Scalar>(
    op: &LinearOperator<T>,
    b: &[T],
    x: &[T],
    r: &mut [T],
) -> Result<()> {
    op.apply_into(x, r)?;
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    Ok(())
}

/// Richardson iteration `x ← x + η(b − Ax)` with `η = 1/(C‖A‖₂)` for symmetric PSD `A`.
///
/// Backward error after `k` steps is at most `C/k`, reported as the certified bound.
pub fn richardson<T: Scalar>(
    op: &LinearOperator<T>,
    b: &[T],
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    if !op.is_symmetric() {
        return Err(Error::RequiresSymmetric);
    }
    check_rhs(op, b)?;
    let opnorm = cfg.resolve_opnorm(op)?;
    let eta = T::one() / (cfg.step_constant * opnorm);
    let mut mon = Monitor::new(opnorm, cfg, Some(cfg.berr_tolerance));
    let n = op.cols();
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut ar = vec![T::zero(); n];
    let mut k = 0;
    let termination = loop {
        k += 1;
        axpy_in_place(eta, &r, &mut x);
        if k % RESIDUAL_REFRESH == 0 {
            refresh_residual(op, b, &x, &mut r)?;
        } else {
            op.apply_into(&r, &mut ar)?;
            axpy_in_place(-eta, &ar, &mut r);
        }
        mon.matvecs += 1;
        if let Flow::Stop(t) = mon.after_step(k, &x, &r, None)? {
            break t;
        }
    };
    let mut res = mon.finish(x, termination, k);
    res.certified_berr_bound = Some(cfg.step_constant / T::from_count(k));
    Ok(res)
}

/// Richardson on the normal equations: `x ← x + η Aᵀ(b − Ax)`, `η = 1/(C‖A‖₂²)`.
///
/// With `cfg.kappa` set, the certified bound `Cκ/k` is attached to the result.
pub fn richardson_ne<T: Scalar>(
    op: &LinearOperator<T>,
    b: &[T],
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    check_rhs(op, b)?;
    let opnorm = cfg.resolve_opnorm(op)?;
    let eta = T::one() / (cfg.step_constant * opnorm * opnorm);
    let mut mon = Monitor::new(opnorm, cfg, Some(cfg.berr_tolerance));
    let n = op.cols();
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut g = vec![T::zero(); n];
    let mut ag = vec![T::zero(); n];
    let mut k = 0;
    let termination = loop {
        k += 1;
        op.apply_adjoint_into(&r, &mut g)?;
        axpy_in_place(eta, &g, &mut x);
        if k % RESIDUAL_REFRESH == 0 {
            refresh_residual(op, b, &x, &mut r)?;
        } else {
            op.apply_into(&g, &mut ag)?;
            axpy_in_place(-eta, &ag, &mut r);
        }
        mon.matvecs += 2;
        if let Flow::Stop(t) = mon.after_step(k, &x, &r, None)? {
            break t;
        }
    };
    let mut res = mon.finish(x, termination, k);
    res.certified_berr_bound = cfg
        .kappa
        .map(|kappa| cfg.step_constant * kappa / T::from_count(k));
    Ok(res)
}

fn cg_impl<T: Scalar>(
    sys: &LinearOperator<T>,
    b: &[T],
    mon: &mut Monitor<T>,
) -> Result<(Vec<T>, Termination, usize)> {
    let n = sys.cols();
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![T::zero(); n];
    let mut rr = dot_unchecked(&r, &r);
    let mut k = 0;
    loop {
        k += 1;
        sys.apply_into(&p, &mut ap)?;
        mon.matvecs += 1;
        let pap = dot_unchecked(&p, &ap);
        if !(pap > T::zero()) {
            log::debug!("cg breakdown at k = {k}: pᵀAp = {pap:e}");
            // No step is taken; report the current iterate unless it is still zero.
            if k == 1 {
                return Err(Error::InvalidParameter(
                    "CG broke down before the first step: bᵀAb ≤ 0".into(),
                ));
            }
            let _ = mon.after_step(k - 1, &x, &r, Some(Termination::Breakdown))?;
            return Ok((x, Termination::Breakdown, k - 1));
        }
        let alpha = rr / pap;
        axpy_in_place(alpha, &p, &mut x);
        if k % RESIDUAL_REFRESH == 0 {
            refresh_residual(sys, b, &x, &mut r)?;
            mon.matvecs += 1;
        } else {
            axpy_in_place(-alpha, &ap, &mut r);
        }
        let rr_new = dot_unchecked(&r, &r);
        let end = (rr_new == T::zero()).then_some(Termination::ExactSolution);
        if let Flow::Stop(t) = mon.after_step(k, &x, &r, end)? {
            return Ok((x, t, k));
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, &ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
}

fn minres_impl<T: Scalar>(
    sys: &LinearOperator<T>,
    b: &[T],
    reorth: Reorthogonalization,
    mon: &mut Monitor<T>,
) -> Result<(Vec<T>, Termination, usize)> {
    let n = sys.cols();
    let mut lz = LanczosState::windowed(sys, b, reorth)?;
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    // Search directions w_{k−1}, w_{k−2} and their images under A.
    let mut w1 = vec![T::zero(); n];
    let mut w2 = vec![T::zero(); n];
    let mut aw1 = vec![T::zero(); n];
    let mut aw2 = vec![T::zero(); n];
    let (mut c1, mut s1) = (T::one(), T::zero()); // G_{k−1}
    let (mut c2, mut s2) = (T::one(), T::zero()); // G_{k−2}
    let mut phibar = lz.b_norm();
    let mut beta_k = T::zero();
    let mut k = 0;
    loop {
        k += 1;
        lz.step(sys)?;
        mon.matvecs += 1;
        let alpha = lz.alphas()[k - 1];
        let beta_next = lz.betas()[k - 1];

        // Column k of Tₖ is (β_k, α_k, β_{k+1}) on rows k−1, k, k+1.
        let eps_k = s2 * beta_k;
        let dbar = c2 * beta_k;
        let delta_k = c1 * dbar + s1 * alpha;
        let gbar = -s1 * dbar + c1 * alpha;
        let rho = gbar.hypot(beta_next);
        if rho == T::zero() {
            log::debug!("minres: singular tridiagonal at k = {k}");
            let _ = mon.after_step(k, &x, &r, Some(Termination::Breakdown))?;
            return Ok((x, Termination::Breakdown, k));
        }
        let c = gbar / rho;
        let s = beta_next / rho;
        let tau = c * phibar;
        phibar = -s * phibar;

        let qk = lz.q(k);
        let aqk = lz.last_product();
        let mut w = qk.to_vec();
        axpy_in_place(-delta_k, &w1, &mut w);
        axpy_in_place(-eps_k, &w2, &mut w);
        let mut aw = aqk.to_vec();
        axpy_in_place(-delta_k, &aw1, &mut aw);
        axpy_in_place(-eps_k, &aw2, &mut aw);
        let inv = T::one() / rho;
        w.iter_mut().for_each(|v| *v *= inv);
        aw.iter_mut().for_each(|v| *v *= inv);

        axpy_in_place(tau, &w, &mut x);
        if k % RESIDUAL_REFRESH == 0 {
            refresh_residual(sys, b, &x, &mut r)?;
            mon.matvecs += 1;
        } else {
            axpy_in_place(-tau, &aw, &mut r);
        }

        w2 = std::mem::replace(&mut w1, w);
        aw2 = std::mem::replace(&mut aw1, aw);
        (c2, s2) = (c1, s1);
        (c1, s1) = (c, s);
        beta_k = beta_next;

        let end = lz.is_broken_down().then_some(Termination::ExactSolution);
        if let Flow::Stop(t) = mon.after_step(k, &x, &r, end)? {
            return Ok((x, t, k));
        }
    }
}

fn run_symmetric<T: Scalar>(
    inner: InnerSolver,
    op: &LinearOperator<T>,
    b: &[T],
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    if !op.is_symmetric() {
        return Err(Error::RequiresSymmetric);
    }
    check_rhs(op, b)?;
    let opnorm = cfg.resolve_opnorm(op)?;
    let mut mon = Monitor::new(opnorm, cfg, Some(cfg.berr_tolerance));
    let (x, t, k) = match inner {
        InnerSolver::Cg => cg_impl(op, b, &mut mon)?,
        InnerSolver::Minres => minres_impl(op, b, cfg.reorthogonalization, &mut mon)?,
    };
    Ok(mon.finish(x, t, k))
}

/// Conjugate gradients for symmetric positive definite systems.
///
/// A non-positive curvature `pᵀAp` ends the run with [`Termination::Breakdown`].
pub fn cg<T: Scalar>(
    op: &LinearOperator<T>,
    b: &[T],
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    run_symmetric(InnerSolver::Cg, op, b, cfg)
}

/// MINRES over the Lanczos process for symmetric systems.
pub fn minres<T: Scalar>(
    op: &LinearOperator<T>,
    b: &[T],
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    run_symmetric(InnerSolver::Minres, op, b, cfg)
}

/// LSQR over Golub–Kahan bidiagonalization.
pub fn lsqr<T: Scalar>(
    op: &LinearOperator<T>,
    b: &[T],
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    check_rhs(op, b)?;
    let opnorm = cfg.resolve_opnorm(op)?;
    let mut mon = Monitor::new(opnorm, cfg, Some(cfg.berr_tolerance));
    let n = op.cols();
    let mut bd = BidiagState::windowed(op, b, cfg.reorthogonalization)?;
    mon.matvecs += bd.matvecs();
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut w = bd.q(1).to_vec();
    let mut aw = vec![T::zero(); n];
    let mut theta_over_rho = T::zero();
    let mut phibar = bd.b_norm();
    let mut rhobar = bd.alphas()[0];
    let mut k = 0;
    let termination = loop {
        k += 1;
        let before = bd.matvecs();
        bd.step(op)?;
        mon.matvecs += bd.matvecs() - before;
        // A w_k = A q_k − (θ_{k−1}/ρ_{k−1}) A w_{k−1}
        let mut aw_k = bd.last_product().to_vec();
        axpy_in_place(-theta_over_rho, &aw, &mut aw_k);
        aw = aw_k;

        let beta = bd.betas()[k];
        let alpha = bd.alphas()[k];
        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar = s * phibar;

        axpy_in_place(phi / rho, &w, &mut x);
        if k % RESIDUAL_REFRESH == 0 {
            refresh_residual(op, b, &x, &mut r)?;
            mon.matvecs += 1;
        } else {
            axpy_in_place(-phi / rho, &aw, &mut r);
        }
        theta_over_rho = theta / rho;
        if !bd.is_broken_down() {
            let mut w_next = bd.q(k + 1).to_vec();
            axpy_in_place(-theta_over_rho, &w, &mut w_next);
            w = w_next;
        }
        let end = bd.is_broken_down().then_some(Termination::ExactSolution);
        if let Flow::Stop(t) = mon.after_step(k, &x, &r, end)? {
            break t;
        }
    };
    Ok(mon.finish(x, termination, k))
}

/// Shift `δ = 2(ln k/k)²·‖A‖₂` used by [`regularized_solve`].
pub fn regularization_shift<T: Scalar>(k: usize, opnorm: T) -> T {
    let kk = T::from_count(k);
    let t = kk.ln() / kk;
    T::lit(2.0) * t * t * opnorm
}

/// Certified backward error `5(ln k/k)²` of [`regularized_solve`].
pub fn regularized_bound<T: Scalar>(k: usize) -> T {
    let kk = T::from_count(k);
    let t = kk.ln() / kk;
    T::lit(5.0) * t * t
}

/// Runs exactly `k` steps of CG or MINRES on `A + δI` with `δ = 2(ln k/k)²‖A‖₂`.
///
/// The trace measures backward error with respect to the original `A`; the result
/// carries the certified bound `5(ln k/k)²`. Only `trace_every`,
/// `reorthogonalization` and `opnorm` are taken from `cfg`.
pub fn regularized_solve<T: Scalar>(
    inner: InnerSolver,
    op: &LinearOperator<T>,
    b: &[T],
    k: usize,
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    if k < 9 {
        return Err(Error::TheoremRequiresK9(k));
    }
    if cfg.trace_every == 0 {
        return Err(Error::InvalidParameter(
            "trace_every must be at least 1".into(),
        ));
    }
    if !op.is_symmetric() {
        return Err(Error::RequiresSymmetric);
    }
    check_rhs(op, b)?;
    let opnorm = cfg.resolve_opnorm(op)?;
    let delta = regularization_shift(k, opnorm);
    // ‖A + δI‖₂ = ‖A‖₂ + δ for PSD A.
    let shifted = op.shifted(delta)?.with_opnorm(opnorm + delta)?;
    let inner_cfg = SolverConfig {
        max_iterations: k,
        ..*cfg
    };
    let mut mon = Monitor::new(opnorm, &inner_cfg, None);
    mon.shift = delta;
    let (x, t, iters) = match inner {
        InnerSolver::Cg => cg_impl(&shifted, b, &mut mon)?,
        InnerSolver::Minres => minres_impl(&shifted, b, cfg.reorthogonalization, &mut mon)?,
    };
    let mut res = mon.finish(x, t, iters);
    res.certified_berr_bound = Some(regularized_bound(k));
    Ok(res)
}
