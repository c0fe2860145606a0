//! MINBERR (symmetric PSD) and MINBERR-NE (general square) solvers.
//!
//! Both minimize backward error over a Krylov subspace. After `k` steps the
//! minimal backward error equals `σ_min` of the band matrix M = T̃ₖ/‖A‖₂ (Lanczos)
//! or B̃ₖ/‖A‖₂ (bidiagonalization). Convergence is detected in O(1) per step by
//! an incremental Cholesky or dqds test; the minimizer is recovered from an
//! approximate smallest right singular vector `v` of M as `x = −Qₖv/α`, where
//! `α = −(Mv)₁/‖b‖₂` uses the deleted first row.

use crate::backward_error::{backward_error, composition_bound};
use crate::classical::{SolveTrace, Termination, TracePoint};
use crate::error::{check_len, Error, Result};
use crate::krylov::{BidiagState, LanczosState, Reorthogonalization};
use crate::linalg::random::{gaussian_vec, rng};
use crate::linalg::vector::{axpy_in_place, norm2};
use crate::linalg::{estimate_spectral_norm, DenseMatrix, LinearOperator};
use crate::scalar::Scalar;
use crate::spectral::{inverse_iteration, CholTest, DqdsTest, TestOutcome, UpperBand};

/// Settings shared by the MINBERR solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinberrConfig<T> {
    /// Stop once the minimal backward error over the subspace drops below `eps`.
    pub eps: T,
    /// Iteration cap; `None` means `min(n, 20000)`.
    pub k_max: Option<usize>,
    /// Failure probability of the inverse-iteration recovery.
    pub delta: T,
    pub seed: u64,
    pub reorthogonalization: Reorthogonalization,
    pub opnorm: Option<T>,
    /// Recover `x` and record its backward error at every iteration (O(k²) extra work overall).
    pub trace_every_iteration: bool,
}

impl<T: Scalar> Default for MinberrConfig<T> {
    fn default() -> Self {
        Self {
            eps: T::lit(1e-6),
            k_max: None,
            delta: T::lit(1e-6),
            seed: 0,
            reorthogonalization: Reorthogonalization::None,
            opnorm: None,
            trace_every_iteration: false,
        }
    }
}

impl<T: Scalar> MinberrConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > T::zero() && self.eps < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0,1), got {}",
                self.eps
            )));
        }
        if !(self.delta > T::zero() && self.delta < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        if self.k_max == Some(0) {
            return Err(Error::InvalidParameter("k_max must be at least 1".into()));
        }
        Ok(())
    }

    fn k_max_for(&self, n: usize) -> usize {
        self.k_max.unwrap_or(n.min(20000))
    }
}

#[derive(Debug, Clone)]
pub struct MinberrResult<T> {
    pub x: Vec<T>,
    /// Backward errors measured directly (one matvec per point) against the original operator.
    pub trace: SolveTrace<T>,
    /// `‖Mv‖₂/‖v‖₂` for each trace point: the backward error `x` attains in exact arithmetic.
    pub certificates: Vec<T>,
    /// Certificate at termination; an upper bound on, and within the inverse-iteration
    /// factor of, `σ_min(M)`.
    pub sigma_min_certificate: T,
    /// Recovery scalar `α` at termination.
    pub alpha: T,
    pub termination: Termination,
    /// Bound on the backward error for the original system (perturbed runs only).
    pub certified_berr_bound: Option<T>,
    pub iterations: usize,
    pub opnorm: T,
    pub matvecs: usize,
    /// Normalized band matrix M at termination.
    pub band: UpperBand<T>,
}

/// `‖Mv‖₂/‖v‖₂`
pub fn berr_certificate<T: Scalar>(view: &UpperBand<T>, v: &[T]) -> Result<T> {
    check_len(view.dim(), v.len())?;
    let nv = norm2(v);
    if nv == T::zero() {
        return Err(Error::UndefinedAtZero);
    }
    Ok(norm2(&view.matvec(v)) / nv)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Variant {
    Symmetric,
    NormalEquations,
}

enum Factorization<T> {
    Lanczos(LanczosState<T>),
    Bidiag(BidiagState<T>),
}

impl<T: Scalar> Factorization<T> {
    fn step(&mut self, op: &LinearOperator<T>) -> Result<()> {
        match self {
            Self::Lanczos(s) => s.step(op),
            Self::Bidiag(s) => s.step(op),
        }
    }

    fn k(&self) -> usize {
        match self {
            Self::Lanczos(s) => s.k(),
            Self::Bidiag(s) => s.k(),
        }
    }

    /// Newest band column as `[M(k−2,k), M(k−1,k), M(k,k)]`, unscaled.
    fn column(&self) -> [T; 3] {
        match self {
            Self::Lanczos(s) => s.ttilde_append(),
            Self::Bidiag(s) => {
                let [sup, d] = s.btilde_append();
                [T::zero(), sup, d]
            }
        }
    }

    fn broken_down(&self) -> bool {
        match self {
            Self::Lanczos(s) => s.is_broken_down(),
            Self::Bidiag(s) => s.is_broken_down(),
        }
    }

    fn b_norm(&self) -> T {
        match self {
            Self::Lanczos(s) => s.b_norm(),
            Self::Bidiag(s) => s.b_norm(),
        }
    }

    fn q(&self, j: usize) -> &[T] {
        match self {
            Self::Lanczos(s) => s.q(j),
            Self::Bidiag(s) => s.q(j),
        }
    }

    fn matvecs(&self) -> usize {
        match self {
            Self::Lanczos(s) => s.matvecs(),
            Self::Bidiag(s) => s.matvecs(),
        }
    }

    /// First entry of `Tₖv` (resp. `Bₖv`): the row deleted from the band.
    fn first_row_dot(&self, v: &[T]) -> T {
        match self {
            Self::Lanczos(s) => {
                let (t11, t12) = s.first_row();
                t11 * v[0] + if v.len() > 1 { t12 * v[1] } else { T::zero() }
            }
            Self::Bidiag(s) => s.alphas()[0] * v[0],
        }
    }
}

enum Detector<T> {
    Chol(CholTest<T>),
    Dqds(DqdsTest<T>),
    /// `ε` too small to square safely: decide with inverse iteration every step.
    Inverse,
}

struct Recovery<T> {
    x: Vec<T>,
    alpha: T,
    certificate: T,
}

struct Run<'a, T> {
    variant: Variant,
    sys: &'a LinearOperator<T>,
    b: &'a [T],
    cfg: &'a MinberrConfig<T>,
    sys_opnorm: T,
    /// Operator and norm the trace is measured against.
    reference: &'a LinearOperator<T>,
    reference_opnorm: T,
}

impl<T: Scalar> Run<'_, T> {
    fn recover(&self, fact: &Factorization<T>, band: &UpperBand<T>) -> Result<Recovery<T>> {
        let k = band.dim();
        let inv = inverse_iteration(band, k, self.cfg.delta, self.cfg.seed)?;
        let v = inv.vector;
        let b_norm = fact.b_norm();
        let first = fact.first_row_dot(&v);
        let alpha = -first / b_norm;
        if (alpha * b_norm).abs() / self.sys_opnorm < T::lit(1e-14) {
            return Err(match self.variant {
                Variant::Symmetric => Error::DegenerateAlpha,
                Variant::NormalEquations => Error::NoFiniteMinimizer,
            });
        }
        let mut x = vec![T::zero(); self.sys.cols()];
        let c = -T::one() / alpha;
        for (j, &vj) in v.iter().enumerate() {
            axpy_in_place(c * vj, fact.q(j + 1), &mut x);
        }
        let certificate = berr_certificate(band, &v)?;
        Ok(Recovery {
            x,
            alpha,
            certificate,
        })
    }

    fn record(
        &self,
        trace: &mut SolveTrace<T>,
        k: usize,
        x: &[T],
        start: std::time::Instant,
    ) -> Result<()> {
        let e = backward_error(self.reference, self.b, x, self.reference_opnorm)?;
        trace.push(TracePoint {
            k,
            berr: e.value,
            residual_norm: e.residual_norm,
            x_norm: e.x_norm,
            wall_nanos: start.elapsed().as_nanos() as u64,
        });
        Ok(())
    }

    fn execute(&self) -> Result<MinberrResult<T>> {
        let start = std::time::Instant::now();
        let cfg = self.cfg;
        let mut fact = match self.variant {
            Variant::Symmetric => Factorization::Lanczos(LanczosState::new(
                self.sys,
                self.b,
                cfg.reorthogonalization,
            )?),
            Variant::NormalEquations => {
                Factorization::Bidiag(BidiagState::new(self.sys, self.b, cfg.reorthogonalization)?)
            }
        };
        let mut detector = if cfg.eps < T::unit_roundoff().sqrt() {
            log::warn!(
                "eps = {:e} is below the square root of the unit roundoff; \
                 convergence is detected with inverse iteration instead of a Cholesky/dqds test",
                cfg.eps
            );
            Detector::Inverse
        } else {
            match self.variant {
                Variant::Symmetric => Detector::Chol(CholTest::with_eps(cfg.eps)),
                Variant::NormalEquations => Detector::Dqds(DqdsTest::with_eps(cfg.eps)),
            }
        };
        let scale = T::one() / self.sys_opnorm;
        let k_max = cfg.k_max_for(self.sys.cols());
        let mut band = UpperBand::with_bandwidth(match self.variant {
            Variant::Symmetric => 2,
            Variant::NormalEquations => 1,
        });
        let mut trace = SolveTrace::new(self.reference_opnorm);
        let mut certificates = Vec::new();
        let mut extra_matvecs = 0;
        let mut last: Option<Recovery<T>> = None;

        let termination = loop {
            fact.step(self.sys)?;
            let k = fact.k();
            let [c2, c1, c0] = fact.column();
            let col = [c2 * scale, c1 * scale, c0 * scale];
            match self.variant {
                Variant::Symmetric => band.push_column(&[col[0], col[1]], col[2]),
                Variant::NormalEquations => band.push_column(&[col[1]], col[2]),
            }
            let converged = match &mut detector {
                Detector::Chol(t) => t.step(col) == TestOutcome::Converged,
                Detector::Dqds(t) => {
                    t.step(col[2] * col[2], col[1] * col[1]) == TestOutcome::Converged
                }
                Detector::Inverse => {
                    inverse_iteration(&band, k, cfg.delta, cfg.seed)?.sigma <= cfg.eps
                }
            };
            let stop = if fact.broken_down() {
                Some(Termination::ExactSolution)
            } else if converged {
                Some(Termination::ToleranceReached)
            } else if k >= k_max {
                Some(Termination::MaxIterations)
            } else {
                None
            };

            if cfg.trace_every_iteration || stop.is_some() {
                match self.recover(&fact, &band) {
                    Ok(rec) => {
                        self.record(&mut trace, k, &rec.x, start)?;
                        extra_matvecs += 1;
                        certificates.push(rec.certificate);
                        last = Some(rec);
                    }
                    Err(e @ (Error::DegenerateAlpha | Error::NoFiniteMinimizer))
                        if stop.is_none() =>
                    {
                        log::debug!("k = {k}: no recovery ({e})");
                    }
                    Err(e) => return Err(e),
                }
            }
            if let Some(t) = stop {
                break t;
            }
        };
        let rec = last.expect("recovery at termination");
        let termination = match termination {
            Termination::ExactSolution if rec.certificate > T::lit(1e-10) => Termination::Breakdown,
            t => t,
        };
        Ok(MinberrResult {
            x: rec.x,
            trace,
            certificates,
            sigma_min_certificate: rec.certificate,
            alpha: rec.alpha,
            termination,
            certified_berr_bound: None,
            iterations: fact.k(),
            opnorm: self.reference_opnorm,
            matvecs: fact.matvecs() + extra_matvecs,
            band,
        })
    }
}

fn resolve_opnorm<T: Scalar>(op: &LinearOperator<T>, cfg: &MinberrConfig<T>) -> Result<T> {
    match cfg.opnorm {
        Some(v) if v > T::zero() => Ok(v),
        Some(v) => Err(Error::NonPositiveOpnorm(v.to_f64_lossy())),
        None => op.opnorm(),
    }
}

fn check_system<T: Scalar>(op: &LinearOperator<T>, b: &[T]) -> Result<()> {
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

/// MINBERR for symmetric positive semidefinite systems (Lanczos + Cholesky test).
pub fn minberr_solve<T: Scalar>(
    op: &LinearOperator<T>,
    b: &[T],
    cfg: &MinberrConfig<T>,
) -> Result<MinberrResult<T>> {
    cfg.validate()?;
    if !op.is_symmetric() {
        return Err(Error::RequiresSymmetric);
    }
    check_system(op, b)?;
    let opnorm = resolve_opnorm(op, cfg)?;
    Run {
        variant: Variant::Symmetric,
        sys: op,
        b,
        cfg,
        sys_opnorm: opnorm,
        reference: op,
        reference_opnorm: opnorm,
    }
    .execute()
}

/// MINBERR-NE for general square systems (bidiagonalization + dqds test).
pub fn minberr_ne_solve<T: Scalar>(
    op: &LinearOperator<T>,
    b: &[T],
    cfg: &MinberrConfig<T>,
) -> Result<MinberrResult<T>> {
    cfg.validate()?;
    check_system(op, b)?;
    let opnorm = resolve_opnorm(op, cfg)?;
    Run {
        variant: Variant::NormalEquations,
        sys: op,
        b,
        cfg,
        sys_opnorm: opnorm,
        reference: op,
        reference_opnorm: opnorm,
    }
    .execute()
}

/// Seed offset for the perturbation matrix, so that it differs from the inverse-iteration start.
const PERTURBATION_STREAM: u64 = 0x5851_f42d_4c95_7f2d;

/// MINBERR-NE on `Ã = A + ε‖A‖₂/‖G‖₂·G` with a seeded Gaussian `G`.
///
/// The trace measures backward error against the original `A`; the certified bound is
/// `(1 + ε′)·berr_Ã + ε′` with `ε′ = ε/(1 − 10⁻³)` absorbing the power-iteration slack in `‖G‖₂`.
pub fn minberr_ne_perturbed<T: Scalar>(
    op: &LinearOperator<T>,
    b: &[T],
    perturb_eps: T,
    cfg: &MinberrConfig<T>,
) -> Result<MinberrResult<T>> {
    cfg.validate()?;
    check_system(op, b)?;
    if !(perturb_eps >= T::zero() && perturb_eps < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "perturb_eps must lie in [0,1), got {perturb_eps}"
        )));
    }
    let opnorm = resolve_opnorm(op, cfg)?;
    if perturb_eps == T::zero() {
        return minberr_ne_solve(
            op,
            b,
            &MinberrConfig {
                opnorm: Some(opnorm),
                ..*cfg
            },
        );
    }
    let n = op.rows();
    let g = DenseMatrix::from_row_major(
        n,
        n,
        gaussian_vec(&mut rng(cfg.seed ^ PERTURBATION_STREAM), n * n),
    )?;
    let g_op = LinearOperator::dense(g.clone());
    let rel_tol = T::lit(1e-3);
    let g_norm = estimate_spectral_norm(&g_op, rel_tol, 300, cfg.seed)?.value;
    let perturbed = op.perturbed(perturb_eps * opnorm / g_norm, g)?;
    let perturbed_opnorm = estimate_spectral_norm(&perturbed, rel_tol, 300, cfg.seed)?.value;
    let mut res = Run {
        variant: Variant::NormalEquations,
        sys: &perturbed,
        b,
        cfg,
        sys_opnorm: perturbed_opnorm,
        reference: op,
        reference_opnorm: opnorm,
    }
    .execute()?;
    let eps_eff = perturb_eps / (T::one() - rel_tol);
    res.certified_berr_bound = Some(composition_bound(res.sigma_min_certificate, eps_eff));
    Ok(res)
}

/// Dense reference for the minimal backward error over `span(basis)`.
///
/// With `N = [b, A·Q]` and `H = NᵀN`, eliminating the `b` coordinate leaves the Schur
/// block `S = H₂₂ − h₂₁h₁₂/h₁₁ = (P A Q)ᵀ(P A Q)` where `P` projects out `b`. The smallest
/// eigenpair of `S` is taken from an SVD of `P A Q`. Returns `(λ_min/opnorm², y)` with
/// the minimizer `x = Q y`. `basis` holds orthonormal columns.
pub fn dense_minberr_oracle(
    a: &DenseMatrix<f64>,
    b: &[f64],
    basis: &[Vec<f64>],
    opnorm: f64,
) -> Result<(f64, Vec<f64>)> {
    use nalgebra::{DMatrix, DVector};

    let n = a.rows();
    check_len(n, b.len())?;
    let k = basis.len();
    if k == 0 {
        return Err(Error::InvalidParameter("empty basis".into()));
    }
    for q in basis {
        check_len(a.cols(), q.len())?;
    }
    let am = a.to_nalgebra();
    let q = DMatrix::from_fn(a.cols(), k, |i, j| basis[j][i]);
    let aq = &am * &q;
    let mut nmat = DMatrix::zeros(n, k + 1);
    nmat.set_column(0, &DVector::from_column_slice(b));
    nmat.columns_mut(1, k).copy_from(&aq);

    let sv = nmat.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if k + 1 > n || smin <= 1e-12 * smax {
        let svd = aq.clone().svd(true, true);
        let y = svd
            .solve(&DVector::from_column_slice(b), 1e-12 * smax)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let x = &q * y;
        return Err(Error::ExactSolutionInSubspace {
            x: x.iter().copied().collect(),
        });
    }

    let bv = DVector::from_column_slice(b);
    let bb = bv.dot(&bv);
    let mut proj = aq.clone();
    for j in 0..k {
        let c = bv.dot(&aq.column(j)) / bb;
        proj.column_mut(j).axpy(-c, &bv, 1.0);
    }
    let svd = proj.svd(false, true);
    let (imin, &smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("nonempty spectrum");
    let v = svd
        .v_t
        .expect("right singular vectors")
        .row(imin)
        .transpose();
    let bav = bv.dot(&(&aq * &v));
    if bav.abs() <= 1e-14 * bb.sqrt() * aq.norm() {
        return Err(Error::NoFiniteMinimizer);
    }
    let y: Vec<f64> = v.iter().map(|&vi| vi * bb / bav).collect();
    Ok((smin * smin / (opnorm * opnorm), y))
}
