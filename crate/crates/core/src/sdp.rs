//! Dense interior-point solver for the linear-matrix-inequality problems
//! that define the scaling constants, plus the assembly of those LMIs.
//!
//! Complex Hermitian constraints are lowered to real symmetric ones through
//! the standard embedding `X + iY -> [[X, -Y], [Y, X]]`, then solved with a
//! log-det barrier path-following method: Newton centering steps with
//! Armijo backtracking, barrier weight scaled by 10 per stage, duality gap
//! certified by `m / t` for total embedded dimension `m`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::algebra::{
    b_coefficient_ops, build_a_op, build_b_op, g_operator, m_coefficient_stacks, op_norm,
    ControlMatrix,
};
use crate::mat::{hermiticity_defect, max_abs, CMat};
use crate::model::MarkovianModel;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("matrix is not Hermitian (max deviation {defect:.3e})")]
    NonHermitian { defect: f64 },
    #[error("malformed problem: {0}")]
    InvalidProblem(String),
    #[error("cap {cap:.6e} is below the attainable floor {floor:.6e}")]
    InfeasibleCap { cap: f64, floor: f64 },
}

/// One constraint `S(x) = constant + sum_i x[i] * coeffs[i]  >= 0` over real
/// symmetric matrices.
#[derive(Debug, Clone)]
pub struct LmiBlock {
    pub constant: DMatrix<f64>,
    pub coeffs: Vec<DMatrix<f64>>,
}

impl LmiBlock {
    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    fn eval(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut s = self.constant.clone();
        for (xi, f) in x.iter().zip(&self.coeffs) {
            if *xi != 0.0 {
                s += f * *xi;
            }
        }
        s
    }

    fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|f| f.iter().all(|v| *v == 0.0))
    }
}

/// Minimise `objective . x` subject to every block being positive
/// semidefinite. `start` must be strictly feasible when given; otherwise a
/// feasible point is searched for internally.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub objective: DVector<f64>,
    pub blocks: Vec<LmiBlock>,
    pub start: Option<DVector<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Gap and feasibility tolerances met.
    Optimal,
    /// Iteration budget exhausted; best iterate returned with its certified gap.
    MaxIter,
    /// No strictly feasible point found.
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: DVector<f64>,
    /// Objective value at `x`.
    pub value: f64,
    pub status: SolveStatus,
    /// Certified duality-gap bound at the last completed centering stage.
    pub gap: f64,
    /// Smallest eigenvalue across all blocks at `x`.
    pub feasibility_margin: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Target duality gap (absolute, in objective units).
    pub gap_tol: f64,
    /// Feasibility slack accepted in eigenvalue terms.
    pub feas_tol: f64,
    /// Total Newton-iteration budget.
    pub max_iter: usize,
    /// Initial barrier weight `t`.
    pub barrier_init: f64,
    /// Multiplicative barrier schedule per stage.
    pub barrier_scale: f64,
    /// Armijo slope fraction for backtracking.
    pub armijo_slope: f64,
    /// Step shrink factor for backtracking.
    pub backtrack_ratio: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gap_tol: 1e-9,
            feas_tol: 1e-9,
            max_iter: 800,
            barrier_init: 1.0,
            barrier_scale: 10.0,
            armijo_slope: 0.25,
            backtrack_ratio: 0.5,
        }
    }
}

/// Real symmetric embedding of a Hermitian matrix: `X + iY` becomes
/// `[[X, -Y], [Y, X]]`, doubling every eigenvalue's multiplicity.
pub fn real_embedding(z: &CMat) -> Result<DMatrix<f64>, SdpError> {
    let defect = hermiticity_defect(z);
    if defect > 1e-10 * max_abs(z).max(1.0) {
        return Err(SdpError::NonHermitian { defect });
    }
    let n = z.nrows();
    let mut e = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = z[(i, j)];
            e[(i, j)] = v.re;
            e[(n + i, n + j)] = v.re;
            e[(i, n + j)] = -v.im;
            e[(n + i, j)] = v.im;
        }
    }
    Ok(e)
}

/// Whether the scalar bound in an LMI is a decision variable or pinned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarBinding {
    Variable,
    Fixed(f64),
}

/// Number of decision variables used by every assembled problem: the
/// `(n+1)^2` control parameters followed by one norm scalar.
pub fn n_vars(m: &MarkovianModel) -> usize {
    ControlMatrix::param_len(m.n_jumps()) + 1
}

/// Schur-form LMI for the quadratic family:
/// `[[a 1_d, M(h)†], [M(h), 1_nd]] >= 0` is equivalent to `a >= |a(h)|`.
///
/// The block is expressed over the full variable vector of [`n_vars`]; when
/// `scalar` is fixed the `a` slot has a zero coefficient and the cap joins
/// the constant term.
pub fn assemble_a_lmi(m: &MarkovianModel, scalar: ScalarBinding) -> Result<LmiBlock, SdpError> {
    let d = m.dim();
    let n = m.n_jumps();
    let total = d + n * d;
    let h0 = ControlMatrix::zero(n);
    let m0 = crate::algebra::build_m(m, &h0)
        .map_err(|e| SdpError::InvalidProblem(e.to_string()))?;

    let place = |stack: &CMat| -> CMat {
        let mut z = CMat::zeros(total, total);
        z.view_mut((d, 0), (n * d, d)).copy_from(stack);
        z.view_mut((0, d), (d, n * d)).copy_from(&stack.adjoint());
        z
    };

    let mut constant = place(&m0);
    for i in 0..n * d {
        constant[(d + i, d + i)] += crate::mat::cr(1.0);
    }
    if let ScalarBinding::Fixed(cap) = scalar {
        for i in 0..d {
            constant[(i, i)] += crate::mat::cr(cap);
        }
    }

    let nv = n_vars(m);
    let mut coeffs = Vec::with_capacity(nv);
    for stack in m_coefficient_stacks(m) {
        coeffs.push(real_embedding(&place(&stack))?);
    }
    let mut a_coeff = CMat::zeros(total, total);
    if scalar == ScalarBinding::Variable {
        for i in 0..d {
            a_coeff[(i, i)] = crate::mat::cr(1.0);
        }
    }
    coeffs.push(real_embedding(&a_coeff)?);

    Ok(LmiBlock {
        constant: real_embedding(&constant)?,
        coeffs,
    })
}

/// Pair of LMIs for the Hermitian family: `b 1 - b(h) >= 0` and
/// `b 1 + b(h) >= 0` together say `b >= |b(h)|`. Same variable layout as
/// [`assemble_a_lmi`].
pub fn assemble_b_lmi(
    m: &MarkovianModel,
    scalar: ScalarBinding,
) -> Result<(LmiBlock, LmiBlock), SdpError> {
    let d = m.dim();
    let g = g_operator(m);
    let id = CMat::identity(d, d);
    let cap = match scalar {
        ScalarBinding::Fixed(c) => c,
        ScalarBinding::Variable => 0.0,
    };

    let mut minus_coeffs = Vec::new();
    let mut plus_coeffs = Vec::new();
    for op in b_coefficient_ops(m) {
        minus_coeffs.push(real_embedding(&(-&op))?);
        plus_coeffs.push(real_embedding(&op)?);
    }
    let scalar_coeff = match scalar {
        ScalarBinding::Variable => real_embedding(&id)?,
        ScalarBinding::Fixed(_) => DMatrix::zeros(2 * d, 2 * d),
    };
    minus_coeffs.push(scalar_coeff.clone());
    plus_coeffs.push(scalar_coeff);

    let minus = LmiBlock {
        constant: real_embedding(&(&id * crate::mat::cr(cap) - &g))?,
        coeffs: minus_coeffs,
    };
    let plus = LmiBlock {
        constant: real_embedding(&(&id * crate::mat::cr(cap) + &g))?,
        coeffs: plus_coeffs,
    };
    Ok((minus, plus))
}

fn min_eig_sym(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()).scale(0.5);
    sym.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, v| a.min(*v))
}

fn feasibility_margin(blocks: &[LmiBlock], x: &DVector<f64>) -> f64 {
    blocks
        .iter()
        .map(|b| min_eig_sym(&b.eval(x)))
        .fold(f64::INFINITY, f64::min)
}

/// Barrier value `t * c.x - sum log det S_j(x)`, `None` outside the domain.
fn barrier_value(blocks: &[LmiBlock], c: &DVector<f64>, t: f64, x: &DVector<f64>) -> Option<f64> {
    let mut v = t * c.dot(x);
    for b in blocks {
        let chol = b.eval(x).cholesky()?;
        let logdet: f64 = (0..b.dim()).map(|i| chol.l_dirty()[(i, i)].ln()).sum();
        v -= 2.0 * logdet;
    }
    Some(v)
}

struct CenteringOutcome {
    lambda_sq: f64,
    iterations: usize,
    stalled: bool,
    early_stop: bool,
}

/// Newton-centers `x` in place for fixed barrier weight `t`. `stop_below`
/// aborts as soon as the objective drops under the threshold, which keeps
/// the feasibility phase finite even though its barrier objective is
/// unbounded below.
#[allow(clippy::too_many_arguments)]
fn center(
    blocks: &[LmiBlock],
    c: &DVector<f64>,
    t: f64,
    x: &mut DVector<f64>,
    tol_lambda_sq: f64,
    budget: usize,
    cfg: &SolverConfig,
    stop_below: Option<f64>,
) -> CenteringOutcome {
    let nv = x.len();
    let mut iterations = 0;
    let mut lambda_sq = f64::INFINITY;

    if let Some(threshold) = stop_below {
        if c.dot(x) < threshold {
            return CenteringOutcome {
                lambda_sq,
                iterations,
                stalled: false,
                early_stop: true,
            };
        }
    }

    while iterations < budget {
        // Gradient and Hessian of the barrier objective.
        let mut grad = c.scale(t);
        let mut hess = DMatrix::<f64>::zeros(nv, nv);
        let mut singular = false;
        for b in blocks {
            let s = b.eval(x);
            let Some(chol) = s.cholesky() else {
                singular = true;
                break;
            };
            let l = chol.l();
            let mut ws: Vec<Option<DMatrix<f64>>> = Vec::with_capacity(nv);
            for f in &b.coeffs {
                if f.iter().all(|v| *v == 0.0) {
                    ws.push(None);
                    continue;
                }
                let y = l.solve_lower_triangular(f).expect("nonsingular L");
                let w = l
                    .solve_lower_triangular(&y.transpose())
                    .expect("nonsingular L")
                    .transpose();
                ws.push(Some(w));
            }
            for (i, wi) in ws.iter().enumerate() {
                let Some(wi) = wi else { continue };
                grad[i] -= wi.trace();
                for (j, wj) in ws.iter().enumerate().skip(i) {
                    let Some(wj) = wj else { continue };
                    let dot = wi.iter().zip(wj.iter()).map(|(a, b)| a * b).sum::<f64>();
                    hess[(i, j)] += dot;
                    hess[(j, i)] = hess[(i, j)];
                }
            }
        }
        if singular {
            return CenteringOutcome {
                lambda_sq,
                iterations,
                stalled: true,
                early_stop: false,
            };
        }

        // Newton direction from the Jacobi-scaled system D^-1 H D^-1 with
        // D = sqrt(diag H). The scaled matrix has unit diagonal (and, being
        // positive semidefinite, off-diagonal entries bounded by one), so
        // Cholesky stays stable across the enormous stiffness spread between
        // near-degenerate cap blocks and O(1) objective blocks. Exactly
        // singular rows (controls absent from every active block) are left
        // unscaled and cured by a jitter ridge; on a unit-diagonal system a
        // jitter cannot mask soft descent directions, so its decrement is
        // still trusted for certification. Larger ridges, escalated when the
        // line search fails, bend the step towards scaled gradient descent
        // to recover from barrier walls; they drive progress but never
        // certify convergence.
        let base = barrier_value(blocks, c, t, x).expect("current iterate is feasible");
        let mut d = DVector::<f64>::from_element(nv, 1.0);
        for i in 0..nv {
            if hess[(i, i)] > 0.0 {
                d[i] = hess[(i, i)].sqrt();
            }
        }
        let mut hs = hess.clone();
        let mut gs = -&grad;
        for i in 0..nv {
            gs[i] /= d[i];
            for j in 0..nv {
                hs[(i, j)] /= d[i] * d[j];
            }
        }
        const CERTIFY_RIDGE: f64 = 1e-8;
        let mut ridge = 0.0;
        let mut moved = false;
        while !moved {
            let mut reg = hs.clone();
            for i in 0..nv {
                reg[(i, i)] += ridge;
            }
            if let Some(ch) = reg.cholesky() {
                let y = ch.solve(&gs);
                let delta = DVector::from_fn(nv, |i, _| y[i] / d[i]);
                let dec = gs.dot(&y).max(0.0);
                if ridge <= CERTIFY_RIDGE {
                    lambda_sq = dec;
                    if lambda_sq <= tol_lambda_sq {
                        return CenteringOutcome {
                            lambda_sq,
                            iterations,
                            stalled: false,
                            early_stop: false,
                        };
                    }
                }
                // Backtracking line search on the barrier objective.
                let slope = -dec;
                let mut step = 1.0;
                while step > 1e-14 {
                    let cand = &*x + delta.scale(step);
                    if let Some(v) = barrier_value(blocks, c, t, &cand) {
                        if v <= base + cfg.armijo_slope * step * slope {
                            *x = cand;
                            moved = true;
                            break;
                        }
                    }
                    step *= cfg.backtrack_ratio;
                }
            }
            if !moved {
                ridge = if ridge == 0.0 { 1e-14 } else { ridge * 100.0 };
                if ridge > 1e8 {
                    return CenteringOutcome {
                        lambda_sq,
                        iterations,
                        stalled: true,
                        early_stop: false,
                    };
                }
            }
        }
        iterations += 1;
        if let Some(threshold) = stop_below {
            if c.dot(x) < threshold {
                return CenteringOutcome {
                    lambda_sq,
                    iterations,
                    stalled: false,
                    early_stop: true,
                };
            }
        }
    }

    CenteringOutcome {
        lambda_sq,
        iterations,
        stalled: false,
        early_stop: false,
    }
}

/// Path-following loop from a strictly feasible `x0`. `stop_below` aborts
/// early once the objective drops under the threshold (used by the
/// feasibility phase).
fn barrier_solve(
    blocks: &[LmiBlock],
    objective: &DVector<f64>,
    mut x: DVector<f64>,
    cfg: &SolverConfig,
    stop_below: Option<f64>,
) -> SdpSolution {
    let m_total: usize = blocks.iter().map(LmiBlock::dim).sum();
    let m_f = m_total as f64;
    let mut t = cfg.barrier_init;
    let mut iterations = 0;
    let mut certified_gap = f64::INFINITY;
    let mut status = SolveStatus::MaxIter;

    for _stage in 0..60 {
        let remaining = cfg.max_iter.saturating_sub(iterations);
        if remaining == 0 {
            break;
        }
        // A point with Newton decrement lambda < 1 yields a dual feasible
        // pair certifying gap <= (m + lambda sqrt(m)) / t, so moderate
        // centering accuracy suffices at every stage; the gap formula below
        // accounts for the achieved lambda.
        let tol = 1e-2;
        let out = center(blocks, objective, t, &mut x, tol, remaining, cfg, stop_below);
        iterations += out.iterations;

        if out.lambda_sq <= tol {
            let lambda = out.lambda_sq.sqrt();
            certified_gap = (m_f + lambda * m_f.sqrt()) / t;
        }
        if out.early_stop {
            status = SolveStatus::Optimal;
            break;
        }
        if certified_gap <= cfg.gap_tol {
            status = SolveStatus::Optimal;
            break;
        }
        if out.stalled && out.lambda_sq > tol {
            // Cannot center at this weight; report what is certified so far.
            break;
        }
        t *= cfg.barrier_scale;
    }

    let margin = feasibility_margin(blocks, &x);
    if status == SolveStatus::Optimal && margin < -cfg.feas_tol {
        status = SolveStatus::MaxIter;
    }
    SdpSolution {
        value: objective.dot(&x),
        x,
        status,
        gap: certified_gap,
        feasibility_margin: margin,
        newton_iterations: iterations,
    }
}

/// Searches for a strictly feasible point by minimising the uniform shift
/// `s` in `S_j(x) + s 1 >= 0`.
fn phase_one(
    blocks: &[LmiBlock],
    x_base: &DVector<f64>,
    cfg: &SolverConfig,
) -> Option<DVector<f64>> {
    let nv = x_base.len();
    let margin = feasibility_margin(blocks, x_base);
    if margin > cfg.feas_tol {
        return Some(x_base.clone());
    }

    let aug: Vec<LmiBlock> = blocks
        .iter()
        .map(|b| {
            let mut coeffs = b.coeffs.clone();
            coeffs.push(DMatrix::identity(b.dim(), b.dim()));
            LmiBlock {
                constant: b.constant.clone(),
                coeffs,
            }
        })
        .collect();
    let mut objective = DVector::zeros(nv + 1);
    objective[nv] = 1.0;
    let mut x0 = DVector::zeros(nv + 1);
    x0.rows_mut(0, nv).copy_from(x_base);
    x0[nv] = -margin + 0.5 * margin.abs().max(1.0);

    let sol = barrier_solve(&aug, &objective, x0, cfg, Some(-(10.0 * cfg.feas_tol)));
    if sol.x[nv] < -cfg.feas_tol {
        Some(sol.x.rows(0, nv).into_owned())
    } else {
        None
    }
}

/// Solves the problem, locating a strictly feasible start if none is given.
pub fn solve_sdp(p: &SdpProblem, cfg: &SolverConfig) -> Result<SdpSolution, SdpError> {
    let nv = p.objective.len();
    if p.blocks.is_empty() {
        return Err(SdpError::InvalidProblem(
            "problem has no constraint blocks".into(),
        ));
    }
    for (j, b) in p.blocks.iter().enumerate() {
        if !b.constant.is_square() {
            return Err(SdpError::InvalidProblem(format!(
                "block {j}: constant is not square"
            )));
        }
        if b.coeffs.len() != nv {
            return Err(SdpError::InvalidProblem(format!(
                "block {j}: {} coefficients for {nv} variables",
                b.coeffs.len()
            )));
        }
        if b.coeffs.iter().any(|f| f.shape() != b.constant.shape()) {
            return Err(SdpError::InvalidProblem(format!(
                "block {j}: coefficient shape mismatch"
            )));
        }
    }

    let base = p.start.clone().unwrap_or_else(|| DVector::zeros(nv));
    if let Some(ref s) = p.start {
        if s.len() != nv {
            return Err(SdpError::InvalidProblem(format!(
                "start has {} entries for {nv} variables",
                s.len()
            )));
        }
    }

    let x0 = if feasibility_margin(&p.blocks, &base) > 0.0 {
        base
    } else {
        match phase_one(&p.blocks, &base, cfg) {
            Some(x) => x,
            None => {
                let margin = feasibility_margin(&p.blocks, &base);
                return Ok(SdpSolution {
                    value: f64::NAN,
                    x: base,
                    status: SolveStatus::Infeasible,
                    gap: f64::INFINITY,
                    feasibility_margin: margin,
                    newton_iterations: 0,
                });
            }
        }
    };

    Ok(barrier_solve(&p.blocks, &p.objective, x0, cfg, None))
}

/// Outcome of one norm-minimisation: the solver's claimed optimum, the norm
/// recomputed from the decoded control, and the control itself.
#[derive(Debug, Clone)]
pub struct NormOpt {
    /// Claimed optimum (objective value at the solver's iterate).
    pub value: f64,
    /// Norm of the corresponding operator rebuilt from `h`.
    pub achieved: f64,
    pub h: ControlMatrix,
    pub solution: SdpSolution,
}

fn strip_constant_blocks(blocks: Vec<LmiBlock>) -> Result<Vec<LmiBlock>, SdpError> {
    let mut out = Vec::new();
    for b in blocks {
        if b.is_constant() {
            if min_eig_sym(&b.constant) < 0.0 {
                return Err(SdpError::InvalidProblem(
                    "constant constraint block is not positive semidefinite".into(),
                ));
            }
        } else {
            out.push(b);
        }
    }
    Ok(out)
}

fn decode(m: &MarkovianModel, sol: SdpSolution, rebuild_b: bool) -> NormOpt {
    let n = m.n_jumps();
    let plen = ControlMatrix::param_len(n);
    let params: Vec<f64> = sol.x.rows(0, plen).iter().copied().collect();
    let h = ControlMatrix::from_params(n, &params);
    let achieved = if rebuild_b {
        op_norm(&build_b_op(m, &h).expect("decoded control matches model"))
    } else {
        op_norm(&build_a_op(m, &h).expect("decoded control matches model"))
    };
    NormOpt {
        value: sol.value,
        achieved,
        h,
        solution: sol,
    }
}

fn start_vector(m: &MarkovianModel, h: &ControlMatrix, scalar_from: f64) -> DVector<f64> {
    let plen = ControlMatrix::param_len(m.n_jumps());
    let mut x = DVector::zeros(plen + 1);
    x.rows_mut(0, plen).copy_from(&h.to_params());
    x[plen] = scalar_from;
    x
}

fn scalar_objective(nv: usize) -> DVector<f64> {
    let mut c = DVector::zeros(nv);
    c[nv - 1] = 1.0;
    c
}

/// Global minimum of `|a(h)|` over controls. `warm` seeds the search.
pub fn min_a_unconstrained(
    m: &MarkovianModel,
    warm: Option<&ControlMatrix>,
    cfg: &SolverConfig,
) -> Result<NormOpt, SdpError> {
    let h0 = warm.cloned().unwrap_or_else(|| ControlMatrix::zero(m.n_jumps()));
    let a0 = op_norm(&build_a_op(m, &h0).map_err(|e| SdpError::InvalidProblem(e.to_string()))?);
    let nv = n_vars(m);
    let p = SdpProblem {
        objective: scalar_objective(nv),
        blocks: vec![assemble_a_lmi(m, ScalarBinding::Variable)?],
        start: Some(start_vector(m, &h0, a0 + 1.0)),
    };
    Ok(decode(m, solve_sdp(&p, cfg)?, false))
}

/// Global minimum of `|b(h)|` over controls.
pub fn min_b_unconstrained(
    m: &MarkovianModel,
    warm: Option<&ControlMatrix>,
    cfg: &SolverConfig,
) -> Result<NormOpt, SdpError> {
    let h0 = warm.cloned().unwrap_or_else(|| ControlMatrix::zero(m.n_jumps()));
    let b0 = op_norm(&build_b_op(m, &h0).map_err(|e| SdpError::InvalidProblem(e.to_string()))?);
    let (minus, plus) = assemble_b_lmi(m, ScalarBinding::Variable)?;
    let nv = n_vars(m);
    let p = SdpProblem {
        objective: scalar_objective(nv),
        blocks: vec![minus, plus],
        start: Some(start_vector(m, &h0, b0 + 1.0)),
    };
    Ok(decode(m, solve_sdp(&p, cfg)?, true))
}

/// Tie-break weight for [`a_corner_control`] / [`b_corner_control`]: small
/// enough that the primary norm stays at its global floor to solver
/// precision, large enough that the secondary term still steers the iterate
/// across the primary's argmin valley.
const CORNER_WEIGHT: f64 = 1e-8;

fn corner_control(
    m: &MarkovianModel,
    primary_is_b: bool,
    warm: Option<&ControlMatrix>,
    cfg: &SolverConfig,
) -> Result<ControlMatrix, SdpError> {
    let n = m.n_jumps();
    let plen = ControlMatrix::param_len(n);
    let h0 = warm.cloned().unwrap_or_else(|| ControlMatrix::zero(n));
    let a0 = op_norm(&build_a_op(m, &h0).map_err(|e| SdpError::InvalidProblem(e.to_string()))?);
    let b0 = op_norm(&build_b_op(m, &h0).map_err(|e| SdpError::InvalidProblem(e.to_string()))?);

    // Re-slot the standard single-scalar blocks onto the wider layout
    // `[h.., s_a, s_b]`.
    let widen = |b: LmiBlock, scalar_slot: usize| -> LmiBlock {
        let zero = DMatrix::zeros(b.constant.nrows(), b.constant.ncols());
        let mut coeffs = b.coeffs;
        let s = coeffs.pop().expect("scalar coefficient");
        if scalar_slot == plen {
            coeffs.push(s);
            coeffs.push(zero);
        } else {
            coeffs.push(zero);
            coeffs.push(s);
        }
        LmiBlock {
            constant: b.constant,
            coeffs,
        }
    };
    let a_lmi = assemble_a_lmi(m, ScalarBinding::Variable)?;
    let (b_minus, b_plus) = assemble_b_lmi(m, ScalarBinding::Variable)?;
    let blocks = vec![
        widen(a_lmi, plen),
        widen(b_minus, plen + 1),
        widen(b_plus, plen + 1),
    ];

    let mut objective = DVector::zeros(plen + 2);
    objective[plen] = if primary_is_b { CORNER_WEIGHT } else { 1.0 };
    objective[plen + 1] = if primary_is_b { 1.0 } else { CORNER_WEIGHT };

    let mut start = DVector::zeros(plen + 2);
    start.rows_mut(0, plen).copy_from(&h0.to_params());
    start[plen] = a0 + 1.0;
    start[plen + 1] = b0 + 1.0;

    let p = SdpProblem {
        objective,
        blocks,
        start: Some(start),
    };
    let sol = solve_sdp(&p, cfg)?;
    let params: Vec<f64> = sol.x.rows(0, plen).iter().copied().collect();
    Ok(ControlMatrix::from_params(n, &params))
}

/// Control at the `(b_min, a_plus)` corner of the trade-off curve: minimises
/// `|b(h)|` while tie-breaking towards small `|a(h)|`.
///
/// The capped minimisations confine the iterate to a thin shell around the
/// bound norm's argmin valley; a warm start at the wrong end of that valley
/// forces Newton to crawl arbitrarily far through the sliver. The corner
/// control starts them where they must finish.
pub fn b_corner_control(
    m: &MarkovianModel,
    warm: Option<&ControlMatrix>,
    cfg: &SolverConfig,
) -> Result<ControlMatrix, SdpError> {
    corner_control(m, true, warm, cfg)
}

/// Control at the `(a_min, b_plus)` corner: minimises `|a(h)|` while
/// tie-breaking towards small `|b(h)|`. See [`b_corner_control`].
pub fn a_corner_control(
    m: &MarkovianModel,
    warm: Option<&ControlMatrix>,
    cfg: &SolverConfig,
) -> Result<ControlMatrix, SdpError> {
    corner_control(m, false, warm, cfg)
}

/// Picks a warm control strictly meeting `|b(h)| < b_cap` (resp. `a_cap`).
fn feasible_control<F>(
    m: &MarkovianModel,
    warm: Option<&ControlMatrix>,
    cap: f64,
    norm_of: F,
    fallback: impl FnOnce() -> Result<NormOpt, SdpError>,
) -> Result<(ControlMatrix, f64), SdpError>
where
    F: Fn(&ControlMatrix) -> f64,
{
    if let Some(h) = warm {
        let v = norm_of(h);
        if v < cap {
            return Ok((h.clone(), v));
        }
    }
    let zero = ControlMatrix::zero(m.n_jumps());
    let v = norm_of(&zero);
    if v < cap {
        return Ok((zero, v));
    }
    let opt = fallback()?;
    if opt.achieved < cap {
        Ok((opt.h, opt.achieved))
    } else {
        Err(SdpError::InfeasibleCap {
            cap,
            floor: opt.achieved,
        })
    }
}

/// Minimum of `|a(h)|` subject to `|b(h)| <= b_cap`.
pub fn min_a_given_b(
    m: &MarkovianModel,
    b_cap: f64,
    warm: Option<&ControlMatrix>,
    cfg: &SolverConfig,
) -> Result<NormOpt, SdpError> {
    let (h0, _) = feasible_control(
        m,
        warm,
        b_cap,
        |h| op_norm(&build_b_op(m, h).expect("control matches model")),
        || min_b_unconstrained(m, None, cfg),
    )?;
    let a0 = op_norm(&build_a_op(m, &h0).expect("control matches model"));
    let (minus, plus) = assemble_b_lmi(m, ScalarBinding::Fixed(b_cap))?;
    let blocks = strip_constant_blocks(vec![
        assemble_a_lmi(m, ScalarBinding::Variable)?,
        minus,
        plus,
    ])?;
    let nv = n_vars(m);
    let p = SdpProblem {
        objective: scalar_objective(nv),
        blocks,
        start: Some(start_vector(m, &h0, a0 + 1.0)),
    };
    Ok(decode(m, solve_sdp(&p, cfg)?, false))
}

/// Minimum of `|b(h)|` subject to `|a(h)| <= a_cap`.
pub fn min_b_given_a(
    m: &MarkovianModel,
    a_cap: f64,
    warm: Option<&ControlMatrix>,
    cfg: &SolverConfig,
) -> Result<NormOpt, SdpError> {
    let (h0, _) = feasible_control(
        m,
        warm,
        a_cap,
        |h| op_norm(&build_a_op(m, h).expect("control matches model")),
        || min_a_unconstrained(m, None, cfg),
    )?;
    let b0 = op_norm(&build_b_op(m, &h0).expect("control matches model"));
    let (minus, plus) = assemble_b_lmi(m, ScalarBinding::Variable)?;
    let blocks = strip_constant_blocks(vec![
        minus,
        plus,
        assemble_a_lmi(m, ScalarBinding::Fixed(a_cap))?,
    ])?;
    let nv = n_vars(m);
    let p = SdpProblem {
        objective: scalar_objective(nv),
        blocks,
        start: Some(start_vector(m, &h0, b0 + 1.0)),
    };
    Ok(decode(m, solve_sdp(&p, cfg)?, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{c, cr};
    use crate::model::{builtin_model, BuiltinModelId};

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn real_embedding_doubles_spectrum() {
        let z = CMat::from_row_slice(2, 2, &[cr(1.0), c(0.0, -2.0), c(0.0, 2.0), cr(-1.0)]);
        let e = real_embedding(&z).unwrap();
        let mut ev: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        let expected = (5.0f64).sqrt();
        assert!((ev[0] + expected).abs() < 1e-12);
        assert!((ev[1] + expected).abs() < 1e-12);
        assert!((ev[2] - expected).abs() < 1e-12);
        assert!((ev[3] - expected).abs() < 1e-12);

        let bad = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]);
        assert!(real_embedding(&bad).is_err());
    }

    #[test]
    fn scalar_identity_lmi_reaches_largest_eigenvalue() {
        // minimize a  s.t.  a*1 - diag(1, -1) >= 0; optimum a = 1.
        let constant = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let p = SdpProblem {
            objective: DVector::from_vec(vec![1.0]),
            blocks: vec![LmiBlock {
                constant,
                coeffs: vec![DMatrix::identity(2, 2)],
            }],
            start: Some(DVector::from_vec(vec![2.0])),
        };
        let sol = solve_sdp(&p, &cfg()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 5e-9, "value {}", sol.value);
        assert!(sol.gap <= 1e-9 * 1.01);
        assert!(sol.feasibility_margin >= -1e-12);
    }

    #[test]
    fn phase_one_finds_interior_point_without_start() {
        // x >= 1, minimize x, no start given (origin is infeasible).
        let p = SdpProblem {
            objective: DVector::from_vec(vec![1.0]),
            blocks: vec![LmiBlock {
                constant: DMatrix::from_row_slice(1, 1, &[-1.0]),
                coeffs: vec![DMatrix::from_row_slice(1, 1, &[1.0])],
            }],
            start: None,
        };
        let sol = solve_sdp(&p, &cfg()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 5e-9, "value {}", sol.value);
    }

    #[test]
    fn contradictory_constraints_report_infeasible() {
        // x >= 1 and -x >= 0 cannot hold together.
        let p = SdpProblem {
            objective: DVector::from_vec(vec![1.0]),
            blocks: vec![
                LmiBlock {
                    constant: DMatrix::from_row_slice(1, 1, &[-1.0]),
                    coeffs: vec![DMatrix::from_row_slice(1, 1, &[1.0])],
                },
                LmiBlock {
                    constant: DMatrix::from_row_slice(1, 1, &[0.0]),
                    coeffs: vec![DMatrix::from_row_slice(1, 1, &[-1.0])],
                },
            ],
            start: None,
        };
        let sol = solve_sdp(&p, &cfg()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn pd_minimum_norms_match_hand_values() {
        // Dephasing along the signal: a can be cancelled (Ldot = 0) and the
        // signal lies in the jump span, so both minima vanish.
        let m = builtin_model(BuiltinModelId::ParallelDephasing, 1.0, 0.4).unwrap();
        let a = min_a_unconstrained(&m, None, &cfg()).unwrap();
        assert_eq!(a.solution.status, SolveStatus::Optimal);
        assert!(a.value.abs() < 1e-6, "a_min {}", a.value);

        let b = min_b_unconstrained(&m, None, &cfg()).unwrap();
        assert_eq!(b.solution.status, SolveStatus::Optimal);
        assert!(b.value.abs() < 1e-6, "b_min {}", b.value);
    }

    #[test]
    fn strength_model_min_a_is_half_gamma() {
        // Ldot = L forces |M|^2 >= gamma/2 at best.
        let m = builtin_model(BuiltinModelId::StrengthDephasing, 1.0, 0.4).unwrap();
        let a = min_a_unconstrained(&m, None, &cfg()).unwrap();
        assert_eq!(a.solution.status, SolveStatus::Optimal);
        assert!((a.value - 0.2).abs() < 1e-6, "a_min {}", a.value);
        assert!((a.achieved - a.value).abs() < 1e-7);
    }

    #[test]
    fn capped_problems_respect_caps_and_reach_hand_values() {
        let m = builtin_model(BuiltinModelId::ParallelDephasing, 1.0, 0.4).unwrap();
        // b_minus = 0 here, so cap b at the slack floor and minimise a:
        // the optimum is 1/(2 gamma) = 1.25.
        let b_floor = min_b_unconstrained(&m, None, &cfg()).unwrap();
        let b_cap = b_floor.achieved.max(0.0) * (1.0 + 1e-6) + 1e-9;
        let a_plus = min_a_given_b(&m, b_cap, Some(&b_floor.h), &cfg()).unwrap();
        assert_eq!(a_plus.solution.status, SolveStatus::Optimal);
        assert!((a_plus.value - 1.25).abs() < 1e-4, "a_plus {}", a_plus.value);
        let b_at_opt = op_norm(&build_b_op(&m, &a_plus.h).unwrap());
        assert!(b_at_opt <= b_cap * (1.0 + 1e-7));

        // Cap a at its floor and minimise b. The limit value is 1 (the
        // signal norm); a cap of c still buys an O(sqrt(c)) reduction
        // through the linear cross terms, so allow that much slack.
        let a_floor = min_a_unconstrained(&m, None, &cfg()).unwrap();
        let a_cap = a_floor.achieved.max(0.0) * (1.0 + 1e-6) + 1e-9;
        let b_plus = min_b_given_a(&m, a_cap, Some(&a_floor.h), &cfg()).unwrap();
        assert_eq!(b_plus.solution.status, SolveStatus::Optimal);
        assert!((b_plus.value - 1.0).abs() < 1e-4, "b_plus {}", b_plus.value);
    }

    #[test]
    fn infeasible_cap_is_reported() {
        let m = builtin_model(BuiltinModelId::StrengthDephasing, 1.0, 0.4).unwrap();
        // a can never go below 0.2, so a cap of 0.1 is unattainable.
        let err = min_b_given_a(&m, 0.1, None, &cfg());
        assert!(matches!(err, Err(SdpError::InfeasibleCap { .. })));
    }

    #[test]
    fn random_controls_never_beat_the_claimed_minimum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let m = builtin_model(BuiltinModelId::DirectionDephasing, 1.0, 0.4).unwrap();
        let a = min_a_unconstrained(&m, None, &cfg()).unwrap();
        let plen = ControlMatrix::param_len(1);
        let mut best = f64::INFINITY;
        for _ in 0..200 {
            let params: Vec<f64> = (0..plen).map(|_| rng.random_range(-2.0..2.0)).collect();
            let h = ControlMatrix::from_params(1, &params);
            best = best.min(op_norm(&build_a_op(&m, &h).unwrap()));
        }
        assert!(a.value <= best + 1e-6, "sdp {} vs sampled {}", a.value, best);
    }
}
