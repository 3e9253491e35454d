//! Operator algebra for the control-dependent bound: the stacked operator
//! `M(h)`, the quadratic family `a(h) = M†M`, the effective-Hamiltonian
//! family `b(h)`, span conditions and gauge transformations.

use nalgebra::DVector;

use thiserror::Error;

use crate::mat::{
    c, cr, frobenius_norm, hermiticity_defect, max_abs, vec_row_major, vstack, CMat, CVec,
};
use crate::model::MarkovianModel;

/// Relative threshold below which a least-squares residual counts as zero.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;

/// Singular values below this times the largest are treated as rank-deficient.
pub const SPAN_RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (max deviation {defect:.3e})")]
    NonHermitian { defect: f64 },
    #[error("gauge rotation is not unitary (max deviation {defect:.3e})")]
    NonUnitary { defect: f64 },
    #[error("derivatives are not in the jump-operator frame (residual {residual:.3e})")]
    NotInSpan { residual: f64 },
}

/// Hermitian control matrix in block form.
///
/// The full `(n+1) x (n+1)` matrix is `[[h00, hvec†], [hvec, hmat]]` with
/// `h00` real and `hmat` Hermitian, giving `(n+1)^2` real degrees of
/// freedom. `hvec[k]` couples jump `k` to the identity; `hmat[(k, l)]`
/// mixes jumps `k` and `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlMatrix {
    pub h00: f64,
    pub hvec: CVec,
    pub hmat: CMat,
}

impl ControlMatrix {
    /// The zero control for `n` jump operators.
    pub fn zero(n: usize) -> Self {
        ControlMatrix {
            h00: 0.0,
            hvec: CVec::zeros(n),
            hmat: CMat::zeros(n, n),
        }
    }

    /// Number of jump operators this control acts on.
    pub fn n(&self) -> usize {
        self.hvec.len()
    }

    /// Number of real parameters for `n` jumps: `(n+1)^2`.
    pub fn param_len(n: usize) -> usize {
        (n + 1) * (n + 1)
    }

    /// Assembles the full `(n+1) x (n+1)` Hermitian matrix.
    pub fn assemble(&self) -> CMat {
        let n = self.n();
        let mut m = CMat::zeros(n + 1, n + 1);
        m[(0, 0)] = cr(self.h00);
        for k in 0..n {
            m[(k + 1, 0)] = self.hvec[k];
            m[(0, k + 1)] = self.hvec[k].conj();
        }
        m.view_mut((1, 1), (n, n)).copy_from(&self.hmat);
        m
    }

    /// Splits a full Hermitian matrix back into block form.
    pub fn from_assembled(m: &CMat, tol: f64) -> Result<Self, AlgebraError> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(AlgebraError::DimensionMismatch(
                "control matrix must be square and non-empty".into(),
            ));
        }
        let defect = hermiticity_defect(m);
        if defect > tol {
            return Err(AlgebraError::NonHermitian { defect });
        }
        let n = m.nrows() - 1;
        Ok(ControlMatrix {
            h00: m[(0, 0)].re,
            hvec: CVec::from_fn(n, |k, _| m[(k + 1, 0)]),
            hmat: m.view((1, 1), (n, n)).into_owned(),
        })
    }

    /// Packs the control into the crate-wide real parameter layout:
    /// `[h00, (Re hvec_k, Im hvec_k)_k, (hmat_kk)_k, (Re, Im hmat_kl)_{k<l}]`.
    pub fn to_params(&self) -> DVector<f64> {
        let n = self.n();
        let mut p = DVector::zeros(Self::param_len(n));
        p[0] = self.h00;
        for k in 0..n {
            p[1 + 2 * k] = self.hvec[k].re;
            p[2 + 2 * k] = self.hvec[k].im;
        }
        for k in 0..n {
            p[1 + 2 * n + k] = self.hmat[(k, k)].re;
        }
        let mut idx = 1 + 3 * n;
        for k in 0..n {
            for l in (k + 1)..n {
                p[idx] = self.hmat[(k, l)].re;
                p[idx + 1] = self.hmat[(k, l)].im;
                idx += 2;
            }
        }
        p
    }

    /// Inverse of [`ControlMatrix::to_params`].
    pub fn from_params(n: usize, params: &[f64]) -> Self {
        assert_eq!(params.len(), Self::param_len(n), "parameter layout mismatch");
        let mut h = ControlMatrix::zero(n);
        h.h00 = params[0];
        for k in 0..n {
            h.hvec[k] = c(params[1 + 2 * k], params[2 + 2 * k]);
        }
        for k in 0..n {
            h.hmat[(k, k)] = cr(params[1 + 2 * n + k]);
        }
        let mut idx = 1 + 3 * n;
        for k in 0..n {
            for l in (k + 1)..n {
                let z = c(params[idx], params[idx + 1]);
                h.hmat[(k, l)] = z;
                h.hmat[(l, k)] = z.conj();
                idx += 2;
            }
        }
        h
    }
}

fn check_control_dims(m: &MarkovianModel, h: &ControlMatrix) -> Result<(), AlgebraError> {
    if h.n() != m.n_jumps() {
        return Err(AlgebraError::DimensionMismatch(format!(
            "control matrix is for {} jumps, model has {}",
            h.n(),
            m.n_jumps()
        )));
    }
    if h.hmat.shape() != (m.n_jumps(), m.n_jumps()) {
        return Err(AlgebraError::DimensionMismatch(
            "hmat block has the wrong shape".into(),
        ));
    }
    Ok(())
}

/// Stacked operator `M(h)`: row block `k` is
/// `i Ldot_k + sum_l hmat_kl L_l + hvec_k * 1`, giving an `nd x d` matrix.
pub fn build_m(m: &MarkovianModel, h: &ControlMatrix) -> Result<CMat, AlgebraError> {
    check_control_dims(m, h)?;
    let d = m.dim();
    let n = m.n_jumps();
    let id = CMat::identity(d, d);
    let mut out = CMat::zeros(n * d, d);
    for k in 0..n {
        let mut block = &m.jump_dots[k] * c(0.0, 1.0);
        for l in 0..n {
            block += &m.jumps[l] * h.hmat[(k, l)];
        }
        block += &id * h.hvec[k];
        out.view_mut((k * d, 0), (d, d)).copy_from(&block);
    }
    Ok(out)
}

/// Quadratic operator `a(h) = M(h)† M(h)`; positive semidefinite `d x d`.
pub fn build_a_op(m: &MarkovianModel, h: &ControlMatrix) -> Result<CMat, AlgebraError> {
    let stacked = build_m(m, h)?;
    Ok(stacked.adjoint() * stacked)
}

/// Drift operator `G = Hdot - (i/2) sum_k (Ldot_k† L_k - L_k† Ldot_k)`.
pub fn g_operator(m: &MarkovianModel) -> CMat {
    let mut g = m.hamiltonian_dot.clone();
    let half_i = c(0.0, 0.5);
    for (l, ld) in m.jumps.iter().zip(&m.jump_dots) {
        g -= (ld.adjoint() * l - l.adjoint() * ld) * half_i;
    }
    g
}

/// Effective-Hamiltonian operator
/// `b(h) = G + h00*1 + sum_k (conj(hvec_k) L_k + hvec_k L_k†)
///   + sum_kl hmat_kl L_k† L_l`; Hermitian whenever `hmat` is.
pub fn build_b_op(m: &MarkovianModel, h: &ControlMatrix) -> Result<CMat, AlgebraError> {
    check_control_dims(m, h)?;
    let d = m.dim();
    let n = m.n_jumps();
    let mut out = g_operator(m);
    out += CMat::identity(d, d) * cr(h.h00);
    for k in 0..n {
        out += &m.jumps[k] * h.hvec[k].conj();
        out += m.jumps[k].adjoint() * h.hvec[k];
    }
    for k in 0..n {
        for l in 0..n {
            if h.hmat[(k, l)] != cr(0.0) {
                out += m.jumps[k].adjoint() * &m.jumps[l] * h.hmat[(k, l)];
            }
        }
    }
    Ok(out)
}

/// Operator (spectral) norm: the largest singular value. Zero for empty
/// matrices.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().iter().fold(0.0f64, |a, s| a.max(*s))
}

/// Per-parameter derivative stacks `dM/dx_j` in the layout of
/// [`ControlMatrix::to_params`]; entry 0 (for `h00`) is the zero stack.
pub(crate) fn m_coefficient_stacks(m: &MarkovianModel) -> Vec<CMat> {
    let d = m.dim();
    let n = m.n_jumps();
    let id = CMat::identity(d, d);
    let zero_stack = CMat::zeros(n * d, d);
    let put = |blocks: &[(usize, CMat)]| {
        let mut s = zero_stack.clone();
        for (k, b) in blocks {
            s.view_mut((k * d, 0), (d, d)).copy_from(b);
        }
        s
    };

    let mut coeffs = Vec::with_capacity(ControlMatrix::param_len(n));
    coeffs.push(zero_stack.clone());
    for k in 0..n {
        coeffs.push(put(&[(k, id.clone())]));
        coeffs.push(put(&[(k, &id * c(0.0, 1.0))]));
    }
    for k in 0..n {
        coeffs.push(put(&[(k, m.jumps[k].clone())]));
    }
    for k in 0..n {
        for l in (k + 1)..n {
            coeffs.push(put(&[(k, m.jumps[l].clone()), (l, m.jumps[k].clone())]));
            coeffs.push(put(&[
                (k, &m.jumps[l] * c(0.0, 1.0)),
                (l, &m.jumps[k] * c(0.0, -1.0)),
            ]));
        }
    }
    coeffs
}

/// Per-parameter derivatives `db/dx_j`, same layout as
/// [`m_coefficient_stacks`]. All entries are Hermitian.
pub(crate) fn b_coefficient_ops(m: &MarkovianModel) -> Vec<CMat> {
    let d = m.dim();
    let n = m.n_jumps();
    let id = CMat::identity(d, d);
    let mut coeffs = Vec::with_capacity(ControlMatrix::param_len(n));
    coeffs.push(id.clone());
    for k in 0..n {
        let lk = &m.jumps[k];
        coeffs.push(lk + lk.adjoint());
        coeffs.push((lk.adjoint() - lk) * c(0.0, 1.0));
    }
    for k in 0..n {
        coeffs.push(m.jumps[k].adjoint() * &m.jumps[k]);
    }
    for k in 0..n {
        for l in (k + 1)..n {
            let kl = m.jumps[k].adjoint() * &m.jumps[l];
            let lk = m.jumps[l].adjoint() * &m.jumps[k];
            coeffs.push(&kl + &lk);
            coeffs.push((kl - lk) * c(0.0, 1.0));
        }
    }
    coeffs
}

/// Least squares over *real* coefficients for complex data: minimises
/// `|target - sum_j x_j cols_j|_2` and returns `(x, residual)`.
fn real_lsq(cols: &[CVec], target: &CVec) -> (DVector<f64>, f64) {
    let rows = 2 * target.len();
    let p = cols.len();
    let mut a = nalgebra::DMatrix::<f64>::zeros(rows, p);
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            a[(i, j)] = z.re;
            a[(target.len() + i, j)] = z.im;
        }
    }
    let mut t = DVector::<f64>::zeros(rows);
    for (i, z) in target.iter().enumerate() {
        t[i] = z.re;
        t[target.len() + i] = z.im;
    }
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&t, 1e-13).expect("least-squares solve");
    let residual = (a * &x - t).norm();
    (x, residual)
}

/// Control with `h00 = 0` minimising the Frobenius norm of `M(h)`, plus the
/// minimum value. A (near-)zero residual certifies that the jump derivatives
/// can be generated by a Hermitian mixing of the jumps themselves.
pub fn short_time_control(m: &MarkovianModel) -> (ControlMatrix, f64) {
    let n = m.n_jumps();
    let h0 = ControlMatrix::zero(n);
    let m0 = build_m(m, &h0).expect("zero control always matches the model");
    if n == 0 {
        return (h0, 0.0);
    }
    let coeffs = m_coefficient_stacks(m);
    // Skip the h00 slot: it does not enter M.
    let cols: Vec<CVec> = coeffs[1..].iter().map(vec_row_major).collect();
    let target = -vec_row_major(&m0);
    let (x, residual) = real_lsq(&cols, &target);
    let mut params = vec![0.0];
    params.extend(x.iter().copied());
    (ControlMatrix::from_params(n, &params), residual)
}

/// Decides whether the short-time quadratic coefficient can be cancelled
/// exactly. Returns the verdict and the absolute Frobenius residual; the
/// verdict compares the residual against `tol * |Ldot|_F`.
pub fn short_time_condition(m: &MarkovianModel, tol: f64) -> (bool, f64) {
    let (_, residual) = short_time_control(m);
    let scale = if m.n_jumps() == 0 {
        0.0
    } else {
        frobenius_norm(&vstack(&m.jump_dots))
    };
    (residual <= tol * scale, residual)
}

/// Control minimising the Frobenius norm of `b(h)`, plus the minimum value.
/// A (near-)zero residual certifies `G` lies in the reachable translation
/// space of `b`, i.e. the long-time linear coefficient can be cancelled.
pub fn b_translation_control(m: &MarkovianModel) -> (ControlMatrix, f64) {
    let n = m.n_jumps();
    let g = g_operator(m);
    let cols: Vec<CVec> = b_coefficient_ops(m).iter().map(vec_row_major).collect();
    let target = -vec_row_major(&g);
    let (x, residual) = real_lsq(&cols, &target);
    let params: Vec<f64> = x.iter().copied().collect();
    (ControlMatrix::from_params(n, &params), residual)
}

/// Orthonormalised span of `{1, L_k, L_k†, L_k† L_l}` inside `d x d`
/// matrices, used for the long-time algebraic condition.
#[derive(Debug, Clone)]
pub struct SpanBasis {
    /// Raw generating set, before orthonormalisation.
    pub generators: Vec<CMat>,
    basis: Vec<CVec>,
    dim: usize,
}

impl SpanBasis {
    /// Dimension of the spanned subspace.
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Hilbert-space dimension the span lives in.
    pub fn space_dim(&self) -> usize {
        self.dim
    }

    /// Frobenius-norm distance from `g` to the span.
    pub fn residual(&self, g: &CMat) -> f64 {
        let mut v = vec_row_major(g);
        for b in &self.basis {
            let coeff = b.dotc(&v);
            v -= b * coeff;
        }
        v.norm()
    }
}

/// Builds the jump-operator span `S = span{1, L_k, L_k†, L_k† L_l}`.
pub fn lindblad_span(m: &MarkovianModel) -> SpanBasis {
    let d = m.dim();
    let mut generators = vec![CMat::identity(d, d)];
    for l in &m.jumps {
        generators.push(l.clone());
    }
    for l in &m.jumps {
        generators.push(l.adjoint());
    }
    for lk in &m.jumps {
        for ll in &m.jumps {
            generators.push(lk.adjoint() * ll);
        }
    }

    let cols: Vec<CVec> = generators.iter().map(vec_row_major).collect();
    let mut g = CMat::zeros(d * d, cols.len());
    for (j, col) in cols.iter().enumerate() {
        g.column_mut(j).copy_from(col);
    }
    let svd = g.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, s| a.max(*s));
    let mut basis = Vec::new();
    for (j, s) in svd.singular_values.iter().enumerate() {
        if *s > SPAN_RANK_RTOL * smax {
            basis.push(u.column(j).into_owned());
        }
    }
    SpanBasis {
        generators,
        basis,
        dim: d,
    }
}

/// Tests `g in S` up to `tol * |g|_F`; returns the verdict and the absolute
/// Frobenius residual.
pub fn span_membership(g: &CMat, span: &SpanBasis, tol: f64) -> (bool, f64) {
    let residual = span.residual(g);
    (residual <= tol * frobenius_norm(g), residual)
}

/// A gauge move: a unitary `u` mixing the jump list and a complex shift `v`
/// absorbed into the Hamiltonian.
#[derive(Debug, Clone)]
pub struct GaugeParams {
    pub u: CMat,
    pub v: CVec,
}

/// Max-entry tolerance for accepting `u` as unitary.
pub const UNITARITY_TOL: f64 = 1e-8;

/// Applies the gauge move that leaves the generator invariant:
/// `L'_k = sum_l u_kl (L_l + v_l 1)`, `H' = H - (i/2)(v† Lvec - Lvec† v)`,
/// with derivatives transported the same way (`Ldot' = u Ldot`,
/// `Hdot' = Hdot - (i/2)(v† Ldotvec - Ldotvec† v)`).
pub fn gauge_transform(
    m: &MarkovianModel,
    g: &GaugeParams,
) -> Result<MarkovianModel, AlgebraError> {
    let n = m.n_jumps();
    let d = m.dim();
    if g.u.shape() != (n, n) || g.v.len() != n {
        return Err(AlgebraError::DimensionMismatch(format!(
            "gauge parameters must be {n}x{n} and length {n}"
        )));
    }
    let defect = max_abs(&(g.u.adjoint() * &g.u - CMat::identity(n, n)));
    if defect > UNITARITY_TOL {
        return Err(AlgebraError::NonUnitary { defect });
    }

    let id = CMat::identity(d, d);
    let mix = |ops: &[CMat], shift: bool| -> Vec<CMat> {
        (0..n)
            .map(|k| {
                let mut out = CMat::zeros(d, d);
                for (l, op) in ops.iter().enumerate() {
                    let base = if shift { op + &id * g.v[l] } else { op.clone() };
                    out += base * g.u[(k, l)];
                }
                out
            })
            .collect()
    };
    let shift_h = |h: &CMat, ops: &[CMat]| -> CMat {
        // H + (1/2i)(v† Lvec - Lvec† v), with (1/2i) = -i/2.
        let mut out = h.clone();
        for (k, l) in ops.iter().enumerate() {
            out += (l * g.v[k].conj() - l.adjoint() * g.v[k]) * c(0.0, -0.5);
        }
        out
    };

    Ok(MarkovianModel {
        hamiltonian: shift_h(&m.hamiltonian, &m.jumps),
        hamiltonian_dot: shift_h(&m.hamiltonian_dot, &m.jump_dots),
        jumps: mix(&m.jumps, true),
        jump_dots: mix(&m.jump_dots, false),
        label: m.label.clone(),
    })
}

/// Jump-frame decomposition `Ldot_k = sum_l C_kl L_l + c_k 1` split into
/// Hermitian parts: `C = h1 - i h2`, `hvec = i c`.
#[derive(Debug, Clone)]
pub struct CanonicalDecomposition {
    pub h1: CMat,
    pub h2: CMat,
    pub hvec: CVec,
    /// Frobenius residual of the frame fit (0 when `Ldot` lies in the frame).
    pub residual: f64,
}

/// Minimum-norm frame fit of the jump derivatives.
///
/// Fails with [`AlgebraError::NotInSpan`] when the residual exceeds
/// `tol * |Ldot|_F`.
pub fn canonical_decomposition(
    m: &MarkovianModel,
    tol: f64,
) -> Result<CanonicalDecomposition, AlgebraError> {
    let d = m.dim();
    let n = m.n_jumps();
    if n == 0 {
        return Ok(CanonicalDecomposition {
            h1: CMat::zeros(0, 0),
            h2: CMat::zeros(0, 0),
            hvec: CVec::zeros(0),
            residual: 0.0,
        });
    }

    // Complex least squares: unknowns C (n^2) then c (n).
    let rows = n * d * d;
    let id = CMat::identity(d, d);
    let mut a = CMat::zeros(rows, n * n + n);
    for k in 0..n {
        for l in 0..n {
            let col = vec_row_major(&m.jumps[l]);
            a.view_mut((k * d * d, k * n + l), (d * d, 1)).copy_from(&col);
        }
        let col = vec_row_major(&id);
        a.view_mut((k * d * d, n * n + k), (d * d, 1)).copy_from(&col);
    }
    let target = vec_row_major(&vstack(&m.jump_dots));
    let scale = target.norm();
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&target, 1e-13).expect("least-squares solve");
    let residual = (a * &x - &target).norm();
    if residual > tol * scale {
        return Err(AlgebraError::NotInSpan { residual });
    }

    let cmat = CMat::from_fn(n, n, |k, l| x[k * n + l]);
    let cvec = CVec::from_fn(n, |k, _| x[n * n + k]);
    let h1 = (&cmat + cmat.adjoint()).scale(0.5);
    let h2 = (&cmat - cmat.adjoint()) * c(0.0, 0.5);
    let hvec = cvec.map(|z| z * c(0.0, 1.0));
    Ok(CanonicalDecomposition {
        h1,
        h2,
        hvec,
        residual,
    })
}

/// Rewrites the derivatives in canonical form: keeps only the Hermitian
/// mixing part `Ldot'_k = sum_l (h1)_kl L_l` and absorbs the identity shift
/// into `Hdot' = Hdot - (1/2)(hvec† Lvec + Lvec† hvec)`. The generator
/// derivative is unchanged by this rewrite.
pub fn canonicalize(m: &MarkovianModel, tol: f64) -> Result<MarkovianModel, AlgebraError> {
    let dec = canonical_decomposition(m, tol)?;
    let d = m.dim();
    let n = m.n_jumps();
    let jump_dots: Vec<CMat> = (0..n)
        .map(|k| {
            let mut out = CMat::zeros(d, d);
            for l in 0..n {
                out += &m.jumps[l] * dec.h1[(k, l)];
            }
            out
        })
        .collect();
    let mut hdot = m.hamiltonian_dot.clone();
    for k in 0..n {
        hdot -= (&m.jumps[k] * dec.hvec[k].conj() + m.jumps[k].adjoint() * dec.hvec[k]).scale(0.5);
    }
    Ok(MarkovianModel {
        hamiltonian: m.hamiltonian.clone(),
        hamiltonian_dot: hdot,
        jumps: m.jumps.clone(),
        jump_dots,
        label: m.label.clone(),
    })
}
