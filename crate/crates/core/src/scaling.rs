//! Scaling constants `(a_minus, b_minus, a_plus, b_plus)`, the class they
//! imply, transition times, and the trade-off curve between the two norms.

use std::fmt;
use std::io::Write;

use thiserror::Error;

use crate::algebra::{
    b_translation_control, build_a_op, build_b_op, g_operator, op_norm, short_time_control,
    ControlMatrix, DEFAULT_RESIDUAL_TOL,
};
use crate::mat::{frobenius_norm, hermitian_eigenvalues, vstack};
use crate::model::MarkovianModel;
use crate::sdp::{
    a_corner_control, b_corner_control, min_a_given_b, min_a_unconstrained, min_b_given_a,
    min_b_unconstrained, NormOpt, SdpError, SolveStatus, SolverConfig,
};

/// Default threshold below which an optimised norm is declared exactly zero.
pub const DEFAULT_EPS_ZERO: f64 = 1e-6;

/// Relative slack applied to a floor value when it becomes a cap.
pub const CAP_REL_SLACK: f64 = 1e-6;

/// Absolute slack applied to a cap, in units of the model's natural scale.
pub const CAP_ABS_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// The four constants governing the optimal-control bound: unconstrained
/// minima `a_minus`, `b_minus` and cross-capped minima `a_plus`, `b_plus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingConstants {
    pub a_minus: f64,
    pub b_minus: f64,
    pub a_plus: f64,
    pub b_plus: f64,
}

/// Time-scaling class: short-time behaviour is quadratic iff `a_minus = 0`,
/// long-time behaviour is linear iff `b_minus = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingClass {
    /// `t^2` at short times, `t` at long times.
    QuadraticLinear,
    /// `t^2` at both ends.
    QuadraticQuadratic,
    /// `t` at both ends.
    LinearLinear,
    /// `t` at short times, `t^2` at long times.
    LinearQuadratic,
    /// All four constants vanish; the bound is identically zero.
    Uninformative,
}

impl fmt::Display for ScalingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScalingClass::QuadraticLinear => "quadratic-linear",
            ScalingClass::QuadraticQuadratic => "quadratic-quadratic",
            ScalingClass::LinearLinear => "linear-linear",
            ScalingClass::LinearQuadratic => "linear-quadratic",
            ScalingClass::Uninformative => "uninformative",
        };
        f.write_str(s)
    }
}

/// Classifies by thresholding the two unconstrained minima at `eps_zero`.
pub fn classify(c: &ScalingConstants, eps_zero: f64) -> ScalingClass {
    let a0 = c.a_minus.abs() <= eps_zero;
    let b0 = c.b_minus.abs() <= eps_zero;
    let informative = c.a_plus.abs() > eps_zero || c.b_plus.abs() > eps_zero;
    if !informative {
        return ScalingClass::Uninformative;
    }
    match (a0, b0) {
        (true, true) => ScalingClass::QuadraticLinear,
        (true, false) => ScalingClass::QuadraticQuadratic,
        (false, true) => ScalingClass::LinearLinear,
        (false, false) => ScalingClass::LinearQuadratic,
    }
}

/// Crossover times between the short- and long-time asymptotes. A time is
/// `None` when its denominator constant sits below `eps_zero`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransitionTimes {
    /// Single crossover (quadratic-linear class).
    Single { tau: Option<f64> },
    /// Intermediate window `[tau_minus, tau_plus]`.
    Window {
        tau_minus: Option<f64>,
        tau_plus: Option<f64>,
    },
    /// No transition structure (uninformative class).
    NotApplicable,
}

/// Computes the crossover times for a classified model.
pub fn transition_times(
    c: &ScalingConstants,
    class: ScalingClass,
    eps_zero: f64,
) -> TransitionTimes {
    let over = |num: f64, den: f64| -> Option<f64> {
        (den > eps_zero).then(|| num / (den * den))
    };
    match class {
        ScalingClass::QuadraticLinear => TransitionTimes::Single {
            tau: over(c.a_plus, c.b_plus),
        },
        ScalingClass::QuadraticQuadratic => TransitionTimes::Window {
            tau_minus: over(c.a_plus, c.b_plus),
            tau_plus: over(c.a_plus, c.b_minus),
        },
        ScalingClass::LinearLinear => TransitionTimes::Window {
            tau_minus: over(c.a_minus, c.b_plus),
            tau_plus: over(c.a_plus, c.b_plus),
        },
        ScalingClass::LinearQuadratic => TransitionTimes::Window {
            tau_minus: over(c.a_minus, c.b_plus),
            tau_plus: over(c.a_plus, c.b_minus),
        },
        ScalingClass::Uninformative => TransitionTimes::NotApplicable,
    }
}

/// Output of [`compute_constants`]: claimed optima, the controls that
/// certify them, and the norms those controls actually achieve.
#[derive(Debug, Clone)]
pub struct ConstantsReport {
    pub constants: ScalingConstants,
    /// Norms recomputed from the certificate controls.
    pub achieved: ScalingConstants,
    pub h_a_minus: ControlMatrix,
    pub h_b_minus: ControlMatrix,
    pub h_a_plus: ControlMatrix,
    pub h_b_plus: ControlMatrix,
    /// False when any of the four solves stopped before optimality.
    pub all_optimal: bool,
}

/// Reference units for the two norms, `(unit_a, unit_b)`.
///
/// Built only from gauge-invariant quantities: `|a(0)| = |stack(i Ldot)|^2`
/// is invariant under every gauge transformation, and `|G|` is invariant
/// precisely when the jump derivatives vanish, which is the only case where
/// it is used. Both scale as expected under rescaling of the derivatives
/// (`unit_a` by `s^2`, `unit_b` by `s`), so caps built in these units keep
/// the constants exactly gauge-invariant and scale-covariant.
fn cap_units(m: &MarkovianModel) -> (f64, f64) {
    let zero = ControlMatrix::zero(m.n_jumps());
    let a0 = op_norm(&build_a_op(m, &zero).expect("zero control fits"));
    let s_ref = if a0 > 0.0 {
        a0
    } else {
        let g = op_norm(&g_operator(m));
        g * g
    };
    if s_ref > 0.0 {
        (s_ref, s_ref.sqrt())
    } else {
        (1.0, 1.0)
    }
}

/// Rounds to six significant digits.
fn quantize(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let mag = 10f64.powi(r.log10().floor() as i32 - 5);
    (r / mag).round() * mag
}

/// Cap for the cross-constrained solves. The floor/unit ratio is quantised
/// so that solver noise in the floor cannot leak into the cap: the capped
/// optima inherit the exact gauge and scaling symmetries of the model
/// instead of picking up amplified O(sqrt(noise)) jitter.
fn cap_from(floor: f64, unit: f64) -> f64 {
    quantize(floor.max(0.0) / unit) * unit * (1.0 + CAP_REL_SLACK) + CAP_ABS_SLACK * unit
}

/// Plain cap for trade-off curve grid points (no quantisation: grid caps are
/// never compared across gauges and must vary smoothly along the grid).
fn grid_cap(b: f64, unit: f64) -> f64 {
    b.max(0.0) * (1.0 + CAP_REL_SLACK) + CAP_ABS_SLACK * unit
}

struct Pinned {
    value: f64,
    achieved: f64,
    h: ControlMatrix,
    optimal: bool,
}

/// Replaces a near-zero solver optimum by an exact zero when an algebraic
/// certificate confirms it, keeping the certificate control.
fn pin(
    opt: NormOpt,
    eps_zero: f64,
    algebraic: Option<(&ControlMatrix, f64)>,
    recompute: impl Fn(&ControlMatrix) -> f64,
) -> Pinned {
    let optimal = opt.solution.status == SolveStatus::Optimal;
    if let Some((h_exact, achieved_exact)) = algebraic {
        // The certificate control is feasible, so the true minimum cannot
        // exceed the norm it achieves; the solver's claim is irrelevant.
        if achieved_exact <= eps_zero {
            return Pinned {
                value: 0.0,
                achieved: achieved_exact,
                h: h_exact.clone(),
                optimal: true,
            };
        }
    }
    Pinned {
        value: opt.value,
        achieved: recompute(&opt.h),
        h: opt.h,
        optimal,
    }
}

/// Computes all four scaling constants with certificate controls.
///
/// Minima certified as exactly zero by the algebraic conditions (derivative
/// cancellation for `a`, span membership for `b`) are pinned to zero so the
/// downstream caps and the integrated bound stay exact. Models without jump
/// operators are solved in closed form.
pub fn compute_constants(
    m: &MarkovianModel,
    eps_zero: f64,
    cfg: &SolverConfig,
) -> Result<ConstantsReport, ScalingError> {
    let n = m.n_jumps();

    if n == 0 {
        // a(h) vanishes identically; b(h) = G + h00 with exact optimum at
        // the spectral midpoint.
        let ev = hermitian_eigenvalues(&g_operator(m));
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        let mut h_b = ControlMatrix::zero(0);
        h_b.h00 = -0.5 * (hi + lo);
        let b = 0.5 * (hi - lo);
        let achieved_b = op_norm(&build_b_op(m, &h_b).expect("zero-jump control"));
        let h_a = ControlMatrix::zero(0);
        let constants = ScalingConstants {
            a_minus: 0.0,
            b_minus: b,
            a_plus: 0.0,
            b_plus: b,
        };
        return Ok(ConstantsReport {
            constants,
            achieved: ScalingConstants {
                a_minus: 0.0,
                b_minus: achieved_b,
                a_plus: 0.0,
                b_plus: achieved_b,
            },
            h_a_minus: h_a.clone(),
            h_b_minus: h_b.clone(),
            h_a_plus: h_a,
            h_b_plus: h_b,
            all_optimal: true,
        });
    }

    let norm_a = |h: &ControlMatrix| op_norm(&build_a_op(m, h).expect("control fits model"));
    let norm_b = |h: &ControlMatrix| op_norm(&build_b_op(m, h).expect("control fits model"));

    // Algebraic zero certificates, when they exist.
    let (h_a_star, r_a) = short_time_control(m);
    let (h_b_star, r_b) = b_translation_control(m);
    let ldot_scale = frobenius_norm(&vstack(&m.jump_dots));
    let g_scale = frobenius_norm(&g_operator(m));
    let a_zero_certified = r_a <= DEFAULT_RESIDUAL_TOL * ldot_scale;
    let b_zero_certified = r_b <= DEFAULT_RESIDUAL_TOL * g_scale;

    let a_min = pin(
        min_a_unconstrained(m, Some(&h_a_star), cfg)?,
        eps_zero,
        a_zero_certified.then(|| (&h_a_star, norm_a(&h_a_star))),
        norm_a,
    );
    let b_min = pin(
        min_b_unconstrained(m, Some(&h_b_star), cfg)?,
        eps_zero,
        b_zero_certified.then(|| (&h_b_star, norm_b(&h_b_star))),
        norm_b,
    );

    let (unit_a, unit_b) = cap_units(m);
    let a_cap = cap_from(a_min.value, unit_a);
    let b_cap = cap_from(b_min.value, unit_b);

    // The a-certificate also certifies a_plus = 0 when it meets the b cap
    // (and symmetrically for b_plus).
    let a_plus_cert = (a_zero_certified && norm_b(&h_a_star) <= b_cap)
        .then(|| (&h_a_star, norm_a(&h_a_star)));
    let b_plus_cert = (b_zero_certified && norm_a(&h_b_star) <= a_cap)
        .then(|| (&h_b_star, norm_b(&h_b_star)));

    // The capped feasible sets are thin shells around the bound norm's
    // argmin valley, so warm starts must sit at the right end of that
    // valley; the corner solves find it, with the plain minimisers as a
    // fallback.
    let warm_a_plus =
        b_corner_control(m, Some(&b_min.h), cfg).unwrap_or_else(|_| b_min.h.clone());
    let warm_b_plus =
        a_corner_control(m, Some(&a_min.h), cfg).unwrap_or_else(|_| a_min.h.clone());

    let a_plus = pin(
        min_a_given_b(m, b_cap, Some(&warm_a_plus), cfg)?,
        eps_zero,
        a_plus_cert,
        norm_a,
    );
    let b_plus = pin(
        min_b_given_a(m, a_cap, Some(&warm_b_plus), cfg)?,
        eps_zero,
        b_plus_cert,
        norm_b,
    );

    // The capped optimum can undercut the unconstrained one only by solver
    // noise; clamp, but never let a clamp hide a failed (NaN) solve.
    let clamp = |plus: f64, minus: f64| {
        if plus.is_finite() && minus.is_finite() {
            plus.max(minus)
        } else {
            plus
        }
    };
    let constants = ScalingConstants {
        a_minus: a_min.value,
        b_minus: b_min.value,
        a_plus: clamp(a_plus.value, a_min.value),
        b_plus: clamp(b_plus.value, b_min.value),
    };
    Ok(ConstantsReport {
        constants,
        achieved: ScalingConstants {
            a_minus: a_min.achieved,
            b_minus: b_min.achieved,
            a_plus: a_plus.achieved,
            b_plus: b_plus.achieved,
        },
        h_a_minus: a_min.h,
        h_b_minus: b_min.h,
        h_a_plus: a_plus.h,
        h_b_plus: b_plus.h,
        all_optimal: a_min.optimal && b_min.optimal && a_plus.optimal && b_plus.optimal,
    })
}

/// One point of the trade-off curve: the minimum of `a` under `|b| <= b_cap`.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub b_cap: f64,
    /// Claimed minimum of `a` at this cap.
    pub a: f64,
    /// Norms achieved by the certificate control.
    pub b_achieved: f64,
    pub a_achieved: f64,
    pub h: ControlMatrix,
    pub status: SolveStatus,
}

/// Monotone trade-off curve from `(b_minus, a_plus)` to `(b_plus, a_minus)`.
#[derive(Debug, Clone)]
pub struct ABCurve {
    pub points: Vec<CurvePoint>,
}

impl ABCurve {
    /// Achieved `(b, a)` pairs of the successfully solved points.
    pub fn achieved_pairs(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.status == SolveStatus::Optimal)
            .map(|p| (p.b_achieved, p.a_achieved))
            .collect()
    }
}

/// Computes the trade-off curve on a `points`-sized linear cap grid.
///
/// Solver failures are recorded per point (`status`), not propagated; a
/// degenerate range `b_minus = b_plus` collapses to a single point.
pub fn ab_curve(
    m: &MarkovianModel,
    points: usize,
    eps_zero: f64,
    cfg: &SolverConfig,
) -> Result<ABCurve, ScalingError> {
    let report = compute_constants(m, eps_zero, cfg)?;
    ab_curve_from(m, &report, points, cfg)
}

/// Same as [`ab_curve`] but reusing an existing constants report.
pub fn ab_curve_from(
    m: &MarkovianModel,
    report: &ConstantsReport,
    points: usize,
    cfg: &SolverConfig,
) -> Result<ABCurve, ScalingError> {
    if points < 2 {
        return Err(ScalingError::Invalid(format!(
            "curve needs at least 2 points, got {points}"
        )));
    }
    let c = &report.constants;
    let norm_a = |h: &ControlMatrix| op_norm(&build_a_op(m, h).expect("control fits model"));
    let norm_b = |h: &ControlMatrix| op_norm(&build_b_op(m, h).expect("control fits model"));

    let (_, unit_b) = cap_units(m);
    let width = c.b_plus - c.b_minus;
    if width <= 1e-12 * unit_b {
        // Degenerate range: the b_plus certificate is the whole curve.
        let h = report.h_b_plus.clone();
        let point = CurvePoint {
            b_cap: grid_cap(c.b_plus, unit_b),
            a: report.constants.a_plus,
            b_achieved: norm_b(&h),
            a_achieved: norm_a(&h),
            h,
            status: SolveStatus::Optimal,
        };
        return Ok(ABCurve {
            points: vec![point],
        });
    }

    let mut out = Vec::with_capacity(points);
    let mut warm = report.h_b_minus.clone();
    for i in 0..points {
        let b_i = c.b_minus + width * (i as f64) / ((points - 1) as f64);
        let cap = grid_cap(b_i, unit_b);
        match min_a_given_b(m, cap, Some(&warm), cfg) {
            Ok(opt) => {
                let status = opt.solution.status;
                if status == SolveStatus::Optimal {
                    warm = opt.h.clone();
                }
                out.push(CurvePoint {
                    b_cap: cap,
                    a: opt.value,
                    b_achieved: norm_b(&opt.h),
                    a_achieved: norm_a(&opt.h),
                    h: opt.h,
                    status,
                });
            }
            Err(SdpError::InfeasibleCap { .. }) => {
                out.push(CurvePoint {
                    b_cap: cap,
                    a: f64::NAN,
                    b_achieved: f64::NAN,
                    a_achieved: f64::NAN,
                    h: ControlMatrix::zero(m.n_jumps()),
                    status: SolveStatus::Infeasible,
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(ABCurve { points: out })
}

/// Writes the achieved curve as CSV with header `b,a`.
pub fn write_curve_csv<W: Write>(curve: &ABCurve, mut w: W) -> std::io::Result<()> {
    writeln!(w, "b,a")?;
    for (b, a) in curve.achieved_pairs() {
        writeln!(w, "{b:.12e},{a:.12e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, BuiltinModelId, ROTATED_DEPHASING_ANGLE};
    use crate::mat::CMat;

    const EPS: f64 = DEFAULT_EPS_ZERO;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn constants_for(id: BuiltinModelId) -> ConstantsReport {
        let m = builtin_model(id, 1.0, 0.4).unwrap();
        compute_constants(&m, EPS, &cfg()).unwrap()
    }

    #[test]
    fn parallel_dephasing_constants() {
        let r = constants_for(BuiltinModelId::ParallelDephasing);
        assert!(r.all_optimal);
        let c = r.constants;
        assert_eq!(c.a_minus, 0.0); // certified algebraically, pinned exact
        assert_eq!(c.b_minus, 0.0);
        assert!((c.a_plus - 1.25).abs() < 2e-3, "a_plus {}", c.a_plus);
        assert!((c.b_plus - 1.0).abs() < 2e-3, "b_plus {}", c.b_plus);
    }

    #[test]
    fn rotated_dephasing_constants() {
        let r = constants_for(BuiltinModelId::RotatedDephasing);
        let c = r.constants;
        let theta = ROTATED_DEPHASING_ANGLE;
        assert_eq!(c.a_minus, 0.0);
        assert!((c.b_minus - theta.sin()).abs() < 2e-3, "b_minus {}", c.b_minus);
        assert!(
            (c.a_plus - 1.25 * theta.cos() * theta.cos()).abs() < 2e-3,
            "a_plus {}",
            c.a_plus
        );
        assert!((c.b_plus - 1.0).abs() < 2e-3, "b_plus {}", c.b_plus);
    }

    #[test]
    fn strength_dephasing_constants() {
        let r = constants_for(BuiltinModelId::StrengthDephasing);
        let c = r.constants;
        assert!((c.a_minus - 0.2).abs() < 2e-3, "a_minus {}", c.a_minus);
        assert_eq!(c.b_minus, 0.0);
        assert!((c.a_plus - 1.45).abs() < 2e-3, "a_plus {}", c.a_plus);
        assert!((c.b_plus - 1.0).abs() < 2e-3, "b_plus {}", c.b_plus);
    }

    #[test]
    fn direction_dephasing_constants() {
        let r = constants_for(BuiltinModelId::DirectionDephasing);
        let c = r.constants;
        assert!((c.a_minus - 0.2).abs() < 2e-3, "a_minus {}", c.a_minus);
        assert!((c.b_minus - 0.2).abs() < 2e-3, "b_minus {}", c.b_minus);
        assert!((c.a_plus - 1.45).abs() < 2e-3, "a_plus {}", c.a_plus);
        assert!(
            (c.b_plus - 1.04f64.sqrt()).abs() < 2e-3,
            "b_plus {}",
            c.b_plus
        );
    }

    #[test]
    fn noiseless_constants_are_exact() {
        let r = constants_for(BuiltinModelId::Noiseless);
        let c = r.constants;
        assert_eq!(c.a_minus, 0.0);
        assert_eq!(c.a_plus, 0.0);
        assert!((c.b_minus - 1.0).abs() < 1e-12);
        assert!((c.b_plus - 1.0).abs() < 1e-12);
        assert!(r.all_optimal);
    }

    #[test]
    fn uninformative_constants_vanish_exactly() {
        let mut m = builtin_model(BuiltinModelId::ParallelDephasing, 1.0, 0.4).unwrap();
        m.hamiltonian_dot = CMat::zeros(2, 2);
        let r = compute_constants(&m, EPS, &cfg()).unwrap();
        let c = r.constants;
        assert_eq!((c.a_minus, c.b_minus, c.a_plus, c.b_plus), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(classify(&c, EPS), ScalingClass::Uninformative);
        assert!(r.achieved.a_plus < 1e-12);
        assert!(r.achieved.b_plus < 1e-12);
    }

    #[test]
    fn classes_of_builtins() {
        let class_of = |id| classify(&constants_for(id).constants, EPS);
        assert_eq!(
            class_of(BuiltinModelId::ParallelDephasing),
            ScalingClass::QuadraticLinear
        );
        assert_eq!(
            class_of(BuiltinModelId::RotatedDephasing),
            ScalingClass::QuadraticQuadratic
        );
        assert_eq!(
            class_of(BuiltinModelId::StrengthDephasing),
            ScalingClass::LinearLinear
        );
        assert_eq!(
            class_of(BuiltinModelId::DirectionDephasing),
            ScalingClass::LinearQuadratic
        );
        assert_eq!(class_of(BuiltinModelId::Noiseless), ScalingClass::QuadraticQuadratic);
    }

    #[test]
    fn transition_times_of_builtins() {
        let times = |id| {
            let c = constants_for(id).constants;
            transition_times(&c, classify(&c, EPS), EPS)
        };

        match times(BuiltinModelId::ParallelDephasing) {
            TransitionTimes::Single { tau: Some(tau) } => {
                assert!((tau - 1.25).abs() < 5e-3, "tau {tau}")
            }
            other => panic!("expected single crossover, got {other:?}"),
        }
        match times(BuiltinModelId::RotatedDephasing) {
            TransitionTimes::Window {
                tau_minus: Some(lo),
                tau_plus: Some(hi),
            } => {
                let theta = ROTATED_DEPHASING_ANGLE;
                let a_plus = 1.25 * theta.cos() * theta.cos();
                assert!((lo - a_plus).abs() < 5e-3, "tau_minus {lo}");
                assert!((hi - a_plus / (theta.sin() * theta.sin())).abs() < 0.2, "tau_plus {hi}");
            }
            other => panic!("expected window, got {other:?}"),
        }
        match times(BuiltinModelId::StrengthDephasing) {
            TransitionTimes::Window {
                tau_minus: Some(lo),
                tau_plus: Some(hi),
            } => {
                assert!((lo - 0.2).abs() < 5e-3, "tau_minus {lo}");
                assert!((hi - 1.45).abs() < 5e-3, "tau_plus {hi}");
            }
            other => panic!("expected window, got {other:?}"),
        }
        match times(BuiltinModelId::DirectionDephasing) {
            TransitionTimes::Window {
                tau_minus: Some(lo),
                tau_plus: Some(hi),
            } => {
                assert!((lo - 0.2 / 1.04).abs() < 5e-3, "tau_minus {lo}");
                assert!((hi - 36.25).abs() < 0.3, "tau_plus {hi}");
            }
            other => panic!("expected window, got {other:?}"),
        }
    }

    #[test]
    fn curve_is_monotone_and_spans_expected_range() {
        let m = builtin_model(BuiltinModelId::ParallelDephasing, 1.0, 0.4).unwrap();
        let curve = ab_curve(&m, 9, EPS, &cfg()).unwrap();
        assert_eq!(curve.points.len(), 9);
        let pairs = curve.achieved_pairs();
        assert_eq!(pairs.len(), 9);
        // a decreases along the grid, ends near (1, 0).
        for w in pairs.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-7, "not monotone: {w:?}");
        }
        assert!((pairs[0].1 - 1.25).abs() < 2e-3);
        assert!(pairs[8].1.abs() < 1e-6);
        assert!((pairs[8].0 - 1.0).abs() < 2e-3);
    }

    #[test]
    fn degenerate_curve_collapses_to_one_point() {
        let m = builtin_model(BuiltinModelId::Noiseless, 1.0, 0.4).unwrap();
        let curve = ab_curve(&m, 50, EPS, &cfg()).unwrap();
        assert_eq!(curve.points.len(), 1);
        let (b, a) = curve.achieved_pairs()[0];
        assert!((b - 1.0).abs() < 1e-12);
        assert!(a.abs() < 1e-12);
    }

    #[test]
    fn curve_rejects_fewer_than_two_points() {
        let m = builtin_model(BuiltinModelId::ParallelDephasing, 1.0, 0.4).unwrap();
        assert!(matches!(
            ab_curve(&m, 1, EPS, &cfg()),
            Err(ScalingError::Invalid(_))
        ));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let m = builtin_model(BuiltinModelId::ParallelDephasing, 1.0, 0.4).unwrap();
        let curve = ab_curve(&m, 3, EPS, &cfg()).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&curve, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "b,a");
        assert_eq!(lines.len(), 4);
    }
}
