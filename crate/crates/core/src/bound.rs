//! Time-domain bound F(t) obtained by integrating the growth inequality
//! over the trade-off curve, plus analytic reference curves and asymptotes.

use std::io::Write;

use thiserror::Error;

use crate::scaling::{ABCurve, ScalingClass, ScalingConstants};

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// How finely each interval between output samples is subdivided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    /// `steps` integration steps per decade, spread evenly over the sample
    /// intervals of that decade.
    PerDecade { steps: usize },
    /// Fixed step length; intervals use `ceil(len / dt)` uniform steps.
    Fixed { dt: f64 },
}

/// Sampling and stepping plan for [`integrate_bound`].
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub t_max: f64,
    pub policy: StepPolicy,
    /// Number of decades below `t_max` covered by the output grid.
    pub decades: u32,
    pub samples_per_decade: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            t_max: 1e4,
            policy: StepPolicy::PerDecade { steps: 10_000 },
            decades: 7,
            samples_per_decade: 20,
        }
    }
}

/// Bound values on a logarithmic time grid.
#[derive(Debug, Clone)]
pub struct BoundTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl BoundTrace {
    /// Interpolated value at `t` (log-log linear between samples).
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if self.times.is_empty() || t < self.times[0] || t > *self.times.last().unwrap() {
            return None;
        }
        let i = match self
            .times
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(i) => return Some(self.values[i]),
            Err(i) => i,
        };
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (f0, f1) = (self.values[i - 1], self.values[i]);
        if f0 <= 0.0 || f1 <= 0.0 {
            let w = (t - t0) / (t1 - t0);
            return Some(f0 + w * (f1 - f0));
        }
        let w = (t.ln() - t0.ln()) / (t1.ln() - t0.ln());
        Some((f0.ln() + w * (f1.ln() - f0.ln())).exp())
    }
}

fn sample_grid(cfg: &IntegratorConfig) -> Vec<f64> {
    let n = cfg.decades as usize * cfg.samples_per_decade;
    let ln_min = cfg.t_max.ln() - (cfg.decades as f64) * std::f64::consts::LN_10;
    let step = std::f64::consts::LN_10 / cfg.samples_per_decade as f64;
    let mut times: Vec<f64> = (0..=n).map(|i| (ln_min + i as f64 * step).exp()).collect();
    *times.last_mut().unwrap() = cfg.t_max;
    times
}

/// One step of the discrete growth recursion: the tightest admissible
/// increment of F over `dt` given the achievable `(b, a)` pairs.
fn step_increment(pairs: &[(f64, f64)], f: f64, dt: f64) -> f64 {
    let mut best = f64::INFINITY;
    for &(b, a) in pairs {
        let inc = a * dt
            + 2.0 * b * b * dt * dt
            + b * dt * (f + 4.0 * a * dt + 4.0 * b * b * dt * dt).sqrt();
        if inc < best {
            best = inc;
        }
    }
    4.0 * best
}

/// Integrates the growth inequality over the curve's achieved pairs.
///
/// Any finite step size yields a valid upper bound, and refining a step grid
/// (splitting steps in two) never loosens it. Curves that are exactly pure
/// quadratic (all `a = 0`) or pure linear (all `b = 0`) integrate in closed
/// form, bypassing discretisation error entirely.
pub fn integrate_bound(curve: &ABCurve, cfg: &IntegratorConfig) -> Result<BoundTrace, BoundError> {
    // `is_nan` keeps the guard NaN-rejecting.
    if cfg.t_max <= 0.0 || cfg.t_max.is_nan() {
        return Err(BoundError::Invalid(format!("t_max must be positive, got {}", cfg.t_max)));
    }
    if cfg.decades == 0 || cfg.samples_per_decade == 0 {
        return Err(BoundError::Invalid(
            "decades and samples_per_decade must be positive".into(),
        ));
    }
    match cfg.policy {
        StepPolicy::PerDecade { steps: 0 } => {
            return Err(BoundError::Invalid("steps per decade must be positive".into()))
        }
        StepPolicy::Fixed { dt } if dt <= 0.0 || dt.is_nan() => {
            return Err(BoundError::Invalid(format!("dt must be positive, got {dt}")))
        }
        _ => {}
    }
    let pairs = curve.achieved_pairs();
    if pairs.is_empty() {
        return Err(BoundError::Invalid("curve has no successfully solved points".into()));
    }
    if pairs.iter().any(|&(b, a)| !b.is_finite() || !a.is_finite() || b < 0.0 || a < 0.0) {
        return Err(BoundError::Invalid("curve contains non-finite or negative norms".into()));
    }

    let times = sample_grid(cfg);

    if pairs.iter().all(|&(_, a)| a == 0.0) {
        let b = pairs.iter().map(|&(b, _)| b).fold(f64::INFINITY, f64::min);
        let values = times.iter().map(|&t| 4.0 * b * b * t * t).collect();
        return Ok(BoundTrace { times, values });
    }
    if pairs.iter().all(|&(b, _)| b == 0.0) {
        let a = pairs.iter().map(|&(_, a)| a).fold(f64::INFINITY, f64::min);
        let values = times.iter().map(|&t| 4.0 * a * t).collect();
        return Ok(BoundTrace { times, values });
    }

    let substeps = |t0: f64, t1: f64| -> usize {
        match cfg.policy {
            StepPolicy::PerDecade { steps } => steps.div_ceil(cfg.samples_per_decade).max(1),
            StepPolicy::Fixed { dt } => ((t1 - t0) / dt).ceil().max(1.0) as usize,
        }
    };

    let mut values = Vec::with_capacity(times.len());
    let mut f = 0.0_f64;
    let mut t_prev = 0.0_f64;
    for &t in &times {
        let k = substeps(t_prev, t);
        let dt = (t - t_prev) / k as f64;
        for _ in 0..k {
            f += step_increment(&pairs, f, dt);
        }
        values.push(f);
        t_prev = t;
    }
    Ok(BoundTrace { times, values })
}

/// Closed-form bound from a single achievable pair: `4 (b t + sqrt(a t))^2`.
pub fn analytic_generic_bound(b: f64, a: f64, t: f64) -> f64 {
    let s = b * t + (a * t).sqrt();
    4.0 * s * s
}

/// Piecewise bound for the quadratic-linear class: quadratic saturation up
/// to `t_c = 2 a_plus ln2 / b_plus^2`, then linear growth at rate `4 a_plus`.
pub fn analytic_ql_bound(c: &ScalingConstants, t: f64) -> f64 {
    let (a, b) = (c.a_plus, c.b_plus);
    if a <= 0.0 {
        return 4.0 * b * b * t * t;
    }
    if b <= 0.0 {
        return 4.0 * a * t;
    }
    let t_c = 2.0 * a * std::f64::consts::LN_2 / (b * b);
    if t <= t_c {
        let u = 1.0 - (2.0_f64).powf(-t / t_c);
        16.0 * a * a / (b * b) * u * u
    } else {
        4.0 * a * (t - t_c) + 4.0 * (a / b) * (a / b)
    }
}

/// Power-law asymptote `coefficient * t^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptote {
    pub coefficient: f64,
    pub power: i32,
}

impl Asymptote {
    pub fn eval(&self, t: f64) -> f64 {
        self.coefficient * t.powi(self.power)
    }
}

/// Short- and long-time asymptotes implied by the constants; `None` for the
/// uninformative class.
pub fn asymptotes(c: &ScalingConstants, class: ScalingClass) -> Option<(Asymptote, Asymptote)> {
    let quad = |b: f64| Asymptote {
        coefficient: 4.0 * b * b,
        power: 2,
    };
    let lin = |a: f64| Asymptote {
        coefficient: 4.0 * a,
        power: 1,
    };
    match class {
        ScalingClass::QuadraticLinear => Some((quad(c.b_plus), lin(c.a_plus))),
        ScalingClass::QuadraticQuadratic => Some((quad(c.b_plus), quad(c.b_minus))),
        ScalingClass::LinearLinear => Some((lin(c.a_minus), lin(c.a_plus))),
        ScalingClass::LinearQuadratic => Some((lin(c.a_minus), quad(c.b_minus))),
        ScalingClass::Uninformative => None,
    }
}

/// Least-squares slope of `ln F` against `ln t` over samples in
/// `[t_lo, t_hi]`; `None` with fewer than two usable samples.
pub fn slope_fit(trace: &BoundTrace, t_lo: f64, t_hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&trace.values)
        .filter(|&(&t, &f)| t >= t_lo && t <= t_hi && f > 0.0)
        .map(|(&t, &f)| (t.ln(), f.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Writes the trace as CSV with header `t,F`.
pub fn write_trace_csv<W: Write>(trace: &BoundTrace, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,F")?;
    for (t, f) in trace.times.iter().zip(&trace.values) {
        writeln!(w, "{t:.12e},{f:.12e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ControlMatrix;
    use crate::scaling::CurvePoint;
    use crate::sdp::SolveStatus;

    fn curve_from_pairs(pairs: &[(f64, f64)]) -> ABCurve {
        ABCurve {
            points: pairs
                .iter()
                .map(|&(b, a)| CurvePoint {
                    b_cap: b,
                    a,
                    b_achieved: b,
                    a_achieved: a,
                    h: ControlMatrix::zero(0),
                    status: SolveStatus::Optimal,
                })
                .collect(),
        }
    }

    fn small_cfg() -> IntegratorConfig {
        IntegratorConfig {
            t_max: 100.0,
            policy: StepPolicy::PerDecade { steps: 400 },
            decades: 4,
            samples_per_decade: 20,
        }
    }

    #[test]
    fn pure_quadratic_curve_integrates_exactly() {
        let curve = curve_from_pairs(&[(1.0, 0.0)]);
        let trace = integrate_bound(&curve, &small_cfg()).unwrap();
        for (t, f) in trace.times.iter().zip(&trace.values) {
            let exact = 4.0 * t * t;
            assert!((f - exact).abs() <= 1e-12 * exact, "t={t} f={f}");
        }
    }

    #[test]
    fn pure_linear_curve_integrates_exactly() {
        let curve = curve_from_pairs(&[(0.0, 0.5)]);
        let trace = integrate_bound(&curve, &small_cfg()).unwrap();
        for (t, f) in trace.times.iter().zip(&trace.values) {
            assert!((f - 2.0 * t).abs() <= 1e-12 * 2.0 * t);
        }
    }

    #[test]
    fn all_zero_curve_gives_identically_zero_bound() {
        let curve = curve_from_pairs(&[(0.0, 0.0)]);
        let trace = integrate_bound(&curve, &small_cfg()).unwrap();
        assert!(trace.values.iter().all(|&f| f == 0.0));
    }

    // Exact solution of dF = 4(a + b sqrt(F)) in inverse form:
    // t(F) = u/(2b) - a/(2b^2) ln(1 + b u / a), u = sqrt(F).
    fn exact_time_for(a: f64, b: f64, f: f64) -> f64 {
        let u = f.sqrt();
        u / (2.0 * b) - a / (2.0 * b * b) * (1.0 + b * u / a).ln()
    }

    #[test]
    fn single_mixed_point_march_is_valid_and_tight() {
        let (b, a) = (1.0, 1.0);
        let curve = curve_from_pairs(&[(b, a)]);
        let trace = integrate_bound(&curve, &small_cfg()).unwrap();
        for (t, f) in trace.times.iter().zip(&trace.values) {
            // Valid: march >= exact flow, i.e. the exact flow needs at least
            // t to reach the march's value. Tight: within 1% in time here.
            let t_exact = exact_time_for(a, b, *f);
            assert!(t_exact >= *t * (1.0 - 1e-12), "march below exact flow at t={t}");
            assert!(t_exact <= *t * 1.01, "march too loose at t={t}: {t_exact}");
        }
    }

    #[test]
    fn refining_steps_never_loosens() {
        // Trade-off curve of the same shape the dephasing model produces.
        let pairs: Vec<(f64, f64)> = (0..=10)
            .map(|i| {
                let b = i as f64 / 10.0;
                (b, 1.25 * (1.0 - b) * (1.0 - b))
            })
            .collect();
        let curve = curve_from_pairs(&pairs);
        let coarse = integrate_bound(&curve, &small_cfg()).unwrap();
        let mut cfg2 = small_cfg();
        cfg2.policy = StepPolicy::PerDecade { steps: 800 };
        let fine = integrate_bound(&curve, &cfg2).unwrap();
        assert_eq!(coarse.times, fine.times);
        for (f_coarse, f_fine) in coarse.values.iter().zip(&fine.values) {
            assert!(*f_fine <= f_coarse * (1.0 + 1e-14), "{f_fine} > {f_coarse}");
        }
    }

    #[test]
    fn grid_shape_and_bounds() {
        let cfg = small_cfg();
        let trace = integrate_bound(&curve_from_pairs(&[(1.0, 1.0)]), &cfg).unwrap();
        assert_eq!(trace.times.len(), 4 * 20 + 1);
        assert!((trace.times[0] - 1e-2).abs() < 1e-12);
        assert_eq!(*trace.times.last().unwrap(), 100.0);
        assert!(trace.times.windows(2).all(|w| w[0] < w[1]));
        assert!(trace.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn ql_analytic_bound_shape() {
        let c = ScalingConstants {
            a_minus: 0.0,
            b_minus: 0.0,
            a_plus: 1.25,
            b_plus: 1.0,
        };
        let t_c = 2.0 * 1.25 * std::f64::consts::LN_2;
        // Continuity at the crossover and the correct asymptotes.
        let left = analytic_ql_bound(&c, t_c - 1e-12);
        let right = analytic_ql_bound(&c, t_c + 1e-12);
        assert!((left - right).abs() < 1e-8);
        let t_small = 1e-6;
        assert!((analytic_ql_bound(&c, t_small) / (4.0 * t_small * t_small) - 1.0).abs() < 1e-4);
        let t_large = 1e8;
        assert!((analytic_ql_bound(&c, t_large) / (4.0 * 1.25 * t_large) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn asymptotes_per_class() {
        let c = ScalingConstants {
            a_minus: 0.2,
            b_minus: 0.3,
            a_plus: 1.45,
            b_plus: 1.02,
        };
        let (s, l) = asymptotes(&c, ScalingClass::LinearQuadratic).unwrap();
        assert_eq!((s.coefficient, s.power), (4.0 * 0.2, 1));
        assert_eq!((l.coefficient, l.power), (4.0 * 0.09, 2));
        let (s, l) = asymptotes(&c, ScalingClass::QuadraticLinear).unwrap();
        assert_eq!((s.coefficient, s.power), (4.0 * 1.02 * 1.02, 2));
        assert_eq!((l.coefficient, l.power), (4.0 * 1.45, 1));
        assert!(asymptotes(&c, ScalingClass::Uninformative).is_none());
    }

    #[test]
    fn slope_fit_recovers_power_laws() {
        let times: Vec<f64> = (0..50).map(|i| 10f64.powf(-2.0 + i as f64 * 0.1)).collect();
        let quad = BoundTrace {
            values: times.iter().map(|t| 3.0 * t * t).collect(),
            times: times.clone(),
        };
        let lin = BoundTrace {
            values: times.iter().map(|t| 0.7 * t).collect(),
            times: times.clone(),
        };
        assert!((slope_fit(&quad, 1e-2, 1e2).unwrap() - 2.0).abs() < 1e-10);
        assert!((slope_fit(&lin, 1e-2, 1e2).unwrap() - 1.0).abs() < 1e-10);
        assert!(slope_fit(&quad, 1e3, 1e4).is_none());
    }

    #[test]
    fn value_at_interpolates() {
        let trace = BoundTrace {
            times: vec![1.0, 10.0, 100.0],
            values: vec![4.0, 400.0, 40000.0],
        };
        // Exact at nodes, power-law exact between them.
        assert_eq!(trace.value_at(10.0), Some(400.0));
        let mid = trace.value_at(100f64.sqrt() * 10f64.sqrt()).unwrap();
        assert!((mid / 4000.0 - 1.0).abs() < 1e-12);
        assert!(trace.value_at(0.5).is_none());
    }

    #[test]
    fn rejects_bad_inputs() {
        let curve = curve_from_pairs(&[(1.0, 1.0)]);
        let mut cfg = small_cfg();
        cfg.t_max = -1.0;
        assert!(integrate_bound(&curve, &cfg).is_err());
        let mut cfg = small_cfg();
        cfg.policy = StepPolicy::Fixed { dt: 0.0 };
        assert!(integrate_bound(&curve, &cfg).is_err());
        let empty = ABCurve { points: vec![] };
        assert!(integrate_bound(&empty, &small_cfg()).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let trace = BoundTrace {
            times: vec![1.0, 2.0],
            values: vec![4.0, 16.0],
        };
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,F");
        assert_eq!(lines.len(), 3);
    }
}
