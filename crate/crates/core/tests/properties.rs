//! Randomised structural invariants of the operator algebra: Hermiticity,
//! positivity, affinity in the control, layout round-trips, and gauge
//! freedom of the generator.

use num_complex::Complex64;
use proptest::prelude::*;
use qfi_bounds::algebra::{
    build_a_op, build_b_op, build_m, gauge_transform, op_norm, ControlMatrix, GaugeParams,
};
use qfi_bounds::mat::{hermiticity_defect, max_abs, min_eigenvalue};
use qfi_bounds::model::{
    builtin_model, liouvillian_matrix, model_from_json, model_to_json, validate_model,
    BuiltinModelId,
};
use qfi_bounds::{CMat, CVec, MarkovianModel};

fn complex_entry() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn cmat(d: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(complex_entry(), d * d)
        .prop_map(move |v| CMat::from_fn(d, d, |i, j| v[i * d + j]))
}

fn hermitian(d: usize) -> impl Strategy<Value = CMat> {
    cmat(d).prop_map(|a| (&a + a.adjoint()).map(|z| 0.5 * z))
}

fn model(d: usize, n: usize) -> impl Strategy<Value = MarkovianModel> {
    (
        hermitian(d),
        hermitian(d),
        prop::collection::vec(cmat(d), n),
        prop::collection::vec(cmat(d), n),
    )
        .prop_map(|(h, hdot, jumps, jump_dots)| MarkovianModel {
            hamiltonian: h,
            hamiltonian_dot: hdot,
            jumps,
            jump_dots,
            label: "prop".into(),
        })
}

fn params(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, ControlMatrix::param_len(n))
}

/// Random model sizes used throughout: qubit/qutrit, one or two jumps.
fn sized_case() -> impl Strategy<Value = (MarkovianModel, Vec<f64>)> {
    (2usize..4, 1usize..3)
        .prop_flat_map(|(d, n)| (model(d, n), params(n)))
}

fn gauge(n: usize) -> impl Strategy<Value = GaugeParams> {
    (cmat(n), prop::collection::vec(complex_entry(), n)).prop_map(|(a, v)| GaugeParams {
        u: a.qr().q(),
        v: CVec::from_fn(v.len(), |k, _| v[k]),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn control_param_layout_round_trips((m, p) in sized_case()) {
        let n = m.n_jumps();
        let h = ControlMatrix::from_params(n, &p);
        // Both directions are exact: the layout only copies components.
        let p2 = h.to_params();
        prop_assert_eq!(p2.as_slice(), &p[..]);
        let h2 = ControlMatrix::from_params(n, p2.as_slice());
        prop_assert_eq!(max_abs(&(h.assemble() - h2.assemble())), 0.0);
    }

    #[test]
    fn b_operator_is_hermitian((m, p) in sized_case()) {
        let h = ControlMatrix::from_params(m.n_jumps(), &p);
        let b = build_b_op(&m, &h).unwrap();
        prop_assert!(hermiticity_defect(&b) <= 1e-12 * (1.0 + max_abs(&b)));
    }

    #[test]
    fn a_operator_is_psd_and_matches_m((m, p) in sized_case()) {
        let h = ControlMatrix::from_params(m.n_jumps(), &p);
        let a = build_a_op(&m, &h).unwrap();
        let stacked = build_m(&m, &h).unwrap();
        prop_assert!(min_eigenvalue(&a) >= -1e-10 * (1.0 + max_abs(&a)));
        let mn = op_norm(&stacked);
        prop_assert!((op_norm(&a) - mn * mn).abs() <= 1e-10 * (1.0 + mn * mn));
    }

    #[test]
    fn operators_are_affine_in_the_control(
        (m, p1) in sized_case(),
        q in prop::collection::vec(-1.0..1.0f64, 16),
    ) {
        let n = m.n_jumps();
        let plen = ControlMatrix::param_len(n);
        let p2: Vec<f64> = q.iter().cycle().take(plen).copied().collect();
        let sum: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a + b).collect();
        let (h1, h2) = (ControlMatrix::from_params(n, &p1), ControlMatrix::from_params(n, &p2));
        let (h12, h0) = (ControlMatrix::from_params(n, &sum), ControlMatrix::zero(n));

        // Second differences of an affine map vanish.
        let b_gap = build_b_op(&m, &h12).unwrap() + build_b_op(&m, &h0).unwrap()
            - build_b_op(&m, &h1).unwrap()
            - build_b_op(&m, &h2).unwrap();
        prop_assert!(max_abs(&b_gap) <= 1e-12);
        let m_gap = build_m(&m, &h12).unwrap() + build_m(&m, &h0).unwrap()
            - build_m(&m, &h1).unwrap()
            - build_m(&m, &h2).unwrap();
        prop_assert!(max_abs(&m_gap) <= 1e-12);
    }

    #[test]
    fn model_json_round_trips((m, _) in sized_case()) {
        let back = model_from_json(&model_to_json(&m)).unwrap();
        prop_assert_eq!(max_abs(&(&m.hamiltonian - &back.hamiltonian)), 0.0);
        prop_assert_eq!(max_abs(&(&m.hamiltonian_dot - &back.hamiltonian_dot)), 0.0);
        for (a, b) in m.jumps.iter().zip(&back.jumps) {
            prop_assert_eq!(max_abs(&(a - b)), 0.0);
        }
        for (a, b) in m.jump_dots.iter().zip(&back.jump_dots) {
            prop_assert_eq!(max_abs(&(a - b)), 0.0);
        }
        prop_assert_eq!(&m.label, &back.label);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauge_transform_preserves_the_generator(
        (m, _) in sized_case(),
        gs in prop::collection::vec(gauge(2), 1),
    ) {
        let n = m.n_jumps();
        let g = GaugeParams {
            u: gs[0].u.view((0, 0), (n, n)).into_owned(),
            v: gs[0].v.rows(0, n).into_owned(),
        };
        // Truncating a unitary is not unitary for n = 1; rebuild the phase.
        let g = if n == 1 {
            let z = g.u[(0, 0)];
            GaugeParams {
                u: CMat::from_element(1, 1, z / z.norm().max(f64::MIN_POSITIVE)),
                v: g.v,
            }
        } else {
            g
        };
        let gm = gauge_transform(&m, &g).unwrap();
        let li = liouvillian_matrix(&m).unwrap();
        let li_g = liouvillian_matrix(&gm).unwrap();
        prop_assert!(max_abs(&(&li - &li_g)) <= 1e-9 * (1.0 + max_abs(&li)));
    }

    #[test]
    fn builtin_models_validate(
        id in prop::sample::select(vec![
            BuiltinModelId::ParallelDephasing,
            BuiltinModelId::RotatedDephasing,
            BuiltinModelId::StrengthDephasing,
            BuiltinModelId::DirectionDephasing,
        ]),
        omega in 0.1..2.0f64,
        gamma in 0.1..2.0f64,
    ) {
        let m = builtin_model(id, omega, gamma).unwrap();
        let report = validate_model(&m, 1e-9);
        prop_assert!(report.passed(), "violations: {:?}", report.violations);
    }
}
