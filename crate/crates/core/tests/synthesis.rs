use eusim_core::models::{dipolar_target, group_preset, heisenberg_chain};
use eusim_core::reachability::{compose_schemes, solve_weights, weighted_conjugation};
use eusim_core::{DenseOperator, GroupClosure, OperatorSum, WeightAssignment};
use proptest::prelude::*;

/// `Σ_h Σ_g w_h w_g (U_h U_g)† a (U_h U_g)` by explicit double loop.
fn double_sum(
    a: &DenseOperator,
    first: &WeightAssignment,
    g_first: &GroupClosure,
    second: &WeightAssignment,
    g_second: &GroupClosure,
) -> DenseOperator {
    let mut acc = DenseOperator::zeros(a.n_qubits());
    for (h, wh) in first.nonzero() {
        for (g, wg) in second.nonzero() {
            let u = g_first.element(h) * g_second.element(g);
            acc = &acc + &a.conjugate(&u).unwrap().scale(wh * wg);
        }
    }
    acc
}

#[test]
fn decoupling_composed_with_dipolar_weights() {
    let (g_gl, _) = group_preset("g_gl", 2).unwrap();
    let (g1, _) = group_preset("g1", 2).unwrap();
    let (pauli2, _) = group_preset("pauli2", 2).unwrap();
    let h = heisenberg_chain(2, 1.0).unwrap();
    let dd = WeightAssignment::uniform(&g_gl);
    let sim = solve_weights(&h, &dipolar_target(1.0), &g1).unwrap();
    let w = compose_schemes(&dd, &g_gl, &sim, &g1, &pauli2).unwrap();
    assert_eq!(w.weights().len(), 16);
    assert!((w.total() - 2.0).abs() < 1e-12);

    let hd = h.to_dense().unwrap();
    let oracle = double_sum(&hd, &dd, &g_gl, &sim, &g1);
    let got = weighted_conjugation(&hd, &w, &pauli2).unwrap();
    assert!((&got - &oracle).frobenius_norm() < 1e-12);
    // the decoupling stage commutes with the chain, so the target survives
    assert!((&got - &dipolar_target(1.0).to_dense().unwrap()).frobenius_norm() < 1e-12);
}

#[test]
fn weights_are_scale_invariant() {
    let (g1, _) = group_preset("g1", 2).unwrap();
    let h = heisenberg_chain(2, 1.0).unwrap();
    let base = solve_weights(&h, &dipolar_target(1.0), &g1).unwrap();
    for c in [0.01, 3.0, 250.0] {
        let scaled = solve_weights(&(h.clone() * c), &(dipolar_target(1.0) * c), &g1).unwrap();
        for (a, b) in base.weights().iter().zip(scaled.weights()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

fn nonneg_weights(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..2.0], len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn composition_matches_double_conjugation(
        a in nonneg_weights(4),
        b in nonneg_weights(4),
        coeffs in proptest::collection::vec(-1.0f64..1.0, 3),
    ) {
        let (g_gl, _) = group_preset("g_gl", 2).unwrap();
        let (g1, _) = group_preset("g1", 2).unwrap();
        let (pauli2, _) = group_preset("pauli2", 2).unwrap();
        let first = WeightAssignment::new(&g_gl, a).unwrap();
        let second = WeightAssignment::new(&g1, b).unwrap();
        let w = compose_schemes(&first, &g_gl, &second, &g1, &pauli2).unwrap();
        prop_assert!((w.total() - first.total() * second.total()).abs() < 1e-12);
        let h = eusim_core::models::xyz_target(coeffs[0], coeffs[1], coeffs[2]) + heisenberg_chain(2, 0.5).unwrap();
        let hd = h.to_dense().unwrap();
        let got = weighted_conjugation(&hd, &w, &pauli2).unwrap();
        let oracle = double_sum(&hd, &first, &g_gl, &second, &g1);
        prop_assert!((&got - &oracle).frobenius_norm() < 1e-12);
    }

    #[test]
    fn solved_weights_reproduce_reachable_targets(
        planted in nonneg_weights(8),
        coeffs in proptest::collection::vec(0.2f64..1.5, 3),
    ) {
        prop_assume!(planted.iter().any(|&w| w > 0.0));
        let (g, _) = group_preset("g_dephasing", 2).unwrap();
        let h: OperatorSum = eusim_core::models::xyz_target(coeffs[0], coeffs[1], coeffs[2]);
        let hd = h.to_dense().unwrap();
        let plant = WeightAssignment::new(&g, planted).unwrap();
        let target = weighted_conjugation(&hd, &plant, &g).unwrap().pauli_coefficients().unwrap();
        let w = solve_weights(&h, &target, &g).unwrap();
        let got = weighted_conjugation(&hd, &w, &g).unwrap();
        prop_assert!((&got - &target.to_dense().unwrap()).frobenius_norm() < 1e-8);
        prop_assert!(w.total() <= plant.total() + 1e-9);
    }
}
