use magicflow::analytics::fit_decay;
use magicflow::defects::DefectSubspace;
use magicflow::exact::{
    clifford2_group, css_entropy_exact, upsilon_pauli_spectrum, upsilon_replica, StateVector,
};
use magicflow::qudit::C64;
use magicflow::Dim;
use proptest::prelude::*;

fn amplitudes(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_filter("nonzero", |v| {
            v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3)
        })
        .prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

fn state(d: u32, n: usize) -> impl Strategy<Value = StateVector> {
    amplitudes((d as usize).pow(n as u32))
        .prop_map(move |amps| StateVector::normalized(Dim::new(d).unwrap(), n, amps).unwrap())
}

fn css(s: &StateVector) -> f64 {
    css_entropy_exact(s, &DefectSubspace::all_ones(s.dim())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn entropy_adds_over_tensor_products(
        (x, y) in (2u32..=3, 1usize..=2, 1usize..=2).prop_flat_map(|(d, a, b)| (state(d, a), state(d, b)))
    ) {
        let joint = css(&x.tensor(&y).unwrap());
        prop_assert!((joint - css(&x) - css(&y)).abs() < 1e-9);
    }

    #[test]
    fn qubit_entropy_is_clifford_invariant(s in state(2, 3), word in prop::collection::vec((0usize..11520, 0usize..2), 1..6)) {
        let group = clifford2_group();
        let mut moved = s.clone();
        for (g, site) in word {
            moved.apply_two_site_gate(&group[g % group.len()], site).unwrap();
        }
        prop_assert!((css(&moved) - css(&s)).abs() < 1e-9);
    }

    #[test]
    fn replica_and_spectrum_routes_agree(s in (2u32..=3).prop_flat_map(|d| state(d, 2))) {
        let a = DefectSubspace::all_ones(s.dim());
        let lhs = upsilon_replica(&s, &a).unwrap();
        let rhs = upsilon_pauli_spectrum(&s).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn decay_fit_recovers_clean_exponentials(alpha in 0.1f64..2.0, a in 0.01f64..10.0) {
        let series: Vec<(f64, f64)> = (0..12).map(|t| (t as f64, a * (-alpha * t as f64).exp())).collect();
        let fit = fit_decay(&series, 2.0).unwrap();
        prop_assert!((fit.alpha - alpha).abs() < 1e-10);
        prop_assert!((fit.a / a - 1.0).abs() < 1e-9);
        prop_assert!(fit.residual < 1e-10);
    }
}
