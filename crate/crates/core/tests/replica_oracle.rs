use magicflow::replica::{contract_annealed_series, ReplicaNetwork, TnParams};
use magicflow::Dim;
use num_bigint::BigInt;

mod support;

use support::oracle::{log_of, Oracle, Q};

fn check(d: Dim, n: usize, t_max: usize, chi: usize) {
    let oracle = Oracle::new(d);
    let net = ReplicaNetwork::new(d).unwrap();
    let series = contract_annealed_series(&net, n, t_max, TnParams::new(chi)).unwrap();
    for p in &series {
        let exact = oracle.upsilon(n, p.t);
        let diff = (p.log_upsilon - log_of(&exact)).abs();
        assert!(
            diff < 1e-8,
            "d={d} N={n} t={}: {} vs {}",
            p.t,
            p.log_upsilon,
            log_of(&exact)
        );
    }
}

#[test]
fn single_pair_values_are_exact() {
    let o2 = Oracle::new(Dim::new(2).unwrap());
    assert_eq!(o2.upsilon(2, 1), Q::new(BigInt::from(4), BigInt::from(7)));
    let o3 = Oracle::new(Dim::new(3).unwrap());
    assert_eq!(o3.upsilon(2, 1), Q::new(BigInt::from(3), BigInt::from(11)));
    // a single pair is already Haar random and stays put
    assert_eq!(o3.upsilon(2, 4), Q::new(BigInt::from(3), BigInt::from(11)));
}

#[test]
fn qubit_network_matches_exact_average() {
    check(Dim::new(2).unwrap(), 4, 3, 576);
}

#[test]
fn qutrit_network_matches_exact_average() {
    check(Dim::new(3).unwrap(), 4, 6, 36);
    check(Dim::new(3).unwrap(), 6, 4, 216);
}
