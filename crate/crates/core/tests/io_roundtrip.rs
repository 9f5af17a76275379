use proptest::prelude::*;

use wold_core::linalg::{c64, ToleranceConfig};
use wold_core::repn::{
    gen_random_unitary, gen_scaled_isometry, gen_twisted_fock_pair, parse_representation, CovariantRep, Representation,
};
use wold_core::wold::{wold_multi, wold_single};

fn reparse(rep: &Representation) -> Representation {
    let text = serde_json::to_string_pretty(&rep.to_json()).unwrap();
    parse_representation(&text).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn single_documents_round_trip_exactly(seed in 0u64..1000, n in 1usize..5, beta in 0.1f64..1.0) {
        let tol = ToleranceConfig::default();
        let base = CovariantRep::from_operator(gen_random_unitary(n, seed)).unwrap();
        let rep = gen_scaled_isometry(&base, beta, &tol).unwrap();
        let Representation::Single(back) = reparse(&Representation::Single(rep.clone())) else {
            panic!("mode changed");
        };
        prop_assert_eq!(back.atilde(), rep.atilde());
        let (a, b) = (wold_single(&rep, 4, &tol).unwrap(), wold_single(&back, 4, &tol).unwrap());
        prop_assert_eq!(a.k1.basis(), b.k1.basis());
        prop_assert_eq!(a.k2.basis(), b.k2.basis());
    }

    #[test]
    fn product_documents_round_trip_exactly(t in 0.0f64..std::f64::consts::TAU, big_n in 1usize..3) {
        let tol = ToleranceConfig::default();
        let psr = gen_twisted_fock_pair(c64(t.cos(), t.sin()), big_n, 1, &tol).unwrap();
        let Representation::Product(back) = reparse(&Representation::Product(psr.clone())) else {
            panic!("mode changed");
        };
        prop_assert_eq!(back.window_mask(), psr.window_mask());
        prop_assert_eq!(back.twist(0, 1), psr.twist(0, 1));
        for i in 0..2 {
            prop_assert_eq!(back.atilde(i), psr.atilde(i));
        }
        let (a, b) = (wold_multi(&psr, &[4, 4], &tol).unwrap(), wold_multi(&back, &[4, 4], &tol).unwrap());
        for (x, y) in a.summands.iter().zip(&b.summands) {
            prop_assert_eq!(x.frame.basis(), y.frame.basis());
        }
    }
}
