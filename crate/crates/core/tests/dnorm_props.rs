use proptest::prelude::*;
use tailcond::{DNorm, NormKind};

fn kind() -> impl Strategy<Value = NormKind> {
    prop_oneof![
        Just(NormKind::Sum),
        Just(NormKind::Sup),
        (1.0..60.0f64).prop_map(NormKind::Logistic),
    ]
}

fn vector() -> impl Strategy<Value = Vec<f64>> {
    (1usize..7).prop_flat_map(|d| proptest::collection::vec(-1e3..1e3f64, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn between_sup_and_sum(k in kind(), x in vector()) {
        let n = DNorm::new(k, x.len()).unwrap();
        let v = n.eval(&x).unwrap();
        let sup = x.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let sum: f64 = x.iter().map(|a| a.abs()).sum();
        let slack = 1e-12 * sum.max(1.0);
        prop_assert!(sup <= v + slack && v <= sum + slack, "{:?} {:?}: {} not in [{}, {}]", k, x, v, sup, sum);
    }

    #[test]
    fn absolutely_homogeneous(k in kind(), x in vector(), c in -50.0..50.0f64) {
        let n = DNorm::new(k, x.len()).unwrap();
        let scaled: Vec<f64> = x.iter().map(|a| c * a).collect();
        let lhs = n.eval(&scaled).unwrap();
        let rhs = c.abs() * n.eval(&x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs.max(1e-300), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn logistic_power_transform(q in 1.0..8.0f64, p in 1.0..6.0f64, x in vector()) {
        let n = DNorm::logistic(q, x.len()).unwrap();
        let t = n.power_transform(p).unwrap();
        prop_assert_eq!(t.kind(), NormKind::Logistic(p * q));
        // ‖(|x_i|^p)‖^{1/p} computed literally agrees with Logistic(pq).
        let literal = n.eval_powered(&x, p).unwrap();
        let closed = t.eval(&x).unwrap();
        prop_assert!((literal - closed).abs() <= 1e-10 * closed.max(1e-300), "{} vs {}", literal, closed);
    }
}
